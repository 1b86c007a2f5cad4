//! Scale mixtures of the fixed-size expansion over a random sample size.
//!
//! Gamma mixing of `Phi(x sqrt(y))` gives a Student law with `2r` degrees of
//! freedom, inverse-exponential mixing gives a Laplace law. This module holds
//! the closed-form second-order approximations built on those limits and a
//! quadrature evaluation of the mixture integral itself.

use crate::densities::ParentDensity;
use crate::error::{Error, Result};
use crate::median::{m_star, median_centered_fixed, MedianExpansionTerms, Normalizer};
use crate::quadrature::{gk15, integrate, integrate_to_infinity};
use crate::size::{MixingLaw, SizeKind, SizeModel};
use crate::special::{norm_centered, norm_pdf, norm_quantile, student_centered, student_pdf, student_quantile};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Order {
    #[serde(rename = "limit")]
    LimitOnly,
    #[serde(rename = "first")]
    FirstOrder,
    #[serde(rename = "second")]
    SecondOrder,
}

impl Order {
    pub const ALL: [Order; 3] = [Order::LimitOnly, Order::FirstOrder, Order::SecondOrder];

    pub fn level(self) -> u8 {
        match self {
            Order::LimitOnly => 0,
            Order::FirstOrder => 1,
            Order::SecondOrder => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Order::LimitOnly => "limit",
            Order::FirstOrder => "first",
            Order::SecondOrder => "second",
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Highest expansion order a size law with rate exponent `b` supports.
pub fn admissible_order(b: f64) -> Order {
    if b > 1.0 {
        Order::SecondOrder
    } else if b > 0.5 {
        Order::FirstOrder
    } else {
        Order::LimitOnly
    }
}

/// CDF and density of Student's t with `2r` degrees of freedom.
pub fn student_limit(x: f64, r: f64) -> (f64, f64) {
    (0.5 + student_centered(x, 2.0 * r), student_pdf(x, 2.0 * r))
}

fn laplace_centered(x: f64, s: f64) -> f64 {
    let v = -0.5 * (-(2.0 * s).sqrt() * x.abs()).exp_m1();
    v.copysign(x)
}

/// CDF and density of the Laplace law with density `sqrt(s/2) exp(-sqrt(2s)|x|)`.
pub fn laplace_limit(x: f64, s: f64) -> (f64, f64) {
    let k = (2.0 * s).sqrt();
    let pdf = 0.5 * k * (-k * x.abs()).exp();
    let cdf = if x < 0.0 { 0.5 * (k * x).exp() } else { 0.5 + laplace_centered(x, s) };
    (cdf, pdf)
}

fn laplace_quantile(p: f64, s: f64) -> f64 {
    let k = (2.0 * s).sqrt();
    if p == 0.5 {
        0.0
    } else if p < 0.5 {
        (2.0 * p).ln() / k
    } else {
        -(2.0 * (1.0 - p)).ln() / k
    }
}

/// Which limit law and scale a [`RandomMedianApprox`] expands around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Negative binomial sizes, Student limit.
    Student { r: f64, n: u64 },
    /// Pareto-max sizes, Laplace limit.
    Laplace { s: f64, n: u64 },
    /// Non-random size `m`, normal limit.
    Fixed { m: u64, normalizer: Normalizer },
}

/// `F(x) = G(x) + g(x) (a1(x) / sqrt(k) + a2(x) / k)` for one of the three
/// sample-size regimes. The indicator cut-offs in `r` are folded into `a1`
/// and `a2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomMedianApprox {
    pub family: Family,
    pub terms: MedianExpansionTerms,
}

impl RandomMedianApprox {
    pub fn student(r: f64, n: u64, parent: &ParentDensity) -> Result<Self> {
        SizeModel::neg_binomial(r, n)?;
        Ok(Self { family: Family::Student { r, n }, terms: MedianExpansionTerms::new(parent) })
    }

    pub fn laplace(s: f64, n: u64, parent: &ParentDensity) -> Result<Self> {
        SizeModel::pareto_max(s, n)?;
        Ok(Self { family: Family::Laplace { s, n }, terms: MedianExpansionTerms::new(parent) })
    }

    pub fn fixed(m: u64, normalizer: Normalizer, parent: &ParentDensity) -> Result<Self> {
        if m < 2 {
            return Err(Error::domain(format!("fixed sample size must be at least 2, got {m}")));
        }
        Ok(Self { family: Family::Fixed { m, normalizer }, terms: MedianExpansionTerms::new(parent) })
    }

    pub fn for_model(model: &SizeModel, parent: &ParentDensity) -> Result<Self> {
        match model.kind {
            SizeKind::NegBinomial { r } => Self::student(r, model.n, parent),
            SizeKind::ParetoMax { s } => Self::laplace(s, model.n, parent),
        }
    }

    /// The scale `k` the corrections are divided by.
    pub fn scale(&self) -> f64 {
        match self.family {
            Family::Student { r, n } => r * (n - 1) as f64 + 1.0,
            Family::Laplace { n, .. } => n as f64,
            Family::Fixed { m, normalizer: Normalizer::MStar } => m_star(m) as f64,
            Family::Fixed { m, normalizer: Normalizer::M } => m as f64,
        }
    }

    /// `G(x) - 1/2`.
    pub fn limit_centered(&self, x: f64) -> f64 {
        match self.family {
            Family::Student { r, .. } => student_centered(x, 2.0 * r),
            Family::Laplace { s, .. } => laplace_centered(x, s),
            Family::Fixed { .. } => norm_centered(x),
        }
    }

    pub fn limit_cdf(&self, x: f64) -> f64 {
        0.5 + self.limit_centered(x)
    }

    pub fn limit_pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Student { r, .. } => student_pdf(x, 2.0 * r),
            Family::Laplace { s, .. } => laplace_limit(x, s).1,
            Family::Fixed { .. } => norm_pdf(x),
        }
    }

    /// `g'(x)`; at the Laplace kink the symmetric value 0 is returned.
    pub fn limit_pdf_deriv(&self, x: f64) -> f64 {
        let g = self.limit_pdf(x);
        match self.family {
            Family::Student { r, .. } => -(2.0 * r + 1.0) * x / (2.0 * r + x * x) * g,
            Family::Laplace { s, .. } => {
                if x == 0.0 {
                    0.0
                } else {
                    -(2.0 * s).sqrt() * x.signum() * g
                }
            }
            Family::Fixed { .. } => -x * g,
        }
    }

    pub fn limit_quantile(&self, p: f64) -> f64 {
        match self.family {
            Family::Student { r, .. } => student_quantile(p, 2.0 * r),
            Family::Laplace { s, .. } => laplace_quantile(p, s),
            Family::Fixed { .. } => norm_quantile(p),
        }
    }

    fn first_on(&self) -> bool {
        match self.family {
            Family::Student { r, .. } => r > 0.5,
            _ => true,
        }
    }

    fn second_on(&self) -> bool {
        match self.family {
            Family::Student { r, .. } => r > 1.0,
            _ => true,
        }
    }

    pub fn a1(&self, x: f64) -> f64 {
        if self.first_on() {
            self.terms.q1(x)
        } else {
            0.0
        }
    }

    pub fn a1_deriv(&self, x: f64) -> f64 {
        if self.first_on() {
            2.0 * self.terms.c1 * x.abs()
        } else {
            0.0
        }
    }

    pub fn a2(&self, x: f64) -> f64 {
        if !self.second_on() {
            return 0.0;
        }
        let t = &self.terms;
        let x2 = x * x;
        match self.family {
            Family::Student { r, .. } => {
                let tr = 2.0 * r;
                0.25 * x
                    * (((5.0 - r) * x2 + 5.0 * r + 2.0) / (tr - 1.0) + t.c2 * x2
                        - t.c3 * x2 * x2 * (tr + 1.0) / (tr + x2))
            }
            Family::Laplace { s, .. } => {
                let k = (2.0 * s).sqrt();
                (4.0 - s) * x * (1.0 + k * x.abs()) / (8.0 * s) + 0.25 * x * x2 * t.c2
                    - 0.25 * t.c3 * x * x2 * x.abs() * k
            }
            Family::Fixed { .. } => t.q2(x),
        }
    }

    /// `F(x) - 1/2` truncated at `order`; exactly odd in `x`.
    pub fn centered(&self, x: f64, order: Order) -> f64 {
        if let Family::Fixed { m, normalizer } = self.family {
            return median_centered_fixed(x, m, &self.terms, normalizer, order.level());
        }
        let k = self.scale();
        let mut corr = 0.0;
        if order.level() >= 1 {
            corr += self.a1(x) / k.sqrt();
        }
        if order.level() >= 2 {
            corr += self.a2(x) / k;
        }
        self.limit_centered(x) + self.limit_pdf(x) * corr
    }

    pub fn cdf(&self, x: f64, order: Order) -> f64 {
        0.5 + self.centered(x, order)
    }
}

pub fn student_approx(x: f64, r: f64, n: u64, parent: &ParentDensity, order: Order) -> Result<f64> {
    Ok(RandomMedianApprox::student(r, n, parent)?.cdf(x, order))
}

/// Second-order approximation for negative binomial sizes around `S_{2r}`.
pub fn student_second_order(x: f64, r: f64, n: u64, parent: &ParentDensity) -> Result<f64> {
    student_approx(x, r, n, parent, Order::SecondOrder)
}

pub fn laplace_approx(x: f64, s: f64, n: u64, parent: &ParentDensity, order: Order) -> Result<f64> {
    Ok(RandomMedianApprox::laplace(s, n, parent)?.cdf(x, order))
}

/// Second-order approximation for Pareto-max sizes around the Laplace limit.
pub fn laplace_second_order(x: f64, s: f64, n: u64, parent: &ParentDensity) -> Result<f64> {
    laplace_approx(x, s, n, parent, Order::SecondOrder)
}

const ABS_TOL: f64 = 1e-12;
const MAX_INTERVALS: usize = 4000;
const MAX_PANELS: u64 = 200_000;
const TARGET: f64 = 1e-9;

/// Quadrature of the mixture `int (Phi(x sqrt y) + f1/sqrt(g y) + f2/(g y)) d(H + h2/n)`.
///
/// The requested truncation is capped at what the size law's rate allows, the
/// same way the closed forms switch terms off. Cross terms between `f1, f2`
/// and `h2/n` are of smaller order and left out.
pub fn mixture_cdf_numeric<M: MixingLaw + ?Sized>(
    x: f64,
    law: &M,
    parent: &ParentDensity,
    truncation: Order,
) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("x must be finite, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.5);
    }
    let order = truncation.min(admissible_order(law.rate()));
    let terms = MedianExpansionTerms::new(parent);
    let g = law.g_n();
    let level = order.level();
    let kernel = |y: f64| {
        let h = law.limit_pdf(y);
        if h == 0.0 {
            return 0.0;
        }
        let z = x * y.sqrt();
        let mut v = norm_centered(z);
        if level >= 1 {
            let phi = norm_pdf(z);
            v += phi * terms.q1(z) / (g * y).sqrt();
            if level >= 2 {
                v += phi * terms.q2(z) / (g * y);
            }
        }
        v * h
    };
    let head = integrate(kernel, 0.0, 1.0, ABS_TOL, 0.0, MAX_INTERVALS)?;
    let tail = integrate_to_infinity(kernel, 1.0, ABS_TOL, 0.0, MAX_INTERVALS)?;
    let mut value = head.value + tail.value;
    let mut error = head.error + tail.error;
    if level >= 2 {
        let (v, e) = h2_term(x, law)?;
        let n = law.n() as f64;
        value += v / n;
        error += e / n;
    }
    if error > TARGET {
        return Err(Error::Numeric { message: format!("mixture quadrature at x = {x} missed its target"), achieved: error });
    }
    Ok(0.5 + value)
}

/// `int Phi(x sqrt y) dh2(y)` after integrating by parts: `-int h2(y) K'(y) dy`
/// with `K(y) = Phi(x sqrt y) - 1/2`. Returns `(value, error estimate)`.
fn h2_term<M: MixingLaw + ?Sized>(x: f64, law: &M) -> Result<(f64, f64)> {
    let dk = |y: f64| {
        if y <= 0.0 {
            0.0
        } else {
            let sy = y.sqrt();
            x * norm_pdf(x * sy) / (2.0 * sy)
        }
    };
    let smooth = |y: f64| law.h2_parts(y).0 * dk(y);
    let a = integrate(smooth, 0.0, 1.0, ABS_TOL, 0.0, MAX_INTERVALS)?;
    let b = integrate_to_infinity(smooth, 1.0, ABS_TOL, 0.0, MAX_INTERVALS)?;
    let (saw_v, saw_e) = sawtooth_integral(|y: f64| law.h2_parts(y).1 * dk(y), law.lattice())?;
    Ok((-(a.value + b.value + saw_v), a.error + b.error + saw_e))
}

/// `int_0^inf F(y) q1(L y) dy` for a smooth, decaying `F`.
///
/// Exact panels between the jumps of `q1` out to a cutoff `Y`, then the
/// Euler-Maclaurin tail `F(Y) / (12 L)` whose remainder is bounded by
/// `max|B3|/6 / L^2 * int |F''|`.
pub fn sawtooth_integral<F: Fn(f64) -> f64>(f: F, lattice: f64) -> Result<(f64, f64)> {
    let l = lattice;
    let mut y_env = 2.0f64;
    while f(y_env).abs() * y_env > 1e-18 && y_env < 1e15 {
        y_env *= 2.0;
    }
    let panels = ((y_env * l).ceil() as u64).clamp(1, MAX_PANELS);
    let mut value = 0.0;
    let mut error = 0.0;
    for k in 0..panels {
        let kf = k as f64;
        let mut panel = |t: f64| f((kf + t) / l) * (0.5 - t) / l;
        let (v, e) = gk15(&mut panel, 0.0, 1.0);
        if e <= 1e-16 || (e <= 1e-13 * v.abs()) {
            value += v;
            error += e;
        } else {
            let q = integrate(panel, 0.0, 1.0, 1e-16, 1e-12, MAX_INTERVALS)?;
            value += q.value;
            error += q.error;
        }
    }
    let y_cut = panels as f64 / l;
    let fy = f(y_cut);
    if fy != 0.0 {
        value += fy / (12.0 * l);
        // total variation of F' beyond the cutoff, on a geometric grid
        let d = |y: f64| {
            let h = 1e-5 * y;
            (f(y + h) - f(y - h)) / (2.0 * h)
        };
        let mut tv = 0.0;
        let mut y = y_cut;
        let mut prev = d(y);
        for _ in 0..800 {
            y *= 1.05;
            let cur = d(y);
            tv += (cur - prev).abs();
            prev = cur;
        }
        tv += prev.abs();
        error += 0.0081 * tv / (l * l);
    }
    Ok((value, error))
}
