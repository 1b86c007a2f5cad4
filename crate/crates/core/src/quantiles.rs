//! Cornish-Fisher inversion of the second-order expansions, and a bracketing
//! inverter used to check it.

use crate::densities::ParentDensity;
use crate::error::{require_probability, Error, Result};
use crate::median::{MedianExpansionTerms, Normalizer};
use crate::mixture::{Family, RandomMedianApprox};
use serde::{Deserialize, Serialize};

/// Anything of the form `G(x) + g(x) (a1(x) / sqrt(k) + a2(x) / k)`.
///
/// The derivative hooks return `None` when no closed form is known; the
/// transfer then falls back to central differences.
pub trait CornishFisherInput {
    fn limit_cdf(&self, u: f64) -> f64;
    fn limit_pdf(&self, u: f64) -> f64;
    fn limit_pdf_deriv(&self, _u: f64) -> Option<f64> {
        None
    }
    fn a1(&self, u: f64) -> f64;
    fn a1_deriv(&self, _u: f64) -> Option<f64> {
        None
    }
    fn a2(&self, u: f64) -> f64;
    fn scale(&self) -> f64;
}

impl CornishFisherInput for RandomMedianApprox {
    fn limit_cdf(&self, u: f64) -> f64 {
        RandomMedianApprox::limit_cdf(self, u)
    }
    fn limit_pdf(&self, u: f64) -> f64 {
        RandomMedianApprox::limit_pdf(self, u)
    }
    fn limit_pdf_deriv(&self, u: f64) -> Option<f64> {
        Some(RandomMedianApprox::limit_pdf_deriv(self, u))
    }
    fn a1(&self, u: f64) -> f64 {
        RandomMedianApprox::a1(self, u)
    }
    fn a1_deriv(&self, u: f64) -> Option<f64> {
        Some(RandomMedianApprox::a1_deriv(self, u))
    }
    fn a2(&self, u: f64) -> f64 {
        RandomMedianApprox::a2(self, u)
    }
    fn scale(&self) -> f64 {
        RandomMedianApprox::scale(self)
    }
}

pub const FD_STEP: f64 = 1e-5;
const DENSITY_FLOOR: f64 = 1e-300;

fn central_diff<F: Fn(f64) -> f64>(f: F, u: f64) -> f64 {
    (f(u + FD_STEP) - f(u - FD_STEP)) / (2.0 * FD_STEP)
}

/// Quantile coefficients `(b1, b2)` so that `x = u + b1/sqrt(k) + b2/k`
/// inverts the expansion at the limit quantile `u`.
pub fn cf_transfer<I: CornishFisherInput + ?Sized>(u: f64, input: &I) -> Result<(f64, f64)> {
    let g = input.limit_pdf(u);
    if g.is_nan() || g <= DENSITY_FLOOR {
        return Err(Error::DegenerateDensity { u, value: g });
    }
    let a1 = input.a1(u);
    let b1 = -a1;
    let gp = input.limit_pdf_deriv(u).unwrap_or_else(|| central_diff(|v| input.limit_pdf(v), u));
    let a1p = input.a1_deriv(u).unwrap_or_else(|| central_diff(|v| input.a1(v), u));
    let b2 = gp / (2.0 * g) * a1 * a1 + a1p * a1 - input.a2(u);
    Ok((b1, b2))
}

/// Closed-form `b2` for negative binomial sizes; valid for `r > 1`.
pub fn b2_nb(u: f64, r: f64, t: &MedianExpansionTerms) -> f64 {
    let u3 = u * u * u;
    t.c3 * u3 - ((5.0 - r) * u3 + (5.0 * r + 2.0) * u) / (4.0 * (2.0 * r - 1.0)) - 0.25 * t.c2 * u3
}

/// Closed-form `b2` for Pareto-max sizes.
pub fn b2_pareto(u: f64, s: f64, t: &MedianExpansionTerms) -> f64 {
    let u3 = u * u * u;
    t.c3 * u3 - (4.0 - s) * u * (1.0 + (2.0 * s).sqrt() * u.abs()) / (8.0 * s) - 0.25 * t.c2 * u3
}

/// Closed-form `b2` for a fixed sample size.
pub fn b2_fixed(u: f64, t: &MedianExpansionTerms) -> f64 {
    let u3 = u * u * u;
    t.c3 * u3 - 0.75 * u - 0.25 * t.c2 * u3
}

/// `b2` from the closed forms, with the `r` indicators applied.
pub fn b2_closed(u: f64, approx: &RandomMedianApprox) -> f64 {
    let t = &approx.terms;
    match approx.family {
        Family::Student { r, .. } if r > 1.0 => b2_nb(u, r, t),
        Family::Student { .. } => 0.0,
        Family::Laplace { s, .. } => b2_pareto(u, s, t),
        Family::Fixed { .. } => b2_fixed(u, t),
    }
}

/// Second-order Cornish-Fisher quantile. Returns `(u, x)` with `u` the limit
/// quantile. Computed for the lower tail and reflected, so that
/// `x(1 - alpha) = -x(alpha)` holds exactly.
pub fn cf_quantile_pair(alpha: f64, approx: &RandomMedianApprox) -> Result<(f64, f64)> {
    require_probability(alpha)?;
    if alpha == 0.5 {
        return Ok((0.0, 0.0));
    }
    // 1 - alpha is exact for alpha >= 1/2, so both members of a pair
    // (alpha, fl(1 - alpha)) land on the same lower-tail p
    let p = if alpha < 0.5 { 1.0 - (1.0 - alpha) } else { 1.0 - alpha };
    let u = approx.limit_quantile(p);
    let k = approx.scale();
    let x = u - approx.a1(u) / k.sqrt() + b2_closed(u, approx) / k;
    if alpha > 0.5 {
        Ok((-u, -x))
    } else {
        Ok((u, x))
    }
}

pub fn cf_quantile(alpha: f64, approx: &RandomMedianApprox) -> Result<f64> {
    Ok(cf_quantile_pair(alpha, approx)?.1)
}

pub fn cf_quantile_nb(alpha: f64, r: f64, n: u64, parent: &ParentDensity) -> Result<f64> {
    cf_quantile(alpha, &RandomMedianApprox::student(r, n, parent)?)
}

pub fn cf_quantile_pareto(alpha: f64, s: f64, n: u64, parent: &ParentDensity) -> Result<f64> {
    cf_quantile(alpha, &RandomMedianApprox::laplace(s, n, parent)?)
}

/// Fixed-size quantile with corrections over `m*`, matching the default
/// normalization of the fixed-size CDF.
pub fn cf_quantile_fixed(alpha: f64, m: u64, parent: &ParentDensity) -> Result<f64> {
    cf_quantile_fixed_with(alpha, m, parent, Normalizer::MStar)
}

pub fn cf_quantile_fixed_with(alpha: f64, m: u64, parent: &ParentDensity, normalizer: Normalizer) -> Result<f64> {
    cf_quantile(alpha, &RandomMedianApprox::fixed(m, normalizer, parent)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMode {
    /// Bisect the function as given; needs `F(lo) <= alpha <= F(hi)`.
    Raw,
    /// Clamp to [0, 1] and take a running maximum before bisecting.
    Monotone,
}

const GRID: usize = 2000;
const TOL: f64 = 1e-10;

/// Solve `F(x) = alpha` on `[lo, hi]` by bisection.
pub fn invert_cdf<F: Fn(f64) -> f64>(f: F, alpha: f64, lo: f64, hi: f64, mode: InversionMode) -> Result<f64> {
    require_probability(alpha)?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    let bracket_err = |f_lo: f64, f_hi: f64| Error::Bracket { lo, hi, alpha, f_lo, f_hi };
    match mode {
        InversionMode::Raw => {
            let (f_lo, f_hi) = (f(lo), f(hi));
            if !(f_lo <= alpha && alpha <= f_hi) {
                return Err(bracket_err(f_lo, f_hi));
            }
            Ok(bisect(|x| f(x) >= alpha, lo, hi))
        }
        InversionMode::Monotone => {
            let fc = |x: f64| f(x).clamp(0.0, 1.0);
            let (f_lo, f_hi) = (fc(lo), fc(hi));
            if f_lo > alpha {
                return Err(bracket_err(f_lo, f_hi));
            }
            // first grid cell where the running maximum reaches alpha
            let h = (hi - lo) / GRID as f64;
            let mut run = f_lo;
            let mut prev = lo;
            for i in 1..=GRID {
                let x = if i == GRID { hi } else { lo + h * i as f64 };
                let v = fc(x);
                if v.max(run) >= alpha {
                    let floor = run;
                    return Ok(bisect(|t| fc(t).max(floor) >= alpha, prev, x));
                }
                run = run.max(v);
                prev = x;
            }
            Err(bracket_err(f_lo, run))
        }
    }
}

/// Smallest point (to rounding) where `above` switches to true, given that it
/// is false at `lo` or `lo` is the answer, and true at `hi`.
fn bisect<P: Fn(f64) -> bool>(above: P, mut lo: f64, mut hi: f64) -> f64 {
    if above(lo) {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= TOL * 1e-3 * (1.0 + mid.abs()) {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
