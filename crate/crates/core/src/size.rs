//! Random sample sizes: the shifted negative binomial and the maximum of `n`
//! discrete Pareto variables, with their limit laws and second-order terms.

use crate::densities::open01;
use crate::error::{require_positive, Error, Result};
use crate::quadrature::integrate_to_infinity;
use crate::special::{gamma_cdf, gamma_pdf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma, ln_gamma};

/// The sawtooth `1/2 - (y - floor(y))`.
pub fn q1(y: f64) -> f64 {
    0.5 - (y - y.floor())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeKind {
    NegBinomial { r: f64 },
    ParetoMax { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeModel {
    pub kind: SizeKind,
    pub n: u64,
    /// Normalizer: `r (n - 1) + 1` or `n`.
    pub g_n: f64,
    /// Rate exponent of the second-order size expansion.
    pub b: f64,
}

/// A sample-size law `N_n` with `P(N_n <= g_n y) ~ H(y) + h2(y) / n`.
///
/// `h2` is split as `smooth(y) + saw(y) * q1(L y)` with lattice scale `L`, so
/// quadrature code can treat the jumps of `q1` separately.
pub trait MixingLaw {
    fn n(&self) -> u64;
    fn g_n(&self) -> f64;
    fn rate(&self) -> f64;
    fn limit_cdf(&self, y: f64) -> f64;
    fn limit_pdf(&self, y: f64) -> f64;
    fn h2_parts(&self, y: f64) -> (f64, f64);
    fn lattice(&self) -> f64;
    /// Exact `P(N_n <= k)`.
    fn count_cdf(&self, k: u64) -> f64;

    /// `P(N_n <= k)` for `k = 0..=k_max`.
    fn count_cdf_table(&self, k_max: u64) -> Vec<f64> {
        (0..=k_max).map(|k| self.count_cdf(k)).collect()
    }

    fn h2(&self, y: f64) -> f64 {
        let (smooth, saw) = self.h2_parts(y);
        smooth + saw * q1(self.lattice() * y)
    }
}

impl SizeModel {
    pub fn new(kind: SizeKind, n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("size index n must be at least 2, got {n}")));
        }
        let (g_n, b) = match kind {
            SizeKind::NegBinomial { r } => {
                require_positive("r", r)?;
                (r * (n - 1) as f64 + 1.0, r.min(2.0))
            }
            SizeKind::ParetoMax { s } => {
                require_positive("s", s)?;
                (n as f64, 2.0)
            }
        };
        Ok(SizeModel { kind, n, g_n, b })
    }

    pub fn neg_binomial(r: f64, n: u64) -> Result<Self> {
        Self::new(SizeKind::NegBinomial { r }, n)
    }

    pub fn pareto_max(s: f64, n: u64) -> Result<Self> {
        Self::new(SizeKind::ParetoMax { s }, n)
    }

    pub fn with_n(&self, n: u64) -> Result<Self> {
        Self::new(self.kind, n)
    }

    /// `P(N_n = j)`.
    pub fn pmf(&self, j: u64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match self.kind {
            SizeKind::NegBinomial { r } => nb_ln_pmf(j, r, self.n).exp(),
            SizeKind::ParetoMax { s } => pareto_pmf(j as f64, s, self.n as f64),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.kind {
            SizeKind::NegBinomial { r } => nb_draw(r, self.n, rng),
            SizeKind::ParetoMax { s } => pareto_draw(s, self.n, rng),
        }
    }

    pub fn sample(&self, count: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }
}

impl MixingLaw for SizeModel {
    fn n(&self) -> u64 {
        self.n
    }

    fn g_n(&self) -> f64 {
        self.g_n
    }

    fn rate(&self) -> f64 {
        self.b
    }

    fn limit_cdf(&self, y: f64) -> f64 {
        match self.kind {
            SizeKind::NegBinomial { r } => gamma_limit(y, r).0,
            SizeKind::ParetoMax { s } => inv_exp_cdf(y, s),
        }
    }

    fn limit_pdf(&self, y: f64) -> f64 {
        match self.kind {
            SizeKind::NegBinomial { r } => gamma_limit(y, r).1,
            SizeKind::ParetoMax { s } => {
                if y <= 0.0 {
                    0.0
                } else {
                    s * (-s / y).exp() / (y * y)
                }
            }
        }
    }

    fn h2_parts(&self, y: f64) -> (f64, f64) {
        if y <= 0.0 {
            return (0.0, 0.0);
        }
        match self.kind {
            SizeKind::NegBinomial { r } => {
                if r <= 1.0 {
                    return (0.0, 0.0);
                }
                let g = gamma_pdf(y, r, r);
                (g * (y - 1.0) * (2.0 - r) / (2.0 * r), g / r)
            }
            SizeKind::ParetoMax { s } => {
                let w = s * (-s / y).exp() / (y * y);
                (0.5 * w * (s - 1.0), w)
            }
        }
    }

    fn lattice(&self) -> f64 {
        self.g_n
    }

    fn count_cdf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        match self.kind {
            // P(Y <= k - 1) for Y ~ NB(r, 1/n) failures
            SizeKind::NegBinomial { r } => beta_reg(r, k as f64, 1.0 / self.n as f64),
            SizeKind::ParetoMax { s } => pareto_max_cdf(k, s, self.n),
        }
    }

    fn count_cdf_table(&self, k_max: u64) -> Vec<f64> {
        match self.kind {
            SizeKind::NegBinomial { r } => {
                // Cumulative pmf; the ratio recurrence keeps relative error
                // near sqrt(k) ulps, well below what ln_gamma differences give.
                let q = 1.0 - 1.0 / self.n as f64;
                let mut out = Vec::with_capacity(k_max as usize + 1);
                out.push(0.0);
                let mut pmf = nb_ln_pmf(1, r, self.n).exp();
                let mut acc = Neumaier::default();
                for j in 1..=k_max {
                    acc.add(pmf);
                    out.push(acc.total().min(1.0));
                    let jf = j as f64;
                    pmf *= (jf + r - 1.0) / jf * q;
                }
                out
            }
            SizeKind::ParetoMax { .. } => (0..=k_max).map(|k| self.count_cdf(k)).collect(),
        }
    }
}

/// Upper end of the `y` range worth scanning for `N_n / g_n`: where the
/// Gamma limit tail drops below 1e-14, or `200 s` for the heavy Pareto tail.
pub fn residual_scan_limit(model: &SizeModel) -> f64 {
    match model.kind {
        SizeKind::NegBinomial { r } => {
            let mut y = 1.0;
            while 1.0 - gamma_cdf(y, r, r) > 1e-14 {
                y *= 1.25;
            }
            y
        }
        SizeKind::ParetoMax { s } => 200.0 * s.max(1.0),
    }
}

fn nb_ln_pmf(j: u64, r: f64, n: u64) -> f64 {
    let jf = j as f64;
    let n = n as f64;
    ln_gamma(jf + r - 1.0) - ln_gamma(jf) - ln_gamma(r) - r * n.ln() + (jf - 1.0) * (-1.0 / n).ln_1p()
}

/// `P(N_n(r) = j)` for the negative binomial shifted to start at 1.
pub fn nb_pmf(j: u64, r: f64, n: u64) -> Result<f64> {
    require_positive("r", r)?;
    if j < 1 {
        return Err(Error::domain("negative binomial support starts at j = 1"));
    }
    if n < 2 {
        return Err(Error::domain(format!("n must be at least 2, got {n}")));
    }
    Ok(nb_ln_pmf(j, r, n).exp())
}

fn nb_draw<R: Rng + ?Sized>(r: f64, n: u64, rng: &mut R) -> u64 {
    let lambda = Gamma::new(r, (n - 1) as f64).expect("validated").sample(rng);
    let y = if lambda > 0.0 {
        let y: f64 = Poisson::new(lambda).expect("positive rate").sample(rng);
        y as u64
    } else {
        0
    };
    1 + y
}

/// Integer `r` only: one plus a sum of `r` geometric failure counts.
fn nb_draw_geometric<R: Rng + ?Sized>(r: u64, n: u64, rng: &mut R) -> u64 {
    let ln_q = (-1.0 / n as f64).ln_1p();
    let mut total = 1u64;
    for _ in 0..r {
        total += (open01(rng).ln() / ln_q).floor() as u64;
    }
    total
}

pub fn nb_sample(r: f64, n: u64, count: usize, seed: u64) -> Result<Vec<u64>> {
    Ok(SizeModel::neg_binomial(r, n)?.sample(count, seed))
}

/// Alternative sampler for whole-number `r`, used to cross-check [`nb_sample`].
pub fn nb_sample_geometric(r: u64, n: u64, count: usize, seed: u64) -> Result<Vec<u64>> {
    if r == 0 {
        return Err(Error::domain("r must be a positive integer"));
    }
    SizeModel::neg_binomial(r as f64, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| nb_draw_geometric(r, n, &mut rng)).collect())
}

/// CDF and density of Gamma(r, rate r).
pub fn gamma_limit(y: f64, r: f64) -> (f64, f64) {
    if y <= 0.0 {
        return (0.0, 0.0);
    }
    (gamma_cdf(y, r, r), gamma_pdf(y, r, r))
}

pub fn h2_r(y: f64, r: f64, g_n: f64) -> f64 {
    if r <= 1.0 || y <= 0.0 {
        return 0.0;
    }
    gamma_pdf(y, r, r) * ((y - 1.0) * (2.0 - r) + 2.0 * q1(g_n * y)) / (2.0 * r)
}

/// `(k / (s + k))^n`.
pub fn pareto_max_cdf(k: u64, s: f64, n: u64) -> f64 {
    if k < 1 {
        return 0.0;
    }
    pareto_cdf_real(k as f64, s, n as f64)
}

fn pareto_cdf_real(x: f64, s: f64, n: f64) -> f64 {
    (-n * (s / x).ln_1p()).exp()
}

/// `F(k) - F(k-1)` without cancellation; valid for real `k >= 1`.
fn pareto_pmf(k: f64, s: f64, n: f64) -> f64 {
    let fk = pareto_cdf_real(k, s, n);
    if k <= 1.0 {
        return fk;
    }
    fk * -(-n * (s / ((k - 1.0) * (k + s))).ln_1p()).exp_m1()
}

fn pareto_draw<R: Rng + ?Sized>(s: f64, n: u64, rng: &mut R) -> u64 {
    let lu = open01(rng).ln() / n as f64;
    let t = lu.exp();
    let k = (s * t / -lu.exp_m1()).ceil();
    // The law has no mean, so clip absurd draws well inside u64.
    if k >= 4.0e18 {
        4_000_000_000_000_000_000
    } else {
        (k as u64).max(1)
    }
}

pub fn pareto_max_sample(s: f64, n: u64, count: usize, seed: u64) -> Result<Vec<u64>> {
    Ok(SizeModel::pareto_max(s, n)?.sample(count, seed))
}

fn inv_exp_cdf(y: f64, s: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-s / y).exp()
    }
}

/// `H_s(y) = exp(-s / y)` and its second-order term.
pub fn inv_exp_limit(y: f64, s: f64, n: u64) -> (f64, f64) {
    if y <= 0.0 {
        return (0.0, 0.0);
    }
    let e = (-s / y).exp();
    let h2 = s * e * (s - 1.0 + 2.0 * q1(n as f64 * y)) / (2.0 * y * y);
    (e, h2)
}

/// Sup distances between the exact law of `N_n / g_n` and its expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeResidual {
    /// Against `H` alone.
    pub first: f64,
    /// Against `H + h2 / n`.
    pub second: f64,
}

/// Scans every jump of `N_n / g_n` from both sides, plus the midpoints between
/// jumps, against `H` and `H + h2 / n`.
///
/// `q1(g_n y)` is fed from the jump index rather than recomputed, because
/// `g_n * (k / g_n)` need not round back to `k`.
pub fn size_residual<M: MixingLaw + ?Sized>(law: &M, y_max: f64) -> SizeResidual {
    let g = law.g_n();
    let n = law.n() as f64;
    let k_max = (y_max * g).ceil() as u64;
    let mut first: f64 = 0.0;
    let mut second: f64 = 0.0;
    let table = law.count_cdf_table(k_max);
    let mut prev = 0.0;
    let mut check = |p: f64, y: f64, q: f64| {
        let h = law.limit_cdf(y);
        let (smooth, saw) = law.h2_parts(y);
        first = first.max((p - h).abs());
        second = second.max((p - h - (smooth + saw * q) / n).abs());
    };
    for k in 1..=k_max {
        let y = k as f64 / g;
        let p = table[k as usize];
        check(prev, y, -0.5);
        check(p, y, 0.5);
        check(p, (k as f64 + 0.5) / g, 0.0);
        prev = p;
    }
    SizeResidual { first, second }
}

/// Expansion value of `E N_n(r)^(-p)`, remainder dropped.
pub fn neg_moment_nb(p: f64, r: f64, n: u64) -> Result<f64> {
    require_positive("p", p)?;
    let model = SizeModel::neg_binomial(r, n)?;
    let g = model.g_n;
    let nf = n as f64;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let lead = |p: f64| r.powf(p) * gamma(r - p) / (gamma(r) * g.powf(p));
    let v = if close(p, r - 1.0) {
        // The ln-term carries r^r; with r^p the residual grows like ln n.
        lead(p) - (2.0 - r) * p * r.powf(r) * (g / r).ln() / (2.0 * r * gamma(r) * nf * g.powf(p))
    } else if close(p, r) {
        r.powf(r) * (g / r).ln() / (gamma(r) * g.powf(r))
    } else if p < r - 1.0 {
        lead(p) - (2.0 - r) * p * r.powf(p) * (p + 1.0) * gamma(r - p - 1.0) / (2.0 * r * gamma(r) * nf * g.powf(p))
    } else if p < r {
        lead(p)
    } else {
        r.powf(r) / (gamma(r) * (p - r) * g.powf(r))
    };
    Ok(v)
}

/// Expansion value of `E N_n(s)^(-p)`, remainder dropped.
pub fn neg_moment_pareto(p: f64, s: f64, n: u64) -> Result<f64> {
    require_positive("p", p)?;
    SizeModel::pareto_max(s, n)?;
    let nf = n as f64;
    Ok(if p < 1.0 {
        gamma(p + 1.0) / (s.powf(p) * nf.powf(p))
            + (s - 1.0) * p * gamma(p + 2.0) / (2.0 * s.powf(p + 1.0) * nf.powf(p + 1.0))
    } else if p < 2.0 {
        gamma(p + 1.0) / (s.powf(p) * nf.powf(p))
    } else {
        0.0
    })
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.c
    }
}

/// `E N_n(r)^(-p)` by direct summation of the pmf.
pub fn neg_moment_nb_exact(p: f64, r: f64, n: u64) -> Result<f64> {
    require_positive("p", p)?;
    let model = SizeModel::neg_binomial(r, n)?;
    let q = 1.0 - 1.0 / n as f64;
    let mut pmf = nb_ln_pmf(1, r, n).exp();
    let mut acc = Neumaier::default();
    let mut mass = Neumaier::default();
    let mode = (model.g_n as u64).max(1);
    let mut j = 1u64;
    loop {
        let jf = j as f64;
        acc.add(pmf * jf.powf(-p));
        mass.add(pmf);
        if j > mode && (1.0 - mass.total() < 1e-16 || pmf < 1e-300) {
            break;
        }
        pmf *= (jf + r - 1.0) / jf * q;
        j += 1;
    }
    Ok(acc.total())
}

/// `E N_n(s)^(-p)` by summation to a cutoff plus an Euler-Maclaurin tail.
pub fn neg_moment_pareto_exact(p: f64, s: f64, n: u64) -> Result<f64> {
    require_positive("p", p)?;
    SizeModel::pareto_max(s, n)?;
    let nf = n as f64;
    let f = |k: f64| k.powf(-p) * pareto_pmf(k, s, nf);
    let cutoff = (50.0 * nf * s.max(1.0)).ceil();
    let mut acc = Neumaier::default();
    let mut k = 1.0;
    while k <= cutoff {
        acc.add(f(k));
        k += 1.0;
    }
    let tail = integrate_to_infinity(f, cutoff, 1e-22, 1e-13, 2000)?;
    let h = 1e-3 * cutoff;
    let df = (f(cutoff + h) - f(cutoff - h)) / (2.0 * h);
    Ok(acc.total() + tail.value - 0.5 * f(cutoff) - df / 12.0)
}
