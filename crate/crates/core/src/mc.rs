//! Monte Carlo oracle for the normalized random-size median.
//!
//! Every replication owns a ChaCha stream picked by its index, so results do
//! not depend on how rayon splits the work or on the number of threads.

use crate::densities::{box_muller, open01, ParentDensity};
use crate::error::{Error, Result};
use crate::median::{m_star, median_in_place, Normalizer};
use crate::mixture::{laplace_limit, student_limit, Order, RandomMedianApprox};
use crate::size::{MixingLaw, SizeModel};
use crate::special::norm_cdf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::Serialize;

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "RSS_MEDIAN_THREADS";

/// Above this many replications values go through a bottom-k reservoir.
pub const RESERVOIR_LIMIT: u64 = 10_000_000;

/// Samples up to this size are drawn and sorted; larger ones go through the
/// exact law of the middle order statistics.
pub const DIRECT_MAX: u64 = 4096;

/// Confidence level of the DKW floor reported by studies.
pub const DKW_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scaling {
    /// `2 p0 sqrt(g_n N* / N) (M - theta)`; zero when `N = 1`.
    MixedNStar,
    /// `2 p0 sqrt(g_n) (M - theta)`.
    PlainGn,
    /// Non-random size `m`, scaled by `2 p0 sqrt(m*)`.
    FixedM { m: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub parent: ParentDensity,
    pub theta: f64,
    /// Required for the random scalings, ignored by `FixedM`.
    pub size_model: Option<SizeModel>,
    pub replications: u64,
    pub seed: u64,
    pub scaling: Scaling,
    /// Worker override; falls back to the environment, then to rayon's default.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn random(parent: ParentDensity, model: SizeModel, replications: u64, seed: u64) -> Self {
        SimConfig {
            parent,
            theta: 0.0,
            size_model: Some(model),
            replications,
            seed,
            scaling: Scaling::MixedNStar,
            threads: None,
        }
    }

    pub fn fixed(parent: ParentDensity, m: u64, replications: u64, seed: u64) -> Self {
        SimConfig {
            parent,
            theta: 0.0,
            size_model: None,
            replications,
            seed,
            scaling: Scaling::FixedM { m },
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::domain("replications must be at least 1"));
        }
        if !self.theta.is_finite() {
            return Err(Error::domain(format!("theta must be finite, got {}", self.theta)));
        }
        match self.scaling {
            Scaling::FixedM { m } if m < 1 => Err(Error::domain("fixed sample size must be at least 1")),
            Scaling::FixedM { .. } => Ok(()),
            _ if self.size_model.is_none() => Err(Error::domain("random scalings need a size model")),
            _ => Ok(()),
        }
    }

    /// Same configuration at another index: `n` for random sizes, `m` for fixed.
    pub fn at(&self, n: u64) -> Result<Self> {
        let mut cfg = *self;
        match self.scaling {
            Scaling::FixedM { .. } => cfg.scaling = Scaling::FixedM { m: n },
            _ => {
                let model = self.size_model.ok_or_else(|| Error::domain("random scalings need a size model"))?;
                cfg.size_model = Some(model.with_n(n)?);
            }
        }
        Ok(cfg)
    }

    /// The analytic expansion that describes this configuration.
    pub fn approximation(&self) -> Result<RandomMedianApprox> {
        match (self.scaling, self.size_model) {
            (Scaling::FixedM { m }, _) => RandomMedianApprox::fixed(m, Normalizer::MStar, &self.parent),
            (_, Some(model)) => RandomMedianApprox::for_model(&model, &self.parent),
            _ => Err(Error::domain("random scalings need a size model")),
        }
    }
}

/// Resolved worker count: explicit override, then the environment variable,
/// then rayon's default.
pub fn worker_count(explicit: Option<usize>) -> usize {
    let env = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    explicit.or(env).filter(|&t| t > 0).unwrap_or_else(rayon::current_num_threads)
}

/// Run `f` on a pool of `worker_count(threads)` workers.
pub fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let n = worker_count(threads);
    match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Right-continuous step function of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("empirical CDF of an empty sample"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("sample contains NaN"));
        }
        values.par_sort_unstable_by(f64::total_cmp);
        Ok(EmpiricalCdf { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.count() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub ecdf: EmpiricalCdf,
    /// Replications that drew `N = 1`, hence `N* = 0`.
    pub n_star_zero: u64,
    pub replications: u64,
}

/// One replication's median minus theta, with the drawn size.
fn replicate(cfg: &SimConfig, rep: u64, buf: &mut Vec<f64>) -> (f64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep);
    let (size, g) = match (cfg.scaling, cfg.size_model) {
        (Scaling::FixedM { m }, _) => (m, 0.0),
        (_, Some(model)) => (model.draw(&mut rng), model.g_n()),
        _ => unreachable!("validated"),
    };
    let med = draw_median(&cfg.parent, cfg.theta, size, &mut rng, buf) - cfg.theta;
    let p0 = cfg.parent.p0;
    let v = match cfg.scaling {
        Scaling::MixedNStar => {
            let ns = m_star(size);
            if ns == 0 {
                0.0
            } else {
                2.0 * p0 * (g * ns as f64 / size as f64).sqrt() * med
            }
        }
        Scaling::PlainGn => 2.0 * p0 * g.sqrt() * med,
        Scaling::FixedM { m } => 2.0 * p0 * (m_star(m) as f64).sqrt() * med,
    };
    (v, size)
}

fn draw_median<R: Rng>(parent: &ParentDensity, theta: f64, size: u64, rng: &mut R, buf: &mut Vec<f64>) -> f64 {
    if size <= DIRECT_MAX {
        buf.resize(size as usize, 0.0);
        parent.fill(rng, buf);
        for v in buf.iter_mut() {
            *v += theta;
        }
        return median_in_place(buf).expect("size >= 1");
    }
    let q = |u: f64| theta + parent.quantile(u);
    let k = (size / 2) as f64;
    if size % 2 == 1 {
        let u = Beta::new(k + 1.0, k + 1.0).expect("positive shapes").sample(rng);
        q(u)
    } else {
        // k-th order statistic, then the minimum of the size - k points above it
        let u1 = Beta::new(k, k + 1.0).expect("positive shapes").sample(rng);
        let v = open01(rng);
        let u2 = u1 + (1.0 - u1) * -(v.ln() / (size as f64 - k)).exp_m1();
        0.5 * (q(u1) + q(u2))
    }
}

/// splitmix64 finalizer, used as a reproducible reservoir key.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draw the normalized median `cfg.replications` times.
pub fn simulate_random_median(cfg: &SimConfig) -> Result<Simulation> {
    cfg.validate()?;
    with_workers(cfg.threads, || simulate_in_pool(cfg))
}

fn simulate_in_pool(cfg: &SimConfig) -> Result<Simulation> {
    let reps = cfg.replications;
    let run = |range: std::ops::Range<u64>| -> Vec<(f64, u64)> {
        range.into_par_iter().map_init(Vec::new, |buf, rep| replicate(cfg, rep, buf)).collect()
    };
    let mut zeros = 0u64;
    let values = if reps <= RESERVOIR_LIMIT {
        let out = run(0..reps);
        zeros = out.iter().filter(|p| p.1 == 1).count() as u64;
        out.into_iter().map(|p| p.0).collect()
    } else {
        // keep the RESERVOIR_LIMIT replications with the smallest keys
        let keep = RESERVOIR_LIMIT as usize;
        let key = |rep: u64| (mix64(cfg.seed ^ mix64(rep)), rep);
        let mut pool: Vec<((u64, u64), f64)> = Vec::with_capacity(2 * keep);
        let chunk = 1u64 << 22;
        let mut start = 0;
        while start < reps {
            let end = (start + chunk).min(reps);
            let out = run(start..end);
            zeros += out.iter().filter(|p| p.1 == 1).count() as u64;
            pool.extend(out.into_iter().enumerate().map(|(i, p)| (key(start + i as u64), p.0)));
            if pool.len() > keep {
                pool.select_nth_unstable_by(keep, |a, b| a.0.cmp(&b.0));
                pool.truncate(keep);
            }
            start = end;
        }
        pool.into_iter().map(|p| p.1).collect()
    };
    Ok(Simulation { ecdf: EmpiricalCdf::new(values)?, n_star_zero: zeros, replications: reps })
}

/// Kolmogorov distance between a step function and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64 + Sync>(e: &EmpiricalCdf, f: F) -> f64 {
    let n = e.count() as f64;
    e.values
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let fx = f(x);
            ((i + 1) as f64 / n - fx).abs().max((i as f64 / n - fx).abs())
        })
        .reduce(|| 0.0, f64::max)
}

pub const GRID_LO: f64 = -6.0;
pub const GRID_HI: f64 = 6.0;
pub const GRID_STEP: f64 = 0.01;

/// The `[-6, 6]` evaluation grid, step 0.01.
pub fn sup_grid() -> Vec<f64> {
    let k = ((GRID_HI - GRID_LO) / GRID_STEP).round() as usize;
    (0..=k).map(|i| GRID_LO + GRID_STEP * i as f64).collect()
}

/// Sup distance on the fixed grid together with the jump points, which also
/// catches interior bumps of a non-monotone approximation.
pub fn sup_distance<F: Fn(f64) -> f64 + Sync>(e: &EmpiricalCdf, f: F) -> f64 {
    let on_grid = sup_grid().into_iter().map(|x| (e.eval(x) - f(x)).abs()).fold(0.0, f64::max);
    on_grid.max(ks_distance(e, f))
}

/// Two-sided DKW band half-width at the given confidence.
pub fn dkw_bound(replications: u64, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * replications as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    /// `None` when fewer than three points sit above the noise floor.
    pub slope: Option<f64>,
    pub points: usize,
}

/// Least-squares slope of `ln d` against `ln n`, over the points with
/// `d > floor`.
pub fn fit_slope(ns: &[f64], ds: &[f64], floor: f64) -> SlopeFit {
    let pts: Vec<(f64, f64)> =
        ns.iter().zip(ds).filter(|p| *p.1 > floor && *p.0 > 0.0).map(|(n, d)| (n.ln(), d.ln())).collect();
    let k = pts.len();
    if k < 3 {
        return SlopeFit { slope: None, points: k };
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    SlopeFit { slope: Some(sxy / sxx), points: k }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub n: u64,
    pub g_n: f64,
    pub d_limit: Option<f64>,
    pub d_first: Option<f64>,
    pub d_second: Option<f64>,
    pub n_star_zero: u64,
}

impl StudyRow {
    pub fn distance(&self, order: Order) -> Option<f64> {
        match order {
            Order::LimitOnly => self.d_limit,
            Order::FirstOrder => self.d_first,
            Order::SecondOrder => self.d_second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudySlopes {
    pub limit: Option<SlopeFit>,
    pub first: Option<SlopeFit>,
    pub second: Option<SlopeFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub config: SimConfig,
    pub rows: Vec<StudyRow>,
    pub slopes: StudySlopes,
    pub dkw_floor: f64,
    pub seed: u64,
}

/// Sup distances between simulation and each requested expansion order, for
/// every `n`, with fitted log-log slopes.
pub fn convergence_study(base: &SimConfig, n_values: &[u64], orders: &[Order]) -> Result<StudyReport> {
    if n_values.len() < 3 {
        return Err(Error::domain(format!("a study needs at least 3 n values, got {}", n_values.len())));
    }
    if orders.is_empty() {
        return Err(Error::domain("a study needs at least one approximation order"));
    }
    base.validate()?;
    let mut rows = Vec::with_capacity(n_values.len());
    with_workers(base.threads, || -> Result<()> {
        for &n in n_values {
            let cfg = base.at(n)?;
            let sim = simulate_in_pool(&cfg)?;
            let approx = cfg.approximation()?;
            let d = |o: Order| orders.contains(&o).then(|| sup_distance(&sim.ecdf, |x| approx.cdf(x, o)));
            rows.push(StudyRow {
                n,
                g_n: approx.scale(),
                d_limit: d(Order::LimitOnly),
                d_first: d(Order::FirstOrder),
                d_second: d(Order::SecondOrder),
                n_star_zero: sim.n_star_zero,
            });
        }
        Ok(())
    })?;
    let floor = dkw_bound(base.replications.min(RESERVOIR_LIMIT), DKW_CONFIDENCE);
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let fit = |o: Order| -> Option<SlopeFit> {
        let ds: Option<Vec<f64>> = rows.iter().map(|r| r.distance(o)).collect();
        ds.map(|ds| fit_slope(&ns, &ds, floor))
    };
    let slopes = StudySlopes { limit: fit(Order::LimitOnly), first: fit(Order::FirstOrder), second: fit(Order::SecondOrder) };
    Ok(StudyReport { config: *base, rows, slopes, dkw_floor: floor, seed: base.seed })
}

/// Random sizes up to this bound are summed term by term in the demo.
pub const DEMO_DIRECT_SUM: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeLimits {
    pub n: u64,
    pub replications: u64,
    pub seed: u64,
    /// `sqrt(N) T_N` against the standard normal.
    pub ks_normal: f64,
    /// `sqrt(E N) T_N` against Student with 2 degrees of freedom.
    pub ks_student2: f64,
    /// `N T_N / sqrt(E N)` against the unit-variance Laplace law.
    pub ks_laplace: f64,
    pub dkw_floor: f64,
}

/// Random means of standard normals over geometric sizes with mean `n`,
/// under the three classic scalings.
pub fn three_limits_demo(n: u64, replications: u64, seed: u64, threads: Option<usize>) -> Result<ThreeLimits> {
    if replications == 0 {
        return Err(Error::domain("replications must be at least 1"));
    }
    let model = SizeModel::neg_binomial(1.0, n)?;
    let mean = model.g_n();
    let draws: Vec<(f64, f64, f64)> = with_workers(threads, || {
        (0..replications)
            .into_par_iter()
            .map(|rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(rep);
                let size = model.draw(&mut rng);
                // the sum of `size` standard normals, exactly N(0, size) either way
                let sum = if size <= DEMO_DIRECT_SUM {
                    let mut s = 0.0;
                    let mut left = size;
                    while left > 0 {
                        let (a, b) = box_muller(&mut rng);
                        s += a;
                        if left > 1 {
                            s += b;
                        }
                        left = left.saturating_sub(2);
                    }
                    s
                } else {
                    (size as f64).sqrt() * box_muller(&mut rng).0
                };
                let nf = size as f64;
                let t = sum / nf;
                (nf.sqrt() * t, mean.sqrt() * t, nf * t / mean.sqrt())
            })
            .collect()
    });
    let (a, b, c) = draws.into_iter().fold((Vec::new(), Vec::new(), Vec::new()), |mut acc, v| {
        acc.0.push(v.0);
        acc.1.push(v.1);
        acc.2.push(v.2);
        acc
    });
    let (ka, kb, kc) = with_workers(threads, || -> Result<(f64, f64, f64)> {
        Ok((
            ks_distance(&EmpiricalCdf::new(a)?, norm_cdf),
            ks_distance(&EmpiricalCdf::new(b)?, |x| student_limit(x, 1.0).0),
            ks_distance(&EmpiricalCdf::new(c)?, |x| laplace_limit(x, 1.0).0),
        ))
    })?;
    Ok(ThreeLimits {
        n,
        replications,
        seed,
        ks_normal: ka,
        ks_student2: kb,
        ks_laplace: kc,
        dkw_floor: dkw_bound(replications, DKW_CONFIDENCE),
    })
}
