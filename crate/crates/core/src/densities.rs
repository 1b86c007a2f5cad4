//! Symmetric parent densities and their behaviour at the origin.
//!
//! Each parent is centred at zero and described near the origin by
//! `p0 = p(0)`, `p1 = p'(0+)` and `p2 = p''(0+)`. The one-sided derivatives
//! matter for Laplace and Triangular, both of which have a kink at zero.

use crate::error::{require_positive, Result};
use crate::special::{
    norm_cdf, norm_centered, norm_pdf, norm_quantile, student_cdf, student_centered, student_pdf,
    student_quantile, FRAC_1_SQRT_2PI,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{PI, SQRT_2, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityKind {
    Normal,
    StudentT { nu: f64 },
    Triangular { a: f64 },
    Uniform { a: f64 },
    Laplace { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParentDensity {
    pub kind: DensityKind,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

pub fn parent_coefficients(kind: DensityKind) -> Result<(f64, f64, f64)> {
    Ok(match kind {
        DensityKind::Normal => (FRAC_1_SQRT_2PI, 0.0, -FRAC_1_SQRT_2PI),
        DensityKind::StudentT { nu } => {
            require_positive("nu", nu)?;
            let p0 = (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp() / (nu * PI).sqrt();
            (p0, 0.0, -p0 * (nu + 1.0) / nu)
        }
        DensityKind::Triangular { a } => {
            require_positive("a", a)?;
            (1.0 / a, -1.0 / (a * a), 0.0)
        }
        DensityKind::Uniform { a } => {
            require_positive("a", a)?;
            (0.5 / a, 0.0, 0.0)
        }
        DensityKind::Laplace { mu } => {
            require_positive("mu", mu)?;
            (1.0 / (SQRT_2 * mu), -1.0 / (mu * mu), SQRT_2 / (mu * mu * mu))
        }
    })
}

impl ParentDensity {
    pub fn new(kind: DensityKind) -> Result<Self> {
        let (p0, p1, p2) = parent_coefficients(kind)?;
        Ok(ParentDensity { kind, p0, p1, p2 })
    }

    pub fn normal() -> Self {
        Self::new(DensityKind::Normal).expect("normal is always valid")
    }

    pub fn laplace(mu: f64) -> Result<Self> {
        Self::new(DensityKind::Laplace { mu })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.kind {
            DensityKind::Normal => norm_pdf(x),
            DensityKind::StudentT { nu } => student_pdf(x, nu),
            DensityKind::Triangular { a } => {
                if x.abs() < a {
                    (a - x.abs()) / (a * a)
                } else {
                    0.0
                }
            }
            DensityKind::Uniform { a } => {
                if x.abs() < a {
                    0.5 / a
                } else {
                    0.0
                }
            }
            DensityKind::Laplace { mu } => {
                let b = mu / SQRT_2;
                (-x.abs() / b).exp() / (2.0 * b)
            }
        }
    }

    /// `F(x) - 1/2`, odd in `x`.
    pub fn centered_cdf(&self, x: f64) -> f64 {
        let ax = x.abs();
        let v = match self.kind {
            DensityKind::Normal => return norm_centered(x),
            DensityKind::StudentT { nu } => return student_centered(x, nu),
            DensityKind::Triangular { a } => {
                if ax >= a {
                    0.5
                } else {
                    0.5 - 0.5 * (a - ax) * (a - ax) / (a * a)
                }
            }
            DensityKind::Uniform { a } => (0.5 * ax / a).min(0.5),
            DensityKind::Laplace { mu } => -0.5 * (-ax * SQRT_2 / mu).exp_m1(),
        };
        v.copysign(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            DensityKind::Normal => norm_cdf(x),
            DensityKind::StudentT { nu } => student_cdf(x, nu),
            DensityKind::Laplace { mu } if x < 0.0 => 0.5 * (x * SQRT_2 / mu).exp(),
            DensityKind::Triangular { a } if x < 0.0 => {
                let d = (a + x).max(0.0);
                0.5 * d * d / (a * a)
            }
            _ => 0.5 + self.centered_cdf(x),
        }
    }

    pub fn eval(&self, x: f64) -> (f64, f64) {
        (self.pdf(x), self.cdf(x))
    }

    /// Inverse CDF, antisymmetric about `p = 1/2`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p == 0.5 {
            return 0.0;
        }
        match self.kind {
            DensityKind::Normal => norm_quantile(p),
            DensityKind::StudentT { nu } => student_quantile(p, nu),
            _ => {
                let (q, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
                // q is the tail mass beyond the returned point
                let t = match self.kind {
                    DensityKind::Triangular { a } => a - a * (2.0 * q).sqrt(),
                    DensityKind::Uniform { a } => a * (1.0 - 2.0 * q),
                    DensityKind::Laplace { mu } => -(mu / SQRT_2) * (2.0 * q).ln(),
                    _ => unreachable!(),
                };
                sign * t
            }
        }
    }

    /// One draw from the centred parent.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            DensityKind::Normal => box_muller(rng).0,
            DensityKind::StudentT { nu } => {
                let z = box_muller(rng).0;
                // chi-square over its degrees of freedom
                let w = Gamma::new(0.5 * nu, 2.0 / nu).expect("nu checked").sample(rng);
                z / w.sqrt()
            }
            DensityKind::Uniform { a } => a * (2.0 * open01(rng) - 1.0),
            _ => self.quantile(open01(rng)),
        }
    }

    /// Fills `out` with centred draws. Normal draws use both Box-Muller halves.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        if let DensityKind::Normal = self.kind {
            let mut chunks = out.chunks_exact_mut(2);
            for pair in &mut chunks {
                let (z1, z2) = box_muller(rng);
                pair[0] = z1;
                pair[1] = z2;
            }
            if let [last] = chunks.into_remainder() {
                *last = box_muller(rng).0;
            }
        } else {
            for v in out.iter_mut() {
                *v = self.draw(rng);
            }
        }
    }
}

/// `count` i.i.d. draws with density `p(x - theta)`.
pub fn parent_sample(d: &ParentDensity, theta: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; count];
    d.fill(&mut rng, &mut out);
    for v in &mut out {
        *v += theta;
    }
    out
}

/// Uniform on the open interval (0, 1).
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 53 random bits, offset by half a step so neither end is reachable.
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1 = open01(rng);
    let u2 = open01(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}
