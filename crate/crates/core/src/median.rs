//! Sample median and its fixed-size second-order expansion.

use crate::densities::ParentDensity;
use crate::error::{Error, Result};
use crate::special::{norm_centered, norm_pdf};
use serde::{Deserialize, Serialize};

/// Even floor `2 * floor(m / 2)`.
pub fn m_star(m: u64) -> u64 {
    m & !1
}

/// Median of `data`; averages the two middle order statistics for even length.
pub fn sample_median(data: &[f64]) -> Result<f64> {
    let mut buf = data.to_vec();
    median_in_place(&mut buf)
}

/// Same as [`sample_median`] but reorders `data` instead of copying it.
pub fn median_in_place(data: &mut [f64]) -> Result<f64> {
    let m = data.len();
    if m == 0 {
        return Err(Error::domain("median of an empty sample"));
    }
    let j = (m - 1) / 2;
    let (_, &mut lo, upper) = data.select_nth_unstable_by(j, f64::total_cmp);
    if m % 2 == 1 {
        return Ok(lo);
    }
    let hi = upper.iter().copied().min_by(f64::total_cmp).expect("even m >= 2");
    Ok(0.5 * (lo + hi))
}

/// Which sample-size normalizer divides the correction terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    /// Corrections over `sqrt(m*)` and `m*`.
    MStar,
    /// Corrections over `sqrt(m)` and `m`.
    M,
}

/// The three rational constants that the correction polynomials need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MedianExpansionTerms {
    pub parent: ParentDensity,
    /// `p1 / (4 p0^2)`
    pub c1: f64,
    /// `1 + p2 / (6 p0^3)`
    pub c2: f64,
    /// `p1^2 / (8 p0^4)`
    pub c3: f64,
}

impl MedianExpansionTerms {
    pub fn new(parent: &ParentDensity) -> Self {
        let (p0, p1, p2) = (parent.p0, parent.p1, parent.p2);
        let p0sq = p0 * p0;
        MedianExpansionTerms {
            parent: *parent,
            c1: p1 / (4.0 * p0sq),
            c2: 1.0 + p2 / (6.0 * p0sq * p0),
            c3: p1 * p1 / (8.0 * p0sq * p0sq),
        }
    }

    /// `f1(x) / phi(x)`
    pub fn q1(&self, x: f64) -> f64 {
        self.c1 * x * x.abs()
    }

    /// `f2(x) / phi(x)`
    pub fn q2(&self, x: f64) -> f64 {
        let x2 = x * x;
        0.25 * x * (3.0 + self.c2 * x2 - self.c3 * x2 * x2)
    }

    pub fn f1(&self, x: f64) -> f64 {
        self.q1(x) * norm_pdf(x)
    }

    pub fn f2(&self, x: f64) -> f64 {
        self.q2(x) * norm_pdf(x)
    }
}

pub fn f1(x: f64, t: &MedianExpansionTerms) -> f64 {
    t.f1(x)
}

pub fn f2(x: f64, t: &MedianExpansionTerms) -> f64 {
    t.f2(x)
}

/// Second-order approximation to `P(2 p0 sqrt(m*) (M_m - theta) <= x)`.
///
/// The value is returned raw and can leave [0, 1] far out in the tails.
pub fn median_cdf_fixed(x: f64, m: u64, t: &MedianExpansionTerms, normalizer: Normalizer) -> Result<f64> {
    if m < 2 {
        return Err(Error::domain(format!("fixed sample size must be at least 2, got {m}")));
    }
    Ok(0.5 + median_centered_fixed(x, m, t, normalizer, 2))
}

/// Odd part of the fixed-size expansion truncated after `order` terms.
pub(crate) fn median_centered_fixed(x: f64, m: u64, t: &MedianExpansionTerms, normalizer: Normalizer, order: u8) -> f64 {
    let k = match normalizer {
        Normalizer::MStar => m_star(m),
        Normalizer::M => m,
    } as f64;
    let mut corr = 0.0;
    if order >= 1 {
        corr += t.q1(x) / k.sqrt();
    }
    if order >= 2 {
        corr += t.q2(x) / k;
    }
    norm_centered(x) + norm_pdf(x) * corr
}
