//! Normal and Student-t distribution functions built on the incomplete beta
//! and gamma functions from `statrs`.
//!
//! Most CDFs here come in a "centered" flavour, `F(x) - 1/2`, computed from
//! `|x|` and then sign-flipped. That makes them odd to the last bit, which the
//! symmetric expansions downstream depend on.

use statrs::function::beta::{beta_reg, inv_beta_reg};
use libm::{erf, erfc};
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, ln_gamma};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// `Phi(x) - 1/2`, exactly odd in `x`.
pub fn norm_centered(x: f64) -> f64 {
    let v = 0.5 * erf(x.abs() * FRAC_1_SQRT_2);
    v.copysign(x)
}

/// Standard normal quantile, polished with one Halley step.
pub fn norm_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        // 1 - p is exact here
        return -norm_lower_quantile(1.0 - p);
    }
    norm_lower_quantile(p)
}

fn norm_lower_quantile(p: f64) -> f64 {
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut u = -SQRT_2 * erfc_inv(2.0 * p);
    if u.is_finite() {
        let e = norm_cdf(u) - p;
        let d = e / norm_pdf(u);
        if d.is_finite() {
            u -= d / (1.0 + 0.5 * u * d);
        }
    }
    u
}

pub fn student_pdf(x: f64, nu: f64) -> f64 {
    let ln_c = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
    (ln_c - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
}

/// Upper tail `P(T > |x|)`.
fn student_tail(ax: f64, nu: f64) -> f64 {
    let x2 = ax * ax;
    if x2 > nu {
        0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + x2))
    } else {
        0.5 - 0.5 * beta_reg(0.5, 0.5 * nu, x2 / (nu + x2))
    }
}

/// `S_nu(x) - 1/2`, exactly odd in `x`.
pub fn student_centered(x: f64, nu: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let x2 = ax * ax;
    let v = if x2 > nu {
        0.5 - student_tail(ax, nu)
    } else {
        0.5 * beta_reg(0.5, 0.5 * nu, x2 / (nu + x2))
    };
    v.copysign(x)
}

pub fn student_cdf(x: f64, nu: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    if x < 0.0 {
        student_tail(-x, nu)
    } else {
        1.0 - student_tail(x, nu)
    }
}

pub fn student_quantile(p: f64, nu: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.5 {
        return 0.0;
    }
    if p > 0.5 {
        return -student_lower_quantile(1.0 - p, nu);
    }
    student_lower_quantile(p, nu)
}

fn student_lower_quantile(p: f64, nu: f64) -> f64 {
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    let t = inv_beta_reg(0.5 * nu, 0.5, 2.0 * p);
    let mut x = -(nu * (1.0 - t) / t).sqrt();
    if !x.is_finite() {
        x = -1.0;
    }
    // inv_beta_reg is only good to a few ulps near t = 1; Newton cleans up.
    for _ in 0..8 {
        let step = (student_cdf(x, nu) - p) / student_pdf(x, nu);
        if !step.is_finite() {
            break;
        }
        let next = (x - step).min(0.0);
        let done = (next - x).abs() <= 1e-15 * x.abs().max(1e-300);
        x = next;
        if done {
            break;
        }
    }
    x
}

/// CDF of Gamma(shape, rate) at `y`.
pub fn gamma_cdf(y: f64, shape: f64, rate: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        gamma_lr(shape, rate * y)
    }
}

/// Density of Gamma(shape, rate) at `y`, evaluated in log space.
pub fn gamma_pdf(y: f64, shape: f64, rate: f64) -> f64 {
    if y <= 0.0 || !y.is_finite() {
        return 0.0;
    }
    (shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * y.ln() - rate * y).exp()
}
