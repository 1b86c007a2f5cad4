use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {message} (achieved tolerance {achieved:.3e})")]
    Numeric { message: String, achieved: f64 },

    #[error("degenerate density at u = {u}: g(u) = {value:.3e}")]
    DegenerateDensity { u: f64, value: f64 },

    #[error("bracket [{lo}, {hi}] does not contain alpha = {alpha} (F(lo) = {f_lo}, F(hi) = {f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        alpha: f64,
        f_lo: f64,
        f_hi: f64,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Bracket { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn require_probability(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie strictly inside (0, 1), got {alpha}")))
    }
}
