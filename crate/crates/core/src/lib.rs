//! Second-order approximations for the sample median when the sample size is
//! itself random.
//!
//! With negative binomial sizes the normalized median tends to a Student law,
//! with the maximum of discrete Pareto variables it tends to a Laplace law.
//! The crate evaluates the corresponding Edgeworth-type expansions and their
//! Cornish-Fisher inverses, checks them against quadrature of the underlying
//! mixtures, and ships a reproducible Monte Carlo lab for empirical rates.
//!
//! ```
//! use rss_median::{student_second_order, cf_quantile_nb, ParentDensity};
//!
//! let normal = ParentDensity::normal();
//! let x = cf_quantile_nb(0.95, 2.0, 100, &normal).unwrap();
//! let p = student_second_order(x, 2.0, 100, &normal).unwrap();
//! assert!((p - 0.95).abs() < 1e-4);
//! ```

pub mod densities;
pub mod error;
pub mod mc;
pub mod median;
pub mod mixture;
pub mod quadrature;
pub mod quantiles;
pub mod report;
pub mod size;
pub mod special;

pub use densities::{parent_coefficients, parent_sample, DensityKind, ParentDensity};
pub use error::{Error, Result};
pub use mc::{
    convergence_study, dkw_bound, fit_slope, ks_distance, simulate_random_median, sup_distance, three_limits_demo,
    EmpiricalCdf, Scaling, SimConfig, Simulation, SlopeFit, StudyReport, StudyRow, ThreeLimits,
};
pub use median::{f1, f2, m_star, median_cdf_fixed, sample_median, MedianExpansionTerms, Normalizer};
pub use mixture::{
    laplace_limit, laplace_second_order, mixture_cdf_numeric, student_limit, student_second_order, Family, Order,
    RandomMedianApprox,
};
pub use quantiles::{
    cf_quantile, cf_quantile_fixed, cf_quantile_nb, cf_quantile_pareto, cf_transfer, invert_cdf, CornishFisherInput,
    InversionMode,
};
pub use size::{
    gamma_limit, h2_r, inv_exp_limit, nb_pmf, nb_sample, neg_moment_nb, neg_moment_nb_exact, neg_moment_pareto,
    neg_moment_pareto_exact, pareto_max_cdf, pareto_max_sample, MixingLaw, SizeKind, SizeModel,
};
