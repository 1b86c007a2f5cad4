//! Reference values and cross-checks that span several modules.

use approx::assert_relative_eq;
use rss_median::mc::{convergence_study, dkw_bound, ks_distance, simulate_random_median};
use rss_median::mixture::{laplace_limit, mixture_cdf_numeric, student_limit, Order, RandomMedianApprox};
use rss_median::quantiles::{b2_nb, cf_transfer, invert_cdf, InversionMode};
use rss_median::{
    cf_quantile_fixed, cf_quantile_nb, fit_slope, median_cdf_fixed, student_second_order, MedianExpansionTerms,
    Normalizer, ParentDensity, SimConfig, SizeModel,
};

#[test]
fn limit_law_reference_values() {
    assert_relative_eq!(student_limit(1.0, 1.0).0, 0.788_675_134_594_812_9, max_relative = 1e-14);
    assert_relative_eq!(student_limit(1.0, 1.0).1, 0.192_450_089_729_875_25, max_relative = 1e-13);
    assert_relative_eq!(laplace_limit(1.0, 1.0).0, 0.878_441_632_782_892_9, max_relative = 1e-14);
    assert_relative_eq!(laplace_limit(-1.0, 2.0).0, 0.067_667_641_618_306_35, max_relative = 1e-14);
}

#[test]
fn quadrature_reproduces_limit_laws() {
    let normal = ParentDensity::normal();
    let nb = SizeModel::neg_binomial(2.0, 50).unwrap();
    let v = mixture_cdf_numeric(1.0, &nb, &normal, Order::LimitOnly).unwrap();
    assert!((v - student_limit(1.0, 2.0).0).abs() < 1e-8);
    let par = SizeModel::pareto_max(1.0, 50).unwrap();
    let v = mixture_cdf_numeric(1.0, &par, &normal, Order::LimitOnly).unwrap();
    assert!((v - laplace_limit(1.0, 1.0).0).abs() < 1e-8);
}

#[test]
fn closed_form_tracks_numeric_mixture() {
    let lap = ParentDensity::laplace(1.0).unwrap();
    let ns = [20u64, 50, 100, 300];
    let xs: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.25).collect();
    for r in [1.5f64, 2.0, 3.0] {
        let ds: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let m = SizeModel::neg_binomial(r, n).unwrap();
                xs.iter()
                    .map(|&x| {
                        let num = mixture_cdf_numeric(x, &m, &lap, Order::SecondOrder).unwrap();
                        (student_second_order(x, r, n, &lap).unwrap() - num).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let slope = fit_slope(&nf, &ds, 0.0).slope.unwrap();
        assert!(slope <= -r.min(1.5) + 0.25, "r = {r}: slope {slope}, {ds:?}");
    }
}

#[test]
fn transfer_agrees_with_student_closed_form() {
    let normal = ParentDensity::normal();
    let a = RandomMedianApprox::student(2.0, 100, &normal).unwrap();
    let (_, b2) = cf_transfer(1.6, &a).unwrap();
    assert!((b2 - b2_nb(1.6, 2.0, &a.terms)).abs() < 1e-6);
}

#[test]
fn fixed_quantile_agrees_with_numeric_inversion() {
    let normal = ParentDensity::normal();
    let t = MedianExpansionTerms::new(&normal);
    let cf = cf_quantile_fixed(0.95, 100, &normal).unwrap();
    // u + (-3u/4 - (u^3/4)(1 - pi/3)) / 100 with u the normal 95% point
    assert_relative_eq!(cf, 1.633_042_323_814_708_4, max_relative = 1e-14);
    let inv = invert_cdf(|x| median_cdf_fixed(x, 100, &t, Normalizer::MStar).unwrap(), 0.95, -6.0, 6.0, InversionMode::Monotone).unwrap();
    assert!((inv - cf).abs() < 1e-4);
}

#[test]
fn student_quantile_round_trip_improves_on_plain_quantile() {
    let normal = ParentDensity::normal();
    let x = cf_quantile_nb(0.95, 2.0, 100, &normal).unwrap();
    let u = rss_median::special::student_quantile(0.95, 4.0);
    let err_cf = (student_second_order(x, 2.0, 100, &normal).unwrap() - 0.95).abs();
    let err_u = (student_second_order(u, 2.0, 100, &normal).unwrap() - 0.95).abs();
    assert!(err_cf < err_u / 10.0, "{err_cf} vs {err_u}");
}

#[test]
fn simulated_medians_approach_their_limits() {
    let normal = ParentDensity::normal();
    let reps = 200_000;
    let cfg = SimConfig::random(normal, SizeModel::neg_binomial(2.0, 100).unwrap(), reps, 8);
    let sim = simulate_random_median(&cfg).unwrap();
    assert!(ks_distance(&sim.ecdf, |x| student_limit(x, 2.0).0) < 0.01);
    let cfg = SimConfig::random(normal, SizeModel::pareto_max(1.0, 100).unwrap(), reps, 9);
    let sim = simulate_random_median(&cfg).unwrap();
    assert!(ks_distance(&sim.ecdf, |x| laplace_limit(x, 1.0).0) < 0.01);
}

#[test]
fn second_order_rate_for_normal_parent() {
    let cfg = SimConfig::random(ParentDensity::normal(), SizeModel::neg_binomial(2.0, 4).unwrap(), 1_000_000, 5);
    let rep = convergence_study(&cfg, &[4, 8, 16, 32], &[Order::LimitOnly, Order::SecondOrder]).unwrap();
    let fit = rep.slopes.second.unwrap();
    assert!(fit.points >= 3);
    assert!(fit.slope.unwrap() <= -0.75, "{:?}", rep.rows);
    // Normal parent: first order adds nothing
    assert!(rep.slopes.first.is_none());
    assert_eq!(rep.dkw_floor, dkw_bound(1_000_000, 0.99));
}

#[test]
fn first_order_helps_for_laplace_parent() {
    let cfg = SimConfig::random(ParentDensity::laplace(1.0).unwrap(), SizeModel::pareto_max(1.0, 20).unwrap(), 200_000, 5);
    let rep = convergence_study(&cfg, &[20, 50, 100, 200], &[Order::LimitOnly, Order::FirstOrder]).unwrap();
    for row in &rep.rows {
        assert!(row.d_first.unwrap() < row.d_limit.unwrap(), "{row:?}");
    }
}
