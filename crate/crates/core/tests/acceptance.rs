//! Acceptance suite. One PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails.

use rss_median::mc::{convergence_study, dkw_bound, fit_slope, simulate_random_median, sup_distance, three_limits_demo};
use rss_median::median::{median_cdf_fixed, MedianExpansionTerms, Normalizer};
use rss_median::mixture::{laplace_limit, mixture_cdf_numeric, student_limit, Order, RandomMedianApprox};
use rss_median::quantiles::{b2_closed, cf_quantile, cf_transfer};
use rss_median::report::study_json;
use rss_median::size::{
    neg_moment_nb, neg_moment_nb_exact, neg_moment_pareto, neg_moment_pareto_exact, residual_scan_limit,
    size_residual, SizeModel,
};
use rss_median::{DensityKind, ParentDensity, SimConfig};
use std::time::{Duration, Instant};

type Check = std::result::Result<(bool, String), String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn slope(ns: &[u64], ds: &[f64]) -> f64 {
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    fit_slope(&nf, ds, 0.0).slope.unwrap_or(f64::NAN)
}

fn x_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step).round() as usize;
    (0..=k).map(|i| lo + step * i as f64).collect()
}

fn parents() -> Vec<ParentDensity> {
    [
        DensityKind::Normal,
        DensityKind::StudentT { nu: 3.0 },
        DensityKind::Triangular { a: 1.5 },
        DensityKind::Uniform { a: 2.0 },
        DensityKind::Laplace { mu: 1.0 },
    ]
    .into_iter()
    .map(|k| ParentDensity::new(k).unwrap())
    .collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn mixture_identities() -> Check {
    let normal = ParentDensity::normal();
    let xs = x_grid(-5.0, 5.0, 0.1);
    let mut worst: f64 = 0.0;
    for r in [0.75, 1.0, 2.0, 3.0] {
        let m = SizeModel::neg_binomial(r, 100).map_err(err)?;
        for &x in &xs {
            let v = mixture_cdf_numeric(x, &m, &normal, Order::LimitOnly).map_err(err)?;
            worst = worst.max((v - student_limit(x, r).0).abs());
        }
    }
    for s in [0.5, 1.0, 2.0] {
        let m = SizeModel::pareto_max(s, 100).map_err(err)?;
        for &x in &xs {
            let v = mixture_cdf_numeric(x, &m, &normal, Order::LimitOnly).map_err(err)?;
            worst = worst.max((v - laplace_limit(x, s).0).abs());
        }
    }
    Ok((worst <= 1e-8, format!("max deviation {worst:.2e} (tolerance 1e-8)")))
}

fn size_rate(model: impl Fn(u64) -> SizeModel, ns: &[u64]) -> f64 {
    let ds: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let m = model(n);
            size_residual(&m, residual_scan_limit(&m)).second
        })
        .collect();
    slope(ns, &ds)
}

fn nb_size_rate() -> Check {
    let ns = [10, 30, 100, 300, 1000];
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [0.75f64, 1.5, 2.5] {
        let s = size_rate(|n| SizeModel::neg_binomial(r, n).unwrap(), &ns);
        let bound = -r.min(2.0) + 0.2;
        ok &= s <= bound;
        parts.push(format!("r={r}: {s:.3} (<= {bound:.2})"));
    }
    Ok((ok, parts.join(", ")))
}

fn pareto_size_rate() -> Check {
    let ns = [10, 30, 100, 300, 1000];
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [0.5, 1.0, 2.0] {
        let sl = size_rate(|n| SizeModel::pareto_max(s, n).unwrap(), &ns);
        ok &= sl <= -1.8;
        parts.push(format!("s={s}: {sl:.3}"));
    }
    let c = 8.0 * (-2f64).exp() / 3.0;
    let mut worst: f64 = 0.0;
    for n in (2..=100).chain([300, 1000]) {
        let m = SizeModel::pareto_max(1.0, n).map_err(err)?;
        let d = size_residual(&m, residual_scan_limit(&m)).first;
        worst = worst.max(d * n as f64 / c);
    }
    ok &= worst <= 1.0;
    parts.push(format!("first-order bound used at {:.1}% for n in 2..=100,300,1000", 100.0 * worst));
    Ok((ok, parts.join(", ")))
}

fn negative_moments() -> Check {
    let ns = [30, 100, 300, 1000, 3000];
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [0.75f64, 1.5, 2.5] {
        let bound = -r.min(2.0) + 0.2;
        for p in [0.5, 1.0, 1.5] {
            let ds: Vec<f64> = ns
                .iter()
                .map(|&n| Ok((neg_moment_nb_exact(p, r, n)? - neg_moment_nb(p, r, n)?).abs()))
                .collect::<rss_median::Result<_>>()
                .map_err(err)?;
            let s = slope(&ns, &ds);
            ok &= s <= bound;
            parts.push(format!("nb r={r} p={p}: {s:.2}"));
        }
    }
    for s in [0.5, 2.0] {
        for p in [0.5, 1.0, 1.5] {
            let ds: Vec<f64> = ns
                .iter()
                .map(|&n| Ok((neg_moment_pareto_exact(p, s, n)? - neg_moment_pareto(p, s, n)?).abs()))
                .collect::<rss_median::Result<_>>()
                .map_err(err)?;
            let sl = slope(&ns, &ds);
            ok &= sl <= -1.7;
            parts.push(format!("pareto s={s} p={p}: {sl:.2}"));
        }
    }
    Ok((ok, parts.join(", ")))
}

fn cornish_fisher_algebra() -> Check {
    let us = [-2.3, -1.6, -1.0, -0.5, 0.5, 1.0, 1.6, 2.3];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for parent in [ParentDensity::normal(), ParentDensity::laplace(1.0).unwrap()] {
        let mut approxes = Vec::new();
        for r in [1.5, 2.0, 3.0] {
            approxes.push(RandomMedianApprox::student(r, 100, &parent).map_err(err)?);
        }
        for s in [0.5, 1.0, 2.0] {
            approxes.push(RandomMedianApprox::laplace(s, 100, &parent).map_err(err)?);
        }
        approxes.push(RandomMedianApprox::fixed(100, Normalizer::MStar, &parent).map_err(err)?);
        for a in &approxes {
            for &u in &us {
                let (b1, b2) = cf_transfer(u, a).map_err(err)?;
                if b1 != -a.a1(u) {
                    return Ok((false, format!("b1 is not the exact negation of a1 at u = {u}")));
                }
                worst = worst.max((b2 - b2_closed(u, a)).abs());
                count += 1;
            }
        }
    }
    Ok((worst <= 1e-6, format!("{count} points, max |closed - transfer| = {worst:.2e}")))
}

fn round_trip() -> Check {
    let ns = [20, 50, 100, 300, 1000];
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for parent in [ParentDensity::normal(), ParentDensity::laplace(1.0).unwrap()] {
        for alpha in [0.9, 0.95, 0.99] {
            for model in 0..2 {
                let ds: Vec<f64> = ns
                    .iter()
                    .map(|&n| {
                        let a = if model == 0 {
                            RandomMedianApprox::student(2.0, n, &parent)?
                        } else {
                            RandomMedianApprox::laplace(1.0, n, &parent)?
                        };
                        Ok((a.cdf(cf_quantile(alpha, &a)?, Order::SecondOrder) - alpha).abs())
                    })
                    .collect::<rss_median::Result<_>>()
                    .map_err(err)?;
                let s = slope(&ns, &ds);
                ok &= s <= -1.0;
                worst = worst.max(s);
            }
        }
    }
    Ok((ok, format!("12 series (r=2 and s=1, two parents, three alphas), shallowest slope {worst:.3}")))
}

fn monte_carlo_dominance() -> Check {
    let reps = 1_000_000;
    let floor = dkw_bound(reps, 0.99);
    let normal = ParentDensity::normal();
    let lap = ParentDensity::laplace(1.0).unwrap();
    let mut cfgs = Vec::new();
    for n in [20, 100] {
        cfgs.push((format!("normal/nb r=2 n={n}"), SimConfig::random(normal, SizeModel::neg_binomial(2.0, n).unwrap(), reps, 11)));
    }
    for n in [20, 100] {
        cfgs.push((format!("laplace/pareto s=1 n={n}"), SimConfig::random(lap, SizeModel::pareto_max(1.0, n).unwrap(), reps, 12)));
    }
    for m in [21, 101] {
        cfgs.push((format!("normal/fixed m={m}"), SimConfig::fixed(normal, m, reps, 13)));
        cfgs.push((format!("laplace/fixed m={m}"), SimConfig::fixed(lap, m, reps, 14)));
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, cfg) in cfgs {
        let sim = simulate_random_median(&cfg).map_err(err)?;
        let a = cfg.approximation().map_err(err)?;
        let d0 = sup_distance(&sim.ecdf, |x| a.cdf(x, Order::LimitOnly));
        let d2 = sup_distance(&sim.ecdf, |x| a.cdf(x, Order::SecondOrder));
        ok &= d2 <= d0 + floor;
        parts.push(format!("{name}: {d2:.4} vs {d0:.4}"));
    }
    Ok((ok, format!("DKW floor {floor:.4}; {}", parts.join(", "))))
}

fn three_limits() -> Check {
    let reps = 1_000_000;
    let floor = dkw_bound(reps, 0.99);
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [2, 10, 100, 1000] {
        let d = three_limits_demo(n, reps, 2024, None).map_err(err)?;
        ok &= d.ks_normal < floor;
        parts.push(format!("n={n} normal KS {:.4}", d.ks_normal));
        if n == 1000 {
            ok &= d.ks_student2 < 0.01 && d.ks_laplace < 0.01;
            parts.push(format!("student-2 KS {:.4}, laplace KS {:.4}", d.ks_student2, d.ks_laplace));
        }
    }
    Ok((ok, format!("DKW floor {floor:.4}; {}", parts.join(", "))))
}

fn symmetry() -> Check {
    let xs = x_grid(-6.0, 6.0, 0.01);
    let mut worst: f64 = 0.0;
    let mut approxes = Vec::new();
    for p in parents() {
        for r in [0.4, 0.75, 2.0, 3.0] {
            approxes.push(RandomMedianApprox::student(r, 50, &p).map_err(err)?);
        }
        for s in [0.5, 1.0, 4.0] {
            approxes.push(RandomMedianApprox::laplace(s, 50, &p).map_err(err)?);
        }
        for m in [2, 21, 100] {
            approxes.push(RandomMedianApprox::fixed(m, Normalizer::MStar, &p).map_err(err)?);
            approxes.push(RandomMedianApprox::fixed(m, Normalizer::M, &p).map_err(err)?);
        }
    }
    for a in &approxes {
        for &x in &xs {
            for o in Order::ALL {
                worst = worst.max((a.cdf(x, o) + a.cdf(-x, o) - 1.0).abs());
            }
        }
    }
    for p in parents() {
        let t = MedianExpansionTerms::new(&p);
        for &x in &xs {
            let s = median_cdf_fixed(x, 33, &t, Normalizer::MStar).map_err(err)? + median_cdf_fixed(-x, 33, &t, Normalizer::MStar).map_err(err)?;
            worst = worst.max((s - 1.0).abs());
        }
    }
    let mut exact = true;
    for a in &approxes {
        for i in 1..1000 {
            let alpha = i as f64 / 1000.0;
            exact &= cf_quantile(1.0 - alpha, a).map_err(err)? == -cf_quantile(alpha, a).map_err(err)?;
        }
    }
    let ok = worst <= 1e-12 && exact;
    Ok((ok, format!("{} approximations, max |F(x)+F(-x)-1| = {worst:.1e}, quantiles exactly antisymmetric: {exact}", approxes.len() + 5)))
}

fn determinism() -> Check {
    let model = SizeModel::neg_binomial(2.0, 10).map_err(err)?;
    let mut cfg = SimConfig::random(ParentDensity::laplace(1.0).unwrap(), model, 20_000, 99);
    let mut study = |threads: usize| -> std::result::Result<String, String> {
        cfg.threads = Some(threads);
        let r = convergence_study(&cfg, &[10, 20, 40], &Order::ALL).map_err(err)?;
        study_json(&r).map_err(err)
    };
    let a = study(1)?;
    let b = study(8)?;
    let demo = |threads| -> std::result::Result<String, String> {
        let d = three_limits_demo(100, 200_000, 42, Some(threads)).map_err(err)?;
        rss_median::report::demo_json(&d).map_err(err)
    };
    let c = demo(1)?;
    let d = demo(8)?;
    let ok = a == b && c == d;
    Ok((ok, format!("study {} bytes, demo {} bytes, identical across 1 and 8 workers: {ok}", a.len(), c.len())))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("mixture identities", Duration::from_secs(60), mixture_identities),
        ("negative binomial size expansion rate", Duration::from_secs(120), nb_size_rate),
        ("Pareto-max size expansion rate and first-order bound", Duration::from_secs(60), pareto_size_rate),
        ("negative moment expansions", Duration::from_secs(120), negative_moments),
        ("Cornish-Fisher closed forms vs transfer", Duration::from_secs(1), cornish_fisher_algebra),
        ("quantile round trip", Duration::from_secs(60), round_trip),
        ("Monte Carlo second-order dominance", Duration::from_secs(300), monte_carlo_dominance),
        ("three limits demo", Duration::from_secs(120), three_limits),
        ("symmetry suite", Duration::from_secs(1), symmetry),
        ("determinism across worker counts", Duration::from_secs(300), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let res = f();
        let el = t.elapsed();
        let (pass, detail) = match res {
            Ok((pass, detail)) if el <= budget => (pass, detail),
            Ok((_, detail)) => (false, format!("{detail}; over time budget of {budget:?}")),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} [{:>2}] {name} ({:.2} s): {detail}", if pass { "PASS" } else { "FAIL" }, i + 1, el.as_secs_f64());
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
