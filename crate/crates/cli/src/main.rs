mod args;

use args::*;
use clap::Parser;
use rss_median::mc::{dkw_bound, sup_distance, DKW_CONFIDENCE};
use rss_median::median::Normalizer;
use rss_median::mixture::Order;
use rss_median::quantiles::cf_quantile_pair;
use rss_median::report::{fmt_f64, to_json, write_cdf_csv, write_quantile_csv, write_rows, write_study_csv};
use rss_median::{
    convergence_study, mixture_cdf_numeric, neg_moment_nb, neg_moment_nb_exact, neg_moment_pareto,
    neg_moment_pareto_exact, simulate_random_median, three_limits_demo, Error, RandomMedianApprox, Scaling, SimConfig,
};
use serde_json::json;
use std::io::Write;
use std::process::ExitCode;

/// Failures of the command itself, mapped onto exit codes.
enum Failure {
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Run = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// 2 for bad input, 3 for numerical failure.
fn exit_code(e: &Error) -> u8 {
    if e.is_validation() {
        2
    } else {
        3
    }
}

fn run(cli: &Cli) -> Run {
    match &cli.command {
        Command::Cdf(a) => cdf(a),
        Command::Quantile(a) => quantile(a),
        Command::Negmoment(a) => negmoment(a),
        Command::Simulate(a) => simulate(a, cli.threads),
        Command::Study(a) => study(a, cli.threads),
        Command::Demo3(a) => demo3(a, cli.threads),
    }
}

/// Hand the table writer a buffer, then send the bytes to `--out` or stdout.
fn emit(out: &OutputArgs, write: impl FnOnce(&mut Vec<u8>) -> rss_median::Result<()>) -> Run {
    let mut buf = Vec::new();
    write(&mut buf)?;
    match &out.out {
        Some(path) => std::fs::write(path, &buf)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&buf)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(out: &OutputArgs, value: &T) -> Run {
    emit(out, |buf| {
        let mut s = to_json(value)?;
        s.push('\n');
        buf.extend_from_slice(s.as_bytes());
        Ok(())
    })
}

fn approximation(model: &ModelArgs, parent: &ParentArgs) -> rss_median::Result<RandomMedianApprox> {
    let p = parent.density()?;
    match model.size_model()? {
        Some(m) => RandomMedianApprox::for_model(&m, &p),
        None => RandomMedianApprox::fixed(model.m, Normalizer::MStar, &p),
    }
}

fn cdf(a: &CdfArgs) -> Run {
    let xs = parse_grid(&a.x)?;
    let order = Order::from(a.order);
    let rows: Vec<[f64; 2]> = match a.method {
        Method::Closed => {
            let approx = approximation(&a.model, &a.parent)?;
            xs.iter().map(|&x| [x, approx.cdf(x, order)]).collect()
        }
        Method::Numeric => {
            let model = a.model.size_model()?.ok_or_else(|| {
                Error::Domain("the numeric method needs a random size model (nb or pareto)".into())
            })?;
            let parent = a.parent.density()?;
            xs.iter()
                .map(|&x| Ok([x, mixture_cdf_numeric(x, &model, &parent, order)?]))
                .collect::<rss_median::Result<_>>()?
        }
    };
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(&a.output, |buf| write_cdf_csv(buf, &rows)),
        Format::Json => {
            let v: Vec<_> = rows.iter().map(|r| json!({"x": r[0], "value": r[1]})).collect();
            emit_json(&a.output, &v)
        }
    }
}

fn quantile(a: &QuantileArgs) -> Run {
    let alphas = parse_alphas(&a.alpha)?;
    let approx = approximation(&a.model, &a.parent)?;
    let rows: Vec<[f64; 3]> = alphas
        .iter()
        .map(|&alpha| cf_quantile_pair(alpha, &approx).map(|(u, x)| [alpha, u, x]))
        .collect::<rss_median::Result<_>>()?;
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(&a.output, |buf| write_quantile_csv(buf, &rows)),
        Format::Json => {
            let v: Vec<_> = rows.iter().map(|r| json!({"alpha": r[0], "u": r[1], "quantile": r[2]})).collect();
            emit_json(&a.output, &v)
        }
    }
}

fn negmoment(a: &NegMomentArgs) -> Run {
    let ns: Vec<u64> = parse_list(&a.n, "size index")?;
    let rows: Vec<(u64, f64, f64)> = ns
        .iter()
        .map(|&n| match a.model {
            ModelName::Nb => Ok((n, neg_moment_nb(a.p, a.r, n)?, neg_moment_nb_exact(a.p, a.r, n)?)),
            ModelName::Pareto => Ok((n, neg_moment_pareto(a.p, a.s, n)?, neg_moment_pareto_exact(a.p, a.s, n)?)),
            ModelName::Fixed => Err(Error::Domain("negative moments need a random size model (nb or pareto)".into())),
        })
        .collect::<rss_median::Result<_>>()?;
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|&(n, e, x)| vec![n.to_string(), fmt_f64(a.p), fmt_f64(e), fmt_f64(x)])
                .collect();
            emit(&a.output, |buf| write_rows(buf, &["n", "p", "expansion", "exact"], &table))
        }
        Format::Json => {
            let v: Vec<_> =
                rows.iter().map(|&(n, e, x)| json!({"n": n, "p": a.p, "expansion": e, "exact": x})).collect();
            emit_json(&a.output, &v)
        }
    }
}

fn sim_config(s: &SimArgs, threads: Option<usize>) -> rss_median::Result<SimConfig> {
    let parent = s.parent.density()?;
    let mut cfg = match s.model.size_model()? {
        Some(model) => {
            let mut c = SimConfig::random(parent, model, s.reps, s.seed);
            c.scaling = match s.scaling {
                ScalingName::Mixed => Scaling::MixedNStar,
                ScalingName::Plain => Scaling::PlainGn,
            };
            c
        }
        None => SimConfig::fixed(parent, s.model.m, s.reps, s.seed),
    };
    cfg.theta = s.theta;
    cfg.threads = threads;
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(a: &SimulateArgs, threads: Option<usize>) -> Run {
    let xs = parse_grid(&a.x)?;
    let cfg = sim_config(&a.sim, threads)?;
    let sim = simulate_random_median(&cfg)?;
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let rows: Vec<[f64; 2]> = xs.iter().map(|&x| [x, sim.ecdf.eval(x)]).collect();
            emit(&a.output, |buf| write_cdf_csv(buf, &rows))
        }
        Format::Json => {
            let approx = cfg.approximation()?;
            let d = |o| sup_distance(&sim.ecdf, |x| approx.cdf(x, o));
            let v = json!({
                "config": cfg,
                "replications": sim.replications,
                "n_star_zero": sim.n_star_zero,
                "dkw_floor": dkw_bound(sim.ecdf.count() as u64, DKW_CONFIDENCE),
                "d_limit": d(Order::LimitOnly),
                "d_first": d(Order::FirstOrder),
                "d_second": d(Order::SecondOrder),
            });
            emit_json(&a.output, &v)
        }
    }
}

fn study(a: &StudyArgs, threads: Option<usize>) -> Run {
    let ns: Vec<u64> = parse_list(&a.ns, "size index")?;
    let cfg = sim_config(&a.sim, threads)?;
    let orders: Vec<Order> = a.orders.iter().map(|&o| o.into()).collect();
    let report = convergence_study(&cfg, &ns, &orders)?;
    match a.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&a.output, &report),
        Format::Csv => emit(&a.output, |buf| write_study_csv(buf, &report)),
    }
}

fn demo3(a: &Demo3Args, threads: Option<usize>) -> Run {
    let d = three_limits_demo(a.n, a.reps, a.seed, threads)?;
    match a.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&a.output, &d),
        Format::Csv => {
            let row = vec![
                d.n.to_string(),
                d.replications.to_string(),
                d.seed.to_string(),
                fmt_f64(d.ks_normal),
                fmt_f64(d.ks_student2),
                fmt_f64(d.ks_laplace),
                fmt_f64(d.dkw_floor),
            ];
            let header = ["n", "replications", "seed", "ks_normal", "ks_student2", "ks_laplace", "dkw_floor"];
            emit(&a.output, |buf| write_rows(buf, &header, &[row]))
        }
    }
}
