use rss_median::{cf_quantile_pareto, student_second_order, ParentDensity};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rss-median"));
    c.env_remove("RSS_MEDIAN_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn cdf_table_matches_library() {
    let o = run(&["cdf", "--model", "nb", "--r", "2", "--n", "100", "--parent", "normal", "--order", "second", "--x", "-3:3:0.5"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "x,value");
    assert_eq!(lines.len(), 14);
    let normal = ParentDensity::normal();
    for line in &lines[1..] {
        let (x, v) = line.split_once(',').unwrap();
        let (x, v): (f64, f64) = (x.parse().unwrap(), v.parse().unwrap());
        assert_eq!(v, student_second_order(x, 2.0, 100, &normal).unwrap());
    }
}

#[test]
fn quantile_table_matches_library() {
    let o = run(&["quantile", "--model", "pareto", "--s", "1", "--n", "400", "--parent", "laplace", "--alpha", "0.9,0.95,0.99"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "alpha,u,quantile");
    assert_eq!(lines.len(), 4);
    let lap = ParentDensity::laplace(1.0).unwrap();
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f[2], cf_quantile_pareto(f[0], 1.0, 400, &lap).unwrap());
    }
}

#[test]
fn json_round_trips_exactly() {
    let o = run(&["quantile", "--model", "pareto", "--s", "1", "--n", "400", "--parent", "laplace", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lap = ParentDensity::laplace(1.0).unwrap();
    for row in v.as_array().unwrap() {
        let alpha = row["alpha"].as_f64().unwrap();
        assert_eq!(row["quantile"].as_f64().unwrap(), cf_quantile_pareto(alpha, 1.0, 400, &lap).unwrap());
    }
}

#[test]
fn validation_errors_exit_two() {
    let o = run(&["cdf", "--parent", "cauchy"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("normal") && err.contains("laplace"), "{err}");
    assert_eq!(run(&["cdf", "--x", "1:0:0.1"]).status.code(), Some(2));
    assert_eq!(run(&["quantile", "--alpha", "0.5,1.5"]).status.code(), Some(2));
    assert_eq!(run(&["cdf", "--model", "nb", "--r", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["cdf", "--model", "fixed", "--method", "numeric"]).status.code(), Some(2));
    assert_eq!(run(&["study", "--ns", "10,20", "--reps", "100"]).status.code(), Some(2));
}

#[test]
fn demo3_is_byte_identical() {
    let args = ["demo3", "--n", "100", "--reps", "50000", "--seed", "42"];
    let a = run(&args);
    let b = bin().args(args).env("RSS_MEDIAN_THREADS", "8").output().unwrap();
    let c = run(&[&args[..], &["--threads", "1"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn study_json_has_documented_keys() {
    let args = ["study", "--model", "nb", "--r", "2", "--ns", "10,20,40", "--reps", "5000", "--seed", "3"];
    let a = bin().args(args).env("RSS_MEDIAN_THREADS", "1").output().unwrap();
    let b = bin().args(args).env("RSS_MEDIAN_THREADS", "8").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let schema: serde_json::Value = serde_json::from_str(rss_median::report::STUDY_REPORT_SCHEMA).unwrap();
    let keys = |s: &serde_json::Value| -> Vec<String> {
        s["required"].as_array().unwrap().iter().map(|k| k.as_str().unwrap().to_string()).collect()
    };
    let obj = v.as_object().unwrap();
    let top = keys(&schema);
    assert_eq!(obj.len(), top.len());
    for k in &top {
        assert!(obj.contains_key(k), "missing {k}");
    }
    for k in keys(&schema["properties"]["config"]) {
        assert!(v["config"].get(&k).is_some(), "missing config.{k}");
    }
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        for k in keys(&schema["properties"]["rows"]["items"]) {
            assert!(row.get(&k).is_some(), "missing row key {k}");
        }
    }
    assert_eq!(v["seed"], 3);
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("rss-median-cli-test-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let o = run(&["negmoment", "--model", "nb", "--r", "2.5", "--p", "1", "--n", "10,100", "--out", p]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let s = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "n,p,expansion,exact");
    assert_eq!(lines.len(), 3);
    let f: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((f[2] - f[3]).abs() < 1e-3 * f[3]);
}

#[test]
fn simulate_emits_step_function() {
    let o = run(&["simulate", "--model", "fixed", "--m", "11", "--reps", "2000", "--x", "-1:1:0.5", "--theta", "-3"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let vals: Vec<f64> = s.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(vals.len(), 5);
    assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    let o = run(&["simulate", "--model", "pareto", "--s", "1", "--n", "20", "--reps", "2000", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["d_second"].as_f64().unwrap() < 0.1);
}
