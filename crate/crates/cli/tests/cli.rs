use std::path::PathBuf;
use std::process::{Command, Output};

use pbprior::quantile::{fmt_real, optimal_requirement};
use pbprior::risk_prior::pushforward;
use pbprior::test_bounds::{comparisons_to_csv, DEFAULT_TIE_TOL};
use pbprior::uninformed::cluster_rows_to_csv;
use pbprior::{
    catoni_bound, catoni_min_bound, compare_records, gibbs_posterior, invert_test_bound,
    parse_records, qbar_cat_lambda, sweep_cluster_masses, sweep_requirement_curve,
    temperature_window, theorem3_requirement, CatoniParams, DiscreteRiskPrior,
    FinitePredictorSpace, PosteriorWeights, Scenario, TargetSpec,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbprior"))
        .args(args)
        .env_remove("PBPRIOR_OUTPUT_DIR")
        .output()
        .expect("spawn pbprior")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "pbprior {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn mnist() -> TargetSpec {
    TargetSpec::new(0.015, 60_000, 0.035).unwrap()
}

#[test]
fn testbound_matches_library() {
    let got = stdout(&[
        "testbound",
        "--mean",
        "0.077",
        "--n",
        "1840",
        "--delta",
        "0.035",
    ]);
    let b: f64 = invert_test_bound(0.077, 1840, 0.035).unwrap();
    assert_eq!(
        got,
        format!(
            "mean,n,delta,test_bound\n0.077,1840,0.035,{}\n",
            fmt_real(b)
        )
    );
    assert!((b - 0.0941).abs() < 5e-5);
}

#[test]
fn window_matches_library() {
    let got = stdout(&["window", "--G", "0.015", "--n", "60000", "--delta", "0.035"]);
    let w = temperature_window(&mnist()).unwrap();
    let expected = format!(
        "lambda_min,lambda_max,lambda_opt,lambda_thresh,r_thresh\n{},{},{},{},{}\n",
        fmt_real(w.lambda_min),
        fmt_real(w.lambda_max),
        fmt_real(w.lambda_opt),
        fmt_real(w.lambda_thresh),
        fmt_real(w.r_thresh)
    );
    assert_eq!(got, expected);
    assert!(got.contains(",0.00971447"));
    // defaults are the same target
    assert_eq!(stdout(&["window"]), expected);
}

#[test]
fn theorem3_matches_library() {
    let got = stdout(&["theorem3", "--alpha", "0.1"]);
    let p = theorem3_requirement(&mnist(), 0.1).unwrap();
    assert_eq!(
        got,
        format!("r_alpha,q_alpha\n{},{}\n", fmt_real(p.r), fmt_real(p.qbar))
    );
    assert!((p.qbar / 5.3e-12 - 1.0).abs() < 0.15);
}

#[test]
fn quantile_fixed_and_free_temperature() {
    let got = stdout(&["quantile", "--r", "0.05", "--lambda", "0.001"]);
    let q = qbar_cat_lambda(0.05, &mnist(), 0.001).unwrap();
    assert_eq!(got, format!("r,lambda,qbar\n0.05,0.001,{}\n", fmt_real(q)));

    let got = stdout(&["quantile", "--r", "0.01"]);
    let (lambda, q) = optimal_requirement(0.01, &mnist()).unwrap();
    assert_eq!(
        got,
        format!("r,lambda,qbar\n0.01,{},{}\n", fmt_real(lambda), fmt_real(q))
    );

    let got = stdout(&["quantile", "--r", "0.005"]);
    assert!(got.ends_with(",0\n"), "{got}");
}

#[test]
fn bound_variants_match_library() {
    let params = CatoniParams::new(500, 0.05, 0.01).unwrap();
    let space = FinitePredictorSpace::new(vec![0.0, 0.5], vec![0.5, 0.5]).unwrap();
    let common = ["--lambda", "0.01", "--n", "500", "--delta", "0.05"];

    let mut args = vec!["bound", "--risks", "0,0.5", "--masses", "0.5,0.5"];
    args.extend(common);
    let min = catoni_min_bound(&pushforward(&space), &params);
    assert_eq!(
        stdout(&args),
        format!("lambda,bound\n0.01,{}\n", fmt_real(min))
    );

    let prior = fixture("two_point_prior.csv");
    let mut args = vec!["bound", "--prior", prior.to_str().unwrap()];
    args.extend(common);
    assert_eq!(
        stdout(&args),
        format!("lambda,bound\n0.01,{}\n", fmt_real(min))
    );

    let mut args = vec![
        "bound",
        "--risks",
        "0,0.5",
        "--masses",
        "0.5,0.5",
        "--posterior",
        "0.9,0.1",
    ];
    args.extend(common);
    let b = catoni_bound(
        &PosteriorWeights::new(vec![0.9, 0.1]).unwrap(),
        &space,
        &params,
    )
    .unwrap();
    assert_eq!(
        stdout(&args),
        format!("lambda,bound\n0.01,{}\n", fmt_real(b))
    );

    let mut args = vec!["bound", "--risks", "0.1", "--masses", "1"];
    args.extend(common);
    let dirac = catoni_min_bound(&DiscreteRiskPrior::dirac(0.1).unwrap(), &params);
    assert_eq!(
        stdout(&args),
        format!("lambda,bound\n0.01,{}\n", fmt_real(dirac))
    );
}

#[test]
fn gibbs_matches_library() {
    let got = stdout(&[
        "gibbs", "--risks", "0,0.5", "--masses", "0.5,0.5", "--lambda", "0.01",
    ]);
    let space = FinitePredictorSpace::new(vec![0.0, 0.5], vec![0.5, 0.5]).unwrap();
    let w = gibbs_posterior(&space, 0.01).unwrap();
    let expected = format!(
        "risk,prior_mass,posterior_mass\n0,0.5,{}\n0.5,0.5,{}\n",
        fmt_real(w.masses()[0]),
        fmt_real(w.masses()[1])
    );
    assert_eq!(got, expected);
}

#[test]
fn table2_matches_library() {
    let text = std::fs::read_to_string(fixture("table2.csv")).unwrap();
    let records = parse_records::<f64>(&text).unwrap();
    let rows = compare_records(&records, 0.035, DEFAULT_TIE_TOL).unwrap();
    let expected = comparisons_to_csv(&rows);
    assert_eq!(stdout(&["table2"]), expected);
    let path = fixture("table2.csv");
    assert_eq!(
        stdout(&["table2", "--input", path.to_str().unwrap()]),
        expected
    );
}

#[test]
fn figures_match_library() {
    let grid: Vec<f64> = (0..5).map(|i| 0.002 + 0.098 * i as f64 / 4.0).collect();
    let grid_args = ["--r-min", "0.002", "--r-max", "0.1", "--points", "5"];

    let lambda_opt = temperature_window(&mnist()).unwrap().lambda_opt;
    let curve = sweep_requirement_curve(&mnist(), &grid, Some(&[lambda_opt])).unwrap();
    let mut args = vec!["figure1"];
    args.extend(grid_args);
    assert_eq!(stdout(&args), curve.to_csv());

    let curve = sweep_requirement_curve(&mnist(), &grid, None).unwrap();
    let mut args = vec!["figure2"];
    args.extend(grid_args);
    let got = stdout(&args);
    assert_eq!(got, curve.to_csv());
    assert_eq!(got.lines().count(), 1 + 41 * 5);

    let rows = sweep_cluster_masses(&[5, 10], &[2, 40], 0.015).unwrap();
    assert_eq!(
        stdout(&["figure3", "--k", "5,10", "--p", "2,40"]),
        cluster_rows_to_csv(&rows)
    );
    let default = stdout(&["figure3"]);
    assert_eq!(default.lines().count(), 1 + 19 * 6);
}

#[test]
fn coverage_matches_library() {
    let path = fixture("single_predictor.csv");
    let got = stdout(&["coverage", "--scenario", path.to_str().unwrap()]);
    let scenario = Scenario::from_fixture(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let report = scenario.run().unwrap();
    let json: serde_json::Value = serde_json::from_str(&got).unwrap();
    assert_eq!(json, serde_json::to_value(report).unwrap());
    let keys: Vec<&str> = got
        .lines()
        .skip(1)
        .take(4)
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    assert_eq!(keys, ["trials", "violations", "coverage", "wilson_low"]);
    assert!(report.coverage >= 0.9);

    let inline = stdout(&[
        "coverage", "--risks", "0.3", "--masses", "1", "--n", "50", "--lambda", "0.05", "--delta",
        "0.1", "--trials", "100", "--seed", "7",
    ]);
    assert_eq!(inline, got);

    let csv = stdout(&[
        "coverage",
        "--scenario",
        path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(csv.starts_with("trials,violations,coverage,wilson_low\n100,"));
}

#[test]
fn shipped_scenarios_hold() {
    for name in [
        "two_predictors.csv",
        "single_predictor.csv",
        "zero_risk.csv",
        "ladder.csv",
    ] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let scenario = Scenario::from_fixture(&text).unwrap();
        let report = scenario.run().unwrap();
        let delta = scenario.delta;
        assert!(
            report.wilson_low >= 1.0 - delta - 0.01,
            "{name}: wilson_low {} at delta {delta}",
            report.wilson_low
        );
    }
}

#[test]
fn json_format() {
    let got = stdout(&["theorem3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&got).unwrap();
    let p = theorem3_requirement(&mnist(), 0.1).unwrap();
    assert_eq!(v["r_alpha"].as_f64(), Some(p.r));
    assert_eq!(v["q_alpha"].as_f64(), Some(p.qbar));

    let got = stdout(&["table2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&got).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 14);
    assert_eq!(v[3]["winner"], "PAC_BAYES");
}

#[test]
fn output_destinations() {
    let dir = std::env::temp_dir().join(format!("pbprior-cli-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);

    let out = Command::new(env!("CARGO_BIN_EXE_pbprior"))
        .args(["window"])
        .env("PBPRIOR_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(dir.join("window.csv")).unwrap();
    assert_eq!(written, stdout(&["window"]));

    let explicit = dir.join("nested").join("t3.json");
    let out = Command::new(env!("CARGO_BIN_EXE_pbprior"))
        .args([
            "theorem3",
            "--format",
            "json",
            "--output",
            explicit.to_str().unwrap(),
        ])
        .env("PBPRIOR_OUTPUT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(explicit.exists());
    assert!(!dir.join("theorem3.json").exists());

    // byte-deterministic
    let again = stdout(&["theorem3", "--format", "json"]);
    assert_eq!(std::fs::read_to_string(&explicit).unwrap(), again);
    std::fs::remove_dir_all(&dir).unwrap();
}

fn code(args: &[&str]) -> (i32, String) {
    let out = run(args);
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn exit_statuses() {
    assert_eq!(code(&["frobnicate"]).0, 2);
    assert_eq!(code(&["testbound"]).0, 2);

    let (status, stderr) = code(&["testbound", "--mean", "1.5"]);
    assert_eq!(status, 3);
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.contains("empirical_mean"));

    let (status, stderr) = code(&["window", "--G", "0.001"]);
    assert_eq!(status, 4);
    assert!(stderr.starts_with("UNREACHABLE"));
    assert_eq!(code(&["figure1", "--G", "0.001"]).0, 4);
    assert_eq!(code(&["quantile", "--G", "0.001", "--r", "0.1"]).0, 4);

    assert_eq!(code(&["table2", "--input", "/nonexistent/table.csv"]).0, 5);

    let bad = std::env::temp_dir().join(format!("pbprior-bad-{}.csv", std::process::id()));
    std::fs::write(
        &bad,
        "name,pac_bayes_bound,test_score,n_valid\nX,0.1,zero,100\n",
    )
    .unwrap();
    let (status, stderr) = code(&["table2", "--input", bad.to_str().unwrap()]);
    std::fs::remove_file(&bad).unwrap();
    assert_eq!(status, 6);
    assert!(stderr.contains("test_score"), "{stderr}");

    assert_eq!(
        code(&["gibbs", "--risks", "0,0.5", "--masses", "0.6,0.6", "--lambda", "0.1"]).0,
        3
    );
    assert_eq!(code(&["figure2", "--r-min", "0.2", "--r-max", "0.1"]).0, 3);
    assert_eq!(
        code(&[
            "coverage", "--risks", "0.1", "--masses", "1", "--n", "10", "--lambda", "0.1",
            "--trials", "5"
        ])
        .0,
        3
    );
}

#[test]
fn help_lists_every_subcommand() {
    let help = stdout(&["--help"]);
    for sub in [
        "bound",
        "gibbs",
        "quantile",
        "window",
        "theorem3",
        "testbound",
        "table2",
        "figure1",
        "figure2",
        "figure3",
        "coverage",
    ] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
}
