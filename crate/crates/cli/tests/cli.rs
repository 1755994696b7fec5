use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chebslide::demo;
use chebslide::risk::generate_synthetic_history;
use chebslide::ScenarioSet;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chebslide"));
    c.env_remove("CHEBSLIDE_THREADS");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(demo: &str, file: &str) -> String {
    fixtures().join(demo).join(file).to_string_lossy().into_owned()
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("no stderr output");
    serde_json::from_str::<Value>(line).unwrap()["error"].clone()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

/// The first `n` scenarios of the swaps demo history, written as CSV.
fn swaps_csv(dir: &Path, n: usize) -> PathBuf {
    let f = demo::fixture("swaps").unwrap();
    let path = dir.join("scenarios.csv");
    generate_synthetic_history(&f.synthetic, f.seed).unwrap().head(n).save(&path).unwrap();
    path
}

#[test]
fn missing_portfolio_file_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        &[
            "run",
            "--portfolio",
            "/nonexistent/portfolio.json",
            "--market",
            &fixture("swaps", "market.json"),
            "--synthetic",
            &fixture("swaps", "synthetic.json"),
            "--seed",
            "1",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_error(&out);
    assert_eq!(err["exit_code"], 2);
    assert_eq!(err["kind"], "configuration");
    assert!(err["message"].as_str().unwrap().contains("portfolio"));
}

#[test]
fn market_without_portfolio_is_rejected_by_the_parser() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["run", "--market", &fixture("swaps", "market.json")], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_backtest_window_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["backtest", "--demo", "swaps", "--window", "0"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["exit_code"], 2);
    assert!(!tmp.path().join("backtest.csv").exists());
}

#[test]
fn backtest_on_csv_history_has_one_row_per_window() {
    let tmp = TempDir::new().unwrap();
    let csv = swaps_csv(tmp.path(), 3000);
    let out_dir = tmp.path().join("out");
    let out = run(
        &[
            "backtest",
            "--portfolio",
            &fixture("swaps", "portfolio.json"),
            "--market",
            &fixture("swaps", "market.json"),
            "--scenarios",
            csv.to_str().unwrap(),
            "--window",
            "250",
        ],
        &out_dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out_dir.join("backtest.csv"));
    assert_eq!(rows.len(), 2751);
    assert_eq!(&rows[0][0], "249");
    assert_eq!(&rows[2750][0], "2999");
    // Window means hover near zero, so only the variance ratio is stable.
    for r in &rows {
        let v: f64 = r[2].parse().unwrap();
        assert!((0.8..1.25).contains(&v), "variance ratio {v}");
    }
}

#[test]
fn sweep_covers_the_grid_and_flags_bad_cells() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["sweep", "--demo", "swaps"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&tmp.path().join("sweep.csv"));
    assert_eq!(rows.len(), 12);

    let bad = tmp.path().join("bad");
    let out = run(&["sweep", "--demo", "swaps", "--dims", "3;500", "--tuples", "1x*"], &bad);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_path(bad.join("sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let kind = headers.iter().position(|h| h == "error_kind").unwrap();
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][kind], "");
    assert_eq!(&rows[1][kind], "parameter");
}

#[test]
fn single_cell_sweep_matches_run() {
    let tmp = TempDir::new().unwrap();
    let sweep_dir = tmp.path().join("sweep");
    let run_dir = tmp.path().join("run");
    assert!(run(&["sweep", "--demo", "swaps", "--dims", "5", "--tuples", "2,1x*"], &sweep_dir)
        .status
        .success());
    assert!(run(&["run", "--demo", "swaps", "--pca", "5", "--slider", "2,1x*"], &run_dir)
        .status
        .success());
    let mut reader = csv::Reader::from_path(sweep_dir.join("sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let row = reader.records().next().unwrap().unwrap();
    let col = |name: &str| row[headers.iter().position(|h| h == name).unwrap()].to_string();
    let report = read_json(&run_dir.join("report.json"));
    let h = &report["horizons"][0];
    assert_eq!(col("es_slider").parse::<f64>().unwrap(), h["es_slider"].as_f64().unwrap());
    assert_eq!(col("es_brute").parse::<f64>().unwrap(), h["es_brute"].as_f64().unwrap());
    assert_eq!(col("build_calls").parse::<u64>().unwrap(), h["calls"]["build_calls"].as_u64().unwrap());
}

fn assert_valid(schema_file: &str, doc: &Value) {
    let schema: Value = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(schema_file));
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}");
}

#[test]
fn outputs_match_their_schemas() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        &[
            "run",
            "--portfolio",
            &fixture("swaps", "portfolio.json"),
            "--market",
            &fixture("swaps", "market.json"),
            "--synthetic",
            &fixture("swaps", "synthetic.json"),
            "--seed",
            "3131",
            "--diagnostic",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&tmp.path().join("report.json"));
    assert_valid("report.schema.json", &report);
    assert_valid("slider.schema.json", &read_json(&tmp.path().join("slider.json")));
    assert_eq!(report["scenario_source"], "synthetic:synthetic.json");
    assert!(report["horizons"][0]["es_pca_repriced"].is_f64());

    let pnl = csv_rows(&tmp.path().join("pnl_10d.csv"));
    assert_eq!(pnl.len(), 3131);

    let mut broken = report.clone();
    broken["horizons"][0]["surprise"] = Value::Bool(true);
    let schema = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json"));
    assert!(!jsonschema::validator_for(&schema).unwrap().is_valid(&broken));
}

#[test]
fn committed_fixtures_match_the_generator() {
    let tmp = TempDir::new().unwrap();
    for name in demo::DEMO_NAMES {
        let dir = tmp.path().join(name);
        let out = bin().args(["demo", name, "--write-fixtures"]).arg(&dir).output().unwrap();
        assert!(out.status.success());
        for file in ["market.json", "portfolio.json", "synthetic.json"] {
            let fresh = fs::read_to_string(dir.join(file)).unwrap();
            let committed = fs::read_to_string(fixtures().join(name).join(file)).unwrap();
            assert!(fresh == committed, "fixtures/{name}/{file} is stale");
        }
    }
}

#[test]
fn negative_forwards_exit_with_numerical_code() {
    let tmp = TempDir::new().unwrap();
    let f = demo::fixture("swaptions").unwrap();
    let mut scen = generate_synthetic_history(&f.synthetic, f.seed).unwrap().head(20);
    for row in &mut scen.shocks {
        for (v, name) in row.iter_mut().zip(&scen.factor_names) {
            if !name.starts_with("vol:") {
                *v = -0.2;
            }
        }
    }
    let csv = tmp.path().join("crash.csv");
    ScenarioSet::save(&scen, &csv).unwrap();
    let out = run(
        &[
            "run",
            "--portfolio",
            &fixture("swaptions", "portfolio.json"),
            "--market",
            &fixture("swaptions", "market.json"),
            "--scenarios",
            csv.to_str().unwrap(),
        ],
        &tmp.path().join("out"),
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let err = stderr_error(&out);
    assert_eq!(err["exit_code"], 3);
    assert!(err["message"].as_str().unwrap().contains("scenario"));
}

#[test]
fn long_horizon_reuses_the_slider() {
    let tmp = TempDir::new().unwrap();
    let out = bin()
        .env("CHEBSLIDE_THREADS", "1")
        .args(["run", "--demo", "swaptions", "--pca", "20", "--horizons", "10d,60d", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&tmp.path().join("report.json"));
    let h = report["horizons"].as_array().unwrap();
    assert_eq!(h.len(), 2);
    assert_eq!(h[1]["horizon"], "60d");
    assert_eq!(h[1]["slider_reused"], true);
    assert_eq!(h[1]["calls"]["build_calls"], 0);
    assert_eq!(h[1]["calls"]["incremental_calls"], 0);
    assert_eq!(h[1]["savings"], 1.0);
    assert_eq!(h[0]["slider_reused"], false);
    assert!(h[0]["calls"]["build_calls"].as_u64().unwrap() > 0);
}

#[test]
fn unknown_horizon_and_bad_thread_count_are_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["run", "--demo", "swaps", "--horizons", "20d"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["kind"], "configuration");

    let out = bin()
        .env("CHEBSLIDE_THREADS", "many")
        .args(["run", "--demo", "swaps"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
