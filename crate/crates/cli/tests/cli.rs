use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use composite_resolvent::descriptor::{parse_real, read_vector_csv};
use composite_resolvent::example::REFERENCE_STABLE_OUTPUT;
use tempfile::TempDir;

const EXAMPLE_PROBLEM: &str = r#"{"C": [[1,3,7,0,8],[2,4,5,8,7],[7,9,6,0,1],[2,0,1,4,7],[2,5,8,3,8]],
  "M": {"type": "l1", "dim": 5}, "lambda": 0.01, "y": [2, 4, -5, 3, 9]}"#;

fn compres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compres")).args(args).output().unwrap()
}

fn run_in(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    let mut all = vec![args[0], "--config", path.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    all.extend_from_slice(&args[1..]);
    compres(&all)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn zero_operator_returns_y() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"C": [[1,2],[3,4]], "M": {"type": "zero", "dim": 2}, "lambda": 0.7, "y": [0.3, -1.7]}}"#;
    let o = run_in(dir.path(), cfg, &["resolve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let x = read_vector_csv(&dir.path().join("x.csv")).unwrap();
    assert_eq!(x.as_slice(), &[0.3, -1.7]);
}

#[test]
fn example_config_reproduces_reference_vector() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(
        r#"{{"problem": {EXAMPLE_PROBLEM}, "options": {{"mu": 0.1, "alpha": 0.3, "tol": 1e-3, "max_iter": 500}}}}"#
    );
    let o = run_in(dir.path(), &cfg, &["resolve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let x = read_vector_csv(&dir.path().join("x.csv")).unwrap();
    for (v, r) in x.iter().zip(REFERENCE_STABLE_OUTPUT) {
        assert_eq!(format!("{v:.2}"), format!("{r:.2}"));
    }
}

#[test]
fn result_csv_round_trips_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"problem": {EXAMPLE_PROBLEM}, "options": {{"mu": 0.1, "record_history": true}}}}"#);
    let o = run_in(dir.path(), &cfg, &["resolve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("result.csv"));
    assert_eq!(rows.len(), 1);
    let x = read_vector_csv(&dir.path().join("x.csv")).unwrap();
    for (i, v) in x.iter().enumerate() {
        let parsed = parse_real(&rows[0][column(&header, &format!("x{}", i + 1))]).unwrap();
        assert_eq!(parsed.to_bits(), v.to_bits());
    }
    let iterations: usize = rows[0][column(&header, "iterations")].parse().unwrap();
    let (h, history) = csv_rows(&dir.path().join("history.csv"));
    assert_eq!(h, ["k", "step_norm"]);
    assert_eq!(history.len(), iterations);
}

#[test]
fn iteration_budget_exhaustion_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"problem": {EXAMPLE_PROBLEM}}}"#);
    let o = run_in(dir.path(), &cfg, &["resolve", "--max-iter", "1"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(dir.path().join("result.csv").exists());
}

#[test]
fn malformed_json_exits_1_with_line_number() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "{\"problem\":\n  {\"C\": [[1]],,}\n}", &["resolve"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn usage_and_mode_errors_exit_1() {
    assert_eq!(code(&compres(&["no-such-command"])), 1);
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"mode": "bench", "problem": {EXAMPLE_PROBLEM}}}"#);
    assert_eq!(code(&run_in(dir.path(), &cfg, &["resolve"])), 1);
    let o = compres(&["resolve"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(r#"{{"problem": {EXAMPLE_PROBLEM}, "options": {{"mu": 0.1, "tol": 1e-12}}}}"#);
    assert_eq!(code(&run_in(dir.path(), &cfg, &["resolve"])), 0);
    let x_path: PathBuf = dir.path().join("x.csv");

    let o = run_in(dir.path(), &cfg, &["verify", "--candidate", x_path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let mut x = read_vector_csv(&x_path).unwrap();
    x[2] += 1e-3;
    let bad = dir.path().join("bad.csv");
    composite_resolvent::descriptor::write_vector_csv(&bad, &x).unwrap();
    let o = run_in(dir.path(), &cfg, &["verify", "--candidate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let hidden = r#"{"problem": {"C": [[1,0],[0,1]], "M": {"type": "l1", "dim": 2, "resolvent_only": true},
      "lambda": 1, "y": [2, 0.5]}, "candidate": [1, 0]}"#;
    let o = run_in(dir.path(), hidden, &["verify"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn repro_report_is_deterministic_and_matches() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let o = compres(&["repro-example1", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let ra = fs::read(a.path().join("example1_report.txt")).unwrap();
    let rb = fs::read(b.path().join("example1_report.txt")).unwrap();
    assert_eq!(ra, rb);
    let text = String::from_utf8(ra).unwrap();
    assert!(text.contains("532.64"));
    assert!(text.contains("(1.86, 3.79, -5.27, 2.85, 8.69)"));
    assert!(text.contains("4.33"));
}

#[test]
fn compare_mcx_schemes_coincide_for_identity_and_unit_lambda() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"C": [[1,0,0],[0,1,0],[0,0,1]], "M": {"type": "l1", "dim": 3}, "lambda": 1,
      "y": [2, -0.4, 0.9]}, "mus": [0.5, 0.25]}"#;
    let o = run_in(dir.path(), cfg, &["compare-mcx"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("compare.csv"));
    assert_eq!(rows.len(), 4);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0][0], "single-parameter");
        assert_eq!(pair[1][0], "two-parameter");
        for name in ["x1", "x2", "x3", "iterations"] {
            let i = column(&header, name);
            assert_eq!(pair[0][i], pair[1][i], "{name}");
        }
    }
}

#[test]
fn bench_summary_reflects_families() {
    let cfg = r#"{"options": {"tol": 1e-8, "max_iter": 50000},
      "bench": {"instances": [
        {"family": "identity", "n": 4, "operator": "l1", "count": 2},
        {"family": "rank-deficient", "m": 4, "n": 3, "operator": "box"},
        {"family": "full-row-rank", "m": 3, "n": 5, "operator": "linear", "count": 2}],
       "mu": ["auto"], "alpha": [0.5]}}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let o = run_in(d.path(), cfg, &["bench", "--seed", "11"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let summary_a = fs::read(a.path().join("bench_summary.csv")).unwrap();
    assert_eq!(summary_a, fs::read(b.path().join("bench_summary.csv")).unwrap());

    let (header, rows) = csv_rows(&a.path().join("bench_summary.csv"));
    assert_eq!(rows.len(), 5);
    let get = |row: &Vec<String>, name: &str| row[column(&header, name)].clone();
    for row in &rows {
        assert_eq!(get(row, "converged"), "true");
        assert_eq!(get(row, "seed"), "11");
        assert!(a.path().join(get(row, "history")).exists());
        let q = parse_real(&get(row, "predicted_q")).unwrap();
        match get(row, "family").as_str() {
            "identity" => {
                assert!(get(row, "iterations").parse::<usize>().unwrap() < 100);
                assert_eq!(q, 0.0);
            }
            "rank-deficient" => assert!(q.is_nan()),
            _ => assert!(q > 0.0 && q < 1.0),
        }
    }
}

#[test]
fn lure_equilibrium_of_scalar_system() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"lure": {"A": [[2]], "b": [-3], "C": [[1]], "M": {"type": "l1", "dim": 1}}}"#;
    let o = run_in(dir.path(), cfg, &["lure-eq"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let x = read_vector_csv(&dir.path().join("x_star.csv")).unwrap();
    assert!((x[0] - 1.0).abs() <= 1e-8, "{x}");
    let (header, rows) = csv_rows(&dir.path().join("equilibrium.csv"));
    assert_eq!(rows[0][column(&header, "converged")], "true");
}

#[test]
fn resolve_sum_solves_box_plus_l1() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"problem": {"C": [[1,2],[0,1]], "M1": {"type": "l1", "dim": 2},
      "M2": {"type": "box", "dim": 2, "lower": [-1,-1], "upper": [1,1]}, "lambda": 1, "y": [3, -2]}}"#;
    let o = run_in(dir.path(), cfg, &["resolve-sum"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let x = read_vector_csv(&dir.path().join("x.csv")).unwrap();
    assert!((x[0] - 2.0).abs() <= 1e-8 && (x[1] + 1.0).abs() <= 1e-8, "{x}");
}
