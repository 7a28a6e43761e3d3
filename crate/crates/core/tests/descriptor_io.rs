use std::fs;

use composite_resolvent::descriptor::*;
use composite_resolvent::{solve_algorithm2, Error};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3..1e3f64]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn vector_csv_round_trip_is_bit_exact(values in prop::collection::vec(finite(), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        let v = DVector::from_vec(values);
        write_vector_csv(&path, &v).unwrap();
        let back = read_vector_csv(&path).unwrap();
        prop_assert_eq!(back.len(), v.len());
        for (a, b) in back.iter().zip(v.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn matrix_csv_round_trip_is_bit_exact(rows in 1usize..6, cols in 1usize..6, seed in prop::collection::vec(finite(), 36)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_fn(rows, cols, |i, j| seed[i * 6 + j]);
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        for (a, b) in back.iter().zip(m.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn json_descriptor_round_trip(values in prop::collection::vec(finite(), 1..6), lambda in 1e-3..10.0f64) {
        let n = values.len();
        let desc = ProblemDescriptor {
            c: MatrixSource::inline(&DMatrix::identity(n, n)),
            m: Some(OperatorDescriptor { kind: OperatorKind::L1 { dim: n }, scale: Some(0.5), resolvent_only: false }),
            m1: None,
            m2: None,
            lambda,
            y: VectorSource::inline(&DVector::from_vec(values)),
        };
        let text = serde_json::to_string(&desc).unwrap();
        let back: ProblemDescriptor = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, desc);
    }
}

#[test]
fn malformed_csv_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "1,2\n3,4\n5,oops\n").unwrap();
    match read_matrix_csv(&path) {
        Err(Error::Format { message, .. }) => assert!(message.contains("line 3"), "{message}"),
        other => panic!("expected a format error, got {other:?}"),
    }
    fs::write(&path, "1,2\n3\n").unwrap();
    assert!(matches!(read_matrix_csv(&path), Err(Error::Format { .. })));
    fs::write(&path, "1,2\n3,4\n").unwrap();
    assert!(matches!(read_vector_csv(&path), Err(Error::Format { .. })));
    assert!(matches!(read_matrix_csv(&dir.path().join("missing.csv")), Err(Error::Io { .. })));
}

#[test]
fn malformed_json_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"C\": [[1]],\n  \"lambda\": ,\n}\n").unwrap();
    match read_json::<ProblemDescriptor>(&path) {
        Err(Error::Format { message, .. }) => assert!(message.contains("line 3"), "{message}"),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn problem_with_csv_references_solves() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.csv"), "1,3,7,0,8\n2,4,5,8,7\n7,9,6,0,1\n2,0,1,4,7\n2,5,8,3,8\n").unwrap();
    fs::write(dir.path().join("y.csv"), "2\n4\n-5\n3\n9\n").unwrap();
    let json = r#"{"C": {"csv": "c.csv"}, "M": {"type": "l1", "dim": 5}, "lambda": 0.01, "y": {"csv": "y.csv"}}"#;
    fs::write(dir.path().join("problem.json"), json).unwrap();
    let desc: ProblemDescriptor = read_json(&dir.path().join("problem.json")).unwrap();
    let loaded = desc.load(dir.path()).unwrap();
    let opts: OptionsDescriptor = serde_json::from_str(r#"{"mu": 0.1, "alpha": 0.3, "tol": 1e-3, "max_iter": 500}"#).unwrap();
    let rep = solve_algorithm2(&loaded.resolvent_problem().unwrap(), &opts.to_options().unwrap()).unwrap();
    let rounded: Vec<f64> = rep.x.iter().map(|v| (v * 100.0).round() / 100.0).collect();
    assert_eq!(rounded, vec![1.86, 3.79, -5.27, 2.85, 8.69]);
    assert!(loaded.sum_problem().is_err());
}

#[test]
fn lure_descriptor_defaults() {
    let json = r#"{"A": [[1]], "b": [-2], "C": [[1]], "P": "auto-identity", "M": {"type": "l1", "dim": 1}}"#;
    let desc: LureDescriptor = serde_json::from_str(json).unwrap();
    let sys = desc.load(std::path::Path::new(".")).unwrap();
    assert_eq!(sys.state_dim(), 1);
    let bad = r#"{"A": [[1]], "b": [-2], "B": [[2]], "C": [[1]], "P": "auto-identity", "M": {"type": "l1", "dim": 1}}"#;
    let desc: LureDescriptor = serde_json::from_str(bad).unwrap();
    assert!(matches!(desc.load(std::path::Path::new(".")), Err(Error::InvalidArgument(_))));
}
