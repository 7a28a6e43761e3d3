use composite_resolvent::example::*;

#[test]
fn stable_rows_are_identical_across_mu() {
    let rows = stable_table(EXAMPLE_ALPHA).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(matches_two_decimals(&r.x, &REFERENCE_STABLE_OUTPUT), "mu {}: {}", r.mu, r.x);
    }
    assert!((rows[0].certificate - REFERENCE_CERTIFICATE).abs() <= 0.01);
}

#[test]
fn single_parameter_certificates() {
    let rows = mcx_table(EXAMPLE_ALPHA).unwrap();
    for (r, expected) in rows.iter().zip(REFERENCE_MCX_CERTIFICATES) {
        assert!((r.certificate - expected).abs() <= 0.005, "mu {}: {}", r.mu, r.certificate);
    }
}

#[test]
fn single_parameter_rows_drift_with_mu() {
    let rows = mcx_table(EXAMPLE_ALPHA).unwrap();
    for i in 1..rows.len() {
        for j in i + 1..rows.len() {
            assert!((&rows[i].x - &rows[j].x).amax() >= 0.5);
        }
    }
}

#[test]
fn reference_rows_under_complementary_weights() {
    let rows = mcx_table(REFERENCE_ALPHA).unwrap();
    for (r, expected) in rows.iter().zip(REFERENCE_MCX_OUTPUTS) {
        assert!(matches_two_decimals(&r.x, &expected), "mu {}: {}", r.mu, r.x);
        assert_eq!(r.iterations, EXAMPLE_MAX_ITER);
    }
    for r in stable_table(REFERENCE_ALPHA).unwrap() {
        assert!(matches_two_decimals(&r.x, &REFERENCE_STABLE_OUTPUT));
    }
}

#[test]
fn gram_norm_of_fixture() {
    assert!((example_gram_norm().unwrap() - REFERENCE_GRAM_NORM).abs() <= 0.01);
}
