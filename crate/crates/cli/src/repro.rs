use std::fmt::Write;

use composite_resolvent::example::{
    example_gram_norm, example_matrix, matches_two_decimals, mcx_table, stable_table, TableRow, EXAMPLE_ALPHA,
    EXAMPLE_MAX_ITER, EXAMPLE_TOL, EXAMPLE_Y, REFERENCE_ALPHA, REFERENCE_STABLE_OUTPUT, STABLE_LAMBDA,
};

use crate::config::Globals;
use crate::error::{CliError, CliResult};
use crate::output::write_atomic;

/// Two decimals with negative zero printed as zero.
fn d2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn vec2(values: impl Iterator<Item = f64>) -> String {
    let parts: Vec<String> = values.map(d2).collect();
    format!("({})", parts.join(", "))
}

fn table(out: &mut String, title: &str, rows: &[TableRow]) {
    writeln!(out, "{title}").unwrap();
    writeln!(out, "  {:<8} {:<12} {:<6} {:<10} x", "lambda", "mu", "cert", "iterations").unwrap();
    for r in rows {
        writeln!(
            out,
            "  {:<8} {:<12} {:<6} {:<10} {}",
            r.lambda,
            format!("{:e}", r.mu),
            d2(r.certificate),
            r.iterations,
            vec2(r.x.iter().copied())
        )
        .unwrap();
    }
    writeln!(out).unwrap();
}

/// Builds the report text and whether the `lambda = 0.01` rows all match.
pub fn report() -> CliResult<(String, bool)> {
    let c = example_matrix();
    let mut out = String::new();
    writeln!(out, "Five-dimensional l1 example").unwrap();
    writeln!(out, "C =").unwrap();
    for i in 0..c.rows() {
        let row: Vec<String> = (0..c.cols()).map(|j| format!("{:>3}", c.matrix()[(i, j)])).collect();
        writeln!(out, "  {}", row.join(" ")).unwrap();
    }
    writeln!(out, "y = {}", vec2(EXAMPLE_Y.iter().copied())).unwrap();
    writeln!(out, "||CC^T|| = {}", d2(example_gram_norm()?)).unwrap();
    writeln!(
        out,
        "stopping: step <= {EXAMPLE_TOL:e} or {EXAMPLE_MAX_ITER} iterations; cert = ||I - lambda mu CC^T||"
    )
    .unwrap();
    writeln!(out).unwrap();

    let mut all_match = true;
    for alpha in [EXAMPLE_ALPHA, REFERENCE_ALPHA] {
        let single = mcx_table(alpha)?;
        let stable = stable_table(alpha)?;
        table(&mut out, &format!("single-parameter scheme, lambda = 1, alpha = {alpha}"), &single);
        table(
            &mut out,
            &format!("two-parameter scheme, lambda = {STABLE_LAMBDA}, alpha = {alpha}"),
            &stable,
        );
        all_match &= stable.iter().all(|r| matches_two_decimals(&r.x, &REFERENCE_STABLE_OUTPUT));
    }
    writeln!(
        out,
        "lambda = {STABLE_LAMBDA} rows match {}: {}",
        vec2(REFERENCE_STABLE_OUTPUT.iter().copied()),
        if all_match { "yes" } else { "no" }
    )
    .unwrap();
    Ok((out, all_match))
}

pub fn repro_example1(g: &Globals) -> CliResult<()> {
    let (text, ok) = report()?;
    print!("{text}");
    let path = g.out.join("example1_report.txt");
    write_atomic(&path, text.as_bytes())?;
    println!("wrote {}", path.display());
    if ok {
        Ok(())
    } else {
        Err(CliError::NonConvergence("two-parameter rows differ from the reference output".into()))
    }
}
