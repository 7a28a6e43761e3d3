use std::path::PathBuf;

use composite_resolvent::descriptor::write_vector_csv;
use composite_resolvent::{
    certify, certify_sum, find_equilibrium, inclusion_residual, mcx_resolvent, solve_algorithm1, solve_algorithm2,
    solve_algorithm3, sum_inclusion_residual, Error, LureOptions, Parameter, ScaledOp, SolveOptions, SolveReport,
};
use nalgebra::DVector;

use crate::config::{load, Globals};
use crate::error::{CliError, CliResult};
use crate::output::{csv_text, history_csv, out_path, real, write_atomic, x_header};

/// Runs the inclusion check, mapping an operator without value-set access to NaN.
fn residual_or_nan(r: composite_resolvent::Result<f64>) -> CliResult<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::Unsupported(msg)) => {
            eprintln!("note: inclusion residual unavailable: {msg}");
            Ok(f64::NAN)
        }
        Err(e) => Err(e.into()),
    }
}

fn warn_condition(report: &SolveReport, gamma: &str) {
    if !report.condition_holds {
        eprintln!(
            "warning: {gamma} lies outside (0, 2/||C||^2]; ||I - {gamma} CC^T|| = {:.6}, convergence is not guaranteed",
            report.condition_certificate
        );
    }
}

fn fmt_vec(x: &DVector<f64>) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn result_row(report: &SolveReport) -> Vec<String> {
    let mut row: Vec<String> = report.x.iter().map(|v| real(*v)).collect();
    row.push(report.iterations.to_string());
    row.push(report.converged.to_string());
    row.push(real(report.condition_certificate));
    row.push(real(report.inclusion_residual.unwrap_or(f64::NAN)));
    row
}

fn write_solution(g: &Globals, outputs: &crate::config::OutputPaths, report: &SolveReport, history: bool) -> CliResult<()> {
    let mut header = x_header(report.x.len());
    header.extend(["iterations", "converged", "certificate", "inclusion_residual"].map(String::from));
    let result = out_path(&g.out, outputs.result.as_ref(), "result.csv");
    write_atomic(&result, &csv_text(&header, &[result_row(report)])?)?;
    let x_path = result.with_file_name("x.csv");
    write_vector_csv(&x_path, &report.x)?;
    println!("wrote {}", result.display());
    println!("wrote {}", x_path.display());
    if history {
        let path = out_path(&g.out, outputs.history.as_ref(), "history.csv");
        write_atomic(&path, &history_csv(&report.step_history)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn finish(report: &SolveReport) -> CliResult<()> {
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "stopped after {} iterations with last step {:.3e}",
            report.iterations, report.last_step
        )))
    }
}

fn print_report(label: &str, parameter: &str, report: &SolveReport) {
    let status = if report.converged { "converged" } else { "did not converge" };
    println!(
        "{label}: {status} after {} iterations, last step {:.3e}",
        report.iterations, report.last_step
    );
    println!("{parameter} = {}, certificate = {:.6}", report.parameter, report.condition_certificate);
    if let Some(r) = report.inclusion_residual {
        println!("inclusion residual = {r:.3e}");
    }
    println!("x = {}", fmt_vec(&report.x));
}

fn wants_history(opts: &mut SolveOptions, configured: Option<&PathBuf>) -> bool {
    if configured.is_some() {
        opts.record_history = true;
    }
    opts.record_history
}

pub fn resolve(g: &Globals) -> CliResult<()> {
    let loaded = load(g, "resolve")?;
    let cfg = &loaded.config;
    let mut opts = cfg.solve_options(g)?;
    let history = wants_history(&mut opts, cfg.outputs.history.as_ref());
    let problem = cfg.problem()?.load(&loaded.base)?;
    let p = problem.resolvent_problem()?;
    let algorithm = cfg.algorithm.unwrap_or(2);
    let mut report = match algorithm {
        1 => solve_algorithm1(&p, &opts)?,
        2 => solve_algorithm2(&p, &opts)?,
        a => return Err(CliError::Config(format!("algorithm must be 1 or 2 for resolve, got {a}"))),
    };
    warn_condition(&report, "lambda mu");
    residual_or_nan(certify(&mut report, &p))?;
    print_report(&format!("algorithm {algorithm}"), "mu", &report);
    write_solution(g, &cfg.outputs, &report, history)?;
    finish(&report)
}

pub fn resolve_sum(g: &Globals) -> CliResult<()> {
    let loaded = load(g, "resolve-sum")?;
    let cfg = &loaded.config;
    let mut opts = cfg.solve_options(g)?;
    let history = wants_history(&mut opts, cfg.outputs.history.as_ref());
    let problem = cfg.problem()?.load(&loaded.base)?;
    let p = problem.sum_problem()?;
    let mut report = solve_algorithm3(&p, &opts)?;
    warn_condition(&report, "lambda/kappa");
    residual_or_nan(certify_sum(&mut report, &p))?;
    print_report("algorithm 3", "kappa", &report);
    write_solution(g, &cfg.outputs, &report, history)?;
    finish(&report)
}

/// Runs the single-parameter scheme on `lambda M` and Algorithm 2 on
/// `(C, M, lambda)` for each `mu`. Non-convergence is recorded, not fatal.
pub fn compare_mcx(g: &Globals) -> CliResult<()> {
    let loaded = load(g, "compare-mcx")?;
    let cfg = &loaded.config;
    let opts = cfg.solve_options(g)?;
    let descriptor = cfg.problem()?;
    let problem = descriptor.load(&loaded.base)?;
    let p = problem.resolvent_problem()?;
    let mus = match (&cfg.mus, opts.mu) {
        (Some(m), _) if !m.is_empty() => m.clone(),
        (_, Parameter::Value(mu)) => vec![mu],
        _ => return Err(CliError::Config("compare-mcx needs a \"mus\" list or a numeric options.mu".into())),
    };
    let scaled = {
        let inner = descriptor
            .load(&loaded.base)?
            .op
            .ok_or_else(|| CliError::Config("problem descriptor has no \"M\" operator".into()))?;
        ScaledOp::new(inner, p.lambda)?
    };

    let mut header = vec!["method".to_string(), "mu".to_string()];
    header.extend(x_header(p.y.len()));
    header.extend(["iterations", "converged", "certificate", "inclusion_residual"].map(String::from));
    let mut rows = Vec::new();
    for &mu in &mus {
        let mut single = mcx_resolvent(&problem.c, &scaled, mu, p.y.clone(), &opts)?;
        single.inclusion_residual = Some(residual_or_nan(inclusion_residual(&p, &single.x))?);
        let two_opts = SolveOptions {
            mu: Parameter::Value(mu),
            ..opts.clone()
        };
        let mut two = solve_algorithm2(&p, &two_opts)?;
        two.inclusion_residual = Some(residual_or_nan(inclusion_residual(&p, &two.x))?);
        for (method, r) in [("single-parameter", &single), ("two-parameter", &two)] {
            println!(
                "{method:>16} mu={mu:<8e} certificate={:.4} iterations={} converged={} x={}",
                r.condition_certificate,
                r.iterations,
                r.converged,
                fmt_vec(&r.x)
            );
            let mut row = vec![method.to_string(), real(mu)];
            row.extend(result_row(r));
            rows.push(row);
        }
    }
    let path = out_path(&g.out, cfg.outputs.result.as_ref(), "compare.csv");
    write_atomic(&path, &csv_text(&header, &rows)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Checks a candidate point through the inclusion residual.
pub fn verify(g: &Globals, candidate: Option<PathBuf>, threshold: Option<f64>) -> CliResult<()> {
    let loaded = load(g, "verify")?;
    let cfg = &loaded.config;
    let problem = cfg.problem()?.load(&loaded.base)?;
    let x = match (candidate, &cfg.candidate) {
        (Some(path), _) => composite_resolvent::descriptor::read_vector_csv(&path)?,
        (None, Some(source)) => source.load(&loaded.base)?,
        (None, None) => return Err(CliError::Config("verify needs --candidate PATH or a \"candidate\" field".into())),
    };
    let threshold = threshold.or(cfg.threshold).unwrap_or(1e-6);
    if !(threshold > 0.0) {
        return Err(CliError::Config(format!("threshold must be positive, got {threshold}")));
    }
    let residual = if problem.op.is_some() {
        inclusion_residual(&problem.resolvent_problem()?, &x)?
    } else {
        sum_inclusion_residual(&problem.sum_problem()?, &x)?
    };
    let verdict = if residual <= threshold { "PASS" } else { "FAIL" };
    println!("inclusion residual = {residual:.6e}, threshold = {threshold:e}: {verdict}");
    if residual <= threshold {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "candidate residual {residual:.3e} exceeds threshold {threshold:e}"
        )))
    }
}

pub fn lure_eq(g: &Globals) -> CliResult<()> {
    let loaded = load(g, "lure-eq")?;
    let cfg = &loaded.config;
    let sys = cfg
        .lure
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no \"lure\" section".into()))?
        .load(&loaded.base)?;
    let eq = cfg.equilibrium.clone().unwrap_or_default();
    let defaults = LureOptions::default();
    let inner = if cfg.options == Default::default() {
        defaults.inner.clone()
    } else {
        cfg.options.to_options()?
    };
    let opts = LureOptions {
        step: eq.step.unwrap_or_else(|| sys.default_step()),
        tol: g.tol.or(eq.tol).unwrap_or(defaults.tol),
        max_outer: g.max_iter.or(eq.max_outer).unwrap_or(defaults.max_outer),
        inner,
        warm_start: eq.warm_start.unwrap_or(defaults.warm_start),
    };
    let report = find_equilibrium(&sys, &opts)?;
    let status = if report.converged { "converged" } else { "did not converge" };
    println!(
        "equilibrium: {status} after {} outer / {} inner iterations, step {}",
        report.outer_iterations, report.inner_iterations, opts.step
    );
    println!(
        "equilibrium residual = {:.3e}, strong monotonicity = {:.6}",
        report.equilibrium_residual, report.strong_monotonicity
    );
    println!("x* = {}", fmt_vec(&report.x_star));

    let mut header = x_header(report.x_star.len());
    header.extend(["outer_iterations", "inner_iterations", "converged", "equilibrium_residual"].map(String::from));
    let mut row: Vec<String> = report.x_star.iter().map(|v| real(*v)).collect();
    row.push(report.outer_iterations.to_string());
    row.push(report.inner_iterations.to_string());
    row.push(report.converged.to_string());
    row.push(real(report.equilibrium_residual));
    let path = out_path(&g.out, cfg.outputs.result.as_ref(), "equilibrium.csv");
    write_atomic(&path, &csv_text(&header, &[row])?)?;
    let x_path = path.with_file_name("x_star.csv");
    write_vector_csv(&x_path, &report.x_star)?;
    println!("wrote {}", path.display());
    println!("wrote {}", x_path.display());
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "stopped after {} outer iterations with residual {:.3e}",
            report.outer_iterations, report.equilibrium_residual
        )))
    }
}
