use composite_resolvent::descriptor::ParameterDescriptor;
use composite_resolvent::{
    auto_parameters, contraction_estimate, estimate_spectrum, solve_algorithm2, BoxIndicatorSubdifferential,
    GramSpectrum, KmSchedule, L1Subdifferential, LinearMap, LinearMonotoneOp, MonotoneOp, Parameter,
    ResolventProblem, SolveOptions, ZeroOp,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::{load, Globals};
use crate::error::{CliError, CliResult};
use crate::output::{csv_text, history_csv, out_path, real, write_atomic};

const MAX_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    FullRowRank,
    RankDeficient,
    Identity,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::FullRowRank => "full-row-rank",
            Family::RankDeficient => "rank-deficient",
            Family::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorFamily {
    L1,
    Box,
    Linear,
    Zero,
}

impl OperatorFamily {
    fn name(self) -> &'static str {
        match self {
            OperatorFamily::L1 => "l1",
            OperatorFamily::Box => "box",
            OperatorFamily::Linear => "linear",
            OperatorFamily::Zero => "zero",
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_count() -> usize {
    1
}

/// A group of random instances. `m` defaults to `n`; `rank` (rank-deficient
/// only) defaults to `min(m, n) - 1`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub family: Family,
    pub m: Option<usize>,
    pub n: usize,
    pub rank: Option<usize>,
    pub operator: OperatorFamily,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one_count")]
    pub count: usize,
}

fn default_mu_grid() -> Vec<ParameterDescriptor> {
    vec![ParameterDescriptor::Auto("auto".into())]
}

fn default_alpha_grid() -> Vec<f64> {
    vec![0.5]
}

fn default_min_ratio() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub instances: Vec<InstanceSpec>,
    #[serde(default = "default_mu_grid")]
    pub mu: Vec<ParameterDescriptor>,
    #[serde(default = "default_alpha_grid")]
    pub alpha: Vec<f64>,
    /// Lower bound on `lambda_min / lambda_max` of `CC^T` for full-row-rank draws.
    #[serde(default = "default_min_ratio")]
    pub min_ratio: f64,
}

#[derive(Debug, Clone)]
enum OpData {
    L1(usize),
    Box(DVector<f64>, DVector<f64>),
    Linear(DMatrix<f64>, DVector<f64>),
    Zero(usize),
}

impl OpData {
    fn build(&self) -> CliResult<Box<dyn MonotoneOp>> {
        Ok(match self {
            OpData::L1(m) => Box::new(L1Subdifferential::new(*m)),
            OpData::Box(lo, hi) => Box::new(BoxIndicatorSubdifferential::new(lo.clone(), hi.clone())?),
            OpData::Linear(a, b) => Box::new(LinearMonotoneOp::new(a.clone(), b.clone())?),
            OpData::Zero(m) => Box::new(ZeroOp::new(*m)),
        })
    }
}

struct Instance {
    family: Family,
    operator: OperatorFamily,
    c: LinearMap,
    op: OpData,
    lambda: f64,
    y: DVector<f64>,
    spectrum: GramSpectrum,
}

fn uniform_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.gen_range(-scale..=scale))
}

fn uniform_vector(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(lo..=hi))
}

fn draw_matrix(rng: &mut ChaCha8Rng, spec: &InstanceSpec, min_ratio: f64) -> CliResult<DMatrix<f64>> {
    let n = spec.n;
    let m = spec.m.unwrap_or(n);
    match spec.family {
        Family::Identity => {
            if m != n {
                return Err(CliError::Config(format!("identity family needs m = n, got m = {m}, n = {n}")));
            }
            Ok(DMatrix::identity(n, n))
        }
        Family::FullRowRank => {
            if m > n {
                return Err(CliError::Config(format!("full-row-rank family needs m <= n, got m = {m}, n = {n}")));
            }
            for _ in 0..MAX_DRAWS {
                let c = uniform_matrix(rng, m, n, 1.0);
                let eig = (&c * c.transpose()).symmetric_eigenvalues();
                let (lo, hi) = (eig.min(), eig.max());
                if hi > 0.0 && lo / hi >= min_ratio {
                    return Ok(c);
                }
            }
            Err(CliError::Config(format!(
                "no {m}x{n} draw reached min_ratio {min_ratio} in {MAX_DRAWS} attempts"
            )))
        }
        Family::RankDeficient => {
            let r = spec.rank.unwrap_or(m.min(n).saturating_sub(1));
            if r == 0 || r >= m {
                return Err(CliError::Config(format!("rank-deficient family needs 0 < rank < m, got rank {r}, m {m}")));
            }
            Ok(uniform_matrix(rng, m, r, 1.0) * uniform_matrix(rng, r, n, 1.0))
        }
    }
}

fn draw_operator(rng: &mut ChaCha8Rng, kind: OperatorFamily, m: usize) -> OpData {
    match kind {
        OperatorFamily::L1 => OpData::L1(m),
        OperatorFamily::Box => OpData::Box(uniform_vector(rng, m, -2.0, 0.0), uniform_vector(rng, m, 0.0, 2.0)),
        OperatorFamily::Linear => {
            let g = uniform_matrix(rng, m, m, 1.0);
            OpData::Linear(&g * g.transpose() / m as f64, uniform_vector(rng, m, -1.0, 1.0))
        }
        OperatorFamily::Zero => OpData::Zero(m),
    }
}

fn generate(cfg: &BenchConfig, seed: u64) -> CliResult<Vec<Instance>> {
    if !(cfg.min_ratio >= 0.0 && cfg.min_ratio < 1.0) {
        return Err(CliError::Config(format!("min_ratio must lie in [0, 1), got {}", cfg.min_ratio)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for spec in &cfg.instances {
        if spec.n == 0 || spec.m == Some(0) {
            return Err(CliError::Config("instance dimensions must be positive".into()));
        }
        if !(spec.lambda > 0.0) {
            return Err(CliError::Config(format!("lambda must be positive, got {}", spec.lambda)));
        }
        for _ in 0..spec.count {
            let c = LinearMap::from_matrix(draw_matrix(&mut rng, spec, cfg.min_ratio)?)?;
            let op = draw_operator(&mut rng, spec.operator, c.rows());
            let y = uniform_vector(&mut rng, spec.n, -3.0, 3.0);
            let spectrum = estimate_spectrum(
                &c,
                composite_resolvent::linop::DEFAULT_SPECTRUM_TOL,
                composite_resolvent::linop::DEFAULT_SPECTRUM_MAX_ITER,
            )?;
            out.push(Instance {
                family: spec.family,
                operator: spec.operator,
                c,
                op,
                lambda: spec.lambda,
                y,
                spectrum,
            });
        }
    }
    Ok(out)
}

fn mu_grid(cfg: &BenchConfig) -> CliResult<Vec<Parameter>> {
    cfg.mu
        .iter()
        .map(|d| match d {
            ParameterDescriptor::Value(v) if *v > 0.0 => Ok(Parameter::Value(*v)),
            ParameterDescriptor::Auto(s) if s.eq_ignore_ascii_case("auto") => Ok(Parameter::Auto),
            other => Err(CliError::Config(format!("mu grid entries must be positive or \"auto\", got {other:?}"))),
        })
        .collect()
}

struct Run {
    instance: usize,
    mu: Parameter,
    alpha: f64,
}

fn execute(inst: &Instance, run: &Run, base: &SolveOptions) -> CliResult<(Vec<String>, Vec<f64>)> {
    let op = inst.op.build()?;
    let p = ResolventProblem::new(&inst.c, op.as_ref(), inst.lambda, inst.y.clone())?;
    let opts = SolveOptions {
        mu: run.mu,
        schedule: KmSchedule::Constant(run.alpha),
        record_history: true,
        ..base.clone()
    };
    let report = solve_algorithm2(&p, &opts)?;
    let predicted_q = match run.mu {
        Parameter::Auto => auto_parameters(inst.lambda, &inst.spectrum)?.predicted_q,
        Parameter::Value(_) if inst.spectrum.is_positive_definite() && report.condition_certificate < 1.0 => {
            report.condition_certificate
        }
        Parameter::Value(_) => f64::NAN,
    };
    let row = vec![
        run.instance.to_string(),
        inst.family.name().to_string(),
        inst.c.rows().to_string(),
        inst.c.cols().to_string(),
        inst.operator.name().to_string(),
        real(inst.lambda),
        match run.mu {
            Parameter::Auto => "auto".to_string(),
            Parameter::Value(v) => real(v),
        },
        real(report.parameter),
        real(run.alpha),
        report.iterations.to_string(),
        report.converged.to_string(),
        real(report.condition_certificate),
        real(contraction_estimate(&report.step_history)),
        real(predicted_q),
        real(1.0 - run.alpha * (1.0 - predicted_q)),
    ];
    Ok((row, report.step_history))
}

pub fn bench(g: &Globals) -> CliResult<()> {
    let loaded = load(g, "bench")?;
    let cfg = &loaded.config;
    let bench = cfg
        .bench
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no \"bench\" section".into()))?;
    let base = cfg.solve_options(g)?;
    let mus = mu_grid(bench)?;
    if bench.alpha.is_empty() || mus.is_empty() {
        return Err(CliError::Config("mu and alpha grids must be nonempty".into()));
    }
    for a in &bench.alpha {
        KmSchedule::Constant(*a).validate()?;
    }
    let instances = generate(bench, g.seed)?;
    let runs: Vec<Run> = (0..instances.len())
        .flat_map(|i| {
            mus.iter()
                .flat_map(move |&mu| bench.alpha.iter().map(move |&alpha| Run { instance: i, mu, alpha }))
        })
        .collect();

    let history_dir = g.out.join("histories");
    let rows: Vec<Vec<String>> = runs
        .par_iter()
        .enumerate()
        .map(|(k, run)| {
            let (mut row, history) = execute(&instances[run.instance], run, &base)?;
            let name = format!("run_{k:04}.csv");
            write_atomic(&history_dir.join(&name), &history_csv(&history)?)?;
            row.push(format!("histories/{name}"));
            row.push(g.seed.to_string());
            Ok(row)
        })
        .collect::<CliResult<_>>()?;

    let header: Vec<String> = [
        "instance",
        "family",
        "m",
        "n",
        "operator",
        "lambda",
        "mu_setting",
        "mu",
        "alpha",
        "iterations",
        "converged",
        "certificate",
        "contraction_estimate",
        "predicted_q",
        "predicted_rate",
        "history",
        "seed",
    ]
    .map(String::from)
    .to_vec();
    let path = out_path(&g.out, cfg.outputs.result.as_ref(), "bench_summary.csv");
    write_atomic(&path, &csv_text(&header, &rows)?)?;
    let converged = rows.iter().filter(|r| r[10] == "true").count();
    println!(
        "bench: {} instances, {} runs, {converged} converged, seed {}",
        instances.len(),
        rows.len(),
        g.seed
    );
    println!("wrote {}", path.display());
    Ok(())
}
