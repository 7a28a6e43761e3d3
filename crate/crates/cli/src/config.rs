use std::path::{Path, PathBuf};

use composite_resolvent::descriptor::{read_json, LureDescriptor, OptionsDescriptor, ProblemDescriptor, VectorSource};
use composite_resolvent::SolveOptions;
use serde::Deserialize;

use crate::bench::BenchConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub result: Option<PathBuf>,
    pub history: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub step: Option<f64>,
    pub tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub warm_start: Option<bool>,
}

/// Contents of a `--config` file. The subcommand selects the mode; a `mode`
/// field, when present, must agree with it.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<String>,
    pub problem: Option<ProblemDescriptor>,
    pub lure: Option<LureDescriptor>,
    #[serde(default)]
    pub options: OptionsDescriptor,
    /// 1 or 2 for `resolve` (default 2).
    pub algorithm: Option<u8>,
    #[serde(default)]
    pub outputs: OutputPaths,
    /// Parameter list for `compare-mcx`.
    pub mus: Option<Vec<f64>>,
    /// Candidate point for `verify`.
    pub candidate: Option<VectorSource>,
    pub threshold: Option<f64>,
    pub bench: Option<BenchConfig>,
    pub equilibrium: Option<EquilibriumConfig>,
}

/// Global flags shared by all subcommands.
#[derive(Debug, Clone)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: u64,
}

pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

pub fn load(globals: &Globals, mode: &str) -> CliResult<Loaded> {
    let path = globals
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("{mode} needs --config PATH")))?;
    let config: RunConfig = read_json(path)?;
    if let Some(m) = &config.mode {
        if m != mode {
            return Err(CliError::Config(format!("config is for mode \"{m}\" but the subcommand is \"{mode}\"")));
        }
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

impl RunConfig {
    pub fn problem(&self) -> CliResult<&ProblemDescriptor> {
        self.problem
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no \"problem\" section".into()))
    }

    /// Solver options with `--tol` / `--max-iter` applied.
    pub fn solve_options(&self, globals: &Globals) -> CliResult<SolveOptions> {
        let mut opts = self.options.to_options()?;
        if let Some(t) = globals.tol {
            opts.tol = t;
        }
        if let Some(k) = globals.max_iter {
            opts.max_iter = k;
        }
        opts.validate()?;
        Ok(opts)
    }
}
