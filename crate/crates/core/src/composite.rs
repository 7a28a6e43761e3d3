//! Resolvents of `C^T M C` and `M1 + C^T M2 C` through two-parameter
//! fixed-point maps iterated with Krasnoselskii–Mann relaxation.
//!
//! For `x = J_{lambda C^T M C}(y)`:
//!
//! * `N(v) = M_{1/mu}(C y + (I/mu - lambda C C^T) v)`, with `x = y - lambda C^T v`;
//! * `Q(u) = (I - J_{M/mu})(C y + (I - lambda mu C C^T) u)`, with
//!   `x = y - lambda mu C^T u` (the same fixed point under `v = mu u`).
//!
//! For `x = J_{lambda (M1 + C^T M2 C)}(y)`:
//!
//! * `P(u) = (M2)_kappa(C J_{lambda M1}(y - lambda C^T u) + kappa u)`, with
//!   `x = J_{lambda M1}(y - lambda C^T u)`.
//!
//! The maps are nonexpansive when `lambda mu <= 2/||C||^2` (resp.
//! `lambda/kappa <= 2/||C||^2`); solvers report that condition rather than
//! refusing to run outside it.

use std::collections::VecDeque;

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};
use crate::linop::{estimate_spectrum, GramSpectrum, LinearMap, DEFAULT_SPECTRUM_MAX_ITER, DEFAULT_SPECTRUM_TOL};
use crate::monotone::{self, MonotoneOp};

/// Number of trailing step ratios used by [`SolveReport::contraction_estimate`].
pub const CONTRACTION_WINDOW: usize = 20;

/// Inputs of `y ∈ x + lambda C^T M C x`.
#[derive(Debug, Clone)]
pub struct ResolventProblem<'a> {
    pub c: &'a LinearMap,
    pub op: &'a dyn MonotoneOp,
    pub lambda: f64,
    pub y: DVector<f64>,
}

impl<'a> ResolventProblem<'a> {
    pub fn new(c: &'a LinearMap, op: &'a dyn MonotoneOp, lambda: f64, y: DVector<f64>) -> Result<Self> {
        check_dim("operator M vs rows of C", c.rows(), op.dim())?;
        check_dim("y vs cols of C", c.cols(), y.len())?;
        check_positive("lambda", lambda)?;
        Ok(Self { c, op, lambda, y })
    }
}

/// Inputs of `y ∈ x + lambda M1 x + lambda C^T M2 C x`.
#[derive(Debug, Clone)]
pub struct SumResolventProblem<'a> {
    pub c: &'a LinearMap,
    pub op1: &'a dyn MonotoneOp,
    pub op2: &'a dyn MonotoneOp,
    pub lambda: f64,
    pub y: DVector<f64>,
}

impl<'a> SumResolventProblem<'a> {
    pub fn new(
        c: &'a LinearMap,
        op1: &'a dyn MonotoneOp,
        op2: &'a dyn MonotoneOp,
        lambda: f64,
        y: DVector<f64>,
    ) -> Result<Self> {
        check_dim("operator M1 vs cols of C", c.cols(), op1.dim())?;
        check_dim("operator M2 vs rows of C", c.rows(), op2.dim())?;
        check_dim("y vs cols of C", c.cols(), y.len())?;
        check_positive("lambda", lambda)?;
        Ok(Self { c, op1, op2, lambda, y })
    }
}

fn check_positive(what: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::invalid(format!("{what} must be positive and finite, got {value}")));
    }
    Ok(())
}

/// Relaxation sequence `alpha_k` of the KM iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum KmSchedule {
    Constant(f64),
    /// Used in order, then the last value repeats.
    Sequence(Vec<f64>),
}

impl Default for KmSchedule {
    fn default() -> Self {
        KmSchedule::Constant(0.5)
    }
}

impl KmSchedule {
    pub fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            KmSchedule::Constant(a) => std::slice::from_ref(a),
            KmSchedule::Sequence(v) if v.is_empty() => {
                return Err(Error::invalid("relaxation sequence is empty"));
            }
            KmSchedule::Sequence(v) => v,
        };
        match values.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
            Some(a) => Err(Error::invalid(format!("relaxation values must lie in (0, 1), got {a}"))),
            None => Ok(()),
        }
    }

    pub fn alpha(&self, k: usize) -> f64 {
        match self {
            KmSchedule::Constant(a) => *a,
            KmSchedule::Sequence(v) => v[k.min(v.len() - 1)],
        }
    }

    /// `inf_k alpha_k`.
    pub fn min_alpha(&self) -> f64 {
        match self {
            KmSchedule::Constant(a) => *a,
            KmSchedule::Sequence(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// A step parameter given explicitly or derived from the spectrum of `C C^T`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Parameter {
    #[default]
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// `mu` for Algorithms 1 and 2.
    pub mu: Parameter,
    /// `kappa` for Algorithm 3.
    pub kappa: Parameter,
    pub schedule: KmSchedule,
    /// Threshold on the Euclidean KM step `||u_{k+1} - u_k||`.
    pub tol: f64,
    pub max_iter: usize,
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mu: Parameter::Auto,
            kappa: Parameter::Auto,
            schedule: KmSchedule::default(),
            tol: 1e-8,
            max_iter: 100_000,
            record_history: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        check_positive("tol", self.tol)?;
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        for (name, p) in [("mu", self.mu), ("kappa", self.kappa)] {
            if let Parameter::Value(v) = p {
                check_positive(name, v)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// The computed resolvent value.
    pub x: DVector<f64>,
    /// Final KM iterate: `v` for Algorithm 1, `u` for Algorithms 2 and 3.
    pub fixed_point: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Last KM step norm (0 when no step was taken).
    pub last_step: f64,
    /// The step parameter actually used (`mu`, or `kappa` for Algorithm 3).
    pub parameter: f64,
    /// `||I - gamma C C^T||` with `gamma = lambda mu` or `lambda / kappa`.
    pub condition_certificate: f64,
    /// Whether `gamma` lies in `(0, 2/||C||^2]`.
    pub condition_holds: bool,
    /// All step norms when history recording is on.
    pub step_history: Vec<f64>,
    /// Filled in by [`crate::oracle::certify`].
    pub inclusion_residual: Option<f64>,
    /// Median ratio of consecutive step norms over the last
    /// [`CONTRACTION_WINDOW`] steps; NaN when too short or not contractive.
    pub contraction_estimate: f64,
}

/// Chosen `mu` and the contraction factor it guarantees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoParameters {
    pub mu: f64,
    /// `sqrt(1 - (c/||E||)^2)` when `E` is positive definite, NaN otherwise.
    pub predicted_q: f64,
}

/// Picks `mu` for Algorithms 1 and 2.
///
/// With `E = C C^T` positive definite (`c = min_eigen > 1e-10`) this is
/// `mu = c / (lambda ||E||^2)`, for which `||I - lambda mu E||^2 <= 1 - c^2/||E||^2`.
/// Otherwise `lambda mu = 1/||E||`, the midpoint of the admissible interval.
pub fn auto_parameters(lambda: f64, spectrum: &GramSpectrum) -> Result<AutoParameters> {
    check_positive("lambda", lambda)?;
    let norm = spectrum.op_norm;
    if !(norm > 0.0) {
        return Err(Error::Degenerate("C C^T has zero norm".into()));
    }
    if spectrum.is_positive_definite() {
        let ratio = spectrum.min_eigen / norm;
        Ok(AutoParameters {
            mu: spectrum.min_eigen / (lambda * norm * norm),
            predicted_q: (1.0 - ratio * ratio).max(0.0).sqrt(),
        })
    } else {
        Ok(AutoParameters {
            mu: 1.0 / (lambda * norm),
            predicted_q: f64::NAN,
        })
    }
}

/// `kappa = lambda ||E||`, i.e. `lambda / kappa` at the midpoint of `(0, 2/||C||^2)`.
pub fn auto_kappa(lambda: f64, spectrum: &GramSpectrum) -> Result<f64> {
    check_positive("lambda", lambda)?;
    if !(spectrum.op_norm > 0.0) {
        return Err(Error::Degenerate("C C^T has zero norm".into()));
    }
    Ok(lambda * spectrum.op_norm)
}

fn default_spectrum(c: &LinearMap) -> Result<GramSpectrum> {
    estimate_spectrum(c, DEFAULT_SPECTRUM_TOL, DEFAULT_SPECTRUM_MAX_ITER)
}

/// `N(v) = M_{1/mu}(C y + v/mu - lambda C C^T v)`.
pub fn map_n(p: &ResolventProblem<'_>, mu: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_positive("mu", mu)?;
    check_dim("map_n iterate", p.c.rows(), v.len())?;
    eval_n(p, &p.c.mul(&p.y), mu, v)
}

/// `Q(u) = w - J_{M/mu}(w)` with `w = C y + u - lambda mu C C^T u`.
pub fn map_q(p: &ResolventProblem<'_>, mu: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    check_positive("mu", mu)?;
    check_dim("map_q iterate", p.c.rows(), u.len())?;
    eval_q(p, &p.c.mul(&p.y), mu, u)
}

/// `P(u) = (M2)_kappa(C J_{lambda M1}(y - lambda C^T u) + kappa u)`.
pub fn map_p(p: &SumResolventProblem<'_>, kappa: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    check_positive("kappa", kappa)?;
    check_dim("map_p iterate", p.c.rows(), u.len())?;
    eval_p(p, kappa, u)
}

fn eval_n(p: &ResolventProblem<'_>, cy: &DVector<f64>, mu: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
    let w = cy + v * (1.0 / mu) - p.c.gram_mul(v) * p.lambda;
    monotone::yosida(p.op, 1.0 / mu, &w)
}

fn eval_q(p: &ResolventProblem<'_>, cy: &DVector<f64>, mu: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    let w = cy + u - p.c.gram_mul(u) * (p.lambda * mu);
    let j = monotone::resolvent(p.op, 1.0 / mu, &w)?;
    Ok(w - j)
}

fn inner_point(p: &SumResolventProblem<'_>, u: &DVector<f64>) -> Result<DVector<f64>> {
    let shifted = &p.y - p.c.tr_mul(u) * p.lambda;
    monotone::resolvent(p.op1, p.lambda, &shifted)
}

fn eval_p(p: &SumResolventProblem<'_>, kappa: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    let inner = inner_point(p, u)?;
    let arg = p.c.mul(&inner) + u * kappa;
    monotone::yosida(p.op2, kappa, &arg)
}

struct KmRun {
    point: DVector<f64>,
    iterations: usize,
    converged: bool,
    last_step: f64,
    history: Vec<f64>,
    contraction: f64,
}

/// `u_{k+1} = (1 - alpha_k) u_k + alpha_k T(u_k)` until the step drops to `tol`.
fn km_iterate<F>(mut map: F, start: DVector<f64>, opts: &SolveOptions) -> Result<KmRun>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut u = start;
    let mut history = Vec::new();
    let mut tail = VecDeque::with_capacity(CONTRACTION_WINDOW + 1);
    let mut last_step = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..opts.max_iter {
        let alpha = opts.schedule.alpha(k);
        let image = map(&u)?;
        let next = &u * (1.0 - alpha) + image * alpha;
        last_step = (&next - &u).norm();
        u = next;
        iterations = k + 1;
        if opts.record_history {
            history.push(last_step);
        }
        if tail.len() == CONTRACTION_WINDOW + 1 {
            tail.pop_front();
        }
        tail.push_back(last_step);
        if !last_step.is_finite() {
            break;
        }
        if last_step <= opts.tol {
            converged = true;
            break;
        }
    }
    Ok(KmRun {
        point: u,
        iterations,
        converged,
        last_step,
        history,
        contraction: contraction_estimate(tail.make_contiguous()),
    })
}

/// Median of consecutive step ratios over a window of `CONTRACTION_WINDOW + 1`
/// step norms.
pub fn contraction_estimate(steps: &[f64]) -> f64 {
    if steps.len() < CONTRACTION_WINDOW + 1 {
        return f64::NAN;
    }
    let window = &steps[steps.len() - CONTRACTION_WINDOW - 1..];
    let mut ratios: Vec<f64> = window
        .windows(2)
        .map(|w| w[1] / w[0])
        .filter(|r| r.is_finite())
        .collect();
    if ratios.is_empty() {
        return f64::NAN;
    }
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let median = if n % 2 == 1 {
        ratios[n / 2]
    } else {
        0.5 * (ratios[n / 2 - 1] + ratios[n / 2])
    };
    if median < 1.0 {
        median
    } else {
        f64::NAN
    }
}

fn resolve_mu(p: &ResolventProblem<'_>, opts: &SolveOptions, spectrum: &GramSpectrum) -> Result<f64> {
    match opts.mu {
        Parameter::Value(mu) => Ok(mu),
        Parameter::Auto => Ok(auto_parameters(p.lambda, spectrum)?.mu),
    }
}

fn degenerate_report(x: DVector<f64>, rows: usize, parameter: f64) -> SolveReport {
    SolveReport {
        x,
        fixed_point: DVector::zeros(rows),
        iterations: 0,
        converged: true,
        last_step: 0.0,
        parameter,
        condition_certificate: 1.0,
        condition_holds: true,
        step_history: Vec::new(),
        inclusion_residual: None,
        contraction_estimate: f64::NAN,
    }
}

fn fixed_or_nan(p: Parameter) -> f64 {
    match p {
        Parameter::Value(v) => v,
        Parameter::Auto => f64::NAN,
    }
}

/// Algorithm 1: KM on `N` from `v_0 = 0`, returning `x = y - lambda C^T v`.
pub fn solve_algorithm1(p: &ResolventProblem<'_>, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    if p.c.is_zero() {
        return Ok(degenerate_report(p.y.clone(), p.c.rows(), fixed_or_nan(opts.mu)));
    }
    let spectrum = default_spectrum(p.c)?;
    let mu = resolve_mu(p, opts, &spectrum)?;
    let check = spectrum.nonexpansive_bound(p.lambda * mu)?;
    let cy = p.c.mul(&p.y);
    let run = km_iterate(|v| eval_n(p, &cy, mu, v), DVector::zeros(p.c.rows()), opts)?;
    let x = &p.y - p.c.tr_mul(&run.point) * p.lambda;
    Ok(report(x, run, mu, check.certificate, check.holds))
}

/// Algorithm 2: KM on `Q` from `u_0 = 0`, returning `x = y - lambda mu C^T u`.
pub fn solve_algorithm2(p: &ResolventProblem<'_>, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    if p.c.is_zero() {
        return Ok(degenerate_report(p.y.clone(), p.c.rows(), fixed_or_nan(opts.mu)));
    }
    let spectrum = default_spectrum(p.c)?;
    solve_algorithm2_from(p, opts, &spectrum, &DVector::zeros(p.c.rows()))
}

/// Algorithm 2 with a precomputed spectrum and an explicit starting iterate.
pub fn solve_algorithm2_from(
    p: &ResolventProblem<'_>,
    opts: &SolveOptions,
    spectrum: &GramSpectrum,
    start: &DVector<f64>,
) -> Result<SolveReport> {
    opts.validate()?;
    check_dim("starting iterate", p.c.rows(), start.len())?;
    let mu = resolve_mu(p, opts, spectrum)?;
    let check = spectrum.nonexpansive_bound(p.lambda * mu)?;
    let cy = p.c.mul(&p.y);
    let run = km_iterate(|u| eval_q(p, &cy, mu, u), start.clone(), opts)?;
    let x = &p.y - p.c.tr_mul(&run.point) * (p.lambda * mu);
    Ok(report(x, run, mu, check.certificate, check.holds))
}

/// The single-parameter scheme: Algorithm 2 with `lambda = 1`, computing
/// `J_{C^T M C}(y)`.
pub fn mcx_resolvent(
    c: &LinearMap,
    op: &dyn MonotoneOp,
    mu: f64,
    y: DVector<f64>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let p = ResolventProblem::new(c, op, 1.0, y)?;
    let opts = SolveOptions {
        mu: Parameter::Value(mu),
        ..opts.clone()
    };
    solve_algorithm2(&p, &opts)
}

/// Algorithm 3: KM on `P` from `u_0 = 0`, returning `x = J_{lambda M1}(y - lambda C^T u)`.
pub fn solve_algorithm3(p: &SumResolventProblem<'_>, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    if p.c.is_zero() {
        let x = monotone::resolvent(p.op1, p.lambda, &p.y)?;
        return Ok(degenerate_report(x, p.c.rows(), fixed_or_nan(opts.kappa)));
    }
    let spectrum = default_spectrum(p.c)?;
    let kappa = match opts.kappa {
        Parameter::Value(k) => k,
        Parameter::Auto => auto_kappa(p.lambda, &spectrum)?,
    };
    let check = spectrum.nonexpansive_bound(p.lambda / kappa)?;
    let run = km_iterate(|u| eval_p(p, kappa, u), DVector::zeros(p.c.rows()), opts)?;
    let x = inner_point(p, &run.point)?;
    Ok(report(x, run, kappa, check.certificate, check.holds))
}

fn report(x: DVector<f64>, run: KmRun, parameter: f64, certificate: f64, holds: bool) -> SolveReport {
    SolveReport {
        x,
        fixed_point: run.point,
        iterations: run.iterations,
        converged: run.converged,
        last_step: run.last_step,
        parameter,
        condition_certificate: certificate,
        condition_holds: holds,
        step_history: run.history,
        inclusion_residual: None,
        contraction_estimate: run.contraction,
    }
}
