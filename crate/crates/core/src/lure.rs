//! Equilibria of set-valued Lur'e systems
//!
//! ```text
//! x'(t) = -f(x(t)) + B l(t),   l(t) ∈ -M(C x(t)),
//! ```
//!
//! with affine `f(x) = A x + b` and `P B = C^T` for a symmetric positive
//! definite `P`. Equilibria solve `0 ∈ P f(x) + C^T M(C x)`; they are found
//! by forward-backward splitting whose backward step is the composite
//! resolvent `J_{step C^T M C}` computed by Algorithm 2.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::composite::{solve_algorithm2_from, ResolventProblem, SolveOptions};
use crate::error::{check_dim, Error, Result};
use crate::linop::{estimate_spectrum, LinearMap, DEFAULT_SPECTRUM_MAX_ITER, DEFAULT_SPECTRUM_TOL};
use crate::monotone::{symmetric_part_min_eigen, MonotoneOp};
use crate::oracle::feasibility_residual;

const STRUCTURE_TOL: f64 = 1e-10;

#[derive(Debug)]
pub struct LureSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    input: LinearMap,
    output: LinearMap,
    metric: DMatrix<f64>,
    op: Box<dyn MonotoneOp>,
    strong_monotonicity: f64,
}

impl LureSystem {
    /// `input` is `B: R^m -> R^n`, `output` is `C: R^n -> R^m`, `metric` is `P`.
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        input: LinearMap,
        output: LinearMap,
        metric: DMatrix<f64>,
        op: Box<dyn MonotoneOp>,
    ) -> Result<Self> {
        let n = b.len();
        let m = output.rows();
        check_dim("A rows", n, a.nrows())?;
        check_dim("A cols", n, a.ncols())?;
        check_dim("C cols", n, output.cols())?;
        check_dim("B rows", n, input.rows())?;
        check_dim("B cols", m, input.cols())?;
        check_dim("P rows", n, metric.nrows())?;
        check_dim("P cols", n, metric.ncols())?;
        check_dim("operator M", m, op.dim())?;
        if a.iter().chain(b.iter()).chain(metric.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("Lur'e system data must be finite"));
        }
        if (&metric - metric.transpose()).amax() > STRUCTURE_TOL {
            return Err(Error::invalid("P must be symmetric"));
        }
        let p_min = SymmetricEigen::new(metric.clone()).eigenvalues.min();
        if !(p_min > 0.0) {
            return Err(Error::invalid(format!("P must be positive definite (smallest eigenvalue {p_min:e})")));
        }
        let mismatch = (&metric * input.matrix() - output.matrix().transpose()).norm();
        if mismatch > STRUCTURE_TOL {
            return Err(Error::invalid(format!("P B differs from C^T by {mismatch:e}")));
        }
        let strong_monotonicity = symmetric_part_min_eigen(&(&metric * &a));
        Ok(Self {
            a,
            b,
            input,
            output,
            metric,
            op,
            strong_monotonicity,
        })
    }

    /// The system with `P = I` and `B = C^T`.
    pub fn with_identity_metric(a: DMatrix<f64>, b: DVector<f64>, output: LinearMap, op: Box<dyn MonotoneOp>) -> Result<Self> {
        let n = b.len();
        Self::new(a, b, output.adjoint(), output, DMatrix::identity(n, n), op)
    }

    pub fn state_dim(&self) -> usize {
        self.b.len()
    }

    pub fn output(&self) -> &LinearMap {
        &self.output
    }

    pub fn input(&self) -> &LinearMap {
        &self.input
    }

    pub fn operator(&self) -> &dyn MonotoneOp {
        self.op.as_ref()
    }

    /// Smallest eigenvalue of the symmetric part of `P A`; positive means
    /// `P f` is strongly monotone and the equilibrium is unique.
    pub fn strong_monotonicity(&self) -> f64 {
        self.strong_monotonicity
    }

    /// `||P A||`, the Lipschitz constant of `P f`.
    pub fn lipschitz(&self) -> f64 {
        (&self.metric * &self.a).svd(false, false).singular_values.max()
    }

    /// `beta / L^2` with `beta` = [`Self::strong_monotonicity`] and `L` =
    /// [`Self::lipschitz`], which makes the forward step a contraction;
    /// `1 / L` when `P f` is not strongly monotone.
    pub fn default_step(&self) -> f64 {
        let lip = self.lipschitz();
        if lip == 0.0 {
            1.0
        } else if self.strong_monotonicity > 0.0 {
            self.strong_monotonicity / (lip * lip)
        } else {
            1.0 / lip
        }
    }

    /// `P f(x)`.
    pub fn scaled_field(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.metric * (&self.a * x + &self.b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LureOptions {
    pub step: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub inner: SolveOptions,
    /// Start each inner solve from the previous fixed point.
    pub warm_start: bool,
}

impl Default for LureOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            tol: 1e-8,
            max_outer: 10_000,
            inner: SolveOptions {
                tol: 1e-12,
                ..SolveOptions::default()
            },
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub x_star: DVector<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub equilibrium_residual: f64,
    pub converged: bool,
    /// See [`LureSystem::strong_monotonicity`].
    pub strong_monotonicity: f64,
}

/// `min_{s ∈ M(C x)} ||P f(x) + C^T s||`.
pub fn equilibrium_residual(sys: &LureSystem, x: &DVector<f64>) -> Result<f64> {
    check_dim("state", sys.state_dim(), x.len())?;
    let target = -sys.scaled_field(x);
    feasibility_residual(&sys.output, sys.op.as_ref(), &sys.output.mul(x), &target)
}

/// Forward-backward iteration `x_{k+1} = J_{step C^T M C}(x_k - step P f(x_k))`
/// from `x_0 = 0`.
///
/// Stops once a step is at most `tol` and the equilibrium residual at the
/// new point is at most `tol` as well.
pub fn find_equilibrium(sys: &LureSystem, opts: &LureOptions) -> Result<EquilibriumReport> {
    if !(opts.step > 0.0) || !(opts.tol > 0.0) || opts.max_outer == 0 {
        return Err(Error::invalid("step, tol and max_outer must be positive"));
    }
    opts.inner.validate()?;
    let n = sys.state_dim();
    let m = sys.output.rows();
    let spectrum = if sys.output.is_zero() {
        None
    } else {
        Some(estimate_spectrum(&sys.output, DEFAULT_SPECTRUM_TOL, DEFAULT_SPECTRUM_MAX_ITER)?)
    };

    let mut x = DVector::zeros(n);
    let mut u = DVector::zeros(m);
    let mut inner_iterations = 0;
    let mut residual = f64::INFINITY;
    for k in 1..=opts.max_outer {
        let y = &x - sys.scaled_field(&x) * opts.step;
        let next = match &spectrum {
            None => y,
            Some(spectrum) => {
                let problem = ResolventProblem::new(&sys.output, sys.op.as_ref(), opts.step, y)?;
                let start = if opts.warm_start { u.clone() } else { DVector::zeros(m) };
                let report = solve_algorithm2_from(&problem, &opts.inner, spectrum, &start)?;
                inner_iterations += report.iterations;
                if !report.converged {
                    return Err(Error::NoConvergence(format!(
                        "inner resolvent solve did not converge at outer iteration {k} (last step {:e})",
                        report.last_step
                    )));
                }
                u = report.fixed_point;
                report.x
            }
        };
        let step = (&next - &x).norm();
        x = next;
        if step <= opts.tol {
            residual = equilibrium_residual(sys, &x)?;
            if residual <= opts.tol {
                return Ok(EquilibriumReport {
                    x_star: x,
                    outer_iterations: k,
                    inner_iterations,
                    equilibrium_residual: residual,
                    converged: true,
                    strong_monotonicity: sys.strong_monotonicity,
                });
            }
        }
    }
    if !residual.is_finite() {
        residual = equilibrium_residual(sys, &x)?;
    }
    Ok(EquilibriumReport {
        x_star: x,
        outer_iterations: opts.max_outer,
        inner_iterations,
        equilibrium_residual: residual,
        converged: false,
        strong_monotonicity: sys.strong_monotonicity,
    })
}
