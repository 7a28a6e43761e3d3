//! Dense linear maps `C: H1 -> H2`, the Gram operator `E = C C^T` and the
//! spectral quantities that govern the nonexpansiveness conditions of the
//! fixed-point maps.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Default relative tolerance for [`estimate_spectrum`].
pub const DEFAULT_SPECTRUM_TOL: f64 = 1e-10;
/// Default iteration cap for [`estimate_spectrum`].
pub const DEFAULT_SPECTRUM_MAX_ITER: usize = 100_000;

/// A dense linear operator from `R^cols` to `R^rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
}

impl LinearMap {
    /// Builds a map from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("linear map dimensions must be positive"));
        }
        check_dim("linear map entries", rows * cols, entries.len())?;
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(rows.len() * ncols);
        for row in rows {
            check_dim("linear map row", ncols, row.len())?;
            entries.extend_from_slice(row);
        }
        Self::new(rows.len(), ncols, &entries)
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::invalid("linear map dimensions must be positive"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("linear map entries must be finite"));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(rows, cols),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Dimension of the codomain `H2`.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Dimension of the domain `H1`.
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> LinearMap {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&v| v == 0.0)
    }

    /// Returns `C x`.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("apply", self.cols(), x.len())?;
        Ok(&self.matrix * x)
    }

    /// Returns `C^T u`.
    pub fn adjoint_apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("adjoint_apply", self.rows(), u.len())?;
        Ok(self.matrix.tr_mul(u))
    }

    /// Returns `E v = C (C^T v)` without forming `E`.
    pub fn gram_apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("gram_apply", self.rows(), v.len())?;
        Ok(&self.matrix * self.matrix.tr_mul(v))
    }

    /// Explicit `C C^T`.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        &self.matrix * self.matrix.transpose()
    }

    // The dimensions are validated at construction; internal callers use these.
    pub(crate) fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    pub(crate) fn tr_mul(&self, u: &DVector<f64>) -> DVector<f64> {
        self.matrix.tr_mul(u)
    }

    pub(crate) fn gram_mul(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * self.matrix.tr_mul(v)
    }
}

/// Extremal eigenvalue estimates of the Gram operator `E = C C^T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramSpectrum {
    /// Estimate of `||E|| = ||C||^2`.
    pub op_norm: f64,
    /// Estimate of the smallest eigenvalue `c` of `E`, clamped to `[0, op_norm]`.
    pub min_eigen: f64,
    /// `sqrt(op_norm)`.
    pub norm_c: f64,
    pub iterations_used: usize,
    /// Largest relative eigen-residual `||A v - theta v|| / op_norm` of the
    /// accepted power runs.
    pub tolerance_achieved: f64,
}

/// Outcome of checking `gamma in [0, 2/||C||^2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub holds: bool,
    /// `||I - gamma E||`.
    pub certificate: f64,
}

impl GramSpectrum {
    /// Tests the interval condition for `gamma` and evaluates `||I - gamma E||`
    /// from the two extremal eigenvalues of the symmetric operator `E`.
    pub fn nonexpansive_bound(&self, gamma: f64) -> Result<ConditionCheck> {
        if !(gamma >= 0.0) {
            return Err(Error::invalid(format!("gamma must be nonnegative, got {gamma}")));
        }
        let low = self.min_eigen.max(0.0);
        let certificate = (1.0 - gamma * self.op_norm)
            .abs()
            .max((1.0 - gamma * low).abs());
        Ok(ConditionCheck {
            holds: gamma <= 2.0 / self.op_norm,
            certificate,
        })
    }

    /// True when `E` is numerically positive definite.
    pub fn is_positive_definite(&self) -> bool {
        self.min_eigen > 1e-10
    }
}

struct PowerRun {
    theta: f64,
    residual: f64,
    iterations: usize,
}

/// Power iteration for the dominant eigenvalue of a symmetric PSD operator.
/// Stops once `||A v - theta v|| <= tol * scale`; `scale` defaults to `theta`.
fn power_iteration<F>(apply: F, start: DVector<f64>, scale: Option<f64>, tol: f64, max_iter: usize) -> PowerRun
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut v = &start / start.norm();
    let mut best = PowerRun {
        theta: 0.0,
        residual: f64::INFINITY,
        iterations: 0,
    };
    for it in 1..=max_iter {
        let w = apply(&v);
        let theta = v.dot(&w);
        let residual = (&w - &v * theta).norm();
        let scale = scale.unwrap_or(theta.abs()).max(f64::MIN_POSITIVE);
        best = PowerRun {
            theta,
            residual: residual / scale,
            iterations: it,
        };
        let norm = w.norm();
        if residual <= tol * scale || norm == 0.0 {
            break;
        }
        v = w / norm;
    }
    best
}

fn start_vectors(n: usize) -> [DVector<f64>; 2] {
    let ones = DVector::from_element(n, 1.0);
    let mut perturbed = ones.clone();
    perturbed[0] += 1.0;
    [ones, perturbed]
}

/// Estimates `||E||` and the smallest eigenvalue of `E = C C^T` by power
/// iteration on `E` and on `op_norm I - E`.
///
/// Both runs start from the normalised all-ones vector and from the same
/// vector perturbed by `e1`, and keep the larger limit, so a start that is
/// orthogonal to the dominant eigenspace cannot go unnoticed. Hitting
/// `max_iter` is not an error: `tolerance_achieved > tol` flags it.
pub fn estimate_spectrum(c: &LinearMap, tol: f64, max_iter: usize) -> Result<GramSpectrum> {
    if !(tol > 0.0) {
        return Err(Error::invalid("spectrum tolerance must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be positive"));
    }
    if c.is_zero() {
        return Err(Error::Degenerate("C is the zero map".into()));
    }
    let m = c.rows();
    let mut iterations = 0;

    let mut top: Option<PowerRun> = None;
    let mut starts: Vec<DVector<f64>> = start_vectors(m).into();
    let mut fallback = 0;
    loop {
        for start in starts.drain(..) {
            let run = power_iteration(|v| c.gram_mul(v), start, None, tol, max_iter);
            iterations += run.iterations;
            if top.as_ref().map_or(true, |t| run.theta > t.theta) {
                top = Some(run);
            }
        }
        // Both starts in ker E; walk the coordinate axes.
        if top.as_ref().map_or(true, |t| t.theta <= 0.0) && fallback < m {
            let mut e = DVector::zeros(m);
            e[fallback] = 1.0;
            starts.push(e);
            fallback += 1;
            continue;
        }
        break;
    }
    let top = top.expect("at least one power run");
    let op_norm = top.theta;
    if !(op_norm > 0.0) {
        return Err(Error::Degenerate("C C^T has no positive eigenvalue".into()));
    }

    let mut bottom: Option<PowerRun> = None;
    for start in start_vectors(m) {
        let run = power_iteration(
            |v| v * op_norm - c.gram_mul(v),
            start,
            Some(op_norm),
            tol,
            max_iter,
        );
        iterations += run.iterations;
        if bottom.as_ref().map_or(true, |b| run.theta > b.theta) {
            bottom = Some(run);
        }
    }
    let bottom = bottom.expect("at least one shifted run");
    let min_eigen = (op_norm - bottom.theta).clamp(0.0, op_norm);

    Ok(GramSpectrum {
        op_norm,
        min_eigen,
        norm_c: op_norm.sqrt(),
        iterations_used: iterations,
        tolerance_achieved: top.residual.max(bottom.residual),
    })
}
