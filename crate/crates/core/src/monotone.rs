//! Maximal monotone operators with closed-form resolvents.
//!
//! Every operator exposes its resolvent `J_{lambda M} = (I + lambda M)^{-1}`
//! and the geometry of its values `M(p)` (as a Euclidean projection), which
//! is what the verification routines use to measure inclusions.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

/// Coordinates of a point within this distance of a kink are treated as
/// lying on it when evaluating subdifferential sets.
pub const KINK_BAND: f64 = 1e-9;

/// A maximal monotone operator on `R^dim`.
///
/// Implementors provide the resolvent and, where the set `M(p)` has simple
/// geometry, the projection onto it. Callers should go through the free
/// functions ([`resolvent`], [`yosida`], [`membership_residual`]), which
/// validate arguments before dispatching.
pub trait MonotoneOp: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// `J_{lambda M}(x)` for `lambda > 0` and `x` of length `dim`.
    fn apply_resolvent(&self, lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// Projection of `candidate` onto the closed convex set `M(point)`.
    ///
    /// `Ok(None)` means `point` is outside `dom M` (the set is empty).
    /// Operators without usable geometry return [`Error::Unsupported`].
    fn project_onto_value(&self, point: &DVector<f64>, candidate: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        let _ = (point, candidate);
        Err(Error::Unsupported(format!("{} exposes no value geometry", self.name())))
    }

    /// Distance from `candidate` to `M(point)`; `+inf` outside the domain.
    fn membership_residual(&self, point: &DVector<f64>, candidate: &DVector<f64>) -> Result<f64> {
        Ok(match self.project_onto_value(point, candidate)? {
            Some(p) => (candidate - p).norm(),
            None => f64::INFINITY,
        })
    }

    /// Scalar resolvent of coordinate `index` for coordinatewise separable
    /// operators; `None` otherwise.
    fn coordinate_resolvent(&self, index: usize, lambda: f64, x: f64) -> Option<f64> {
        let _ = (index, lambda, x);
        None
    }

    /// True when `M = ∂f` for a convex `f` whose proximal map is the resolvent.
    fn is_subdifferential(&self) -> bool {
        false
    }

    fn name(&self) -> &'static str;
}

fn check_lambda(what: &str, lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("{what} must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// `J_{lambda M}(x)`.
pub fn resolvent(op: &dyn MonotoneOp, lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_lambda("lambda", lambda)?;
    check_dim("resolvent", op.dim(), x.len())?;
    op.apply_resolvent(lambda, x)
}

/// Yosida approximation `M_index(x) = (x - J_{index M}(x)) / index`.
pub fn yosida(op: &dyn MonotoneOp, index: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_lambda("yosida index", index)?;
    check_dim("yosida", op.dim(), x.len())?;
    let j = op.apply_resolvent(index, x)?;
    Ok((x - j) / index)
}

/// `(I + lambda diag(e) M)^{-1}(x)` for separable `M` and positive `e`.
pub fn diag_scaled_resolvent(op: &dyn MonotoneOp, lambda: f64, e: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_lambda("lambda", lambda)?;
    check_dim("diag_scaled_resolvent weights", op.dim(), e.len())?;
    check_dim("diag_scaled_resolvent", op.dim(), x.len())?;
    if let Some(bad) = e.iter().find(|&&w| !(w > 0.0)) {
        return Err(Error::invalid(format!("diagonal weights must be positive, got {bad}")));
    }
    let mut out = DVector::zeros(x.len());
    for i in 0..x.len() {
        out[i] = op
            .coordinate_resolvent(i, lambda * e[i], x[i])
            .ok_or_else(|| Error::Unsupported(format!("{} is not coordinatewise separable", op.name())))?;
    }
    Ok(out)
}

/// Distance from `candidate` to `M(point)`.
pub fn membership_residual(op: &dyn MonotoneOp, point: &DVector<f64>, candidate: &DVector<f64>) -> Result<f64> {
    check_dim("membership point", op.dim(), point.len())?;
    check_dim("membership candidate", op.dim(), candidate.len())?;
    op.membership_residual(point, candidate)
}

/// Soft threshold `max(|x| - t, 0) sign(x)` with `sign(0) = 0`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `∂||.||_1`, whose resolvent is the soft threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Subdifferential {
    dim: usize,
}

impl L1Subdifferential {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl MonotoneOp for L1Subdifferential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_resolvent(&self, lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x.map(|v| soft_threshold(v, lambda)))
    }

    fn project_onto_value(&self, point: &DVector<f64>, candidate: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        Ok(Some(point.zip_map(candidate, |p, s| {
            if p.abs() <= KINK_BAND {
                s.clamp(-1.0, 1.0)
            } else {
                p.signum()
            }
        })))
    }

    fn coordinate_resolvent(&self, _index: usize, lambda: f64, x: f64) -> Option<f64> {
        Some(soft_threshold(x, lambda))
    }

    fn is_subdifferential(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "l1"
    }
}

/// Normal cone of the box `[lower, upper]`; the resolvent is the clamp.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxIndicatorSubdifferential {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxIndicatorSubdifferential {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::invalid("box dimension must be positive"));
        }
        for (l, u) in lower.iter().zip(upper.iter()) {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("invalid box bounds [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Box with infinite bounds: the indicator of the whole space.
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: DVector::from_element(dim, f64::NEG_INFINITY),
            upper: DVector::from_element(dim, f64::INFINITY),
        }
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }
}

impl MonotoneOp for BoxIndicatorSubdifferential {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn apply_resolvent(&self, _lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_fn(x.len(), |i, _| x[i].clamp(self.lower[i], self.upper[i])))
    }

    fn project_onto_value(&self, point: &DVector<f64>, candidate: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        let mut out = DVector::zeros(point.len());
        for i in 0..point.len() {
            let (p, s, l, u) = (point[i], candidate[i], self.lower[i], self.upper[i]);
            if p < l - KINK_BAND || p > u + KINK_BAND {
                return Ok(None);
            }
            let at_lower = p <= l + KINK_BAND;
            let at_upper = p >= u - KINK_BAND;
            out[i] = match (at_lower, at_upper) {
                (true, true) => s,
                (true, false) => s.min(0.0),
                (false, true) => s.max(0.0),
                (false, false) => 0.0,
            };
        }
        Ok(Some(out))
    }

    fn coordinate_resolvent(&self, index: usize, _lambda: f64, x: f64) -> Option<f64> {
        Some(x.clamp(self.lower[index], self.upper[index]))
    }

    fn is_subdifferential(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "box"
    }
}

/// Affine monotone map `x -> A x + b` with `A + A^T` positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMonotoneOp {
    a: DMatrix<f64>,
    b: DVector<f64>,
    certificate: f64,
    symmetric: bool,
}

impl LinearMonotoneOp {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::invalid("linear operator matrix must be square and nonempty"));
        }
        check_dim("linear operator offset", a.nrows(), b.len())?;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("linear operator entries must be finite"));
        }
        let certificate = symmetric_part_min_eigen(&a);
        if certificate < -1e-10 {
            return Err(Error::invalid(format!(
                "A + A^T is not positive semidefinite (smallest eigenvalue of the symmetric part {certificate:e})"
            )));
        }
        let symmetric = (&a - a.transpose()).amax() <= 1e-12 * (1.0 + a.amax());
        Ok(Self {
            a,
            b,
            certificate,
            symmetric,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.b
    }

    /// Smallest eigenvalue of `(A + A^T) / 2`.
    pub fn monotonicity_certificate(&self) -> f64 {
        self.certificate
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }
}

/// Smallest eigenvalue of the symmetric part of a square matrix.
pub(crate) fn symmetric_part_min_eigen(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

impl MonotoneOp for LinearMonotoneOp {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn apply_resolvent(&self, lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        let system = DMatrix::identity(n, n) + &self.a * lambda;
        let rhs = x - &self.b * lambda;
        system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Degenerate("I + lambda A is singular".into()))
    }

    fn project_onto_value(&self, point: &DVector<f64>, _candidate: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        Ok(Some(self.eval(point)))
    }

    /// Symmetric `A` is the gradient of `x^T A x / 2 + b^T x`.
    fn is_subdifferential(&self) -> bool {
        self.symmetric
    }

    fn name(&self) -> &'static str {
        "linear"
    }
}

/// `M(x) = {0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroOp {
    dim: usize,
}

impl ZeroOp {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl MonotoneOp for ZeroOp {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_resolvent(&self, _lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x.clone())
    }

    fn project_onto_value(&self, point: &DVector<f64>, _candidate: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        Ok(Some(DVector::zeros(point.len())))
    }

    fn coordinate_resolvent(&self, _index: usize, _lambda: f64, x: f64) -> Option<f64> {
        Some(x)
    }

    fn name(&self) -> &'static str {
        "zero"
    }
}

/// `factor * M` for `factor > 0`; e.g. `∂(t ||.||_1)` from the l1 operator.
#[derive(Debug)]
pub struct ScaledOp {
    inner: Box<dyn MonotoneOp>,
    factor: f64,
}

impl ScaledOp {
    pub fn new(inner: Box<dyn MonotoneOp>, factor: f64) -> Result<Self> {
        check_lambda("scale factor", factor)?;
        Ok(Self { inner, factor })
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}

impl MonotoneOp for ScaledOp {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_resolvent(&self, lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.inner.apply_resolvent(lambda * self.factor, x)
    }

    fn project_onto_value(&self, point: &DVector<f64>, candidate: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        Ok(self
            .inner
            .project_onto_value(point, &(candidate / self.factor))?
            .map(|p| p * self.factor))
    }

    fn coordinate_resolvent(&self, index: usize, lambda: f64, x: f64) -> Option<f64> {
        self.inner.coordinate_resolvent(index, lambda * self.factor, x)
    }

    fn is_subdifferential(&self) -> bool {
        self.inner.is_subdifferential()
    }

    fn name(&self) -> &'static str {
        "scaled"
    }
}

/// Hides everything but the resolvent of the wrapped operator, as for a
/// black-box proximal map. Inclusion residuals are unavailable for it.
#[derive(Debug)]
pub struct ResolventOnly {
    inner: Box<dyn MonotoneOp>,
}

impl ResolventOnly {
    pub fn new(inner: Box<dyn MonotoneOp>) -> Self {
        Self { inner }
    }
}

impl MonotoneOp for ResolventOnly {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_resolvent(&self, lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.inner.apply_resolvent(lambda, x)
    }

    fn is_subdifferential(&self) -> bool {
        self.inner.is_subdifferential()
    }

    fn name(&self) -> &'static str {
        "resolvent-only"
    }
}
