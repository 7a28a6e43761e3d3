//! Independent ground truth for the fixed-point solvers.
//!
//! The ADMM reference splits `z = C x` and never touches the maps `N`, `Q`
//! or `P`. Inclusion residuals certify a candidate directly against the
//! inclusion it should satisfy, by a projected-gradient search over the
//! operator's value set.

use nalgebra::{DMatrix, DVector};

use crate::composite::{ResolventProblem, SolveReport, SumResolventProblem};
use crate::error::{check_dim, Error, Result};
use crate::linop::LinearMap;
use crate::monotone::MonotoneOp;

/// Default ADMM residual tolerance.
pub const DEFAULT_ADMM_TOL: f64 = 1e-10;
/// ADMM penalty parameter.
pub const ADMM_RHO: f64 = 1.0;
const ADMM_MAX_ITER: usize = 2_000_000;
/// Iteration budget of the projected-gradient feasibility search.
pub const FEASIBILITY_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub x_ref: DVector<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

/// A convex term `scale * f` where `∂f` is the given operator.
#[derive(Debug, Clone, Copy)]
pub struct ProxTerm<'a> {
    pub op: &'a dyn MonotoneOp,
    pub scale: f64,
}

fn require_subdifferential(op: &dyn MonotoneOp) -> Result<()> {
    if op.is_subdifferential() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "ADMM reference needs a subdifferential operator with a proximal map, got {}; \
             certify with inclusion_residual instead",
            op.name()
        )))
    }
}

/// Solves `min 1/2 ||x - y||^2 + lambda f(C x)` where `M = ∂f`.
pub fn admm_reference(p: &ResolventProblem<'_>, tol: f64) -> Result<OracleReport> {
    require_subdifferential(p.op)?;
    let n = p.c.cols();
    admm_quadratic(
        &DMatrix::identity(n, n),
        &(-&p.y),
        p.c,
        None,
        ProxTerm { op: p.op, scale: p.lambda },
        tol,
    )
}

/// Solves `min 1/2 ||x - y||^2 + lambda f1(x) + lambda f2(C x)`.
pub fn admm_reference_sum(p: &SumResolventProblem<'_>, tol: f64) -> Result<OracleReport> {
    require_subdifferential(p.op1)?;
    require_subdifferential(p.op2)?;
    let n = p.c.cols();
    admm_quadratic(
        &DMatrix::identity(n, n),
        &(-&p.y),
        p.c,
        Some(ProxTerm { op: p.op1, scale: p.lambda }),
        ProxTerm { op: p.op2, scale: p.lambda },
        tol,
    )
}

/// ADMM for `min 1/2 x^T H x + q^T x + g1(x) + g2(C x)` with `H` symmetric
/// positive definite, using the split `z = [x; C x]` (or `z = C x` without
/// `g1`), penalty [`ADMM_RHO`] and a Cholesky factorisation of
/// `H + rho A^T A`.
pub fn admm_quadratic(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    c: &LinearMap,
    g1: Option<ProxTerm<'_>>,
    g2: ProxTerm<'_>,
    tol: f64,
) -> Result<OracleReport> {
    let n = c.cols();
    let m = c.rows();
    check_dim("ADMM quadratic term", n, h.nrows())?;
    check_dim("ADMM quadratic term", n, h.ncols())?;
    check_dim("ADMM linear term", n, q.len())?;
    check_dim("ADMM g2 operator", m, g2.op.dim())?;
    if let Some(t) = g1 {
        check_dim("ADMM g1 operator", n, t.op.dim())?;
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("ADMM tolerance must be positive"));
    }
    for t in g1.iter().chain(std::iter::once(&g2)) {
        require_subdifferential(t.op)?;
        if !(t.scale > 0.0) {
            return Err(Error::invalid("ADMM term scale must be positive"));
        }
    }

    let rho = ADMM_RHO;
    let cm = c.matrix();
    let a = match g1 {
        Some(_) => {
            let mut a = DMatrix::zeros(n + m, n);
            a.view_mut((0, 0), (n, n)).fill_with_identity();
            a.view_mut((n, 0), (m, n)).copy_from(cm);
            a
        }
        None => cm.clone(),
    };
    let offset = a.nrows() - m;
    let system = h + a.transpose() * &a * rho;
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::Degenerate("H + rho A^T A is not positive definite".into()))?;

    let mut z = DVector::zeros(a.nrows());
    let mut w = DVector::zeros(a.nrows());
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    for it in 1..=ADMM_MAX_ITER {
        let rhs = a.tr_mul(&(&z - &w)) * rho - q;
        let x = chol.solve(&rhs);
        let ax = &a * &x;
        let v = &ax + &w;
        let mut z_new = DVector::zeros(a.nrows());
        if let Some(t) = g1 {
            let head = v.rows(0, n).into_owned();
            z_new.rows_mut(0, n).copy_from(&t.op.apply_resolvent(t.scale / rho, &head)?);
        }
        let tail = v.rows(offset, m).into_owned();
        z_new
            .rows_mut(offset, m)
            .copy_from(&g2.op.apply_resolvent(g2.scale / rho, &tail)?);
        w += &ax - &z_new;
        primal = (&ax - &z_new).norm();
        dual = rho * a.tr_mul(&(&z_new - &z)).norm();
        z = z_new;
        if primal <= tol && dual <= tol {
            return Ok(OracleReport {
                x_ref: x,
                primal_residual: primal,
                dual_residual: dual,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence(format!(
        "ADMM stopped after {ADMM_MAX_ITER} iterations with residuals {primal:e} / {dual:e}"
    )))
}

/// `min_{s ∈ M(C x)} ||C^T s - (y - x)/lambda||`: zero iff `x = J_{lambda C^T M C}(y)`.
pub fn inclusion_residual(p: &ResolventProblem<'_>, x: &DVector<f64>) -> Result<f64> {
    check_dim("candidate", p.c.cols(), x.len())?;
    let target = (&p.y - x) / p.lambda;
    feasibility_residual(p.c, p.op, &p.c.mul(x), &target)
}

/// `min ||s1 + C^T s2 - (y - x)/lambda||` over `s1 ∈ M1(x)`, `s2 ∈ M2(C x)`.
pub fn sum_inclusion_residual(p: &SumResolventProblem<'_>, x: &DVector<f64>) -> Result<f64> {
    check_dim("candidate", p.c.cols(), x.len())?;
    let n = p.c.cols();
    let m = p.c.rows();
    let target = (&p.y - x) / p.lambda;
    let cx = p.c.mul(x);
    let mut b = DMatrix::zeros(n, n + m);
    b.view_mut((0, 0), (n, n)).fill_with_identity();
    b.view_mut((0, n), (n, m)).copy_from(&p.c.matrix().transpose());
    let project = |s: &DVector<f64>| -> Result<Option<DVector<f64>>> {
        let head = s.rows(0, n).into_owned();
        let tail = s.rows(n, m).into_owned();
        let (Some(h), Some(t)) = (
            p.op1.project_onto_value(x, &head)?,
            p.op2.project_onto_value(&cx, &tail)?,
        ) else {
            return Ok(None);
        };
        let mut out = DVector::zeros(n + m);
        out.rows_mut(0, n).copy_from(&h);
        out.rows_mut(n, m).copy_from(&t);
        Ok(Some(out))
    };
    projected_least_squares(&b, &target, project).map_err(unsupported_hint)
}

/// `min_{s ∈ M(point)} ||C^T s - target||` by projected gradient descent.
pub fn feasibility_residual(
    c: &LinearMap,
    op: &dyn MonotoneOp,
    point: &DVector<f64>,
    target: &DVector<f64>,
) -> Result<f64> {
    check_dim("feasibility point", op.dim(), point.len())?;
    check_dim("feasibility point", c.rows(), point.len())?;
    check_dim("feasibility target", c.cols(), target.len())?;
    let b = c.matrix().transpose();
    projected_least_squares(&b, target, |s| op.project_onto_value(point, s)).map_err(unsupported_hint)
}

fn unsupported_hint(e: Error) -> Error {
    match e {
        Error::Unsupported(msg) => Error::Unsupported(format!(
            "{msg}; inclusion residual unavailable, compare against admm_reference instead"
        )),
        other => other,
    }
}

/// Minimises `||B s - t||` over the set described by `project`, starting from
/// the projected least-squares solution. Accelerated projected gradient with
/// step `1/||B||^2` and gradient-based restart.
fn projected_least_squares<F>(b: &DMatrix<f64>, t: &DVector<f64>, project: F) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<Option<DVector<f64>>>,
{
    let svd = b.clone().svd(true, true);
    let top = svd.singular_values.max();
    let seed = if top > 0.0 {
        svd.solve(t, top * 1e-12).map_err(|e| Error::Degenerate(e.to_string()))?
    } else {
        DVector::zeros(b.ncols())
    };
    let Some(mut s) = project(&seed)? else {
        return Ok(f64::INFINITY);
    };
    let mut best = (b * &s - t).norm();
    if top == 0.0 {
        return Ok(best);
    }
    let step = 1.0 / (top * top);
    let floor = 1e-15 * (1.0 + t.norm());
    let mut extrapolated = s.clone();
    let mut momentum = 1.0_f64;
    for _ in 0..FEASIBILITY_ITERATIONS {
        if best <= floor {
            break;
        }
        let grad = b.tr_mul(&(b * &extrapolated - t));
        let Some(next) = project(&(&extrapolated - grad * step))? else {
            return Ok(f64::INFINITY);
        };
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        // Restart when the step opposes the previous direction.
        if (&extrapolated - &next).dot(&(&next - &s)) > 0.0 {
            momentum = 1.0;
            extrapolated = next.clone();
        } else {
            extrapolated = &next + (&next - &s) * ((momentum - 1.0) / next_momentum);
            momentum = next_momentum;
        }
        s = next;
        best = best.min((b * &s - t).norm());
    }
    Ok(best)
}

/// Fills `report.inclusion_residual` for a composite resolvent solve.
pub fn certify(report: &mut SolveReport, p: &ResolventProblem<'_>) -> Result<f64> {
    let r = inclusion_residual(p, &report.x)?;
    report.inclusion_residual = Some(r);
    Ok(r)
}

/// Fills `report.inclusion_residual` for a sum resolvent solve.
pub fn certify_sum(report: &mut SolveReport, p: &SumResolventProblem<'_>) -> Result<f64> {
    let r = sum_inclusion_residual(p, &report.x)?;
    report.inclusion_residual = Some(r);
    Ok(r)
}

/// Solves the scalar inclusion `x ∈ z + lambda e M(z)` by bisection, using
/// only the value sets `M(z)` (never the resolvent).
///
/// `dom M` must contain one of the probe points `0`, `x`, `+-2^k` or
/// `x +- 2^k (1 + |x|)` for `-30 <= k <= 27`.
pub fn scalar_resolvent_bisection(op: &dyn MonotoneOp, lambda: f64, e: f64, x: f64) -> Result<f64> {
    check_dim("scalar operator", 1, op.dim())?;
    if !(lambda > 0.0) || !(e > 0.0) {
        return Err(Error::invalid("lambda and e must be positive"));
    }
    let scale = lambda * e;
    // Extremes of the interval M(z), read off by projecting +-inf-like points.
    let bounds = |z: f64| -> Result<Option<(f64, f64)>> {
        let point = DVector::from_element(1, z);
        let lo = op.project_onto_value(&point, &DVector::from_element(1, -f64::MAX))?;
        let hi = op.project_onto_value(&point, &DVector::from_element(1, f64::MAX))?;
        Ok(match (lo, hi) {
            (Some(lo), Some(hi)) => Some((z + scale * lo[0], z + scale * hi[0])),
            _ => None,
        })
    };

    let limit = 1e8;
    // dom M is an interval; outside it the graph of I + scale M is vertical,
    // so points left of an in-domain anchor count as -inf and right as +inf.
    let anchor = [0.0, x]
        .into_iter()
        .chain((-30..=27).flat_map(|k| {
            let r = 2f64.powi(k);
            [r, -r, x + r * (1.0 + x.abs()), x - r * (1.0 + x.abs())]
        }))
        .find_map(|z| match bounds(z) {
            Ok(Some(_)) => Some(Ok(z)),
            Ok(None) => None,
            Err(err) => Some(Err(err)),
        })
        .transpose()?
        .ok_or_else(|| Error::Unsupported(format!("{} has no domain point within |z| <= {limit:e}", op.name())))?;
    let image = |z: f64| -> Result<(f64, f64)> {
        Ok(match bounds(z)? {
            Some(b) => b,
            None if z < anchor => (f64::NEG_INFINITY, f64::NEG_INFINITY),
            None => (f64::INFINITY, f64::INFINITY),
        })
    };

    let mut radius = x.abs() + anchor.abs() + 1.0;
    let (a, b) = loop {
        if radius > limit {
            return Err(Error::NoConvergence(format!("no bracket for x = {x} within |z| <= {limit:e}")));
        }
        let (_, hi_a) = image(-radius)?;
        let (lo_b, _) = image(radius)?;
        if hi_a <= x && lo_b >= x {
            break (-radius, radius);
        }
        radius *= 2.0;
    };
    // The solution set {z : x ∈ image(z)} is a point, widened to at most
    // twice the kink band around a kink; return the midpoint of its ends.
    let first_true = |mut lo: f64, mut hi: f64, pred: &dyn Fn(f64) -> Result<bool>| -> Result<f64> {
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-14 {
                return Ok(0.5 * (lo + hi));
            }
            if pred(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    };
    let left = first_true(a, b, &|z| Ok(image(z)?.1 >= x))?;
    let right = first_true(a, b, &|z| Ok(image(z)?.0 > x))?;
    Ok(0.5 * (left + right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monotone::{BoxIndicatorSubdifferential, L1Subdifferential, LinearMonotoneOp, ZeroOp};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn admm_identity_soft_threshold() {
        let c = LinearMap::identity(2);
        let l1 = L1Subdifferential::new(2);
        let p = ResolventProblem::new(&c, &l1, 1.0, dv(&[3.0, -0.5])).unwrap();
        let r = admm_reference(&p, DEFAULT_ADMM_TOL).unwrap();
        assert!((r.x_ref - dv(&[2.0, 0.0])).norm() < 1e-9);
        assert!(r.primal_residual <= DEFAULT_ADMM_TOL && r.dual_residual <= DEFAULT_ADMM_TOL);
    }

    #[test]
    fn admm_unbounded_box_returns_y() {
        let c = LinearMap::new(2, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0]).unwrap();
        let free = BoxIndicatorSubdifferential::unbounded(2);
        let y = dv(&[1.0, -4.0, 2.5]);
        let p = ResolventProblem::new(&c, &free, 0.3, y.clone()).unwrap();
        let r = admm_reference(&p, DEFAULT_ADMM_TOL).unwrap();
        assert!((r.x_ref - y).norm() < 1e-9);
    }

    #[test]
    fn admm_rejects_non_subdifferential() {
        let c = LinearMap::identity(1);
        let z = ZeroOp::new(1);
        let p = ResolventProblem::new(&c, &z, 1.0, dv(&[1.0])).unwrap();
        assert!(matches!(admm_reference(&p, 1e-10), Err(Error::Unsupported(_))));
        let c2 = LinearMap::identity(2);
        let rotation = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
        let lin = LinearMonotoneOp::new(rotation, dv(&[0.0, 0.0])).unwrap();
        let p = ResolventProblem::new(&c2, &lin, 1.0, dv(&[1.0, 0.0])).unwrap();
        assert!(matches!(admm_reference(&p, 1e-10), Err(Error::Unsupported(_))));
        let sym = LinearMonotoneOp::new(DMatrix::from_element(1, 1, 3.0), dv(&[1.0])).unwrap();
        let p = ResolventProblem::new(&c, &sym, 1.0, dv(&[1.0])).unwrap();
        assert!(admm_reference(&p, 1e-10).unwrap().x_ref[0].abs() < 1e-9);
    }

    #[test]
    fn inclusion_residual_scalar_cases() {
        let c = LinearMap::identity(1);
        let l1 = L1Subdifferential::new(1);
        let p = ResolventProblem::new(&c, &l1, 1.0, dv(&[3.0])).unwrap();
        assert!(inclusion_residual(&p, &dv(&[2.0])).unwrap() < 1e-15);
        assert!((inclusion_residual(&p, &dv(&[2.5])).unwrap() - 0.5).abs() < 1e-12);
        // At a kink the free coordinate absorbs the target.
        let p0 = ResolventProblem::new(&c, &l1, 1.0, dv(&[0.5])).unwrap();
        assert!(inclusion_residual(&p0, &dv(&[0.0])).unwrap() < 1e-15);
    }

    #[test]
    fn inclusion_residual_outside_domain_is_infinite() {
        let c = LinearMap::identity(1);
        let b = BoxIndicatorSubdifferential::new(dv(&[0.0]), dv(&[1.0])).unwrap();
        let p = ResolventProblem::new(&c, &b, 1.0, dv(&[3.0])).unwrap();
        assert_eq!(inclusion_residual(&p, &dv(&[2.0])).unwrap(), f64::INFINITY);
        assert!(inclusion_residual(&p, &dv(&[1.0])).unwrap() < 1e-15);
    }

    #[derive(Debug)]
    struct Opaque;

    impl MonotoneOp for Opaque {
        fn dim(&self) -> usize {
            1
        }
        fn apply_resolvent(&self, _lambda: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(x.clone())
        }
        fn name(&self) -> &'static str {
            "opaque"
        }
    }

    #[test]
    fn inclusion_residual_unsupported_geometry() {
        let c = LinearMap::identity(1);
        let p = ResolventProblem::new(&c, &Opaque, 1.0, dv(&[1.0])).unwrap();
        match inclusion_residual(&p, &dv(&[1.0])) {
            Err(Error::Unsupported(msg)) => assert!(msg.contains("admm_reference")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bisection_examples() {
        let l1 = L1Subdifferential::new(1);
        assert!((scalar_resolvent_bisection(&l1, 1.0, 2.0, 3.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(scalar_resolvent_bisection(&l1, 1.0, 2.0, 0.0).unwrap().abs() < 1e-12);
        let lin = LinearMonotoneOp::new(DMatrix::from_element(1, 1, 4.0), dv(&[0.0])).unwrap();
        assert!((scalar_resolvent_bisection(&lin, 0.5, 1.0, 3.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_handles_restricted_domain() {
        let boxed = BoxIndicatorSubdifferential::new(dv(&[2.0]), dv(&[5.0])).unwrap();
        for (x, expected) in [(7.0, 5.0), (-3.0, 2.0), (3.5, 3.5)] {
            let z = scalar_resolvent_bisection(&boxed, 1.0, 1.0, x).unwrap();
            assert!((z - expected).abs() <= 1e-9, "{x}: {z}");
        }
    }

    #[test]
    fn bisection_bracket_failure() {
        let lin = LinearMonotoneOp::new(DMatrix::from_element(1, 1, 0.0), dv(&[0.0])).unwrap();
        assert!(matches!(
            scalar_resolvent_bisection(&lin, 1.0, 1.0, 1e9),
            Err(Error::NoConvergence(_))
        ));
    }
}
