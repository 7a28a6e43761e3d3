#![allow(dead_code)]

use composite_resolvent::monotone::{BoxIndicatorSubdifferential, L1Subdifferential, LinearMonotoneOp, MonotoneOp, ScaledOp};
use composite_resolvent::LinearMap;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

/// Eigenvalues of `C C^T` in ascending order, from a dense symmetric solver.
pub fn gram_eigenvalues(c: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(c * c.transpose()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// `||I - gamma C C^T||` as the largest singular value of the dense matrix.
pub fn exact_certificate(c: &DMatrix<f64>, gamma: f64) -> f64 {
    let m = c.nrows();
    (DMatrix::identity(m, m) - c * c.transpose() * gamma)
        .svd(false, false)
        .singular_values
        .max()
}

/// `m x n` with `m <= n` and `c / ||E||` in `[lo, hi]` for `E = C C^T`.
pub fn conditioned_full_row_rank(rng: &mut ChaCha8Rng, m: usize, n: usize, lo: f64, hi: f64) -> LinearMap {
    assert!(m <= n);
    loop {
        let c = random_matrix(rng, m, n) * rng.gen_range(0.5..3.0);
        let e = gram_eigenvalues(&c);
        let ratio = e[0] / e[m - 1];
        if ratio >= lo && ratio <= hi {
            return LinearMap::from_matrix(c).unwrap();
        }
    }
}

/// A random subdifferential operator on `R^dim`: scaled l1, a box, or a
/// symmetric positive semidefinite affine map.
pub fn random_operator(rng: &mut ChaCha8Rng, dim: usize) -> Box<dyn MonotoneOp> {
    random_operator_with_lipschitz(rng, dim).0
}

/// As [`random_operator`], also returning the Lipschitz constant of the
/// single-valued (affine) case and 0 for the others.
pub fn random_operator_with_lipschitz(rng: &mut ChaCha8Rng, dim: usize) -> (Box<dyn MonotoneOp>, f64) {
    let op: Box<dyn MonotoneOp> = match rng.gen_range(0..3) {
        0 => Box::new(ScaledOp::new(Box::new(L1Subdifferential::new(dim)), rng.gen_range(0.1..2.0)).unwrap()),
        1 => {
            let lower = DVector::from_fn(dim, |_, _| {
                if rng.gen_bool(0.2) {
                    f64::NEG_INFINITY
                } else {
                    rng.gen_range(-2.0..0.0)
                }
            });
            let upper = DVector::from_fn(dim, |_, _| {
                if rng.gen_bool(0.2) {
                    f64::INFINITY
                } else {
                    rng.gen_range(0.0..2.0)
                }
            });
            Box::new(BoxIndicatorSubdifferential::new(lower, upper).unwrap())
        }
        _ => {
            let g = random_matrix(rng, dim, dim);
            let a = &g * g.transpose() * 0.5;
            let lip = a.norm();
            return (Box::new(LinearMonotoneOp::new(a, random_vector(rng, dim, 1.0)).unwrap()), lip);
        }
    };
    (op, 0.0)
}

/// A separable operator on `R^dim` together with its scalar coordinate operators.
pub fn random_separable(rng: &mut ChaCha8Rng, dim: usize) -> (Box<dyn MonotoneOp>, Vec<Box<dyn MonotoneOp>>) {
    match rng.gen_range(0..3) {
        0 => (
            Box::new(L1Subdifferential::new(dim)),
            (0..dim).map(|_| Box::new(L1Subdifferential::new(1)) as Box<dyn MonotoneOp>).collect(),
        ),
        1 => {
            let t = rng.gen_range(0.1..3.0);
            let scaled = |d| Box::new(ScaledOp::new(Box::new(L1Subdifferential::new(d)), t).unwrap()) as Box<dyn MonotoneOp>;
            (scaled(dim), (0..dim).map(|_| scaled(1)).collect())
        }
        _ => {
            let lower: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..=0.0)).collect();
            let upper: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..=2.0)).collect();
            let boxed = BoxIndicatorSubdifferential::new(dv(&lower), dv(&upper)).unwrap();
            let parts = (0..dim)
                .map(|i| {
                    Box::new(BoxIndicatorSubdifferential::new(dv(&lower[i..=i]), dv(&upper[i..=i])).unwrap())
                        as Box<dyn MonotoneOp>
                })
                .collect();
            (Box::new(boxed), parts)
        }
    }
}
