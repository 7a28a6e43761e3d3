mod common;

use common::*;
use composite_resolvent::monotone::{soft_threshold, L1Subdifferential, MonotoneOp};
use composite_resolvent::oracle::DEFAULT_ADMM_TOL;
use composite_resolvent::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn tight() -> SolveOptions {
    SolveOptions {
        tol: 1e-10,
        max_iter: 5_000_000,
        ..SolveOptions::default()
    }
}

fn l1_or_box(r: &mut ChaCha8Rng, dim: usize) -> Box<dyn MonotoneOp> {
    loop {
        let op = random_operator(r, dim);
        if op.name() != "linear" {
            return op;
        }
    }
}

#[test]
fn algorithm_two_matches_admm() {
    for i in 0..50u64 {
        let mut r = rng(3000 + i);
        let n = r.gen_range(2..=10);
        let m = r.gen_range(2..=10);
        let c = if m <= n {
            conditioned_full_row_rank(&mut r, m, n, 0.05, 1.0)
        } else {
            LinearMap::from_matrix(random_matrix(&mut r, m, n)).unwrap()
        };
        let op = l1_or_box(&mut r, m);
        let lambda = r.gen_range(0.01..10.0);
        let p = ResolventProblem::new(&c, op.as_ref(), lambda, random_vector(&mut r, n, 3.0)).unwrap();
        let x = solve_algorithm2(&p, &tight()).unwrap().x;
        let reference = admm_reference(&p, DEFAULT_ADMM_TOL).unwrap();
        assert!((x - &reference.x_ref).norm() <= 1e-6, "instance {i}");
        let self_check = inclusion_residual(&p, &reference.x_ref).unwrap();
        assert!(self_check <= 1e-7, "instance {i}: oracle residual {self_check:e}");
    }
}

#[test]
fn algorithm_three_matches_admm() {
    for i in 0..50u64 {
        let mut r = rng(3100 + i);
        let n = r.gen_range(2..=10);
        let m = r.gen_range(2..=10);
        let c = LinearMap::from_matrix(random_matrix(&mut r, m, n)).unwrap();
        let op1 = l1_or_box(&mut r, n);
        let op2 = l1_or_box(&mut r, m);
        let lambda = r.gen_range(0.01..10.0);
        let p = SumResolventProblem::new(&c, op1.as_ref(), op2.as_ref(), lambda, random_vector(&mut r, n, 3.0)).unwrap();
        let x = solve_algorithm3(&p, &tight()).unwrap().x;
        let reference = admm_reference_sum(&p, DEFAULT_ADMM_TOL).unwrap();
        assert!((x - &reference.x_ref).norm() <= 1e-6, "instance {i}");
        let res = sum_inclusion_residual(&p, &reference.x_ref).unwrap();
        assert!(res <= 1e-7, "instance {i} ({} + {}, {m}x{n}): {res:e}", op1.name(), op2.name());
    }
}

#[test]
fn perturbed_candidates_are_flagged() {
    for i in 0..20u64 {
        let mut r = rng(3200 + i);
        let n = r.gen_range(2..=6);
        let c = conditioned_full_row_rank(&mut r, n, n, 0.05, 1.0);
        let l1 = L1Subdifferential::new(n);
        let p = ResolventProblem::new(&c, &l1, 1.0, random_vector(&mut r, n, 3.0)).unwrap();
        let x = solve_algorithm2(&p, &tight()).unwrap().x;
        let mut bumped = x.clone();
        bumped[0] += 0.1;
        assert!(inclusion_residual(&p, &bumped).unwrap() > 1e-3, "instance {i}");
    }
}

#[test]
fn bisection_matches_soft_threshold() {
    let mut r = rng(3300);
    let l1 = L1Subdifferential::new(1);
    for _ in 0..1000 {
        let lambda = r.gen_range(0.01..10.0);
        let e = r.gen_range(0.01..10.0);
        let x = r.gen_range(-50.0..50.0);
        let z = scalar_resolvent_bisection(&l1, lambda, e, x).unwrap();
        assert!((z - soft_threshold(x, lambda * e)).abs() <= 1e-12, "x {x} t {}", lambda * e);
    }
}
