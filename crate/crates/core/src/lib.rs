//! Resolvents of composite monotone operators `C^T M C` and of sums
//! `M1 + C^T M2 C`, computed by Krasnoselskii-Mann iteration on fixed-point
//! maps that only need the resolvent of `M` and products with `C`.
//!
//! ```
//! use composite_resolvent::{solve_algorithm2, L1Subdifferential, LinearMap, ResolventProblem, SolveOptions};
//! use nalgebra::DVector;
//!
//! let c = LinearMap::identity(2);
//! let op = L1Subdifferential::new(2);
//! let p = ResolventProblem::new(&c, &op, 1.0, DVector::from_column_slice(&[3.0, 0.5])).unwrap();
//! let r = solve_algorithm2(&p, &SolveOptions { tol: 1e-12, ..SolveOptions::default() }).unwrap();
//! assert!((r.x[0] - 2.0).abs() < 1e-9 && r.x[1].abs() < 1e-9);
//! ```

pub mod composite;
pub mod descriptor;
pub mod error;
pub mod example;
pub mod linop;
pub mod lure;
pub mod monotone;
pub mod oracle;

pub use composite::{
    auto_kappa, auto_parameters, contraction_estimate, map_n, map_p, map_q, mcx_resolvent, solve_algorithm1,
    solve_algorithm2, solve_algorithm2_from, solve_algorithm3, AutoParameters, KmSchedule, Parameter,
    ResolventProblem, SolveOptions, SolveReport, SumResolventProblem,
};
pub use error::{Error, Result};
pub use linop::{estimate_spectrum, ConditionCheck, GramSpectrum, LinearMap};
pub use lure::{equilibrium_residual, find_equilibrium, EquilibriumReport, LureOptions, LureSystem};
pub use monotone::{
    diag_scaled_resolvent, membership_residual, resolvent, soft_threshold, yosida, BoxIndicatorSubdifferential,
    L1Subdifferential, LinearMonotoneOp, MonotoneOp, ResolventOnly, ScaledOp, ZeroOp,
};
pub use oracle::{
    admm_reference, admm_reference_sum, certify, certify_sum, feasibility_residual, inclusion_residual,
    scalar_resolvent_bisection, sum_inclusion_residual, OracleReport,
};
