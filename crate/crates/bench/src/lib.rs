//! Fixtures for the kernel benchmarks.

use qccp_core::facial::{build_w, orthonormalize};
use qccp_core::instance::{gen_manhattan, preprocess};
use qccp_core::solver::{solve_cpalm, PrsmParams, SolverState};
use qccp_core::{Basis, Level, QcpInstance};

pub struct Fixture {
    pub inst: QcpInstance,
    pub basis: Basis,
    /// State after a short S3 run, so the cut pool is populated.
    pub state: SolverState,
}

/// Manhattan torus instance with a warmed-up solver state.
pub fn fixture(dims: &[usize], iters: usize) -> Fixture {
    let inst = preprocess(&gen_manhattan(dims, 10, 1).expect("valid dims"))
        .expect("manhattan instances are feasible")
        .0;
    let basis = orthonormalize(&build_w(&inst.graph).expect("basis")).expect("full rank");
    let params = PrsmParams {
        level: Level::S3,
        max_iter: iters,
        max_iter_cuts: iters,
        max_total_iter: 3 * iters,
        ..Default::default()
    };
    let (state, _) = solve_cpalm(&inst, &basis, &params, None).expect("solver run");
    Fixture { inst, basis, state }
}
