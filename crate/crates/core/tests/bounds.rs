//! Lower and upper bounds against exhaustive optima on small instances.

use qccp_core::facial::{build_w, orthonormalize};
use qccp_core::graph::enumerate_cycle_covers;
use qccp_core::heuristics::{
    sq_learning_merged, ub_euclidean, ub_oversample, ub_undersample, x_out, SqParams,
};
use qccp_core::instance::{gen_erdos_renyi, gen_manhattan, gen_reload, preprocess};
use qccp_core::linalg::{congruence, sym_eig};
use qccp_core::oracle::brute_opt;
use qccp_core::projections::{PolySetY, SetKind};
use qccp_core::solver::{solve_cpalm, PrsmParams, Stop};
use qccp_core::{CostModel, Level, QcpInstance};

fn toy(i: u64) -> QcpInstance {
    let raw = match i % 3 {
        0 => gen_erdos_renyi(6, 0.6, CostModel::Uniform, i).unwrap(),
        1 => gen_reload(6, 10, 5, i).unwrap(),
        _ => gen_manhattan(&[2, 3], 10, i).unwrap(),
    };
    preprocess(&raw).unwrap().0
}

#[test]
fn heuristics_never_beat_the_optimum() {
    for i in 0..9 {
        let inst = toy(i);
        let (opt, _) = brute_opt(&inst).unwrap();
        let basis = orthonormalize(&build_w(&inst.graph).unwrap()).unwrap();
        let (st, _) = solve_cpalm(&inst, &basis, &PrsmParams::default(), None).unwrap();
        let xo = x_out(&st.y);
        assert!(ub_euclidean(&inst, &xo).unwrap().value >= opt);
        assert!(ub_undersample(&inst, &xo, 50, i).unwrap().best.value >= opt);
        assert!(ub_oversample(&inst, &st.y, 50, None, i).unwrap().best.value >= opt);
        let sq = SqParams {
            trials: 10,
            ..Default::default()
        };
        let pool = sq_learning_merged(&inst, &st.y, &sq, &[0.3, 0.5, 0.7], i).unwrap();
        let ub = pool.best_cover(&inst).unwrap().value;
        assert!(ub >= opt);
        // The recombination is at least as good as any single pooled cover.
        for c in enumerate_cycle_covers(&inst.graph, usize::MAX).unwrap() {
            let cycles = c.cycles(&inst.graph);
            let pooled = cycles.iter().all(|cy| {
                pool.cycles.iter().any(|p| {
                    let mut a = p.arcs.clone();
                    let mut b = cy.clone();
                    a.sort_unstable();
                    b.sort_unstable();
                    a == b
                })
            });
            if pooled {
                assert!(ub <= inst.cover_cost(&c) + 1e-9);
            }
        }
    }
}

#[test]
fn heuristics_are_deterministic() {
    let inst = toy(4);
    let basis = orthonormalize(&build_w(&inst.graph).unwrap()).unwrap();
    let (st, _) = solve_cpalm(&inst, &basis, &PrsmParams::default(), None).unwrap();
    let xo = x_out(&st.y);
    let a = ub_undersample(&inst, &xo, 30, 9).unwrap();
    let b = ub_undersample(&inst, &xo, 30, 9).unwrap();
    assert_eq!(a.covers, b.covers);
    let a = ub_oversample(&inst, &st.y, 30, None, 9).unwrap();
    let b = ub_oversample(&inst, &st.y, 30, None, 9).unwrap();
    assert_eq!(a.covers, b.covers);
    let sq = SqParams {
        trials: 5,
        ..Default::default()
    };
    let a = sq_learning_merged(&inst, &st.y, &sq, &[0.5], 9).unwrap();
    let b = sq_learning_merged(&inst, &st.y, &sq, &[0.5], 9).unwrap();
    assert_eq!(a.cycles, b.cycles);
}

#[test]
fn converged_iterate_is_feasible() {
    let inst = preprocess(&gen_manhattan(&[4, 4], 10, 2).unwrap()).unwrap().0;
    let basis = orthonormalize(&build_w(&inst.graph).unwrap()).unwrap();
    let params = PrsmParams {
        max_iter: 5000,
        max_total_iter: 5000,
        max_stag_iter: usize::MAX,
        ..Default::default()
    };
    let (st, rep) = solve_cpalm(&inst, &basis, &params, None).unwrap();
    assert_eq!(rep.stop, Stop::Converged);
    let v = congruence(&basis.w, &st.z);
    assert!(st.y.sub(&v).frobenius() < 1e-5 * (1.0 + st.y.frobenius()));
    let eig = sym_eig(&st.z).unwrap();
    assert!(eig.values.iter().all(|&l| l >= -1e-9));
    let set = PolySetY::new(&inst.graph, SetKind::Full);
    assert!(set.violation(&st.y) < 1e-6);
    for (e, f) in set.zero_pattern() {
        assert!(st.y.get(e + 1, f + 1).abs() < 1e-5);
    }
    // Y (−1, u_i) ≈ 0 for the out-incidence row u_i of every node.
    let g = &inst.graph;
    for i in 0..g.n() {
        let mut u = vec![0.0; g.m() + 1];
        u[0] = -1.0;
        for &e in g.out_arcs(i) {
            u[e + 1] = 1.0;
        }
        let yu = st.y.to_dense().mul_vec(&u);
        let norm: f64 = yu.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 1e-5, "node {i}: {norm}");
    }
}

#[test]
fn s1_s2_s3_bounds_are_valid() {
    for i in 0..6 {
        let inst = toy(i);
        let (opt, _) = brute_opt(&inst).unwrap();
        let basis = orthonormalize(&build_w(&inst.graph).unwrap()).unwrap();
        for level in [Level::S1, Level::S2, Level::S3] {
            let p = PrsmParams {
                level,
                ..Default::default()
            };
            let (_, rep) = solve_cpalm(&inst, &basis, &p, None).unwrap();
            assert!(rep.lb_rounded <= opt, "{level:?}: {} > {opt}", rep.lb_rounded);
        }
    }
}
