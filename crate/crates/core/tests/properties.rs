use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qccp_core::cuts::{cluster, separate, CutPool};
use qccp_core::graph::{enumerate_cycle_covers, find_cycle_cover, never_used_arcs, CycleCover, DiGraph};
use qccp_core::instance::{gen_erdos_renyi, preprocess};
use qccp_core::oracle::brute_opt;
use qccp_core::projections::{dykstra_cyclic, DykstraParams, PolySetY, SetKind};
use qccp_core::{CostModel, QcpInstance, SymMat};

fn random_sym(d: usize, rng: &mut ChaCha8Rng) -> SymMat {
    let mut s = SymMat::zeros(d);
    for v in s.packed_mut() {
        *v = rng.gen_range(-0.5..1.5);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brute_is_invariant_under_arc_reindexing(seed in 0u64..10_000, n in 3usize..7) {
        let inst = gen_erdos_renyi(n, 0.6, CostModel::Uniform, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..inst.m()).collect();
        perm.shuffle(&mut rng);
        // Arc e of the original becomes arc perm[e].
        let mut arcs = vec![(0, 0); inst.m()];
        for (e, &(t, h)) in inst.graph.arcs().iter().enumerate() {
            arcs[perm[e]] = (t, h);
        }
        let g = DiGraph::new(n, arcs).unwrap();
        let costs: Vec<_> = inst.costs().map(|((e, f), c)| ((perm[e], perm[f]), c)).collect();
        let shuffled = QcpInstance::new(g, costs).unwrap();
        prop_assert_eq!(brute_opt(&inst).unwrap().0, brute_opt(&shuffled).unwrap().0);
    }

    #[test]
    fn preprocessing_leaves_only_used_arcs(seed in 0u64..10_000, n in 3usize..7) {
        let inst = gen_erdos_renyi(n, 0.5, CostModel::Uniform, seed).unwrap();
        let (red, _) = preprocess(&inst).unwrap();
        prop_assert!(never_used_arcs(&red.graph).unwrap().is_empty());
        let c = find_cycle_cover(&red.graph).unwrap();
        prop_assert!(CycleCover::is_cover_indicator(&red.graph, &c.indicator(red.m())));
        prop_assert_eq!(
            enumerate_cycle_covers(&inst.graph, usize::MAX).unwrap().len(),
            enumerate_cycle_covers(&red.graph, usize::MAX).unwrap().len()
        );
    }

    #[test]
    fn dykstra_limit_ignores_cluster_order(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DiGraph::complete(3);
        let m = random_sym(g.m() + 1, &mut rng);
        let mut pool = CutPool::new();
        pool.extend(separate(&m, 4, &pool));
        prop_assume!(!pool.is_empty());
        cluster(&mut pool, seed);
        let set = PolySetY::new(&g, SetKind::Full);
        let params = DykstraParams { eps_proj: 1e-13, max_sweeps: 200_000, ..Default::default() };
        let a = dykstra_cyclic(&m, &set, &pool, &params);
        let mut rev = pool.clone();
        rev.clusters.reverse();
        for c in rev.clusters.iter_mut() {
            c.reverse();
        }
        let b = dykstra_cyclic(&m, &set, &rev, &params);
        prop_assert!(a.x.sub(&b.x).frobenius() < 1e-6);
    }

    #[test]
    fn separation_skips_existing_cuts(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DiGraph::complete(4);
        let m = random_sym(g.m() + 1, &mut rng);
        let mut pool = CutPool::new();
        pool.extend(separate(&m, 10, &pool));
        let more = separate(&m, 10, &pool);
        prop_assert!(more.iter().all(|c| !pool.cuts.contains(c)));
    }
}
