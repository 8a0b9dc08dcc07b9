use qccp_core::cuts::{cluster, CutPool, TriangleCut};
use qccp_core::graph::DiGraph;
use qccp_core::linalg::SymMat;
use qccp_core::oracle::{cut_problem, project_matrix, qp_project_oracle, y_set_problem, YDescription};
use qccp_core::projections::{
    dykstra_cyclic, dykstra_parallel, project_cut_values, DykstraParams, PolySetY, SetKind,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng) -> DiGraph {
    let n = rng.gen_range(3..=4);
    let mut all: Vec<(usize, usize)> = (0..n)
        .flat_map(|t| (0..n).filter(move |&h| h != t).map(move |h| (t, h)))
        .collect();
    all.shuffle(rng);
    let m = rng.gen_range(3..=6);
    DiGraph::new(n, all[..m].to_vec()).unwrap()
}

fn random_sym(d: usize, rng: &mut ChaCha8Rng) -> SymMat {
    let mut s = SymMat::zeros(d);
    for v in s.packed_mut() {
        *v = rng.gen_range(-0.5..1.5);
    }
    s
}

fn random_cuts(m: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<TriangleCut> {
    let mut out = Vec::new();
    while out.len() < k {
        let mut a: Vec<usize> = (0..m).collect();
        a.shuffle(rng);
        let c = TriangleCut::new(a[0], a[1], a[2]);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

#[test]
fn project_y_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let g = random_graph(&mut rng);
        let m = random_sym(g.m() + 1, &mut rng);
        let set = PolySetY::new(&g, SetKind::Full);
        let want = project_matrix(&m, &y_set_problem(&m, &g, &[], YDescription::Bounded)).unwrap();
        assert!(set.project(&m).sub(&want).frobenius() < 1e-8);
        let want = project_matrix(&m, &y_set_problem(&m, &g, &[], YDescription::Affine)).unwrap();
        assert!(set.project_aff(&m).sub(&want).frobenius() < 1e-8);
    }
}

#[test]
fn cut_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let v: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let want = qp_project_oracle(&cut_problem(v)).unwrap();
        let got = project_cut_values(v);
        for k in 0..5 {
            assert!((got[k] - want[k]).abs() < 1e-10, "{v:?} {got:?} {want:?}");
        }
    }
}

#[test]
fn dykstra_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let g = random_graph(&mut rng);
        let m = random_sym(g.m() + 1, &mut rng);
        let k = rng.gen_range(1..=3);
        let cuts = random_cuts(g.m(), k, &mut rng);
        let mut pool = CutPool::new();
        pool.extend(cuts.clone());
        cluster(&mut pool, 0);
        let set = PolySetY::new(&g, SetKind::Full);
        let want = project_matrix(&m, &y_set_problem(&m, &g, &cuts, YDescription::Bounded)).unwrap();
        let params = DykstraParams { eps_proj: 1e-12, max_sweeps: 100_000, ..Default::default() };
        let cyc = dykstra_cyclic(&m, &set, &pool, &params);
        assert!(cyc.x.sub(&want).frobenius() < 1e-6, "cyc {}", cyc.x.sub(&want).frobenius());
        let par = dykstra_parallel(&m, &set, &pool, 0.5, &params);
        assert!(par.x.sub(&want).frobenius() < 1e-6, "par {} {}", par.x.sub(&want).frobenius(), par.sweeps);
    }
}
