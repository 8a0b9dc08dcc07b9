//! Triangle cuts: separation and clustering into non-overlapping groups.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::SymMat;

/// Violation threshold used by [`separate`].
pub const VIOLATION_TOL: f64 = 1e-6;

/// The inequality `X_ef + X_eg <= X_ee + X_fg` over arcs `e`, `f`, `g`
/// (0-based, `f < g`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriangleCut {
    pub e: usize,
    pub f: usize,
    pub g: usize,
}

impl TriangleCut {
    /// Canonical form; `f` and `g` play symmetric roles.
    pub fn new(e: usize, f: usize, g: usize) -> Self {
        assert!(e != f && f != g && e != g, "cut arcs must be distinct");
        let (f, g) = if f < g { (f, g) } else { (g, f) };
        TriangleCut { e, f, g }
    }

    pub fn arcs(&self) -> [usize; 3] {
        [self.e, self.f, self.g]
    }

    /// Packed offsets of `(e,f), (e,g), (f,g), (e,e), (0,e)` in a matrix of
    /// order `m + 1`.
    pub fn offsets(&self, y: &SymMat) -> [usize; 5] {
        let (e, f, g) = (self.e + 1, self.f + 1, self.g + 1);
        [
            y.offset(e, f),
            y.offset(e, g),
            y.offset(f, g),
            y.offset(e, e),
            y.offset(0, e),
        ]
    }

    /// `Y_ef + Y_eg − Y_ee − Y_fg`.
    pub fn violation(&self, y: &SymMat) -> f64 {
        let (e, f, g) = (self.e + 1, self.f + 1, self.g + 1);
        y.get(e, f) + y.get(e, g) - y.get(e, e) - y.get(f, g)
    }

    pub fn overlaps(&self, other: &TriangleCut) -> bool {
        self.arcs().iter().any(|a| other.arcs().contains(a))
    }
}

/// Cuts plus a partition of their indices into clusters of pairwise
/// disjoint triples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CutPool {
    pub cuts: Vec<TriangleCut>,
    pub clusters: Vec<Vec<usize>>,
}

impl CutPool {
    pub fn new() -> Self {
        CutPool::default()
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    /// Appends cuts; clusters must be recomputed afterwards.
    pub fn extend(&mut self, new: impl IntoIterator<Item = TriangleCut>) {
        self.cuts.extend(new);
        self.clusters.clear();
    }

    /// Clusters to sweep over. Falls back to one cut per cluster when the
    /// pool has not been clustered.
    pub fn sweep_order(&self) -> Vec<Vec<usize>> {
        if self.clusters.is_empty() {
            (0..self.cuts.len()).map(|i| vec![i]).collect()
        } else {
            self.clusters.clone()
        }
    }

    /// Adjacency lists of the overlap graph.
    pub fn conflict_graph(&self) -> Vec<Vec<usize>> {
        let mut by_arc: std::collections::HashMap<usize, Vec<usize>> = Default::default();
        for (i, c) in self.cuts.iter().enumerate() {
            for a in c.arcs() {
                by_arc.entry(a).or_default().push(i);
            }
        }
        let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); self.cuts.len()];
        for list in by_arc.values() {
            for (k, &i) in list.iter().enumerate() {
                for &j in &list[k + 1..] {
                    adj[i].insert(j);
                    adj[j].insert(i);
                }
            }
        }
        adj.into_iter()
            .map(|s| {
                let mut v: Vec<usize> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    /// True when the clusters partition the cuts and no cluster holds two
    /// overlapping cuts.
    pub fn clusters_are_proper(&self) -> bool {
        let mut seen = vec![false; self.cuts.len()];
        for cl in &self.clusters {
            for &i in cl {
                if i >= seen.len() || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
            for (k, &i) in cl.iter().enumerate() {
                for &j in &cl[k + 1..] {
                    if self.cuts[i].overlaps(&self.cuts[j]) {
                        return false;
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

#[derive(PartialEq)]
struct Scored(f64, TriangleCut);

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    /// "Better" cuts compare smaller so a max-heap keeps the worst on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(self.1.cmp(&other.1))
    }
}

/// The `num_cuts` most violated triangle inequalities of `y` (violation
/// above [`VIOLATION_TOL`]), skipping those in `existing`. Ties go to the
/// lexicographically smaller triple. Sorted by decreasing violation.
pub fn separate(y: &SymMat, num_cuts: usize, existing: &CutPool) -> Vec<TriangleCut> {
    let m = y.order() - 1;
    if num_cuts == 0 || m < 3 {
        return Vec::new();
    }
    let skip: HashSet<TriangleCut> = existing.cuts.iter().copied().collect();
    let mut heap: BinaryHeap<Scored> = BinaryHeap::with_capacity(num_cuts + 1);
    // neg_min[f] = max(0, -min_g Y_fg) bounds what the Y_fg term can add.
    let neg_min: Vec<f64> = (0..m)
        .map(|f| {
            (0..m)
                .filter(|&g| g != f)
                .fold(0.0f64, |lo, g| lo.min(y.get(f + 1, g + 1)))
                .abs()
        })
        .collect();
    let mut row = vec![0.0; m];
    for e in 0..m {
        let yee = y.get(e + 1, e + 1);
        for (a, r) in row.iter_mut().enumerate() {
            *r = y.get(e + 1, a + 1);
        }
        let row_max = row
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != e)
            .fold(f64::NEG_INFINITY, |mx, (_, &v)| mx.max(v));
        for f in 0..m {
            if f == e {
                continue;
            }
            let yef = row[f];
            let bound = yef + row_max - yee + neg_min[f];
            let floor = if heap.len() == num_cuts {
                heap.peek().map_or(VIOLATION_TOL, |s| s.0)
            } else {
                VIOLATION_TOL
            };
            if bound < floor {
                continue;
            }
            for g in f + 1..m {
                if g == e {
                    continue;
                }
                let v = yef + row[g] - yee - y.get(f + 1, g + 1);
                if v <= VIOLATION_TOL {
                    continue;
                }
                let cut = TriangleCut { e, f, g };
                if skip.contains(&cut) {
                    continue;
                }
                let cand = Scored(v, cut);
                if heap.len() < num_cuts {
                    heap.push(cand);
                } else if cand < *heap.peek().expect("non-empty") {
                    heap.pop();
                    heap.push(cand);
                }
            }
        }
    }
    let mut out: Vec<Scored> = heap.into_vec();
    out.sort();
    out.into_iter().map(|s| s.1).collect()
}

/// Proper coloring of the overlap graph: DSATUR first, then tabu search
/// tries to remove one colour at a time.
pub fn cluster(pool: &mut CutPool, seed: u64) {
    let adj = pool.conflict_graph();
    let mut colors = dsatur(&adj);
    let mut k = colors.iter().max().map_or(0, |&c| c + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while k > 1 {
        match tabucol(&adj, k - 1, &colors, &mut rng) {
            Some(c) => {
                colors = c;
                k -= 1;
            }
            None => break,
        }
    }
    let mut clusters = vec![Vec::new(); k];
    for (i, &c) in colors.iter().enumerate() {
        clusters[c].push(i);
    }
    clusters.retain(|c| !c.is_empty());
    pool.clusters = clusters;
}

/// DSATUR greedy coloring; returns a colour per vertex.
pub fn dsatur(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut color = vec![usize::MAX; n];
    let mut sat: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| color[v] == usize::MAX)
            .max_by(|&a, &b| {
                sat[a]
                    .len()
                    .cmp(&sat[b].len())
                    .then(adj[a].len().cmp(&adj[b].len()))
                    .then(b.cmp(&a))
            })
            .expect("uncoloured vertex remains");
        let c = (0..).find(|c| !sat[v].contains(c)).expect("unbounded");
        color[v] = c;
        for &u in &adj[v] {
            sat[u].insert(c);
        }
    }
    color
}

const TABU_ITERS: usize = 10_000;

/// Tabu search for a proper `k`-coloring, starting from `start` with colours
/// `>= k` folded into range. Returns `None` when the budget runs out.
fn tabucol(
    adj: &[Vec<usize>],
    k: usize,
    start: &[usize],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut color: Vec<usize> = start
        .iter()
        .map(|&c| if c < k { c } else { rng.gen_range(0..k) })
        .collect();
    // gamma[v][c] = neighbours of v coloured c.
    let mut gamma = vec![vec![0usize; k]; n];
    for v in 0..n {
        for &u in &adj[v] {
            gamma[v][color[u]] += 1;
        }
    }
    let mut conflicts: usize = (0..n).map(|v| gamma[v][color[v]]).sum::<usize>() / 2;
    let mut tabu = vec![vec![0usize; k]; n];
    let mut best = conflicts;
    for it in 1..=TABU_ITERS {
        if conflicts == 0 {
            return Some(color);
        }
        let mut mv: Option<(usize, usize)> = None;
        let mut mv_delta = i64::MAX;
        for v in 0..n {
            let cv = color[v];
            if gamma[v][cv] == 0 {
                continue;
            }
            for c in 0..k {
                if c == cv {
                    continue;
                }
                let delta = gamma[v][c] as i64 - gamma[v][cv] as i64;
                let aspirated = (conflicts as i64 + delta) < best as i64;
                if tabu[v][c] >= it && !aspirated {
                    continue;
                }
                if delta < mv_delta {
                    mv_delta = delta;
                    mv = Some((v, c));
                }
            }
        }
        let Some((v, c)) = mv else { continue };
        let old = color[v];
        color[v] = c;
        for &u in &adj[v] {
            gamma[u][old] -= 1;
            gamma[u][c] += 1;
        }
        conflicts = (conflicts as i64 + mv_delta) as usize;
        best = best.min(conflicts);
        let conflicting = (0..n).filter(|&w| gamma[w][color[w]] > 0).count();
        let tenure = (0.6 * conflicting as f64) as usize + rng.gen_range(0..10);
        tabu[v][old] = it + tenure;
    }
    (conflicts == 0).then_some(color)
}
