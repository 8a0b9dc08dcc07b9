//! Directed graphs, cycle covers and the bipartite representation.
//!
//! Nodes and arcs are 0-based here; the text format and the CLI shift them
//! to 1-based.

use std::collections::VecDeque;

use crate::error::{QccpError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiGraph {
    n: usize,
    arcs: Vec<(usize, usize)>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl DiGraph {
    pub fn new(n: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::with_capacity(arcs.len());
        for (idx, &(t, h)) in arcs.iter().enumerate() {
            if t >= n || h >= n {
                return Err(QccpError::Validation(format!(
                    "arc {} = ({}, {}) references a node outside 1..{}",
                    idx + 1,
                    t + 1,
                    h + 1,
                    n
                )));
            }
            if t == h {
                return Err(QccpError::Validation(format!(
                    "arc {} is a self-loop on node {}",
                    idx + 1,
                    t + 1
                )));
            }
            if !seen.insert((t, h)) {
                return Err(QccpError::Validation(format!(
                    "arc {} duplicates ({}, {})",
                    idx + 1,
                    t + 1,
                    h + 1
                )));
            }
            out_adj[t].push(idx);
            in_adj[h].push(idx);
        }
        Ok(DiGraph {
            n,
            arcs,
            out_adj,
            in_adj,
        })
    }

    /// Complete digraph on `n` nodes; arcs ordered by (tail, head).
    pub fn complete(n: usize) -> Self {
        let arcs = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        DiGraph::new(n, arcs).expect("complete digraph is valid")
    }

    /// Directed cycle `0 → 1 → ... → n-1 → 0`.
    pub fn cycle(n: usize) -> Self {
        DiGraph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()).expect("cycle is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn tail(&self, e: usize) -> usize {
        self.arcs[e].0
    }

    pub fn head(&self, e: usize) -> usize {
        self.arcs[e].1
    }

    /// Arc indices leaving node `i`.
    pub fn out_arcs(&self, i: usize) -> &[usize] {
        &self.out_adj[i]
    }

    /// Arc indices entering node `i`.
    pub fn in_arcs(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    pub fn find_arc(&self, t: usize, h: usize) -> Option<usize> {
        self.out_adj[t].iter().copied().find(|&e| self.arcs[e].1 == h)
    }

    /// Subgraph keeping the listed arcs in the given order.
    pub fn subgraph(&self, keep: &[usize]) -> DiGraph {
        DiGraph::new(self.n, keep.iter().map(|&e| self.arcs[e]).collect())
            .expect("subgraph of a valid graph is valid")
    }
}

/// A cycle cover, stored as the selected arc leaving each node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleCover {
    succ_arc: Vec<usize>,
}

impl CycleCover {
    /// Builds a cover from the arc leaving each node, validating it.
    pub fn from_succ_arcs(g: &DiGraph, succ_arc: Vec<usize>) -> Result<Self> {
        if succ_arc.len() != g.n() {
            return Err(QccpError::Validation("cover needs one arc per node".into()));
        }
        let mut hit = vec![false; g.n()];
        for (i, &e) in succ_arc.iter().enumerate() {
            if e >= g.m() || g.tail(e) != i {
                return Err(QccpError::Validation(format!(
                    "arc {} does not leave node {}",
                    e + 1,
                    i + 1
                )));
            }
            let h = g.head(e);
            if hit[h] {
                return Err(QccpError::Validation(format!(
                    "node {} entered twice",
                    h + 1
                )));
            }
            hit[h] = true;
        }
        Ok(CycleCover { succ_arc })
    }

    /// Builds a cover from an unordered arc set.
    pub fn from_arcs(g: &DiGraph, arcs: &[usize]) -> Result<Self> {
        let mut succ = vec![usize::MAX; g.n()];
        for &e in arcs {
            if e >= g.m() {
                return Err(QccpError::Validation(format!("arc {} out of range", e + 1)));
            }
            let t = g.tail(e);
            if succ[t] != usize::MAX {
                return Err(QccpError::Validation(format!(
                    "node {} left twice",
                    t + 1
                )));
            }
            succ[t] = e;
        }
        if let Some(i) = succ.iter().position(|&e| e == usize::MAX) {
            return Err(QccpError::Validation(format!("node {} never left", i + 1)));
        }
        CycleCover::from_succ_arcs(g, succ)
    }

    pub fn succ_arcs(&self) -> &[usize] {
        &self.succ_arc
    }

    /// Selected arcs in increasing index order.
    pub fn arcs(&self) -> Vec<usize> {
        let mut a = self.succ_arc.clone();
        a.sort_unstable();
        a
    }

    /// 0/1 indicator over all `m` arcs.
    pub fn indicator(&self, m: usize) -> Vec<f64> {
        let mut x = vec![0.0; m];
        for &e in &self.succ_arc {
            x[e] = 1.0;
        }
        x
    }

    /// Cycles as arc sequences, each starting at its lowest node; cycles are
    /// listed by that node.
    pub fn cycles(&self, g: &DiGraph) -> Vec<Vec<usize>> {
        let mut seen = vec![false; g.n()];
        let mut out = Vec::new();
        for start in 0..g.n() {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                let e = self.succ_arc[v];
                cyc.push(e);
                v = g.head(e);
            }
            out.push(cyc);
        }
        out
    }

    /// Checks `Ux = Vx = 1` directly from an arc indicator.
    pub fn is_cover_indicator(g: &DiGraph, x: &[f64]) -> bool {
        if x.len() != g.m() || x.iter().any(|&v| v != 0.0 && v != 1.0) {
            return false;
        }
        (0..g.n()).all(|i| {
            let o: f64 = g.out_arcs(i).iter().map(|&e| x[e]).sum();
            let n: f64 = g.in_arcs(i).iter().map(|&e| x[e]).sum();
            o == 1.0 && n == 1.0
        })
    }
}

/// Perfect-matching state on B(G): `out[i]` is the arc used by tail `i`,
/// `into[j]` the arc used by head `j`.
struct Matching {
    out: Vec<Option<usize>>,
    into: Vec<Option<usize>>,
}

impl Matching {
    fn empty(n: usize) -> Self {
        Matching {
            out: vec![None; n],
            into: vec![None; n],
        }
    }

    /// BFS for an alternating path from free tail `src` to any free head,
    /// skipping arcs for which `blocked` is true. Applies it on success.
    fn augment(&mut self, g: &DiGraph, src: usize, blocked: &dyn Fn(usize) -> bool) -> bool {
        let n = g.n();
        // prev_arc[j] = arc used to reach head j.
        let mut prev_arc = vec![usize::MAX; n];
        let mut visited_tail = vec![false; n];
        let mut queue = VecDeque::new();
        queue.push_back(src);
        visited_tail[src] = true;
        while let Some(t) = queue.pop_front() {
            for &e in g.out_arcs(t) {
                if blocked(e) {
                    continue;
                }
                let h = g.head(e);
                if prev_arc[h] != usize::MAX {
                    continue;
                }
                prev_arc[h] = e;
                match self.into[h] {
                    None => {
                        self.flip(g, h, &prev_arc);
                        return true;
                    }
                    Some(m) => {
                        let t2 = g.tail(m);
                        if !visited_tail[t2] {
                            visited_tail[t2] = true;
                            queue.push_back(t2);
                        }
                    }
                }
            }
        }
        false
    }

    fn flip(&mut self, g: &DiGraph, mut h: usize, prev_arc: &[usize]) {
        loop {
            let e = prev_arc[h];
            let t = g.tail(e);
            let old = self.out[t];
            self.out[t] = Some(e);
            self.into[h] = Some(e);
            match old {
                Some(o) => h = g.head(o),
                None => break,
            }
        }
    }
}

fn perfect_matching(g: &DiGraph) -> Option<Matching> {
    let mut mat = Matching::empty(g.n());
    for i in 0..g.n() {
        if !mat.augment(g, i, &|_| false) {
            return None;
        }
    }
    Some(mat)
}

/// Any cycle cover of `g`, or `InstanceInfeasible`.
pub fn find_cycle_cover(g: &DiGraph) -> Result<CycleCover> {
    let mat = perfect_matching(g).ok_or(QccpError::InstanceInfeasible)?;
    Ok(CycleCover {
        succ_arc: mat.out.into_iter().map(|e| e.expect("perfect")).collect(),
    })
}

/// Cycle cover of `g` restricted to arcs with `allowed[e]`, if any.
pub fn find_cycle_cover_within(g: &DiGraph, allowed: &[bool]) -> Option<CycleCover> {
    let mut mat = Matching::empty(g.n());
    for i in 0..g.n() {
        if !mat.augment(g, i, &|e| !allowed[e]) {
            return None;
        }
    }
    Some(CycleCover {
        succ_arc: mat.out.into_iter().map(|e| e.expect("perfect")).collect(),
    })
}

/// Arcs contained in no cycle cover, in increasing order.
pub fn never_used_arcs(g: &DiGraph) -> Result<Vec<usize>> {
    let base = perfect_matching(g).ok_or(QccpError::InstanceInfeasible)?;
    let mut used = vec![false; g.m()];
    for e in base.out.iter().flatten() {
        used[*e] = true;
    }
    for f in 0..g.m() {
        if used[f] {
            continue;
        }
        let (t, h) = g.arcs()[f];
        let mut mat = Matching {
            out: base.out.clone(),
            into: base.into.clone(),
        };
        // Force f: release t's old partner head and h's old partner tail.
        let old_out = mat.out[t].expect("perfect");
        let old_in = mat.into[h].expect("perfect");
        let free_tail = g.tail(old_in);
        mat.into[g.head(old_out)] = None;
        mat.out[free_tail] = None;
        mat.out[t] = Some(f);
        mat.into[h] = Some(f);
        let ok = mat.augment(g, free_tail, &|e| {
            let (a, b) = g.arcs()[e];
            a == t || b == h
        });
        if ok {
            for e in mat.out.iter().flatten() {
                used[*e] = true;
            }
        }
    }
    Ok((0..g.m()).filter(|&e| !used[e]).collect())
}

/// B(G): tails are vertices `0..n`, heads `n..2n`; edge `e` joins
/// `tail(e)` and `n + head(e)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteRep {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub component_count: usize,
}

/// BFS spanning forest of B(G).
#[derive(Clone, Debug)]
pub struct SpanningForest {
    /// Edge to the parent, `None` at roots.
    pub parent_edge: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    pub in_tree: Vec<bool>,
    pub components: usize,
}

impl SpanningForest {
    /// Roots are taken in increasing vertex order; neighbours are visited
    /// in arc-index order.
    pub fn build(g: &DiGraph) -> Self {
        let n = g.n();
        let mut parent_edge = vec![None; 2 * n];
        let mut depth = vec![0; 2 * n];
        let mut visited = vec![false; 2 * n];
        let mut in_tree = vec![false; g.m()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for root in 0..2 * n {
            if visited[root] {
                continue;
            }
            components += 1;
            visited[root] = true;
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                let incident: &[usize] = if v < n {
                    g.out_arcs(v)
                } else {
                    g.in_arcs(v - n)
                };
                for &e in incident {
                    let w = if v < n { n + g.head(e) } else { g.tail(e) };
                    if !visited[w] {
                        visited[w] = true;
                        parent_edge[w] = Some(e);
                        depth[w] = depth[v] + 1;
                        in_tree[e] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        SpanningForest {
            parent_edge,
            depth,
            in_tree,
            components,
        }
    }
}

pub fn bipartite_rep(g: &DiGraph) -> BipartiteRep {
    let n = g.n();
    BipartiteRep {
        n,
        edges: g.arcs().iter().map(|&(t, h)| (t, n + h)).collect(),
        component_count: SpanningForest::build(g).components,
    }
}

/// All cycle covers, in lexicographic order of the successor-arc vectors.
pub fn enumerate_cycle_covers(g: &DiGraph, limit: usize) -> Result<Vec<CycleCover>> {
    fn rec(
        g: &DiGraph,
        i: usize,
        succ: &mut Vec<usize>,
        head_used: &mut [bool],
        out: &mut Vec<CycleCover>,
        limit: usize,
    ) -> Result<()> {
        if i == g.n() {
            if out.len() == limit {
                return Err(QccpError::LimitExceeded { limit });
            }
            out.push(CycleCover {
                succ_arc: succ.clone(),
            });
            return Ok(());
        }
        for &e in g.out_arcs(i) {
            let h = g.head(e);
            if head_used[h] {
                continue;
            }
            head_used[h] = true;
            succ.push(e);
            rec(g, i + 1, succ, head_used, out, limit)?;
            succ.pop();
            head_used[h] = false;
        }
        Ok(())
    }
    let mut out = Vec::new();
    let mut succ = Vec::with_capacity(g.n());
    let mut used = vec![false; g.n()];
    rec(g, 0, &mut succ, &mut used, &mut out, limit)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c4_chord() -> DiGraph {
        DiGraph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap()
    }

    /// Permanent of a 0/1 matrix by Ryser's formula.
    fn permanent(a: &[Vec<u8>]) -> i64 {
        let n = a.len();
        let mut total = 0i64;
        for mask in 1u32..(1 << n) {
            let mut prod = 1i64;
            for row in a {
                let s: i64 = (0..n)
                    .filter(|&j| mask >> j & 1 == 1)
                    .map(|j| row[j] as i64)
                    .sum();
                prod *= s;
            }
            let sign = if (n - mask.count_ones() as usize) % 2 == 0 {
                1
            } else {
                -1
            };
            total += sign * prod;
        }
        total
    }

    #[test]
    fn rejects_bad_arcs() {
        assert!(DiGraph::new(2, vec![(0, 0)]).is_err());
        assert!(DiGraph::new(2, vec![(0, 1), (0, 1)]).is_err());
        assert!(DiGraph::new(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn cover_of_k3_is_a_three_cycle() {
        let g = DiGraph::complete(3);
        let c = find_cycle_cover(&g).unwrap();
        assert_eq!(c.cycles(&g).len(), 1);
        assert!(CycleCover::is_cover_indicator(&g, &c.indicator(6)));
    }

    #[test]
    fn c4_cover_is_all_arcs() {
        let g = DiGraph::cycle(4);
        assert_eq!(find_cycle_cover(&g).unwrap().arcs(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn star_is_infeasible() {
        let g = DiGraph::new(3, vec![(0, 1), (0, 2)]).unwrap();
        assert!(matches!(
            find_cycle_cover(&g),
            Err(QccpError::InstanceInfeasible)
        ));
        assert!(matches!(
            never_used_arcs(&g),
            Err(QccpError::InstanceInfeasible)
        ));
    }

    #[test]
    fn never_used_examples() {
        assert!(never_used_arcs(&DiGraph::complete(3)).unwrap().is_empty());
        assert!(never_used_arcs(&DiGraph::cycle(4)).unwrap().is_empty());
        assert_eq!(never_used_arcs(&c4_chord()).unwrap(), vec![4]);
    }

    #[test]
    fn bipartite_components() {
        for n in 2..8 {
            assert_eq!(bipartite_rep(&DiGraph::cycle(n)).component_count, n);
        }
        for n in 3..8 {
            assert_eq!(bipartite_rep(&DiGraph::complete(n)).component_count, 1);
        }
        let b = bipartite_rep(&DiGraph::complete(3));
        assert_eq!(b.edges.len(), 6);
        assert_eq!(b.edges[0], (0, 4));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_cycle_covers(&DiGraph::complete(3), 100).unwrap().len(), 2);
        assert_eq!(enumerate_cycle_covers(&DiGraph::cycle(4), 100).unwrap().len(), 1);
        for n in 2..7 {
            let a: Vec<Vec<u8>> = (0..n)
                .map(|i| (0..n).map(|j| u8::from(i != j)).collect())
                .collect();
            let count = enumerate_cycle_covers(&DiGraph::complete(n), 10_000).unwrap().len();
            assert_eq!(count as i64, permanent(&a), "n={n}");
        }
        assert_eq!(enumerate_cycle_covers(&DiGraph::complete(4), 100).unwrap().len(), 9);
        assert!(matches!(
            enumerate_cycle_covers(&DiGraph::complete(4), 5),
            Err(QccpError::LimitExceeded { limit: 5 })
        ));
    }

    #[test]
    fn cover_validation() {
        let g = DiGraph::complete(3);
        assert!(CycleCover::from_arcs(&g, &[0, 1]).is_err());
        let c = find_cycle_cover(&g).unwrap();
        assert_eq!(CycleCover::from_arcs(&g, &c.arcs()).unwrap(), c);
    }

    fn arb_graph() -> impl Strategy<Value = DiGraph> {
        (2usize..=6).prop_flat_map(|n| {
            proptest::collection::vec(proptest::bool::weighted(0.5), n * (n - 1)).prop_map(
                move |mask| {
                    let all = DiGraph::complete(n);
                    let keep: Vec<usize> = (0..all.m()).filter(|&e| mask[e]).collect();
                    all.subgraph(&keep)
                },
            )
        })
    }

    proptest! {
        #[test]
        fn never_used_matches_enumeration(g in arb_graph()) {
            let covers = enumerate_cycle_covers(&g, 1_000_000).unwrap();
            match never_used_arcs(&g) {
                Err(QccpError::InstanceInfeasible) => prop_assert!(covers.is_empty()),
                Err(e) => panic!("{e}"),
                Ok(j) => {
                    prop_assert!(!covers.is_empty());
                    let mut used = vec![false; g.m()];
                    for c in &covers {
                        for &e in c.succ_arcs() { used[e] = true; }
                    }
                    let expect: Vec<usize> = (0..g.m()).filter(|&e| !used[e]).collect();
                    prop_assert_eq!(j, expect);
                    let c = find_cycle_cover(&g).unwrap();
                    prop_assert!(CycleCover::is_cover_indicator(&g, &c.indicator(g.m())));
                }
            }
        }
    }
}
