//! Facial reduction: a basis `W` of the null space of `[-1 U; -1 V]`
//! built from a spanning forest of B(G).

use crate::error::{QccpError, Result};
use crate::graph::{find_cycle_cover, CycleCover, DiGraph, SpanningForest};
use crate::linalg::{thin_qr, Mat};

/// Transformation matrix together with the data it was built from.
#[derive(Clone, Debug)]
pub struct Basis {
    /// Dense `(m + 1) × (m + 1 − α)` matrix.
    pub w: Mat,
    pub alpha: usize,
    pub orthonormal: bool,
    /// Integer columns of the sparse construction: `(1, x̄)` first, then
    /// `(0, w^e)` for every non-tree edge.
    pub int_columns: Vec<Vec<i64>>,
    pub seed_cover: CycleCover,
}

impl Basis {
    pub fn cols(&self) -> usize {
        self.w.cols()
    }

    /// Columns as sparse `(row, ±1)` lists, rows 0-based in the extended
    /// space.
    pub fn sparse_columns(&self) -> Vec<Vec<(usize, i64)>> {
        self.int_columns
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(i, &v)| (i, v))
                    .collect()
            })
            .collect()
    }
}

/// `α = 2n − c`, with `c` the number of components of B(G).
pub fn compute_alpha(g: &DiGraph) -> usize {
    2 * g.n() - SpanningForest::build(g).components
}

/// Signed characteristic vectors of the cycles closed by each non-tree edge,
/// in arc-index order. Each has entries ±1 alternating along the cycle.
pub fn cat_basis(g: &DiGraph) -> Vec<Vec<i64>> {
    let forest = SpanningForest::build(g);
    let n = g.n();
    let parent_of = |v: usize| -> (usize, usize) {
        let e = forest.parent_edge[v].expect("non-root");
        let u = if v < n { n + g.head(e) } else { g.tail(e) };
        (e, u)
    };
    let mut out = Vec::new();
    for e in 0..g.m() {
        if forest.in_tree[e] {
            continue;
        }
        // Walk both endpoints up to their common ancestor.
        let (mut a, mut b) = (g.tail(e), n + g.head(e));
        let mut path_a = Vec::new();
        let mut path_b = Vec::new();
        while a != b {
            if forest.depth[a] >= forest.depth[b] {
                let (pe, up) = parent_of(a);
                path_a.push(pe);
                a = up;
            } else {
                let (pe, up) = parent_of(b);
                path_b.push(pe);
                b = up;
            }
        }
        // Cycle order: e, then head side up to the ancestor, then down to
        // the tail side.
        let mut w = vec![0i64; g.m()];
        let mut sign = 1;
        for arc in std::iter::once(e)
            .chain(path_b.iter().copied())
            .chain(path_a.iter().rev().copied())
        {
            w[arc] = sign;
            sign = -sign;
        }
        out.push(w);
    }
    out
}

/// Sparse, non-orthonormal basis: `(1, x̄)` for a cycle cover `x̄` plus the
/// lifted CAT vectors.
pub fn build_w(g: &DiGraph) -> Result<Basis> {
    let cover = find_cycle_cover(g)?;
    let m = g.m();
    let mut cols = Vec::new();
    let mut first = vec![0i64; m + 1];
    first[0] = 1;
    for &e in cover.succ_arcs() {
        first[e + 1] = 1;
    }
    cols.push(first);
    for w in cat_basis(g) {
        let mut c = vec![0i64; m + 1];
        c[1..].copy_from_slice(&w);
        cols.push(c);
    }
    let mut w = Mat::zeros(m + 1, cols.len());
    for (j, c) in cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            w[(i, j)] = v as f64;
        }
    }
    Ok(Basis {
        w,
        alpha: compute_alpha(g),
        orthonormal: false,
        int_columns: cols,
        seed_cover: cover,
    })
}

/// Replaces `W` with an orthonormal basis of the same column space.
pub fn orthonormalize(b: &Basis) -> Result<Basis> {
    let (q, rank) = thin_qr(&b.w);
    if rank < b.w.cols() {
        return Err(QccpError::RankDeficient {
            rank,
            expected: b.w.cols(),
        });
    }
    Ok(Basis {
        w: q,
        orthonormal: true,
        ..b.clone()
    })
}

/// `[-1 U; -1 V] · c` in integer arithmetic, for a column of length `m + 1`.
pub fn flow_residual(g: &DiGraph, c: &[i64]) -> Vec<i64> {
    let n = g.n();
    let mut r = vec![-c[0]; 2 * n];
    for e in 0..g.m() {
        r[g.tail(e)] += c[e + 1];
        r[n + g.head(e)] += c[e + 1];
    }
    r
}
