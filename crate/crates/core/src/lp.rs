//! Linear and integer subproblems: assignment over the 2-factor polytope,
//! the lower-bound LP, and exact set partitioning.

use crate::cuts::CutPool;
use crate::error::{QccpError, Result};
use crate::graph::DiGraph;
use crate::linalg::SymMat;
use crate::projections::PolySetY;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

/// Select one out-arc per node of `out_rows` and one in-arc per node of
/// `in_rows`, using only allowed arcs from `out_rows` to `in_rows`.
#[derive(Clone, Debug)]
pub struct TransportProblem<'a> {
    pub graph: &'a DiGraph,
    pub objective: Vec<f64>,
    /// `false` masks an arc out of the problem.
    pub allowed: Vec<bool>,
    pub out_rows: Vec<bool>,
    pub in_rows: Vec<bool>,
    pub sense: Sense,
}

impl<'a> TransportProblem<'a> {
    /// All rows constrained, all arcs allowed: optimisation over Conv(P).
    pub fn full(graph: &'a DiGraph, objective: Vec<f64>, sense: Sense) -> Self {
        let n = graph.n();
        TransportProblem {
            graph,
            objective,
            allowed: vec![true; graph.m()],
            out_rows: vec![true; n],
            in_rows: vec![true; n],
            sense,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TransportOutcome {
    Optimal { x: Vec<u8>, value: f64 },
    /// No selection satisfies the row constraints.
    Infinite,
}

pub fn solve_transport(tp: &TransportProblem) -> TransportOutcome {
    let g = tp.graph;
    let left: Vec<usize> = (0..g.n()).filter(|&i| tp.out_rows[i]).collect();
    let right: Vec<usize> = (0..g.n()).filter(|&i| tp.in_rows[i]).collect();
    if left.len() != right.len() {
        return TransportOutcome::Infinite;
    }
    let k = left.len();
    let mut col_of = vec![usize::MAX; g.n()];
    for (j, &r) in right.iter().enumerate() {
        col_of[r] = j;
    }
    let mut cost = vec![vec![f64::INFINITY; k]; k];
    let mut arc_at = vec![vec![usize::MAX; k]; k];
    for (i, &t) in left.iter().enumerate() {
        for &e in g.out_arcs(t) {
            let j = col_of[g.head(e)];
            if !tp.allowed[e] || j == usize::MAX {
                continue;
            }
            let c = match tp.sense {
                Sense::Max => -tp.objective[e],
                Sense::Min => tp.objective[e],
            };
            if c < cost[i][j] {
                cost[i][j] = c;
                arc_at[i][j] = e;
            }
        }
    }
    let Some(assign) = hungarian(&cost) else {
        return TransportOutcome::Infinite;
    };
    let mut x = vec![0u8; g.m()];
    let mut value = 0.0;
    for (i, &j) in assign.iter().enumerate() {
        let e = arc_at[i][j];
        x[e] = 1;
        value += tp.objective[e];
    }
    TransportOutcome::Optimal { x, value }
}

/// Minimum-cost perfect assignment on a square matrix; `INFINITY` marks a
/// forbidden pair. Returns the column of each row, or `None` if no finite
/// perfect assignment exists.
pub fn hungarian(cost: &[Vec<f64>]) -> Option<Vec<usize>> {
    let n = cost.len();
    if n == 0 {
        return Some(vec![]);
    }
    // Potentials u (rows), v (cols); p[j] = row matched to column j, 1-based
    // with column 0 as the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let c = cost[i0 - 1][j - 1];
                if c.is_finite() {
                    let cur = c - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    Some(assign)
}

/// Row of a linear program in `<=` or `=` form.
#[derive(Clone, Debug)]
pub struct LpRow {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub equality: bool,
}

/// `min cᵀx` subject to rows and `0 <= x <= upper`.
#[derive(Clone, Debug, Default)]
pub struct Lp {
    pub cost: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

const SIMPLEX_TOL: f64 = 1e-9;

/// Dense bounded-variable two-phase primal simplex with Bland's rule.
pub fn solve_lp(lp: &Lp) -> Result<LpSolution> {
    let nx = lp.cost.len();
    let nr = lp.rows.len();
    let slacks: Vec<usize> = (0..nr).filter(|&i| !lp.rows[i].equality).collect();
    let ns = slacks.len();
    // A `<=` row with non-negative right-hand side starts with its slack
    // basic; every other row gets an artificial.
    let needs_art: Vec<usize> = (0..nr)
        .filter(|&i| lp.rows[i].equality || lp.rows[i].rhs < 0.0)
        .collect();
    let na = needs_art.len();
    // Columns: x, slacks, artificials.
    let ncol = nx + ns + na;
    let mut t = vec![vec![0.0; ncol]; nr];
    let mut b = vec![0.0; nr];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coefs {
            t[i][j] += a;
        }
        b[i] = row.rhs;
    }
    let mut basis = vec![usize::MAX; nr];
    for (k, &i) in slacks.iter().enumerate() {
        t[i][nx + k] = 1.0;
        basis[i] = nx + k;
    }
    let mut upper = lp.upper.clone();
    upper.extend(std::iter::repeat(f64::INFINITY).take(ns + na));
    for (k, &i) in needs_art.iter().enumerate() {
        if b[i] < 0.0 {
            t[i].iter_mut().for_each(|v| *v = -*v);
            b[i] = -b[i];
        }
        t[i][nx + ns + k] = 1.0;
        basis[i] = nx + ns + k;
    }
    let mut s = Simplex {
        t,
        rhs: b,
        basis,
        at_upper: vec![false; ncol],
        upper,
        d: Vec::new(),
        pivots: 0,
        cap: 50_000 + 200 * ncol,
    };
    if na > 0 {
        let mut c1 = vec![0.0; ncol];
        c1[nx + ns..].iter_mut().for_each(|v| *v = 1.0);
        s.run(&c1, ncol)?;
        let infeas: f64 = (0..nr)
            .filter(|&i| s.basis[i] >= nx + ns)
            .map(|i| s.rhs[i])
            .sum();
        if infeas > 1e-7 {
            return Err(QccpError::Validation("linear program is infeasible".into()));
        }
        // Artificials are pinned at zero from here on; drive them out of
        // the basis where a structural or slack column can replace them.
        s.upper[nx + ns..].iter_mut().for_each(|u| *u = 0.0);
        for i in 0..nr {
            if s.basis[i] >= nx + ns {
                let cand = (0..nx + ns)
                    .find(|&j| !s.basis.contains(&j) && s.t[i][j].abs() > 1e-7);
                if let Some(j) = cand {
                    let v = if s.at_upper[j] { s.upper[j] } else { 0.0 };
                    s.exchange(i, j, v, false);
                }
            }
        }
    }
    let mut c2 = vec![0.0; ncol];
    c2[..nx].copy_from_slice(&lp.cost);
    s.run(&c2, nx + ns)?;
    let vals = s.values();
    let x = vals[..nx].to_vec();
    let value = x.iter().zip(&lp.cost).map(|(a, c)| a * c).sum();
    Ok(LpSolution {
        x,
        value,
        pivots: s.pivots,
    })
}

struct Simplex {
    /// Current tableau `B⁻¹A`.
    t: Vec<Vec<f64>>,
    /// Values of the basic variables.
    rhs: Vec<f64>,
    basis: Vec<usize>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    /// Reduced costs of the phase being run, kept current by `exchange`.
    d: Vec<f64>,
    pivots: usize,
    cap: usize,
}

impl Simplex {
    fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.upper.len())
            .map(|j| if self.at_upper[j] { self.upper[j] } else { 0.0 })
            .collect();
        for (i, &j) in self.basis.iter().enumerate() {
            v[j] = self.rhs[i];
        }
        v
    }

    /// Makes `x_j` basic in row `r` with the given value; the leaving
    /// variable becomes nonbasic at its upper bound if `to_upper`. Other
    /// basic values must already be current.
    fn exchange(&mut self, r: usize, j: usize, value: f64, to_upper: bool) {
        let old = self.basis[r];
        let p = self.t[r][j];
        self.t[r].iter_mut().for_each(|v| *v /= p);
        let prow = std::mem::take(&mut self.t[r]);
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
        if !self.d.is_empty() {
            let f = self.d[j];
            if f != 0.0 {
                for (v, pv) in self.d.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
        self.t[r] = prow;
        self.rhs[r] = value;
        self.basis[r] = j;
        self.at_upper[j] = false;
        self.at_upper[old] = to_upper;
        self.pivots += 1;
    }

    /// Minimises `cᵀx`; only columns below `active` may enter.
    fn run(&mut self, c: &[f64], active: usize) -> Result<()> {
        let nr = self.t.len();
        // Reduced costs d_j = c_j − c_Bᵀ t_j.
        let mut d = c.to_vec();
        for i in 0..nr {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for (v, t) in d.iter_mut().zip(&self.t[i]) {
                    *v -= cb * t;
                }
            }
        }
        self.d = d;
        let mut is_basic = vec![false; c.len()];
        let out = loop {
            if self.pivots > self.cap {
                break Err(QccpError::SimplexCycleGuard(self.pivots));
            }
            is_basic.iter_mut().for_each(|v| *v = false);
            for &j in &self.basis {
                is_basic[j] = true;
            }
            // Bland: the lowest improving index enters.
            let enter = (0..active).find(|&j| {
                if is_basic[j] || self.upper[j] == 0.0 {
                    return false;
                }
                if self.at_upper[j] {
                    self.d[j] > SIMPLEX_TOL
                } else {
                    self.d[j] < -SIMPLEX_TOL
                }
            });
            let Some(j) = enter else {
                break Ok(());
            };
            // dir = +1 increases x_j from its lower bound, −1 decreases it
            // from its upper bound. Basic x_B(i) moves by −dir·t_ij per unit.
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };
            let mut step = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..nr {
                let a = dir * self.t[i][j];
                let bi = self.basis[i];
                let (lim, to_upper) = if a > SIMPLEX_TOL {
                    (self.rhs[i].max(0.0) / a, false)
                } else if a < -SIMPLEX_TOL && self.upper[bi].is_finite() {
                    ((self.upper[bi] - self.rhs[i]).max(0.0) / -a, true)
                } else {
                    continue;
                };
                let take = if lim < step - 1e-12 {
                    true
                } else if lim <= step + 1e-12 {
                    // Ties: a bound flip wins, then the lowest basic index.
                    matches!(leave, Some((li, _)) if bi < self.basis[li])
                } else {
                    false
                };
                if take {
                    step = lim;
                    leave = Some((i, to_upper));
                }
            }
            if step.is_infinite() {
                break Err(QccpError::Unbounded);
            }
            for i in 0..nr {
                self.rhs[i] -= dir * step * self.t[i][j];
            }
            match leave {
                None => self.at_upper[j] = !self.at_upper[j],
                Some((r, to_upper)) => {
                    let v = if self.at_upper[j] {
                        self.upper[j] - step
                    } else {
                        step
                    };
                    self.exchange(r, j, v, to_upper);
                }
            }
        };
        self.d.clear();
        out
    }
}

/// Minimum of `⟨C, Y⟩` over `Y00 = 1`, `diag = arrow`, `1ᵀy = n`,
/// `0 <= y <= 1`, inner entries in `[0, 1]`, zeros on Z and the pool's
/// triangle cuts. Entries no cut touches are solved in closed form; the
/// arrow and cut entries go through [`solve_lp`].
pub fn solve_lb_lp(c: &SymMat, pool: &CutPool, set: &PolySetY) -> Result<f64> {
    let m = set.m;
    let n = set.n as f64;
    let arrow: Vec<f64> = (1..=m).map(|e| c.get(e, e) + 2.0 * c.get(0, e)).collect();
    let mut value = c.get(0, 0);

    // Inner entries coupled to cuts get LP columns after the m arrow ones.
    let mut col_of = std::collections::HashMap::new();
    let mut cost = arrow.clone();
    let mut upper = vec![1.0; m];
    let mut pair_col = |e: usize, f: usize, cost: &mut Vec<f64>, upper: &mut Vec<f64>| -> usize {
        let key = if e < f { (e, f) } else { (f, e) };
        *col_of.entry(key).or_insert_with(|| {
            cost.push(2.0 * c.get(key.0 + 1, key.1 + 1));
            upper.push(if set.is_zero_pair(key.0, key.1) { 0.0 } else { 1.0 });
            cost.len() - 1
        })
    };
    let mut rows = vec![LpRow {
        coefs: (0..m).map(|e| (e, 1.0)).collect(),
        rhs: n,
        equality: true,
    }];
    for cut in &pool.cuts {
        let ef = pair_col(cut.e, cut.f, &mut cost, &mut upper);
        let eg = pair_col(cut.e, cut.g, &mut cost, &mut upper);
        let fg = pair_col(cut.f, cut.g, &mut cost, &mut upper);
        rows.push(LpRow {
            coefs: vec![(ef, 1.0), (eg, 1.0), (cut.e, -1.0), (fg, -1.0)],
            rhs: 0.0,
            equality: false,
        });
    }
    for e in 0..m {
        for f in e + 1..m {
            if !set.is_zero_pair(e, f) && !col_of.contains_key(&(e, f)) {
                value += (2.0 * c.get(e + 1, f + 1)).min(0.0);
            }
        }
    }
    if pool.is_empty() {
        value += greedy_arrow(&arrow, n);
    } else {
        let sol = solve_lp(&Lp { cost, upper, rows })?;
        value += sol.value;
    }
    Ok(value)
}

/// `min aᵀy` over `1ᵀy = n, 0 <= y <= 1`: fill the smallest coefficients.
fn greedy_arrow(a: &[f64], n: f64) -> f64 {
    let mut s = a.to_vec();
    s.sort_by(|x, y| x.total_cmp(y));
    let mut left = n;
    let mut v = 0.0;
    for x in s {
        if left <= 0.0 {
            break;
        }
        let take = left.min(1.0);
        v += take * x;
        left -= take;
    }
    v
}

/// Exact cover of `0..n` by columns (node sets) at minimum cost.
#[derive(Clone, Debug)]
pub struct SppInstance {
    pub n: usize,
    pub columns: Vec<Vec<usize>>,
    pub costs: Vec<f64>,
}

/// Branch and bound on the lowest uncovered node. The bound adds, for every
/// uncovered node, the cheapest per-node share `cost / |column|` of any
/// column containing it.
pub fn solve_spp(spp: &SppInstance) -> Result<(Vec<usize>, f64)> {
    let n = spp.n;
    let mut by_node: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, col) in spp.columns.iter().enumerate() {
        for &i in col {
            by_node[i].push(k);
        }
    }
    for list in &mut by_node {
        list.sort_by(|&a, &b| spp.costs[a].total_cmp(&spp.costs[b]).then(a.cmp(&b)));
    }
    let share: Vec<f64> = (0..n)
        .map(|i| {
            by_node[i]
                .iter()
                .map(|&k| spp.costs[k] / spp.columns[k].len() as f64)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    if share.iter().any(|s| s.is_infinite()) {
        return Err(QccpError::SppInfeasible);
    }
    struct Search<'a> {
        spp: &'a SppInstance,
        by_node: Vec<Vec<usize>>,
        share: Vec<f64>,
        covered: Vec<bool>,
        chosen: Vec<usize>,
        best: Option<(Vec<usize>, f64)>,
    }
    impl Search<'_> {
        fn rec(&mut self, cost: f64, rest_bound: f64) {
            let Some(i) = self.covered.iter().position(|c| !c) else {
                if self.best.as_ref().map_or(true, |(_, b)| cost < *b - 1e-12) {
                    self.best = Some((self.chosen.clone(), cost));
                }
                return;
            };
            if let Some((_, b)) = &self.best {
                if cost + rest_bound >= *b - 1e-12 {
                    return;
                }
            }
            for idx in 0..self.by_node[i].len() {
                let k = self.by_node[i][idx];
                let col = &self.spp.columns[k];
                if col.iter().any(|&v| self.covered[v]) {
                    continue;
                }
                let drop: f64 = col.iter().map(|&v| self.share[v]).sum();
                for &v in col {
                    self.covered[v] = true;
                }
                self.chosen.push(k);
                self.rec(cost + self.spp.costs[k], rest_bound - drop);
                self.chosen.pop();
                for &v in &self.spp.columns[k] {
                    self.covered[v] = false;
                }
            }
        }
    }
    let total: f64 = share.iter().sum();
    let mut s = Search {
        spp,
        by_node,
        share,
        covered: vec![false; n],
        chosen: Vec::new(),
        best: None,
    };
    s.rec(0.0, total);
    let (mut cols, v) = s.best.ok_or(QccpError::SppInfeasible)?;
    cols.sort_unstable();
    Ok((cols, v))
}
