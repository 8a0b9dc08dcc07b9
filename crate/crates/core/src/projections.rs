//! Polyhedral projections: the set Y, single triangle cuts, and Dykstra's
//! cyclic and parallel schemes for their intersection.

use rayon::prelude::*;

use crate::cuts::{CutPool, TriangleCut};
use crate::graph::DiGraph;
use crate::linalg::{project_hyperplane_sum, project_simplex, SymMat};

/// Which constraints the polyhedral set carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    /// `Y_00 = 1`, `diag = arrow`, trace `n + 1`, arrow `>= 0`, inner
    /// entries in `[0, 1]`, zeros on Z.
    Full,
    /// Only the affine arrow constraints: `Y_00 = 1`, `diag = arrow`, trace
    /// `n + 1`. Inner entries are free.
    Relaxed,
}

/// The polyhedral set Y for a graph.
#[derive(Clone, Debug)]
pub struct PolySetY {
    pub n: usize,
    pub m: usize,
    pub kind: SetKind,
    /// Zero pattern Z as extended index pairs `(i, j)`, `1 <= i < j`.
    zero_pairs: Vec<(usize, usize)>,
    /// `zero[o]` for packed offset `o`.
    zero: Vec<bool>,
}

impl PolySetY {
    pub fn new(g: &DiGraph, kind: SetKind) -> Self {
        let m = g.m();
        let proto = SymMat::zeros(m + 1);
        let mut zero = vec![false; proto.packed().len()];
        let mut zero_pairs = Vec::new();
        for i in 0..g.n() {
            for list in [g.out_arcs(i), g.in_arcs(i)] {
                for (k, &e) in list.iter().enumerate() {
                    for &f in &list[k + 1..] {
                        let (a, b) = if e < f { (e + 1, f + 1) } else { (f + 1, e + 1) };
                        let o = proto.offset(a, b);
                        if !zero[o] {
                            zero[o] = true;
                            zero_pairs.push((a, b));
                        }
                    }
                }
            }
        }
        zero_pairs.sort_unstable();
        PolySetY {
            n: g.n(),
            m,
            kind,
            zero_pairs,
            zero,
        }
    }

    pub fn order(&self) -> usize {
        self.m + 1
    }

    /// Pairs `(e, f)` of arcs (0-based, `e < f`) sharing a tail or a head.
    pub fn zero_pattern(&self) -> Vec<(usize, usize)> {
        self.zero_pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect()
    }

    pub fn is_zero_pair(&self, e: usize, f: usize) -> bool {
        if e == f {
            return false;
        }
        let (i, j) = if e < f { (e + 1, f + 1) } else { (f + 1, e + 1) };
        self.zero[i * (2 * self.order() + 1 - i) / 2 + (j - i)]
    }

    /// Packed mask of entries fixed to zero.
    pub fn zero_mask(&self) -> &[bool] {
        &self.zero
    }

    /// Projection onto this set.
    pub fn project(&self, m: &SymMat) -> SymMat {
        let mut out = m.clone();
        self.project_in_place(&mut out);
        out
    }

    pub fn project_in_place(&self, y: &mut SymMat) {
        match self.kind {
            SetKind::Full => self.project_arrow_and_inner(y, true),
            SetKind::Relaxed => self.project_arrow_only(y),
        }
    }

    /// Projection onto the affine hull constraints
    /// `Y_00 = 1, diag = arrow, trace = n + 1, zeros on Z`.
    pub fn project_aff(&self, m: &SymMat) -> SymMat {
        let mut y = m.clone();
        self.project_arrow_and_inner(&mut y, false);
        y
    }

    fn project_arrow_and_inner(&self, y: &mut SymMat, full: bool) {
        let d = self.order();
        let arrow = t_arrow(y);
        let p = if full {
            project_simplex(&arrow, self.n as f64)
        } else {
            project_hyperplane_sum(&arrow, self.n as f64)
        };
        let buf = y.packed_mut();
        buf[0] = 1.0;
        let mut o = 1;
        for &pe in &p {
            buf[o] = pe;
            o += 1;
        }
        for (i, &pi) in p.iter().enumerate() {
            buf[o] = pi;
            o += 1;
            let len = d - (i + 2);
            for k in 0..len {
                let idx = o + k;
                buf[idx] = if self.zero[idx] {
                    0.0
                } else if full {
                    buf[idx].clamp(0.0, 1.0)
                } else {
                    buf[idx]
                };
            }
            o += len;
        }
    }

    fn project_arrow_only(&self, y: &mut SymMat) {
        let arrow = t_arrow(y);
        let p = project_hyperplane_sum(&arrow, self.n as f64);
        y.set(0, 0, 1.0);
        for (e, &pe) in p.iter().enumerate() {
            y.set(0, e + 1, pe);
            y.set(e + 1, e + 1, pe);
        }
    }

    /// Largest violation of the constraints of this set (0 when inside).
    pub fn violation(&self, y: &SymMat) -> f64 {
        let d = self.order();
        let mut worst: f64 = (y.get(0, 0) - 1.0).abs();
        let mut trace = 0.0;
        for e in 1..d {
            worst = worst.max((y.get(e, e) - y.get(0, e)).abs());
            trace += y.get(e, e);
            if self.kind == SetKind::Full {
                worst = worst.max(-y.get(0, e));
            }
        }
        worst = worst.max((trace - self.n as f64).abs());
        if self.kind == SetKind::Full {
            for i in 1..d {
                for j in i + 1..d {
                    let v = y.get(i, j);
                    let o = y.offset(i, j);
                    if self.zero[o] {
                        worst = worst.max(v.abs());
                    } else {
                        worst = worst.max(-v).max(v - 1.0);
                    }
                }
            }
        }
        worst
    }
}

/// `(diag(X) + 2x) / 3` where `x` is row 0 without its first entry.
pub fn t_arrow(m: &SymMat) -> Vec<f64> {
    (1..m.order())
        .map(|e| (m.get(e, e) + 2.0 * m.get(0, e)) / 3.0)
        .collect()
}

/// Places `x / 3` on row 0, column 0 and the diagonal (the `(0, 0)` entry
/// stays 0).
pub fn t_arrow_star(x: &[f64]) -> SymMat {
    let mut s = SymMat::zeros(x.len() + 1);
    for (e, &v) in x.iter().enumerate() {
        s.set(0, e + 1, v / 3.0);
        s.set(e + 1, e + 1, v / 3.0);
    }
    s
}

/// Zeroes row/column 0, the diagonal and the Z entries.
pub fn t_inner(m: &SymMat, set: &PolySetY) -> SymMat {
    let d = m.order();
    let mut s = SymMat::zeros(d);
    for i in 1..d {
        for j in i + 1..d {
            if !set.zero[m.offset(i, j)] {
                s.set(i, j, m.get(i, j));
            }
        }
    }
    s
}

/// Entrywise clamp to `[0, 1]`.
pub fn t_box(m: &SymMat) -> SymMat {
    let mut s = m.clone();
    s.packed_mut().iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    s
}

/// Closed-form projection onto one cut with the arrow of `e` tied:
/// input and output are `[M_ef, M_eg, M_fg, M_ee, M_0e]`.
#[inline]
pub fn project_cut_values(v: [f64; 5]) -> [f64; 5] {
    let [mef, meg, mfg, mee, m0e] = v;
    let a = mee + 2.0 * m0e;
    if mef + meg <= a / 3.0 + mfg {
        let pi = mee / 3.0 + 2.0 * m0e / 3.0;
        return [mef, meg, mfg, pi, pi];
    }
    let delta = (a + 3.0 * mfg + 8.0 * mef - 3.0 * meg) / 11.0;
    let theta = (a + 3.0 * mfg - 3.0 * mef + 8.0 * meg) / 11.0;
    let mu = (-a + 8.0 * mfg + 3.0 * mef + 3.0 * meg) / 11.0;
    let pi = (3.0 * a - 2.0 * mfg + 2.0 * mef + 2.0 * meg) / 11.0;
    [delta, theta, mu, pi, pi]
}

/// Multiplier of the cut constraint in the closed-form projection.
pub fn cut_multiplier(v: [f64; 5]) -> f64 {
    let [mef, meg, mfg, mee, m0e] = v;
    if mef + meg <= (mee + 2.0 * m0e) / 3.0 + mfg {
        0.0
    } else {
        (-4.0 * mee - 8.0 * m0e - 12.0 * mfg + 12.0 * mef + 12.0 * meg) / 11.0
    }
}

pub fn project_cut(m: &SymMat, c: &TriangleCut) -> SymMat {
    let mut out = m.clone();
    let offs = c.offsets(m);
    let buf = out.packed_mut();
    let p = project_cut_values(offs.map(|o| buf[o]));
    for (o, v) in offs.iter().zip(p) {
        buf[*o] = v;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Cut projections inside one cluster run on the rayon pool.
    Parallel,
}

#[derive(Clone, Copy, Debug)]
pub struct DykstraParams {
    /// Passes over the cut clusters per projection onto Y.
    pub k_repeats: usize,
    pub eps_proj: f64,
    pub max_sweeps: usize,
    pub exec: Exec,
}

impl Default for DykstraParams {
    fn default() -> Self {
        DykstraParams {
            k_repeats: 5,
            eps_proj: 1e-8,
            max_sweeps: 2000,
            exec: Exec::Sequential,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DykstraOutcome {
    pub x: SymMat,
    pub sweeps: usize,
    pub converged: bool,
}

/// Cyclic Dykstra onto `Y ∩ H_1 ∩ ... ∩ H_t`. Each sweep projects onto Y
/// once, then runs `k_repeats` passes over the clusters in order. Normals
/// start at zero on every call.
pub fn dykstra_cyclic(
    m: &SymMat,
    set: &PolySetY,
    pool: &CutPool,
    params: &DykstraParams,
) -> DykstraOutcome {
    if pool.is_empty() {
        return DykstraOutcome {
            x: set.project(m),
            sweeps: 1,
            converged: true,
        };
    }
    let order = pool.sweep_order();
    let offsets: Vec<[usize; 5]> = pool.cuts.iter().map(|c| c.offsets(m)).collect();
    let mut x = m.clone();
    let mut r_y = SymMat::zeros(m.order());
    let mut r_cut = vec![[0.0f64; 5]; pool.len()];
    let mut lifted = SymMat::zeros(m.order());
    let mut prev = m.clone();

    for sweep in 1..=params.max_sweeps {
        prev.packed_mut().copy_from_slice(x.packed());
        // Y step: L = X + R_Y, X = P_Y(L), R_Y = L - X.
        lifted.packed_mut().copy_from_slice(x.packed());
        lifted.axpy(1.0, &r_y);
        x.packed_mut().copy_from_slice(lifted.packed());
        set.project_in_place(&mut x);
        for ((r, l), xv) in r_y
            .packed_mut()
            .iter_mut()
            .zip(lifted.packed())
            .zip(x.packed())
        {
            *r = l - xv;
        }
        for _ in 0..params.k_repeats {
            for cluster in &order {
                sweep_cluster(&mut x, &mut r_cut, &offsets, cluster, params.exec);
            }
        }
        let change = x.sub(&prev).frobenius();
        if change < params.eps_proj {
            return DykstraOutcome {
                x,
                sweeps: sweep,
                converged: true,
            };
        }
    }
    DykstraOutcome {
        x,
        sweeps: params.max_sweeps,
        converged: false,
    }
}

#[inline]
fn cut_step(buf: &[f64], offs: &[usize; 5], r: &[f64; 5]) -> ([f64; 5], [f64; 5]) {
    let mut l = [0.0; 5];
    for k in 0..5 {
        l[k] = buf[offs[k]] + r[k];
    }
    let p = project_cut_values(l);
    let mut nr = [0.0; 5];
    for k in 0..5 {
        nr[k] = l[k] - p[k];
    }
    (p, nr)
}

fn sweep_cluster(
    x: &mut SymMat,
    r_cut: &mut [[f64; 5]],
    offsets: &[[usize; 5]],
    cluster: &[usize],
    exec: Exec,
) {
    match exec {
        Exec::Sequential => {
            let buf = x.packed_mut();
            for &c in cluster {
                let (p, nr) = cut_step(buf, &offsets[c], &r_cut[c]);
                for k in 0..5 {
                    buf[offsets[c][k]] = p[k];
                }
                r_cut[c] = nr;
            }
        }
        Exec::Parallel => {
            let buf = x.packed();
            let results: Vec<([f64; 5], [f64; 5])> = cluster
                .par_iter()
                .map(|&c| cut_step(buf, &offsets[c], &r_cut[c]))
                .collect();
            let buf = x.packed_mut();
            for (&c, (p, nr)) in cluster.iter().zip(results) {
                for k in 0..5 {
                    buf[offsets[c][k]] = p[k];
                }
                r_cut[c] = nr;
            }
        }
    }
}

/// Parallel Dykstra: every set is projected from the same average
/// `X̄`, then `X̄ = θ X_Y + (1 − θ) · mean(cut projections)`. The start point
/// is the projection of `m` onto the affine hull constraints.
pub fn dykstra_parallel(
    m: &SymMat,
    set: &PolySetY,
    pool: &CutPool,
    theta: f64,
    params: &DykstraParams,
) -> DykstraOutcome {
    assert!(theta > 0.0 && theta < 1.0, "theta must lie in (0, 1)");
    if pool.is_empty() {
        return DykstraOutcome {
            x: set.project(m),
            sweeps: 1,
            converged: true,
        };
    }
    let t = pool.len() as f64;
    let offsets: Vec<[usize; 5]> = pool.cuts.iter().map(|c| c.offsets(m)).collect();
    let mut xbar = set.project_aff(m);
    let mut r_y = SymMat::zeros(m.order());
    let mut r_cut = vec![[0.0f64; 5]; pool.len()];
    let mut lifted = SymMat::zeros(m.order());

    for sweep in 1..=params.max_sweeps {
        lifted.packed_mut().copy_from_slice(xbar.packed());
        lifted.axpy(1.0, &r_y);
        let mut x_y = lifted.clone();
        set.project_in_place(&mut x_y);
        for ((r, l), xv) in r_y
            .packed_mut()
            .iter_mut()
            .zip(lifted.packed())
            .zip(x_y.packed())
        {
            *r = l - xv;
        }
        // Cut projections differ from X̄ on five entries each; accumulate
        // those differences.
        let steps: Vec<([f64; 5], [f64; 5])> = match params.exec {
            Exec::Sequential => (0..pool.len())
                .map(|c| cut_step(xbar.packed(), &offsets[c], &r_cut[c]))
                .collect(),
            Exec::Parallel => (0..pool.len())
                .into_par_iter()
                .map(|c| cut_step(xbar.packed(), &offsets[c], &r_cut[c]))
                .collect(),
        };
        let mut next = xbar.clone();
        {
            let nb = next.packed_mut();
            for (v, xy) in nb.iter_mut().zip(x_y.packed()) {
                *v = theta * xy + (1.0 - theta) * *v;
            }
            let xb = xbar.packed();
            for (c, (p, nr)) in steps.into_iter().enumerate() {
                for k in 0..5 {
                    let o = offsets[c][k];
                    nb[o] += (1.0 - theta) / t * (p[k] - xb[o]);
                }
                r_cut[c] = nr;
            }
        }
        let change = next.sub(&xbar).frobenius();
        xbar = next;
        if change < params.eps_proj {
            return DykstraOutcome {
                x: xbar,
                sweeps: sweep,
                converged: true,
            };
        }
    }
    DykstraOutcome {
        x: xbar,
        sweeps: params.max_sweeps,
        converged: false,
    }
}
