//! Ground truth for tests: exhaustive OPT and a generic weighted
//! least-squares projection onto a polyhedron.

use crate::cuts::TriangleCut;
use crate::error::{QccpError, Result};
use crate::graph::{enumerate_cycle_covers, CycleCover, DiGraph};
use crate::instance::QcpInstance;
use crate::linalg::{thin_qr, Mat, SymMat};

/// Largest node count accepted by [`brute_opt`].
pub const BRUTE_MAX_N: usize = 10;

/// Largest inequality count accepted by [`qp_project_oracle`].
pub const QP_MAX_INEQ: usize = 400;

/// Exact minimum of `xᵀQx` over all cycle covers. Ties keep the first cover
/// in lexicographic order.
pub fn brute_opt(inst: &QcpInstance) -> Result<(f64, CycleCover)> {
    if inst.n() > BRUTE_MAX_N {
        return Err(QccpError::TooLarge {
            n: inst.n(),
            limit: BRUTE_MAX_N,
        });
    }
    let covers = enumerate_cycle_covers(&inst.graph, usize::MAX)?;
    let mut best: Option<(f64, CycleCover)> = None;
    for c in covers {
        let v = inst.cover_cost(&c);
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, c));
        }
    }
    best.ok_or(QccpError::InstanceInfeasible)
}

/// Sparse linear row `Σ a_i x_i` with right-hand side `b`.
pub type Row = (Vec<(usize, f64)>, f64);

/// `min Σ w_i (x_i − t_i)²` subject to `eq` rows `= b` and `ineq` rows `<= b`.
#[derive(Clone, Debug, Default)]
pub struct QpProblem {
    pub weights: Vec<f64>,
    pub target: Vec<f64>,
    pub eq: Vec<Row>,
    pub ineq: Vec<Row>,
}

/// Exact solution of a [`QpProblem`]: equalities are eliminated through an
/// orthonormal null-space basis, and the remaining least-distance problem is
/// solved by Lawson–Hanson NNLS on its dual.
pub fn qp_project_oracle(p: &QpProblem) -> Result<Vec<f64>> {
    if p.ineq.len() > QP_MAX_INEQ {
        return Err(QccpError::TooManyConstraints(p.ineq.len()));
    }
    let k = p.weights.len();
    let sq: Vec<f64> = p.weights.iter().map(|w| w.sqrt()).collect();
    // y = √w ∘ (x − t); rows become a·(y / √w) with shifted right-hand sides.
    let scale = |row: &Row| -> (Vec<f64>, f64) {
        let mut a = vec![0.0; k];
        let mut b = row.1;
        for &(i, v) in &row.0 {
            a[i] += v / sq[i];
            b -= v * p.target[i];
        }
        (a, b)
    };
    let eq: Vec<(Vec<f64>, f64)> = p.eq.iter().map(scale).collect();
    let ineq: Vec<(Vec<f64>, f64)> = p.ineq.iter().map(scale).collect();

    // Particular solution in the row space of the equalities, and a basis of
    // their null space.
    let (yp, null) = if eq.is_empty() {
        (vec![0.0; k], Mat::identity(k))
    } else {
        let r = eq.len();
        let mut et = Mat::zeros(k, r + k);
        for (j, (a, _)) in eq.iter().enumerate() {
            for i in 0..k {
                et[(i, j)] = a[i];
            }
        }
        for i in 0..k {
            et[(i, r + i)] = 1.0;
        }
        let (q, _) = thin_qr(&et);
        let (_, rank) = thin_qr(&Mat::from_rows(
            k,
            r,
            (0..k).flat_map(|i| et.row(i)[..r].to_vec()).collect(),
        ));
        if rank < r {
            return Err(QccpError::Validation(
                "oracle equalities are linearly dependent".into(),
            ));
        }
        // Columns 0..r of q span the row space, r..k the complement.
        let mut range = Mat::zeros(k, r);
        let mut null = Mat::zeros(k, k - r);
        for i in 0..k {
            for j in 0..r {
                range[(i, j)] = q[(i, j)];
            }
            for j in r..k {
                null[(i, j - r)] = q[(i, j)];
            }
        }
        // Solve (E Q_r) c = f, then y_p = Q_r c.
        let mut sys = vec![vec![0.0; r + 1]; r];
        for (row, (a, b)) in sys.iter_mut().zip(&eq) {
            for j in 0..r {
                row[j] = (0..k).map(|i| a[i] * range[(i, j)]).sum();
            }
            row[r] = *b;
        }
        let c = gauss_solve(sys)?;
        (range.mul_vec(&c), null)
    };

    let d = null.cols();
    let z = if ineq.is_empty() || d == 0 {
        vec![0.0; d]
    } else {
        // a·(y_p + N z) <= b  ⇔  (−aN) z >= a·y_p − b.
        let q = ineq.len();
        let mut e = Mat::zeros(d + 1, q);
        for (j, (a, b)) in ineq.iter().enumerate() {
            for c in 0..d {
                e[(c, j)] = -(0..k).map(|i| a[i] * null[(i, c)]).sum::<f64>();
            }
            e[(d, j)] = a.iter().zip(&yp).map(|(x, y)| x * y).sum::<f64>() - b;
        }
        let mut f = vec![0.0; d + 1];
        f[d] = 1.0;
        let u = nnls(&e, &f)?;
        let eu = e.mul_vec(&u);
        let r: Vec<f64> = eu.iter().zip(&f).map(|(a, b)| a - b).collect();
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn < 1e-12 {
            return Err(QccpError::Validation("oracle constraints are infeasible".into()));
        }
        (0..d).map(|j| -r[j] / r[d]).collect()
    };
    let nz = null.mul_vec(&z);
    Ok((0..k)
        .map(|i| p.target[i] + (yp[i] + if d > 0 { nz[i] } else { 0.0 }) / sq[i])
        .collect())
}

fn gauss_solve(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c].abs() < 1e-14 {
            return Err(QccpError::Validation("singular oracle system".into()));
        }
        a.swap(c, p);
        for i in 0..n {
            if i != c {
                let f = a[i][c] / a[c][c];
                if f != 0.0 {
                    for j in c..=n {
                        a[i][j] -= f * a[c][j];
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Least squares on a column subset via Householder QR.
fn lstsq_cols(e: &Mat, cols: &[usize], f: &[f64]) -> Vec<f64> {
    let rows = e.rows();
    let p = cols.len();
    let mut a: Vec<Vec<f64>> = cols.iter().map(|&c| e.column(c)).collect();
    let mut b = f.to_vec();
    for k in 0..p.min(rows) {
        let norm = (k..rows).map(|i| a[k][i] * a[k][i]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..rows).map(|i| a[k][i]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|x| x * x).sum::<f64>();
        if vn == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(k) {
            let dot: f64 = (k..rows).map(|i| v[i - k] * col[i]).sum();
            for i in k..rows {
                col[i] -= 2.0 * v[i - k] * dot / vn;
            }
        }
        let dot: f64 = (k..rows).map(|i| v[i - k] * b[i]).sum();
        for i in k..rows {
            b[i] -= 2.0 * v[i - k] * dot / vn;
        }
    }
    let mut x = vec![0.0; p];
    for k in (0..p.min(rows)).rev() {
        let s: f64 = (k + 1..p).map(|j| a[j][k] * x[j]).sum();
        x[k] = if a[k][k].abs() > 1e-300 {
            (b[k] - s) / a[k][k]
        } else {
            0.0
        };
    }
    x
}

/// Lawson–Hanson non-negative least squares `min ‖E u − f‖, u >= 0`.
fn nnls(e: &Mat, f: &[f64]) -> Result<Vec<f64>> {
    let q = e.cols();
    let et = e.transpose();
    let mut u = vec![0.0; q];
    let mut passive = vec![false; q];
    let tol = 1e-13 * (1.0 + e.frobenius());
    let cap = 30 * q.max(10);
    for _ in 0..cap {
        let eu = e.mul_vec(&u);
        let resid: Vec<f64> = f.iter().zip(&eu).map(|(a, b)| a - b).collect();
        let w = et.mul_vec(&resid);
        let Some(t) = (0..q)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]))
        else {
            return Ok(u);
        };
        passive[t] = true;
        loop {
            let set: Vec<usize> = (0..q).filter(|&j| passive[j]).collect();
            let s = lstsq_cols(e, &set, f);
            if s.iter().all(|&v| v > 0.0) {
                for (&j, &v) in set.iter().zip(&s) {
                    u[j] = v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&j, &v) in set.iter().zip(&s) {
                if v <= 0.0 {
                    alpha = alpha.min(u[j] / (u[j] - v));
                }
            }
            for (&j, &v) in set.iter().zip(&s) {
                u[j] += alpha * (v - u[j]);
                if u[j] <= tol {
                    u[j] = 0.0;
                    passive[j] = false;
                }
            }
            if set.iter().all(|&j| passive[j]) {
                // Only reachable through roundoff; drop the most negative.
                let (j, _) = set
                    .iter()
                    .zip(&s)
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap();
                passive[*j] = false;
                u[*j] = 0.0;
            }
        }
    }
    Err(QccpError::NoConvergence {
        what: "nnls",
        iterations: cap,
    })
}

/// Which version of the set Y to describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YDescription {
    /// Equalities, bounds, zeros on shared-endpoint pairs.
    Bounded,
    /// Equalities and zeros only.
    Affine,
}

/// Describes the projection of `m` onto Y (optionally intersected with
/// triangle cuts) as a [`QpProblem`] over the packed upper triangle, with
/// Frobenius weights 1 on the diagonal and 2 off it. The zero pattern is
/// recomputed from the graph.
pub fn y_set_problem(
    m: &SymMat,
    g: &DiGraph,
    cuts: &[TriangleCut],
    what: YDescription,
) -> QpProblem {
    let d = m.order();
    let idx = |i: usize, j: usize| m.offset(i, j);
    let mut p = QpProblem {
        weights: vec![0.0; m.packed().len()],
        target: m.packed().to_vec(),
        ..Default::default()
    };
    for i in 0..d {
        for j in i..d {
            p.weights[idx(i, j)] = if i == j { 1.0 } else { 2.0 };
        }
    }
    p.eq.push((vec![(idx(0, 0), 1.0)], 1.0));
    for e in 1..d {
        p.eq.push((vec![(idx(e, e), 1.0), (idx(0, e), -1.0)], 0.0));
    }
    p.eq.push(((1..d).map(|e| (idx(e, e), 1.0)).collect(), g.n() as f64));
    for e in 0..g.m() {
        for f in e + 1..g.m() {
            let o = idx(e + 1, f + 1);
            if g.tail(e) == g.tail(f) || g.head(e) == g.head(f) {
                p.eq.push((vec![(o, 1.0)], 0.0));
            } else if what == YDescription::Bounded {
                p.ineq.push((vec![(o, -1.0)], 0.0));
                p.ineq.push((vec![(o, 1.0)], 1.0));
            }
        }
    }
    if what == YDescription::Bounded {
        for e in 1..d {
            p.ineq.push((vec![(idx(0, e), -1.0)], 0.0));
        }
    }
    for c in cuts {
        let (e, f, g) = (c.e + 1, c.f + 1, c.g + 1);
        p.ineq.push((
            vec![
                (idx(e, f), 1.0),
                (idx(e, g), 1.0),
                (idx(e, e), -1.0),
                (idx(f, g), -1.0),
            ],
            0.0,
        ));
    }
    p
}

/// Projection onto the single set `{Y_ee = Y_0e, Y_ef + Y_eg <= Y_ee + Y_fg}`
/// over the five entries it touches.
pub fn cut_problem(v: [f64; 5]) -> QpProblem {
    // Order: ef, eg, fg, ee, 0e.
    QpProblem {
        weights: vec![2.0, 2.0, 2.0, 1.0, 2.0],
        target: v.to_vec(),
        eq: vec![(vec![(3, 1.0), (4, -1.0)], 0.0)],
        ineq: vec![(vec![(0, 1.0), (1, 1.0), (3, -1.0), (2, -1.0)], 0.0)],
    }
}

/// Runs [`qp_project_oracle`] on a packed-matrix problem and rebuilds the
/// matrix.
pub fn project_matrix(m: &SymMat, p: &QpProblem) -> Result<SymMat> {
    Ok(SymMat::from_packed(m.order(), qp_project_oracle(p)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_examples() {
        let k3 = DiGraph::complete(3);
        let zero = QcpInstance::new(k3.clone(), vec![]).unwrap();
        assert_eq!(brute_opt(&zero).unwrap().0, 0.0);
        let a = |t, h| k3.find_arc(t, h).unwrap();
        let mut q = vec![];
        for (x, y, z) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            q.push(((a(x, y), a(y, z)), 1.0));
            q.push(((a(z, y), a(y, x)), 5.0));
        }
        let inst = QcpInstance::new(k3.clone(), q).unwrap();
        let (opt, cover) = brute_opt(&inst).unwrap();
        assert_eq!(opt, 3.0);
        assert!(cover.arcs().contains(&a(0, 1)));
        let c4 = DiGraph::cycle(4);
        let inst = QcpInstance::new(c4, vec![((0, 1), 2.0), ((3, 0), 4.0)]).unwrap();
        assert_eq!(brute_opt(&inst).unwrap().0, 6.0);
        let big = QcpInstance::new(DiGraph::cycle(11), vec![]).unwrap();
        assert!(matches!(brute_opt(&big), Err(QccpError::TooLarge { .. })));
    }

    #[test]
    fn halfspace_in_plain_norm() {
        // Project (1, 1) onto x + y <= 1: (0.5, 0.5).
        let p = QpProblem {
            weights: vec![1.0, 1.0],
            target: vec![1.0, 1.0],
            eq: vec![],
            ineq: vec![(vec![(0, 1.0), (1, 1.0)], 1.0)],
        };
        let x = qp_project_oracle(&p).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
        // Weighted: min 4(x−1)² + (y−1)² s.t. x + y <= 1 gives (0.8, 0.2).
        let p = QpProblem {
            weights: vec![4.0, 1.0],
            ..p
        };
        let x = qp_project_oracle(&p).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn interior_point_is_fixed() {
        let p = QpProblem {
            weights: vec![1.0, 2.0, 3.0],
            target: vec![0.2, 0.3, 0.1],
            eq: vec![(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 0.6)],
            ineq: vec![(vec![(0, -1.0)], 0.0), (vec![(1, 1.0)], 1.0)],
        };
        let x = qp_project_oracle(&p).unwrap();
        for (a, b) in x.iter().zip(&p.target) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_by_oracle() {
        // Projection of (2, −1, 0) onto {1ᵀx = 1, x >= 0} is (1, 0, 0).
        let p = QpProblem {
            weights: vec![1.0; 3],
            target: vec![2.0, -1.0, 0.0],
            eq: vec![(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 1.0)],
            ineq: (0..3).map(|i| (vec![(i, -1.0)], 0.0)).collect(),
        };
        let x = qp_project_oracle(&p).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && x[1].abs() < 1e-12 && x[2].abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_oversized() {
        let p = QpProblem {
            weights: vec![1.0],
            target: vec![0.0],
            eq: vec![],
            ineq: vec![(vec![(0, 1.0)], -1.0), (vec![(0, -1.0)], -1.0)],
        };
        assert!(qp_project_oracle(&p).is_err());
        let p = QpProblem {
            weights: vec![1.0],
            target: vec![0.0],
            eq: vec![],
            ineq: vec![(vec![(0, 1.0)], 1.0); QP_MAX_INEQ + 1],
        };
        assert!(matches!(
            qp_project_oracle(&p),
            Err(QccpError::TooManyConstraints(_))
        ));
    }
}
