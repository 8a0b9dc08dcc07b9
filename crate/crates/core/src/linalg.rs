//! Dense kernels: symmetric packed matrices, eigendecomposition, PSD and
//! simplex projections, Perron pairs and thin QR.
//!
//! Extended matrices use row/column 0 for the homogenising coordinate, so a
//! matrix over `m` arcs has order `m + 1` and arc `e` (0-based) sits at
//! index `e + 1`.

use crate::error::{QccpError, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other` without materialising the transpose.
    pub fn tmatmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "row counts differ");
        let mut out = Mat::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric matrix stored as its packed upper triangle (row by row).
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat {
    order: usize,
    upper: Vec<f64>,
}

impl SymMat {
    pub fn zeros(order: usize) -> Self {
        SymMat {
            order,
            upper: vec![0.0; order * (order + 1) / 2],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Offset of entry `(i, j)` in the packed buffer.
    #[inline]
    pub fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(j < self.order);
        i * (2 * self.order + 1 - i) / 2 + (j - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.upper[o] = v;
    }

    pub fn packed(&self) -> &[f64] {
        &self.upper
    }

    pub fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.upper
    }

    pub fn from_packed(order: usize, upper: Vec<f64>) -> Self {
        assert_eq!(upper.len(), order * (order + 1) / 2);
        SymMat { order, upper }
    }

    pub fn identity(order: usize) -> Self {
        let mut s = SymMat::zeros(order);
        for i in 0..order {
            s.set(i, i, 1.0);
        }
        s
    }

    /// Symmetric part of a dense square matrix.
    pub fn from_dense(a: &Mat) -> Self {
        assert_eq!(a.rows(), a.cols());
        let d = a.rows();
        let mut s = SymMat::zeros(d);
        for i in 0..d {
            for j in i..d {
                s.set(i, j, 0.5 * (a[(i, j)] + a[(j, i)]));
            }
        }
        s
    }

    pub fn to_dense(&self) -> Mat {
        let d = self.order;
        let mut m = Mat::zeros(d, d);
        let mut o = 0;
        for i in 0..d {
            for j in i..d {
                let v = self.upper[o];
                m[(i, j)] = v;
                m[(j, i)] = v;
                o += 1;
            }
        }
        m
    }

    /// `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let d = v.len();
        let mut s = SymMat::zeros(d);
        let mut o = 0;
        for i in 0..d {
            for j in i..d {
                s.upper[o] = v[i] * v[j];
                o += 1;
            }
        }
        s
    }

    /// Trace inner product `<self, other>`.
    pub fn inner(&self, other: &SymMat) -> f64 {
        assert_eq!(self.order, other.order);
        let d = self.order;
        let mut diag = 0.0;
        let mut off = 0.0;
        let mut o = 0;
        for i in 0..d {
            diag += self.upper[o] * other.upper[o];
            o += 1;
            for _ in i + 1..d {
                off += self.upper[o] * other.upper[o];
                o += 1;
            }
        }
        diag + 2.0 * off
    }

    pub fn frobenius(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn scale(&mut self, a: f64) {
        self.upper.iter_mut().for_each(|x| *x *= a);
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SymMat) {
        assert_eq!(self.order, other.order);
        for (x, y) in self.upper.iter_mut().zip(&other.upper) {
            *x += a * y;
        }
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|x| x.is_finite())
    }
}

/// Result of a symmetric eigendecomposition. `values` are sorted in
/// descending order; `vectors` holds the matching eigenvectors as rows.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEig {
    pub fn vector(&self, k: usize) -> &[f64] {
        self.vectors.row(k)
    }

    /// `Σ_k f(λ_k) v_k v_kᵀ` over the eigenpairs selected by `keep`.
    fn recompose(&self, keep: impl Fn(f64) -> Option<f64>) -> SymMat {
        let d = self.values.len();
        let mut out = SymMat::zeros(d);
        for (k, &lam) in self.values.iter().enumerate() {
            let Some(w) = keep(lam) else { continue };
            let v = self.vectors.row(k);
            let mut o = 0;
            for i in 0..d {
                let wi = w * v[i];
                let row = &mut out.upper[o..o + d - i];
                for (x, &vj) in row.iter_mut().zip(&v[i..]) {
                    *x += wi * vj;
                }
                o += d - i;
            }
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix by Householder tridiagonalisation
/// followed by the implicit-shift QL iteration.
pub fn sym_eig(a: &SymMat) -> Result<SymEig> {
    let n = a.order();
    if n == 0 {
        return Ok(SymEig {
            values: vec![],
            vectors: Mat::zeros(0, 0),
        });
    }
    if !a.is_finite() {
        return Err(QccpError::Validation("non-finite matrix entry".into()));
    }
    let mut v = a.to_dense();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    // QL works on columns of V; transposing keeps the rotations contiguous.
    let mut vt = v.transpose();
    tql(&mut vt, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.row_mut(dst).copy_from_slice(vt.row(src));
    }
    Ok(SymEig { values, vectors })
}

fn tridiagonalize(v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    let vkj = v[(k, j)];
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

const QL_MAX_SWEEPS: usize = 60;

/// Implicit QL on the tridiagonal `(d, e)`; `vt` holds eigenvectors as rows.
fn tql(vt: &mut Mat, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_SWEEPS {
                    return Err(QccpError::NoConvergence {
                        what: "symmetric QL iteration",
                        iterations: QL_MAX_SWEEPS,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_rows(vt, i, c, s);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[inline]
fn rotate_rows(vt: &mut Mat, i: usize, c: f64, s: f64) {
    let cols = vt.cols();
    let (lo, hi) = vt.data.split_at_mut((i + 1) * cols);
    let ri = &mut lo[i * cols..];
    let rn = &mut hi[..cols];
    for (a, b) in ri.iter_mut().zip(rn.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}

/// Projection onto the PSD cone: negative eigenvalues are set to zero.
pub fn psd_project(a: &SymMat) -> Result<SymMat> {
    let eig = sym_eig(a)?;
    Ok(psd_from_eig(a, &eig))
}

fn psd_from_eig(a: &SymMat, eig: &SymEig) -> SymMat {
    let pos = eig.values.iter().filter(|&&l| l > 0.0).count();
    if pos * 2 <= eig.values.len() {
        eig.recompose(|l| (l > 0.0).then_some(l))
    } else {
        // Fewer negative eigenvalues: subtract the negative part instead.
        let neg = eig.recompose(|l| (l < 0.0).then_some(l));
        a.sub(&neg)
    }
}

/// Perron eigenpair of a nonnegative symmetric matrix by power iteration.
/// Entries below zero (numerical noise) are clamped before iterating.
pub fn perron_pair(a: &SymMat) -> Result<(f64, Vec<f64>)> {
    const TOL: f64 = 1e-12;
    const CAP: usize = 100_000;
    let d = a.order();
    if d == 0 {
        return Err(QccpError::Validation("empty matrix".into()));
    }
    let mut dense = a.to_dense();
    let mut row_max: f64 = 0.0;
    for i in 0..d {
        let mut s = 0.0;
        for j in 0..d {
            let x = dense[(i, j)].max(0.0);
            dense[(i, j)] = x;
            s += x;
        }
        row_max = row_max.max(s);
    }
    if row_max == 0.0 {
        let mut w = vec![0.0; d];
        w[0] = 1.0;
        return Ok((0.0, w));
    }
    // A plain run first; a shifted run handles spectra symmetric around zero.
    for shift in [0.0, row_max] {
        let mut w = vec![1.0 / (d as f64).sqrt(); d];
        for _ in 0..CAP {
            let mut next = dense.mul_vec(&w);
            for (x, wi) in next.iter_mut().zip(&w) {
                *x += shift * wi;
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            next.iter_mut().for_each(|x| *x /= norm);
            let change = next
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            w = next;
            if change < TOL {
                let aw = dense.mul_vec(&w);
                let lambda = aw.iter().zip(&w).map(|(a, b)| a * b).sum();
                return Ok((lambda, w));
            }
        }
    }
    Err(QccpError::NoConvergence {
        what: "power iteration",
        iterations: CAP,
    })
}

/// Euclidean projection onto `{x : 1ᵀx = a, x ≥ 0}` by sort-and-threshold.
pub fn project_simplex(v: &[f64], a: f64) -> Vec<f64> {
    if v.is_empty() {
        return vec![];
    }
    let mut u = v.to_vec();
    u.sort_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    let mut tau = u[0] - a;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - a) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Projection onto the hyperplane `{x : 1ᵀx = a}`.
pub fn project_hyperplane_sum(v: &[f64], a: f64) -> Vec<f64> {
    if v.is_empty() {
        return vec![];
    }
    let shift = (v.iter().sum::<f64>() - a) / v.len() as f64;
    v.iter().map(|x| x - shift).collect()
}

/// `Wᵀ A W` for a symmetric `A`.
pub fn congruence_t(w: &Mat, a: &SymMat) -> SymMat {
    let aw = a.to_dense().matmul(w);
    SymMat::from_dense(&w.tmatmul(&aw))
}

/// `W Z Wᵀ` for a symmetric `Z`.
pub fn congruence(w: &Mat, z: &SymMat) -> SymMat {
    let wz = w.matmul(&z.to_dense());
    let d = w.rows();
    let mut out = SymMat::zeros(d);
    let mut o = 0;
    for i in 0..d {
        let a = wz.row(i);
        for j in i..d {
            out.upper[o] = a.iter().zip(w.row(j)).map(|(x, y)| x * y).sum();
            o += 1;
        }
    }
    out
}

/// Thin Householder QR. Returns the orthonormal factor `Q` (same shape as
/// `a`) and the numerical rank, judged against the largest `|R_ii|`.
pub fn thin_qr(a: &Mat) -> (Mat, usize) {
    let (rows, cols) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut rdiag = Vec::with_capacity(cols);
    for k in 0..cols.min(rows) {
        let norm = (k..rows).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        let mut v: Vec<f64> = (k..rows).map(|i| r[(i, k)]).collect();
        if norm == 0.0 {
            rdiag.push(0.0);
            reflectors.push(vec![0.0; rows - k]);
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= vnorm);
        for j in k..cols {
            let dot: f64 = (k..rows).map(|i| v[i - k] * r[(i, j)]).sum();
            for i in k..rows {
                r[(i, j)] -= 2.0 * v[i - k] * dot;
            }
        }
        rdiag.push(r[(k, k)]);
        reflectors.push(v);
    }
    let max_diag = rdiag.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = max_diag * (rows.max(cols) as f64) * f64::EPSILON * 16.0;
    let rank = rdiag.iter().filter(|x| x.abs() > tol).count();

    // Q = H_0 H_1 ... H_{k-1} applied to the first `cols` unit vectors.
    let mut q = Mat::zeros(rows, cols);
    for j in 0..cols.min(rows) {
        q[(j, j)] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        for j in 0..cols {
            let dot: f64 = (k..rows).map(|i| v[i - k] * q[(i, j)]).sum();
            if dot == 0.0 {
                continue;
            }
            for i in k..rows {
                q[(i, j)] -= 2.0 * v[i - k] * dot;
            }
        }
    }
    (q, rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(d: usize, rng: &mut ChaCha8Rng) -> SymMat {
        let mut s = SymMat::zeros(d);
        for i in 0..d {
            for j in i..d {
                s.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        s
    }

    fn random_psd(d: usize, rng: &mut ChaCha8Rng) -> SymMat {
        let mut b = Mat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                b[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        SymMat::from_dense(&b.tmatmul(&b))
    }

    #[test]
    fn packed_offsets_cover_upper_triangle() {
        let s = SymMat::zeros(5);
        let mut seen = vec![false; 15];
        for i in 0..5 {
            for j in i..5 {
                let o = s.offset(i, j);
                assert!(!seen[o]);
                seen[o] = true;
                assert_eq!(o, s.offset(j, i));
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn eig_diagonal() {
        let mut a = SymMat::zeros(2);
        a.set(0, 0, 1.0);
        a.set(1, 1, 3.0);
        let eig = sym_eig(&a).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        assert!((eig.vector(0)[1].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_swap_matrix() {
        let mut a = SymMat::zeros(2);
        a.set(0, 1, 1.0);
        let eig = sym_eig(&a).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] + 1.0).abs() < 1e-14);
        let v0 = eig.vector(0);
        let h = 1.0 / 2f64.sqrt();
        assert!((v0[0].abs() - h).abs() < 1e-12 && (v0[0] - v0[1]).abs() < 1e-12);
        let v1 = eig.vector(1);
        assert!((v1[0] + v1[1]).abs() < 1e-12);
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [1, 2, 3, 8, 17, 40] {
            let a = random_sym(d, &mut rng);
            let eig = sym_eig(&a).unwrap();
            let rec = eig.recompose(Some);
            let resid = rec.sub(&a).frobenius();
            assert!(resid <= 1e-10 * (1.0 + a.frobenius()), "d={d} resid={resid}");
            let qqt = eig.vectors.matmul(&eig.vectors.transpose());
            assert!(qqt.sub(&Mat::identity(d)).frobenius() < 1e-10);
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eig_handles_repeated_and_zero_blocks() {
        let a = SymMat::outer(&[1.0, 1.0, 1.0, 1.0]);
        let eig = sym_eig(&a).unwrap();
        assert!((eig.values[0] - 4.0).abs() < 1e-12);
        assert!(eig.values[1..].iter().all(|l| l.abs() < 1e-12));
        let z = SymMat::zeros(4);
        assert!(sym_eig(&z).unwrap().values.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn psd_projection_basics() {
        let mut a = SymMat::zeros(2);
        a.set(0, 0, 2.0);
        a.set(1, 1, -3.0);
        let p = psd_project(&a).unwrap();
        assert!((p.get(0, 0) - 2.0).abs() < 1e-14);
        assert!(p.get(1, 1).abs() < 1e-14 && p.get(0, 1).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_psd(6, &mut rng);
        assert!(psd_project(&b).unwrap().sub(&b).frobenius() < 1e-10);
    }

    #[test]
    fn psd_projection_is_nearest_among_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let a = random_sym(5, &mut rng);
            let p = psd_project(&a).unwrap();
            let min_eig = *sym_eig(&p).unwrap().values.last().unwrap();
            assert!(min_eig >= -1e-10);
            let best = a.sub(&p).frobenius();
            for _ in 0..100 {
                let mut b = random_psd(5, &mut rng);
                b.scale(rng.gen_range(0.0..0.5));
                assert!(best <= a.sub(&b).frobenius() + 1e-12);
            }
            let q = psd_project(&p).unwrap();
            assert!(q.sub(&p).frobenius() < 1e-10);
        }
    }

    #[test]
    fn perron_examples() {
        let j2 = SymMat::outer(&[1.0, 1.0]);
        let (l, w) = perron_pair(&j2).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        assert!((w[0] - 1.0 / 2f64.sqrt()).abs() < 1e-12 && (w[0] - w[1]).abs() < 1e-12);

        let mut d = SymMat::zeros(2);
        d.set(0, 0, 5.0);
        d.set(1, 1, 1.0);
        let (l, w) = perron_pair(&d).unwrap();
        assert!((l - 5.0).abs() < 1e-10);
        assert!((w[0] - 1.0).abs() < 1e-10 && w[1].abs() < 1e-6);

        let x = [0.5, 1.0, 2.0, 0.0];
        let (l, w) = perron_pair(&SymMat::outer(&x)).unwrap();
        let nx = x.iter().map(|v| v * v).sum::<f64>();
        assert!((l - nx).abs() < 1e-10);
        for (wi, xi) in w.iter().zip(&x) {
            assert!((wi - xi / nx.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn perron_bipartite_spectrum() {
        let mut a = SymMat::zeros(3);
        a.set(0, 1, 1.0);
        a.set(0, 2, 2.0);
        let (l, w) = perron_pair(&a).unwrap();
        assert!((l - 5f64.sqrt()).abs() < 1e-9);
        assert!(w.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn simplex_examples() {
        let p = project_simplex(&[0.5, 0.5, 0.5], 1.0);
        for x in &p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let inside = [0.2, 0.3, 0.5];
        assert_eq!(project_simplex(&inside, 1.0), inside.to_vec());
        assert_eq!(project_simplex(&[2.0, -1.0, 0.0], 1.0), vec![1.0, 0.0, 0.0]);
        assert_eq!(project_simplex(&[1.0, 2.0], 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn hyperplane_examples() {
        assert_eq!(project_hyperplane_sum(&[1.0, 1.0], 4.0), vec![2.0, 2.0]);
        assert_eq!(project_hyperplane_sum(&[1.0, 3.0], 4.0), vec![1.0, 3.0]);
    }

    #[test]
    fn qr_orthonormal_and_spanning() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut a = Mat::zeros(9, 4);
        for i in 0..9 {
            for j in 0..4 {
                a[(i, j)] = rng.gen_range(-2.0..2.0);
            }
        }
        let (q, rank) = thin_qr(&a);
        assert_eq!(rank, 4);
        assert!(q.tmatmul(&q).sub(&Mat::identity(4)).frobenius() < 1e-13);
        // Every column of A is reproduced by its projection onto Col(Q).
        let proj = q.matmul(&q.tmatmul(&a));
        assert!(proj.sub(&a).frobenius() < 1e-12);
    }

    #[test]
    fn qr_detects_rank_deficiency() {
        let a = Mat::from_rows(3, 2, vec![1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(thin_qr(&a).1, 1);
    }

    #[test]
    fn congruence_matches_dense_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_sym(6, &mut rng);
        let mut w = Mat::zeros(6, 3);
        for i in 0..6 {
            for j in 0..3 {
                w[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let direct = w.transpose().matmul(&a.to_dense()).matmul(&w);
        assert!(congruence_t(&w, &a).to_dense().sub(&direct).frobenius() < 1e-12);
        let z = random_sym(3, &mut rng);
        let direct = w.matmul(&z.to_dense()).matmul(&w.transpose());
        assert!(congruence(&w, &z).to_dense().sub(&direct).frobenius() < 1e-12);
    }
}
