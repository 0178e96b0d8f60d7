//! Small dense kernels: a row-major matrix, thin Householder QR and a cyclic
//! Jacobi eigensolver for symmetric matrices.
//!
//! Every matrix handled here is a frame, a matricized transfer tensor or a
//! Gram matrix, so sizes stay in the tens to low hundreds.

use std::fmt;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * other`
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (p, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(p)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ * other`
    pub fn tr_matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "tr_matmul shape mismatch");
        let mut out = Mat::zeros(self.cols, other.cols);
        for p in 0..self.rows {
            let b_row = other.row(p);
            for (i, &a) in self.row(p).iter().enumerate() {
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

    /// Keeps the first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Mat {
        assert!(k <= self.cols);
        Mat::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    pub fn select_columns(&self, cols: &[usize]) -> Mat {
        Mat::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn select_rows(&self, rows: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Mat::from_vec(rows.len(), self.cols, data)
    }

    /// `[self | other]`
    pub fn hstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Mat::from_vec(self.rows, cols, data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale_in_place(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }

    /// Returns `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Mat {
        assert_eq!(self.rows, self.cols);
        Mat::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self[(i, j)] + self[(j, i)])
        })
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Householder sweep: the reduced columns and the unit reflectors (empty
/// where a column was already reduced).
fn reflect(a: &Mat) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (m, n) = (a.rows(), a.cols());
    let p = m.min(n);
    // Work column-major: reflections act on columns.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(p);

    for k in 0..p {
        let x = &cols[k][k..];
        let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.to_vec();
        if norm_x == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm_x } else { norm_x };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let inv = 1.0 / vnorm2.sqrt();
        v.iter_mut().for_each(|t| *t *= inv);
        for col in cols.iter_mut().skip(k) {
            let tail = &mut col[k..];
            let dot: f64 = tail.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (t, vi) in tail.iter_mut().zip(&v) {
                *t -= 2.0 * dot * vi;
            }
        }
        reflectors.push(v);
    }

    (cols, reflectors)
}

/// The `R` factor of [`householder_qr`] without forming `Q`.
pub fn qr_r(a: &Mat) -> Mat {
    let (cols, _) = reflect(a);
    Mat::from_fn(a.rows().min(a.cols()), a.cols(), |i, j| {
        if i <= j {
            cols[j][i]
        } else {
            0.0
        }
    })
}

/// Thin Householder QR: `a = q * r` with `q` of shape `m x p` having
/// orthonormal columns and `r` upper triangular of shape `p x n`,
/// `p = min(m, n)`.
pub fn householder_qr(a: &Mat) -> (Mat, Mat) {
    let (m, n) = (a.rows(), a.cols());
    let p = m.min(n);
    let (cols, reflectors) = reflect(a);
    let r = Mat::from_fn(p, n, |i, j| if i <= j { cols[j][i] } else { 0.0 });

    // Accumulate Q = H_0 H_1 ... H_{p-1} applied to the first p unit vectors.
    let mut qcols: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for col in qcols.iter_mut() {
            let tail = &mut col[k..];
            let dot: f64 = tail.iter().zip(v).map(|(a, b)| a * b).sum();
            if dot == 0.0 {
                continue;
            }
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= 2.0 * dot * vi;
            }
        }
    }
    let q = Mat::from_fn(m, p, |i, j| qcols[j][i]);
    (q, r)
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Sorted in descending order.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector belonging to `values[j]`.
    pub vectors: Mat,
}

/// Cyclic Jacobi eigensolver. Only the upper triangle of `a` is read.
/// Eigenpairs are returned sorted by descending eigenvalue; the sort is
/// stable, so equal eigenvalues keep the sweep output order.
pub fn sym_eigen(a: &Mat) -> SymEigen {
    let n = a.rows();
    assert_eq!(n, a.cols(), "sym_eigen needs a square matrix");
    let mut m = Mat::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
    let mut v = Mat::identity(n);

    let scale = m.frobenius_norm();
    if n > 1 && scale > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(j, j)]
            .partial_cmp(&m[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    SymEigen {
        values: order.iter().map(|&i| m[(i, i)]).collect(),
        vectors: v.select_columns(&order),
    }
}

/// Singular values of `a` (descending) from the eigenvalues of the smaller
/// Gram matrix. Eigenvalues below `1e-14 * max` are floored to zero before
/// the square root.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    let gram = if a.rows() >= a.cols() {
        a.tr_matmul(a)
    } else {
        let at = a.transpose();
        at.tr_matmul(&at)
    };
    let eig = sym_eigen(&gram);
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    eig.values
        .iter()
        .map(|&l| if l <= 1e-14 * top { 0.0 } else { l.sqrt() })
        .collect()
}

/// Singular values (descending) and right singular vectors of `a` by
/// one-sided Jacobi rotations on a triangular factor of `a`. Small singular
/// values keep absolute accuracy near `eps * sigma_max`, which the Gram route
/// loses.
pub fn svd_right(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.cols();
    if n == 0 {
        return (Vec::new(), Mat::zeros(0, 0));
    }
    // Reduce to an n x n (or thinner) factor with the same right singular data.
    let work = if a.rows() > n { qr_r(a) } else { a.clone() };
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| work.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let scale = work.frobenius_norm();
    // Columns below `floor` carry only rounding noise; rotating them cannot
    // converge and cannot matter.
    let floor = (f64::EPSILON * scale).powi(2);
    let tol = n as f64 * f64::EPSILON;
    if scale > 0.0 && n > 1 {
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (alpha, beta, gamma) = w[p]
                        .iter()
                        .zip(&w[q])
                        .fold((0.0, 0.0, 0.0), |(a, b, g), (x, y)| {
                            (a + x * x, b + y * y, g + x * y)
                        });
                    if alpha.min(beta) <= floor || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, p, q, c, s);
                    rotate(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let norms: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vmat = Mat::from_fn(n, n, |i, k| v[order[k]][i]);
    (order.iter().map(|&j| norms[j]).collect(), vmat)
}

/// Applies the plane rotation `(c, s)` to columns `p < q`.
fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    for (x, y) in head[p].iter_mut().zip(tail[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn max_diff(a: &Mat, b: &Mat) -> f64 {
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn qr_reconstructs_tall_and_wide() {
        for &(m, n) in &[(7, 3), (3, 7), (5, 5), (1, 4), (6, 1)] {
            let a = random_mat(m, n, (m * 10 + n) as u64);
            let (q, r) = householder_qr(&a);
            assert_eq!(q.cols(), m.min(n));
            assert!(max_diff(&q.matmul(&r), &a) < 1e-13, "{m}x{n}");
            let qtq = q.tr_matmul(&q);
            assert!(max_diff(&qtq, &Mat::identity(q.cols())) < 1e-13);
            for i in 0..r.rows() {
                for j in 0..i.min(r.cols()) {
                    assert_eq!(r[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn qr_of_dependent_columns_has_zero_diagonal() {
        let mut a = random_mat(6, 2, 3);
        for i in 0..6 {
            a[(i, 1)] = 2.0 * a[(i, 0)];
        }
        let (q, r) = householder_qr(&a);
        assert!(r[(1, 1)].abs() < 1e-14);
        assert!(max_diff(&q.matmul(&r), &a) < 1e-13);
    }

    #[test]
    fn qr_of_zero_matrix() {
        let a = Mat::zeros(4, 2);
        let (q, r) = householder_qr(&a);
        assert_eq!(r.max_abs(), 0.0);
        let qtq = q.tr_matmul(&q);
        assert!(max_diff(&qtq, &Mat::identity(2)) < 1e-15);
    }

    #[test]
    fn jacobi_diagonalizes() {
        let b = random_mat(8, 8, 11);
        let a = b.tr_matmul(&b).symmetrized();
        let eig = sym_eigen(&a);
        for w in eig.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let lam = Mat::from_fn(8, 8, |i, j| if i == j { eig.values[i] } else { 0.0 });
        let recon = eig.vectors.matmul(&lam).matmul(&eig.vectors.transpose());
        assert!(max_diff(&recon, &a) < 1e-12);
        let vtv = eig.vectors.tr_matmul(&eig.vectors);
        assert!(max_diff(&vtv, &Mat::identity(8)) < 1e-13);
    }

    #[test]
    fn jacobi_known_2x2() {
        let a = Mat::from_vec(2, 2, vec![2.0, 1.0, 1.0, 2.0]);
        let eig = sym_eigen(&a);
        assert!((eig.values[0] - 3.0).abs() < 1e-15);
        assert!((eig.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_keeps_order_of_ties() {
        let eig = sym_eigen(&Mat::identity(3));
        assert_eq!(eig.vectors, Mat::identity(3));
    }

    #[test]
    fn svd_right_matches_gram_eigenvectors() {
        let a = random_mat(9, 5, 21);
        let (s, v) = svd_right(&a);
        let av = a.matmul(&v);
        // Columns of A V are orthogonal with norms sigma.
        let g = av.tr_matmul(&av);
        for i in 0..5 {
            assert!((g[(i, i)].sqrt() - s[i]).abs() < 1e-13);
            for j in 0..5 {
                if i != j {
                    assert!(g[(i, j)].abs() < 1e-12);
                }
            }
        }
        assert!(max_diff(&v.tr_matmul(&v), &Mat::identity(5)) < 1e-13);
    }

    #[test]
    fn svd_right_resolves_tiny_singular_values() {
        // diag(1, 1e-12) rotated: the Gram route cannot see 1e-12.
        let (c, s) = (0.6f64, 0.8f64);
        let a = Mat::from_vec(2, 2, vec![c, -s * 1e-12, s, c * 1e-12]);
        let (sv, _) = svd_right(&a);
        assert!((sv[0] - 1.0).abs() < 1e-15);
        assert!((sv[1] - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn singular_values_of_rank_one() {
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 4.0];
        let a = Mat::from_fn(3, 2, |i, j| u[i] * v[j]);
        let s = singular_values(&a);
        assert!((s[0] - 15.0).abs() < 1e-12);
        assert_eq!(s[1], 0.0);
    }
}
