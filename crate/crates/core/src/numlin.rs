//! Small dense linear-algebra kernels.
//!
//! Everything here works on tiny matrices (n ≤ 10) held in row-major
//! `Vec<f64>`s. Singular values come from one-sided Jacobi, wedge norms and
//! projections from Householder QR, eigenvalues from Hessenberg reduction
//! followed by Francis double-shift QR.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rows of a constraint matrix count as dependent below this ν.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix has {rows} rows and {cols} columns; expected rows <= cols")]
    TooManyRows { rows: usize, cols: usize },
    #[error("constraint rows are linearly dependent (nu = {nu:e})")]
    RankDeficient { nu: f64 },
    #[error("eigenvalue iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm, scaled so that large entries do not overflow.
pub fn norm2(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    if (1e-100..=1e100).contains(&scale) {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Singular value decomposition data for a matrix with `rows <= cols`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Singular values, descending.
    pub values: Vec<f64>,
    /// Left singular vectors (length `rows`), one per value.
    pub left: Vec<Vec<f64>>,
    /// Right singular vectors (length `cols`), one per value.
    pub right: Vec<Vec<f64>>,
}

/// One-sided Jacobi SVD of a wide (or square) matrix.
pub fn svd_wide(a: &Matrix) -> Result<Svd, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    if m > n {
        return Err(LinalgError::TooManyRows { rows: m, cols: n });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    // Columns of Aᵀ are the rows of A; orthogonalize them by plane rotations
    // accumulated in V so that Aᵀ V = U Σ.
    let mut cols: Vec<Vec<f64>> = (0..m).map(|r| a.row(r).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if m > 1 {
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..m - 1 {
                for q in p + 1..m {
                    let alpha = dot(&cols[p], &cols[p]);
                    let beta = dot(&cols[q], &cols[q]);
                    let gamma = dot(&cols[p], &cols[q]);
                    if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for k in 0..n {
                        let (x, y) = (cols[p][k], cols[q][k]);
                        cols[p][k] = c * x - s * y;
                        cols[q][k] = s * x + c * y;
                    }
                    for row in v.iter_mut() {
                        let (x, y) = (row[p], row[q]);
                        row[p] = c * x - s * y;
                        row[q] = s * x + c * y;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    let sigma: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let mut out = Svd { values: Vec::new(), left: Vec::new(), right: Vec::new() };
    for &j in &order {
        out.values.push(sigma[j]);
        out.left.push(v.iter().map(|row| row[j]).collect());
        let s = sigma[j];
        out.right.push(if s > 0.0 {
            cols[j].iter().map(|x| x / s).collect()
        } else {
            vec![0.0; n]
        });
    }
    Ok(out)
}

/// All singular values, descending. Works for either orientation.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>, LinalgError> {
    if a.rows() <= a.cols() {
        Ok(svd_wide(a)?.values)
    } else {
        Ok(svd_wide(&a.transpose())?.values)
    }
}

/// ν(A) = inf over unit covectors ψ of ‖Aᵀψ‖, the smallest singular value of
/// an `m × n` matrix with `m <= n`.
pub fn nu(a: &Matrix) -> Result<f64, LinalgError> {
    if a.rows() > a.cols() {
        return Err(LinalgError::TooManyRows { rows: a.rows(), cols: a.cols() });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if a.rows() == 1 {
        return Ok(norm2(a.row(0)));
    }
    Ok(*svd_wide(a)?.values.last().expect("at least one row"))
}

/// Householder QR of the `n × k` matrix whose columns are `vectors`.
/// Returns the first `k` (or, with `full`, all `n`) columns of Q and the
/// diagonal of R.
fn householder_qr(vectors: &[&[f64]], full: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = vectors.len();
    let n = vectors.first().map_or(0, |v| v.len());
    let mut a: Vec<Vec<f64>> = vectors.iter().map(|v| v.to_vec()).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut diag = Vec::with_capacity(k);
    for j in 0..k {
        let alpha = norm2(&a[j][j..]);
        let mut u = vec![0.0; n];
        if alpha == 0.0 {
            diag.push(0.0);
            reflectors.push(u);
            continue;
        }
        let sign = if a[j][j] >= 0.0 { 1.0 } else { -1.0 };
        let r = -sign * alpha;
        u[j..].copy_from_slice(&a[j][j..]);
        u[j] -= r;
        let unorm = norm2(&u);
        for x in u.iter_mut() {
            *x /= unorm;
        }
        for col in a.iter_mut().skip(j) {
            let d = 2.0 * dot(&u, col);
            for (c, ui) in col.iter_mut().zip(&u) {
                *c -= d * ui;
            }
        }
        diag.push(r);
        reflectors.push(u);
    }
    // Q e_j = H_0 H_1 ... H_{k-1} e_j
    let q = (0..if full { n } else { k })
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            for u in reflectors.iter().rev() {
                let d = 2.0 * dot(u, &e);
                for (x, ui) in e.iter_mut().zip(u) {
                    *x -= d * ui;
                }
            }
            e
        })
        .collect();
    (q, diag)
}

fn check_vectors(vectors: &[&[f64]]) -> Result<usize, LinalgError> {
    let n = vectors.first().map_or(0, |v| v.len());
    if vectors.iter().any(|v| v.len() != n) {
        return Err(LinalgError::Shape("vectors of different lengths".into()));
    }
    if vectors.len() > n && n > 0 {
        return Err(LinalgError::Shape(format!(
            "{} vectors in R^{n}",
            vectors.len()
        )));
    }
    if vectors.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(LinalgError::NonFinite);
    }
    Ok(n)
}

/// ‖v₁ ∧ … ∧ v_k‖, i.e. √det of the Gram matrix, computed as |∏ R_ii| of a
/// Householder QR (or |det| when k = n) so that nearly dependent frames keep
/// relative accuracy.
pub fn wedge_norm(vectors: &[&[f64]]) -> Result<f64, LinalgError> {
    check_vectors(vectors)?;
    if vectors.is_empty() {
        return Ok(1.0);
    }
    if vectors.len() == vectors[0].len() {
        return Ok(det_abs(vectors));
    }
    let (_, diag) = householder_qr(vectors, false);
    Ok(diag.iter().fold(1.0, |p, r| p * r.abs()))
}

/// `|det|` of a square frame by LU with partial pivoting. Row differences
/// of nearly parallel rows come out exact here, where a reflection would
/// smear the rounding of the large entries over the small ones.
fn det_abs(rows: &[&[f64]]) -> f64 {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        if a[p][k] == 0.0 {
            return 0.0;
        }
        a.swap(k, p);
        det *= a[k][k].abs();
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
    }
    det
}

/// Removes from `grad` its component in the row space of `constraints`.
pub fn tangent_project(grad: &[f64], constraints: &[&[f64]]) -> Result<Vec<f64>, LinalgError> {
    if constraints.is_empty() {
        return Ok(grad.to_vec());
    }
    if constraints.iter().any(|c| c.len() != grad.len()) {
        return Err(LinalgError::Shape("constraint rows and gradient differ in length".into()));
    }
    check_vectors(constraints)?;
    let c = Matrix::from_rows(&constraints.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    let nu_c = nu(&c)?;
    if nu_c <= RANK_TOL {
        return Err(LinalgError::RankDeficient { nu: nu_c });
    }
    let (q, _) = householder_qr(constraints, false);
    let mut out = grad.to_vec();
    // two passes keep the result orthogonal to working precision
    for _ in 0..2 {
        for qi in &q {
            let d = dot(qi, &out);
            for (o, x) in out.iter_mut().zip(qi) {
                *o -= d * x;
            }
        }
    }
    Ok(out)
}

/// Minimum-norm solution of `J Δ = r` for a full-row-rank `k × n` matrix `J`
/// (k ≤ n), via QR of Jᵀ.
pub fn min_norm_solve(j: &[&[f64]], r: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = check_vectors(j)?;
    if j.len() != r.len() {
        return Err(LinalgError::Shape("right-hand side length".into()));
    }
    if j.is_empty() {
        return Ok(vec![0.0; n]);
    }
    let (q, diag) = householder_qr(j, false);
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if diag.iter().any(|d| d.abs() <= 1e-14 * scale) || scale == 0.0 {
        return Err(LinalgError::RankDeficient { nu: 0.0 });
    }
    // Jᵀ = Q R, so J = Rᵀ Qᵀ; solve Rᵀ y = r by forward substitution, Δ = Q y.
    // R's off-diagonal entries are recovered as qᵢ · jⱼ.
    let k = j.len();
    let mut y = vec![0.0; k];
    for a in 0..k {
        let mut s = r[a];
        for (b, yb) in y.iter().enumerate().take(a) {
            s -= dot(&q[b], j[a]) * yb;
        }
        y[a] = s / dot(&q[a], j[a]);
    }
    let mut delta = vec![0.0; n];
    for (qb, yb) in q.iter().zip(&y) {
        for (d, x) in delta.iter_mut().zip(qb) {
            *d += yb * x;
        }
    }
    Ok(delta)
}

/// Orthonormal basis of the orthogonal complement of `normals` in ℝⁿ.
pub fn complement_basis(normals: &[&[f64]], n: usize) -> Result<Vec<Vec<f64>>, LinalgError> {
    if normals.is_empty() {
        return Ok((0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect());
    }
    if normals.iter().any(|v| v.len() != n) {
        return Err(LinalgError::Shape("normal length differs from dimension".into()));
    }
    check_vectors(normals)?;
    let (q, diag) = householder_qr(normals, true);
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if scale == 0.0 || diag.iter().any(|d| d.abs() <= 1e-13 * scale) {
        return Err(LinalgError::RankDeficient { nu: 0.0 });
    }
    Ok(q.into_iter().skip(normals.len()).collect())
}

/// Least-squares solution of `A x ≈ b` for a full-column-rank `A` (rows ≥ cols).
pub fn lstsq(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let (p, q) = (a.rows(), a.cols());
    if b.len() != p {
        return Err(LinalgError::Shape("right-hand side length".into()));
    }
    if q > p {
        return Err(LinalgError::Shape(format!("{p}x{q} system is underdetermined")));
    }
    if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let mut cols: Vec<Vec<f64>> = (0..q).map(|j| (0..p).map(|i| a.get(i, j)).collect()).collect();
    let mut rhs = b.to_vec();
    let mut diag = vec![0.0; q];
    for j in 0..q {
        let alpha = norm2(&cols[j][j..]);
        if alpha == 0.0 {
            return Err(LinalgError::RankDeficient { nu: 0.0 });
        }
        let r = if cols[j][j] >= 0.0 { -alpha } else { alpha };
        let mut u = vec![0.0; p];
        u[j..].copy_from_slice(&cols[j][j..]);
        u[j] -= r;
        let unorm = norm2(&u);
        for x in u.iter_mut() {
            *x /= unorm;
        }
        for col in cols.iter_mut().skip(j) {
            let d = 2.0 * dot(&u, col);
            for (c, ui) in col.iter_mut().zip(&u) {
                *c -= d * ui;
            }
        }
        let d = 2.0 * dot(&u, &rhs);
        for (c, ui) in rhs.iter_mut().zip(&u) {
            *c -= d * ui;
        }
        diag[j] = r;
    }
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if diag.iter().any(|d| d.abs() <= 1e-15 * scale) {
        return Err(LinalgError::RankDeficient { nu: 0.0 });
    }
    let mut x = vec![0.0; q];
    for i in (0..q).rev() {
        let mut s = rhs[i];
        for j in i + 1..q {
            s -= cols[j][i] * x[j];
        }
        x[i] = s / diag[i];
    }
    Ok(x)
}

/// Eigenvalues of a square matrix, sorted by (real, imaginary) part.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.rows();
    if n != a.cols() {
        return Err(LinalgError::Shape(format!("{}x{} is not square", n, a.cols())));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.to_rows();
    hessenberg(&mut h);
    let mut out = hqr(&mut h, 10 * n * n)?;
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(out)
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| a[i][k]).collect();
        let alpha = norm2(&x);
        if alpha == 0.0 || x[1..].iter().all(|&v| v == 0.0) {
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut u = x;
        u[0] += sign * alpha;
        let unorm = norm2(&u);
        for v in u.iter_mut() {
            *v /= unorm;
        }
        // A ← H A
        for j in 0..n {
            let d: f64 = (0..u.len()).map(|i| u[i] * a[k + 1 + i][j]).sum();
            for i in 0..u.len() {
                a[k + 1 + i][j] -= 2.0 * d * u[i];
            }
        }
        // A ← A H
        for row in a.iter_mut() {
            let d: f64 = (0..u.len()).map(|i| u[i] * row[k + 1 + i]).sum();
            for i in 0..u.len() {
                row[k + 1 + i] -= 2.0 * d * u[i];
            }
        }
        for row in a.iter_mut().skip(k + 2) {
            row[k] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (EISPACK `hqr`).
fn hqr(a: &mut [Vec<f64>], cap: usize) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.len();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let mut total = 0usize;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu_ = nn as usize;
            let mut l = nu_;
            while l >= 1 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu_][nu_];
            if l == nu_ {
                wr[nu_] = x + t;
                wi[nu_] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nu_ - 1][nu_ - 1];
            let mut w = a[nu_][nu_ - 1] * a[nu_ - 1][nu_];
            if l == nu_ - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nu_ - 1] = x + z;
                    wr[nu_] = x + z;
                    if z != 0.0 {
                        wr[nu_] = x - w / z;
                    }
                    wi[nu_ - 1] = 0.0;
                    wi[nu_] = 0.0;
                } else {
                    wr[nu_ - 1] = x + p;
                    wr[nu_] = x + p;
                    wi[nu_ - 1] = -z;
                    wi[nu_] = z;
                }
                nn -= 2;
                break;
            }
            if total >= cap {
                return Err(LinalgError::NoConvergence { iterations: total });
            }
            if its == 10 || its == 20 {
                t += x;
                for (i, row) in a.iter_mut().enumerate().take(nu_ + 1) {
                    row[i] -= x;
                }
                let s = a[nu_][nu_ - 1].abs() + a[nu_ - 1][nu_ - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total += 1;
            let (mut p, mut q, mut r);
            let mut m = nu_ - 2;
            loop {
                let z = a[m][m];
                let r0 = x - z;
                let s0 = y - z;
                p = (r0 * s0 - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r0 - s0;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu_ {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nu_ {
                let mut xk = 0.0;
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = if k != nu_ - 1 { a[k + 2][k - 1] } else { 0.0 };
                    xk = p.abs() + q.abs() + r.abs();
                    if xk != 0.0 {
                        p /= xk;
                        q /= xk;
                        r /= xk;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * xk;
                    }
                    p += s;
                    let xx = p / s;
                    let yy = q / s;
                    let zz = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu_ {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nu_ - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * zz;
                        }
                        a[k + 1][j] -= pp * yy;
                        a[k][j] -= pp * xx;
                    }
                    let mmin = if nu_ < k + 3 { nu_ } else { k + 3 };
                    for row in a.iter_mut().take(mmin + 1).skip(l) {
                        let mut pp = xx * row[k] + yy * row[k + 1];
                        if k != nu_ - 1 {
                            pp += zz * row[k + 2];
                            row[k + 2] -= pp * r;
                        }
                        row[k + 1] -= pp * q;
                        row[k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn nu_identity_and_row_vector() {
        assert_eq!(nu(&Matrix::identity(3)).unwrap(), 1.0);
        assert_eq!(nu(&Matrix::from_rows(&[vec![3.0, 4.0]])).unwrap(), 5.0);
    }

    #[test]
    fn nu_rejects_tall_matrices() {
        let a = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        assert!(matches!(nu(&a), Err(LinalgError::TooManyRows { .. })));
    }

    #[test]
    fn nu_zero_for_rank_deficient() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        assert!(nu(&a).unwrap() < 1e-14);
    }

    #[test]
    fn svd_vectors_reconstruct() {
        let a = Matrix::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.3, 4.0, 1.0]]);
        let s = svd_wide(&a).unwrap();
        for k in 0..2 {
            // A v = σ u
            let av = a.matvec(&s.right[k]);
            for i in 0..2 {
                assert!(close(av[i], s.values[k] * s.left[k][i], 1e-12));
            }
        }
    }

    #[test]
    fn wedge_basics() {
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, 1.0, 0.0];
        assert!(close(wedge_norm(&[&e1, &e2]).unwrap(), 1.0, 1e-15));
        let v = [1.0, 2.0, 3.0];
        let w = [2.0, 4.0, 6.0];
        assert!(wedge_norm(&[&v, &w]).unwrap() < 1e-14);
        assert!(wedge_norm(&[&e1, &e2, &v, &w]).is_err());
    }

    #[test]
    fn wedge_keeps_relative_accuracy_for_nearly_parallel_pair() {
        // ∇g₁, ∇g₂ of (x1 - e^{x2}, x1 + e^{x2})/√2 at x2 = -50
        let eps = (-50.0f64).exp();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = [s, -s * eps];
        let b = [s, s * eps];
        assert!(close(wedge_norm(&[&a, &b]).unwrap(), eps, 1e-12));
    }

    #[test]
    fn projection_edge_cases() {
        let g = [1.0, 2.0, 3.0];
        assert_eq!(tangent_project(&g, &[]).unwrap(), g.to_vec());
        let e1 = [1.0, 0.0, 0.0];
        let p = tangent_project(&e1, &[&e1]).unwrap();
        assert!(norm2(&p) < 1e-15);
        let dup = [2.0, 0.0, 0.0];
        assert!(matches!(
            tangent_project(&g, &[&e1, &dup]),
            Err(LinalgError::RankDeficient { .. })
        ));
    }

    #[test]
    fn min_norm_solution() {
        let row = [1.0, 1.0];
        let d = min_norm_solve(&[&row], &[2.0]).unwrap();
        assert!(close(d[0], 1.0, 1e-15) && close(d[1], 1.0, 1e-15));
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let a = [1.0, 2.0, 2.0];
        let basis = complement_basis(&[&a], 3).unwrap();
        assert_eq!(basis.len(), 2);
        for (i, u) in basis.iter().enumerate() {
            assert!(dot(u, &a).abs() < 1e-14);
            for (j, v) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(u, v) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn lstsq_overdetermined_line_fit() {
        // fit y = a + b t through (0,1), (1,3), (2,5.5)
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]);
        let x = lstsq(&a, &[1.0, 3.0, 5.5]).unwrap();
        assert!(close(x[0], 0.916_666_666_666_666_7, 1e-13));
        assert!(close(x[1], 2.25, 1e-13));
    }

    #[test]
    fn eigenvalues_of_the_triangular_map_at_origin() {
        let a = Matrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let ev = eigenvalues(&a).unwrap();
        let re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        assert!(close(re[0], -1.0, 1e-14) && close(re[1], 1.0, 1e-14) && close(re[2], 1.0, 1e-14));
        assert!(ev.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn eigenvalues_triangular_is_diagonal() {
        let a = Matrix::from_rows(&[
            vec![2.0, 5.0, -1.0],
            vec![0.0, -3.0, 7.0],
            vec![0.0, 0.0, 0.5],
        ]);
        let re: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|z| z.re).collect();
        assert_eq!(re, vec![-3.0, 0.5, 2.0]);
    }

    #[test]
    fn eigenvalues_of_the_ray_map_at_2_0_0() {
        let d = 2.0 / 5.0f64.sqrt() - 1.0;
        let a = Matrix::from_rows(&[vec![d, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let re: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|z| z.re).collect();
        assert_eq!(re, vec![d, 1.0, 1.0]);
    }

    #[test]
    fn complex_pair_from_rotation() {
        let a = Matrix::from_rows(&[vec![0.0, -2.0], vec![2.0, 0.0]]);
        let ev = eigenvalues(&a).unwrap();
        assert!(close(ev[0].im, -2.0, 1e-14) && close(ev[1].im, 2.0, 1e-14));
        assert!(ev[0].re.abs() < 1e-14);
    }
}
