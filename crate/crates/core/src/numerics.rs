//! Dense linear algebra shared by rank analysis and matrix completion.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration. It is slower than a
//! bidiagonalization-based solver on large inputs but the matrices here are
//! at most a few hundred on a side, and Jacobi gives small singular values to
//! high relative accuracy, which matters when counting prominent values.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff below which singular values are treated as exact zeros.
pub const NEGLIGIBLE_SV_RATIO: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 80;

/// Row-major dense real matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows, "column length");
        for (r, &v) in values.iter().enumerate() {
            self[(r, c)] = v;
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dim(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), v)).collect())
    }

    fn zip_with(&self, other: &Matrix, op: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| op(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub(crate) fn check_same_shape(&self, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dim(format!(
                "shapes {}x{} and {}x{} differ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full singular value decomposition `m = u * diag(sigma) * v^T`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// m x m orthogonal.
    pub u: Matrix,
    /// min(m, n) values, non-increasing.
    pub sigma: Vec<f64>,
    /// n x n orthogonal.
    pub v: Matrix,
}

impl SvdResult {
    /// Rebuilds `u * diag(sigma) * v^T`.
    pub fn reconstruct(&self) -> Matrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        Matrix::from_fn(m, n, |i, j| {
            self.sigma.iter().enumerate().map(|(k, &s)| self.u[(i, k)] * s * self.v[(j, k)]).sum()
        })
    }
}

/// Economy decomposition: `u` is m x k, `v` is n x k with k = min(m, n).
#[derive(Debug, Clone)]
pub(crate) struct ThinSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

fn validate_input(m: &Matrix) -> Result<()> {
    if m.is_empty() {
        return Err(Error::dim("SVD of an empty matrix"));
    }
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("SVD input has non-finite entries"));
    }
    Ok(())
}

pub fn svd(m: &Matrix) -> Result<SvdResult> {
    validate_input(m)?;
    let thin = thin_svd_unchecked(m);
    let u = complete_orthonormal(&thin.u, &thin.sigma);
    let v = complete_orthonormal(&thin.v, &thin.sigma);
    Ok(SvdResult { u, sigma: thin.sigma, v })
}

pub(crate) fn thin_svd(m: &Matrix) -> Result<ThinSvd> {
    validate_input(m)?;
    Ok(thin_svd_unchecked(m))
}

/// Singular values only.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    Ok(thin_svd(m)?.sigma)
}

fn thin_svd_unchecked(m: &Matrix) -> ThinSvd {
    if m.rows() >= m.cols() {
        let (u, sigma, v) = jacobi_tall(m);
        ThinSvd { u, sigma, v }
    } else {
        let (v, sigma, u) = jacobi_tall(&m.transpose());
        ThinSvd { u, sigma, v }
    }
}

/// One-sided Jacobi on a tall matrix (rows >= cols). Returns thin `u`,
/// sorted `sigma` and square `v`.
fn jacobi_tall(a: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (m, n) = a.shape();
    // Column-major working copies so each rotation touches contiguous memory.
    let mut w: Vec<f64> = (0..n).flat_map(|c| a.column(c)).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let tol = f64::EPSILON * (m as f64).sqrt();
    let mut norms: Vec<f64> = (0..n).map(|c| sq_norm(&w[c * m..(c + 1) * m])).collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let (wp, wq) = column_pair(&mut w, m, p, q);
                let gamma = dot(wp, wq);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(wp, wq, c, s);
                let (vp, vq) = column_pair(&mut v, n, p, q);
                rotate(vp, vq, c, s);
                norms[p] = sq_norm(&w[p * m..(p + 1) * m]);
                norms[q] = sq_norm(&w[q * m..(q + 1) * m]);
            }
        }
        if !rotated {
            break;
        }
    }

    let raw: Vec<f64> = (0..n).map(|c| sq_norm(&w[c * m..(c + 1) * m]).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable: ties keep computation order.
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));

    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (k, &c) in order.iter().enumerate() {
        let s = raw[c];
        sigma.push(s);
        if s > 0.0 {
            for r in 0..m {
                u[(r, k)] = w[c * m + r] / s;
            }
        }
        for r in 0..n {
            vm[(r, k)] = v[c * n + r];
        }
    }
    (u, sigma, vm)
}

fn sq_norm(x: &[f64]) -> f64 {
    dot(x, x)
}

fn column_pair(buf: &mut [f64], len: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (head, tail) = buf.split_at_mut(q * len);
    (&mut head[p * len..(p + 1) * len], &mut tail[..len])
}

fn rotate(xp: &mut [f64], xq: &mut [f64], c: f64, s: f64) {
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Extends the columns of `basis` belonging to positive singular values into a
/// full orthonormal basis of R^rows. Columns for zero singular values, and any
/// extra columns, are filled by Gram-Schmidt over the standard basis.
fn complete_orthonormal(basis: &Matrix, sigma: &[f64]) -> Matrix {
    let dim = basis.rows();
    let mut cols: Vec<Option<Vec<f64>>> = (0..dim)
        .map(|k| (k < basis.cols() && k < sigma.len() && sigma[k] > 0.0).then(|| basis.column(k)))
        .collect();
    // A square orthogonal input (the v factor) never needs completion.
    if basis.cols() == dim && cols.iter().all(Option::is_some) {
        return basis.clone();
    }
    let mut candidate = 0;
    for k in 0..dim {
        if cols[k].is_some() {
            continue;
        }
        while candidate < dim {
            let mut e = vec![0.0; dim];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for existing in cols.iter().flatten() {
                    let proj = dot(&e, existing);
                    for (x, y) in e.iter_mut().zip(existing) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = sq_norm(&e).sqrt();
            if norm > 1e-6 {
                e.iter_mut().for_each(|x| *x /= norm);
                cols[k] = Some(e);
                break;
            }
        }
    }
    let mut out = Matrix::zeros(dim, dim);
    for (k, col) in cols.into_iter().enumerate() {
        out.set_column(k, &col.expect("standard basis spans the space"));
    }
    out
}

/// Each singular value as a percentage of the total spectrum mass.
pub fn sv_percentages(sigma: &[f64]) -> Result<Vec<f64>> {
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::invalid("singular values must be finite and non-negative"));
    }
    let total: f64 = sigma.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(sigma.iter().map(|s| s / total * 100.0).collect())
}

/// Zeroes singular values below `NEGLIGIBLE_SV_RATIO * sigma_1`.
pub fn clamp_negligible(sigma: &[f64]) -> Vec<f64> {
    let top = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = top * NEGLIGIBLE_SV_RATIO;
    sigma.iter().map(|&s| if s < cutoff { 0.0 } else { s }).collect()
}

pub fn nuclear_norm(m: &Matrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Sum of entrywise products.
pub fn frobenius_inner(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(dot(a.as_slice(), b.as_slice()))
}

/// Singular value thresholding: `u * diag(max(sigma - tau, 0)) * v^T`, the
/// proximal operator of `tau * ||.||_*`.
pub fn shrink_singular_values(m: &Matrix, tau: f64) -> Result<Matrix> {
    Ok(shrink_with_spectrum(m, tau)?.0)
}

/// As [`shrink_singular_values`], also returning the shrunk spectrum.
pub(crate) fn shrink_with_spectrum(m: &Matrix, tau: f64) -> Result<(Matrix, Vec<f64>)> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("threshold must be finite and >= 0, got {tau}")));
    }
    let ThinSvd { u, sigma, v } = thin_svd(m)?;
    let shrunk: Vec<f64> = sigma.iter().map(|s| (s - tau).max(0.0)).collect();
    let (rows, cols) = m.shape();
    let mut out = Matrix::zeros(rows, cols);
    for (k, &s) in shrunk.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        let vk = v.column(k);
        for i in 0..rows {
            let a = u[(i, k)] * s;
            if a == 0.0 {
                continue;
            }
            for (o, &b) in out.row_mut(i).iter_mut().zip(&vk) {
                *o += a * b;
            }
        }
    }
    Ok((out, shrunk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn assert_orthogonal(q: &Matrix, tol: f64) {
        let qtq = q.transpose().matmul(q).unwrap();
        let err = qtq.max_abs_diff(&Matrix::identity(q.cols())).unwrap();
        assert!(err < tol, "orthogonality error {err}");
    }

    #[test]
    fn identity_and_diagonal_spectra() {
        assert_eq!(svd(&Matrix::identity(3)).unwrap().sigma, vec![1.0, 1.0, 1.0]);
        let s = svd(&Matrix::from_diag(&[3.0, 1.0])).unwrap().sigma;
        assert!((s[0] - 3.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
        let s = svd(&Matrix::from_diag(&[1.0, 3.0])).unwrap().sigma;
        assert!((s[0] - 3.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn seeded_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_matrix(4, 3, &mut rng);
        let res = svd(&m).unwrap();
        assert_eq!(res.u.shape(), (4, 4));
        assert_eq!(res.v.shape(), (3, 3));
        assert_eq!(res.sigma.len(), 3);
        let dist = res.reconstruct().sub(&m).unwrap().frobenius_norm();
        assert!(dist < 1e-10, "{dist}");
        assert_orthogonal(&res.u, 1e-10);
        assert_orthogonal(&res.v, 1e-10);
    }

    #[test]
    fn wide_and_rank_deficient_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(3, 1, &mut rng);
        let b = random_matrix(1, 7, &mut rng);
        let m = a.matmul(&b).unwrap(); // rank 1, 3x7
        let res = svd(&m).unwrap();
        assert_eq!(res.u.shape(), (3, 3));
        assert_eq!(res.v.shape(), (7, 7));
        assert!(res.sigma[1] < 1e-12 * res.sigma[0]);
        assert_orthogonal(&res.u, 1e-10);
        assert_orthogonal(&res.v, 1e-10);
        assert!(res.reconstruct().sub(&m).unwrap().frobenius_norm() < 1e-12);

        let z = svd(&Matrix::zeros(2, 3)).unwrap();
        assert_eq!(z.sigma, vec![0.0, 0.0]);
        assert_orthogonal(&z.u, 1e-12);
        assert_orthogonal(&z.v, 1e-12);
    }

    #[test]
    fn svd_errors() {
        assert!(matches!(svd(&Matrix::zeros(0, 3)), Err(Error::Dimension(_))));
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn percentages() {
        assert_eq!(sv_percentages(&[3.0, 1.0]).unwrap(), vec![75.0, 25.0]);
        assert_eq!(sv_percentages(&[5.0]).unwrap(), vec![100.0]);
        assert_eq!(sv_percentages(&[2.0, 1.0, 1.0]).unwrap(), vec![50.0, 25.0, 25.0]);
        assert!(matches!(sv_percentages(&[0.0, 0.0]), Err(Error::DegenerateSpectrum)));
    }

    #[test]
    fn nuclear_norm_cases() {
        assert!((nuclear_norm(&Matrix::identity(3)).unwrap() - 3.0).abs() < 1e-14);
        assert!((nuclear_norm(&Matrix::from_diag(&[3.0, 1.0])).unwrap() - 4.0).abs() < 1e-14);
        let u = Matrix::new(3, 1, vec![0.6, 0.8, 0.0]).unwrap();
        let v = Matrix::new(1, 2, vec![1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()]).unwrap();
        let outer = u.matmul(&v).unwrap();
        assert!((nuclear_norm(&outer).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(nuclear_norm(&Matrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn inner_product_cases() {
        let i2 = Matrix::identity(2);
        assert_eq!(frobenius_inner(&i2, &i2).unwrap(), 2.0);
        assert_eq!(frobenius_inner(&i2, &Matrix::zeros(2, 2)).unwrap(), 0.0);
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let ones = Matrix::from_fn(2, 2, |_, _| 1.0);
        assert_eq!(frobenius_inner(&a, &ones).unwrap(), 10.0);
        assert!(matches!(frobenius_inner(&a, &Matrix::zeros(2, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn shrinkage_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(5, 4, &mut rng);
        assert!(shrink_singular_values(&m, 0.0).unwrap().max_abs_diff(&m).unwrap() < 1e-10);

        let d = shrink_singular_values(&Matrix::from_diag(&[3.0, 1.0]), 2.0).unwrap();
        assert!(d.max_abs_diff(&Matrix::from_diag(&[1.0, 0.0])).unwrap() < 1e-14);

        let top = singular_values(&m).unwrap()[0];
        assert_eq!(shrink_singular_values(&m, top).unwrap(), Matrix::zeros(5, 4));
        assert!(matches!(shrink_singular_values(&m, -1.0), Err(Error::Validation(_))));
    }

    #[test]
    fn nuclear_norm_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let a = random_matrix(6, 6, &mut rng);
            let b = random_matrix(6, 6, &mut rng);
            let lhs = nuclear_norm(&a.add(&b).unwrap()).unwrap();
            let rhs = nuclear_norm(&a).unwrap() + nuclear_norm(&b).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn clamp_removes_residue() {
        assert_eq!(clamp_negligible(&[2.0, 1e-13, 0.5]), vec![2.0, 0.0, 0.5]);
    }

    fn matrix_strategy() -> impl Strategy<Value = Matrix> {
        (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-10.0f64..10.0, r * c)
                .prop_map(move |d| Matrix::new(r, c, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn prop_svd_contracts(m in matrix_strategy()) {
            let res = svd(&m).unwrap();
            let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
            prop_assert!(res.reconstruct().sub(&m).unwrap().frobenius_norm() <= 1e-8 * scale + 1e-300);
            prop_assert!(res.sigma.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(res.sigma.iter().all(|&s| s >= 0.0));
            assert_orthogonal(&res.u, 1e-10);
            assert_orthogonal(&res.v, 1e-10);
        }

        #[test]
        fn prop_percentages_sum_to_100(m in matrix_strategy()) {
            let s = singular_values(&m).unwrap();
            if let Ok(p) = sv_percentages(&s) {
                prop_assert!((p.iter().sum::<f64>() - 100.0).abs() < 1e-9);
                prop_assert!(p.windows(2).all(|w| w[0] >= w[1]));
            }
        }

        #[test]
        fn prop_shrink_non_expansive(seed in 0u64..1000, tau in 0.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(5, 4, &mut rng);
            let b = random_matrix(5, 4, &mut rng);
            let lhs = shrink_singular_values(&a, tau).unwrap()
                .sub(&shrink_singular_values(&b, tau).unwrap()).unwrap().frobenius_norm();
            prop_assert!(lhs <= a.sub(&b).unwrap().frobenius_norm() + 1e-12);
            prop_assert!(nuclear_norm(&shrink_singular_values(&a, tau).unwrap()).unwrap()
                <= nuclear_norm(&a).unwrap() + 1e-12);
        }
    }
}
