//! Dense vectors and matrices with just the norms the estimator and its
//! bounds need. Everything is `f64`, row-major, and finite.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Sub};

use crate::error::{Error, Result};

/// A real vector. Holds parameters, estimates, messages and noise samples.
#[derive(Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Vector(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    /// The standard basis vector `e_k` of length `len`.
    pub fn basis(len: usize, k: usize) -> Result<Self> {
        if k >= len {
            return Err(Error::IndexOutOfRange { index: k, len });
        }
        let mut v = Self::zeros(len);
        v.0[k] = 1.0;
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn linf_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn checked_sub(&self, other: &Vector) -> Result<Vector> {
        check_len(self.len(), other.len())?;
        Ok(Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn checked_add(&self, other: &Vector) -> Result<Vector> {
        check_len(self.len(), other.len())?;
        Ok(Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// `self += factor * other`
    pub fn axpy(&mut self, factor: f64, other: &Vector) -> Result<()> {
        check_len(self.len(), other.len())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += factor * b;
        }
        Ok(())
    }
}

impl From<Vec<f64>> for Vector {
    /// Unchecked conversion; prefer [`Vector::new`] for untrusted input.
    fn from(entries: Vec<f64>) -> Self {
        Vector(entries)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl<'a> Sub for &'a Vector {
    type Output = Vector;
    /// Panics on length mismatch; use [`Vector::checked_sub`] otherwise.
    fn sub(self, rhs: &'a Vector) -> Vector {
        self.checked_sub(rhs).expect("vector length mismatch")
    }
}

impl<'a> Add for &'a Vector {
    type Output = Vector;
    fn add(self, rhs: &'a Vector) -> Vector {
        self.checked_add(rhs).expect("vector length mismatch")
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            check_len(cols, row.len())?;
            data.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in diag.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// `Σ_r |M[r, k]|`, the ℓ1 norm of column `k`.
    pub fn l1_norm_column(&self, k: usize) -> Result<f64> {
        if k >= self.cols {
            return Err(Error::IndexOutOfRange { index: k, len: self.cols });
        }
        Ok((0..self.rows).map(|r| self.get(r, k).abs()).sum())
    }

    pub fn matvec(&self, v: &Vector) -> Result<Vector> {
        check_len(self.cols, v.len())?;
        Ok(Vector(
            (0..self.rows)
                .map(|r| self.row(r).iter().zip(v.iter()).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }

    /// `Mᵀ v` without materialising the transpose.
    pub fn transpose_matvec(&self, v: &Vector) -> Result<Vector> {
        check_len(self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        for (r, vr) in v.iter().enumerate() {
            if *vr == 0.0 {
                continue;
            }
            for (o, m) in out.iter_mut().zip(self.row(r)) {
                *o += m * vr;
            }
        }
        Ok(Vector(out))
    }

    /// The Gram matrix `MᵀM`.
    pub fn matmul_transpose_self(&self) -> Matrix {
        let n = self.cols;
        let mut out = Matrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                if row[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += row[i] * row[j];
                }
            }
        }
        out
    }

    pub fn checked_sub(&self, other: &Matrix) -> Result<Matrix> {
        check_len(self.rows, other.rows)?;
        check_len(self.cols, other.cols)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Largest singular value, by power iteration on `MᵀM`.
    pub fn spectral_norm(&self, tol: f64, max_iter: usize) -> f64 {
        if self.rows == 0 || self.cols == 0 || self.data.iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        let gram = self.matmul_transpose_self();
        // Deterministic start with every direction represented.
        let mut v = Vector((0..self.cols).map(|i| 1.0 + (i as f64) * 1e-3).collect());
        let norm = v.l2_norm();
        v = v.scale(1.0 / norm);
        let mut eigen = 0.0;
        for _ in 0..max_iter {
            let w = gram.matvec(&v).expect("square gram matrix");
            let next = w.l2_norm();
            if next == 0.0 {
                return 0.0;
            }
            v = w.scale(1.0 / next);
            if (next - eigen).abs() <= tol * next.max(1.0) {
                eigen = next;
                break;
            }
            eigen = next;
        }
        eigen.sqrt()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.rows).map(|r| self.row(r)).collect();
        f.debug_struct("Matrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("data", &rows)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn l1_column_examples() {
        assert_eq!(Matrix::identity(3).l1_norm_column(1).unwrap(), 1.0);
        assert_eq!(Matrix::zeros(2, 3).l1_norm_column(2).unwrap(), 0.0);
        let m = Matrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(m.l1_norm_column(0).unwrap(), 4.0);
        assert!(matches!(
            m.l1_norm_column(2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn vector_norm_examples() {
        assert_eq!(Vector::zeros(4).linf_norm(), 0.0);
        assert_eq!(Vector::from(vec![-3.0, 2.0]).linf_norm(), 3.0);
        assert_eq!(Vector::from(vec![0.5, -0.7, 0.7]).linf_norm(), 0.7);
        assert!((Vector::from(vec![3.0, 4.0]).l2_norm() - 5.0).abs() < TOL);
        assert_eq!(Vector::zeros(3).l2_norm(), 0.0);
        assert!((Vector::from(vec![1.0; 4]).l2_norm() - 2.0).abs() < TOL);
    }

    #[test]
    fn matvec_examples() {
        let v = Vector::from(vec![1.0, 1.0]);
        assert_eq!(Matrix::identity(2).matvec(&v).unwrap(), v);
        assert_eq!(Matrix::zeros(2, 2).matvec(&v).unwrap(), Vector::zeros(2));
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.matvec(&v).unwrap(), Vector::from(vec![3.0, 1.0]));
        assert!(matches!(
            m.matvec(&Vector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_and_transpose_matvec() {
        let h = Matrix::from_rows(&[vec![2.0, 0.0, 1.0]]).unwrap();
        let g = h.matmul_transpose_self();
        assert_eq!(g.get(0, 0), 4.0);
        assert_eq!(g.get(0, 2), 2.0);
        assert_eq!(g.get(2, 2), 1.0);
        let v = h.transpose_matvec(&Vector::from(vec![3.0])).unwrap();
        assert_eq!(v, Vector::from(vec![6.0, 0.0, 3.0]));
    }

    #[test]
    fn spectral_norm_matches_known_values() {
        assert!((Matrix::identity(5).spectral_norm(1e-12, 10_000) - 1.0).abs() < 1e-9);
        let d = Matrix::diagonal(&[0.5, -3.0, 2.0]);
        assert!((d.spectral_norm(1e-12, 10_000) - 3.0).abs() < 1e-6);
        // [[1,1],[0,1]] has largest singular value golden ratio.
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((m.spectral_norm(1e-14, 10_000) - phi).abs() < 1e-6);
        assert_eq!(Matrix::zeros(2, 2).spectral_norm(1e-10, 10), 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(Vector::new(vec![1.0, f64::NAN]), Err(Error::NonFinite));
        assert!(Matrix::from_row_major(1, 1, vec![f64::INFINITY]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn norm_sandwich(v in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            let d = v.len() as f64;
            let v = Vector::from(v);
            let inf = v.linf_norm();
            let two = v.l2_norm();
            prop_assert!(inf <= two * (1.0 + 1e-12) + 1e-300);
            prop_assert!(two <= d.sqrt() * inf * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn identity_matvec_is_identity(v in proptest::collection::vec(-1e3f64..1e3, 1..30)) {
            let n = v.len();
            let v = Vector::from(v);
            prop_assert_eq!(Matrix::identity(n).matvec(&v).unwrap(), v);
        }

        #[test]
        fn l1_column_nonnegative_and_zero_iff_zero_column(
            rows in 1usize..6, cols in 1usize..6,
            seed in proptest::collection::vec(prop_oneof![Just(0.0), -5.0f64..5.0], 36)
        ) {
            let m = Matrix::from_row_major(rows, cols, seed[..rows * cols].to_vec()).unwrap();
            for k in 0..cols {
                let n = m.l1_norm_column(k).unwrap();
                prop_assert!(n >= 0.0);
                let zero_col = (0..rows).all(|r| m.get(r, k) == 0.0);
                prop_assert_eq!(n == 0.0, zero_col);
            }
        }
    }
}
