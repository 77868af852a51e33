//! Dense real matrices.
//!
//! Row and column indices are 1-based everywhere in the public API, so that
//! `a.entry(i, j)` is the textbook `a_ij` and `a.minor(i, j)` deletes the
//! `i`-th row and `j`-th column.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivots smaller than this multiple of `‖A‖∞` are treated as zero by [`Matrix::inverse`].
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;

/// Largest dimension accepted by [`Matrix::cofactor_det`].
pub const COFACTOR_MAX_DIM: usize = 10;

/// Dense row-major matrix of finite `f64` values.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::rejected(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::rejected(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::rejected(format!(
                "non-finite entry at ({}, {})",
                pos / cols + 1,
                pos % cols + 1
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for (k, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::rejected(format!(
                    "ragged input: row {} has {} entries, expected {m}",
                    k + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(n, m, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.data[k * n + k] = 1.0;
        }
        m
    }

    /// Square matrix with `values` on the diagonal.
    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (k, v) in values.iter().enumerate() {
            data[k * n + k] = *v;
        }
        Self::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Entry `a_ij` (1-based).
    ///
    /// Panics if the index is out of range.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        assert!(
            (1..=self.rows).contains(&i) && (1..=self.cols).contains(&j),
            "index ({i}, {j}) out of range for a {}x{} matrix",
            self.rows,
            self.cols
        );
        self.data[(i - 1) * self.cols + (j - 1)]
    }

    #[inline]
    pub(crate) fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub(crate) fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if !(1..=self.rows).contains(&i) || !(1..=self.cols).contains(&j) {
            return Err(Error::rejected(format!(
                "index ({i}, {j}) out of range for a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    fn require_square(&self, op: &str) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::rejected(format!(
                "{op} requires a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(self.rows)
    }

    /// Returns a copy with `a_ij` replaced by `value`.
    pub fn set_entry(&self, i: usize, j: usize, value: f64) -> Result<Self> {
        self.check_index(i, j)?;
        if !value.is_finite() {
            return Err(Error::rejected(format!(
                "non-finite value {value} for ({i}, {j})"
            )));
        }
        let mut out = self.clone();
        *out.at_mut(i - 1, j - 1) = value;
        Ok(out)
    }

    /// The matrix with row `i` and column `j` deleted.
    pub fn minor(&self, i: usize, j: usize) -> Result<Self> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::rejected(format!(
                "minor needs at least a 2x2 matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        self.check_index(i, j)?;
        let (ri, cj) = (i - 1, j - 1);
        let data = self
            .data
            .chunks(self.cols)
            .enumerate()
            .filter(|(r, _)| *r != ri)
            .flat_map(|(_, row)| {
                row.iter()
                    .enumerate()
                    .filter(move |(c, _)| *c != cj)
                    .map(|(_, v)| *v)
            })
            .collect();
        Ok(Self {
            rows: self.rows - 1,
            cols: self.cols - 1,
            data,
        })
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::rejected(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    *out.at_mut(r, c) += a * other.at(k, c);
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Matrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::rejected(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.at(r, c);
            }
        }
        out
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest absolute entrywise difference; errors on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Determinant via row-pivoted LU.
    pub fn determinant(&self) -> Result<f64> {
        self.require_square("determinant")?;
        Ok(Lu::factor(self).determinant())
    }

    /// Determinant by recursive cofactor expansion along the first row.
    ///
    /// O(n!) and only meant as an independent check on [`Matrix::determinant`].
    pub fn cofactor_det(&self) -> Result<f64> {
        let n = self.require_square("cofactor_det")?;
        if n > COFACTOR_MAX_DIM {
            return Err(Error::rejected(format!(
                "cofactor expansion limited to {COFACTOR_MAX_DIM}x{COFACTOR_MAX_DIM}, got {n}x{n}"
            )));
        }
        Ok(cofactor_expand(self))
    }

    /// Inverse via row-pivoted LU.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.require_square("inverse")?;
        let lu = Lu::factor(self);
        let threshold = SINGULARITY_THRESHOLD * self.inf_norm();
        let smallest = lu.smallest_pivot();
        if smallest <= threshold || smallest == 0.0 {
            return Err(Error::Singular {
                context: format!("{n}x{n} matrix"),
                pivot: smallest,
            });
        }
        Ok(lu.inverse())
    }
}

fn cofactor_expand(a: &Matrix) -> f64 {
    let n = a.rows;
    match n {
        1 => a.data[0],
        2 => a.data[0] * a.data[3] - a.data[1] * a.data[2],
        _ => (0..n)
            .filter(|&k| a.at(0, k) != 0.0)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                // minor() only fails for n < 2 or bad indices, neither possible here
                let sub = a.minor(1, k + 1).expect("valid minor");
                sign * a.at(0, k) * cofactor_expand(&sub)
            })
            .sum(),
    }
}

/// Row-pivoted LU factorization `PA = LU`, packed in place.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    /// Factors a square matrix. Never fails; zero pivot columns are skipped
    /// and show up as zero diagonal entries.
    pub fn factor(a: &Matrix) -> Self {
        assert!(a.is_square(), "LU requires a square matrix");
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|r| (r, lu[r * n + k].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pmax == 0.0 {
                continue;
            }
            if p != k {
                for c in 0..n {
                    lu.swap(p * n + c, k * n + c);
                }
                perm.swap(p, k);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for r in (k + 1)..n {
                let factor = lu[r * n + k] / pivot;
                lu[r * n + k] = factor;
                if factor != 0.0 {
                    for c in (k + 1)..n {
                        lu[r * n + c] -= factor * lu[k * n + c];
                    }
                }
            }
        }
        Self { n, lu, perm, sign }
    }

    pub fn determinant(&self) -> f64 {
        (0..self.n).fold(self.sign, |d, k| d * self.lu[k * self.n + k])
    }

    /// Smallest absolute value on the diagonal of `U`.
    pub fn smallest_pivot(&self) -> f64 {
        (0..self.n)
            .map(|k| self.lu[k * self.n + k].abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `A x = b` in place. Assumes a nonsingular factorization.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let s: f64 = (0..r).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let s: f64 = ((r + 1)..n).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] = (x[r] - s) / self.lu[r * n + r];
        }
        b.copy_from_slice(&x);
    }

    fn inverse(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n, n);
        let mut col = vec![0.0; n];
        for c in 0..n {
            col.iter_mut().for_each(|x| *x = 0.0);
            col[c] = 1.0;
            self.solve_in_place(&mut col);
            for r in 0..n {
                *out.at_mut(r, c) = col[r];
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{}x{}{:?}", self.rows, self.cols, self.to_rows())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn tridiag() -> Matrix {
        m(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]])
    }

    /// Minor by explicit index remapping, independent of the iterator chain in `minor`.
    fn remap_minor(a: &Matrix, i: usize, j: usize) -> Matrix {
        let (n, k) = (a.rows(), a.cols());
        let mut out = Matrix::zeros(n - 1, k - 1);
        for r in 1..n {
            for c in 1..k {
                let src_r = if r < i { r } else { r + 1 };
                let src_c = if c < j { c } else { c + 1 };
                *out.at_mut(r - 1, c - 1) = a.entry(src_r, src_c);
            }
        }
        out
    }

    #[test]
    fn minor_examples() {
        assert_eq!(
            Matrix::identity(3).minor(1, 1).unwrap(),
            Matrix::identity(2)
        );
        assert_eq!(
            m(&[&[1.0, 2.0], &[3.0, 4.0]]).minor(1, 2).unwrap(),
            m(&[&[3.0]])
        );
        let got = tridiag().minor(2, 2).unwrap();
        assert_eq!(got, m(&[&[2.0, 0.0], &[0.0, 4.0]]));
        assert_eq!(got, remap_minor(&tridiag(), 2, 2));
    }

    #[test]
    fn minor_matches_remapping_everywhere() {
        let a = m(&[
            &[1.0, 2.0, 3.0, 4.0],
            &[5.0, 6.0, 7.0, 8.0],
            &[9.0, 10.0, 11.0, 12.0],
        ]);
        for i in 1..=3 {
            for j in 1..=4 {
                assert_eq!(a.minor(i, j).unwrap(), remap_minor(&a, i, j), "({i},{j})");
            }
        }
    }

    #[test]
    fn minor_rejects_bad_input() {
        assert!(matches!(m(&[&[1.0]]).minor(1, 1), Err(Error::Rejected(_))));
        assert!(matches!(tridiag().minor(0, 1), Err(Error::Rejected(_))));
        assert!(matches!(tridiag().minor(1, 4), Err(Error::Rejected(_))));
    }

    #[test]
    fn nested_minors_commute_with_index_shift() {
        let a = Matrix::new(4, 4, (1..=16).map(|x| (x * x % 7) as f64).collect()).unwrap();
        for i in 1..=4 {
            for k in 1..=3 {
                // deleting i then k (in the shrunk numbering) equals deleting k' then i'
                let k_orig = if k >= i { k + 1 } else { k };
                let i_after = if i > k_orig { i - 1 } else { i };
                let lhs = a.minor(i, i).unwrap().minor(k, k).unwrap();
                let rhs = a
                    .minor(k_orig, k_orig)
                    .unwrap()
                    .minor(i_after, i_after)
                    .unwrap();
                assert_eq!(lhs, rhs, "i={i} k={k}");
            }
        }
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(Matrix::identity(4).determinant().unwrap(), 1.0);
        assert_eq!(m(&[&[2.0, 0.0], &[0.0, 4.0]]).determinant().unwrap(), 8.0);
        assert!((tridiag().determinant().unwrap() - 18.0).abs() < 1e-12);
    }

    #[test]
    fn cofactor_examples() {
        assert_eq!(m(&[&[-3.5]]).cofactor_det().unwrap(), -3.5);
        assert_eq!(Matrix::identity(3).cofactor_det().unwrap(), 1.0);
        // 2*(3*4 - 1*1) - 1*(1*4 - 1*0) + 0 = 22 - 4
        assert_eq!(tridiag().cofactor_det().unwrap(), 18.0);
    }

    #[test]
    fn cofactor_guard() {
        assert!(Matrix::identity(10).cofactor_det().is_ok());
        assert!(matches!(
            Matrix::identity(11).cofactor_det(),
            Err(Error::Rejected(_))
        ));
        assert!(matches!(
            Matrix::zeros(2, 3).cofactor_det(),
            Err(Error::Rejected(_))
        ));
    }

    #[test]
    fn determinant_rejects_rectangular() {
        assert!(matches!(
            Matrix::zeros(2, 3).determinant(),
            Err(Error::Rejected(_))
        ));
    }

    #[test]
    fn singular_determinant_is_zero() {
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(a.determinant().unwrap(), 0.0);
        let z = Matrix::zeros(3, 3);
        assert_eq!(z.determinant().unwrap(), 0.0);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(Matrix::identity(5).inverse().unwrap(), Matrix::identity(5));
        assert_eq!(
            m(&[&[2.0, 0.0], &[0.0, 4.0]]).inverse().unwrap(),
            m(&[&[0.5, 0.0], &[0.0, 0.25]])
        );
    }

    #[test]
    fn inverse_reports_pivot() {
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0 + 1e-14]]);
        match a.inverse() {
            Err(Error::Singular { pivot, .. }) => assert!(pivot < 1e-12),
            other => panic!("expected singularity, got {other:?}"),
        }
        assert!(matches!(
            Matrix::zeros(2, 2).inverse(),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn plumbing() {
        let b = m(&[&[1.0, -2.0], &[3.5, 4.0]]);
        assert_eq!(Matrix::identity(2).matmul(&b).unwrap(), b);
        assert_eq!(Matrix::identity(3).inf_norm(), 1.0);
        assert_eq!(
            Matrix::zeros(2, 2).set_entry(1, 1, 7.0).unwrap(),
            m(&[&[7.0, 0.0], &[0.0, 0.0]])
        );
        assert!(Matrix::identity(2).matmul(&Matrix::zeros(3, 1)).is_err());
        assert!(Matrix::zeros(2, 2).set_entry(3, 1, 1.0).is_err());
        assert!(Matrix::zeros(2, 2).set_entry(1, 1, f64::NAN).is_err());
    }

    #[test]
    fn constructor_invariants() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(Matrix::new(0, 1, vec![]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
