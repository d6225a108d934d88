//! Dense integer matrices with overflow-checked arithmetic.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidSubstitution("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
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

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::AlphabetMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a
                        .checked_mul(rhs[(k, j)])
                        .ok_or(Error::Overflow("multiplying matrices"))?;
                    out[(i, j)] = out[(i, j)]
                        .checked_add(prod)
                        .ok_or(Error::Overflow("multiplying matrices"))?;
                }
            }
        }
        Ok(out)
    }

    pub fn checked_pow(&self, mut e: u32) -> Result<Self> {
        debug_assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn checked_mul_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i).iter().zip(v).try_fold(0i64, |acc, (&a, &b)| {
                    a.checked_mul(b)
                        .and_then(|p| acc.checked_add(p))
                        .ok_or(Error::Overflow("multiplying a vector"))
                })
            })
            .collect()
    }

    pub fn mul_vec_u128(&self, v: &[u128]) -> Result<Vec<u128>> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i).iter().zip(v).try_fold(0u128, |acc, (&a, &b)| {
                    let a = u128::try_from(a).map_err(|_| Error::Overflow("negative entry"))?;
                    a.checked_mul(b)
                        .and_then(|p| acc.checked_add(p))
                        .ok_or(Error::Overflow("computing tower heights"))
                })
            })
            .collect()
    }

    /// Every entry strictly positive.
    pub fn is_positive(&self) -> bool {
        self.data.iter().all(|&x| x > 0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0)
    }

    pub fn trace(&self) -> i64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] as f64)
    }

    pub fn to_bigint_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    /// Boolean pattern of the matrix, used for primitivity where only the
    /// support matters and integer entries could overflow.
    pub fn support(&self) -> Vec<Vec<bool>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&x| x != 0).collect())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| self.row(i)))
            .finish()
    }
}

/// Boolean matrix product on supports.
pub(crate) fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![false; m]; n];
    for i in 0..n {
        for (k, row_b) in b.iter().enumerate() {
            if a[i][k] {
                for j in 0..m {
                    out[i][j] |= row_b[j];
                }
            }
        }
    }
    out
}

/// Exact big-integer square matrix product.
pub(crate) fn big_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![BigInt::from(0); m]; n];
    for i in 0..n {
        for (k, row_b) in b.iter().enumerate() {
            if a[i][k] == BigInt::from(0) {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][k] * &row_b[j];
            }
        }
    }
    out
}

pub(crate) fn big_mul_vec(a: &[Vec<BigInt>], v: &[BigInt]) -> Vec<BigInt> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}
