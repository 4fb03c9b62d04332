//! Square matrices of symbolic expressions.

use std::fmt;

use nalgebra::DMatrix;

use crate::expr::{Bindings, EvalError, Expr};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Dense `n x n` matrix of canonical expressions, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExprMatrix {
    n: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn zeros(n: usize) -> Self {
        ExprMatrix { n, entries: vec![Expr::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Expr::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<Self, MatrixError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(MatrixError::NotSquare { row, len: r.len(), n });
            }
            entries.extend(r);
        }
        Ok(ExprMatrix { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        ExprMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.entries[i * self.n + j] = e;
    }

    pub fn row(&self, i: usize) -> &[Expr] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<Expr>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Expr)> {
        self.entries.iter().enumerate().map(move |(k, e)| (k / self.n, k % self.n, e))
    }

    fn check_dim(&self, other: &ExprMatrix) -> Result<(), MatrixError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(MatrixError::DimensionMismatch { left: self.n, right: other.n })
        }
    }

    pub fn mul(&self, other: &ExprMatrix) -> Result<ExprMatrix, MatrixError> {
        self.check_dim(other)?;
        let n = self.n;
        Ok(Self::from_fn(n, |i, j| {
            Expr::add((0..n).filter_map(|k| {
                let (a, b) = (self.get(i, k), other.get(k, j));
                (!a.is_zero() && !b.is_zero()).then(|| a * b)
            }))
        }))
    }

    pub fn transpose(&self) -> ExprMatrix {
        Self::from_fn(self.n, |i, j| self.get(j, i).clone())
    }

    /// `self * m * self^T`, assuming `m` is skew: only the strict upper
    /// triangle is computed and the rest is filled in by antisymmetry.
    pub fn congruence_skew(&self, m: &ExprMatrix) -> Result<ExprMatrix, MatrixError> {
        self.check_dim(m)?;
        let n = self.n;
        let km = self.mul(m)?;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let e = Expr::add((0..n).filter_map(|k| {
                    let (a, b) = (km.get(i, k), self.get(j, k));
                    (!a.is_zero() && !b.is_zero()).then(|| a * b)
                }));
                out.set(j, i, -&e);
                out.set(i, j, e);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, g: &Expr) -> ExprMatrix {
        Self::from_fn(self.n, |i, j| g * self.get(i, j))
    }

    pub fn sub(&self, other: &ExprMatrix) -> Result<ExprMatrix, MatrixError> {
        self.check_dim(other)?;
        Ok(Self::from_fn(self.n, |i, j| self.get(i, j) - other.get(i, j)))
    }

    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> ExprMatrix {
        ExprMatrix { n: self.n, entries: self.entries.iter().map(&mut f).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Expr::is_zero)
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(Expr::is_constant)
    }

    pub fn evaluate(&self, b: &Bindings) -> Result<DMatrix<f64>, EvalError> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (i, j, e) in self.entries() {
            out[(i, j)] = e.evaluate(b)?;
        }
        Ok(out)
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.n).map(|i| self.row(i).iter().map(Expr::to_string).collect()).collect()
    }
}

impl fmt::Display for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells = self.to_strings();
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(1);
        for row in cells {
            let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "[ {} ]", line.join("  "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for ExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_strings()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(&format!("x{i}"))
    }

    #[test]
    fn identity_is_neutral() {
        let m = ExprMatrix::from_fn(3, |i, j| x(i + 1) * x(j + 1));
        let id = ExprMatrix::identity(3);
        assert_eq!(id.mul(&m).unwrap(), m);
        assert_eq!(m.mul(&id).unwrap(), m);
    }

    #[test]
    fn congruence_matches_full_product() {
        let j = ExprMatrix::from_rows(vec![
            vec![Expr::zero(), -x(3), x(2)],
            vec![x(3), Expr::zero(), -x(1)],
            vec![-x(2), x(1), Expr::zero()],
        ])
        .unwrap();
        let k = ExprMatrix::from_fn(3, |i, jj| if i >= jj { x(i + jj + 1) } else { Expr::zero() });
        let full = k.mul(&j).unwrap().mul(&k.transpose()).unwrap();
        assert_eq!(k.congruence_skew(&j).unwrap(), full);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = ExprMatrix::from_rows(vec![vec![Expr::zero()], vec![]]).unwrap_err();
        assert!(matches!(err, MatrixError::NotSquare { .. }));
    }
}
