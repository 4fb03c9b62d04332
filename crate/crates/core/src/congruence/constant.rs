//! Exact reduction of constant skew matrices.

use std::fmt;

use num_traits::{One, Zero};

use super::ElementaryTransform;
use crate::expr::{Expr, Rational};
use crate::matrix::ExprMatrix;
use crate::poisson::CanonicalTarget;

/// Dense square matrix of exact rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    n: usize,
    a: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("matrix is not skew-symmetric at ({i},{j})")]
pub struct NotSkewError {
    pub i: usize,
    pub j: usize,
}

impl RationalMatrix {
    pub fn zeros(n: usize) -> Self {
        RationalMatrix { n, a: vec![Rational::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        RationalMatrix { n, a: (0..n * n).map(|k| f(k / n, k % n)).collect() }
    }

    /// Reads a matrix whose entries are all rational constants.
    pub fn from_expr(m: &ExprMatrix) -> Option<Self> {
        let n = m.dim();
        let mut out = Self::zeros(n);
        for (i, j, e) in m.entries() {
            out.set(i, j, e.as_num()?.clone());
        }
        Some(out)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.a[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &RationalMatrix) -> RationalMatrix {
        let n = self.n;
        Self::from_fn(n, |i, j| {
            let mut acc = Rational::zero();
            for k in 0..n {
                if !self.get(i, k).is_zero() && !other.get(k, j).is_zero() {
                    acc += self.get(i, k) * other.get(k, j);
                }
            }
            acc
        })
    }

    pub fn transpose(&self) -> RationalMatrix {
        Self::from_fn(self.n, |i, j| self.get(j, i).clone())
    }

    pub fn to_expr(&self) -> ExprMatrix {
        ExprMatrix::from_fn(self.n, |i, j| Expr::num(self.get(i, j).clone()))
    }

    pub fn check_skew(&self) -> Result<(), NotSkewError> {
        for i in 0..self.n {
            for j in i..self.n {
                if *self.get(i, j) != -self.get(j, i) {
                    return Err(NotSkewError { i, j });
                }
            }
        }
        Ok(())
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<RationalMatrix> {
        let n = self.n;
        let mut m = self.clone();
        let mut inv = Self::identity(n);
        for c in 0..n {
            let p = (c..n).find(|&r| !m.get(r, c).is_zero())?;
            m.swap_rows(c, p);
            inv.swap_rows(c, p);
            let piv = m.get(c, c).clone();
            for k in 0..n {
                m.a[c * n + k] /= &piv;
                inv.a[c * n + k] /= &piv;
            }
            for r in 0..n {
                if r == c || m.get(r, c).is_zero() {
                    continue;
                }
                let f = m.get(r, c).clone();
                for k in 0..n {
                    let (mv, iv) = (m.get(c, k) * &f, inv.get(c, k) * &f);
                    m.a[r * n + k] -= mv;
                    inv.a[r * n + k] -= iv;
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            for k in 0..self.n {
                self.a.swap(i * self.n + k, j * self.n + k);
            }
        }
    }

    fn apply_rows(&mut self, t: &ConstStep) {
        let n = self.n;
        match t {
            ConstStep::Permute(i, j) => self.swap_rows(*i, *j),
            ConstStep::Scale(i, c) => (0..n).for_each(|k| self.a[i * n + k] *= c),
            ConstStep::Combine(i, c, j) => {
                for k in 0..n {
                    let add = self.get(*j, k) * c;
                    self.a[i * n + k] += add;
                }
            }
        }
    }

    fn apply_congruence(&mut self, t: &ConstStep) {
        self.apply_rows(t);
        let mut tr = self.transpose();
        tr.apply_rows(t);
        *self = tr.transpose();
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> =
            (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j).to_string()).collect()).collect();
        f.debug_list().entries(rows).finish()
    }
}

enum ConstStep {
    Permute(usize, usize),
    Scale(usize, Rational),
    Combine(usize, Rational, usize),
}

impl ConstStep {
    fn to_transform(&self) -> ElementaryTransform {
        match self {
            ConstStep::Permute(i, j) => ElementaryTransform::permute(*i, *j),
            ConstStep::Scale(i, c) => ElementaryTransform::scale(*i, Expr::num(c.clone())),
            ConstStep::Combine(i, c, j) => ElementaryTransform::combine(*i, Expr::num(c.clone()), *j),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConstantReduction {
    pub steps: Vec<ElementaryTransform>,
    pub k: RationalMatrix,
    pub reduced: RationalMatrix,
    pub target: CanonicalTarget,
}

/// Reduces a constant skew matrix to `S(n, r)` in exact arithmetic.
///
/// For each block: move a nonzero entry to `(p, p+1)`, scale row `p` so it
/// becomes 1, then clear the rest of rows and columns `p` and `p+1`.
pub fn reduce_constant(a: &RationalMatrix) -> Result<ConstantReduction, NotSkewError> {
    a.check_skew()?;
    let n = a.dim();
    let mut m = a.clone();
    let mut k = RationalMatrix::identity(n);
    let mut steps = Vec::new();
    let mut apply = |t: ConstStep, m: &mut RationalMatrix, k: &mut RationalMatrix| {
        m.apply_congruence(&t);
        k.apply_rows(&t);
        steps.push(t.to_transform());
    };
    let mut p = 0;
    while p + 1 < n {
        let pivot = (p..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| !m.get(i, j).is_zero());
        let Some((i, j)) = pivot else { break };
        if i != p {
            apply(ConstStep::Permute(p, i), &mut m, &mut k);
        }
        if j != p + 1 {
            apply(ConstStep::Permute(p + 1, j), &mut m, &mut k);
        }
        let piv = m.get(p, p + 1).clone();
        if !piv.is_one() {
            apply(ConstStep::Scale(p, piv.recip()), &mut m, &mut k);
        }
        for c in p + 2..n {
            let u = m.get(p, c).clone();
            if !u.is_zero() {
                apply(ConstStep::Combine(c, -u, p + 1), &mut m, &mut k);
            }
            let v = m.get(p + 1, c).clone();
            if !v.is_zero() {
                apply(ConstStep::Combine(c, v, p), &mut m, &mut k);
            }
        }
        p += 2;
    }
    let target = CanonicalTarget::new(n, p.min(n)).expect("p is even and at most n");
    Ok(ConstantReduction { steps, k, reduced: m, target })
}
