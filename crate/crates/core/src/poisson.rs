//! Structure matrices and their defining checks.

use std::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{is_zero, Bindings, Domain, EvalError, Evidence, Expr, SamplerConfig, ZeroOutcome};
use crate::matrix::{ExprMatrix, MatrixError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoissonError {
    #[error("matrix has dimension {matrix} but the domain declares {variables} variables")]
    Dimension { matrix: usize, variables: usize },
    #[error("entry ({i},{j}) uses undeclared symbol `{name}`")]
    UndeclaredSymbol { i: usize, j: usize, name: String },
    #[error("rank {r} must be even and at most n = {n}")]
    InvalidRank { n: usize, r: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// Poisson structure matrix `J(x)` on a domain, with an optional Hamiltonian.
#[derive(Clone, Debug)]
pub struct StructureMatrix {
    entries: ExprMatrix,
    domain: Domain,
    hamiltonian: Option<Expr>,
}

impl StructureMatrix {
    pub fn new(entries: ExprMatrix, domain: Domain, hamiltonian: Option<Expr>) -> Result<Self, PoissonError> {
        if entries.dim() != domain.dim() {
            return Err(PoissonError::Dimension { matrix: entries.dim(), variables: domain.dim() });
        }
        for (i, j, e) in entries.entries() {
            if let Some(s) = e.symbols().into_iter().find(|s| domain.lookup(s.name()).is_none()) {
                return Err(PoissonError::UndeclaredSymbol { i, j, name: s.name().to_string() });
            }
        }
        Ok(StructureMatrix { entries, domain, hamiltonian })
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &ExprMatrix {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        self.entries.get(i, j)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn hamiltonian(&self) -> Option<&Expr> {
        self.hamiltonian.as_ref()
    }

    pub fn with_hamiltonian(mut self, h: Option<Expr>) -> Self {
        self.hamiltonian = h;
        self
    }

    /// `J * grad(f)` as expressions.
    pub fn apply_gradient(&self, f: &Expr) -> Vec<Expr> {
        let grad = f.gradient(&self.domain.variable_names());
        (0..self.dim())
            .map(|i| {
                Expr::add(
                    (0..self.dim())
                        .filter(|&j| !grad[j].is_zero() && !self.entry(i, j).is_zero())
                        .map(|j| self.entry(i, j) * &grad[j]),
                )
            })
            .collect()
    }
}

/// The Darboux canonical matrix `S(n, r)`: `r/2` symplectic blocks, then zeros.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalTarget {
    pub n: usize,
    pub r: usize,
}

impl CanonicalTarget {
    pub fn new(n: usize, r: usize) -> Result<Self, PoissonError> {
        if r % 2 == 1 || r > n {
            return Err(PoissonError::InvalidRank { n, r });
        }
        Ok(CanonicalTarget { n, r })
    }

    /// Entry of `S(n, r)` as -1, 0 or 1.
    pub fn entry(&self, i: usize, j: usize) -> i32 {
        if i < self.r && j < self.r && i / 2 == j / 2 && i != j {
            if i.is_multiple_of(2) {
                1
            } else {
                -1
            }
        } else {
            0
        }
    }

    pub fn matrix(&self) -> ExprMatrix {
        ExprMatrix::from_fn(self.n, |i, j| Expr::int(self.entry(i, j) as i64))
    }

    pub fn casimir_count(&self) -> usize {
        self.n - self.r
    }
}

pub fn canonical_matrix(n: usize, r: usize) -> Result<CanonicalTarget, PoissonError> {
    CanonicalTarget::new(n, r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Undetermined,
}

/// Outcome of checking a family of identities.
///
/// `location` holds the 0-based indices of the first failing (or
/// undetermined) identity, e.g. `[i, j]` for skew-symmetry or `[i, j, k]`
/// for a Jacobi triple.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub checked: usize,
    pub location: Option<Vec<usize>>,
    pub residual: Option<Expr>,
    pub evidence: Option<Evidence>,
}

pub type JacobiReport = CheckReport;

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Runs `is_zero` on each `(location, residual)` until one is not zero.
    pub fn from_residuals<I>(residuals: I, domain: &Domain, cfg: &SamplerConfig) -> CheckReport
    where
        I: IntoIterator<Item = (Vec<usize>, Expr)>,
    {
        let mut checked = 0;
        let mut undetermined: Option<CheckReport> = None;
        for (location, residual) in residuals {
            checked += 1;
            let v = is_zero(&residual, domain, cfg);
            match v.outcome {
                ZeroOutcome::Zero => {}
                ZeroOutcome::Undetermined => {
                    undetermined.get_or_insert(CheckReport {
                        verdict: Verdict::Undetermined,
                        checked: 0,
                        location: Some(location),
                        residual: Some(residual),
                        evidence: Some(v.evidence),
                    });
                }
                _ => {
                    return CheckReport {
                        verdict: Verdict::Fail,
                        checked,
                        location: Some(location),
                        residual: Some(residual),
                        evidence: Some(v.evidence),
                    }
                }
            }
        }
        match undetermined {
            Some(mut u) => {
                u.checked = checked;
                u
            }
            None => CheckReport { verdict: Verdict::Pass, checked, location: None, residual: None, evidence: None },
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Undetermined => "undetermined",
        };
        write!(f, "{v} ({} checked)", self.checked)?;
        if let Some(loc) = &self.location {
            let one_based: Vec<String> = loc.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, " at ({})", one_based.join(","))?;
        }
        if let Some(r) = &self.residual {
            write!(f, ", residual {r}")?;
        }
        if let Some(Evidence::Sampled { witness: Some(w), .. }) = &self.evidence {
            write!(f, ", witness {w:?}")?;
        }
        Ok(())
    }
}

pub fn check_skew(j: &StructureMatrix, cfg: &SamplerConfig) -> CheckReport {
    let n = j.dim();
    let pairs = (0..n).flat_map(|i| (i..n).map(move |k| (i, k)));
    CheckReport::from_residuals(pairs.map(|(i, k)| (vec![i, k], j.entry(i, k) + j.entry(k, i))), j.domain(), cfg)
}

/// Left-hand side of the Jacobi identity for the triple `(i, j, k)`.
pub fn jacobi_residual(m: &ExprMatrix, vars: &[String], i: usize, j: usize, k: usize) -> Expr {
    let n = m.dim();
    let mut terms = Vec::new();
    for (l, var) in vars.iter().enumerate().take(n) {
        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
            let lead = m.get(l, a);
            if lead.is_zero() {
                continue;
            }
            let d = m.get(b, c).differentiate(var);
            if !d.is_zero() {
                terms.push(lead * d);
            }
        }
    }
    Expr::add(terms)
}

/// Checks the Jacobi identity on every triple `i < j < k`.
pub fn check_jacobi(j: &StructureMatrix, cfg: &SamplerConfig) -> JacobiReport {
    check_jacobi_matrix(j.entries(), j.domain(), cfg)
}

pub fn check_jacobi_matrix(m: &ExprMatrix, domain: &Domain, cfg: &SamplerConfig) -> JacobiReport {
    let n = m.dim();
    let vars = domain.variable_names();
    let triples = (0..n).flat_map(|i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k))));
    CheckReport::from_residuals(
        triples.map(|(i, j, k)| (vec![i, j, k], jacobi_residual(m, &vars, i, j, k))),
        domain,
        cfg,
    )
}

/// Rank of a real matrix by singular values above `1e-8 * sigma_max`.
pub fn rank_of(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * max).count()
}

pub fn numeric_rank(j: &StructureMatrix, at: &Bindings) -> Result<usize, EvalError> {
    Ok(rank_of(&j.entries().evaluate(at)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    pub consistent: bool,
    pub samples: usize,
    /// A point where the rank differs from the maximum.
    pub deficient_at: Option<Vec<f64>>,
}

/// Rank at `cfg.samples` random points plus the domain's probe point.
pub fn generic_rank(j: &StructureMatrix, cfg: &SamplerConfig) -> RankReport {
    let domain = j.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points: Vec<Bindings> = (0..cfg.samples).map(|_| domain.sample(&mut rng)).collect();
    points.push(domain.probe());
    let mut ranks = Vec::new();
    for b in &points {
        if let Ok(r) = numeric_rank(j, b) {
            let point: Vec<f64> = domain.variables().map(|s| b.get(s.name()).unwrap_or(f64::NAN)).collect();
            ranks.push((r, point));
        }
    }
    let rank = ranks.iter().map(|(r, _)| *r).max().unwrap_or(0);
    let deficient_at = ranks.iter().find(|(r, _)| *r != rank).map(|(_, p)| p.clone());
    RankReport { rank, consistent: deficient_at.is_none(), samples: ranks.len(), deficient_at }
}

/// `K * J * K^T`, skew by construction.
pub fn transform_structure(j: &StructureMatrix, k: &ExprMatrix) -> Result<ExprMatrix, PoissonError> {
    Ok(k.congruence_skew(j.entries())?)
}

/// Checks `J * grad(C) = 0` componentwise.
pub fn check_casimir(j: &StructureMatrix, c: &Expr, cfg: &SamplerConfig) -> CheckReport {
    let comps = j.apply_gradient(c);
    CheckReport::from_residuals(comps.into_iter().enumerate().map(|(i, e)| (vec![i], e)), j.domain(), cfg)
}
