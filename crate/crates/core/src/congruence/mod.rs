//! Elementary transformations, Jacobian tests and the reduction to Darboux form.

mod constant;
mod ntt;
mod quadrature;
mod search;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{Domain, Expr, SamplerConfig};
use crate::matrix::ExprMatrix;
use crate::poisson::{CanonicalTarget, CheckReport};

pub use constant::{reduce_constant, ConstantReduction, NotSkewError, RationalMatrix};
pub use ntt::{
    branch_of, extract_scalar_factor, reparam_validity, Branch, ReparamBasis, ReparamReport, ScalarFactorError,
};
pub use quadrature::{casimirs_from, integrate_jacobian, QuadratureError};
pub use search::{reduce_functional, ReduceOptions};

/// One elementary row operation, paired with the transposed column operation.
/// Indices are 0-based; display and serialization use 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ElementaryTransform {
    /// Swap rows (and columns) `i` and `j`.
    Permute { i: usize, j: usize },
    /// Multiply row (and column) `i` by `xi`.
    Scale { i: usize, xi: Expr },
    /// Add `xi` times row (column) `j` to row (column) `i`.
    Combine { i: usize, xi: Expr, j: usize },
}

impl ElementaryTransform {
    pub fn permute(i: usize, j: usize) -> Self {
        assert_ne!(i, j, "permutation of a row with itself");
        ElementaryTransform::Permute { i, j }
    }

    pub fn scale(i: usize, xi: Expr) -> Self {
        ElementaryTransform::Scale { i, xi }
    }

    pub fn combine(i: usize, xi: Expr, j: usize) -> Self {
        assert_ne!(i, j, "combination of a row with itself");
        ElementaryTransform::Combine { i, xi, j }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ElementaryTransform::Permute { .. } => "permute",
            ElementaryTransform::Scale { .. } => "scale",
            ElementaryTransform::Combine { .. } => "combine",
        }
    }

    /// The row the operation writes to.
    pub fn row(&self) -> usize {
        match self {
            ElementaryTransform::Permute { i, .. }
            | ElementaryTransform::Scale { i, .. }
            | ElementaryTransform::Combine { i, .. } => *i,
        }
    }

    pub fn coefficient(&self) -> Option<&Expr> {
        match self {
            ElementaryTransform::Permute { .. } => None,
            ElementaryTransform::Scale { xi, .. } | ElementaryTransform::Combine { xi, .. } => Some(xi),
        }
    }

    /// Row matrix of the operation; the column matrix is its transpose.
    pub fn matrix(&self, n: usize) -> ExprMatrix {
        let mut m = ExprMatrix::identity(n);
        match self {
            ElementaryTransform::Permute { i, j } => {
                m.set(*i, *i, Expr::zero());
                m.set(*j, *j, Expr::zero());
                m.set(*i, *j, Expr::one());
                m.set(*j, *i, Expr::one());
            }
            ElementaryTransform::Scale { i, xi } => m.set(*i, *i, xi.clone()),
            ElementaryTransform::Combine { i, xi, j } => m.set(*i, *j, xi.clone()),
        }
        m
    }

    /// `E * K`: the row operation alone.
    pub fn apply_rows(&self, k: &ExprMatrix) -> ExprMatrix {
        let n = k.dim();
        let mut out = k.clone();
        match self {
            ElementaryTransform::Permute { i, j } => {
                for c in 0..n {
                    out.set(*i, c, k.get(*j, c).clone());
                    out.set(*j, c, k.get(*i, c).clone());
                }
            }
            ElementaryTransform::Scale { i, xi } => {
                for c in 0..n {
                    out.set(*i, c, xi * k.get(*i, c));
                }
            }
            ElementaryTransform::Combine { i, xi, j } => {
                for c in 0..n {
                    if !k.get(*j, c).is_zero() {
                        out.set(*i, c, k.get(*i, c) + xi * k.get(*j, c));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for ElementaryTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementaryTransform::Permute { i, j } => write!(f, "P_R[{},{}]", i + 1, j + 1),
            ElementaryTransform::Scale { i, xi } => write!(f, "M_R[{};{}]", i + 1, xi),
            ElementaryTransform::Combine { i, xi, j } => write!(f, "L_R[{};{},{}]", i + 1, xi, j + 1),
        }
    }
}

pub fn etm_matrix(t: &ElementaryTransform, n: usize) -> ExprMatrix {
    t.matrix(n)
}

/// Whether the transformation is itself the Jacobian of a diffeomorphism.
///
/// Permutations always are; a scaling of row `i` only when its factor
/// depends on `x_i` alone; a combination into row `i` from row `j` only when
/// its coefficient depends on `x_j` alone.
pub fn is_jetm(t: &ElementaryTransform, domain: &Domain) -> (bool, String) {
    let only = |xi: &Expr, idx: usize| {
        let name = domain.variable_symbol(idx).name().to_string();
        let vars = xi.free_variable_names();
        let ok = vars.iter().all(|v| *v == name);
        let reason = if ok {
            format!("coefficient depends at most on {name}")
        } else {
            let others: Vec<&str> = vars.iter().filter(|v| **v != name).map(String::as_str).collect();
            format!("coefficient depends on {} besides {name}", others.join(", "))
        };
        (ok, reason)
    };
    match t {
        ElementaryTransform::Permute { .. } => (true, "permutations are always Jacobian".to_string()),
        ElementaryTransform::Scale { i, xi } => only(xi, *i),
        ElementaryTransform::Combine { xi, j, .. } => only(xi, *j),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetmError {
    #[error("{0} is not a Jacobian elementary transformation: {1}")]
    NotJetm(String, String),
    #[error(transparent)]
    Integrate(#[from] crate::expr::IntegrateError),
}

/// The explicit map `y(x)` whose Jacobian is the transformation's matrix.
/// Integration constants are 0; non-table integrals stay unevaluated.
pub fn jetm_diffeomorphism(t: &ElementaryTransform, domain: &Domain) -> Result<Vec<Expr>, JetmError> {
    let (ok, reason) = is_jetm(t, domain);
    if !ok {
        return Err(JetmError::NotJetm(t.to_string(), reason));
    }
    let mut y: Vec<Expr> = (0..domain.dim()).map(|i| domain.variable(i)).collect();
    let name = |i: usize| domain.variable_symbol(i).name().to_string();
    match t {
        ElementaryTransform::Permute { i, j } => y.swap(*i, *j),
        ElementaryTransform::Scale { i, xi } => y[*i] = xi.integrate_univariate(&name(*i), domain)?,
        ElementaryTransform::Combine { i, xi, j } => {
            y[*i] = domain.variable(*i) + xi.integrate_univariate(&name(*j), domain)?;
        }
    }
    Ok(y)
}

/// `E * M * E^T` for a skew matrix `M`, computed by row and column operations.
pub fn apply_step(m: &ExprMatrix, t: &ElementaryTransform) -> ExprMatrix {
    let n = m.dim();
    let mut out = m.clone();
    match t {
        ElementaryTransform::Permute { i, j } => {
            let swap = |k: usize| {
                if k == *i {
                    *j
                } else if k == *j {
                    *i
                } else {
                    k
                }
            };
            out = ExprMatrix::from_fn(n, |r, c| m.get(swap(r), swap(c)).clone());
        }
        ElementaryTransform::Scale { i, xi } => {
            for k in (0..n).filter(|&k| k != *i) {
                let e = xi * m.get(*i, k);
                out.set(k, *i, -&e);
                out.set(*i, k, e);
            }
        }
        ElementaryTransform::Combine { i, xi, j } => {
            for k in (0..n).filter(|&k| k != *i) {
                if m.get(*j, k).is_zero() {
                    continue;
                }
                let e = m.get(*i, k) + xi * m.get(*j, k);
                out.set(k, *i, -&e);
                out.set(*i, k, e);
            }
        }
    }
    out
}

/// Closedness of each row of `K` seen as a 1-form: `dK_ij/dx_k = dK_ik/dx_j`.
pub fn jacobian_condition(k: &ExprMatrix, domain: &Domain, cfg: &SamplerConfig) -> CheckReport {
    jacobian_condition_rows(k, 0..k.dim(), domain, cfg)
}

pub fn jacobian_condition_rows(
    k: &ExprMatrix,
    rows: impl IntoIterator<Item = usize>,
    domain: &Domain,
    cfg: &SamplerConfig,
) -> CheckReport {
    let vars = domain.variable_names();
    let n = k.dim();
    let mut residuals = Vec::new();
    for i in rows {
        for j in 0..n {
            for l in j + 1..n {
                let r = k.get(i, j).differentiate(&vars[l]) - k.get(i, l).differentiate(&vars[j]);
                residuals.push((vec![i, j, l], r));
            }
        }
    }
    CheckReport::from_residuals(residuals, domain, cfg)
}

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub transform: ElementaryTransform,
    pub is_jetm: bool,
    /// Set when the step is only smooth and invertible away from the zeros
    /// or poles of its coefficient.
    pub restriction: Option<String>,
    /// Working matrix after the step.
    pub matrix: ExprMatrix,
}

/// Ordered transformations applied to a structure matrix.
#[derive(Clone, Debug)]
pub struct ReductionTrace {
    pub initial: ExprMatrix,
    pub steps: Vec<TraceStep>,
    /// Accumulated congruence matrix `K_m * ... * K_1`.
    pub k: ExprMatrix,
}

fn restriction_of(t: &ElementaryTransform) -> Option<String> {
    let xi = t.coefficient()?;
    if xi.is_constant() {
        return None;
    }
    let singular = has_negative_power(xi);
    match t {
        ElementaryTransform::Scale { .. } => Some(format!("requires {xi} to be smooth and nonzero")),
        _ if singular => Some(format!("requires {xi} to be smooth")),
        _ => None,
    }
}

fn has_negative_power(e: &Expr) -> bool {
    use crate::expr::Node;
    match e.node() {
        Node::Pow(b, q) => num_traits::Signed::is_negative(q) || has_negative_power(b),
        Node::Log(_) => true,
        Node::Add(ts) | Node::Mul(ts) => ts.iter().any(has_negative_power),
        Node::Exp(a) | Node::Integral(a, _) => has_negative_power(a),
        _ => false,
    }
}

impl ReductionTrace {
    pub fn new(initial: ExprMatrix) -> Self {
        let k = ExprMatrix::identity(initial.dim());
        ReductionTrace { initial, steps: Vec::new(), k }
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }

    pub fn current(&self) -> &ExprMatrix {
        self.steps.last().map(|s| &s.matrix).unwrap_or(&self.initial)
    }

    pub fn push(&mut self, t: ElementaryTransform, domain: &Domain) {
        let matrix = apply_step(self.current(), &t);
        self.k = t.apply_rows(&self.k);
        let (is_jetm, _) = is_jetm(&t, domain);
        let restriction = restriction_of(&t);
        self.steps.push(TraceStep { transform: t, is_jetm, restriction, matrix });
    }

    pub fn final_matrix(&self) -> &ExprMatrix {
        self.current()
    }

    pub fn transforms(&self) -> impl Iterator<Item = &ElementaryTransform> {
        self.steps.iter().map(|s| &s.transform)
    }

    /// Ordered product of the step matrices, by full matrix multiplication.
    pub fn product(&self) -> ExprMatrix {
        let n = self.dim();
        self.transforms().fold(ExprMatrix::identity(n), |acc, t| t.matrix(n).mul(&acc).expect("same dimension"))
    }

    /// Replays the steps from the initial matrix with full matrix products.
    pub fn replay(&self) -> ExprMatrix {
        let n = self.dim();
        self.transforms().fold(self.initial.clone(), |m, t| {
            let e = t.matrix(n);
            e.mul(&m).and_then(|em| em.mul(&e.transpose())).expect("same dimension")
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    JacobianCongruence,
    CongruenceOnly,
    NttCongruence,
    Failed,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::JacobianCongruence => "jacobian-congruence",
            Status::CongruenceOnly => "congruence-only",
            Status::NttCongruence => "ntt-congruence",
            Status::Failed => "failed",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Time-reparametrization data: `K J K^T = g S` and `d tau = g dt`.
#[derive(Clone, Debug)]
pub struct NttFactor {
    pub g: Expr,
    /// `g` written in the Darboux coordinates, when `K` is invertible in closed form.
    pub g_darboux: Option<Expr>,
    pub branch: Branch,
    pub reparam: ReparamReport,
}

#[derive(Clone, Debug)]
pub struct DarbouxResult {
    pub status: Status,
    pub target: Option<CanonicalTarget>,
    pub trace: ReductionTrace,
    /// Darboux coordinates `y(x)`; present for Jacobian and NTT congruences.
    pub y: Option<Vec<Expr>>,
    pub casimirs: Vec<Expr>,
    pub ntt: Option<NttFactor>,
    /// Human-readable notes, e.g. the reason for a failure.
    pub notes: Vec<String>,
}

impl DarbouxResult {
    pub fn k(&self) -> &ExprMatrix {
        &self.trace.k
    }

    /// The scalar `g` in `K J K^T = g S`; 1 for a plain congruence.
    pub fn factor(&self) -> Expr {
        self.ntt.as_ref().map(|n| n.g.clone()).unwrap_or_else(Expr::one)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Sign;

    fn so3() -> (ExprMatrix, Domain) {
        let d = Domain::uniform("x", 3, Sign::Positive);
        let p = |s: &str| Expr::parse(s, &d).unwrap();
        let m = ExprMatrix::from_rows(vec![
            vec![p("0"), p("-x3"), p("x2")],
            vec![p("x3"), p("0"), p("-x1")],
            vec![p("-x2"), p("x1"), p("0")],
        ])
        .unwrap();
        (m, d)
    }

    #[test]
    fn etm_matrices() {
        let d = Domain::uniform("x", 3, Sign::Positive);
        let p = |s: &str| Expr::parse(s, &d).unwrap();
        let perm = ElementaryTransform::permute(0, 1).matrix(3);
        assert_eq!(perm.to_strings(), vec![vec!["0", "1", "0"], vec!["1", "0", "0"], vec!["0", "0", "1"]]);
        let scale = ElementaryTransform::scale(0, p("-1/x3")).matrix(3);
        assert_eq!(scale.get(0, 0), &p("-1/x3"));
        assert!(scale.get(1, 1).is_one() && scale.get(0, 1).is_zero());
        let comb = ElementaryTransform::combine(2, p("x2/x3"), 1).matrix(3);
        assert_eq!(comb.get(2, 1), &p("x2/x3"));
        assert!(comb.get(2, 2).is_one());
    }

    #[test]
    fn jetm_predicates() {
        let d = Domain::uniform("x", 3, Sign::Positive);
        let p = |s: &str| Expr::parse(s, &d).unwrap();
        assert!(is_jetm(&ElementaryTransform::scale(0, p("1/x1")), &d).0);
        assert!(!is_jetm(&ElementaryTransform::scale(0, p("-1/x3")), &d).0);
        assert!(is_jetm(&ElementaryTransform::combine(2, p("-x1"), 0), &d).0);
        assert!(!is_jetm(&ElementaryTransform::combine(2, p("x2/x3"), 1), &d).0);
        assert!(is_jetm(&ElementaryTransform::permute(1, 2), &d).0);
    }

    #[test]
    fn so3_global_congruence_is_not_jacobian() {
        let (m, d) = so3();
        let p = |s: &str| Expr::parse(s, &d).unwrap();
        let mut trace = ReductionTrace::new(m);
        trace.push(ElementaryTransform::scale(0, p("-1/x3")), &d);
        trace.push(ElementaryTransform::combine(2, p("x2/x3"), 1), &d);
        trace.push(ElementaryTransform::combine(2, p("-x1"), 0), &d);
        let s = CanonicalTarget::new(3, 2).unwrap().matrix();
        assert_eq!(trace.final_matrix(), &s);
        assert_eq!(trace.replay(), s);
        assert_eq!(trace.product(), trace.k);
        assert_eq!(trace.k.to_strings()[2], vec!["x1/x3", "x2/x3", "1"]);
        let cfg = SamplerConfig::default();
        let report = jacobian_condition(&trace.k, &d, &cfg);
        assert!(!report.passed());
        assert!(jacobian_condition(&ExprMatrix::identity(3), &d, &cfg).passed());
        assert_eq!(trace.steps.iter().map(|s| s.is_jetm).collect::<Vec<_>>(), vec![false, false, true]);
    }

    #[test]
    fn jetm_maps() {
        let d = Domain::new(
            [
                ("x1", Sign::Positive),
                ("x2", Sign::Positive),
                ("x3", Sign::Positive),
                ("x4", Sign::Positive),
                ("x5", Sign::Positive),
            ],
            [("b", Sign::Positive)],
        )
        .unwrap();
        let p = |s: &str| Expr::parse(s, &d).unwrap();
        let y = jetm_diffeomorphism(&ElementaryTransform::permute(1, 2), &d).unwrap();
        assert_eq!(y[1], p("x3"));
        assert_eq!(y[2], p("x2"));
        let y = jetm_diffeomorphism(&ElementaryTransform::scale(1, p("1/(b*x2)")), &d).unwrap();
        assert_eq!(y[1], p("log(x2)/b"));
        let y = jetm_diffeomorphism(&ElementaryTransform::combine(3, p("1"), 2), &d).unwrap();
        assert_eq!(y[3], p("x4+x3"));
        assert!(jetm_diffeomorphism(&ElementaryTransform::scale(0, p("x2")), &d).is_err());
    }

    #[test]
    fn zero_matrix_is_fixed_by_any_step() {
        let z = ExprMatrix::zeros(3);
        for t in [
            ElementaryTransform::permute(0, 2),
            ElementaryTransform::scale(1, Expr::var("x2")),
            ElementaryTransform::combine(0, Expr::var("x3"), 2),
        ] {
            assert!(apply_step(&z, &t).is_zero());
        }
    }
}
