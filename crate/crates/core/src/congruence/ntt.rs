//! Scalar factors `K J K^T = g S` and validity of the time reparametrization.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{is_nonvanishing, is_zero, Domain, Expr, SamplerConfig, ZeroVerdict};
use crate::matrix::ExprMatrix;
use crate::poisson::{check_jacobi_matrix, CanonicalTarget, Verdict};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScalarFactorError {
    #[error("entry ({i},{j}) does not match g times the canonical pattern")]
    PatternMismatch { i: usize, j: usize },
    #[error("matrix dimension {found} does not match the target dimension {expected}")]
    Dimension { found: usize, expected: usize },
}

/// Finds `g` with `M = g S(n, r)` and tests it for nonvanishing.
pub fn extract_scalar_factor(
    m: &ExprMatrix,
    target: CanonicalTarget,
    domain: &Domain,
    cfg: &SamplerConfig,
) -> Result<(Expr, ZeroVerdict), ScalarFactorError> {
    if m.dim() != target.n {
        return Err(ScalarFactorError::Dimension { found: m.dim(), expected: target.n });
    }
    let g = if target.r == 0 { Expr::one() } else { m.get(0, 1).clone() };
    for i in 0..target.n {
        for j in i + 1..target.n {
            let expected = match target.entry(i, j) {
                0 => Expr::zero(),
                s => Expr::int(s as i64) * &g,
            };
            if !is_zero(&(m.get(i, j) - expected), domain, cfg).is_zero() {
                return Err(ScalarFactorError::PatternMismatch { i, j });
            }
        }
    }
    let verdict = is_nonvanishing(&g, domain, cfg);
    Ok((g, verdict))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReparamBasis {
    /// `g` is constant.
    Constant,
    /// `g` depends only on Casimir coordinates.
    CasimirDependence,
    /// Rank at most 2: any smooth nonvanishing factor is admissible.
    RankAtMostTwo,
    /// Symplectic of dimension at least 4 admits only constant factors.
    SymplecticNonConstant,
    /// Jacobi identity checked directly on `g S`.
    DirectJacobi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReparamReport {
    pub verdict: Verdict,
    pub basis: ReparamBasis,
}

/// Whether `g S(n, r)` is a structure matrix, with `g` written in the
/// coordinates of `coords` (position `i` of `coords` is coordinate `i`).
///
/// Tried in order: constant `g`; `g` depending only on `casimir_coords`;
/// rank at most 2; symplectic with `n >= 4` (fails); direct Jacobi check.
pub fn reparam_validity(
    g: &Expr,
    target: CanonicalTarget,
    coords: &Domain,
    casimir_coords: &BTreeSet<String>,
    cfg: &SamplerConfig,
) -> ReparamReport {
    let vars = g.free_variable_names();
    let pass = |basis| ReparamReport { verdict: Verdict::Pass, basis };
    if vars.is_empty() {
        return pass(ReparamBasis::Constant);
    }
    if vars.is_subset(casimir_coords) {
        return pass(ReparamBasis::CasimirDependence);
    }
    if target.r <= 2 {
        return pass(ReparamBasis::RankAtMostTwo);
    }
    if target.r == target.n && target.n >= 4 {
        return ReparamReport { verdict: Verdict::Fail, basis: ReparamBasis::SymplecticNonConstant };
    }
    let gs = target.matrix().scale(g);
    let report = check_jacobi_matrix(&gs, coords, cfg);
    ReparamReport { verdict: report.verdict, basis: ReparamBasis::DirectJacobi }
}

/// Sign of a nonvanishing factor on the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Positive,
    Negative,
    Indefinite,
}

pub fn branch_of(g: &Expr, domain: &Domain, cfg: &SamplerConfig) -> Branch {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sign = 0.0;
    for _ in 0..cfg.samples.max(1) {
        let Ok(v) = g.evaluate(&domain.sample(&mut rng)) else { return Branch::Indefinite };
        if v == 0.0 || (sign != 0.0 && v.signum() != sign) {
            return Branch::Indefinite;
        }
        sign = v.signum();
    }
    if sign > 0.0 {
        Branch::Positive
    } else {
        Branch::Negative
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Sign;

    #[test]
    fn factors() {
        let d = Domain::uniform("x", 3, Sign::Positive);
        let cfg = SamplerConfig::default();
        let t = CanonicalTarget::new(3, 2).unwrap();
        let g = Expr::parse("x1*x2*x3", &d).unwrap();
        let (found, v) = extract_scalar_factor(&t.matrix().scale(&g), t, &d, &cfg).unwrap();
        assert_eq!(found, g);
        assert!(v.is_nonvanishing());
        let (one, _) = extract_scalar_factor(&t.matrix(), t, &d, &cfg).unwrap();
        assert!(one.is_one());
        let minus = Expr::parse("-x3", &d).unwrap();
        assert_eq!(extract_scalar_factor(&t.matrix().scale(&minus), t, &d, &cfg).unwrap().0, minus);
        let mut bad = t.matrix();
        bad.set(0, 2, Expr::one());
        assert_eq!(
            extract_scalar_factor(&bad, t, &d, &cfg).unwrap_err(),
            ScalarFactorError::PatternMismatch { i: 0, j: 2 }
        );
        assert_eq!(branch_of(&g, &d, &cfg), Branch::Positive);
        assert_eq!(branch_of(&minus, &d, &cfg), Branch::Negative);
    }

    #[test]
    fn reparam_bases() {
        let cfg = SamplerConfig::default();
        let y3 = Domain::uniform("y", 3, Sign::Unrestricted);
        let y4 = Domain::uniform("y", 4, Sign::Unrestricted);
        let none = BTreeSet::new();
        let g = Expr::parse("y1*y2*y3", &y3).unwrap();
        let r = reparam_validity(&g, CanonicalTarget::new(3, 2).unwrap(), &y3, &none, &cfg);
        assert_eq!((r.verdict, r.basis), (Verdict::Pass, ReparamBasis::RankAtMostTwo));

        let cas: BTreeSet<String> = ["y3".to_string(), "y4".to_string()].into();
        let psi = Expr::parse("exp(y3+y4)", &y4).unwrap();
        let r = reparam_validity(&psi, CanonicalTarget::new(4, 2).unwrap(), &y4, &cas, &cfg);
        assert_eq!(r.basis, ReparamBasis::CasimirDependence);

        let r = reparam_validity(&Expr::var("y1"), CanonicalTarget::new(4, 4).unwrap(), &y4, &none, &cfg);
        assert_eq!((r.verdict, r.basis), (Verdict::Fail, ReparamBasis::SymplecticNonConstant));

        let y5 = Domain::uniform("y", 5, Sign::Unrestricted);
        let r = reparam_validity(&Expr::var("y1"), CanonicalTarget::new(5, 4).unwrap(), &y5, &none, &cfg);
        assert_eq!((r.verdict, r.basis), (Verdict::Fail, ReparamBasis::DirectJacobi));
    }
}
