//! Recovery of `y(x)` from a Jacobian congruence matrix by quadratures.

use crate::expr::{is_zero, Domain, Expr, IntegrateError, SamplerConfig};
use crate::matrix::ExprMatrix;
use crate::poisson::{check_casimir, CanonicalTarget, StructureMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadratureError {
    #[error("row {row}: integrating in {var} failed: {source}")]
    Integrate { row: usize, var: String, source: IntegrateError },
    #[error("row {row}: the derivative in {var} does not reproduce K (matrix is not closed)")]
    Incompatible { row: usize, var: String },
    #[error("component {index} is not a Casimir: J * grad C is nonzero at component {component}")]
    NotCasimir { index: usize, component: usize },
    #[error("expected {expected} components, found {found}")]
    Dimension { expected: usize, found: usize },
}

/// Integrates each row of `K` along the coordinate axes in order, adding
/// at step `j` only the part of `K_ij` not yet accounted for.
pub fn integrate_jacobian(k: &ExprMatrix, domain: &Domain, cfg: &SamplerConfig) -> Result<Vec<Expr>, QuadratureError> {
    let vars = domain.variable_names();
    if vars.len() != k.dim() {
        return Err(QuadratureError::Dimension { expected: k.dim(), found: vars.len() });
    }
    let mut ys = Vec::with_capacity(k.dim());
    for (row, entries) in k.rows().into_iter().enumerate() {
        let mut y = Expr::zero();
        for (var, kij) in vars.iter().zip(&entries) {
            let rem = kij - y.differentiate(var);
            if is_zero(&rem, domain, cfg).is_zero() {
                continue;
            }
            let prim = rem.antiderivative(var, domain).map_err(|source| QuadratureError::Integrate {
                row,
                var: var.clone(),
                source,
            })?;
            y = y + prim;
        }
        for (var, kij) in vars.iter().zip(&entries) {
            if !is_zero(&(y.differentiate(var) - kij), domain, cfg).is_zero() {
                return Err(QuadratureError::Incompatible { row, var: var.clone() });
            }
        }
        ys.push(y);
    }
    Ok(ys)
}

/// The last `n - r` components of `y`, each checked against `J`.
pub fn casimirs_from(
    y: &[Expr],
    target: CanonicalTarget,
    j: &StructureMatrix,
    cfg: &SamplerConfig,
) -> Result<Vec<Expr>, QuadratureError> {
    if y.len() != target.n {
        return Err(QuadratureError::Dimension { expected: target.n, found: y.len() });
    }
    let mut out = Vec::new();
    for (index, c) in y.iter().enumerate().skip(target.r) {
        let report = check_casimir(j, c, cfg);
        if !report.passed() {
            let component = report.location.and_then(|l| l.first().copied()).unwrap_or(0);
            return Err(QuadratureError::NotCasimir { index, component });
        }
        out.push(c.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Sign;

    fn matrix(rows: &[&[&str]], d: &Domain) -> ExprMatrix {
        ExprMatrix::from_rows(rows.iter().map(|r| r.iter().map(|s| Expr::parse(s, d).unwrap()).collect()).collect())
            .unwrap()
    }

    #[test]
    fn identity_gives_coordinates() {
        let d = Domain::uniform("x", 3, Sign::Unrestricted);
        let y = integrate_jacobian(&ExprMatrix::identity(3), &d, &SamplerConfig::default()).unwrap();
        assert_eq!(y, vec![Expr::var("x1"), Expr::var("x2"), Expr::var("x3")]);
    }

    #[test]
    fn toda_coordinates() {
        let d = Domain::new(
            [
                ("x1", Sign::Positive),
                ("x2", Sign::Positive),
                ("x3", Sign::Unrestricted),
                ("x4", Sign::Unrestricted),
                ("x5", Sign::Unrestricted),
            ],
            [],
        )
        .unwrap();
        let k = matrix(
            &[
                &["-1/x1", "0", "0", "0", "0"],
                &["0", "0", "1", "0", "0"],
                &["0", "-1/x2", "0", "0", "0"],
                &["0", "0", "1", "1", "0"],
                &["0", "0", "1", "1", "1"],
            ],
            &d,
        );
        let y = integrate_jacobian(&k, &d, &SamplerConfig::default()).unwrap();
        let expect = ["-log(x1)", "x3", "-log(x2)", "x3+x4", "x3+x4+x5"];
        for (yi, e) in y.iter().zip(expect) {
            assert_eq!(*yi, Expr::parse(e, &d).unwrap());
        }
    }

    #[test]
    fn rotation_route_coordinates() {
        let d = Domain::uniform("x", 3, Sign::Positive);
        let k = matrix(&[&["-x1", "-x2", "0"], &["0", "x2", "0"], &["x1", "x2", "x3"]], &d);
        let y = integrate_jacobian(&k, &d, &SamplerConfig::default()).unwrap();
        let expect = ["-(x1^2+x2^2)/2", "x2^2/2", "(x1^2+x2^2+x3^2)/2"];
        for (yi, e) in y.iter().zip(expect) {
            assert_eq!(*yi, Expr::parse(e, &d).unwrap());
        }
    }

    #[test]
    fn non_closed_rows_are_rejected() {
        let d = Domain::uniform("x", 2, Sign::Positive);
        let k = matrix(&[&["1", "x1"], &["0", "1"]], &d);
        let err = integrate_jacobian(&k, &d, &SamplerConfig::default()).unwrap_err();
        assert!(matches!(err, QuadratureError::Incompatible { row: 0, .. }), "{err}");
    }
}
