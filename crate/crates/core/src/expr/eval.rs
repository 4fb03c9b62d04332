use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use num_traits::{Signed, ToPrimitive};

use super::{Expr, Node, Rational};

/// Magnitudes below this are treated as exact zeros of a denominator.
pub const POLE_THRESHOLD: f64 = 1e-300;

const QUAD_DEGREE: usize = 20;
const QUAD_MAX_PANELS: usize = 1 << 12;
const QUAD_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("symbol `{0}` is not bound")]
    Unbound(String),
    #[error("pole: division by a value below 1e-300")]
    Pole,
    #[error("{0} outside its real domain")]
    OutOfDomain(&'static str),
    #[error("non-finite value")]
    NonFinite,
    #[error("quadrature for `{0}` did not converge")]
    Quadrature(String),
}

/// Numeric values for symbols, plus quadrature anchors for integration variables.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    values: HashMap<String, f64>,
    anchors: HashMap<String, f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn set_anchor(&mut self, name: &str, anchor: f64) {
        self.anchors.insert(name.to_string(), anchor);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Lower limit used for `integral(f, name)`; 0 unless set by the domain.
    pub fn anchor(&self, name: &str) -> f64 {
        self.anchors.get(name).copied().unwrap_or(0.0)
    }

    pub fn with(&self, name: &str, value: f64) -> Bindings {
        let mut b = self.clone();
        b.set(name, value);
        b
    }
}

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(QUAD_DEGREE).unwrap()))
}

/// Composite Gauss-Legendre on `panels` equal panels; doubles until two levels agree.
///
/// The panel count is chosen by convergence only, so for nearby upper limits
/// the same rule is used and the result stays a smooth function of the limit.
fn quadrature(mut f: impl FnMut(f64) -> Result<f64, EvalError>, a: f64, b: f64, name: &str) -> Result<f64, EvalError> {
    if a == b {
        return Ok(0.0);
    }
    let mut composite = |panels: usize| -> Result<f64, EvalError> {
        let width = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let lo = a + width * k as f64;
            let mut err = None;
            total += rule().integrate(lo, lo + width, |x| match f(x) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(total)
    };
    let mut panels = 2;
    let mut prev = composite(panels)?;
    while panels < QUAD_MAX_PANELS {
        panels *= 2;
        let next = composite(panels)?;
        if (next - prev).abs() <= QUAD_TOLERANCE * (1.0 + next.abs()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(EvalError::Quadrature(name.to_string()))
}

fn real_power(x: f64, q: &Rational) -> Result<f64, EvalError> {
    let qf = q.to_f64().ok_or(EvalError::NonFinite)?;
    if q.is_negative() && x.abs() < POLE_THRESHOLD {
        return Err(EvalError::Pole);
    }
    if q.denom() == &1.into() {
        return match q.numer().to_i32() {
            Some(n) => Ok(x.powi(n)),
            None => Ok(x.powf(qf)),
        };
    }
    if x >= 0.0 {
        return Ok(x.powf(qf));
    }
    // Odd roots of negative numbers are real.
    let odd_denominator = q.denom() % 2u32 == 1.into();
    if !odd_denominator {
        return Err(EvalError::OutOfDomain("even root of a negative number"));
    }
    let odd_numerator = q.numer() % 2u32 != 0.into();
    let m = (-x).powf(qf);
    Ok(if odd_numerator { -m } else { m })
}

impl Expr {
    /// Evaluates in IEEE double precision.
    ///
    /// Unevaluated integrals are computed by quadrature from the anchor stored in `b`.
    pub fn evaluate(&self, b: &Bindings) -> Result<f64, EvalError> {
        let v = match self.node() {
            Node::Num(r) => r.to_f64().ok_or(EvalError::NonFinite)?,
            Node::Sym(s) => b.get(s.name()).ok_or_else(|| EvalError::Unbound(s.name().to_string()))?,
            Node::Add(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.evaluate(b)?;
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = 1.0;
                for f in fs {
                    acc *= f.evaluate(b)?;
                }
                acc
            }
            Node::Pow(base, q) => real_power(base.evaluate(b)?, q)?,
            Node::Log(a) => {
                let x = a.evaluate(b)?;
                if x <= 0.0 {
                    return Err(EvalError::OutOfDomain("logarithm of a nonpositive number"));
                }
                x.ln()
            }
            Node::Exp(a) => a.evaluate(b)?.exp(),
            Node::Integral(f, var) => {
                let name = var.name();
                let upper = b.get(name).ok_or_else(|| EvalError::Unbound(name.to_string()))?;
                let lower = b.anchor(name);
                let mut inner = b.clone();
                quadrature(
                    |t| {
                        inner.set(name, t);
                        f.evaluate(&inner)
                    },
                    lower,
                    upper,
                    name,
                )?
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Value together with the sum of absolute values of top-level terms,
    /// used as the cancellation scale in zero tests.
    pub fn evaluate_with_scale(&self, b: &Bindings) -> Result<(f64, f64), EvalError> {
        match self.node() {
            Node::Add(ts) => {
                let mut value = 0.0;
                let mut scale = 0.0;
                for t in ts {
                    let v = t.evaluate(b)?;
                    value += v;
                    scale += v.abs();
                }
                Ok((value, scale))
            }
            _ => {
                let v = self.evaluate(b)?;
                Ok((v, v.abs()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Domain, Sign, Symbol};

    #[test]
    fn arithmetic() {
        let d = Domain::new([("x1", Sign::Positive), ("x2", Sign::Positive)], [("b", Sign::Positive)]).unwrap();
        let e = Expr::parse("b*x1*x2", &d).unwrap();
        let bind = d.bindings(&[2.0, 3.0], &[0.5]);
        assert_eq!(e.evaluate(&bind).unwrap(), 3.0);
        let l = Expr::parse("log(x1)", &d).unwrap();
        assert_eq!(l.evaluate(&d.bindings(&[1.0, 1.0], &[1.0])).unwrap(), 0.0);
    }

    #[test]
    fn integral_from_anchor_zero_matches_arctan() {
        let d = Domain::new([("v", Sign::Unrestricted)], []).unwrap();
        let e = Expr::integral(Expr::parse("1/(1+v^2)", &d).unwrap(), Symbol::variable("v")).unwrap();
        let got = e.evaluate(&d.bindings(&[1.0], &[])).unwrap();
        assert!((got - std::f64::consts::FRAC_PI_4).abs() < 1e-8, "{got}");
    }

    #[test]
    fn poles_and_branches() {
        let d = Domain::new([("x", Sign::Unrestricted)], []).unwrap();
        let inv = Expr::parse("1/x", &d).unwrap();
        assert_eq!(inv.evaluate(&d.bindings(&[0.0], &[])), Err(EvalError::Pole));
        let log = Expr::parse("log(x)", &d).unwrap();
        assert!(matches!(log.evaluate(&d.bindings(&[-1.0], &[])), Err(EvalError::OutOfDomain(_))));
        let cube = Expr::parse("x^(1/3)", &d).unwrap();
        assert!((cube.evaluate(&d.bindings(&[-8.0], &[])).unwrap() + 2.0).abs() < 1e-12);
        let unbound = Expr::var("y");
        assert_eq!(unbound.evaluate(&Bindings::new()), Err(EvalError::Unbound("y".into())));
    }
}
