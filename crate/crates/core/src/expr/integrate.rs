use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Domain, Expr, Node, Rational, Sign};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrateError {
    #[error("integrand depends on `{other}` besides the integration variable `{var}`")]
    Multivariate { var: String, other: String },
    #[error("`{0}` is not a declared variable")]
    UnknownVariable(String),
    #[error("cannot choose a logarithm branch for `{0}`: its sign is not fixed on the domain")]
    UnknownSign(String),
    #[error("no closed form for `{term}` in `{var}` and the term does not separate")]
    NonClosedForm { term: String, var: String },
}

const SIGN_SAMPLES: usize = 64;

impl Expr {
    /// Antiderivative of a univariate integrand with integration constant 0.
    ///
    /// Terms outside the integration table become unevaluated integrals, so
    /// the result is always differentiable back to `self`.
    pub fn integrate_univariate(&self, var: &str, domain: &Domain) -> Result<Expr, IntegrateError> {
        if let Some(other) = self.free_variables().into_iter().find(|s| s.name() != var) {
            return Err(IntegrateError::Multivariate { var: var.to_string(), other: other.name().to_string() });
        }
        self.antiderivative(var, domain)
    }

    /// Antiderivative in `var` treating every other symbol as a constant.
    ///
    /// Each term is split into a factor free of `var` and a factor in `var`
    /// alone; the latter goes through the table or becomes an unevaluated
    /// integral. A term that does not split that way is an error.
    pub fn antiderivative(&self, var: &str, domain: &Domain) -> Result<Expr, IntegrateError> {
        let sym = domain
            .lookup(var)
            .filter(|s| s.is_variable())
            .cloned()
            .ok_or_else(|| IntegrateError::UnknownVariable(var.to_string()))?;
        let v = Expr::symbol(sym.clone());
        let mut out = Vec::new();
        for term in self.terms() {
            if term.is_zero() {
                continue;
            }
            let (constant, local) = separate(&term, var);
            let local_other = local.free_variables().into_iter().any(|s| s.name() != var);
            let prim = match table(&local, &v, var, domain)? {
                Some(p) => p,
                None if !local_other => Expr::integral(local.clone(), sym.clone()).expect("univariate by construction"),
                None => return Err(IntegrateError::NonClosedForm { term: term.to_string(), var: var.to_string() }),
            };
            out.push(constant * prim);
        }
        Ok(Expr::add(out))
    }
}

/// Splits a term into (factor free of `var`, factor depending on `var`).
fn separate(term: &Expr, var: &str) -> (Expr, Expr) {
    let factors = match term.node() {
        Node::Mul(fs) => fs.clone(),
        _ => vec![term.clone()],
    };
    let mut constant = Vec::new();
    let mut local = Vec::new();
    for f in factors {
        if !f.depends_on(var) {
            constant.push(f);
            continue;
        }
        if let Node::Exp(arg) = f.node() {
            let (inside, outside): (Vec<Expr>, Vec<Expr>) = arg.terms().into_iter().partition(|t| t.depends_on(var));
            constant.push(Expr::exp(Expr::add(outside)));
            local.push(Expr::exp(Expr::add(inside)));
        } else {
            local.push(f);
        }
    }
    (Expr::mul(constant), Expr::mul(local))
}

/// Table lookup for a factor that depends on `var`. `None` when not covered.
fn table(g: &Expr, v: &Expr, var: &str, domain: &Domain) -> Result<Option<Expr>, IntegrateError> {
    if !g.depends_on(var) {
        return Ok(Some(g * v));
    }
    let linear_slope = |base: &Expr| -> Option<Expr> {
        let a = base.differentiate(var);
        (!a.is_zero() && !a.depends_on(var) && !base.has_integral()).then_some(a)
    };
    let out = match g.node() {
        Node::Sym(_) => Some(Expr::frac(1, 2) * Expr::powi(v.clone(), 2)),
        Node::Pow(base, q) => match linear_slope(base) {
            Some(a) if *q == -Rational::one() => Some(log_branch(base, var, domain)? / a),
            Some(a) => {
                let q1 = q + Rational::one();
                Some(Expr::pow(base.clone(), q1.clone()) / (Expr::num(q1) * a))
            }
            None => None,
        },
        Node::Exp(arg) => linear_slope(arg).map(|a| g / &a),
        Node::Log(arg) if arg == v => Some(v * g - v),
        _ => None,
    };
    Ok(out)
}

/// `log(u)` or `log(-u)` according to the sign of `u` on the domain.
fn log_branch(u: &Expr, var: &str, domain: &Domain) -> Result<Expr, IntegrateError> {
    let sign = match u.node() {
        Node::Sym(s) => domain.sign(s.name()).and_then(Sign::definite),
        _ => sampled_sign(u, domain),
    };
    match sign {
        Some(s) if s > 0.0 => Ok(Expr::log(u.clone())),
        Some(_) => Ok(Expr::log(-u)),
        None => Err(IntegrateError::UnknownSign(if matches!(u.node(), Node::Sym(_)) {
            u.to_string()
        } else {
            format!("{u} (in {var})")
        })),
    }
}

fn sampled_sign(u: &Expr, domain: &Domain) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut seen: Option<f64> = None;
    for _ in 0..SIGN_SAMPLES {
        let value = u.evaluate(&domain.sample(&mut rng)).ok()?;
        if value == 0.0 {
            return None;
        }
        let s = value.signum();
        if seen.is_some_and(|p| p != s) {
            return None;
        }
        seen = Some(s);
    }
    seen.filter(|s| !s.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> Domain {
        Domain::new(
            [("x1", Sign::Positive), ("x2", Sign::Negative), ("v", Sign::Unrestricted)],
            [("b", Sign::Positive)],
        )
        .unwrap()
    }

    fn p(s: &str) -> Expr {
        Expr::parse(s, &dom()).unwrap()
    }

    #[test]
    fn reciprocal_uses_domain_branch() {
        let d = dom();
        assert_eq!(p("1/x1").integrate_univariate("x1", &d).unwrap(), p("log(x1)"));
        assert_eq!(p("1/x2").integrate_univariate("x2", &d).unwrap(), p("log(-x2)"));
        assert_eq!(p("1/v").integrate_univariate("v", &d), Err(IntegrateError::UnknownSign("v".into())));
    }

    #[test]
    fn polynomial_and_zero() {
        let d = dom();
        assert_eq!(p("-x1").integrate_univariate("x1", &d).unwrap(), p("-x1^2/2"));
        assert!(p("0").integrate_univariate("v", &d).unwrap().is_zero());
        assert_eq!(p("3").integrate_univariate("v", &d).unwrap(), p("3*v"));
        assert_eq!(p("x1^(1/2)").integrate_univariate("x1", &d).unwrap(), p("2/3*x1^(3/2)"));
    }

    #[test]
    fn parameters_are_constants() {
        let d = dom();
        assert_eq!(p("1/(b*x1)").integrate_univariate("x1", &d).unwrap(), p("log(x1)/b"));
        assert_eq!(p("exp(2*b*v+1)").integrate_univariate("v", &d).unwrap(), p("exp(2*b*v+1)/(2*b)"));
    }

    #[test]
    fn rejects_multivariate() {
        assert!(matches!(p("x1*v").integrate_univariate("v", &dom()), Err(IntegrateError::Multivariate { .. })));
    }

    #[test]
    fn falls_back_to_unevaluated_integral() {
        let d = dom();
        let e = p("1/(1+v^2)");
        let i = e.integrate_univariate("v", &d).unwrap();
        assert!(i.has_integral());
        assert_eq!(i.differentiate("v"), e);
    }

    #[test]
    fn antiderivative_separates_other_variables() {
        let d = dom();
        let e = p("x2*exp(x1+x2)+x1*x2");
        let a = e.antiderivative("x1", &d).unwrap();
        assert_eq!(a.differentiate("x1"), e);
        assert_eq!(p("1/(x1+b)").antiderivative("x1", &d).unwrap(), p("log(x1+b)"));
        assert!(matches!(p("1/(x1+x2)").antiderivative("x1", &d), Err(IntegrateError::UnknownSign(_))));
        assert!(matches!(p("1/(1+x1*x2^2+x1^2)").antiderivative("x1", &d), Err(IntegrateError::NonClosedForm { .. })));
    }

    #[test]
    fn fundamental_theorem_on_table() {
        let d = dom();
        for s in ["x1^3-2*x1+5", "1/x1", "x1^(-2)", "exp(-x1)", "(2*x1+1)^(-1)", "(3*x1+1)^(1/2)", "log(x1)"] {
            let e = p(s);
            let a = e.integrate_univariate("x1", &d).unwrap();
            assert!(!a.has_integral(), "{s}");
            assert_eq!(a.differentiate("x1"), e, "{s} -> {a}");
        }
    }
}
