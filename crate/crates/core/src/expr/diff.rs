use num_traits::One;

use super::{Expr, Node, Rational};

impl Expr {
    /// Exact partial derivative with respect to the variable `var`.
    ///
    /// An unevaluated integral in `v` differentiates to its integrand in `v`
    /// and to 0 in any other variable, since its integrand is univariate.
    pub fn differentiate(&self, var: &str) -> Expr {
        if !self.depends_on(var) {
            return Expr::zero();
        }
        match self.node() {
            Node::Num(_) => Expr::zero(),
            Node::Sym(s) => {
                if s.name() == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(ts) => Expr::add(ts.iter().map(|t| t.differentiate(var))),
            Node::Mul(fs) => Expr::add((0..fs.len()).filter(|&i| fs[i].depends_on(var)).map(|i| {
                Expr::mul(fs.iter().enumerate().map(|(j, f)| if i == j { f.differentiate(var) } else { f.clone() }))
            })),
            Node::Pow(b, q) => {
                Expr::mul([Expr::num(q.clone()), Expr::pow(b.clone(), q - Rational::one()), b.differentiate(var)])
            }
            Node::Log(a) => Expr::mul([a.differentiate(var), a.recip()]),
            Node::Exp(a) => Expr::mul([self.clone(), a.differentiate(var)]),
            Node::Integral(f, v) => {
                if v.name() == var {
                    f.clone()
                } else {
                    Expr::zero()
                }
            }
        }
    }

    /// Gradient with respect to the listed variables.
    pub fn gradient(&self, vars: &[String]) -> Vec<Expr> {
        vars.iter().map(|v| self.differentiate(v)).collect()
    }
}
