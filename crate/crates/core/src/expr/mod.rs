//! Symbolic expressions over exact rationals.
//!
//! Every [`Expr`] is kept in canonical form by its constructors: sums and
//! products are flattened and sorted, like terms and like bases are
//! collected, rational constants are folded, and products of sums are
//! expanded. Because all construction goes through [`Expr::add`],
//! [`Expr::mul`], [`Expr::pow`], [`Expr::log`] and [`Expr::exp`],
//! rebuilding a tree with [`Expr::simplify`] is idempotent.
//!
//! The canonical form is complete for Laurent polynomials with rational
//! exponents; for anything beyond that, identity testing falls back to
//! seeded sampling in [`zero`].

mod diff;
mod domain;
mod eval;
mod integrate;
mod parse;
mod print;
pub mod zero;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use domain::{Domain, DomainError, Sign};
pub use eval::{Bindings, EvalError};
pub use integrate::IntegrateError;
pub use parse::ParseError;
pub use zero::{is_nonvanishing, is_zero, Evidence, SamplerConfig, ZeroOutcome, ZeroVerdict};

/// Rational number with arbitrary-precision numerator and denominator.
pub type Rational = BigRational;

/// Whether a symbol is a coordinate of phase space or a fixed model parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Variable,
    Parameter,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    name: Arc<str>,
    kind: SymbolKind,
}

impl Symbol {
    pub fn variable(name: &str) -> Self {
        Symbol { name: Arc::from(name), kind: SymbolKind::Variable }
    }

    pub fn parameter(name: &str) -> Self {
        Symbol { name: Arc::from(name), kind: SymbolKind::Parameter }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn is_variable(&self) -> bool {
        self.kind == SymbolKind::Variable
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Node of an expression tree. Variant order defines the canonical term order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(Rational),
    Sym(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Rational),
    Log(Expr),
    Exp(Expr),
    /// Antiderivative of a univariate integrand, evaluated numerically.
    Integral(Expr, Symbol),
}

/// Immutable, cheaply clonable expression handle.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("integrand of an unevaluated integral in `{var}` also depends on `{other}`")]
    MultivariateIntegrand { var: String, other: String },
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

/// Exact integer power of a rational; `None` for 0 to a negative power.
fn rational_powi(base: &Rational, exp: &BigInt) -> Option<Rational> {
    if base.is_zero() && exp.is_negative() {
        return None;
    }
    let e = exp.abs().to_u32()?;
    let p = num_traits::pow(base.clone(), e as usize);
    Some(if exp.is_negative() { p.recip() } else { p })
}

/// Exact `k`-th root of a nonnegative integer, if it exists.
fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(k);
    (num_traits::pow(r.clone(), k as usize) == *n).then_some(r)
}

impl Expr {
    fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(r: Rational) -> Self {
        Expr::new(Node::Num(r))
    }

    pub fn int(n: i64) -> Self {
        Expr::num(rat(n))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Expr::num(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Self {
        Expr::int(0)
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    pub fn symbol(s: Symbol) -> Self {
        Expr::new(Node::Sym(s))
    }

    pub fn var(name: &str) -> Self {
        Expr::symbol(Symbol::variable(name))
    }

    pub fn param(name: &str) -> Self {
        Expr::symbol(Symbol::parameter(name))
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self.node() {
            Node::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(|r| r.is_one())
    }

    /// True when the expression contains no variables or parameters.
    pub fn is_constant(&self) -> bool {
        self.symbols().is_empty()
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().map(Expr::size).sum::<usize>()
    }

    fn children(&self) -> Box<dyn Iterator<Item = &Expr> + '_> {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => Box::new(std::iter::empty()),
            Node::Add(v) | Node::Mul(v) => Box::new(v.iter()),
            Node::Pow(b, _) => Box::new(std::iter::once(b)),
            Node::Log(a) | Node::Exp(a) | Node::Integral(a, _) => Box::new(std::iter::once(a)),
        }
    }

    /// Split `c * rest` into its rational coefficient and the remaining term.
    pub fn split_coefficient(&self) -> (Rational, Expr) {
        match self.node() {
            Node::Num(c) => (c.clone(), Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(c) => {
                    let rest = if fs.len() == 2 { fs[1].clone() } else { Expr::new(Node::Mul(fs[1..].to_vec())) };
                    (c.clone(), rest)
                }
                _ => (Rational::one(), self.clone()),
            },
            _ => (Rational::one(), self.clone()),
        }
    }

    /// Inverse of [`split_coefficient`](Self::split_coefficient) for a canonical coefficient-free term.
    fn with_coefficient(rest: Expr, c: Rational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if rest.is_one() {
            return Expr::num(c);
        }
        if c.is_one() {
            return rest;
        }
        let mut fs = vec![Expr::num(c)];
        match rest.node() {
            Node::Mul(rs) => fs.extend(rs.iter().cloned()),
            _ => fs.push(rest),
        }
        Expr::new(Node::Mul(fs))
    }

    /// Canonical sum.
    pub fn add<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = Rational::zero();
        let mut collected: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut stack: Vec<Expr> = terms.into_iter().collect();
        while let Some(t) = stack.pop() {
            match t.node() {
                Node::Num(c) => constant += c,
                Node::Add(ts) => stack.extend(ts.iter().cloned()),
                _ => {
                    let (c, rest) = t.split_coefficient();
                    *collected.entry(rest).or_insert_with(Rational::zero) += c;
                }
            }
        }
        let mut out: Vec<Expr> = collected
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(rest, c)| Expr::with_coefficient(rest, c))
            .collect();
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::new(Node::Add(out)),
        }
    }

    /// Canonical product; distributes over sums raised to positive integer powers.
    pub fn mul<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut coef = Rational::one();
        let mut exp_args: Vec<Expr> = Vec::new();
        let mut powers: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut stack: Vec<Expr> = factors.into_iter().collect();
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Num(c) => {
                    if c.is_zero() {
                        return Expr::zero();
                    }
                    coef *= c;
                }
                Node::Mul(fs) => stack.extend(fs.iter().cloned()),
                Node::Exp(a) => exp_args.push(a.clone()),
                Node::Pow(b, q) => collect_power(&mut coef, &mut powers, b.clone(), q.clone()),
                _ => collect_power(&mut coef, &mut powers, f.clone(), Rational::one()),
            }
        }

        let mut out: Vec<Expr> = Vec::new();
        let mut sums: Vec<Expr> = Vec::new();
        for (base, q) in powers {
            if q.is_zero() {
                continue;
            }
            if matches!(base.node(), Node::Add(_)) && is_integer(&q) && q.is_positive() {
                let k = q.to_integer().to_usize().unwrap_or(usize::MAX);
                sums.extend(std::iter::repeat_n(base, k));
                continue;
            }
            let p = Expr::pow(base, q);
            match p.node() {
                Node::Num(c) => coef *= c,
                Node::Add(_) => sums.push(p),
                Node::Mul(_) | Node::Exp(_) => stack.push(p),
                _ => out.push(p),
            }
        }
        if !stack.is_empty() {
            out.extend(stack);
            if !exp_args.is_empty() {
                out.push(Expr::exp(Expr::add(exp_args)));
            }
            return Expr::mul(out.into_iter().chain(sums).chain([Expr::num(coef)]));
        }
        if !exp_args.is_empty() {
            let e = Expr::exp(Expr::add(exp_args));
            match e.node() {
                Node::Exp(_) => out.push(e),
                _ => return Expr::mul(out.into_iter().chain(sums).chain([e, Expr::num(coef)])),
            }
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        out.sort();
        let head = match out.len() {
            0 => Expr::num(coef),
            1 if coef.is_one() => out.pop().unwrap(),
            _ => {
                let mut fs = Vec::with_capacity(out.len() + 1);
                if !coef.is_one() {
                    fs.push(Expr::num(coef));
                }
                fs.extend(out);
                Expr::new(Node::Mul(fs))
            }
        };
        if sums.is_empty() {
            head
        } else {
            distribute(head, &sums)
        }
    }

    /// Canonical power with a rational exponent.
    pub fn pow(base: Expr, q: Rational) -> Expr {
        if q.is_zero() {
            return Expr::one();
        }
        if q.is_one() {
            return base;
        }
        match base.node() {
            Node::Num(c) => {
                if is_integer(&q) {
                    if let Some(v) = rational_powi(c, &q.to_integer()) {
                        return Expr::num(v);
                    }
                } else if c.is_positive() {
                    if let Some(k) = q.denom().to_u32() {
                        if let (Some(n), Some(d)) = (exact_root(c.numer(), k), exact_root(c.denom(), k)) {
                            let root = Rational::new(n, d);
                            if let Some(v) = rational_powi(&root, q.numer()) {
                                return Expr::num(v);
                            }
                        }
                    }
                }
                Expr::new(Node::Pow(base.clone(), q))
            }
            Node::Pow(b, q2) if is_integer(&q) => Expr::pow(b.clone(), q2 * &q),
            Node::Mul(fs) if is_integer(&q) => Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), q.clone()))),
            Node::Exp(a) => Expr::exp(Expr::mul([Expr::num(q), a.clone()])),
            Node::Add(_) if is_integer(&q) => {
                let (c, p) = base.primitive_part();
                let cq = rational_powi(&c, &q.to_integer()).expect("content is nonzero");
                if q.is_positive() {
                    let k = q.to_integer().to_usize().unwrap_or(usize::MAX);
                    distribute(Expr::num(cq), &vec![p; k])
                } else {
                    Expr::with_coefficient(Expr::new(Node::Pow(p, q)), cq)
                }
            }
            _ => Expr::new(Node::Pow(base.clone(), q)),
        }
    }

    pub fn powi(base: Expr, n: i64) -> Expr {
        Expr::pow(base, rat(n))
    }

    pub fn recip(&self) -> Expr {
        Expr::powi(self.clone(), -1)
    }

    pub fn neg(&self) -> Expr {
        Expr::mul([Expr::int(-1), self.clone()])
    }

    pub fn sqrt(e: Expr) -> Expr {
        Expr::pow(e, Rational::new(BigInt::from(1), BigInt::from(2)))
    }

    pub fn log(arg: Expr) -> Expr {
        if arg.is_one() {
            return Expr::zero();
        }
        match arg.node() {
            Node::Exp(u) => u.clone(),
            _ => Expr::new(Node::Log(arg)),
        }
    }

    pub fn exp(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::one();
        }
        match arg.node() {
            Node::Log(u) => u.clone(),
            Node::Mul(fs) if fs.len() == 2 => match (fs[0].node(), fs[1].node()) {
                (Node::Num(c), Node::Log(u)) => Expr::pow(u.clone(), c.clone()),
                _ => Expr::new(Node::Exp(arg)),
            },
            _ => Expr::new(Node::Exp(arg)),
        }
    }

    /// Unevaluated antiderivative of a univariate integrand (constant of integration 0).
    pub fn integral(integrand: Expr, var: Symbol) -> Result<Expr, ExprError> {
        if let Some(other) = integrand.free_variables().into_iter().find(|v| *v != var) {
            return Err(ExprError::MultivariateIntegrand {
                var: var.name().to_string(),
                other: other.name().to_string(),
            });
        }
        if integrand.is_zero() {
            return Ok(Expr::zero());
        }
        Ok(Expr::new(Node::Integral(integrand, var)))
    }

    /// Writes `self` as `c * p` where `p` is a sum whose leading coefficient is 1.
    fn primitive_part(&self) -> (Rational, Expr) {
        match self.node() {
            Node::Add(ts) => {
                let lead = ts[0].split_coefficient().0;
                if lead.is_one() {
                    return (lead, self.clone());
                }
                let scaled = ts
                    .iter()
                    .map(|t| {
                        let (c, rest) = t.split_coefficient();
                        Expr::with_coefficient(rest, c / &lead)
                    })
                    .collect();
                (lead, Expr::new(Node::Add(scaled)))
            }
            _ => (Rational::one(), self.clone()),
        }
    }

    /// Rebuild the tree bottom-up through the canonical constructors.
    pub fn simplify(&self) -> Expr {
        self.map_children(|c| c.simplify())
    }

    fn map_children(&self, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => self.clone(),
            Node::Add(ts) => Expr::add(ts.iter().map(&mut f)),
            Node::Mul(fs) => Expr::mul(fs.iter().map(&mut f)),
            Node::Pow(b, q) => Expr::pow(f(b), q.clone()),
            Node::Log(a) => Expr::log(f(a)),
            Node::Exp(a) => Expr::exp(f(a)),
            Node::Integral(a, v) => {
                let g = f(a);
                Expr::integral(g.clone(), v.clone()).unwrap_or_else(|_| Expr::new(Node::Integral(g, v.clone())))
            }
        }
    }

    /// Replace symbols by expressions, re-canonicalizing on the way up.
    /// Integration variables of unevaluated integrals are left untouched.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Sym(s) => map.get(s.name()).cloned().unwrap_or_else(|| self.clone()),
            Node::Integral(..) => self.clone(),
            _ => self.map_children(|c| c.substitute(map)),
        }
    }

    /// All variables and parameters occurring in the expression.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self.node() {
            Node::Sym(s) => {
                out.insert(s.clone());
            }
            Node::Integral(a, v) => {
                out.insert(v.clone());
                a.collect_symbols(out);
            }
            _ => self.children().for_each(|c| c.collect_symbols(out)),
        }
    }

    /// Variables (not parameters) the canonical form depends on.
    pub fn free_variables(&self) -> BTreeSet<Symbol> {
        self.symbols().into_iter().filter(Symbol::is_variable).collect()
    }

    pub fn free_variable_names(&self) -> BTreeSet<String> {
        self.free_variables().into_iter().map(|s| s.name().to_string()).collect()
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Sym(s) => s.name() == name,
            Node::Integral(a, v) => v.name() == name || a.depends_on(name),
            _ => self.children().any(|c| c.depends_on(name)),
        }
    }

    /// Whether an unevaluated integral appears anywhere in the tree.
    pub fn has_integral(&self) -> bool {
        matches!(self.node(), Node::Integral(..)) || self.children().any(Expr::has_integral)
    }

    /// Terms of a sum, or the expression itself.
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            _ => vec![self.clone()],
        }
    }

    /// Factorization into a rational content and `base -> exponent` map.
    ///
    /// Sums appear as primitive bases (leading coefficient 1), so `-x - 1`
    /// and `x + 1` share the base `x + 1`. Exponentials are kept as single
    /// factors with exponent 1.
    pub fn factorize(&self) -> (Rational, BTreeMap<Expr, Rational>) {
        let mut coef = Rational::one();
        let mut map = BTreeMap::new();
        let factors = match self.node() {
            Node::Mul(fs) => fs.clone(),
            _ => vec![self.clone()],
        };
        for f in factors {
            match f.node() {
                Node::Num(c) => coef *= c,
                Node::Pow(b, q) => *map.entry(b.clone()).or_insert_with(Rational::zero) += q,
                Node::Add(_) => {
                    let (c, p) = f.primitive_part();
                    coef *= c;
                    *map.entry(p).or_insert_with(Rational::zero) += Rational::one();
                }
                _ => *map.entry(f.clone()).or_insert_with(Rational::zero) += Rational::one(),
            }
        }
        (coef, map)
    }

    /// Rebuilds `coef * prod(base^exp)` from a factorization.
    pub fn from_factors(coef: Rational, factors: &BTreeMap<Expr, Rational>) -> Expr {
        Expr::mul(std::iter::once(Expr::num(coef)).chain(factors.iter().map(|(b, q)| Expr::pow(b.clone(), q.clone()))))
    }

    /// Quotient that cancels shared factors before expanding.
    pub fn ratio(num: &Expr, den: &Expr) -> Expr {
        let (cn, mut fnum) = num.factorize();
        let (cd, fden) = den.factorize();
        for (b, q) in fden {
            *fnum.entry(b).or_insert_with(Rational::zero) -= q;
        }
        Expr::from_factors(cn / cd, &fnum)
    }
}

fn collect_power(coef: &mut Rational, powers: &mut BTreeMap<Expr, Rational>, base: Expr, q: Rational) {
    let base = if matches!(base.node(), Node::Add(_)) && is_integer(&q) {
        let (c, p) = base.primitive_part();
        *coef *= rational_powi(&c, &q.to_integer()).expect("content is nonzero");
        p
    } else {
        base
    };
    *powers.entry(base).or_insert_with(Rational::zero) += q;
}

/// Expands `head * s_1 * ... * s_k` where every `s_i` is a sum.
fn distribute(head: Expr, sums: &[Expr]) -> Expr {
    let mut acc = head.terms();
    for s in sums {
        let terms = s.terms();
        let mut next = Vec::with_capacity(acc.len() * terms.len());
        for a in &acc {
            for t in &terms {
                next.push(Expr::mul([a.clone(), t.clone()]));
            }
        }
        acc = Expr::add(next).terms();
    }
    Expr::add(acc)
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(r: Rational) -> Self {
        Expr::num(r)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add([a, b]));
binop!(Sub, sub, |a, b| Expr::add([a, b.neg()]));
binop!(Mul, mul, |a, b| Expr::mul([a, b]));
binop!(Div, div, |a, b| Expr::mul([a, b.recip()]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::var(&format!("x{i}"))
    }

    #[test]
    fn zero_summands_and_unit_factors_vanish() {
        assert_eq!(x(1) + Expr::zero() * x(2), x(1));
        assert_eq!(Expr::one() * x(1), x(1));
        assert_eq!(Expr::pow(x(1), Rational::one()), x(1));
    }

    #[test]
    fn commuted_products_cancel() {
        assert!((x(1) * x(2) - x(2) * x(1)).is_zero());
    }

    #[test]
    fn reciprocal_times_square() {
        assert_eq!(x(1).recip() * Expr::powi(x(1), 2), x(1));
    }

    #[test]
    fn proportional_sums_cancel_in_products() {
        let s = x(1) * x(2) + Expr::one();
        let q = s.neg() / s.clone();
        assert_eq!(q, Expr::int(-1));
        assert_eq!(Expr::ratio(&s.neg(), &s), Expr::int(-1));
    }

    #[test]
    fn squares_expand() {
        let s = Expr::powi(x(1) + x(2), 2);
        let expanded = Expr::powi(x(1), 2) + Expr::int(2) * x(1) * x(2) + Expr::powi(x(2), 2);
        assert_eq!(s, expanded);
    }

    #[test]
    fn exponentials_merge() {
        let e = Expr::exp(x(1)) * Expr::exp(x(2));
        assert_eq!(e, Expr::exp(x(1) + x(2)));
        assert!((Expr::exp(x(1)) * Expr::exp(x(1).neg()) - Expr::one()).is_zero());
        assert_eq!(Expr::exp(Expr::log(x(1))), x(1));
        assert_eq!(Expr::log(Expr::exp(x(1))), x(1));
    }

    #[test]
    fn exact_roots_fold() {
        assert_eq!(Expr::sqrt(Expr::int(4)), Expr::int(2));
        assert_eq!(Expr::pow(Expr::frac(8, 27), Rational::new(2.into(), 3.into())), Expr::frac(4, 9));
        assert!(matches!(Expr::sqrt(Expr::int(2)).node(), Node::Pow(..)));
    }

    #[test]
    fn free_variables_after_simplification() {
        assert!((x(1) - x(1)).free_variables().is_empty());
        let names = (x(2) / x(3)).free_variable_names();
        assert_eq!(names.into_iter().collect::<Vec<_>>(), vec!["x2", "x3"]);
        let b = Expr::param("b");
        assert_eq!((b * x(1)).free_variable_names().len(), 1);
    }

    #[test]
    fn integral_requires_univariate_integrand() {
        let v = Symbol::variable("x1");
        assert!(Expr::integral(x(1) * x(2), v.clone()).is_err());
        assert!(Expr::integral(Expr::param("b") * x(1), v).is_ok());
    }

    #[test]
    fn factorize_exposes_shared_bases() {
        let e = Expr::int(-3) * x(1) * Expr::powi(x(2), 2);
        let (c, f) = e.factorize();
        assert_eq!(c, rat(-3));
        assert_eq!(f.len(), 2);
        assert_eq!(Expr::from_factors(c, &f), e);
    }
}
