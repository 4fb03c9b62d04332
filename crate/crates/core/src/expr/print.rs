use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::{Expr, Node, Rational};

// Loosest operator at the top of a printed fragment.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const NEG: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

struct Fragment {
    text: String,
    prec: u8,
}

impl Fragment {
    fn new(text: String, prec: u8) -> Self {
        Fragment { text, prec }
    }

    fn at_least(self, prec: u8) -> String {
        if self.prec >= prec {
            self.text
        } else {
            format!("({})", self.text)
        }
    }
}

fn rational(r: &Rational) -> Fragment {
    let body =
        if r.denom().is_one() { r.numer().abs().to_string() } else { format!("{}/{}", r.numer().abs(), r.denom()) };
    let prec = if r.denom().is_one() { ATOM } else { PRODUCT };
    if r.is_negative() {
        Fragment::new(format!("-{body}"), NEG)
    } else {
        Fragment::new(body, prec)
    }
}

fn exponent(q: &Rational) -> String {
    if q.denom().is_one() && !q.is_negative() {
        q.numer().to_string()
    } else if q.denom().is_one() {
        format!("({})", q.numer())
    } else {
        format!("({}/{})", q.numer(), q.denom())
    }
}

fn power(base: &Expr, q: &Rational) -> Fragment {
    Fragment::new(format!("{}^{}", render(base).at_least(ATOM), exponent(q)), POWER)
}

/// Product with sign pulled out; returns the unsigned body.
fn product_body(coef: &Rational, factors: &[Expr]) -> Fragment {
    let mut numer: Vec<Fragment> = Vec::new();
    let mut denom: Vec<String> = Vec::new();
    let c_num = coef.numer().abs();
    if c_num != BigInt::one() {
        numer.push(Fragment::new(c_num.to_string(), ATOM));
    }
    if !coef.denom().is_one() {
        denom.push(coef.denom().to_string());
    }
    for f in factors {
        match f.node() {
            Node::Pow(b, q) if q.is_negative() => {
                let q = -q;
                if q.is_one() {
                    denom.push(render(b).at_least(ATOM));
                } else {
                    denom.push(power(b, &q).text);
                }
            }
            _ => {
                let r = render(f);
                let prec = r.prec.max(POWER);
                numer.push(Fragment::new(r.at_least(POWER), prec));
            }
        }
    }
    if numer.len() == 1 && denom.is_empty() {
        return numer.pop().unwrap();
    }
    let mut text = if numer.is_empty() {
        "1".to_string()
    } else {
        numer.into_iter().map(|f| f.text).collect::<Vec<_>>().join("*")
    };
    if !denom.is_empty() {
        text.push('/');
        if denom.len() == 1 && !denom[0].contains(['*', '/']) {
            text.push_str(&denom[0]);
        } else {
            text.push_str(&format!("({})", denom.join("*")));
        }
    }
    Fragment::new(text, PRODUCT)
}

/// Splits a term into (is_negative, unsigned body).
fn signed_term(e: &Expr) -> (bool, Fragment) {
    match e.node() {
        Node::Num(r) => (r.is_negative(), rational(&r.abs())),
        Node::Mul(fs) => {
            let (coef, rest) = match fs[0].node() {
                Node::Num(c) => (c.clone(), &fs[1..]),
                _ => (Rational::one(), &fs[..]),
            };
            (coef.is_negative(), product_body(&coef, rest))
        }
        Node::Pow(_, q) if q.is_negative() => (false, product_body(&Rational::one(), std::slice::from_ref(e))),
        _ => (false, render(e)),
    }
}

fn render(e: &Expr) -> Fragment {
    match e.node() {
        Node::Num(r) => rational(r),
        Node::Sym(s) => Fragment::new(s.name().to_string(), ATOM),
        Node::Add(ts) => {
            let mut text = String::new();
            for (i, t) in ts.iter().enumerate() {
                let (neg, body) = signed_term(t);
                let body = body.at_least(PRODUCT);
                match (i, neg) {
                    (0, false) => text.push_str(&body),
                    (0, true) => {
                        text.push('-');
                        text.push_str(&body);
                    }
                    (_, false) => {
                        text.push('+');
                        text.push_str(&body);
                    }
                    (_, true) => {
                        text.push('-');
                        text.push_str(&body);
                    }
                }
            }
            Fragment::new(text, SUM)
        }
        Node::Mul(_) | Node::Pow(..) => {
            if let Node::Pow(b, q) = e.node() {
                if !q.is_negative() {
                    return power(b, q);
                }
            }
            let (neg, body) = signed_term(e);
            if neg {
                Fragment::new(format!("-{}", body.at_least(PRODUCT)), NEG)
            } else {
                body
            }
        }
        Node::Log(a) => Fragment::new(format!("log({})", render(a).text), ATOM),
        Node::Exp(a) => Fragment::new(format!("exp({})", render(a).text), ATOM),
        Node::Integral(a, v) => Fragment::new(format!("integral({},{})", render(a).text, v.name()), ATOM),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self).text)
    }
}
