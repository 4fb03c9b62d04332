//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right-associative, binds tightest
//! atom   := INT | IDENT | IDENT '(' args ')' | '(' expr ')'
//! ```
//!
//! Functions: `log(e)`, `exp(e)`, `sqrt(e)` (`e^(1/2)`) and `integral(e, v)`
//! for an unevaluated antiderivative in variable `v`.

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{Domain, Expr, Node, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at position {pos}")]
    UnexpectedChar { ch: char, pos: usize },
    #[error("expected {expected} at position {pos}, found {found}")]
    Unexpected { expected: &'static str, found: String, pos: usize },
    #[error("undeclared identifier `{name}` at position {pos}")]
    UndeclaredIdentifier { name: String, pos: usize },
    #[error("unknown function `{name}` at position {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("exponent at position {pos} is not a rational constant")]
    NonRationalExponent { pos: usize },
    #[error("invalid integral at position {pos}: {reason}")]
    InvalidIntegral { reason: String, pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("number `{n}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].1.is_ascii_digit() {
                i += 1;
            }
            let digits: String = bytes[start..i].iter().map(|&(_, c)| c).collect();
            out.push((Tok::Int(digits.parse().expect("ascii digits")), pos));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].1.is_ascii_alphanumeric() || bytes[i].1 == '_') {
                i += 1;
            }
            let ident: String = bytes[start..i].iter().map(|&(_, c)| c).collect();
            out.push((Tok::Ident(ident), pos));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), pos));
            i += 1;
        } else {
            return Err(ParseError::UnexpectedChar { ch: c, pos });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    domain: &'a Domain,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, op: char, what: &'static str) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::Unexpected { expected: what, found: self.peek().describe(), pos: self.pos() })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    acc = acc + self.term()?;
                }
                Tok::Op('-') => {
                    self.bump();
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Op('/') => {
                    self.bump();
                    acc = acc / self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        let exponent = self.unary()?;
        match exponent.node() {
            Node::Num(q) => Ok(Expr::pow(base, q.clone())),
            _ => Err(ParseError::NonRationalExponent { pos }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(Expr::num(BigRational::from_integer(n))),
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') {
                    self.bump();
                    return self.call(&name, pos);
                }
                self.domain
                    .lookup(&name)
                    .map(|s| Expr::symbol(s.clone()))
                    .ok_or(ParseError::UndeclaredIdentifier { name, pos })
            }
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')', "`)`")?;
                Ok(e)
            }
            other => Err(ParseError::Unexpected { expected: "an operand", found: other.describe(), pos }),
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        let arg = self.expr()?;
        let out = match name {
            "log" => Expr::log(arg),
            "exp" => Expr::exp(arg),
            "sqrt" => Expr::sqrt(arg),
            "integral" => {
                self.expect(',', "`,`")?;
                let vpos = self.pos();
                let var = match self.bump() {
                    Tok::Ident(v) => v,
                    other => {
                        return Err(ParseError::Unexpected {
                            expected: "an integration variable",
                            found: other.describe(),
                            pos: vpos,
                        })
                    }
                };
                let sym = match self.domain.lookup(&var) {
                    Some(s) if s.is_variable() => s.clone(),
                    Some(_) => {
                        return Err(ParseError::InvalidIntegral {
                            reason: format!("`{var}` is a parameter"),
                            pos: vpos,
                        })
                    }
                    None => return Err(ParseError::UndeclaredIdentifier { name: var, pos: vpos }),
                };
                Expr::integral(arg, Symbol::clone(&sym))
                    .map_err(|e| ParseError::InvalidIntegral { reason: e.to_string(), pos })?
            }
            _ => return Err(ParseError::UnknownFunction { name: name.to_string(), pos }),
        };
        self.expect(')', "`)`")?;
        Ok(out)
    }
}

/// Parses `text` against the symbols declared in `domain`; the result is canonical.
pub fn parse(text: &str, domain: &Domain) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, at: 0, domain };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        other => Err(ParseError::Unexpected {
            expected: "an operator or end of input",
            found: other.describe(),
            pos: p.pos(),
        }),
    }
}

impl Expr {
    pub fn parse(text: &str, domain: &Domain) -> Result<Expr, ParseError> {
        parse(text, domain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Sign;

    fn dom() -> Domain {
        Domain::new(
            [("x1", Sign::Positive), ("x2", Sign::Positive), ("x3", Sign::Unrestricted)],
            [("b", Sign::Positive)],
        )
        .unwrap()
    }

    #[test]
    fn parses_kermack_entry() {
        let e = parse("b*x1*x2", &dom()).unwrap();
        assert_eq!(e, Expr::param("b") * Expr::var("x1") * Expr::var("x2"));
        assert_eq!(e.to_string(), "b*x1*x2");
    }

    #[test]
    fn zero_literal() {
        assert!(parse("0", &dom()).unwrap().is_zero());
    }

    #[test]
    fn half_squares() {
        let e = parse("x1^2/2 + x2^2/2", &dom()).unwrap();
        assert!(matches!(e.node(), Node::Add(ts) if ts.len() == 2));
        assert_eq!(e.to_string(), "x1^2/2+x2^2/2");
    }

    #[test]
    fn precedence_and_associativity() {
        let d = dom();
        assert_eq!(parse("2^3^2", &d).unwrap(), Expr::int(512));
        assert_eq!(parse("-x1^2", &d).unwrap(), Expr::powi(Expr::var("x1"), 2).neg());
        assert_eq!(parse("x1^-1", &d).unwrap(), Expr::var("x1").recip());
        assert_eq!(parse("1/2*x1", &d).unwrap(), Expr::frac(1, 2) * Expr::var("x1"));
        assert_eq!(parse("sqrt(x1)^2", &d).unwrap(), Expr::var("x1"));
    }

    #[test]
    fn errors_carry_positions() {
        let d = dom();
        assert_eq!(parse("x1 + y", &d), Err(ParseError::UndeclaredIdentifier { name: "y".into(), pos: 5 }));
        assert!(matches!(parse("x1 +", &d), Err(ParseError::Unexpected { pos: 4, .. })));
        assert!(matches!(parse("x1 $ 2", &d), Err(ParseError::UnexpectedChar { ch: '$', pos: 3 })));
        assert!(matches!(parse("x1^x2", &d), Err(ParseError::NonRationalExponent { pos: 3 })));
        assert!(matches!(parse("sin(x1)", &d), Err(ParseError::UnknownFunction { .. })));
        assert!(matches!(parse("integral(x1*x2, x1)", &d), Err(ParseError::InvalidIntegral { .. })));
    }

    #[test]
    fn print_parse_fixed_point() {
        let d = dom();
        for text in [
            "x1/(b*x2)",
            "-x1^2/2-x2^2/2",
            "exp(x1+2*x2)*x3",
            "1/(1+x1^2)",
            "x1^(1/2)-3/7*x2^(-2)",
            "log(x1)/b",
            "integral(1/(1+x3^2),x3)",
            "(-2)^(1/3)*x1",
            "2^(1/2)",
        ] {
            let e = parse(text, &d).unwrap();
            let again = parse(&e.to_string(), &d).unwrap();
            assert_eq!(e, again, "{text} -> {e}");
        }
    }
}
