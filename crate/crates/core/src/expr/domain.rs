use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Bindings, Expr, Symbol};

/// Sign assumption on a variable or parameter; together they describe an open orthant-like box.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
    Nonzero,
    #[default]
    Unrestricted,
}

impl Sign {
    /// Whether a symbol with this assumption can never vanish.
    pub fn is_nonvanishing(self) -> bool {
        !matches!(self, Sign::Unrestricted)
    }

    /// `Some(+1 | -1)` when the sign is fixed.
    pub fn definite(self) -> Option<f64> {
        match self {
            Sign::Positive => Some(1.0),
            Sign::Negative => Some(-1.0),
            _ => None,
        }
    }

    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let magnitude = rng.random_range(SAMPLE_LO..SAMPLE_HI);
        match self {
            Sign::Positive => magnitude,
            Sign::Negative => -magnitude,
            Sign::Nonzero => {
                if rng.random_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                }
            }
            Sign::Unrestricted => rng.random_range(-SAMPLE_HI..SAMPLE_HI),
        }
    }

    /// Anchor for numeric quadrature of unevaluated integrals.
    fn anchor(self, value: f64) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
            Sign::Nonzero => value.signum(),
            Sign::Unrestricted => 0.0,
        }
    }

    /// A fixed interior point used as an extra deterministic probe.
    fn probe(self) -> f64 {
        match self {
            Sign::Positive | Sign::Nonzero => 1.0,
            Sign::Negative => -1.0,
            Sign::Unrestricted => 0.0,
        }
    }
}

const SAMPLE_LO: f64 = 0.25;
const SAMPLE_HI: f64 = 2.25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("symbol `{0}` declared more than once")]
    Duplicate(String),
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
}

/// Ordered phase-space variables and model parameters with sign assumptions.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    variables: Vec<(Symbol, Sign)>,
    parameters: Vec<(Symbol, Sign)>,
}

fn valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(name, "log" | "exp" | "sqrt" | "integral")
}

impl Domain {
    pub fn new<'a, V, P>(variables: V, parameters: P) -> Result<Self, DomainError>
    where
        V: IntoIterator<Item = (&'a str, Sign)>,
        P: IntoIterator<Item = (&'a str, Sign)>,
    {
        let mut seen = BTreeSet::new();
        let mut check = |name: &str| {
            if !valid_identifier(name) {
                return Err(DomainError::BadIdentifier(name.to_string()));
            }
            if !seen.insert(name.to_string()) {
                return Err(DomainError::Duplicate(name.to_string()));
            }
            Ok(())
        };
        let mut vars = Vec::new();
        for (name, sign) in variables {
            check(name)?;
            vars.push((Symbol::variable(name), sign));
        }
        let mut params = Vec::new();
        for (name, sign) in parameters {
            check(name)?;
            params.push((Symbol::parameter(name), sign));
        }
        Ok(Domain { variables: vars, parameters: params })
    }

    /// Variables `x1..xn` all with the same sign assumption.
    pub fn uniform(prefix: &str, n: usize, sign: Sign) -> Self {
        let names: Vec<String> = (1..=n).map(|i| format!("{prefix}{i}")).collect();
        Domain::new(names.iter().map(|s| (s.as_str(), sign)), []).expect("generated names are distinct")
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Symbol> {
        self.variables.iter().map(|(s, _)| s)
    }

    pub fn parameters(&self) -> impl Iterator<Item = (&Symbol, Sign)> {
        self.parameters.iter().map(|(s, sign)| (s, *sign))
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.variables().map(|s| s.name().to_string()).collect()
    }

    /// The `i`-th coordinate as an expression.
    pub fn variable(&self, i: usize) -> Expr {
        Expr::symbol(self.variables[i].0.clone())
    }

    pub fn variable_symbol(&self, i: usize) -> &Symbol {
        &self.variables[i].0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|(s, _)| s.name() == name)
    }

    pub fn lookup(&self, name: &str) -> Option<&Symbol> {
        self.variables.iter().chain(self.parameters.iter()).map(|(s, _)| s).find(|s| s.name() == name)
    }

    pub fn sign(&self, name: &str) -> Option<Sign> {
        self.variables.iter().chain(self.parameters.iter()).find(|(s, _)| s.name() == name).map(|(_, sign)| *sign)
    }

    /// Random interior point covering variables and parameters.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Bindings {
        let mut b = Bindings::new();
        for (s, sign) in &self.variables {
            let v = sign.sample(rng);
            b.set(s.name(), v);
            b.set_anchor(s.name(), sign.anchor(v));
        }
        for (s, sign) in &self.parameters {
            b.set(s.name(), sign.sample(rng));
        }
        b
    }

    /// Deterministic probe: 1 for positive/nonzero, -1 for negative, 0 for unrestricted.
    pub fn probe(&self) -> Bindings {
        let point: Vec<f64> = self.variables.iter().map(|(_, s)| s.probe()).collect();
        let params: Vec<f64> =
            self.parameters.iter().map(|(_, s)| if *s == Sign::Negative { -1.0 } else { 1.0 }).collect();
        self.bindings(&point, &params)
    }

    /// Bindings for an explicit point; `params` follows declaration order.
    pub fn bindings(&self, point: &[f64], params: &[f64]) -> Bindings {
        let mut b = Bindings::new();
        for ((s, sign), &v) in self.variables.iter().zip(point) {
            b.set(s.name(), v);
            b.set_anchor(s.name(), sign.anchor(v));
        }
        for ((s, _), &v) in self.parameters.iter().zip(params) {
            b.set(s.name(), v);
        }
        b
    }

    /// Whether a point satisfies every sign assumption.
    pub fn contains(&self, point: &[f64]) -> bool {
        self.variables.iter().zip(point).all(|((_, sign), &v)| match sign {
            Sign::Positive => v > 0.0,
            Sign::Negative => v < 0.0,
            Sign::Nonzero => v != 0.0,
            Sign::Unrestricted => v.is_finite(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_duplicates_and_keywords() {
        assert_eq!(
            Domain::new([("x", Sign::Positive)], [("x", Sign::Positive)]),
            Err(DomainError::Duplicate("x".into()))
        );
        assert!(Domain::new([("log", Sign::Positive)], []).is_err());
        assert!(Domain::new([("1x", Sign::Positive)], []).is_err());
    }

    #[test]
    fn samples_respect_signs() {
        let d =
            Domain::new([("a", Sign::Positive), ("b", Sign::Negative), ("c", Sign::Nonzero)], [("k", Sign::Positive)])
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let b = d.sample(&mut rng);
            let p = [b.get("a").unwrap(), b.get("b").unwrap(), b.get("c").unwrap()];
            assert!(d.contains(&p));
            assert!(b.get("k").unwrap() > 0.0);
        }
    }
}
