//! Zero and nonvanishing tests: canonical form first, seeded sampling second.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Domain, Expr, Node};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { seed: 0, samples: 64, tolerance: 1e-9 }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        SamplerConfig { seed, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroOutcome {
    Zero,
    Nonzero,
    Nonvanishing,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Evidence {
    /// Decided from the canonical form alone.
    SymbolicCanonical,
    /// Decided from the factor structure and the domain's sign assumptions.
    Structural,
    Sampled {
        samples: usize,
        seed: u64,
        max_residual: f64,
        /// Variable values at the deciding (or worst) sample.
        witness: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroVerdict {
    pub outcome: ZeroOutcome,
    pub evidence: Evidence,
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        self.outcome == ZeroOutcome::Zero
    }

    pub fn is_nonvanishing(&self) -> bool {
        self.outcome == ZeroOutcome::Nonvanishing
    }

    fn symbolic(outcome: ZeroOutcome) -> Self {
        ZeroVerdict { outcome, evidence: Evidence::SymbolicCanonical }
    }
}

fn point_of(domain: &Domain, b: &super::Bindings) -> Vec<f64> {
    domain.variables().map(|s| b.get(s.name()).unwrap_or(f64::NAN)).collect()
}

/// Decides whether `e` vanishes identically on the domain.
///
/// A sample counts as zero when `|e| <= tol * (1 + scale)`, with `scale` the
/// sum of magnitudes of the top-level terms. Samples that hit a pole are
/// redrawn, up to 16 attempts per requested sample.
pub fn is_zero(e: &Expr, domain: &Domain, cfg: &SamplerConfig) -> ZeroVerdict {
    if e.is_zero() {
        return ZeroVerdict::symbolic(ZeroOutcome::Zero);
    }
    if e.is_constant() && !e.has_integral() {
        return ZeroVerdict::symbolic(ZeroOutcome::Nonzero);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut good = 0;
    let mut max_residual = 0.0f64;
    let mut worst = None;
    let mut attempts = 0;
    while good < cfg.samples && attempts < 16 * cfg.samples.max(1) {
        attempts += 1;
        let b = domain.sample(&mut rng);
        let Ok((value, scale)) = e.evaluate_with_scale(&b) else { continue };
        good += 1;
        let residual = value.abs() / (1.0 + scale);
        if residual > max_residual || worst.is_none() {
            max_residual = max_residual.max(residual);
            worst = Some(point_of(domain, &b));
        }
        if value.abs() > cfg.tolerance * (1.0 + scale) {
            return ZeroVerdict {
                outcome: ZeroOutcome::Nonzero,
                evidence: Evidence::Sampled { samples: good, seed: cfg.seed, max_residual, witness: worst },
            };
        }
    }
    let outcome = if good == cfg.samples { ZeroOutcome::Zero } else { ZeroOutcome::Undetermined };
    ZeroVerdict { outcome, evidence: Evidence::Sampled { samples: good, seed: cfg.seed, max_residual, witness: worst } }
}

/// Whether a factor can never vanish given the domain's sign assumptions.
fn structurally_nonvanishing(e: &Expr, domain: &Domain) -> bool {
    match e.node() {
        Node::Num(c) => !num_traits::Zero::is_zero(c),
        Node::Sym(s) => domain.sign(s.name()).is_some_and(|sign| sign.is_nonvanishing()),
        Node::Exp(_) => !e.has_integral(),
        Node::Pow(b, _) => structurally_nonvanishing(b, domain),
        Node::Mul(fs) => fs.iter().all(|f| structurally_nonvanishing(f, domain)),
        _ => false,
    }
}

/// Decides whether `e` is nonzero everywhere on the domain with one sign.
pub fn is_nonvanishing(e: &Expr, domain: &Domain, cfg: &SamplerConfig) -> ZeroVerdict {
    if let Some(c) = e.as_num() {
        let outcome = if num_traits::Zero::is_zero(c) { ZeroOutcome::Zero } else { ZeroOutcome::Nonvanishing };
        return ZeroVerdict::symbolic(outcome);
    }
    if structurally_nonvanishing(e, domain) {
        return ZeroVerdict { outcome: ZeroOutcome::Nonvanishing, evidence: Evidence::Structural };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut good = 0;
    let mut attempts = 0;
    let mut sign = 0.0f64;
    let mut min_magnitude = f64::INFINITY;
    let mut witness = None;
    let mut outcome = ZeroOutcome::Nonvanishing;
    while good < cfg.samples && attempts < 16 * cfg.samples.max(1) {
        attempts += 1;
        let b = domain.sample(&mut rng);
        let Ok(value) = e.evaluate(&b) else { continue };
        good += 1;
        if value.abs() < min_magnitude {
            min_magnitude = value.abs();
            witness = Some(point_of(domain, &b));
        }
        if value.abs() <= cfg.tolerance || (sign != 0.0 && value.signum() != sign) {
            witness = Some(point_of(domain, &b));
            outcome = ZeroOutcome::Undetermined;
            break;
        }
        sign = value.signum();
    }
    if good < cfg.samples && outcome == ZeroOutcome::Nonvanishing {
        outcome = ZeroOutcome::Undetermined;
    }
    ZeroVerdict {
        outcome,
        evidence: Evidence::Sampled { samples: good, seed: cfg.seed, max_residual: min_magnitude, witness },
    }
}
