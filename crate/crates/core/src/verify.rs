//! Numeric falsification of reduction claims and conservation checks along trajectories.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::congruence::{DarbouxResult, Status};
use crate::expr::{Bindings, Domain, EvalError, Expr};
use crate::matrix::ExprMatrix;
use crate::poisson::{CanonicalTarget, StructureMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub samples: usize,
    /// Relative tolerance on every residual.
    pub tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 0, samples: 100, tolerance: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub identity: String,
    pub samples: usize,
    pub max_residual: f64,
    pub worst_point: Option<Vec<f64>>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub records: Vec<IdentityRecord>,
    pub passed: bool,
    pub seed: u64,
    pub tolerance: f64,
}

impl VerificationReport {
    pub fn record(&self, identity: &str) -> Option<&IdentityRecord> {
        self.records.iter().find(|r| r.identity == identity)
    }

    /// The first failing record, if any.
    pub fn failure(&self) -> Option<&IdentityRecord> {
        self.records.iter().find(|r| !r.passed)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("only {found} of {wanted} sample points could be evaluated")]
    SamplingExhausted { found: usize, wanted: usize },
    #[error("dimension mismatch: structure matrix is {n}x{n}, claim has {found}")]
    Dimension { n: usize, found: usize },
    #[error("nothing to verify for a failed reduction")]
    Failed,
}

/// The identities a reduction asserts, independent of how they were produced.
#[derive(Clone, Debug)]
pub struct Claim {
    pub k: ExprMatrix,
    pub target: CanonicalTarget,
    /// Scalar factor `g` in `K J K^T = g S`.
    pub g: Expr,
    /// Whether `K` is claimed to be a Jacobian matrix.
    pub jacobian: bool,
    pub y: Option<Vec<Expr>>,
    pub casimirs: Vec<Expr>,
}

impl Claim {
    pub fn from_result(r: &DarbouxResult) -> Option<Claim> {
        if r.status == Status::Failed {
            return None;
        }
        Some(Claim {
            k: r.k().clone(),
            target: r.target?,
            g: r.factor(),
            jacobian: r.status != Status::CongruenceOnly,
            y: r.y.clone(),
            casimirs: r.casimirs.clone(),
        })
    }
}

struct Tracker {
    identity: String,
    samples: usize,
    max_residual: f64,
    worst_point: Option<Vec<f64>>,
}

impl Tracker {
    fn new(identity: impl Into<String>) -> Self {
        Tracker { identity: identity.into(), samples: 0, max_residual: 0.0, worst_point: None }
    }

    fn observe(&mut self, residual: f64, point: &[f64]) {
        if self.worst_point.is_none() || residual > self.max_residual || !residual.is_finite() {
            self.max_residual = if residual.is_finite() { residual } else { f64::MAX };
            self.worst_point = Some(point.to_vec());
        }
    }

    fn finish(self, tolerance: f64) -> IdentityRecord {
        IdentityRecord {
            passed: self.max_residual <= tolerance,
            identity: self.identity,
            samples: self.samples,
            max_residual: self.max_residual,
            worst_point: self.worst_point,
        }
    }
}

fn point_of(domain: &Domain, b: &Bindings) -> Vec<f64> {
    domain.variables().map(|s| b.get(s.name()).unwrap_or(f64::NAN)).collect()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Everything evaluated at one point, or an error when the point hits a pole.
struct Evaluated {
    congruence: f64,
    jacobian: Vec<f64>,
    diffeo: Option<f64>,
    diffeo_fd: Option<f64>,
    casimirs: Vec<f64>,
}

struct Prepared<'a> {
    j: &'a StructureMatrix,
    claim: &'a Claim,
    vars: Vec<String>,
    s: DMatrix<f64>,
    /// `(dK_ij/dx_l, dK_il/dx_j)` for every row `i` and `j < l`.
    closure: Vec<(Expr, Expr)>,
    casimir_grads: Vec<Vec<Expr>>,
    y_grads: Option<Vec<Vec<Expr>>>,
}

impl Prepared<'_> {
    fn evaluate(&self, b: &Bindings) -> Result<Evaluated, EvalError> {
        let jm = self.j.entries().evaluate(b)?;
        let k = self.claim.k.evaluate(b)?;
        let g = self.claim.g.evaluate(b)?;
        let kjk = &k * &jm * k.transpose();
        let gs = &self.s * g;
        let congruence = max_abs(&(&kjk - &gs)) / (1.0 + max_abs(&gs).max(max_abs(&kjk)));

        let mut jacobian = Vec::with_capacity(self.closure.len());
        for (p, q) in &self.closure {
            let (pv, ps) = p.evaluate_with_scale(b)?;
            let (qv, qs) = q.evaluate_with_scale(b)?;
            jacobian.push((pv - qv).abs() / (1.0 + ps + qs));
        }

        let diffeo = match &self.y_grads {
            Some(g) => Some(self.diffeomorphism(g, &k, b)?),
            None => None,
        };
        let diffeo_fd = match &self.claim.y {
            Some(y) => Some(self.finite_difference(y, &k, b)?),
            None => None,
        };

        let mut casimirs = Vec::with_capacity(self.casimir_grads.len());
        for grad in &self.casimir_grads {
            let gv =
                DVector::from_iterator(grad.len(), grad.iter().map(|e| e.evaluate(b)).collect::<Result<Vec<_>, _>>()?);
            let r = &jm * &gv;
            let scale = jm.abs() * gv.abs();
            let worst = r.iter().zip(scale.iter()).fold(0.0f64, |a, (v, s)| a.max(v.abs() / (1.0 + s)));
            casimirs.push(worst);
        }
        Ok(Evaluated { congruence, jacobian, diffeo, diffeo_fd, casimirs })
    }

    /// Symbolic `dy_i/dx_j` evaluated against the evaluated `K`.
    fn diffeomorphism(&self, y_grads: &[Vec<Expr>], k: &DMatrix<f64>, b: &Bindings) -> Result<f64, EvalError> {
        let mut worst = 0.0f64;
        for (i, grad) in y_grads.iter().enumerate() {
            for (c, d) in grad.iter().enumerate() {
                let (v, scale) = d.evaluate_with_scale(b)?;
                worst = worst.max((v - k[(i, c)]).abs() / (1.0 + scale + k[(i, c)].abs()));
            }
        }
        Ok(worst)
    }

    /// Central differences of `y` against the evaluated `K`.
    fn finite_difference(&self, y: &[Expr], k: &DMatrix<f64>, b: &Bindings) -> Result<f64, EvalError> {
        let mut worst = 0.0f64;
        for (c, var) in self.vars.iter().enumerate() {
            let x = b.get(var).ok_or_else(|| EvalError::Unbound(var.clone()))?;
            let h = FD_STEP * (1.0 + x.abs());
            let (plus, minus) = (b.with(var, x + h), b.with(var, x - h));
            for (i, yi) in y.iter().enumerate() {
                let d = (yi.evaluate(&plus)? - yi.evaluate(&minus)?) / (2.0 * h);
                worst = worst.max((d - k[(i, c)]).abs() / (1.0 + k[(i, c)].abs()));
            }
        }
        Ok(worst)
    }
}

/// Relative step of the central-difference cross-check.
pub const FD_STEP: f64 = 1e-6;
/// Bound for the central-difference cross-check; roundoff alone
/// contributes about `eps |y| / h`, so it cannot share the symbolic tolerance.
pub const FD_TOLERANCE: f64 = 1e-5;

/// Samples every identity in `claim` at seeded interior points.
///
/// Identities: `K J K^T - g S`; closedness of the rows of `K` when it is
/// claimed Jacobian; `dy/dx - K` from symbolic derivatives when `y` is given, cross-checked
/// by central differences at the looser `FD_TOLERANCE`;
/// `J grad C` for every Casimir. Residuals are relative to the size of the
/// terms involved.
pub fn verify_reduction(
    j: &StructureMatrix,
    claim: &Claim,
    cfg: &VerifyConfig,
) -> Result<VerificationReport, VerifyError> {
    let n = j.dim();
    if claim.k.dim() != n || claim.target.n != n {
        return Err(VerifyError::Dimension { n, found: claim.k.dim() });
    }
    let domain = j.domain();
    let vars = domain.variable_names();
    let mut closure = Vec::new();
    if claim.jacobian {
        for i in 0..n {
            for c in 0..n {
                for l in c + 1..n {
                    closure
                        .push((claim.k.get(i, c).differentiate(&vars[l]), claim.k.get(i, l).differentiate(&vars[c])));
                }
            }
        }
    }
    let casimir_grads = claim.casimirs.iter().map(|c| c.gradient(&vars)).collect();
    let s = DMatrix::from_fn(n, n, |a, b| f64::from(claim.target.entry(a, b)));
    let y_grads = claim.y.as_ref().map(|y| y.iter().map(|e| e.gradient(&vars)).collect());
    let prepared = Prepared { j, claim, vars, s, closure, casimir_grads, y_grads };

    let mut congruence = Tracker::new("congruence");
    let mut jacobian = Tracker::new("jacobian-condition");
    let mut diffeo = Tracker::new("diffeomorphism");
    let mut diffeo_fd = Tracker::new("diffeomorphism-fd");
    let mut casimirs: Vec<Tracker> = (1..=claim.casimirs.len()).map(|i| Tracker::new(format!("casimir-{i}"))).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut good = 0;
    let mut attempts = 0;
    while good < cfg.samples && attempts < 16 * cfg.samples.max(1) {
        attempts += 1;
        let b = domain.sample(&mut rng);
        let Ok(ev) = prepared.evaluate(&b) else { continue };
        good += 1;
        let point = point_of(domain, &b);
        congruence.observe(ev.congruence, &point);
        congruence.samples += 1;
        if claim.jacobian {
            jacobian.observe(ev.jacobian.iter().copied().fold(0.0, f64::max), &point);
            jacobian.samples += 1;
        }
        if let Some(d) = ev.diffeo {
            diffeo.observe(d, &point);
            diffeo.samples += 1;
        }
        if let Some(d) = ev.diffeo_fd {
            diffeo_fd.observe(d, &point);
            diffeo_fd.samples += 1;
        }
        for (t, r) in casimirs.iter_mut().zip(&ev.casimirs) {
            t.observe(*r, &point);
            t.samples += 1;
        }
    }
    if good < cfg.samples {
        return Err(VerifyError::SamplingExhausted { found: good, wanted: cfg.samples });
    }
    let mut records = vec![congruence.finish(cfg.tolerance)];
    if claim.jacobian {
        records.push(jacobian.finish(cfg.tolerance));
    }
    if claim.y.is_some() {
        records.push(diffeo.finish(cfg.tolerance));
        records.push(diffeo_fd.finish(cfg.tolerance.max(FD_TOLERANCE)));
    }
    records.extend(casimirs.into_iter().map(|t| t.finish(cfg.tolerance)));
    let passed = records.iter().all(|r| r.passed);
    Ok(VerificationReport { records, passed, seed: cfg.seed, tolerance: cfg.tolerance })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub method: String,
    pub step: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub hamiltonian: Vec<f64>,
    /// `casimirs[k][s]`: value of Casimir `k` at step `s`.
    pub casimirs: Vec<Vec<f64>>,
    /// Why the run stopped before `t_end`, if it did.
    pub truncated: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulateError {
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("initial point has {found} components, expected {expected}")]
    Dimension { found: usize, expected: usize },
    #[error("initial point {0:?} is outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("cannot evaluate at the initial point: {0}")]
    Eval(#[from] EvalError),
}

/// Numeric right-hand side `J(x) grad H(x)` with fixed parameter values.
struct Vector<'a> {
    j: &'a StructureMatrix,
    grad: Vec<Expr>,
    params: &'a [f64],
}

impl Vector<'_> {
    fn bindings(&self, x: &[f64]) -> Bindings {
        self.j.domain().bindings(x, self.params)
    }

    fn eval(&self, x: &[f64]) -> Result<DVector<f64>, EvalError> {
        let b = self.bindings(x);
        let jm = self.j.entries().evaluate(&b)?;
        let g = self.grad.iter().map(|e| e.evaluate(&b)).collect::<Result<Vec<_>, _>>()?;
        Ok(jm * DVector::from_vec(g))
    }
}

fn rk4_step(f: &Vector<'_>, x: &DVector<f64>, h: f64) -> Result<DVector<f64>, EvalError> {
    let k1 = f.eval(x.as_slice())?;
    let k2 = f.eval((x + &k1 * (h / 2.0)).as_slice())?;
    let k3 = f.eval((x + &k2 * (h / 2.0)).as_slice())?;
    let k4 = f.eval((x + &k3 * h).as_slice())?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Classical fixed-step fourth-order Runge-Kutta integration of `x' = J grad H`.
///
/// `params` gives parameter values in declaration order. The run stops early,
/// flagging the trajectory, if the state leaves the domain or the vector
/// field cannot be evaluated.
pub fn simulate(
    j: &StructureMatrix,
    h: &Expr,
    casimirs: &[Expr],
    x0: &[f64],
    params: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, SimulateError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimulateError::BadStep(dt));
    }
    let domain = j.domain();
    if x0.len() != j.dim() {
        return Err(SimulateError::Dimension { found: x0.len(), expected: j.dim() });
    }
    if !domain.contains(x0) {
        return Err(SimulateError::OutsideDomain(x0.to_vec()));
    }
    let f = Vector { j, grad: h.gradient(&domain.variable_names()), params };
    f.eval(x0)?;
    let observe = |x: &[f64]| -> Result<(f64, Vec<f64>), EvalError> {
        let b = f.bindings(x);
        let hv = h.evaluate(&b)?;
        let cv = casimirs.iter().map(|c| c.evaluate(&b)).collect::<Result<Vec<_>, _>>()?;
        Ok((hv, cv))
    };
    let steps = (t_end / dt).round().max(0.0) as usize;
    let mut tr = Trajectory {
        method: "rk4".to_string(),
        step: dt,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        hamiltonian: Vec::with_capacity(steps + 1),
        casimirs: vec![Vec::with_capacity(steps + 1); casimirs.len()],
        truncated: None,
    };
    let push = |tr: &mut Trajectory, t: f64, x: &DVector<f64>| -> Result<(), EvalError> {
        let (hv, cv) = observe(x.as_slice())?;
        tr.times.push(t);
        tr.states.push(x.iter().copied().collect());
        tr.hamiltonian.push(hv);
        for (col, v) in tr.casimirs.iter_mut().zip(cv) {
            col.push(v);
        }
        Ok(())
    };
    let mut x = DVector::from_column_slice(x0);
    push(&mut tr, 0.0, &x)?;
    for s in 1..=steps {
        let t = s as f64 * dt;
        let next = match rk4_step(&f, &x, dt) {
            Ok(v) => v,
            Err(e) => {
                tr.truncated = Some(format!("vector field not defined at t = {t}: {e}"));
                break;
            }
        };
        if !domain.contains(next.as_slice()) || next.iter().any(|v| !v.is_finite()) {
            tr.truncated = Some(format!("state left the domain at t = {t}"));
            break;
        }
        x = next;
        if let Err(e) = push(&mut tr, t, &x) {
            tr.truncated = Some(format!("observables not defined at t = {t}: {e}"));
            break;
        }
    }
    Ok(tr)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    pub steps: usize,
    pub t_end: f64,
    pub hamiltonian_drift: f64,
    pub casimir_drifts: Vec<f64>,
    pub truncated: Option<String>,
}

fn drift(values: &[f64]) -> f64 {
    values.first().map_or(0.0, |v0| values.iter().fold(0.0, |a, v| a.max((v - v0).abs())))
}

/// Maximum deviation of `H` and each Casimir from its initial value.
pub fn conservation_report(tr: &Trajectory) -> ConservationReport {
    ConservationReport {
        steps: tr.times.len().saturating_sub(1),
        t_end: tr.times.last().copied().unwrap_or(0.0),
        hamiltonian_drift: drift(&tr.hamiltonian),
        casimir_drifts: tr.casimirs.iter().map(|c| drift(c)).collect(),
        truncated: tr.truncated.clone(),
    }
}
