//! Search for a functional congruence reducing a structure matrix to Darboux form.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::constant::{reduce_constant, RationalMatrix};
use super::ntt::{branch_of, extract_scalar_factor, reparam_validity, Branch, ReparamBasis, ReparamReport};
use super::quadrature::{casimirs_from, integrate_jacobian};
use super::{is_jetm, jacobian_condition, jacobian_condition_rows, DarbouxResult, ElementaryTransform, NttFactor};
use super::{ReductionTrace, Status};
use crate::expr::{is_nonvanishing, is_zero, Domain, Expr, Node, Rational, SamplerConfig, Sign};
use crate::poisson::{
    check_casimir, check_jacobi, check_skew, generic_rank, CanonicalTarget, StructureMatrix, Verdict,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReduceOptions {
    /// Search for a Jacobian congruence built from JETMs before anything else.
    pub require_jacobian: bool,
    /// Allow a scalar factor `g` with `K J K^T = g S`.
    pub allow_ntt: bool,
    /// Maximum trace length; `None` means `12 n^2`.
    pub max_steps: Option<usize>,
    /// Pivot alternatives explored per prescaling option.
    pub backtrack_budget: usize,
    pub cfg: SamplerConfig,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions {
            require_jacobian: true,
            allow_ntt: false,
            max_steps: None,
            backtrack_budget: 64,
            cfg: SamplerConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// Only JETMs, target `S`.
    Jetm,
    /// Only JETMs, target `g S`.
    Ntt,
    /// Any nonvanishing ETM, target `S`.
    Any,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Variant {
    EliminateFirst,
    NormalizeFirst,
}

#[derive(Clone, Debug)]
enum Normalize {
    /// Scale to a known factor (1 outside NTT mode).
    To(Expr),
    /// Keep the pivot as the factor.
    AsIs,
    /// Absorb the separable part of the pivot, keep the rest as the factor.
    Remainder,
}

#[derive(Clone)]
struct State {
    trace: ReductionTrace,
    active: Vec<usize>,
    blocks: Vec<(usize, usize)>,
    g: Option<Expr>,
}

struct Search<'a> {
    j: &'a StructureMatrix,
    domain: &'a Domain,
    cfg: &'a SamplerConfig,
    mode: Mode,
    rank: usize,
    budget: usize,
    max_steps: usize,
    deepest: Option<(usize, ReductionTrace)>,
    exhausted: bool,
}

fn vanishes(e: &Expr, domain: &Domain, cfg: &SamplerConfig) -> bool {
    e.is_zero() || is_zero(e, domain, cfg).is_zero()
}

fn failed(trace: ReductionTrace, notes: Vec<String>) -> DarbouxResult {
    DarbouxResult { status: Status::Failed, target: None, trace, y: None, casimirs: Vec::new(), ntt: None, notes }
}

/// Reduces `J` to `S(n, r)` or `g S(n, r)` by elementary transformations.
///
/// Stages, each tried only if the previous one found nothing: a search
/// restricted to JETMs (when `require_jacobian`), the same search with a
/// scalar factor (when `allow_ntt`), and an unrestricted congruence. Budget
/// exhaustion is reported as a failed status, never as an error.
pub fn reduce_functional(j: &StructureMatrix, opts: &ReduceOptions) -> DarbouxResult {
    let cfg = &opts.cfg;
    let n = j.dim();
    let initial = ReductionTrace::new(j.entries().clone());
    let skew = check_skew(j, cfg);
    if !skew.passed() {
        return failed(initial, vec![format!("matrix is not skew-symmetric: {skew}")]);
    }
    let jacobi = check_jacobi(j, cfg);
    if !jacobi.passed() {
        return failed(initial, vec![format!("Jacobi identity: {jacobi}")]);
    }
    let rank = generic_rank(j, cfg);
    if !rank.consistent {
        let at = rank.deficient_at.map(|p| format!(" (deficient at {p:?})")).unwrap_or_default();
        return failed(initial, vec![format!("rank is not constant on the domain{at}")]);
    }
    if rank.rank % 2 == 1 {
        return failed(initial, vec![format!("numeric rank {} is odd", rank.rank)]);
    }

    if let Some(a) = RationalMatrix::from_expr(j.entries()) {
        return reduce_constant_structure(j, &a, cfg);
    }

    let max_steps = opts.max_steps.unwrap_or(12 * n * n);
    let mut stages = Vec::new();
    if opts.require_jacobian {
        stages.push(Mode::Jetm);
    }
    if opts.allow_ntt {
        stages.push(Mode::Ntt);
    }
    stages.push(Mode::Any);

    let mut notes = Vec::new();
    let mut deepest: Option<(usize, ReductionTrace)> = None;
    for mode in stages {
        for prescale in prescale_options(j, mode, cfg) {
            let mut search = Search {
                j,
                domain: j.domain(),
                cfg,
                mode,
                rank: rank.rank,
                budget: opts.backtrack_budget,
                max_steps,
                deepest: None,
                exhausted: false,
            };
            let mut trace = ReductionTrace::new(j.entries().clone());
            for t in prescale {
                trace.push(t, j.domain());
            }
            let state = State { trace, active: (0..n).collect(), blocks: Vec::new(), g: None };
            if let Some(result) = search.run(state) {
                return result;
            }
            if search.exhausted {
                notes.push(format!("{} search: backtrack budget exhausted", mode_name(mode)));
            }
            if let Some((depth, t)) = search.deepest {
                if deepest.as_ref().is_none_or(|(d, _)| depth > *d) {
                    deepest = Some((depth, t));
                }
            }
        }
        notes.push(format!("{} search found no reduction", mode_name(mode)));
    }
    let trace = deepest.map(|(_, t)| t).unwrap_or_else(|| ReductionTrace::new(j.entries().clone()));
    notes.push("failure does not imply that no reduction exists".to_string());
    failed(trace, notes)
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Jetm => "Jacobian",
        Mode::Ntt => "reparametrized",
        Mode::Any => "unrestricted",
    }
}

fn reduce_constant_structure(j: &StructureMatrix, a: &RationalMatrix, cfg: &SamplerConfig) -> DarbouxResult {
    let domain = j.domain();
    let mut trace = ReductionTrace::new(j.entries().clone());
    let red = match reduce_constant(a) {
        Ok(r) => r,
        Err(e) => return failed(trace, vec![e.to_string()]),
    };
    for t in red.steps {
        trace.push(t, domain);
    }
    let x: Vec<Expr> = (0..domain.dim()).map(|i| domain.variable(i)).collect();
    let y: Vec<Expr> =
        (0..a.dim()).map(|i| Expr::add((0..a.dim()).map(|c| Expr::num(red.k.get(i, c).clone()) * &x[c]))).collect();
    match casimirs_from(&y, red.target, j, cfg) {
        Ok(casimirs) => DarbouxResult {
            status: Status::JacobianCongruence,
            target: Some(red.target),
            trace,
            y: Some(y),
            casimirs,
            ntt: None,
            notes: vec!["constant matrix reduced in exact rational arithmetic".to_string()],
        },
        Err(e) => failed(trace, vec![e.to_string()]),
    }
}

/// Variables of `e`'s factors that depend only on `var` (or on nothing).
fn local_factor(e: &Expr, var: &str) -> (BTreeMap<Expr, Rational>, Expr) {
    let (_, map) = e.factorize();
    let mut bases = BTreeMap::new();
    let mut exp_arg = Expr::zero();
    for (base, q) in map {
        let f = Expr::pow(base.clone(), q.clone());
        if let Node::Exp(arg) = f.node() {
            let local = arg.terms().into_iter().filter(|t| {
                let vars = t.free_variable_names();
                vars.len() == 1 && vars.contains(var)
            });
            exp_arg = Expr::add(local);
            continue;
        }
        let vars = base.free_variable_names();
        if vars.len() == 1 && vars.contains(var) {
            bases.insert(base, q);
        }
    }
    (bases, exp_arg)
}

/// `Scale{i, 1/h_i}` where `h_i(x_i)` divides every off-diagonal entry of row `i`.
fn row_separable(j: &StructureMatrix, cfg: &SamplerConfig) -> Vec<ElementaryTransform> {
    let m = j.entries();
    let domain = j.domain();
    let mut out = Vec::new();
    for i in 0..m.dim() {
        let var = domain.variable_symbol(i).name().to_string();
        let parts: Vec<_> = (0..m.dim())
            .filter(|&c| c != i && !vanishes(m.get(i, c), domain, cfg))
            .map(|c| local_factor(m.get(i, c), &var))
            .collect();
        let Some((first, first_exp)) = parts.first() else { continue };
        let mut factors = Vec::new();
        for (base, q) in first {
            let exps: Option<Vec<&Rational>> = parts.iter().map(|(b, _)| b.get(base)).collect();
            let Some(exps) = exps else { continue };
            let same_sign = exps.iter().all(|e| e.numer().sign() == q.numer().sign());
            if !same_sign {
                continue;
            }
            let common = exps.into_iter().min_by_key(|e| num_traits::Signed::abs(*e)).expect("nonempty").clone();
            factors.push(Expr::pow(base.clone(), common));
        }
        if !first_exp.is_zero() && parts.iter().all(|(_, e)| e == first_exp) {
            factors.push(Expr::exp(first_exp.clone()));
        }
        let h = Expr::mul(factors);
        if !h.is_one() {
            out.push(ElementaryTransform::scale(i, h.recip()));
        }
    }
    out
}

fn prescale_options(j: &StructureMatrix, mode: Mode, cfg: &SamplerConfig) -> Vec<Vec<ElementaryTransform>> {
    let domain = j.domain();
    let mut options = vec![Vec::new(), row_separable(j, cfg)];
    if mode == Mode::Jetm {
        options.swap(0, 1);
    }
    if mode == Mode::Ntt {
        let usable = |i: usize| domain.sign(domain.variable_symbol(i).name()).is_some_and(Sign::is_nonvanishing);
        if (0..j.dim()).all(usable) {
            options.push((0..j.dim()).map(|i| ElementaryTransform::scale(i, domain.variable(i))).collect());
            options.push((0..j.dim()).map(|i| ElementaryTransform::scale(i, domain.variable(i).recip())).collect());
        }
    }
    let mut seen = BTreeSet::new();
    options.retain(|o| seen.insert(o.iter().map(ToString::to_string).collect::<Vec<_>>()));
    if mode == Mode::Any {
        options.truncate(1);
    }
    options
}

/// Splits `q` into a factor in `x_a` (with constants), a factor in `x_b`,
/// and whatever mixes variables.
fn split_factor(q: &Expr, va: &str, vb: &str) -> (Expr, Expr, Expr) {
    let (coef, map) = q.factorize();
    let (mut fa, mut fb, mut mixed) = (vec![Expr::num(coef)], Vec::new(), Vec::new());
    let class = |e: &Expr| {
        let vars = e.free_variable_names();
        if vars.iter().all(|v| v == va) {
            0
        } else if vars.iter().all(|v| v == vb) {
            1
        } else {
            2
        }
    };
    for (base, q) in map {
        let f = Expr::pow(base, q);
        if let Node::Exp(arg) = f.node() {
            let mut args = [Vec::new(), Vec::new(), Vec::new()];
            for t in arg.terms() {
                args[class(&t)].push(t);
            }
            let [a, b, m] = args;
            fa.push(Expr::exp(Expr::add(a)));
            fb.push(Expr::exp(Expr::add(b)));
            mixed.push(Expr::exp(Expr::add(m)));
            continue;
        }
        match class(&f) {
            0 => fa.push(f),
            1 => fb.push(f),
            _ => mixed.push(f),
        }
    }
    (Expr::mul(fa), Expr::mul(fb), Expr::mul(mixed))
}

impl Search<'_> {
    fn run(&mut self, state: State) -> Option<DarbouxResult> {
        let depth = state.blocks.len() * 1000 + state.trace.steps.len();
        if self.deepest.as_ref().is_none_or(|(d, _)| depth > *d) {
            self.deepest = Some((depth, state.trace.clone()));
        }
        let m = state.trace.current().clone();
        let mut candidates = Vec::new();
        for (x, &a) in state.active.iter().enumerate() {
            for &b in &state.active[x + 1..] {
                let e = m.get(a, b);
                if !vanishes(e, self.domain, self.cfg) {
                    candidates.push((a, b, e.clone()));
                }
            }
        }
        if candidates.is_empty() {
            return self.finish(state);
        }
        if 2 * state.blocks.len() >= self.rank {
            return None;
        }
        let class = |e: &Expr| match e.free_variable_names().len() {
            0 => 0,
            1 => 1,
            _ => 2,
        };
        candidates.sort_by_key(|(a, b, e)| (class(e), e.size(), *a, *b));
        candidates.retain(|(_, _, e)| is_nonvanishing(e, self.domain, self.cfg).is_nonvanishing());

        let variants: &[Variant] = match self.mode {
            Mode::Any => &[Variant::EliminateFirst],
            _ => &[Variant::EliminateFirst, Variant::NormalizeFirst],
        };
        for (a, b, _) in candidates {
            let targets = match (&self.mode, &state.g) {
                (Mode::Ntt, None) => vec![Normalize::AsIs, Normalize::Remainder],
                (Mode::Ntt, Some(g)) => vec![Normalize::To(g.clone())],
                _ => vec![Normalize::To(Expr::one())],
            };
            for &variant in variants {
                for target in &targets {
                    if self.budget == 0 {
                        self.exhausted = true;
                        return None;
                    }
                    self.budget -= 1;
                    let Some(next) = self.block(&state, a, b, variant, target) else { continue };
                    if let Some(result) = self.run(next) {
                        return Some(result);
                    }
                }
            }
        }
        None
    }

    fn admit(&self, trace: &mut ReductionTrace, t: ElementaryTransform) -> Option<()> {
        if self.mode != Mode::Any && !is_jetm(&t, self.domain).0 {
            return None;
        }
        if trace.steps.len() >= self.max_steps {
            return None;
        }
        trace.push(t, self.domain);
        Some(())
    }

    fn normalization(&self, pivot: &Expr, a: usize, b: usize, target: &Normalize) -> Option<(Expr, Expr, Expr)> {
        let (va, vb) = (self.domain.variable_symbol(a).name(), self.domain.variable_symbol(b).name());
        match (self.mode, target) {
            (Mode::Any, _) => Some((Expr::ratio(&Expr::one(), pivot), Expr::one(), Expr::one())),
            (_, Normalize::To(g)) => {
                let (fa, fb, mixed) = split_factor(&Expr::ratio(g, pivot), va, vb);
                mixed.is_one().then_some((fa, fb, g.clone()))
            }
            (_, Normalize::AsIs) => Some((Expr::one(), Expr::one(), pivot.clone())),
            (_, Normalize::Remainder) => {
                let (fa, fb, mixed) = split_factor(&Expr::ratio(&Expr::one(), pivot), va, vb);
                if mixed.is_one() || (fa.is_one() && fb.is_one()) {
                    return None;
                }
                Some((fa, fb, mixed.recip()))
            }
        }
    }

    fn eliminate(&self, trace: &mut ReductionTrace, others: &[usize], a: usize, b: usize) -> Option<()> {
        for &k in others {
            let m = trace.current();
            let u = m.get(a, k).clone();
            if !vanishes(&u, self.domain, self.cfg) {
                let xi = Expr::ratio(&-&u, m.get(a, b));
                self.admit(trace, ElementaryTransform::combine(k, xi, b))?;
            }
            let m = trace.current();
            let v = m.get(b, k).clone();
            if !vanishes(&v, self.domain, self.cfg) {
                let xi = Expr::ratio(&v, m.get(a, b));
                self.admit(trace, ElementaryTransform::combine(k, xi, a))?;
            }
        }
        Some(())
    }

    fn scale(&self, trace: &mut ReductionTrace, a: usize, b: usize, fa: &Expr, fb: &Expr) -> Option<()> {
        if !fa.is_one() {
            self.admit(trace, ElementaryTransform::scale(a, fa.clone()))?;
        }
        if !fb.is_one() {
            self.admit(trace, ElementaryTransform::scale(b, fb.clone()))?;
        }
        Some(())
    }

    fn block(&self, state: &State, a: usize, b: usize, variant: Variant, target: &Normalize) -> Option<State> {
        let pivot = state.trace.current().get(a, b).clone();
        let (fa, fb, g) = self.normalization(&pivot, a, b, target)?;
        let others: Vec<usize> = state.active.iter().copied().filter(|&k| k != a && k != b).collect();
        let mut trace = state.trace.clone();
        match variant {
            Variant::EliminateFirst => {
                self.eliminate(&mut trace, &others, a, b)?;
                self.scale(&mut trace, a, b, &fa, &fb)?;
            }
            Variant::NormalizeFirst => {
                self.scale(&mut trace, a, b, &fa, &fb)?;
                self.eliminate(&mut trace, &others, a, b)?;
            }
        }
        let m = trace.current();
        if !vanishes(&(m.get(a, b) - &g), self.domain, self.cfg) {
            return None;
        }
        if others
            .iter()
            .any(|&k| !vanishes(m.get(a, k), self.domain, self.cfg) || !vanishes(m.get(b, k), self.domain, self.cfg))
        {
            return None;
        }
        if !is_nonvanishing(&g, self.domain, self.cfg).is_nonvanishing() {
            return None;
        }
        if self.mode != Mode::Any && !jacobian_condition_rows(&trace.k, [a, b], self.domain, self.cfg).passed() {
            return None;
        }
        let (block, g) = match branch_of(&g, self.domain, self.cfg) {
            Branch::Positive => ((a, b), g),
            Branch::Negative => ((b, a), -g),
            Branch::Indefinite => return None,
        };
        let mut blocks = state.blocks.clone();
        blocks.push(block);
        let g = (self.mode == Mode::Ntt).then_some(g);
        Some(State { trace, active: others, blocks, g })
    }

    fn finish(&self, state: State) -> Option<DarbouxResult> {
        let State { mut trace, active: casimir_rows, blocks, g } = state;
        if 2 * blocks.len() != self.rank {
            return None;
        }
        if self.mode != Mode::Any
            && !casimir_rows.is_empty()
            && !jacobian_condition_rows(&trace.k, casimir_rows.iter().copied(), self.domain, self.cfg).passed()
        {
            return None;
        }
        let order: Vec<usize> = blocks.iter().flat_map(|&(a, b)| [a, b]).chain(casimir_rows).collect();
        let mut at: Vec<usize> = (0..order.len()).collect();
        for (pos, &row) in order.iter().enumerate() {
            let loc = at.iter().position(|&r| r == row).expect("row is tracked");
            if loc != pos {
                trace.push(ElementaryTransform::permute(pos, loc), self.domain);
                at.swap(pos, loc);
            }
        }
        let n = self.j.dim();
        let target = CanonicalTarget::new(n, self.rank).ok()?;
        let (factor, _) = extract_scalar_factor(trace.final_matrix(), target, self.domain, self.cfg).ok()?;
        let g = g.unwrap_or_else(Expr::one);
        if !vanishes(&(&factor - &g), self.domain, self.cfg) {
            return None;
        }
        let jacobian = jacobian_condition(&trace.k, self.domain, self.cfg).passed();
        let y = if jacobian { integrate_jacobian(&trace.k, self.domain, self.cfg).ok() } else { None };
        let casimirs = match &y {
            Some(y) => Some(casimirs_from(y, target, self.j, self.cfg).ok()?),
            None => None,
        };
        if self.mode != Mode::Any && casimirs.is_none() {
            return None;
        }
        let mut notes = Vec::new();
        let (status, ntt) = if g.is_one() {
            let status = if y.is_some() { Status::JacobianCongruence } else { Status::CongruenceOnly };
            (status, None)
        } else {
            let ntt = self.ntt_factor(&trace, target, g)?;
            notes.push(format!("time reparametrization d tau = ({}) dt", ntt.g));
            (Status::NttCongruence, Some(ntt))
        };
        if status == Status::CongruenceOnly {
            notes.push("congruence matrix is not a Jacobian matrix".to_string());
        }
        Some(DarbouxResult {
            status,
            target: Some(target),
            trace,
            y: if status == Status::CongruenceOnly { None } else { y },
            casimirs: casimirs.unwrap_or_default(),
            ntt,
            notes,
        })
    }

    fn ntt_factor(&self, trace: &ReductionTrace, target: CanonicalTarget, g: Expr) -> Option<NttFactor> {
        let branch = branch_of(&g, self.domain, self.cfg);
        let (reparam, g_darboux) = match RationalMatrix::from_expr(&trace.k).and_then(|k| k.inverse()) {
            Some(inv) => {
                let (ydomain, names) = darboux_domain(self.domain);
                let x = self.domain.variable_names();
                let map: BTreeMap<String, Expr> = (0..x.len())
                    .map(|i| {
                        let xi =
                            Expr::add((0..x.len()).map(|c| Expr::num(inv.get(i, c).clone()) * Expr::var(&names[c])));
                        (x[i].clone(), xi)
                    })
                    .collect();
                let gy = g.substitute(&map);
                let casimir: BTreeSet<String> = names[target.r..].iter().cloned().collect();
                (reparam_validity(&gy, target, &ydomain, &casimir, self.cfg), Some(gy))
            }
            None => (self.reparam_in_x(&g, target), None),
        };
        if reparam.verdict == Verdict::Fail {
            return None;
        }
        Some(NttFactor { g, g_darboux, branch, reparam })
    }

    /// Validity of `g S` when `g` is only known in the original coordinates.
    fn reparam_in_x(&self, g: &Expr, target: CanonicalTarget) -> ReparamReport {
        let pass = |basis| ReparamReport { verdict: Verdict::Pass, basis };
        if g.free_variable_names().is_empty() {
            pass(ReparamBasis::Constant)
        } else if check_casimir(self.j, g, self.cfg).passed() {
            pass(ReparamBasis::CasimirDependence)
        } else if target.r <= 2 {
            pass(ReparamBasis::RankAtMostTwo)
        } else if target.r == target.n && target.n >= 4 {
            ReparamReport { verdict: Verdict::Fail, basis: ReparamBasis::SymplecticNonConstant }
        } else {
            ReparamReport { verdict: Verdict::Undetermined, basis: ReparamBasis::DirectJacobi }
        }
    }
}

/// Domain over Darboux coordinates `y1..yn` (or `u1..un` on a name clash),
/// keeping the parameters of `domain`.
fn darboux_domain(domain: &Domain) -> (Domain, Vec<String>) {
    let n = domain.dim();
    let params: Vec<(String, Sign)> = domain.parameters().map(|(s, sign)| (s.name().to_string(), sign)).collect();
    for prefix in ["y", "u", "w"] {
        let names: Vec<String> = (1..=n).map(|i| format!("{prefix}{i}")).collect();
        if names.iter().any(|nm| params.iter().any(|(p, _)| p == nm)) {
            continue;
        }
        let d = Domain::new(
            names.iter().map(|s| (s.as_str(), Sign::Unrestricted)),
            params.iter().map(|(p, s)| (p.as_str(), *s)),
        );
        if let Ok(d) = d {
            return (d, names);
        }
    }
    let names: Vec<String> = (1..=n).map(|i| format!("darboux_y{i}")).collect();
    let d = Domain::new(
        names.iter().map(|s| (s.as_str(), Sign::Unrestricted)),
        params.iter().map(|(p, s)| (p.as_str(), *s)),
    )
    .expect("reserved names are distinct");
    (d, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ExprMatrix;

    fn structure(rows: &[&[&str]], domain: Domain) -> StructureMatrix {
        let m = ExprMatrix::from_rows(
            rows.iter().map(|r| r.iter().map(|s| Expr::parse(s, &domain).unwrap()).collect()).collect(),
        )
        .unwrap();
        StructureMatrix::new(m, domain, None).unwrap()
    }

    fn kermack() -> StructureMatrix {
        let d = Domain::new(
            [("x1", Sign::Positive), ("x2", Sign::Positive), ("x3", Sign::Positive)],
            [("b", Sign::Positive)],
        )
        .unwrap();
        structure(&[&["0", "b*x1*x2", "-b*x1*x2"], &["-b*x1*x2", "0", "b*x1*x2"], &["b*x1*x2", "-b*x1*x2", "0"]], d)
    }

    fn so3() -> StructureMatrix {
        structure(
            &[&["0", "-x3", "x2"], &["x3", "0", "-x1"], &["-x2", "x1", "0"]],
            Domain::uniform("x", 3, Sign::Positive),
        )
    }

    fn assert_reduces(j: &StructureMatrix, r: &DarbouxResult) {
        let cfg = SamplerConfig::default();
        let target = r.target.unwrap();
        let kjk = r.k().congruence_skew(j.entries()).unwrap();
        let gs = target.matrix().scale(&r.factor());
        for (i, c, e) in kjk.sub(&gs).unwrap().entries() {
            assert!(is_zero(e, j.domain(), &cfg).is_zero(), "entry ({i},{c}): {e}");
        }
        for (_, _, e) in r.trace.replay().sub(r.trace.final_matrix()).unwrap().entries() {
            assert!(is_zero(e, j.domain(), &cfg).is_zero());
        }
    }

    #[test]
    fn kermack_is_jacobian() {
        let j = kermack();
        let r = reduce_functional(&j, &ReduceOptions::default());
        assert_eq!(r.status, Status::JacobianCongruence, "{:?}", r.notes);
        assert_reduces(&j, &r);
        assert_eq!(r.casimirs.len(), 1);
        let c = &r.casimirs[0];
        let d = j.domain();
        let sum = Expr::parse("x1+x2+x3", d).unwrap();
        let cfg = SamplerConfig::default();
        assert!(is_zero(&(c - &sum), d, &cfg).is_zero() || is_zero(&(c + &sum), d, &cfg).is_zero(), "{c}");
    }

    #[test]
    fn so3_modes() {
        let j = so3();
        let r = reduce_functional(&j, &ReduceOptions::default());
        assert_eq!(r.status, Status::CongruenceOnly, "{:?}", r.notes);
        assert_reduces(&j, &r);
        assert!(r.y.is_none());

        let opts = ReduceOptions { allow_ntt: true, ..ReduceOptions::default() };
        let r = reduce_functional(&j, &opts);
        assert_eq!(r.status, Status::NttCongruence, "{:?}", r.notes);
        assert_reduces(&j, &r);
        let ntt = r.ntt.as_ref().unwrap();
        assert_eq!(ntt.reparam.basis, ReparamBasis::RankAtMostTwo);
        assert_eq!(ntt.branch, Branch::Positive);
        let sphere = Expr::parse("(x1^2+x2^2+x3^2)/2", j.domain()).unwrap();
        let c = &r.casimirs[0];
        let grad_ratio: Vec<Expr> = j
            .domain()
            .variable_names()
            .iter()
            .map(|v| Expr::ratio(&c.differentiate(v), &sphere.differentiate(v)))
            .collect();
        assert!(grad_ratio.windows(2).all(|w| w[0] == w[1]), "{c}");
    }

    #[test]
    fn non_jacobi_input_fails_early() {
        let j = structure(
            &[&["0", "1", "x1"], &["-1", "0", "0"], &["-x1", "0", "0"]],
            Domain::uniform("x", 3, Sign::Positive),
        );
        let r = reduce_functional(&j, &ReduceOptions::default());
        assert_eq!(r.status, Status::Failed);
        assert!(r.notes[0].contains("Jacobi"));
        assert!(r.trace.steps.is_empty());
    }

    #[test]
    fn constant_input_uses_exact_route() {
        let j = structure(&[&["0", "2"], &["-2", "0"]], Domain::uniform("x", 2, Sign::Unrestricted));
        let r = reduce_functional(&j, &ReduceOptions::default());
        assert_eq!(r.status, Status::JacobianCongruence);
        assert_eq!(r.y.unwrap()[0], Expr::parse("x1/2", j.domain()).unwrap());
    }

    #[test]
    fn tiny_budget_is_reported() {
        let opts = ReduceOptions { backtrack_budget: 0, ..ReduceOptions::default() };
        let r = reduce_functional(&so3(), &opts);
        assert_eq!(r.status, Status::Failed);
        assert!(r.notes.iter().any(|n| n.contains("budget")));
    }
}
