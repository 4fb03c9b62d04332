//! Command-line front end. `run` parses arguments, executes one subcommand
//! and returns the process exit code.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::congruence::{reduce_functional, ReduceOptions, Status};
use crate::expr::{Expr, SamplerConfig};
use crate::io::{InputError, Problem, ProblemFile, ResultFile};
use crate::poisson::{check_jacobi, check_skew, generic_rank, Verdict};
use crate::verify::{
    conservation_report, simulate, verify_reduction, Claim, Trajectory, VerificationReport, VerifyConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONGRUENCE_ONLY: i32 = 3;
pub const EXIT_FAILED: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "darboux", version, about = "Darboux canonical forms of Poisson structure matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check skew-symmetry, the Jacobi identity and the generic rank.
    Check(CheckArgs),
    /// Report the generic rank and the canonical target.
    Rank(CheckArgs),
    /// Reduce to Darboux canonical form and write a result file.
    Reduce(ReduceArgs),
    /// Re-verify a result file against its problem file.
    Verify(VerifyArgs),
    /// Integrate the Hamiltonian flow with RK4 and report invariant drift.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    problem: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    problem: PathBuf,
    /// Look for a Jacobian congruence built from JETMs first (default).
    #[arg(long, conflicts_with = "any_congruence")]
    require_jacobian: bool,
    /// Skip the Jacobian stage and accept any congruence.
    #[arg(long)]
    any_congruence: bool,
    /// Allow a scalar factor g with K J K^T = g S (time reparametrization).
    #[arg(long)]
    allow_ntt: bool,
    /// Maximum number of elementary transforms (default 12 n^2).
    #[arg(long)]
    max_steps: Option<usize>,
    /// Pivot alternatives explored per prescaling option.
    #[arg(long, default_value_t = 64)]
    backtrack: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the result file here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    problem: PathBuf,
    result: PathBuf,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    problem: PathBuf,
    /// Initial point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x0: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Take the Casimirs to monitor from this result file instead of the problem.
    #[arg(long)]
    result: Option<PathBuf>,
    /// Write the trajectory CSV here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// A failure that ends the command with `code` after printing `message`.
struct Exit {
    code: i32,
    message: String,
}

impl From<InputError> for Exit {
    fn from(e: InputError) -> Self {
        Exit { code: EXIT_INPUT, message: format!("error: {e}") }
    }
}

fn input(message: impl Into<String>) -> Exit {
    Exit { code: EXIT_INPUT, message: format!("error: {}", message.into()) }
}

/// Runs the tool with `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_INPUT
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Check(a) => cmd_check(&a, out),
        Command::Rank(a) => cmd_rank(&a, out),
        Command::Reduce(a) => cmd_reduce(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", e.message);
            e.code
        }
    }
}

fn load_problem(path: &Path) -> Result<(ProblemFile, Problem), Exit> {
    let file = ProblemFile::load(path)?;
    let problem = file.problem()?;
    Ok((file, problem))
}

fn sampler(seed: u64) -> SamplerConfig {
    SamplerConfig { seed, ..SamplerConfig::default() }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Undetermined => "undetermined",
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Exit> {
    out.write_all(text.as_bytes()).map_err(|e| input(format!("cannot write output: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<(), Exit> {
    std::fs::write(path, text).map_err(|e| input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, Exit> {
    let (_, p) = load_problem(&a.problem)?;
    let cfg = sampler(a.seed);
    let j = &p.structure;
    let skew = check_skew(j, &cfg);
    let jacobi = check_jacobi(j, &cfg);
    let rank = generic_rank(j, &cfg);
    let mut s = String::new();
    writeln!(s, "dimension: {}", j.dim()).unwrap();
    writeln!(s, "skew-symmetry: {skew}").unwrap();
    writeln!(s, "jacobi: {jacobi}").unwrap();
    write!(s, "rank: {}", rank.rank).unwrap();
    if !rank.consistent {
        write!(s, " (drops at {:?})", rank.deficient_at.as_deref().unwrap_or(&[])).unwrap();
    }
    s.push('\n');
    for (i, c) in p.known_casimirs.iter().enumerate() {
        let report = crate::poisson::check_casimir(j, c, &cfg);
        writeln!(s, "casimir {}: {report}", i + 1).unwrap();
    }
    let ok = skew.passed() && jacobi.passed();
    writeln!(s, "result: {}", if ok { "pass" } else { "fail" }).unwrap();
    emit(out, &s)?;
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn cmd_rank(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, Exit> {
    let (_, p) = load_problem(&a.problem)?;
    let rank = generic_rank(&p.structure, &sampler(a.seed));
    let n = p.structure.dim();
    let mut s = format!("rank: {}\n", rank.rank);
    writeln!(s, "casimirs expected: {}", n - rank.rank).unwrap();
    writeln!(s, "target: S({n},{})", rank.rank).unwrap();
    writeln!(s, "constant rank on samples: {}", if rank.consistent { "yes" } else { "no" }).unwrap();
    if let Some(at) = &rank.deficient_at {
        writeln!(s, "rank drops at: {at:?}").unwrap();
    }
    emit(out, &s)?;
    Ok(EXIT_OK)
}

fn summary(r: &ResultFile) -> String {
    let mut s = format!("status: {}\n", r.status.as_str());
    if let Some(t) = r.target {
        writeln!(s, "target: S({},{})", t.n, t.r).unwrap();
    }
    if let Some(n) = &r.ntt {
        writeln!(
            s,
            "factor: g = {} (branch {:?}, reparametrization {})",
            n.g,
            n.branch,
            verdict_name(n.reparam.verdict)
        )
        .unwrap();
    }
    for (i, c) in r.casimirs.iter().enumerate() {
        writeln!(s, "casimir {}: {c}", i + 1).unwrap();
    }
    if let Some(v) = &r.verification {
        writeln!(s, "verification: {}", if v.passed { "pass" } else { "fail" }).unwrap();
    }
    for n in &r.notes {
        writeln!(s, "note: {n}").unwrap();
    }
    s
}

fn cmd_reduce(a: &ReduceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let (_, p) = load_problem(&a.problem)?;
    let opts = ReduceOptions {
        require_jacobian: !a.any_congruence,
        allow_ntt: a.allow_ntt,
        max_steps: a.max_steps,
        backtrack_budget: a.backtrack,
        cfg: sampler(a.seed),
    };
    let r = reduce_functional(&p.structure, &opts);
    let verification = match Claim::from_result(&r) {
        Some(claim) => Some(
            verify_reduction(&p.structure, &claim, &VerifyConfig { seed: a.seed, ..VerifyConfig::default() })
                .map_err(|e| Exit { code: EXIT_VERIFY_FAILED, message: format!("error: verification: {e}") })?,
        ),
        None => None,
    };
    let file = ResultFile::new(&r, &opts, verification);
    let json = file.to_json();
    let text = summary(&file);
    match &a.output {
        Some(path) => {
            write_file(path, &json)?;
            emit(out, &text)?;
        }
        None => {
            emit(out, &json)?;
            let _ = err.write_all(text.as_bytes());
        }
    }
    Ok(match (file.status, file.verification.as_ref().map(|v| v.passed)) {
        (_, Some(false)) => EXIT_VERIFY_FAILED,
        (Status::JacobianCongruence | Status::NttCongruence, _) => EXIT_OK,
        (Status::CongruenceOnly, _) => EXIT_CONGRUENCE_ONLY,
        (Status::Failed, _) => EXIT_FAILED,
    })
}

fn report_text(v: &VerificationReport) -> String {
    let mut s = String::new();
    for r in &v.records {
        write!(
            s,
            "{}: {} (max residual {:e} over {} samples)",
            r.identity,
            if r.passed { "pass" } else { "FAIL" },
            r.max_residual,
            r.samples
        )
        .unwrap();
        if !r.passed {
            if let Some(w) = &r.worst_point {
                write!(s, ", witness {w:?}").unwrap();
            }
        }
        s.push('\n');
    }
    writeln!(s, "result: {}", if v.passed { "pass" } else { "fail" }).unwrap();
    s
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, Exit> {
    let (_, p) = load_problem(&a.problem)?;
    let result = ResultFile::load(&a.result)?;
    let claim = result.claim(p.structure.domain())?;
    let cfg = VerifyConfig { seed: a.seed, samples: a.samples, tolerance: a.tolerance };
    let report = verify_reduction(&p.structure, &claim, &cfg)
        .map_err(|e| Exit { code: EXIT_VERIFY_FAILED, message: format!("error: {e}") })?;
    emit(out, &report_text(&report))?;
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn trajectory_csv(tr: &Trajectory, vars: &[String]) -> String {
    let mut s = String::from("t");
    for v in vars {
        write!(s, ",{v}").unwrap();
    }
    s.push_str(",H");
    for k in 1..=tr.casimirs.len() {
        write!(s, ",C{k}").unwrap();
    }
    s.push('\n');
    for (step, t) in tr.times.iter().enumerate() {
        write!(s, "{t}").unwrap();
        for v in &tr.states[step] {
            write!(s, ",{v}").unwrap();
        }
        write!(s, ",{}", tr.hamiltonian[step]).unwrap();
        for c in &tr.casimirs {
            write!(s, ",{}", c[step]).unwrap();
        }
        s.push('\n');
    }
    s
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Exit> {
    let (_, p) = load_problem(&a.problem)?;
    let j = &p.structure;
    let h = j.hamiltonian().ok_or_else(|| input("the problem has no hamiltonian"))?;
    let casimirs: Vec<Expr> = match &a.result {
        Some(path) => ResultFile::load(path)?.claim(j.domain())?.casimirs,
        None => p.known_casimirs.clone(),
    };
    if !(a.t_end >= 0.0 && a.t_end.is_finite()) {
        return Err(input(format!("t-end must be finite and non-negative, got {}", a.t_end)));
    }
    let tr = simulate(j, h, &casimirs, &a.x0, &p.parameter_values, a.t_end, a.dt).map_err(|e| input(e.to_string()))?;
    let csv = trajectory_csv(&tr, &j.domain().variable_names());
    let report = conservation_report(&tr);
    let mut s = format!("method: {} with step {}\n", tr.method, tr.step);
    writeln!(s, "steps: {} (t = {})", report.steps, report.t_end).unwrap();
    writeln!(s, "hamiltonian drift: {:e}", report.hamiltonian_drift).unwrap();
    for (i, d) in report.casimir_drifts.iter().enumerate() {
        writeln!(s, "casimir {} drift: {d:e}", i + 1).unwrap();
    }
    if let Some(t) = &report.truncated {
        writeln!(s, "truncated: {t}").unwrap();
    }
    match &a.output {
        Some(path) => {
            write_file(path, &csv)?;
            emit(out, &s)?;
        }
        None => {
            emit(out, &csv)?;
            let _ = err.write_all(s.as_bytes());
        }
    }
    Ok(EXIT_OK)
}
