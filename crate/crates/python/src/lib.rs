//! Python bindings: problems, reductions, verification and simulation.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use darboux::congruence::{reduce_constant, reduce_functional, RationalMatrix, ReduceOptions};
use darboux::expr::{Rational, SamplerConfig};
use darboux::fixtures;
use darboux::io::{Problem as CoreProblem, ProblemFile, ResultFile};
use darboux::poisson::{check_casimir, check_jacobi, check_skew, generic_rank, CheckReport};
use darboux::verify::{conservation_report, simulate, verify_reduction, VerifyConfig};

create_exception!(pydarboux, DarbouxError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    DarbouxError::new_err(e.to_string())
}

fn report<'py>(py: Python<'py>, r: &CheckReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("passed", r.passed())?;
    d.set_item("text", r.to_string())?;
    d.set_item("location", r.location.as_ref().map(|l| l.iter().map(|i| i + 1).collect::<Vec<_>>()))?;
    d.set_item("residual", r.residual.as_ref().map(|e| e.to_string()))?;
    Ok(d)
}

/// A structure matrix with its domain, Hamiltonian and known Casimirs.
#[pyclass(module = "pydarboux", frozen)]
struct Problem {
    file: ProblemFile,
}

impl Problem {
    fn core(&self) -> PyResult<CoreProblem> {
        self.file.problem().map_err(err)
    }
}

#[pymethods]
impl Problem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = ProblemFile::from_json(text).map_err(err)?;
        file.problem().map_err(err)?;
        Ok(Problem { file })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = ProblemFile::load(path).map_err(err)?;
        file.problem().map_err(err)?;
        Ok(Problem { file })
    }

    /// A shipped fixture by name, e.g. "kermack" or "toda3".
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        fixtures::catalog()
            .into_iter()
            .find(|(s, _)| *s == name)
            .map(|(_, file)| Problem { file })
            .ok_or_else(|| err(format!("unknown fixture {name}")))
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.file.variables.clone()
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<String>> {
        self.file.matrix.clone()
    }

    #[pyo3(signature = (seed = 0))]
    fn check<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let p = self.core()?;
        let cfg = SamplerConfig { seed, ..SamplerConfig::default() };
        let j = &p.structure;
        let d = PyDict::new(py);
        d.set_item("skew", report(py, &check_skew(j, &cfg))?)?;
        d.set_item("jacobi", report(py, &check_jacobi(j, &cfg))?)?;
        let rank = generic_rank(j, &cfg);
        d.set_item("rank", rank.rank)?;
        d.set_item("rank_consistent", rank.consistent)?;
        let casimirs =
            p.known_casimirs.iter().map(|c| report(py, &check_casimir(j, c, &cfg))).collect::<PyResult<Vec<_>>>()?;
        d.set_item("casimirs", casimirs)?;
        Ok(d)
    }

    #[pyo3(signature = (require_jacobian = true, allow_ntt = false, max_steps = None, backtrack = 64, seed = 0, verify = true))]
    fn reduce(
        &self,
        require_jacobian: bool,
        allow_ntt: bool,
        max_steps: Option<usize>,
        backtrack: usize,
        seed: u64,
        verify: bool,
    ) -> PyResult<Reduction> {
        let p = self.core()?;
        let opts = ReduceOptions {
            require_jacobian,
            allow_ntt,
            max_steps,
            backtrack_budget: backtrack,
            cfg: SamplerConfig { seed, ..SamplerConfig::default() },
        };
        let r = reduce_functional(&p.structure, &opts);
        let verification = match (verify, darboux::verify::Claim::from_result(&r)) {
            (true, Some(claim)) => Some(
                verify_reduction(&p.structure, &claim, &VerifyConfig { seed, ..VerifyConfig::default() })
                    .map_err(err)?,
            ),
            _ => None,
        };
        Ok(Reduction { file: ResultFile::new(&r, &opts, verification) })
    }

    /// Re-checks a reduction against this problem at seeded sample points.
    #[pyo3(signature = (result, samples = 100, tolerance = 1e-8, seed = 0))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        result: &Reduction,
        samples: usize,
        tolerance: f64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let p = self.core()?;
        let claim = result.file.claim(p.structure.domain()).map_err(err)?;
        let rep = verify_reduction(&p.structure, &claim, &VerifyConfig { seed, samples, tolerance }).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("passed", rep.passed)?;
        let records = PyDict::new(py);
        for r in &rep.records {
            let e = PyDict::new(py);
            e.set_item("passed", r.passed)?;
            e.set_item("max_residual", r.max_residual)?;
            e.set_item("worst_point", r.worst_point.clone())?;
            records.set_item(&r.identity, e)?;
        }
        d.set_item("identities", records)?;
        Ok(d)
    }

    /// RK4 trajectory of the Hamiltonian flow with invariant drifts.
    #[pyo3(signature = (x0, t_end = 10.0, dt = 1e-3, result = None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        x0: Vec<f64>,
        t_end: f64,
        dt: f64,
        result: Option<&Reduction>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let p = self.core()?;
        let j = &p.structure;
        let h = j.hamiltonian().ok_or_else(|| err("the problem has no hamiltonian"))?;
        let casimirs = match result {
            Some(r) => r.file.claim(j.domain()).map_err(err)?.casimirs,
            None => p.known_casimirs.clone(),
        };
        let tr = simulate(j, h, &casimirs, &x0, &p.parameter_values, t_end, dt).map_err(err)?;
        let rep = conservation_report(&tr);
        let d = PyDict::new(py);
        d.set_item("t", tr.times.clone())?;
        d.set_item("x", tr.states.clone())?;
        d.set_item("H", tr.hamiltonian.clone())?;
        d.set_item("C", tr.casimirs.clone())?;
        d.set_item("hamiltonian_drift", rep.hamiltonian_drift)?;
        d.set_item("casimir_drifts", rep.casimir_drifts)?;
        d.set_item("truncated", rep.truncated)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Problem({}, n={})", self.file.name.as_deref().unwrap_or("unnamed"), self.file.variables.len())
    }
}

/// Outcome of a reduction, serializable as a result file.
#[pyclass(module = "pydarboux", frozen)]
struct Reduction {
    file: ResultFile,
}

#[pymethods]
impl Reduction {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Reduction { file: ResultFile::from_json(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Reduction { file: ResultFile::load(path).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    #[getter]
    fn status(&self) -> &'static str {
        self.file.status.as_str()
    }

    /// `(n, r)` of the canonical target, if one was reached.
    #[getter]
    fn target(&self) -> Option<(usize, usize)> {
        self.file.target.map(|t| (t.n, t.r))
    }

    #[getter]
    fn k(&self) -> Vec<Vec<String>> {
        self.file.k.clone()
    }

    #[getter]
    fn y(&self) -> Option<Vec<String>> {
        self.file.y.clone()
    }

    #[getter]
    fn casimirs(&self) -> Vec<String> {
        self.file.casimirs.clone()
    }

    /// Scalar factor `g` of a time reparametrization, if any.
    #[getter]
    fn g(&self) -> Option<String> {
        self.file.ntt.as_ref().map(|n| n.g.clone())
    }

    #[getter]
    fn trace(&self) -> Vec<String> {
        self.file.trace.iter().map(|s| s.display.clone()).collect()
    }

    #[getter]
    fn notes(&self) -> Vec<String> {
        self.file.notes.clone()
    }

    #[getter]
    fn verified(&self) -> Option<bool> {
        self.file.verification.as_ref().map(|v| v.passed)
    }

    fn __repr__(&self) -> String {
        format!("Reduction(status={})", self.file.status.as_str())
    }
}

fn rational(s: &str) -> PyResult<Rational> {
    s.trim().parse::<Rational>().map_err(|_| err(format!("not a rational number: {s}")))
}

/// Exact reduction of a constant skew matrix given as rational strings.
/// Returns `(K, r)` with `K A K^T = S(n, r)`.
#[pyfunction]
fn reduce_constant_matrix(matrix: Vec<Vec<String>>) -> PyResult<(Vec<Vec<String>>, usize)> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return Err(err("matrix must be square"));
    }
    let mut a = RationalMatrix::zeros(n);
    for (i, row) in matrix.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            a.set(i, j, rational(s)?);
        }
    }
    let red = reduce_constant(&a).map_err(err)?;
    let k = (0..n).map(|i| (0..n).map(|j| red.k.get(i, j).to_string()).collect()).collect();
    Ok((k, red.target.r))
}

/// Names of the shipped fixtures.
#[pyfunction]
fn fixture_names() -> Vec<&'static str> {
    fixtures::catalog().into_iter().map(|(s, _)| s).collect()
}

#[pymodule]
fn pydarboux(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<Reduction>()?;
    m.add_function(wrap_pyfunction!(reduce_constant_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_names, m)?)?;
    m.add("DarbouxError", m.py().get_type::<DarbouxError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
