//! Problem and result files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::congruence::{Branch, DarbouxResult, ElementaryTransform, ReduceOptions, ReparamReport, Status};
use crate::expr::{Domain, DomainError, Expr, ParseError, Sign};
use crate::matrix::{ExprMatrix, MatrixError};
use crate::poisson::{CanonicalTarget, PoissonError, StructureMatrix};
use crate::verify::{Claim, VerificationReport};

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("domain assumption for `{0}`, which is not a declared variable")]
    UnknownDomainVariable(String),
    #[error("{location}: {source}")]
    Parse { location: String, source: ParseError },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Poisson(#[from] PoissonError),
    #[error("parameter values given for {given} of {expected} parameters")]
    ParameterValues { given: usize, expected: usize },
    #[error("result file: {0}")]
    Result(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub name: String,
    #[serde(default)]
    pub sign: Sign,
    /// Value used for simulation; sampling for checks ignores it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

/// Structure matrix, domain and optional Hamiltonian as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub variables: Vec<String>,
    /// Sign assumption per variable; missing variables are unrestricted.
    #[serde(default)]
    pub domain: BTreeMap<String, Sign>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parameters: Vec<ParameterSpec>,
    pub matrix: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub known_casimirs: Vec<String>,
}

/// A parsed problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub structure: StructureMatrix,
    pub known_casimirs: Vec<Expr>,
    /// Parameter values in declaration order (1 where unspecified).
    pub parameter_values: Vec<f64>,
}

fn parse_at(text: &str, domain: &Domain, location: impl FnOnce() -> String) -> Result<Expr, InputError> {
    Expr::parse(text, domain).map_err(|source| InputError::Parse { location: location(), source })
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Io { path: path.display().to_string(), source })
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, InputError> {
        let p: ProblemFile = serde_json::from_str(text)?;
        if p.format_version != FORMAT_VERSION {
            return Err(InputError::Version { found: p.format_version });
        }
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InputError> {
        Self::from_json(&read(path.as_ref())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files always serialize")
    }

    pub fn domain(&self) -> Result<Domain, InputError> {
        if let Some(v) = self.domain.keys().find(|k| !self.variables.contains(k)) {
            return Err(InputError::UnknownDomainVariable(v.clone()));
        }
        let vars = self.variables.iter().map(|v| (v.as_str(), self.domain.get(v).copied().unwrap_or_default()));
        let params = self.parameters.iter().map(|p| (p.name.as_str(), p.sign));
        Ok(Domain::new(vars, params)?)
    }

    pub fn problem(&self) -> Result<Problem, InputError> {
        let domain = self.domain()?;
        let mut rows = Vec::with_capacity(self.matrix.len());
        for (i, row) in self.matrix.iter().enumerate() {
            let parsed = row
                .iter()
                .enumerate()
                .map(|(j, s)| parse_at(s, &domain, || format!("matrix entry ({},{})", i + 1, j + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(parsed);
        }
        let m = ExprMatrix::from_rows(rows)?;
        let hamiltonian =
            self.hamiltonian.as_deref().map(|h| parse_at(h, &domain, || "hamiltonian".to_string())).transpose()?;
        let known_casimirs = self
            .known_casimirs
            .iter()
            .enumerate()
            .map(|(k, c)| parse_at(c, &domain, || format!("known_casimirs[{}]", k + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let parameter_values = self.parameters.iter().map(|p| p.value.unwrap_or(1.0)).collect();
        let structure = StructureMatrix::new(m, domain, hamiltonian)?;
        Ok(Problem { structure, known_casimirs, parameter_values })
    }
}

/// One trace step with 1-based indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub kind: String,
    pub i: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<String>,
    pub display: String,
    pub is_jetm: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restriction: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NttRecord {
    pub g: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_darboux: Option<String>,
    pub branch: Branch,
    pub reparam: ReparamReport,
    /// `d tau = g dt`.
    pub reparametrization: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub options: ReduceOptions,
    pub status: Status,
    pub target: Option<CanonicalTarget>,
    pub k: Vec<Vec<String>>,
    pub y: Option<Vec<String>>,
    pub casimirs: Vec<String>,
    pub ntt: Option<NttRecord>,
    pub trace: Vec<StepRecord>,
    pub notes: Vec<String>,
    pub verification: Option<VerificationReport>,
}

fn step_record(t: &ElementaryTransform, is_jetm: bool, restriction: Option<String>) -> StepRecord {
    let (i, j, xi) = match t {
        ElementaryTransform::Permute { i, j } => (*i, Some(*j), None),
        ElementaryTransform::Scale { i, xi } => (*i, None, Some(xi)),
        ElementaryTransform::Combine { i, xi, j } => (*i, Some(*j), Some(xi)),
    };
    StepRecord {
        kind: t.kind().to_string(),
        i: i + 1,
        j: j.map(|j| j + 1),
        xi: xi.map(Expr::to_string),
        display: t.to_string(),
        is_jetm,
        restriction,
    }
}

fn strings(es: &[Expr]) -> Vec<String> {
    es.iter().map(Expr::to_string).collect()
}

impl ResultFile {
    pub fn new(r: &DarbouxResult, options: &ReduceOptions, verification: Option<VerificationReport>) -> Self {
        ResultFile {
            format_version: FORMAT_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            seed: options.cfg.seed,
            options: options.clone(),
            status: r.status,
            target: r.target,
            k: r.k().to_strings(),
            y: r.y.as_deref().map(strings),
            casimirs: strings(&r.casimirs),
            ntt: r.ntt.as_ref().map(|n| NttRecord {
                g: n.g.to_string(),
                g_darboux: n.g_darboux.as_ref().map(Expr::to_string),
                branch: n.branch,
                reparam: n.reparam.clone(),
                reparametrization: format!("d tau = ({}) dt", n.g),
            }),
            trace: r.trace.steps.iter().map(|s| step_record(&s.transform, s.is_jetm, s.restriction.clone())).collect(),
            notes: r.notes.clone(),
            verification,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, InputError> {
        let r: ResultFile = serde_json::from_str(text)?;
        if r.format_version != FORMAT_VERSION {
            return Err(InputError::Version { found: r.format_version });
        }
        Ok(r)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InputError> {
        Self::from_json(&read(path.as_ref())?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result files always serialize");
        s.push('\n');
        s
    }

    /// Rebuilds the claimed identities from the file alone.
    pub fn claim(&self, domain: &Domain) -> Result<Claim, InputError> {
        if self.status == Status::Failed {
            return Err(InputError::Result("status is failed; nothing to verify".to_string()));
        }
        let target = self.target.ok_or_else(|| InputError::Result("missing target".to_string()))?;
        let rows = self
            .k
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, s)| parse_at(s, domain, || format!("K entry ({},{})", i + 1, j + 1)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let k = ExprMatrix::from_rows(rows)?;
        let list = |xs: &[String], what: &str| {
            xs.iter()
                .enumerate()
                .map(|(i, s)| parse_at(s, domain, || format!("{what}[{}]", i + 1)))
                .collect::<Result<Vec<_>, _>>()
        };
        let y = self.y.as_deref().map(|y| list(y, "y")).transpose()?;
        let casimirs = list(&self.casimirs, "casimirs")?;
        let g = match &self.ntt {
            Some(n) => parse_at(&n.g, domain, || "ntt.g".to_string())?,
            None => Expr::one(),
        };
        Ok(Claim { k, target, g, jacobian: self.status != Status::CongruenceOnly, y, casimirs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KERMACK: &str = r#"{
        "format_version": 1,
        "variables": ["x1", "x2", "x3"],
        "domain": {"x1": "positive", "x2": "positive", "x3": "positive"},
        "parameters": [{"name": "b", "sign": "positive", "value": 0.5}],
        "matrix": [["0", "b*x1*x2", "-b*x1*x2"], ["-b*x1*x2", "0", "b*x1*x2"], ["b*x1*x2", "-b*x1*x2", "0"]],
        "known_casimirs": ["x1+x2+x3"]
    }"#;

    #[test]
    fn problem_roundtrip() {
        let p = ProblemFile::from_json(KERMACK).unwrap();
        let back = ProblemFile::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
        let prob = p.problem().unwrap();
        assert_eq!(prob.structure.dim(), 3);
        assert_eq!(prob.parameter_values, vec![0.5]);
        assert_eq!(prob.known_casimirs.len(), 1);
    }

    #[test]
    fn input_errors() {
        let bad_version = KERMACK.replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(ProblemFile::from_json(&bad_version), Err(InputError::Version { found: 9 })));
        let bad_expr = KERMACK.replace("\"b*x1*x2\", \"-b", "\"b*x1*\", \"-b");
        let err = ProblemFile::from_json(&bad_expr).unwrap().problem().unwrap_err();
        assert!(err.to_string().starts_with("matrix entry (1,2)"), "{err}");
        let undeclared = KERMACK.replace("\"0\", \"b*x1*x2\"", "\"0\", \"c*x1*x2\"");
        assert!(ProblemFile::from_json(&undeclared).unwrap().problem().is_err());
        let stray = KERMACK.replace("\"x3\": \"positive\"", "\"x9\": \"positive\"");
        assert!(matches!(ProblemFile::from_json(&stray).unwrap().problem(), Err(InputError::UnknownDomainVariable(_))));
        assert!(matches!(ProblemFile::from_json("{"), Err(InputError::Json(_))));
    }
}
