//! Reference problems and seeded generators for families of structure matrices.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::congruence::RationalMatrix;
use crate::expr::{Domain, Expr, ParseError, Rational, Sign};
use crate::io::{ParameterSpec, ProblemFile, FORMAT_VERSION};
use crate::matrix::ExprMatrix;
use crate::poisson::CanonicalTarget;

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn uniform(n: usize, sign: Sign) -> BTreeMap<String, Sign> {
    if sign == Sign::Unrestricted {
        return BTreeMap::new();
    }
    names(n).into_iter().map(|v| (v, sign)).collect()
}

fn grid(rows: &[&[&str]]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
}

fn problem(
    name: &str,
    description: &str,
    n: usize,
    domain: BTreeMap<String, Sign>,
    matrix: Vec<Vec<String>>,
) -> ProblemFile {
    ProblemFile {
        format_version: FORMAT_VERSION,
        name: Some(name.to_string()),
        description: Some(description.to_string()),
        variables: names(n),
        domain,
        parameters: Vec::new(),
        matrix,
        hamiltonian: None,
        known_casimirs: Vec::new(),
    }
}

fn expr_grid(m: &ExprMatrix) -> Vec<Vec<String>> {
    m.to_strings()
}

/// `[[0, c], [-c, 0]]`.
pub fn planar_constant(c: &str) -> ProblemFile {
    let neg = format!("-({c})");
    problem("planar_constant", "constant planar structure", 2, BTreeMap::new(), grid(&[&["0", c], &[&neg, "0"]]))
}

/// `[[0, f], [-f, 0]]` with `f` given as text in `x1, x2`.
pub fn planar(name: &str, f: &str, sign: Sign) -> ProblemFile {
    let neg = format!("-({f})");
    problem(name, "planar structure with one structure function", 2, uniform(2, sign), grid(&[&["0", f], &[&neg, "0"]]))
}

/// Rotation algebra with the rigid-body Hamiltonian (moments of inertia 1, 2, 3).
pub fn so3(sign: Sign) -> ProblemFile {
    let mut p = problem(
        "so3",
        "Lie-Poisson structure of the rotation algebra",
        3,
        uniform(3, sign),
        grid(&[&["0", "-x3", "x2"], &["x3", "0", "-x1"], &["-x2", "x1", "0"]]),
    );
    p.hamiltonian = Some("x1^2/2+x2^2/4+x3^2/6".to_string());
    p.known_casimirs = vec!["(x1^2+x2^2+x3^2)/2".to_string()];
    p
}

/// Epidemic model structure `b x1 x2 [[0,1,-1],[-1,0,1],[1,-1,0]]` on the positive orthant.
pub fn kermack() -> ProblemFile {
    let mut p = problem(
        "kermack",
        "SIR epidemic model structure",
        3,
        uniform(3, Sign::Positive),
        grid(&[&["0", "b*x1*x2", "-b*x1*x2"], &["-b*x1*x2", "0", "b*x1*x2"], &["b*x1*x2", "-b*x1*x2", "0"]]),
    );
    p.parameters = vec![ParameterSpec { name: "b".to_string(), sign: Sign::Positive, value: Some(1.0) }];
    p.hamiltonian = Some("x3+log(x1)/b".to_string());
    p.known_casimirs = vec!["x1+x2+x3".to_string()];
    p
}

/// Three-particle Toda lattice in Flaschka variables `(a1, a2, b1, b2, b3) = (x1..x5)`.
pub fn toda3() -> ProblemFile {
    let mut domain = BTreeMap::new();
    domain.insert("x1".to_string(), Sign::Positive);
    domain.insert("x2".to_string(), Sign::Positive);
    let mut p = problem(
        "toda3",
        "three-particle Toda lattice, variables (a1, a2, b1, b2, b3)",
        5,
        domain,
        grid(&[
            &["0", "0", "-x1", "x1", "0"],
            &["0", "0", "0", "-x2", "x2"],
            &["x1", "0", "0", "0", "0"],
            &["-x1", "x2", "0", "0", "0"],
            &["0", "-x2", "0", "0", "0"],
        ]),
    );
    p.hamiltonian = Some("x1^2+x2^2+(x3^2+x4^2+x5^2)/2".to_string());
    p.known_casimirs = vec!["x3+x4+x5".to_string()];
    p
}

/// Structure `[[0,1,x1],[-1,0,0],[-x1,0,0]]`, skew but violating the Jacobi identity.
pub fn non_jacobi() -> ProblemFile {
    problem(
        "non_jacobi",
        "skew-symmetric matrix that is not a Poisson structure",
        3,
        BTreeMap::new(),
        grid(&[&["0", "1", "x1"], &["-1", "0", "0"], &["-x1", "0", "0"]]),
    )
}

pub fn zero(n: usize) -> ProblemFile {
    let mut p = problem("zero", "zero structure", n, BTreeMap::new(), vec![vec!["0".to_string(); n]; n]);
    p.hamiltonian = Some("1".to_string());
    p
}

/// One-variable factor of a separable structure.
#[derive(Clone, Debug, PartialEq)]
pub enum Phi {
    Constant(Rational),
    Identity,
    Reciprocal,
    Exp,
}

impl Phi {
    pub fn expr(&self, x: &Expr) -> Expr {
        match self {
            Phi::Constant(c) => Expr::num(c.clone()),
            Phi::Identity => x.clone(),
            Phi::Reciprocal => x.recip(),
            Phi::Exp => Expr::exp(x.clone()),
        }
    }
}

/// `J_ij = a_ij phi_i(x_i) phi_j(x_j)` on the positive orthant.
pub fn separable(a: &RationalMatrix, phis: &[Phi]) -> ProblemFile {
    let n = a.dim();
    assert_eq!(phis.len(), n, "one factor per variable");
    let x: Vec<Expr> = names(n).iter().map(|v| Expr::var(v)).collect();
    let f: Vec<Expr> = phis.iter().zip(&x).map(|(p, xi)| p.expr(xi)).collect();
    let m = ExprMatrix::from_fn(n, |i, j| Expr::num(a.get(i, j).clone()) * &f[i] * &f[j]);
    problem("separable", "separable structure a_ij phi_i(x_i) phi_j(x_j)", n, uniform(n, Sign::Positive), expr_grid(&m))
}

/// `J = psi(v_1 . x, ..., v_k . x) A` where the `v` span the kernel of `A`
/// and `psi` is written in `z1..zk`.
pub fn dpsi(a: &RationalMatrix, kernel: &[Vec<Rational>], psi: &str) -> Result<ProblemFile, ParseError> {
    let n = a.dim();
    let znames: Vec<String> = (1..=kernel.len()).map(|i| format!("z{i}")).collect();
    let zdomain =
        Domain::new(znames.iter().map(|z| (z.as_str(), Sign::Unrestricted)), []).expect("generated names are distinct");
    let psi = Expr::parse(psi, &zdomain)?;
    let x: Vec<Expr> = names(n).iter().map(|v| Expr::var(v)).collect();
    let map: BTreeMap<String, Expr> = znames
        .iter()
        .zip(kernel)
        .map(|(z, v)| (z.clone(), Expr::add(v.iter().zip(&x).map(|(c, xi)| Expr::num(c.clone()) * xi))))
        .collect();
    let psi_x = psi.substitute(&map);
    let m = ExprMatrix::from_fn(n, |i, j| Expr::num(a.get(i, j).clone()) * &psi_x);
    Ok(problem("dpsi", "scalar multiple psi(Casimirs) A of a constant structure", n, BTreeMap::new(), expr_grid(&m)))
}

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// The 4x4 rank-2 instance with Casimirs `x2+x3` and `x1+x2+x4`.
pub fn dpsi4(psi: &str) -> Result<ProblemFile, ParseError> {
    let rows = [[0, 1, -1, -1], [-1, 0, 0, 1], [1, 0, 0, -1], [1, -1, 1, 0]];
    let a = RationalMatrix::from_fn(4, |i, j| q(rows[i][j]));
    let kernel = vec![vec![q(0), q(1), q(1), q(0)], vec![q(1), q(1), q(0), q(1)]];
    let mut p = dpsi(&a, &kernel, psi)?;
    p.name = Some("dpsi".to_string());
    p.known_casimirs = vec!["x2+x3".to_string(), "x1+x2+x4".to_string()];
    Ok(p)
}

fn random_rational<R: Rng>(rng: &mut R, span: i64, max_den: i64) -> Rational {
    Rational::new(BigInt::from(rng.random_range(-span..=span)), BigInt::from(rng.random_range(1..=max_den)))
}

/// Random skew matrix with rational entries, of full random type or
/// of prescribed rank `B S(n, r) B^T` with random integer `B`.
pub fn random_rational_skew<R: Rng>(rng: &mut R, n: usize) -> RationalMatrix {
    if rng.random_bool(0.5) {
        let mut a = RationalMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = if rng.random_bool(0.2) { q(0) } else { random_rational(rng, 6, 5) };
                a.set(j, i, -v.clone());
                a.set(i, j, v);
            }
        }
        a
    } else {
        let r = 2 * rng.random_range(0..=n / 2);
        let s = CanonicalTarget { n, r };
        let sm = RationalMatrix::from_fn(n, |i, j| q(s.entry(i, j) as i64));
        let b = RationalMatrix::from_fn(n, |_, _| random_rational(rng, 3, 2));
        b.mul(&sm).mul(&b.transpose())
    }
}

/// Separable instance for `seed`: `2 <= n <= 6`, random nonzero rational `A`,
/// factors drawn from constants, `x_i`, `1/x_i` and `exp(x_i)`.
pub fn random_separable(seed: u64) -> (ProblemFile, RationalMatrix, Vec<Phi>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=6);
    let a = loop {
        let a = random_rational_skew(&mut rng, n);
        if a != RationalMatrix::zeros(n) {
            break a;
        }
    };
    let phis: Vec<Phi> = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => Phi::Constant(Rational::new(
                BigInt::from(rng.random_range(1..=4)),
                BigInt::from(rng.random_range(1..=3)),
            )),
            1 => Phi::Identity,
            2 => Phi::Reciprocal,
            _ => Phi::Exp,
        })
        .collect();
    (separable(&a, &phis), a, phis)
}

/// Every shipped fixture as `(file stem, problem)`.
pub fn catalog() -> Vec<(&'static str, ProblemFile)> {
    let sep = {
        let rows = [[0, 1, 0, -2], [-1, 0, 3, 0], [0, -3, 0, 1], [2, 0, -1, 0]];
        let a = RationalMatrix::from_fn(4, |i, j| q(rows[i][j]));
        let mut p = separable(&a, &[Phi::Identity, Phi::Reciprocal, Phi::Exp, Phi::Constant(q(2))]);
        p.hamiltonian = Some("x1+x2+x3+x4".to_string());
        p
    };
    let mut rigid = so3(Sign::Unrestricted);
    rigid.name = Some("so3_rigid_body".to_string());
    vec![
        ("planar_constant", planar_constant("3/2")),
        ("planar_x2", planar("planar_x2", "x2", Sign::Positive)),
        ("planar_general", planar("planar_general", "1+x1^2+x2^2", Sign::Unrestricted)),
        ("so3", so3(Sign::Positive)),
        ("so3_rigid_body", rigid),
        ("kermack", kermack()),
        ("toda3", toda3()),
        ("separable", sep),
        ("dpsi", dpsi4("exp(z1+z2)").expect("fixed text parses")),
        ("non_jacobi", non_jacobi()),
        ("zero4", zero(4)),
    ]
}
