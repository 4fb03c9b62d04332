use std::collections::BTreeMap;

use num_bigint::BigInt;
use proptest::prelude::*;

use darboux::congruence::{reduce_constant, ElementaryTransform, RationalMatrix};
use darboux::expr::{is_zero, Domain, Expr, Rational, SamplerConfig, Sign};
use darboux::fixtures;
use darboux::io::ResultFile;
use darboux::matrix::ExprMatrix;
use darboux::poisson::{check_jacobi, check_jacobi_matrix, transform_structure, CanonicalTarget, StructureMatrix};
use darboux::verify::simulate;

fn domain() -> Domain {
    Domain::new([("x1", Sign::Positive), ("x2", Sign::Positive)], []).unwrap()
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![Just(Expr::var("x1")), Just(Expr::var("x2")), (-4i64..=4, 1i64..=3).prop_map(|(n, d)| Expr::frac(n, d)),]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::mul),
            (inner.clone(), 0i64..=3).prop_map(|(e, k)| Expr::powi(e, k)),
            inner.clone().prop_map(|e| Expr::exp(e / Expr::int(4))),
            Just(Expr::log(Expr::var("x1"))),
            Just(Expr::var("x2").recip()),
        ]
    })
}

fn point() -> impl Strategy<Value = (f64, f64)> {
    (0.5f64..2.0, 0.5f64..2.0)
}

fn small_skew(n: usize) -> impl Strategy<Value = RationalMatrix> {
    prop::collection::vec((-5i64..=5, 1i64..=3), n * n).prop_map(move |v| {
        let mut a = RationalMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let (p, q) = v[i * n + j];
                let x = Rational::new(BigInt::from(p), BigInt::from(q));
                a.set(j, i, -x.clone());
                a.set(i, j, x);
            }
        }
        a
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn printing_then_parsing_is_identity(e in expr()) {
        let d = domain();
        let back = Expr::parse(&e.to_string(), &d).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn derivative_matches_central_differences(e in expr(), (a, b) in point()) {
        let d = domain();
        let at = |x1: f64| d.bindings(&[x1, b], &[]);
        let h = 1e-5;
        let (Ok(p), Ok(m), Ok(s)) = (
            e.evaluate(&at(a + h)),
            e.evaluate(&at(a - h)),
            e.differentiate("x1").evaluate(&at(a)),
        ) else {
            return Ok(());
        };
        prop_assume!(p.is_finite() && m.is_finite() && s.is_finite() && p.abs() < 1e6 && m.abs() < 1e6);
        let fd = (p - m) / (2.0 * h);
        prop_assert!((fd - s).abs() <= 1e-4 * (1.0 + s.abs()), "{} vs {} for {}", fd, s, e);
    }

    #[test]
    fn difference_with_itself_is_zero(e in expr()) {
        let d = domain();
        prop_assert!((&e - &e).is_zero());
        prop_assert!(is_zero(&(&e + &e - Expr::int(2) * &e), &d, &SamplerConfig::default()).is_zero());
    }

    #[test]
    fn antiderivative_differentiates_back(c in 1i64..=4, k in 0i64..=4, sel in 0usize..4) {
        let d = domain();
        let x = Expr::var("x1");
        let f = match sel {
            0 => Expr::int(c) * Expr::powi(x.clone(), k),
            1 => Expr::exp(Expr::int(c) * &x),
            2 => Expr::int(c) * x.recip() + Expr::var("x2"),
            _ => Expr::powi(x.clone(), k) * Expr::exp(x.clone()),
        };
        let prim = f.antiderivative("x1", &d).unwrap();
        prop_assert!(is_zero(&(prim.differentiate("x1") - &f), &d, &SamplerConfig::default()).is_zero());
    }

    #[test]
    fn constant_reduction_is_exact(n in 1usize..=6, seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = fixtures::random_rational_skew(&mut rng, n);
        let red = reduce_constant(&a).unwrap();
        prop_assert_eq!(red.target.r % 2, 0);
        let s = RationalMatrix::from_fn(n, |i, j| Rational::from_integer(red.target.entry(i, j).into()));
        prop_assert_eq!(red.k.mul(&a).mul(&red.k.transpose()), s);
        prop_assert!(red.k.inverse().is_some());
    }

    #[test]
    fn constant_reduction_on_small_entries(a in small_skew(4)) {
        let red = reduce_constant(&a).unwrap();
        let s = RationalMatrix::from_fn(4, |i, j| Rational::from_integer(red.target.entry(i, j).into()));
        prop_assert_eq!(red.k.mul(&a).mul(&red.k.transpose()), s);
    }

    #[test]
    fn row_operation_equals_left_multiplication(i in 0usize..3, j in 0usize..3, c in expr(), kind in 0usize..3) {
        prop_assume!(i != j);
        let n = 3;
        let k = ExprMatrix::from_fn(n, |a, b| Expr::var(if (a + b) % 2 == 0 { "x1" } else { "x2" }) + Expr::int((a * n + b) as i64));
        let t = match kind {
            0 => ElementaryTransform::permute(i, j),
            1 => ElementaryTransform::scale(i, c),
            _ => ElementaryTransform::combine(i, c, j),
        };
        let by_rows = t.apply_rows(&k);
        let by_product = t.matrix(n).mul(&k).unwrap();
        prop_assert!(by_rows.sub(&by_product).unwrap().is_zero());
    }

    #[test]
    fn canonical_targets_are_poisson(n in 1usize..=7, half in 0usize..=3) {
        let r = (2 * half).min(n - n % 2);
        let t = CanonicalTarget::new(n, r).unwrap();
        let m = t.matrix();
        let d = Domain::uniform("x", n, Sign::Unrestricted);
        prop_assert!(m.sub(&m.transpose().scale(&Expr::int(-1))).unwrap().is_zero());
        prop_assert!(check_jacobi_matrix(&m, &d, &SamplerConfig::default()).passed());
        prop_assert_eq!(t.casimir_count(), n - r);
    }

    #[test]
    fn jacobi_survives_linear_change_of_coordinates(seed in any::<u64>(), b in small_skew(3)) {
        let j = fixtures::so3(Sign::Unrestricted).problem().unwrap().structure;
        let seven = RationalMatrix::from_fn(3, |i, k| Rational::from_integer(BigInt::from(if i == k { 7 } else { 0 })));
        let k = RationalMatrix::from_fn(3, |i, c| b.get(i, c) + seven.get(i, c));
        let inv = k.inverse().unwrap();
        let m = transform_structure(&j, &k.to_expr()).unwrap();
        let back: BTreeMap<String, Expr> = (0..3)
            .map(|i| (format!("x{}", i + 1), Expr::add((0..3).map(|c| Expr::num(inv.get(i, c).clone()) * Expr::var(&format!("x{}", c + 1))))))
            .collect();
        let in_y = m.map(|e| e.substitute(&back));
        let d = Domain::uniform("x", 3, Sign::Unrestricted);
        let cfg = SamplerConfig { seed, ..SamplerConfig::default() };
        let s = StructureMatrix::new(in_y, d, None).unwrap();
        prop_assert!(check_jacobi(&s, &cfg).passed());
    }

    #[test]
    fn result_files_round_trip(seed in 0u64..200) {
        use darboux::congruence::{reduce_functional, ReduceOptions};
        let (file, _, _) = fixtures::random_separable(seed);
        let p = file.problem().unwrap();
        let opts = ReduceOptions::default();
        let r = reduce_functional(&p.structure, &opts);
        let rf = ResultFile::new(&r, &opts, None);
        let text = rf.to_json();
        let back = ResultFile::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json(), text);
        if let Ok(claim) = back.claim(p.structure.domain()) {
            prop_assert_eq!(claim.k, r.k().clone());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn rk4_keeps_linear_casimir(a1 in 0.2f64..2.0, a2 in 0.2f64..2.0, b in prop::array::uniform3(-1.0f64..1.0)) {
        let p = fixtures::toda3().problem().unwrap();
        let j = &p.structure;
        let x0 = [a1, a2, b[0], b[1], b[2]];
        let tr = simulate(j, j.hamiltonian().unwrap(), &p.known_casimirs, &x0, &[], 1.0, 1e-2).unwrap();
        let c = &tr.casimirs[0];
        let drift = c.iter().map(|v| (v - c[0]).abs()).fold(0.0, f64::max);
        prop_assert!(drift < 1e-12);
    }
}

#[test]
fn substitution_commutes_with_evaluation() {
    let d = domain();
    let e = Expr::parse("x1^2*exp(x2/2)+log(x1)", &d).unwrap();
    let map: BTreeMap<String, Expr> = [("x2".to_string(), Expr::parse("2*x1+1", &d).unwrap())].into();
    let s = e.substitute(&map);
    let b = d.bindings(&[1.3, 0.0], &[]);
    let direct = e.evaluate(&d.bindings(&[1.3, 3.6], &[])).unwrap();
    assert!((s.evaluate(&b).unwrap() - direct).abs() < 1e-12);
}
