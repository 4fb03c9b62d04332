use darboux::congruence::{reduce_functional, ReduceOptions, ReparamBasis, Status};
use darboux::expr::{Expr, Sign};
use darboux::fixtures;
use darboux::io::{Problem, ResultFile};
use darboux::poisson::Verdict;
use darboux::verify::{conservation_report, simulate, verify_reduction, Claim, VerifyConfig};

fn load(stem: &str) -> Problem {
    fixtures::catalog().into_iter().find(|(s, _)| *s == stem).unwrap().1.problem().unwrap()
}

fn reduce(stem: &str, allow_ntt: bool) -> (Problem, darboux::congruence::DarbouxResult) {
    let p = load(stem);
    let r = reduce_functional(&p.structure, &ReduceOptions { allow_ntt, ..ReduceOptions::default() });
    (p, r)
}

fn assert_verified(p: &Problem, r: &darboux::congruence::DarbouxResult) {
    let claim = Claim::from_result(r).unwrap();
    let report = verify_reduction(&p.structure, &claim, &VerifyConfig::default()).unwrap();
    assert!(report.passed, "{:?}", report.failure());
}

#[test]
fn fixture_statuses() {
    let expected = [
        ("planar_constant", false, Status::JacobianCongruence),
        ("planar_x2", false, Status::JacobianCongruence),
        ("planar_general", false, Status::CongruenceOnly),
        ("planar_general", true, Status::NttCongruence),
        ("so3", false, Status::CongruenceOnly),
        ("so3", true, Status::NttCongruence),
        ("kermack", false, Status::JacobianCongruence),
        ("toda3", false, Status::JacobianCongruence),
        ("separable", false, Status::JacobianCongruence),
        ("dpsi", true, Status::NttCongruence),
        ("zero4", false, Status::JacobianCongruence),
        ("non_jacobi", false, Status::Failed),
    ];
    for (stem, ntt, status) in expected {
        let (p, r) = reduce(stem, ntt);
        assert_eq!(r.status, status, "{stem} allow_ntt={ntt}: {:?}", r.notes);
        if status != Status::Failed {
            assert_verified(&p, &r);
        }
    }
}

#[test]
fn planar_with_one_variable_takes_a_logarithm() {
    let (p, r) = reduce("planar_x2", false);
    let d = p.structure.domain();
    let y = r.y.unwrap();
    assert_eq!(y[1], Expr::parse("log(x2)", d).unwrap());
    assert!(r.casimirs.is_empty());
}

#[test]
fn dpsi_factor_lives_on_casimir_coordinates() {
    let (_, r) = reduce("dpsi", true);
    let ntt = r.ntt.unwrap();
    assert_eq!(ntt.reparam.verdict, Verdict::Pass);
    assert_eq!(ntt.reparam.basis, ReparamBasis::CasimirDependence);
    assert!(ntt.g_darboux.unwrap().free_variable_names().iter().all(|v| v == "y3" || v == "y4"));
    assert_eq!(r.casimirs.len(), 2);
}

#[test]
fn dpsi_generator_accepts_other_psi() {
    let p = fixtures::dpsi4("1+z1^2+z2^2").unwrap().problem().unwrap();
    let r = reduce_functional(&p.structure, &ReduceOptions { allow_ntt: true, ..ReduceOptions::default() });
    assert_eq!(r.status, Status::NttCongruence, "{:?}", r.notes);
    assert_verified(&p, &r);
}

#[test]
fn result_file_claim_reproduces_verification() {
    for (stem, ntt) in [("kermack", false), ("toda3", false), ("so3", true), ("dpsi", true)] {
        let (p, r) = reduce(stem, ntt);
        let first = verify_reduction(&p.structure, &Claim::from_result(&r).unwrap(), &VerifyConfig::default()).unwrap();
        let file = ResultFile::new(&r, &ReduceOptions::default(), Some(first));
        let reloaded = ResultFile::from_json(&file.to_json()).unwrap();
        assert_eq!(reloaded.to_json(), file.to_json(), "{stem}: result file does not round-trip");
        let claim = reloaded.claim(p.structure.domain()).unwrap();
        let report = verify_reduction(&p.structure, &claim, &VerifyConfig::default()).unwrap();
        assert!(report.passed, "{stem}: {:?}", report.failure());
    }
}

#[test]
fn rigid_body_leaves_the_positive_orthant() {
    let p = fixtures::so3(Sign::Positive).problem().unwrap();
    let j = &p.structure;
    let tr = simulate(j, j.hamiltonian().unwrap(), &[], &[1.0, 1.0, 1.0], &[], 10.0, 1e-3).unwrap();
    assert!(tr.truncated.is_some());
    let rigid = load("so3_rigid_body");
    let j = &rigid.structure;
    let tr = simulate(j, j.hamiltonian().unwrap(), &rigid.known_casimirs, &[1.0, 1.0, 1.0], &[], 10.0, 1e-3).unwrap();
    assert!(tr.truncated.is_none());
}

#[test]
fn kermack_flow_conserves_population() {
    let p = load("kermack");
    let j = &p.structure;
    let tr =
        simulate(j, j.hamiltonian().unwrap(), &p.known_casimirs, &[0.9, 0.1, 0.0001], &p.parameter_values, 5.0, 1e-3)
            .unwrap();
    let report = conservation_report(&tr);
    assert!(report.truncated.is_none());
    assert!(report.hamiltonian_drift < 1e-8 && report.casimir_drifts[0] < 1e-12, "{report:?}");
    let last = tr.states.last().unwrap();
    assert!(last[0] < 0.9 && last[2] > 0.0001, "susceptibles fall and removed grow: {last:?}");
}

#[test]
fn zero_step_budget_is_reported() {
    let p = load("toda3");
    let r = reduce_functional(&p.structure, &ReduceOptions { max_steps: Some(1), ..ReduceOptions::default() });
    assert_eq!(r.status, Status::Failed);
    assert!(!r.notes.is_empty());
}
