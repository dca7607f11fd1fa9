use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wavesolve_core::dwt::{self, TransformMatrix, WaveletSpec};
use wavesolve_core::fdm::{self, OperatorKind, OperatorSpec, RhsProfile};
use wavesolve_core::observable::{self, SparseObservable};
use wavesolve_core::precond::{self, PreconditionedSystem};
use wavesolve_core::qmi::QmiConfig;
use wavesolve_core::qsim::{self, Circuit, Gate, StateVector};
use wavesolve_core::solver::{self, AmplificationRegisters, AmplifyConfig, Mode};
use wavesolve_core::Error;

fn system(kind: OperatorKind, n: usize, wavelet: &str) -> PreconditionedSystem {
    let spec = WaveletSpec::parse(wavelet).unwrap();
    precond::precondition_operator(&OperatorSpec::new(kind), &spec, n).unwrap()
}

/// Identity operator with the L2 right-hand side and the given transform.
fn identity_system(n: usize, w: &TransformMatrix) -> PreconditionedSystem {
    let mut sys = fdm::discretize_1d(&OperatorSpec::new(OperatorKind::L2), n).unwrap();
    sys.a = DMatrix::identity(1 << n, 1 << n);
    let p = precond::build_preconditioner(n, 1).unwrap();
    precond::precondition(&sys, w, &p).unwrap()
}

fn identity_transform(n: usize) -> TransformMatrix {
    let dim = 1 << n;
    TransformMatrix {
        w: DMatrix::identity(dim, dim),
        inverse: DMatrix::identity(dim, dim),
        levels: n,
        n,
        spec: WaveletSpec::parse("haar").unwrap(),
    }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).norm_sqr()
}

#[test]
fn b_state_preparation() {
    let e1 = solver::prepare_b_state(&DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
    assert_eq!(e1, StateVector::zero(2).unwrap());
    let uniform = solver::prepare_b_state(&DVector::from_element(4, 1.0)).unwrap();
    assert!(uniform.amps.iter().all(|a| (a.re - 0.5).abs() < 1e-15 && a.im == 0.0));
    let g = fdm::build_rhs(RhsProfile::GaussianSamples, 16).unwrap();
    let s = solver::prepare_b_state(&g).unwrap();
    let direct = g.normalize();
    assert!((s.norm() - 1.0).abs() < 1e-14);
    for (a, b) in s.amps.iter().zip(direct.iter()) {
        assert!((a.re - b).abs() < 1e-15);
    }
    assert_eq!(solver::prepare_b_state(&DVector::zeros(4)), Err(Error::ZeroVector));

    // the oracle maps |0⟩ to the same state
    let mut c = Circuit::new(4);
    c.push(solver::b_oracle(&g, &[0, 1, 2, 3]).unwrap()).unwrap();
    let out = qsim::run(&c, StateVector::zero(4).unwrap()).unwrap();
    assert!(max_diff(&out.amps, &s.amps) < 1e-14);
}

#[test]
fn identity_operator_recovers_b() {
    for w in [identity_transform(3), dwt::full_transform(&WaveletSpec::parse("db2").unwrap(), 3).unwrap()] {
        let ps = identity_system(3, &w);
        let pipe = solver::build_solution_pipeline(&ps, &QmiConfig::oracle()).unwrap();
        let res = solver::amplify(&pipe, &AmplifyConfig::ideal()).unwrap();
        let phi = res.post_selected().unwrap();
        // u = (ξ/2) Σ_ab φ_ab, and σ_max(P²) = 1
        assert!((pipe.scale - 1.0).abs() < 1e-12);
        let b = ps.sys.b.normalize();
        for j in 0..8 {
            let u: Complex64 = (0..4).map(|ab| phi.amps[ab * 8 + j]).sum::<Complex64>() * (res.xi / 2.0);
            assert!((u - Complex64::new(b[j], 0.0)).norm() < 1e-10, "{j}: {u}");
        }
        let m = SparseObservable::identity(3).unwrap();
        let rep = solver::end_to_end_expectation(&ps, &QmiConfig::oracle(), &m, &AmplifyConfig::ideal()).unwrap();
        assert!((rep.quantum_value - 1.0).abs() < 1e-10);
        assert!((rep.classical_value - 1.0).abs() < 1e-12);
    }
}

#[test]
fn post_selected_state_matches_classical_branches() {
    for (kind, n) in [(OperatorKind::L2, 4), (OperatorKind::L3, 3), (OperatorKind::L2, 3)] {
        let ps = system(kind, n, "db3");
        let pipe = solver::build_solution_pipeline(&ps, &QmiConfig::oracle()).unwrap();
        let res = solver::amplify(&pipe, &AmplifyConfig::ideal()).unwrap();
        let branches = solver::classical_branches(&ps).unwrap();
        let want = solver::branch_state(&branches).unwrap();
        let got = res.post_selected().unwrap();
        assert!(max_diff(&got.amps, &want.amps) < 1e-8, "{kind:?} n={n}");

        // ξ² = (1/4) Σ ‖ψ_ab‖² and p = ξ²/κ_p² with α = κ_p
        let xi = solver::xi_from_branches(&branches);
        assert!((pipe.alpha() - ps.kappa_p).abs() < 1e-9 * ps.kappa_p);
        assert!((res.xi - xi).abs() < 1e-8 * xi.max(1.0));
        assert!((res.p_succ - xi * xi / (ps.kappa_p * ps.kappa_p)).abs() < 1e-10);
        assert!(res.p_succ >= 1.0 / (ps.kappa_p * ps.kappa_p));
        assert!(res.p_final >= 2.0 / 3.0, "{}", res.p_final);
    }
}

#[test]
fn branches_average_to_the_solution() {
    for kind in [OperatorKind::L2, OperatorKind::L3] {
        let ps = system(kind, 4, "db3");
        let branches = solver::classical_branches(&ps).unwrap();
        let avg = (&branches[0] + &branches[1] + &branches[2] + &branches[3]) / Complex64::new(4.0, 0.0);
        let u = ps.sys.a.clone().lu().solve(&ps.sys.b.normalize()).unwrap() * ps.sigma_max;
        for j in 0..16 {
            assert!((avg[j] - Complex64::new(u[j], 0.0)).norm() < 1e-8 * u.amax());
        }
        assert_eq!(solver::classical_solution(&ps).unwrap().len(), 16);
    }
}

#[test]
fn circuit_uses_each_oracle_the_expected_number_of_times() {
    let ps = system(OperatorKind::L2, 3, "db3");
    let pipe = solver::build_solution_pipeline(&ps, &QmiConfig::oracle()).unwrap();
    assert_eq!(pipe.prepare.oracle_uses("P_b"), 1);
    assert_eq!(pipe.prepare.oracle_uses("W"), 1);
    assert_eq!(pipe.prepare.oracle_uses("QMI"), 1);
    assert_eq!(pipe.finish.oracle_uses("W"), 1);
    assert_eq!(pipe.prepare.census().get("swap"), Some(&2));
    let regs = AmplificationRegisters { good: pipe.layout.good(), kick: pipe.layout.kick, dilution: None };
    let g = solver::grover_iterate(&pipe.prepare, &regs).unwrap();
    assert_eq!(g.oracle_uses("P_b"), 2);
    assert_eq!(g.oracle_uses("QMI"), 2);
    assert!(qsim::verify_clean_ancillas(&g, &[pipe.layout.kick], 1e-12).is_ok());
}

#[test]
fn unit_probability_needs_no_rounds() {
    let mut c = Circuit::new(3);
    c.push(Gate::h(1)).unwrap();
    let regs = AmplificationRegisters { good: vec![(0, false)], kick: 2, dilution: None };
    let out = solver::amplify_circuit(&c, &regs, 1e-6, &AmplifyConfig::ideal()).unwrap();
    assert_eq!(out.rounds, 0);
    assert_eq!(out.state, qsim::run(&c, StateVector::zero(3).unwrap()).unwrap());
    let out = solver::amplify_circuit(&c, &regs, 1e-6, &AmplifyConfig::faithful(3)).unwrap();
    assert_eq!((out.rounds, out.attempts), (0, 1));
}

fn rotated_flag(p: f64) -> Circuit {
    let mut c = Circuit::new(4);
    c.push(Gate::ry(0, p.sqrt().acos())).unwrap();
    c.push(Gate::h(1)).unwrap();
    c
}

#[test]
fn ideal_amplification_reaches_two_thirds() {
    for p in [0.002, 0.01, 0.05, 0.2, 0.3, 0.45, 0.5, 0.6] {
        let c = rotated_flag(p);
        let regs = AmplificationRegisters { good: vec![(0, false)], kick: 2, dilution: Some(3) };
        let start = qsim::run(&c, StateVector::zero(4).unwrap()).unwrap();
        assert!((qsim::success_probability(&start, &regs.good) - p).abs() < 1e-12);
        let out = solver::amplify_circuit(&c, &regs, 1e-6, &AmplifyConfig::ideal()).unwrap();
        assert!(out.p_final >= 2.0 / 3.0, "p={p}: {}", out.p_final);
        let k = (std::f64::consts::PI / (4.0 * p.sqrt().asin())).floor() as usize;
        if out.dilution_angle.is_none() {
            assert_eq!(out.rounds, k);
        }
        // direction of the good component is preserved
        let pre = qsim::project(&start, &out.good);
        let post = qsim::project(&out.state, &out.good);
        let a = StateVector { amps: normalize(pre), num_qubits: 2 };
        let b = StateVector { amps: normalize(post), num_qubits: 2 };
        assert!(fidelity(&a, &b) > 1.0 - 1e-8);
    }
    // p = 1/2 needs the dilution qubit
    let regs = AmplificationRegisters { good: vec![(0, false)], kick: 2, dilution: Some(3) };
    let out = solver::amplify_circuit(&rotated_flag(0.5), &regs, 1e-6, &AmplifyConfig::ideal()).unwrap();
    assert!(out.dilution_angle.is_some());
    assert!((out.p_final - 1.0).abs() < 1e-10);
}

fn normalize(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

#[test]
fn probability_floor_is_enforced() {
    let c = rotated_flag(1e-4);
    let regs = AmplificationRegisters { good: vec![(0, false)], kick: 2, dilution: None };
    let err = solver::amplify_circuit(&c, &regs, 1e-3, &AmplifyConfig::ideal()).unwrap_err();
    assert!(matches!(err, Error::ProbabilityFloor { .. }));
}

#[test]
fn faithful_mode_is_seeded_and_bounded() {
    let ps = system(OperatorKind::L2, 4, "db3");
    let pipe = solver::build_solution_pipeline(&ps, &QmiConfig::oracle()).unwrap();
    let a = solver::amplify(&pipe, &AmplifyConfig::faithful(17)).unwrap();
    let b = solver::amplify(&pipe, &AmplifyConfig::faithful(17)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.mode, Mode::Faithful);
    assert_eq!(a.seed, Some(17));

    // mean rounds relative to the ideal count stays bounded across sizes
    for n in 3..=5 {
        let ps = system(OperatorKind::L2, n, "db3");
        let pipe = solver::build_solution_pipeline(&ps, &QmiConfig::oracle()).unwrap();
        let ideal = solver::amplify(&pipe, &AmplifyConfig::ideal()).unwrap().rounds;
        let mean = (0..100u64)
            .map(|s| solver::amplify(&pipe, &AmplifyConfig::faithful(s)).unwrap().rounds)
            .sum::<usize>() as f64
            / 100.0;
        assert!(mean <= 3.0 * (ideal.max(1) as f64), "n={n}: mean {mean} ideal {ideal}");
    }
}

#[test]
fn norm_recovery() {
    assert_eq!(solver::recover_norm(1.0, 2.0), 2.0);
    let p = 0.0371;
    let kappa = 12.0;
    let xi = solver::recover_norm(p, kappa);
    let mut inside = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let est = solver::estimate_norm(p, kappa, 10_000, &mut rng);
        if (est.xi - xi).abs() <= 3.0 * est.std_err {
            inside += 1;
        }
    }
    assert!(inside >= 95, "{inside}");
    // standard error shrinks like 1/√R
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let small = solver::estimate_norm(p, kappa, 1_000, &mut rng).std_err;
    let large = solver::estimate_norm(p, kappa, 100_000, &mut rng).std_err;
    assert!((small / large - 10.0).abs() < 1.5, "{}", small / large);
}

#[test]
fn direct_approach_probability_examples() {
    for n in 2..=6 {
        let big_n = 1usize << n;
        let mut e = DVector::zeros(big_n);
        e[0] = 1.0;
        assert!((solver::direct_probability(&e, n, 1).unwrap() - 1.0).abs() < 1e-12);
        e[0] = 0.0;
        e[big_n - 1] = 1.0;
        let want = (2.0 / big_n as f64).powi(2);
        assert!((solver::direct_probability(&e, n, 1).unwrap() - want).abs() < 1e-12);
        // uniform b_w: (1/N) Σ_j 2^{-2⌊log₂ j⌋} with the j = 0 term equal to 1
        let uniform = DVector::from_element(big_n, 1.0);
        let closed: f64 = (0..big_n)
            .map(|j| if j == 0 { 1.0 } else { 4f64.powi(-((usize::BITS - 1 - j.leading_zeros()) as i32)) })
            .sum::<f64>()
            / big_n as f64;
        assert!((solver::direct_probability(&uniform, n, 1).unwrap() - closed).abs() < 1e-12);
    }
    let sys = fdm::discretize_1d(&OperatorSpec::new(OperatorKind::L2), 4).unwrap();
    let w = dwt::full_transform(&WaveletSpec::parse("db3").unwrap(), 4).unwrap();
    let p = solver::direct_approach_probability(&sys, &w.w).unwrap();
    let bw = &w.w * sys.b.normalize();
    let pre = precond::build_preconditioner(4, 1).unwrap();
    assert!((p - bw.component_mul(&pre.diag).norm_squared()).abs() < 1e-12);
}

#[test]
fn end_to_end_oracle_route() {
    let ps = system(OperatorKind::L2, 4, "db3");
    for name in SparseObservable::LIBRARY {
        let m = SparseObservable::library(name, 4).unwrap();
        let rep = solver::end_to_end_expectation(&ps, &QmiConfig::oracle(), &m, &AmplifyConfig::ideal()).unwrap();
        assert!(rep.abs_error <= 1e-6 * rep.classical_value.abs().max(1.0), "{name}: {rep:?}");
        assert_eq!(rep.operator, "L2");
    }
    // the readout identity on classically computed branches
    let m = SparseObservable::library("cos", 4).unwrap();
    let branches = solver::classical_branches(&ps).unwrap();
    let xi = solver::xi_from_branches(&branches);
    let e = observable::expectation(&solver::branch_state(&branches).unwrap(), &observable::extend(&m)).unwrap();
    let classical = solver::classical_expectation(&ps, &m).unwrap();
    assert!((xi * xi / 4.0 * e / ps.sigma_max.powi(2) - classical).abs() < 1e-10 * classical.abs().max(1.0));
}

#[test]
fn end_to_end_qpe_route_within_budget() {
    let ps = system(OperatorKind::L2, 3, "db3");
    let m = SparseObservable::library("position", 3).unwrap();
    let rep = solver::end_to_end_expectation(&ps, &QmiConfig::qpe(8), &m, &AmplifyConfig::ideal()).unwrap();
    assert!(rep.abs_error <= rep.bound, "{rep:?}");
    assert_eq!(rep.t, 8);
}

#[test]
fn singular_systems_need_mean_free_data() {
    let ps = system(OperatorKind::L1, 3, "db2");
    assert!(ps.sys.b.sum().abs() < 1e-12);
    let m = SparseObservable::library("position", 3).unwrap();
    let rep = solver::end_to_end_expectation(&ps, &QmiConfig::oracle(), &m, &AmplifyConfig::ideal()).unwrap();
    assert!(rep.abs_error < 1e-8 * rep.classical_value.abs().max(1.0), "{rep:?}");
    let u = solver::classical_solution(&ps).unwrap();
    assert!((&ps.sys.a * &u - ps.sys.b.normalize()).amax() < 1e-9);

    let sys = ps.sys.clone().with_rhs(fdm::build_rhs(RhsProfile::GaussianSamples, 8).unwrap()).unwrap();
    let w = dwt::full_transform(&WaveletSpec::parse("db2").unwrap(), 3).unwrap();
    let bad = precond::precondition(&sys, &w, &ps.precond).unwrap();
    assert!(matches!(solver::build_solution_pipeline(&bad, &QmiConfig::oracle()), Err(Error::InvalidParameter(_))));
}

#[test]
fn two_dimensional_pipeline() {
    let sys = fdm::discretize_2d_laplacian(2).unwrap();
    let w = dwt::full_transform(&WaveletSpec::parse("haar").unwrap(), 2).unwrap();
    let p = precond::build_preconditioner(2, 2).unwrap();
    let ps = precond::precondition(&sys, &w, &p).unwrap();
    let pipe = solver::build_solution_pipeline(&ps, &QmiConfig::oracle()).unwrap();
    let res = solver::amplify(&pipe, &AmplifyConfig::ideal()).unwrap();
    let want = solver::branch_state(&solver::classical_branches(&ps).unwrap()).unwrap();
    assert!(max_diff(&res.post_selected().unwrap().amps, &want.amps) < 1e-8);
}
