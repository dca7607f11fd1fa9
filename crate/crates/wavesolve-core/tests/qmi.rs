use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use wavesolve_core::dwt::WaveletSpec;
use wavesolve_core::fdm::{OperatorKind, OperatorSpec};
use wavesolve_core::linalg::CMatrix;
use wavesolve_core::precond;
use wavesolve_core::qmi::{self, Decoding, QmiConfig, QmiRoute};
use wavesolve_core::qsim::{self, StateVector};
use wavesolve_core::Error;

fn l2_normalized(n: usize) -> DMatrix<f64> {
    let pre =
        precond::precondition_operator(&OperatorSpec::new(OperatorKind::L2), &WaveletSpec::parse("db3").unwrap(), n)
            .unwrap();
    pre.a_p / pre.sigma_max
}

#[test]
fn qft_matches_dft() {
    for t in 1..=5 {
        let m = 1usize << t;
        let u = qsim::circuit_to_matrix(&qmi::qft_circuit(t).unwrap(), 14).unwrap();
        let dft =
            CMatrix::from_fn(m, m, |y, x| C::from_polar(1.0 / (m as f64).sqrt(), 2.0 * PI * (x * y) as f64 / m as f64));
        assert!((u - dft).iter().all(|z| z.norm() < 1e-12), "t={t}");
    }
}

fn phase_register_distribution(lambda: f64, t: usize) -> Vec<f64> {
    let u = CMatrix::from_diagonal(&DVector::from_vec(vec![C::from_polar(1.0, 2.0 * PI * lambda), C::new(1.0, 0.0)]));
    let c = qmi::qpe_circuit(&u, t).unwrap();
    let out = qsim::run(&c, StateVector::zero(t + 1).unwrap()).unwrap();
    qsim::project(&out, &[(t, false)]).iter().map(|a| a.norm_sqr()).collect()
}

#[test]
fn qpe_exact_phase() {
    let p = phase_register_distribution(0.25, 2);
    assert!((p[1] - 1.0).abs() < 1e-12);
}

#[test]
fn qpe_inexact_phase_matches_analytic_distribution() {
    let t = 4;
    let m = 16.0;
    let lambda = 1.0 / 3.0;
    let p = phase_register_distribution(lambda, t);
    let modal = (0..16).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
    assert_eq!(modal, (lambda * m).round() as usize);
    for k in 0..16 {
        let d = lambda * m - k as f64;
        let want = ((PI * d).sin() / (m * (PI * d / m).sin())).powi(2);
        assert!((p[k] - want).abs() < 1e-12);
    }
}

#[test]
fn crot_amplitudes() {
    let angles = qmi::crot_angles(3, 1.0, Decoding::Unsigned);
    assert!(angles[0].abs() < 1e-15);
    let c = qmi::crot_circuit(1, 4.0, Decoding::Unsigned).unwrap();
    // phase register |1⟩ on one bit encodes λ̃ = 1/2
    let out = qsim::run(&c, StateVector::basis(2, 1).unwrap()).unwrap();
    assert!((out.amps[1].re - 0.5).abs() < 1e-15);
    let signed = qmi::crot_angles(3, 1.0, Decoding::Signed);
    assert!((signed[0] - PI / 2.0).abs() < 1e-15);
    assert!(signed[7].cos() < 0.0);
    assert!(qmi::crot_circuit(2, 0.0, Decoding::Unsigned).is_err());
}

#[test]
fn decoding_tables() {
    assert_eq!(Decoding::Unsigned.estimate(0, 3), 1.0);
    assert_eq!(Decoding::Unsigned.estimate(4, 3), 0.5);
    let s = 1.0 - 0.25;
    assert!((Decoding::Signed.estimate(1, 3) - 2.0 / (s * 8.0)).abs() < 1e-15);
    assert!((Decoding::Signed.estimate(7, 3) + 2.0 / (s * 8.0)).abs() < 1e-15);
}

#[test]
fn identity_either_route() {
    let id = DMatrix::identity(4, 4);
    for cfg in [QmiConfig::oracle(), QmiConfig::qpe(2)] {
        let (be, rep) = qmi::qmi_report(&id, &cfg).unwrap();
        assert_eq!(be.alpha, 1.0);
        assert!(rep.measured_err < 1e-10, "{:?}", cfg.route);
    }
}

#[test]
fn representable_diagonal_is_exact() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.25, 1.0]));
    let (be, rep) = qmi::qmi_report(&a, &QmiConfig::qpe(2)).unwrap();
    assert_eq!(be.a, 3);
    assert!(rep.measured_err < 1e-9, "{}", rep.measured_err);
    let block = be.extract().unwrap();
    assert!((block[(2, 2)].re - 1.0).abs() < 1e-9);
    assert!((block[(1, 1)].re - 0.5).abs() < 1e-9);
}

#[test]
fn oracle_route_is_exact() {
    for n in 3..=5 {
        let a = l2_normalized(n);
        let (be, rep) = qmi::qmi_report(&a, &QmiConfig::oracle()).unwrap();
        assert_eq!(be.a, 1);
        assert!(rep.measured_err <= 1e-10);
        assert_eq!(be.circuit.oracle_uses("QMI"), 1);
    }
}

#[test]
fn larger_alpha_is_accepted() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
    let cfg = QmiConfig { alpha: Some(5.0), ..QmiConfig::oracle() };
    let (be, rep) = qmi::qmi_report(&a, &cfg).unwrap();
    assert_eq!(be.alpha, 5.0);
    assert!(rep.measured_err < 1e-10);
    let cfg = QmiConfig { alpha: Some(1.0), ..QmiConfig::oracle() };
    assert!(qmi::build_qmi(&a, &cfg).is_err());
    let cfg = QmiConfig { alpha: Some(8.0), ..QmiConfig::qpe(4) };
    let (_, rep) = qmi::qmi_report(&a, &cfg).unwrap();
    assert!(rep.measured_err <= rep.declared_eps);
}

#[test]
fn spectrum_is_checked() {
    let big = DMatrix::identity(2, 2) * 2.0;
    assert!(matches!(qmi::build_qmi(&big, &QmiConfig::oracle()), Err(Error::Spectrum(_))));
    let singular = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
    assert!(matches!(qmi::build_qmi(&singular, &QmiConfig::qpe(3)), Err(Error::Spectrum(_))));
}

#[test]
fn precision_invariant() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25]));
    let cfg = QmiConfig { eps: Some(0.01), ..QmiConfig::qpe(4) };
    let required = qmi::required_t(Decoding::Unsigned, 0.01, 0.25);
    assert_eq!(required, (2.0f64 * 4.0 / 0.01).log2().ceil() as usize);
    assert_eq!(qmi::build_qmi(&a, &cfg).unwrap_err(), Error::InsufficientPrecision { t: 4, required });
}

#[test]
fn qpe_error_on_symmetric_positive_system() {
    let pre =
        precond::precondition_operator(&OperatorSpec::new(OperatorKind::L3), &WaveletSpec::parse("db3").unwrap(), 3)
            .unwrap();
    let a = pre.a_p / pre.sigma_max;
    let mut last = f64::INFINITY;
    for t in [4, 6, 8] {
        let (_, rep) = qmi::qmi_report(&a, &QmiConfig::qpe(t)).unwrap();
        assert!(rep.measured_err <= rep.declared_eps, "t={t}: {} > {}", rep.measured_err, rep.declared_eps);
        last = last.min(rep.measured_err);
    }
    assert!(last < 0.2);
}

#[test]
fn qpe_on_nonsymmetric_l2() {
    let a = l2_normalized(4);
    let mut errs = Vec::new();
    for t in [4, 6, 8, 10] {
        let (be, rep) = qmi::qmi_report(&a, &QmiConfig::qpe(t)).unwrap();
        assert_eq!(be.a, t + 2);
        assert!(rep.measured_err <= rep.declared_eps, "t={t}: {} > {}", rep.measured_err, rep.declared_eps);
        errs.push(rep.measured_err);
    }
    for w in errs.windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn qmi_ancillas_return_clean_on_success_branch() {
    // HHL composition on a diagonal system: flag-0 branch carries A^{-1}x/α with the
    // phase register back at zero.
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.25, 0.5]));
    let be = qmi::build_qmi(&a, &QmiConfig::qpe(2)).unwrap();
    let x = StateVector::from_real(&[0.5, 0.5, 0.5, 0.5]).unwrap();
    let s = StateVector::zero(be.a).unwrap().tensor(&x).unwrap();
    let out = qsim::run(&be.circuit, s).unwrap();
    let pattern: Vec<(usize, bool)> = be.ancillas.iter().map(|&q| (q, false)).collect();
    let good = qsim::project(&out, &pattern);
    let want = [0.5 / 4.0, 1.0 / 4.0, 2.0 / 4.0, 1.0 / 4.0];
    for (g, w) in good.iter().zip(want) {
        assert!((g.re - w).abs() < 1e-12);
    }
}

#[test]
fn route_names_round_trip() {
    for route in [QmiRoute::QpeCrot, QmiRoute::OracleDilation] {
        assert_eq!(QmiRoute::parse(route.name()), Some(route));
    }
    assert_eq!(QmiRoute::parse("hhl"), None);
}
