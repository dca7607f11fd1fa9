use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use wavesolve_core::dwt::WaveletSpec;
use wavesolve_core::fdm::{OperatorKind, OperatorSpec};
use wavesolve_core::linalg;
use wavesolve_core::polyapprox::{self, EvalMethod, GRID_POINTS};
use wavesolve_core::precond;
use wavesolve_core::Error;

#[test]
fn single_point_interval() {
    let s = polyapprox::inverse_series(1.0, 1e-3).unwrap();
    assert!((s.eval(1.0) - 0.5).abs() <= 1e-3);
    assert!(s.grid_error(GRID_POINTS) <= s.target);
}

#[test]
fn truncation_for_c32() {
    let eps = 1e-3;
    assert_eq!(polyapprox::log_rule_ell_max(eps), 22);
    let s = polyapprox::inverse_series(32.0, eps).unwrap();
    assert_eq!(s.ell_max, 29);
    assert!(s.grid_error(GRID_POINTS) <= 5e-4);
    let short = polyapprox::inverse_series_truncated(32.0, eps, 22).unwrap();
    assert!(short.grid_error(GRID_POINTS) > 5e-4);
}

#[test]
fn coefficients_decay_geometrically() {
    for c in [2.0, 8.0, 32.0, 100.0] {
        let s = polyapprox::inverse_series(c, 1e-4).unwrap();
        let q = s.ratio();
        let z0: f64 = 1.0 + 2.0 / c;
        assert!((q - 1.0 / (z0 + (z0 * z0 - 1.0).sqrt())).abs() < 1e-15);
        for w in s.series.coeffs[1..].windows(2) {
            assert!((w[1] / w[0] + q).abs() < 1e-12, "c = {c}");
        }
        assert!(s.grid_error(GRID_POINTS) <= s.target, "c = {c}");
    }
}

#[test]
fn tail_truncation_is_sufficient_for_large_c() {
    for c in [64.0, 256.0] {
        let s = polyapprox::inverse_series(c, 1e-3).unwrap();
        assert_eq!(s.ell_max, polyapprox::tail_ell_max(c, 1e-3));
        assert!(s.grid_error(GRID_POINTS) <= 5e-4, "c = {c}");
    }
}

#[test]
fn invalid_parameters() {
    assert!(matches!(polyapprox::inverse_series(0.5, 1e-3), Err(Error::InvalidParameter(_))));
    assert!(matches!(polyapprox::inverse_series(4.0, 0.0), Err(Error::InvalidParameter(_))));
    assert!(matches!(polyapprox::inverse_series(4.0, 1.5), Err(Error::InvalidParameter(_))));
    assert!(polyapprox::step_polynomial(f64::NAN, 1e-3).is_err());
}

#[test]
fn step_examples() {
    for (c, eps) in [(4.0, 1e-2), (32.0, 1e-3)] {
        let p = polyapprox::step_polynomial(c, eps).unwrap();
        assert!((p.eval(1.0) - 1.0).abs() <= eps);
        assert!(p.eval(-1.0 / c).abs() <= eps);
        assert!((p.sign(1.0) - 1.0).abs() <= 2.0 * eps);
        let (pos, neg, all) = p.grid_check(GRID_POINTS);
        assert!(pos <= eps && neg <= eps);
        assert!(all <= 1.0 + 1e-12);
        assert_eq!(p.degree() % 2, 0);
    }
}

#[test]
fn erfc_inverse_round_trip() {
    for d in [0.5, 1e-3, 1e-8, 1e-14] {
        let z = polyapprox::erfc_inv(d);
        assert!((libm::erfc(z) / d - 1.0).abs() < 1e-10, "d = {d}");
    }
}

#[test]
fn chebyshev_interpolation_reproduces_polynomials() {
    // 4x³ − 3x = T₃
    let c = polyapprox::chebyshev_interpolate(|x| 4.0 * x * x * x - 3.0 * x + 0.5, 16);
    let mut want = vec![0.0; 16];
    want[0] = 0.5;
    want[3] = 1.0;
    for (a, b) in c.iter().zip(&want) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!((polyapprox::clenshaw(&want, 0.3) - (4.0 * 0.027 - 0.9 + 0.5)).abs() < 1e-15);
}

#[test]
fn combined_polynomial_for_c32() {
    let p = polyapprox::odd_inverse_polynomial(32.0, 1e-3).unwrap();
    let r = p.report();
    assert!(r.sup_error <= r.target, "{r:?}");
    assert!(r.max_abs <= 1.0, "{r:?}");
    assert!(r.oddness <= 1e-12, "{r:?}");
    assert_eq!(r.degree, p.inverse.ell_max + p.step.degree());
}

#[test]
fn combined_polynomial_small_c() {
    for c in [1.0, 2.0, 4.0] {
        let r = polyapprox::odd_inverse_polynomial(c, 1e-3).unwrap().report();
        assert!(r.sup_error <= r.target && r.max_abs <= 1.0 && r.oddness <= 1e-12, "c = {c}: {r:?}");
    }
}

#[test]
fn identity_matrix() {
    let eps = 1e-3;
    let m = polyapprox::matrix_inverse_polynomial(&DMatrix::identity(4, 4), 2.0, eps).unwrap();
    assert_eq!(m.method, EvalMethod::Recurrence);
    assert!((&m.value - DMatrix::identity(4, 4) * 0.25).amax() <= eps / 2.0);
}

#[test]
fn diagonal_matrix() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.25]));
    let m = polyapprox::matrix_inverse_polynomial(&a, 4.0, 1e-3).unwrap();
    assert!(m.error <= 2.5e-4, "{}", m.error);
}

#[test]
fn preconditioned_l2_matrix() {
    let eps = 1e-3;
    let sys =
        precond::precondition_operator(&OperatorSpec::new(OperatorKind::L2), &WaveletSpec::parse("db3").unwrap(), 5)
            .unwrap();
    let a = polyapprox_test_matrix(&sys.a_p);
    let c = sys.kappa_p.ceil();
    let m = polyapprox::matrix_inverse_polynomial(&a, c, eps).unwrap();
    assert_eq!(m.method, EvalMethod::SingularValue);
    assert!(m.error <= eps / c, "{} vs {}", m.error, eps / c);
}

fn polyapprox_test_matrix(a_p: &DMatrix<f64>) -> DMatrix<f64> {
    a_p / linalg::spectral_norm(a_p)
}

#[test]
fn symmetric_definite_matrices_use_recurrence() {
    let sys =
        precond::precondition_operator(&OperatorSpec::new(OperatorKind::L3), &WaveletSpec::parse("db3").unwrap(), 3)
            .unwrap();
    let a = polyapprox_test_matrix(&sys.a_p);
    let a = (&a + a.transpose()) / 2.0;
    let c = 32.0;
    let m = polyapprox::matrix_inverse_polynomial(&a, c, 1e-3).unwrap();
    assert_eq!(m.method, EvalMethod::Recurrence);
    assert!(m.error <= 1e-3 / c, "{}", m.error);
    let neg = polyapprox::matrix_inverse_polynomial(&(-&a), c, 1e-3).unwrap();
    assert!((&neg.value + &m.value).amax() < 1e-12);
}

#[test]
fn indefinite_matrices_use_eigenvalues() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5, 0.25, -0.125]));
    let m = polyapprox::matrix_inverse_polynomial(&a, 8.0, 1e-3).unwrap();
    assert_eq!(m.method, EvalMethod::Spectral);
    assert!(m.error <= 1e-3 / 8.0);
}

#[test]
fn spectrum_violation_is_reported() {
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.1]));
    assert!(matches!(polyapprox::matrix_inverse_polynomial(&a, 4.0, 1e-3), Err(Error::Spectrum(_))));
    let big = DMatrix::identity(2, 2) * 1.5;
    assert!(matches!(polyapprox::matrix_inverse_polynomial(&big, 4.0, 1e-3), Err(Error::Spectrum(_))));
    assert!(polyapprox::matrix_inverse_polynomial(&DMatrix::identity(2, 3), 4.0, 1e-3).is_err());
}

#[test]
fn degree_grows_logarithmically() {
    let eps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let rows = polyapprox::degree_sweep(32.0, &eps).unwrap();
    let xs: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    for key in [|r: &polyapprox::DegreeRow| r.total_degree, |r: &polyapprox::DegreeRow| r.inverse_degree] {
        let ys: Vec<f64> = rows.iter().map(|r| key(r) as f64).collect();
        let (slope, _) = linalg::linear_fit(&xs, &ys);
        let r2 = linalg::r_squared(&xs, &ys);
        assert!(slope > 0.0 && r2 >= 0.98, "slope {slope}, r2 {r2}, {ys:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn inverse_series_meets_target(c in 1.0f64..200.0, k in 1i32..8) {
        let eps = 10f64.powi(-k);
        let s = polyapprox::inverse_series(c, eps).unwrap();
        prop_assert!(s.grid_error(2000) <= s.target);
    }

    #[test]
    fn clenshaw_matches_matrix_recurrence(x in -1.0f64..1.0, seed in 0u64..100) {
        let s = polyapprox::inverse_series(4.0 + seed as f64, 1e-3).unwrap().series;
        let m = s.eval_matrix(&DMatrix::from_element(1, 1, x));
        prop_assert!((m[(0, 0)] - s.eval(x)).abs() <= 1e-9 * s.eval(x).abs().max(1.0));
    }
}
