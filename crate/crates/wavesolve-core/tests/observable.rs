use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavesolve_core::observable::{self, SparseObservable};
use wavesolve_core::qsim::StateVector;
use wavesolve_core::Error;

fn random_tridiagonal(n: usize, seed: u64) -> DMatrix<f64> {
    let dim = 1 << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        m[(j, j)] = rng.random_range(-1.0..1.0);
        if j + 1 < dim {
            let v = rng.random_range(-1.0..1.0);
            m[(j, j + 1)] = v;
            m[(j + 1, j)] = v;
        }
    }
    m
}

fn random_state(q: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<Complex64> =
        (0..1 << q).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn dense_form(state: &StateVector, m: &DMatrix<f64>) -> f64 {
    let v = DVector::from_vec(state.amps.clone());
    let mc = m.map(|x| Complex64::new(x, 0.0));
    (v.adjoint() * mc * &v)[(0, 0)].re
}

#[test]
fn identity_extends_to_all_ones_blocks() {
    let m = SparseObservable::identity(3).unwrap();
    let ext = observable::extend(&m);
    let want = DMatrix::from_element(4, 4, 1.0).kronecker(&DMatrix::identity(8, 8));
    assert_eq!(ext.dense(), want);
    assert_eq!((m.s, ext.sparsity()), (1, 4));
}

#[test]
fn extended_oracles_match_kronecker_construction() {
    let dense = random_tridiagonal(3, 7);
    let m = SparseObservable::from_dense("tri", &dense).unwrap();
    assert_eq!(m.dense(), dense);
    let ext = observable::extend(&m);
    let mut assembled = DMatrix::zeros(32, 32);
    for r in 0..32 {
        for l in 0..ext.sparsity() {
            if let Some(c) = ext.loc(r, l) {
                assembled[(r, c)] = ext.val(r, c);
            }
        }
    }
    assert_eq!(assembled, DMatrix::from_element(4, 4, 1.0).kronecker(&dense));
    assert_eq!(ext.dense(), assembled);
}

#[test]
fn loc_is_injective_per_row() {
    let m = SparseObservable::from_dense("tri", &random_tridiagonal(4, 3)).unwrap();
    let ext = observable::extend(&m);
    for r in 0..ext.dim() {
        let mut cols: Vec<usize> = (0..ext.sparsity()).filter_map(|l| ext.loc(r, l)).collect();
        let len = cols.len();
        cols.sort_unstable();
        cols.dedup();
        assert_eq!(cols.len(), len);
    }
}

#[test]
fn each_extended_query_costs_one_base_query() {
    let m = SparseObservable::nearest_neighbor(3).unwrap();
    let ext = observable::extend(&m);
    let mut k = 0;
    for r in [0, 5, 17, 31] {
        for l in 0..ext.sparsity() {
            let before = m.queries();
            let c = ext.loc(r, l);
            assert_eq!(m.queries().0, before.0 + 1);
            k += 1;
            if let Some(c) = c {
                ext.val(r, c);
                assert_eq!(m.queries().1, before.1 + 1);
            }
        }
    }
    assert_eq!(m.queries().0, k);
    m.reset_counters();
    assert_eq!(m.queries(), (0, 0));
}

#[test]
fn expectation_examples() {
    let id = SparseObservable::identity(3).unwrap();
    let zero = StateVector::zero(5).unwrap();
    assert!((observable::expectation(&zero, &observable::extend(&id)).unwrap() - 1.0).abs() < 1e-15);

    // ψ = (1/2) Σ |ab⟩|φ⟩ gives 4⟨φ|M|φ⟩
    let dense = random_tridiagonal(3, 11);
    let m = SparseObservable::from_dense("tri", &dense).unwrap();
    let phi = random_state(3, 5);
    let plus = StateVector::from_real(&[1.0, 1.0, 1.0, 1.0]).unwrap();
    let psi = plus.tensor(&phi).unwrap();
    let got = observable::expectation(&psi, &observable::extend(&m)).unwrap();
    assert!((got - 4.0 * dense_form(&phi, &dense)).abs() < 1e-12);
}

#[test]
fn library_observables() {
    for name in SparseObservable::LIBRARY {
        let m = SparseObservable::library(name, 3).unwrap();
        assert_eq!(m.dense(), m.dense().transpose(), "{name}");
    }
    let pos = SparseObservable::library("position", 2).unwrap().dense();
    assert_eq!(pos, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.25, 0.5, 0.75])));
    let nn = SparseObservable::nearest_neighbor(3).unwrap().dense();
    assert_eq!((nn[(0, 1)], nn[(0, 7)], nn[(3, 4)], nn[(0, 0)]), (0.5, 0.5, 0.5, 0.0));
    assert!(SparseObservable::library("spin", 3).is_err());
}

#[test]
fn asymmetric_input_is_rejected() {
    let mut m = DMatrix::identity(4, 4);
    m[(0, 1)] = 1.0;
    assert!(SparseObservable::from_dense("bad", &m).is_err());
    assert!(SparseObservable::from_rows("bad", 2, vec![vec![(5, 1.0)], vec![], vec![], vec![]]).is_err());
}

#[test]
fn state_size_is_checked() {
    let m = SparseObservable::identity(2).unwrap();
    let s = StateVector::zero(3).unwrap();
    assert!(matches!(observable::expectation(&s, &observable::extend(&m)), Err(Error::DimensionMismatch { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_traversal_matches_dense_form(n in 1usize..=6, seed in 0u64..1000) {
        let dense = random_tridiagonal(n, seed);
        let m = SparseObservable::from_dense("tri", &dense).unwrap();
        let ext = observable::extend(&m);
        let psi = random_state(n + 2, seed + 1);
        let got = observable::expectation(&psi, &ext).unwrap();
        prop_assert!((got - dense_form(&psi, &ext.dense())).abs() < 1e-10);
    }
}
