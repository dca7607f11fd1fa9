//! Small dense helpers shared by the modules.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn spectral_norm_c(a: &CMatrix) -> f64 {
    a.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

/// `a ⊗ a ⊗ ... ⊗ a` with `d` factors.
pub fn kron_power(a: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    let mut out = a.clone();
    for _ in 1..d {
        out = out.kronecker(a);
    }
    out
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).camax()
}

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

pub fn log2_exact(n: usize) -> Result<usize> {
    if !is_power_of_two(n) {
        return Err(Error::InvalidParameter(alloc::format!("{n} is not a power of two")));
    }
    Ok(n.trailing_zeros() as usize)
}

/// Orthogonal Householder reflection sending e_0 to `v / |v|`.
pub fn householder_from_e0(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let n = v.len();
    let target = v / norm;
    let mut w = -target.clone();
    w[0] += 1.0;
    let wn = w.norm();
    if wn < 1e-14 {
        return Ok(DMatrix::identity(n, n));
    }
    w /= wn;
    Ok(DMatrix::identity(n, n) - (&w * w.transpose()) * 2.0)
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let (slope, icpt) = linear_fit(x, y);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - slope * a - icpt;
            r * r
        })
        .sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}
