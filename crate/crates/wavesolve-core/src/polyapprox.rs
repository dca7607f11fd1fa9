//! Odd polynomial approximations of `1/(2cx)` on `[−1, −1/c] ∪ [1/c, 1]`, built from a
//! Chebyshev series for the inverse and a smoothed step, with evaluation on scalars and
//! matrices.
//!
//! The step is `S(x) = S₀(x)^m`, where `S₀` is the Chebyshev interpolant of
//! `(1 + erf(k(x − 1/2c)))/2` truncated by a coefficient-tail bound. The power keeps
//! `S` small enough on the negative side to cancel the growth of the inverse series
//! outside its own interval, while `S₀` stays at moderate accuracy.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::error::{Error, Result};

/// Points used by the grid checks.
pub const GRID_POINTS: usize = 10_000;

const MAX_POWER: usize = 12;
const MAX_NODES: usize = 16_384;

/// Chebyshev series `Σ a_ℓ T_ℓ(s·x + t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebySeries {
    pub coeffs: Vec<f64>,
    pub scale: f64,
    pub shift: f64,
}

impl ChebySeries {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, self.scale * x + self.shift)
    }

    /// Three-term recurrence with a matrix argument.
    pub fn eval_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let x = a * self.scale + &id * self.shift;
        let mut b1 = DMatrix::<f64>::zeros(n, n);
        let mut b2 = DMatrix::<f64>::zeros(n, n);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = &x * &b1 * 2.0 - &b2 + &id * c;
            b2 = b1;
            b1 = b0;
        }
        &id * self.coeffs.first().copied().unwrap_or(0.0) + &x * &b1 - b2
    }
}

/// Clenshaw summation of `Σ a_ℓ T_ℓ(x)`.
pub fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// Series for `1/(2x)` on `[1/c, 1]` through `x′ = 2x − z₀`, `z₀ = 1 + 2/c`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseSeries {
    pub series: ChebySeries,
    pub c: f64,
    pub z0: f64,
    pub ell_max: usize,
    /// Sup-norm target against `1/(2x)`.
    pub target: f64,
}

impl InverseSeries {
    pub fn eval(&self, x: f64) -> f64 {
        self.series.eval(x)
    }

    /// Decay ratio `1/(z₀ + √(z₀² − 1))` of the coefficients.
    pub fn ratio(&self) -> f64 {
        1.0 / (self.z0 + (self.z0 * self.z0 - 1.0).sqrt())
    }

    /// Largest deviation from `1/(2x)` on a uniform grid of `[1/c, 1]`.
    pub fn grid_error(&self, points: usize) -> f64 {
        grid(1.0 / self.c, 1.0, points).map(|x| (self.eval(x) - 0.5 / x).abs()).fold(0.0, f64::max)
    }
}

fn check_params(c: f64, eps: f64) -> Result<()> {
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c must be >= 1, got {c}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// `⌈2 + 2 log₂(1/ε)⌉`, the truncation from the `√2` ratio bound.
pub fn log_rule_ell_max(eps: f64) -> usize {
    (2.0 + 2.0 * (1.0 / eps).log2()).ceil() as usize
}

/// Bound on the truncation error after `ell_max` terms:
/// `(2/√(z₀²−1)) ρ^{−ℓ_max} / (ρ − 1)` with `ρ = z₀ + √(z₀² − 1)`.
pub fn tail_bound(c: f64, ell_max: usize) -> f64 {
    let z0 = 1.0 + 2.0 / c;
    let r = (z0 * z0 - 1.0).sqrt();
    let rho = z0 + r;
    2.0 / r * rho.powi(-(ell_max as i32)) / (rho - 1.0)
}

/// Smallest truncation whose tail bound is at most `ε/2`.
pub fn tail_ell_max(c: f64, eps: f64) -> usize {
    let mut l = 1;
    while tail_bound(c, l) > eps / 2.0 {
        l += 1;
    }
    l
}

/// Series truncated at `ell_max` terms.
pub fn inverse_series_truncated(c: f64, eps: f64, ell_max: usize) -> Result<InverseSeries> {
    check_params(c, eps)?;
    let z0 = 1.0 + 2.0 / c;
    let r = (z0 * z0 - 1.0).sqrt();
    let q = 1.0 / (z0 + r);
    let mut coeffs = vec![1.0 / r];
    let mut term = 2.0 / r;
    for _ in 1..=ell_max {
        term *= -q;
        coeffs.push(term);
    }
    Ok(InverseSeries { series: ChebySeries { coeffs, scale: 2.0, shift: -z0 }, c, z0, ell_max, target: eps / 2.0 })
}

/// Series for `1/(2x)` within `ε/2` on `[1/c, 1]`. The truncation is the larger of
/// [`log_rule_ell_max`] and [`tail_ell_max`].
pub fn inverse_series(c: f64, eps: f64) -> Result<InverseSeries> {
    check_params(c, eps)?;
    inverse_series_truncated(c, eps, log_rule_ell_max(eps).max(tail_ell_max(c, eps)))
}

/// Smallest truncation meeting `ε/2` on the check grid.
pub fn minimal_inverse_degree(c: f64, eps: f64) -> Result<usize> {
    check_params(c, eps)?;
    let full = inverse_series(c, eps)?;
    for l in 0..=full.ell_max {
        if inverse_series_truncated(c, eps, l)?.grid_error(GRID_POINTS) <= eps / 2.0 {
            return Ok(l);
        }
    }
    Ok(full.ell_max)
}

/// `S(x) = (σ·S₀(x))^m` approximating the unit step away from `(−1/c, 1/c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPolynomial {
    /// `σ·S₀` on `[−1, 1]`.
    pub base: ChebySeries,
    pub power: usize,
    /// Erf steepness `k`.
    pub steepness: f64,
    pub center: f64,
    pub c: f64,
    /// Tolerance on `[1/c, 1]` (distance to 1).
    pub pos_tol: f64,
    /// Tolerance on `[−1, −1/c]` (distance to 0).
    pub neg_tol: f64,
}

impl StepPolynomial {
    pub fn degree(&self) -> usize {
        self.power * self.base.degree()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.base.eval(x).powi(self.power as i32)
    }

    /// `P^sign = 2 S − 1`.
    pub fn sign(&self, x: f64) -> f64 {
        2.0 * self.eval(x) - 1.0
    }

    pub fn eval_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let s0 = self.base.eval_matrix(a);
        let mut out = s0.clone();
        for _ in 1..self.power {
            out = &out * &s0;
        }
        out
    }

    /// `(max 1 − S on [1/c,1], max |S| on [−1,−1/c], max |S| on [−1,1])` over grids.
    pub fn grid_check(&self, points: usize) -> (f64, f64, f64) {
        let lo = 1.0 / self.c;
        let pos = grid(lo, 1.0, points).map(|x| (1.0 - self.eval(x)).abs()).fold(0.0, f64::max);
        let neg = grid(-1.0, -lo, points).map(|x| self.eval(x).abs()).fold(0.0, f64::max);
        let all = grid(-1.0, 1.0, points + 1).map(|x| self.eval(x).abs()).fold(0.0, f64::max);
        (pos, neg, all)
    }
}

/// `z > 0` with `erfc(z) = d`, by Newton's method on `ln erfc`.
pub fn erfc_inv(d: f64) -> f64 {
    let mut z = (-d.ln()).sqrt();
    for _ in 0..60 {
        let e = libm::erfc(z);
        if e <= 0.0 {
            z *= 0.9;
            continue;
        }
        let g = e.ln() - d.ln();
        let dg = -2.0 / PI.sqrt() * (-z * z).exp() / e;
        let step = g / dg;
        z -= step;
        if step.abs() < 1e-15 * z.abs().max(1.0) {
            break;
        }
    }
    z
}

/// Chebyshev interpolation coefficients of `f` at `n` first-kind nodes.
pub fn chebyshev_interpolate(f: impl Fn(f64) -> f64, n: usize) -> Vec<f64> {
    let values: Vec<f64> = (0..n).map(|i| f((PI * (i as f64 + 0.5) / n as f64).cos())).collect();
    // cos(π j (2i+1) / 2n) from a table of quarter-period multiples
    let period = 4 * n;
    let table: Vec<f64> = (0..period).map(|t| (PI * t as f64 / (2 * n) as f64).cos()).collect();
    let mut coeffs = vec![0.0; n];
    for (j, cj) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        let mut idx = j % period;
        let step = (2 * j) % period;
        for v in &values {
            acc += v * table[idx];
            idx = (idx + step) % period;
        }
        *cj = 2.0 * acc / n as f64;
    }
    coeffs[0] /= 2.0;
    coeffs
}

struct StepCandidate {
    coeffs: Vec<f64>,
    tail: Vec<f64>,
    degree: usize,
    power: usize,
    k: f64,
    d: f64,
}

fn step_candidate(c: f64, power: usize, pos_tol: f64, neg_tol: f64) -> Option<StepCandidate> {
    let d = (pos_tol / (2.0 * power as f64)).min(neg_tol.powf(1.0 / power as f64));
    if !(d > 1e-13) || d >= 1.0 {
        return None;
    }
    let center = 0.5 / c;
    let k = erfc_inv(d) / center;
    let nodes = (16.0 * k).max(256.0).min(MAX_NODES as f64) as usize;
    let nodes = nodes.next_power_of_two();
    let coeffs = chebyshev_interpolate(|x| 0.5 * (1.0 + libm::erf(k * (x - center))), nodes);
    // tail[j] = Σ_{i ≥ j} |a_i|
    let mut tail = vec![0.0; nodes + 1];
    for j in (0..nodes).rev() {
        tail[j] = tail[j + 1] + coeffs[j].abs();
    }
    let degree = (0..nodes).find(|&j| tail[j + 1] <= d / 2.0)?;
    Some(StepCandidate { coeffs, tail, degree, power, k, d })
}

/// Step polynomial with separate tolerances on the positive and negative sides,
/// verified on the check grid.
pub fn step_polynomial_with(c: f64, pos_tol: f64, neg_tol: f64) -> Result<StepPolynomial> {
    if !(c >= 1.0) || !(pos_tol > 0.0 && pos_tol < 1.0) || !(neg_tol > 0.0 && neg_tol < 1.0) {
        return Err(Error::InvalidParameter(format!("step tolerances {pos_tol}, {neg_tol} with c = {c}")));
    }
    let mut best: Option<StepCandidate> = None;
    let mut worse = 0;
    for power in 1..=MAX_POWER {
        let Some(cand) = step_candidate(c, power, pos_tol, neg_tol) else { continue };
        match &best {
            Some(b) if b.degree * b.power <= cand.degree * cand.power => {
                worse += 1;
                if worse >= 2 {
                    break;
                }
            }
            _ => {
                worse = 0;
                best = Some(cand);
            }
        }
    }
    let cand = best.ok_or_else(|| Error::Verification("no step polynomial within the degree cap".into()))?;
    let center = 0.5 / c;
    let mut degree = cand.degree;
    loop {
        if (cand.power * degree) % 2 == 1 && degree + 1 < cand.coeffs.len() {
            degree += 1;
        }
        let scale = 1.0 / (1.0 + cand.tail[degree + 1]);
        let coeffs: Vec<f64> = cand.coeffs[..=degree].iter().map(|a| a * scale).collect();
        let step = StepPolynomial {
            base: ChebySeries { coeffs, scale: 1.0, shift: 0.0 },
            power: cand.power,
            steepness: cand.k,
            center,
            c,
            pos_tol,
            neg_tol,
        };
        let (pos, neg, all) = step.grid_check(GRID_POINTS);
        if pos <= pos_tol && neg <= neg_tol && all <= 1.0 + 1e-12 {
            return Ok(step);
        }
        if degree + 1 >= cand.coeffs.len() {
            return Err(Error::Verification(format!(
                "step polynomial misses its tolerances at the degree cap (d = {:e})",
                cand.d
            )));
        }
        degree = (degree + degree / 10 + 1).min(cand.coeffs.len() - 1);
    }
}

/// Even-degree step polynomial within `ε` of the unit step on `[−1, −1/c] ∪ [1/c, 1]`.
pub fn step_polynomial(c: f64, eps: f64) -> Result<StepPolynomial> {
    check_params(c, eps)?;
    step_polynomial_with(c, eps, eps)
}

/// The odd combination `P^mi(x) = (h(x) − h(−x))/(2c)` with `h = P^inv · S`.
#[derive(Debug, Clone, PartialEq)]
pub struct InversePolynomial {
    pub inverse: InverseSeries,
    pub step: StepPolynomial,
    pub c: f64,
    pub eps: f64,
}

impl InversePolynomial {
    pub fn degree(&self) -> usize {
        self.inverse.ell_max + self.step.degree()
    }

    fn h(&self, x: f64) -> f64 {
        2.0 * self.inverse.eval(x) * self.step.eval(x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.h(x) - self.h(-x)) / (2.0 * self.c)
    }

    fn h_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        self.inverse.series.eval_matrix(a) * self.step.eval_matrix(a) * 2.0
    }

    /// `P^mi(A)` for a positive definite symmetric `A` by matrix recurrences.
    fn eval_matrix_positive(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        (self.h_matrix(a) - self.h_matrix(&(-a))) / (2.0 * self.c)
    }

    pub fn report(&self) -> PolyReport {
        let lo = 1.0 / self.c;
        let sup_error =
            grid(lo, 1.0, GRID_POINTS).map(|x| (self.eval(x) - 0.5 / (self.c * x)).abs()).fold(0.0, f64::max);
        let sym: Vec<f64> = grid(-1.0, 1.0, GRID_POINTS + 1).collect();
        let max_abs = sym.iter().map(|&x| self.eval(x).abs()).fold(0.0, f64::max);
        let oddness = sym.iter().map(|&x| (self.eval(x) + self.eval(-x)).abs()).fold(0.0, f64::max);
        PolyReport { degree: self.degree(), sup_error, max_abs, oddness, target: self.eps / self.c }
    }
}

/// Grid certificate of an [`InversePolynomial`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyReport {
    pub degree: usize,
    /// Against `1/(2cx)` on `[1/c, 1]`.
    pub sup_error: f64,
    /// `max |P^mi|` on `[−1, 1]`.
    pub max_abs: f64,
    pub oddness: f64,
    /// `ε/c`.
    pub target: f64,
}

/// The odd polynomial `(ε/c)`-close to `1/(2cx)` on `[−1, −1/c] ∪ [1/c, 1]`.
pub fn odd_inverse_polynomial(c: f64, eps: f64) -> Result<InversePolynomial> {
    check_params(c, eps)?;
    let inverse = inverse_series(c, eps)?;
    // h(−x) must stay negligible where P^inv is evaluated far outside its interval
    let growth = 2.0 * inverse.eval(-1.0).abs().max(inverse.eval(-1.0 / c).abs());
    let neg_tol = (0.02 * eps / growth).min(eps / (2.0 * c));
    let step = step_polynomial_with(c, eps / (2.0 * c), neg_tol)?;
    Ok(InversePolynomial { inverse, step, c, eps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    /// Chebyshev recurrences on the matrix (definite symmetric input).
    Recurrence,
    /// Scalar evaluation on the eigenvalues (indefinite symmetric input).
    Spectral,
    /// Singular value transform `V P(Σ) Uᵀ` (nonsymmetric input).
    SingularValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixInverse {
    pub value: DMatrix<f64>,
    /// `‖P^mi(A) − (1/2c) A^{-1}‖₂`.
    pub error: f64,
    pub method: EvalMethod,
    pub poly: PolyReport,
}

/// `P^mi(A) ≈ (1/2c) A^{-1}` for `A` with singular values in `[1/c, 1]`.
pub fn matrix_inverse_polynomial(a: &DMatrix<f64>, c: f64, eps: f64) -> Result<MatrixInverse> {
    check_params(c, eps)?;
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let tol = 1e-10;
    let in_range = |s: f64| s >= 1.0 / c - tol && s <= 1.0 + tol;
    let poly = odd_inverse_polynomial(c, eps)?;
    let symmetric = (a - a.transpose()).amax() <= 1e-12 * a.amax().max(1.0);
    let (value, method) = if symmetric {
        let eig = SymmetricEigen::new(a.clone());
        if let Some(bad) = eig.eigenvalues.iter().find(|l| !in_range(l.abs())) {
            return Err(Error::Spectrum(format!("eigenvalue {bad} outside ±[1/{c}, 1]")));
        }
        if eig.eigenvalues.iter().all(|&l| l > 0.0) {
            (poly.eval_matrix_positive(a), EvalMethod::Recurrence)
        } else if eig.eigenvalues.iter().all(|&l| l < 0.0) {
            (-poly.eval_matrix_positive(&(-a)), EvalMethod::Recurrence)
        } else {
            let d = eig.eigenvalues.map(|l| poly.eval(l));
            (&eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose(), EvalMethod::Spectral)
        }
    } else {
        let svd = a.clone().svd(true, true);
        if let Some(bad) = svd.singular_values.iter().find(|s| !in_range(**s)) {
            return Err(Error::Spectrum(format!("singular value {bad} outside [1/{c}, 1]")));
        }
        let u = svd.u.as_ref().expect("left singular vectors requested");
        let vt = svd.v_t.as_ref().expect("right singular vectors requested");
        let d = svd.singular_values.map(|s| poly.eval(s));
        (vt.transpose() * DMatrix::from_diagonal(&d) * u.transpose(), EvalMethod::SingularValue)
    };
    let inv = a.clone().try_inverse().ok_or(Error::Spectrum("matrix is singular".into()))?;
    let error = crate::linalg::spectral_norm(&(&value - inv / (2.0 * c)));
    Ok(MatrixInverse { value, error, method, poly: poly.report() })
}

/// One row of a degree sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeRow {
    pub eps: f64,
    /// Smallest inverse-series truncation meeting `ε/2` on the grid.
    pub inverse_degree: usize,
    pub step_degree: usize,
    pub total_degree: usize,
}

pub fn degree_sweep(c: f64, eps_values: &[f64]) -> Result<Vec<DegreeRow>> {
    eps_values
        .iter()
        .map(|&eps| {
            let p = odd_inverse_polynomial(c, eps)?;
            Ok(DegreeRow {
                eps,
                inverse_degree: minimal_inverse_degree(c, eps)?,
                step_degree: p.step.degree(),
                total_degree: p.degree(),
            })
        })
        .collect()
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let den = points.saturating_sub(1).max(1) as f64;
    (0..points).map(move |i| if points == 1 { lo } else { lo + (hi - lo) * i as f64 / den })
}
