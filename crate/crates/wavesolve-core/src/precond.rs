//! Diagonal wavelet preconditioner, preconditioned systems and condition numbers.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::dwt::{self, TransformMatrix, WaveletSpec, DEFAULT_TENSOR_CAP};
use crate::error::{Error, Result};
use crate::fdm::{self, DiscretizedSystem, OperatorSpec};

/// Scale index `⌊log₂ j⌋` of a wavelet coefficient, with index 0 on scale 0.
pub fn scale_of(j: usize) -> usize {
    if j == 0 {
        0
    } else {
        (usize::BITS - 1 - j.leading_zeros()) as usize
    }
}

/// `2^{-⌊log₂ j⌋}`, equal to 1 for `j = 0`.
pub fn diag_entry(j: usize) -> f64 {
    libm::ldexp(1.0, -(scale_of(j) as i32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner {
    pub diag: DVector<f64>,
    pub n: usize,
    pub d: usize,
}

impl Preconditioner {
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.diag)
    }

    pub fn inverse_diag(&self) -> DVector<f64> {
        self.diag.map(|x| 1.0 / x)
    }
}

/// Maximum `n·d` accepted by [`build_preconditioner`].
pub const PRECONDITIONER_CAP: usize = 24;

pub fn build_preconditioner(n: usize, d: usize) -> Result<Preconditioner> {
    if n < 1 || d < 1 {
        return Err(Error::InvalidSize { n, min: 1 });
    }
    if n * d > PRECONDITIONER_CAP {
        return Err(Error::SizeCap { bits: n * d, cap: PRECONDITIONER_CAP });
    }
    let m = 1usize << n;
    let mask = m - 1;
    let diag = DVector::from_fn(1usize << (n * d), |idx, _| {
        let jmax = (0..d).map(|k| (idx >> (k * n)) & mask).max().unwrap_or(0);
        diag_entry(jmax)
    });
    Ok(Preconditioner { diag, n, d })
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelPolicy {
    None,
    /// Remove the singular direction aligned with the all-ones vector.
    DeflateConstant,
    /// Remove the singular direction aligned with the given vector.
    Deflate(DVector<f64>),
    /// Ignore singular values below `τ·σ_max`.
    Threshold(f64),
}

/// `(σ_max, σ_min)` after applying the kernel policy.
pub fn extreme_singular_values(a: &DMatrix<f64>, policy: &KernelPolicy) -> Result<(f64, f64)> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    let direction = match policy {
        KernelPolicy::DeflateConstant => Some(DVector::from_element(a.nrows(), 1.0)),
        KernelPolicy::Deflate(v) => {
            if v.len() != a.nrows() {
                return Err(Error::DimensionMismatch { expected: a.nrows(), got: v.len() });
            }
            Some(v.clone())
        }
        _ => None,
    };
    let (sv, skip) = match direction {
        Some(v) => {
            let svd = a.clone().svd(false, true);
            let vt = svd.v_t.as_ref().expect("requested right singular vectors");
            let v = v.normalize();
            let skip = (0..vt.nrows())
                .max_by(|&i, &j| {
                    let oi = vt.row(i).transpose().dot(&v).abs();
                    let oj = vt.row(j).transpose().dot(&v).abs();
                    oi.total_cmp(&oj)
                })
                .expect("nonempty matrix");
            (svd.singular_values, Some(skip))
        }
        None => (a.clone().singular_values(), None),
    };
    let smax = sv.max();
    if smax == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let floor = match policy {
        KernelPolicy::Threshold(tau) => tau * smax,
        _ => 0.0,
    };
    let smin = sv
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(_, &s)| s)
        .filter(|&s| s >= floor)
        .fold(f64::INFINITY, f64::min);
    if !smin.is_finite() || smin == 0.0 {
        return Err(Error::AllBelowThreshold);
    }
    Ok((smax, smin))
}

/// `σ_max / σ_min` under the kernel policy.
pub fn condition_number(a: &DMatrix<f64>, policy: &KernelPolicy) -> Result<f64> {
    let (smax, smin) = extreme_singular_values(a, policy)?;
    Ok(smax / smin)
}

#[derive(Debug, Clone)]
pub struct PreconditionedSystem {
    pub a_p: DMatrix<f64>,
    pub b_p: DVector<f64>,
    /// Upper bound on `‖A_p^{-1}‖` (on the complement of the kernel).
    pub alpha: f64,
    pub kappa_p: f64,
    /// `σ_max(A_p)`.
    pub sigma_max: f64,
    /// Unit null vector of `A_p` when the parent system has a known kernel.
    pub kernel: Option<DVector<f64>>,
    pub sys: DiscretizedSystem,
    /// Full (tensor-power) analysis transform.
    pub w: DMatrix<f64>,
    pub w_inverse: DMatrix<f64>,
    pub spec: WaveletSpec,
    pub precond: Preconditioner,
}

impl PreconditionedSystem {
    /// `A_p` with its null direction filled by `σ_max v vᵀ`; equal to `A_p` when there is no kernel.
    pub fn deflated(&self) -> DMatrix<f64> {
        match &self.kernel {
            Some(v) => &self.a_p + (v * v.transpose()) * self.sigma_max,
            None => self.a_p.clone(),
        }
    }

    /// Replaces `α` by a larger value (any value ≥ `‖A_p^{-1}‖` is admissible).
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        let minimal = self.kappa_p / self.sigma_max;
        if alpha < minimal * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(alloc::format!("alpha {alpha} below ‖A_p^-1‖ = {minimal}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// `B = W^{-T}`, the change of basis to synthesis wavelet coefficients (`B = W` for
    /// orthogonal wavelets).
    pub fn basis(&self) -> DMatrix<f64> {
        self.w_inverse.transpose()
    }

    /// Recomputes `P B A Bᵀ P` from the stored parts.
    pub fn recompute(&self) -> DMatrix<f64> {
        let p = self.precond.matrix();
        let b = self.basis();
        &p * &b * &self.sys.a * b.transpose() * &p
    }
}

pub fn precondition(sys: &DiscretizedSystem, w: &TransformMatrix, p: &Preconditioner) -> Result<PreconditionedSystem> {
    if w.n != sys.n || p.n != sys.n || p.d != sys.d {
        return Err(Error::DimensionMismatch { expected: sys.n, got: w.n });
    }
    let wd = dwt::transform_dd(w, sys.d, DEFAULT_TENSOR_CAP)?;
    let wd_inv = dwt::inverse_dd(w, sys.d, DEFAULT_TENSOR_CAP)?;
    if wd.nrows() != sys.big_n {
        return Err(Error::DimensionMismatch { expected: sys.big_n, got: wd.nrows() });
    }
    let pm = p.matrix();
    let basis = wd_inv.transpose();
    let a_p = &pm * &basis * &sys.a * basis.transpose() * &pm;
    let b_p = &pm * (&basis * &sys.b);
    let kernel = if sys.kernel_dim == 1 {
        let ones = DVector::from_element(sys.big_n, 1.0);
        let v = (&wd * ones).component_mul(&p.inverse_diag());
        Some(v.normalize())
    } else {
        None
    };
    let policy = match &kernel {
        Some(v) => KernelPolicy::Deflate(v.clone()),
        None => KernelPolicy::None,
    };
    let (smax, smin) = extreme_singular_values(&a_p, &policy)?;
    Ok(PreconditionedSystem {
        a_p,
        b_p,
        alpha: 1.0 / smin,
        kappa_p: smax / smin,
        sigma_max: smax,
        kernel,
        sys: sys.clone(),
        w: wd,
        w_inverse: wd_inv,
        spec: w.spec.clone(),
        precond: p.clone(),
    })
}

/// Discretizes, transforms and preconditions in one step (full pyramid).
pub fn precondition_operator(op: &OperatorSpec, spec: &WaveletSpec, n: usize) -> Result<PreconditionedSystem> {
    let sys = fdm::discretize(op, n)?;
    let w = dwt::full_transform(spec, n)?;
    let p = build_preconditioner(n, sys.d)?;
    precondition(&sys, &w, &p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub operator: String,
    pub wavelet: String,
    pub n: usize,
    pub big_n: usize,
    pub d: usize,
    pub kappa_raw: f64,
    pub kappa_precond: f64,
}

/// Raw condition number of an operator, deflating its known kernel.
pub fn raw_condition_number(op: &OperatorSpec, n: usize) -> Result<f64> {
    let sys = fdm::discretize(op, n)?;
    let policy = if sys.kernel_dim == 1 { KernelPolicy::DeflateConstant } else { KernelPolicy::None };
    condition_number(&sys.a, &policy)
}

/// One sweep cell; `kappa_raw` may be supplied to avoid recomputation.
pub fn sweep_cell(op: &OperatorSpec, spec: &WaveletSpec, n: usize, kappa_raw: Option<f64>) -> Result<SweepRow> {
    let pre = precondition_operator(op, spec, n)?;
    let kappa_raw = match kappa_raw {
        Some(k) => k,
        None => raw_condition_number(op, n)?,
    };
    Ok(SweepRow {
        operator: op.kind.name().to_string(),
        wavelet: spec.to_string(),
        n,
        big_n: pre.sys.big_n,
        d: pre.sys.d,
        kappa_raw,
        kappa_precond: pre.kappa_p,
    })
}

/// All (operator, wavelet, n) combinations in row-major order.
pub fn sweep_condition_numbers(
    operators: &[OperatorSpec],
    wavelets: &[WaveletSpec],
    n_range: core::ops::RangeInclusive<usize>,
) -> Result<Vec<SweepRow>> {
    let mut raw: BTreeMap<(String, usize), f64> = BTreeMap::new();
    let mut rows = Vec::new();
    for op in operators {
        for spec in wavelets {
            for n in n_range.clone() {
                let key = (op.kind.name().to_string(), n);
                let k = match raw.get(&key) {
                    Some(&k) => k,
                    None => {
                        let k = raw_condition_number(op, n)?;
                        raw.insert(key, k);
                        k
                    }
                };
                rows.push(sweep_cell(op, spec, n, Some(k))?);
            }
        }
    }
    Ok(rows)
}
