//! Block encodings of `A_p^{-1}`: phase estimation with a controlled rotation, and an
//! exact dilation oracle.
//!
//! The phase-estimation route handles three cases:
//! * symmetric with spectrum in `(0, 1]`: `U = exp(2πiA)`, phase 0 read as `λ = 1`;
//! * symmetric indefinite: `U = exp(iπsA)` with signed decoding;
//! * nonsymmetric: the Hermitian dilation `[[0, A], [Aᵀ, 0]]` with signed decoding and a
//!   final `X` on the dilation qubit, so that the `|0⟩` block is `A^{-1}/α`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::blockenc::{self, BlockEncoding};
use crate::error::{Error, Result};
use crate::linalg::{singular_values, CMatrix};
use crate::qsim::{Circuit, Gate, QubitRoles};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QmiRoute {
    QpeCrot,
    OracleDilation,
}

impl QmiRoute {
    pub fn name(self) -> &'static str {
        match self {
            QmiRoute::QpeCrot => "qpe_crot",
            QmiRoute::OracleDilation => "oracle_dilation",
        }
    }

    pub fn parse(s: &str) -> Option<QmiRoute> {
        match s {
            "qpe_crot" | "qpe" => Some(QmiRoute::QpeCrot),
            "oracle_dilation" | "oracle" => Some(QmiRoute::OracleDilation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QmiConfig {
    pub route: QmiRoute,
    /// Phase bits (ignored by the oracle route).
    pub t: usize,
    /// Target error; when set, `t` must reach it.
    pub eps: Option<f64>,
    /// Scale `α ≥ ‖A^{-1}‖`; defaults to `‖A^{-1}‖`.
    pub alpha: Option<f64>,
}

impl QmiConfig {
    pub fn oracle() -> QmiConfig {
        QmiConfig { route: QmiRoute::OracleDilation, t: 0, eps: None, alpha: None }
    }

    pub fn qpe(t: usize) -> QmiConfig {
        QmiConfig { route: QmiRoute::QpeCrot, t, eps: None, alpha: None }
    }
}

/// How a phase-register value is turned into an eigenvalue estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decoding {
    /// `λ̃ = k/2^t`, with `k = 0` read as `λ̃ = 1`.
    Unsigned,
    /// `λ̃ = 2k/(s·2^t)` for `k < 2^{t−1}`, else `2(k − 2^t)/(s·2^t)`, `s = 1 − 2^{1−t}`.
    Signed,
}

impl Decoding {
    /// Multiplier `c` in `U = exp(2πi c A)`.
    pub fn exponent_scale(self, t: usize) -> f64 {
        match self {
            Decoding::Unsigned => 1.0,
            Decoding::Signed => signed_scale(t) / 2.0,
        }
    }

    pub fn estimate(self, k: usize, t: usize) -> f64 {
        let m = (1usize << t) as f64;
        match self {
            Decoding::Unsigned => {
                if k == 0 {
                    1.0
                } else {
                    k as f64 / m
                }
            }
            Decoding::Signed => {
                let signed = if k < (1usize << t) / 2 { k as f64 } else { k as f64 - m };
                2.0 * signed / (signed_scale(t) * m)
            }
        }
    }

    /// Spacing between neighbouring estimates, used as `ε_QPE`.
    pub fn resolution(self, t: usize) -> f64 {
        let m = (1usize << t) as f64;
        match self {
            Decoding::Unsigned => 1.0 / m,
            Decoding::Signed => 2.0 / (signed_scale(t) * m),
        }
    }
}

fn signed_scale(t: usize) -> f64 {
    1.0 - libm::ldexp(1.0, 1 - t as i32)
}

/// Declared extraction error `2 ε_QPE / λ_min` of the phase-estimation route.
pub fn declared_eps(decoding: Decoding, t: usize, lambda_min: f64) -> f64 {
    2.0 * decoding.resolution(t) / lambda_min
}

/// Smallest `t` whose declared error reaches `eps`.
pub fn required_t(decoding: Decoding, eps: f64, lambda_min: f64) -> usize {
    (1..=40).find(|&t| declared_eps(decoding, t, lambda_min) <= eps).unwrap_or(41)
}

/// Quantum Fourier transform on `t` qubits, `|x⟩ → 2^{-t/2} Σ_y e^{2πixy/2^t}|y⟩`.
pub fn qft_circuit(t: usize) -> Result<Circuit> {
    let mut c = Circuit::new(t);
    for j in 0..t {
        c.push(Gate::h(j))?;
        for k in j + 1..t {
            let angle = 2.0 * PI / (1u64 << (k - j + 1)) as f64;
            c.push(Gate::phase(j, angle).controlled_by(&[(k, true)]))?;
        }
    }
    for j in 0..t / 2 {
        c.push(Gate::swap(j, t - 1 - j))?;
    }
    Ok(c)
}

/// Phase estimation of `u` writing `t` bits. Layout `[phase (t), target]`.
pub fn qpe_circuit(u: &CMatrix, t: usize) -> Result<Circuit> {
    if t < 1 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    let m = crate::linalg::log2_exact(u.nrows())?;
    let mut c = Circuit::new(t + m);
    let target: Vec<usize> = (t..t + m).collect();
    for j in 0..t {
        c.push(Gate::h(j))?;
    }
    let mut power = u.clone();
    for j in (0..t).rev() {
        // qubit j carries weight 2^{t−1−j}
        let label = format!("U^{}", 1u64 << (t - 1 - j));
        c.push(Gate::unitary(power.clone(), &label, &target).controlled_by(&[(j, true)]))?;
        if j > 0 {
            power = &power * &power;
        }
    }
    let qft = qft_circuit(t)?;
    let map: Vec<usize> = (0..t).collect();
    c.append_mapped(&qft.inverse(), &map)?;
    c.roles = QubitRoles { qpe: (0..t).collect(), data: target, ..QubitRoles::default() };
    Ok(c)
}

/// `cos θ_k = 1/(α λ̃_k)`, clipped to `[−1, 1]`; a zero estimate maps to amplitude 0.
pub fn crot_angles(t: usize, alpha: f64, decoding: Decoding) -> Vec<f64> {
    (0..1usize << t)
        .map(|k| {
            let lam = decoding.estimate(k, t);
            let f = if lam == 0.0 { 0.0 } else { (1.0 / (alpha * lam)).clamp(-1.0, 1.0) };
            libm::acos(f)
        })
        .collect()
}

/// Uniformly controlled rotation of the flag. Layout `[flag, phase (t)]`.
pub fn crot_circuit(t: usize, alpha: f64, decoding: Decoding) -> Result<Circuit> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let mut c = Circuit::new(t + 1);
    let select: Vec<usize> = (1..=t).collect();
    c.push(Gate::multiplexed_ry(0, &select, crot_angles(t, alpha, decoding)))?;
    c.roles = QubitRoles { flag: alloc::vec![0], qpe: select, ..QubitRoles::default() };
    Ok(c)
}

/// `exp(2πi c H)` for a real symmetric `H`.
fn exp_symmetric(h: &DMatrix<f64>, c: f64) -> CMatrix {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let q = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let d = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, 2.0 * PI * c * l)));
    &q * d * q.adjoint()
}

fn is_symmetric(a: &DMatrix<f64>) -> bool {
    (a - a.transpose()).amax() <= 1e-12 * a.amax().max(1.0)
}

/// Spectral data used by both routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumInfo {
    pub norm: f64,
    /// Smallest singular value (`1/‖A^{-1}‖`).
    pub sigma_min: f64,
    pub symmetric: bool,
    pub positive: bool,
}

pub fn spectrum_info(a: &DMatrix<f64>) -> Result<SpectrumInfo> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
    }
    let sv = singular_values(a);
    let norm = sv[0];
    let sigma_min = sv[sv.len() - 1];
    let symmetric = is_symmetric(a);
    let positive = symmetric && nalgebra::SymmetricEigen::new(a.clone()).eigenvalues.min() > 0.0;
    if norm > 1.0 + 1e-9 {
        return Err(Error::Spectrum(format!("‖A‖ = {norm} exceeds 1")));
    }
    if !(sigma_min > 1e-14 * norm.max(1.0)) {
        return Err(Error::Spectrum("matrix is singular; deflate its kernel first".into()));
    }
    Ok(SpectrumInfo { norm, sigma_min, symmetric, positive })
}

fn resolve_alpha(cfg: &QmiConfig, sigma_min: f64) -> Result<f64> {
    let minimal = 1.0 / sigma_min;
    match cfg.alpha {
        None => Ok(minimal),
        Some(a) if a >= minimal * (1.0 - 1e-12) && a.is_finite() => Ok(a),
        Some(a) => Err(Error::InvalidParameter(format!("alpha {a} below ‖A^-1‖ = {minimal}"))),
    }
}

/// Block encoding of `A^{-1}` for `‖A‖ ≤ 1`; `eps` of the result is `α·ε`, where `ε`
/// bounds the normalized extraction error `‖block − A^{-1}/α‖`.
pub fn build_qmi(a: &DMatrix<f64>, cfg: &QmiConfig) -> Result<BlockEncoding> {
    let info = spectrum_info(a)?;
    let alpha = resolve_alpha(cfg, info.sigma_min)?;
    match cfg.route {
        QmiRoute::OracleDilation => {
            let inv = a.clone().try_inverse().ok_or(Error::Spectrum("matrix is singular".into()))?;
            blockenc::dilation_block_encoding_labeled(&inv, alpha, "QMI")
        }
        QmiRoute::QpeCrot => build_qpe_crot(a, &info, alpha, cfg),
    }
}

fn build_qpe_crot(a: &DMatrix<f64>, info: &SpectrumInfo, alpha: f64, cfg: &QmiConfig) -> Result<BlockEncoding> {
    let t = cfg.t;
    if t < 1 {
        return Err(Error::InvalidParameter("qpe_crot needs t >= 1".into()));
    }
    let decoding = if info.positive { Decoding::Unsigned } else { Decoding::Signed };
    if let Some(eps) = cfg.eps {
        let required = required_t(decoding, eps, info.sigma_min);
        if t < required {
            return Err(Error::InsufficientPrecision { t, required });
        }
    }
    let n = crate::linalg::log2_exact(a.nrows())?;
    let dilate = !info.symmetric;
    let h = if dilate {
        let m = a.nrows();
        let mut h = DMatrix::zeros(2 * m, 2 * m);
        h.view_mut((0, m), (m, m)).copy_from(a);
        h.view_mut((m, 0), (m, m)).copy_from(&a.transpose());
        h
    } else {
        a.clone()
    };
    let u = exp_symmetric(&h, decoding.exponent_scale(t));
    let qpe = qpe_circuit(&u, t)?;
    let crot = crot_circuit(t, alpha, decoding)?;

    // [flag, phase (t), dilation qubit?, data (n)]
    let extra = usize::from(dilate);
    let a_count = 1 + t + extra;
    let q = a_count + n;
    let mut c = Circuit::new(q);
    let qpe_map: Vec<usize> = (1..q).collect();
    let crot_map: Vec<usize> = (0..=t).collect();
    c.append_mapped(&qpe, &qpe_map)?;
    c.append_mapped(&crot, &crot_map)?;
    c.append_mapped(&qpe.inverse(), &qpe_map)?;
    if dilate {
        c.push(Gate::x(1 + t))?;
    }
    c.roles = QubitRoles {
        flag: alloc::vec![0],
        qpe: (1..=t).collect(),
        data: (a_count..q).collect(),
        ..QubitRoles::default()
    };
    let eps = declared_eps(decoding, t, info.sigma_min);
    Ok(BlockEncoding::standard(c, a_count, n, alpha, alpha * eps))
}

/// One row of the QMI report.
#[derive(Debug, Clone, PartialEq)]
pub struct QmiReport {
    pub route: QmiRoute,
    pub t: usize,
    pub alpha: f64,
    /// Bound on `‖block − A^{-1}/α‖`.
    pub declared_eps: f64,
    pub measured_err: f64,
}

/// Builds the encoding and measures `‖block − A^{-1}/α‖` by extraction.
pub fn qmi_report(a: &DMatrix<f64>, cfg: &QmiConfig) -> Result<(BlockEncoding, QmiReport)> {
    let be = build_qmi(a, cfg)?;
    let inv = a.clone().try_inverse().ok_or(Error::Spectrum("matrix is singular".into()))?;
    let measured = be.error_against(&inv)? / be.alpha;
    let report = QmiReport {
        route: cfg.route,
        t: if cfg.route == QmiRoute::QpeCrot { cfg.t } else { 0 },
        alpha: be.alpha,
        declared_eps: be.eps / be.alpha,
        measured_err: measured,
    };
    Ok((be, report))
}
