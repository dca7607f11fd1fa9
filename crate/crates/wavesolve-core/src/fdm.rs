//! Periodic finite-difference discretizations on `[0, 1)^d` with `h = 1/N`.

use alloc::sync::Arc;
use core::fmt;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;

pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// `d²/dx²`
    L1,
    /// `d²/dx² − d/dx + 1`
    L2,
    /// `−d/dx(cosh(x/4) d/dx) + eˣ`
    L3,
    /// `∂²/∂x² + ∂²/∂y²`
    Laplace2D,
    /// `−d/dx(p d/dx) + q`
    SturmLiouville1D,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::L1 => "L1",
            OperatorKind::L2 => "L2",
            OperatorKind::L3 => "L3",
            OperatorKind::Laplace2D => "Laplace2D",
            OperatorKind::SturmLiouville1D => "SturmLiouville1D",
        }
    }

    pub fn dim(self) -> usize {
        if self == OperatorKind::Laplace2D {
            2
        } else {
            1
        }
    }

    pub fn is_symmetric(self) -> bool {
        self != OperatorKind::L2
    }
}

#[derive(Clone)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    p: Option<Coefficient>,
    q: Option<Coefficient>,
}

impl fmt::Debug for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorSpec").field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind) -> Self {
        match kind {
            OperatorKind::L3 => {
                OperatorSpec { kind, p: Some(Arc::new(|x: f64| (x / 4.0).cosh())), q: Some(Arc::new(|x: f64| x.exp())) }
            }
            _ => OperatorSpec { kind, p: None, q: None },
        }
    }

    pub fn sturm_liouville(p: Coefficient, q: Coefficient) -> Self {
        OperatorSpec { kind: OperatorKind::SturmLiouville1D, p: Some(p), q: Some(q) }
    }

    /// Parses `L1`, `L2`, `L3` or `Laplace2D` (case-insensitive).
    pub fn parse(name: &str) -> Option<Self> {
        let kind = match name.to_ascii_lowercase().as_str() {
            "l1" => OperatorKind::L1,
            "l2" => OperatorKind::L2,
            "l3" => OperatorKind::L3,
            "laplace2d" | "2d" => OperatorKind::Laplace2D,
            _ => return None,
        };
        Some(OperatorSpec::new(kind))
    }
}

#[derive(Debug, Clone)]
pub struct DiscretizedSystem {
    pub kind: OperatorKind,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Qubits per dimension.
    pub n: usize,
    pub d: usize,
    /// Total number of unknowns, `2^(n d)`.
    pub big_n: usize,
    /// Factor the matrix was divided by in [`rescale_to_unit_norm`] (1 before rescaling).
    pub norm_scale: f64,
    /// Dimension of the known null space (the constant vector for L1 and Laplace2D).
    pub kernel_dim: usize,
}

impl DiscretizedSystem {
    pub fn with_rhs(mut self, b: DVector<f64>) -> Result<Self> {
        if b.len() != self.big_n {
            return Err(Error::DimensionMismatch { expected: self.big_n, got: b.len() });
        }
        self.b = b;
        Ok(self)
    }

    /// Right-hand side scaled to unit length.
    pub fn b_normalized(&self) -> Result<DVector<f64>> {
        let nb = self.b.norm();
        if nb == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(&self.b / nb)
    }
}

fn check_n(n: usize) -> Result<()> {
    if !(2..=12).contains(&n) {
        return Err(Error::InvalidSize { n, min: 2 });
    }
    Ok(())
}

/// 3-point periodic second difference `(u_{i-1} − 2u_i + u_{i+1}) / h²`.
pub fn second_difference(big_n: usize) -> DMatrix<f64> {
    let h2 = (big_n * big_n) as f64;
    let mut t = DMatrix::zeros(big_n, big_n);
    for i in 0..big_n {
        t[(i, i)] -= 2.0 * h2;
        t[(i, (i + 1) % big_n)] += h2;
        t[(i, (i + big_n - 1) % big_n)] += h2;
    }
    t
}

/// Periodic central first difference `(u_{i+1} − u_{i-1}) / 2h`.
pub fn central_difference(big_n: usize) -> DMatrix<f64> {
    let s = big_n as f64 / 2.0;
    let mut t = DMatrix::zeros(big_n, big_n);
    for i in 0..big_n {
        t[(i, (i + 1) % big_n)] += s;
        t[(i, (i + big_n - 1) % big_n)] -= s;
    }
    t
}

fn flux_form(big_n: usize, p: &Coefficient, q: &Coefficient) -> Result<DMatrix<f64>> {
    let h = 1.0 / big_n as f64;
    let mut pm = alloc::vec::Vec::with_capacity(big_n);
    for i in 0..big_n {
        let x = (i as f64 + 0.5) * h;
        let v = p(x);
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::CoefficientBound { name: "p", x, value: v });
        }
        pm.push(v);
    }
    let mut a = DMatrix::zeros(big_n, big_n);
    let inv_h2 = 1.0 / (h * h);
    for i in 0..big_n {
        let x = i as f64 * h;
        let qv = q(x);
        if !(qv.is_finite() && qv >= 0.0) {
            return Err(Error::CoefficientBound { name: "q", x, value: qv });
        }
        let right = pm[i];
        let left = pm[(i + big_n - 1) % big_n];
        a[(i, i)] += (left + right) * inv_h2 + qv;
        a[(i, (i + 1) % big_n)] -= right * inv_h2;
        a[(i, (i + big_n - 1) % big_n)] -= left * inv_h2;
    }
    Ok(a)
}

fn default_rhs(big_n: usize, kernel_dim: usize) -> DVector<f64> {
    let profile = if kernel_dim == 1 { RhsProfile::ConstantFree } else { RhsProfile::GaussianSamples };
    build_rhs(profile, big_n).expect("gaussian profile is never constant")
}

pub fn discretize_1d(spec: &OperatorSpec, n: usize) -> Result<DiscretizedSystem> {
    check_n(n)?;
    let big_n = 1usize << n;
    let (a, kernel_dim) = match spec.kind {
        OperatorKind::L1 => (second_difference(big_n), 1),
        OperatorKind::L2 => (second_difference(big_n) - central_difference(big_n) + DMatrix::identity(big_n, big_n), 0),
        OperatorKind::L3 | OperatorKind::SturmLiouville1D => {
            let (p, q) = match (&spec.p, &spec.q) {
                (Some(p), Some(q)) => (p, q),
                _ => return Err(Error::WrongKind("Sturm-Liouville operator without coefficients")),
            };
            (flux_form(big_n, p, q)?, 0)
        }
        OperatorKind::Laplace2D => return Err(Error::WrongKind("Laplace2D")),
    };
    Ok(DiscretizedSystem {
        kind: spec.kind,
        a,
        b: default_rhs(big_n, kernel_dim),
        n,
        d: 1,
        big_n,
        norm_scale: 1.0,
        kernel_dim,
    })
}

pub fn discretize_2d_laplacian(n: usize) -> Result<DiscretizedSystem> {
    check_n(n)?;
    let m = 1usize << n;
    let t = second_difference(m);
    let id = DMatrix::<f64>::identity(m, m);
    let a = t.kronecker(&id) + id.kronecker(&t);
    let g = build_rhs(RhsProfile::GaussianSamples, m)?;
    let mut b = g.kronecker(&g);
    let mean = b.mean();
    b.add_scalar_mut(-mean);
    Ok(DiscretizedSystem { kind: OperatorKind::Laplace2D, a, b, n, d: 2, big_n: m * m, norm_scale: 1.0, kernel_dim: 1 })
}

/// Builds the discretization for any kind, dispatching on its dimension.
pub fn discretize(spec: &OperatorSpec, n: usize) -> Result<DiscretizedSystem> {
    match spec.kind {
        OperatorKind::Laplace2D => discretize_2d_laplacian(n),
        _ => discretize_1d(spec, n),
    }
}

pub fn rescale_to_unit_norm(mut sys: DiscretizedSystem) -> Result<DiscretizedSystem> {
    let s = spectral_norm(&sys.a);
    if s == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    sys.a /= s;
    sys.b /= s;
    sys.norm_scale *= s;
    Ok(sys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsProfile {
    Delta,
    GaussianSamples,
    ConstantFree,
}

pub fn gaussian_sample(x: f64) -> f64 {
    (-(x - 0.5) * (x - 0.5) / 0.02).exp()
}

pub fn build_rhs(profile: RhsProfile, big_n: usize) -> Result<DVector<f64>> {
    if big_n < 2 {
        return Err(Error::InvalidSize { n: big_n, min: 2 });
    }
    let h = 1.0 / big_n as f64;
    let v = match profile {
        RhsProfile::Delta => {
            let mut e = DVector::zeros(big_n);
            e[0] = 1.0;
            e
        }
        RhsProfile::GaussianSamples => DVector::from_fn(big_n, |i, _| gaussian_sample(i as f64 * h)),
        RhsProfile::ConstantFree => {
            let mut g = DVector::from_fn(big_n, |i, _| gaussian_sample(i as f64 * h));
            let mean = g.mean();
            g.add_scalar_mut(-mean);
            g
        }
    };
    if v.amax() < 1e-14 {
        return Err(Error::ZeroVector);
    }
    Ok(v)
}
