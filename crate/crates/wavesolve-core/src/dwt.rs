//! Periodized multi-level discrete wavelet transforms as explicit matrices.
//!
//! Row layout of `W` for the full pyramid: row 0 is the coarsest scaling
//! coefficient and rows `[2^s, 2^(s+1))` hold the detail coefficients of scale `s`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::AddAssign;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filters;
use crate::linalg::kron_power;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Daubechies,
    Symlet,
    Coiflet,
    Cdf97,
    Cdf53,
}

/// FIR filter whose tap `taps[i]` sits at integer position `offset + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub taps: Vec<f64>,
    pub offset: isize,
}

impl Filter {
    pub fn causal(taps: Vec<f64>) -> Self {
        Filter { taps, offset: 0 }
    }

    pub fn iter(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        self.taps.iter().enumerate().map(move |(i, &c)| (self.offset + i as isize, c))
    }

    pub fn at(&self, k: isize) -> f64 {
        let i = k - self.offset;
        if i < 0 || i as usize >= self.taps.len() {
            0.0
        } else {
            self.taps[i as usize]
        }
    }

    /// `g_k = (−1)^k h_{1−k}`
    pub fn quadrature_mirror(&self) -> Filter {
        let len = self.taps.len() as isize;
        let lo = 1 - (self.offset + len - 1);
        let taps = (0..len)
            .map(|i| {
                let k = lo + i;
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                sign * self.at(1 - k)
            })
            .collect();
        Filter { taps, offset: lo }
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    pub family: Family,
    pub index: usize,
    pub analysis: Filter,
    pub synthesis: Filter,
    pub orthogonal: bool,
}

impl fmt::Display for WaveletSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Daubechies => write!(f, "db{}", self.index),
            Family::Symlet => write!(f, "sym{}", self.index),
            Family::Coiflet => write!(f, "coif{}", self.index),
            Family::Cdf97 => write!(f, "cdf97"),
            Family::Cdf53 => write!(f, "cdf53"),
        }
    }
}

impl WaveletSpec {
    /// Analysis high-pass filter.
    pub fn analysis_high(&self) -> Filter {
        self.synthesis.quadrature_mirror()
    }

    /// Synthesis high-pass filter.
    pub fn synthesis_high(&self) -> Filter {
        self.analysis.quadrature_mirror()
    }

    /// Parses names like `db3`, `sym4`, `coif2`, `cdf97`, `cdf53`.
    pub fn parse(name: &str) -> Result<WaveletSpec> {
        let lower = name.to_ascii_lowercase();
        let unsupported = || Error::InvalidParameter(alloc::format!("unknown wavelet `{name}`"));
        match lower.as_str() {
            "cdf97" | "cdf9/7" | "bior4.4" => return filter_coefficients(Family::Cdf97, 0),
            "cdf53" | "cdf5/3" | "bior2.2" => return filter_coefficients(Family::Cdf53, 0),
            "haar" => return filter_coefficients(Family::Daubechies, 1),
            _ => {}
        }
        let split = lower.find(|c: char| c.is_ascii_digit()).ok_or_else(unsupported)?;
        let (fam, idx) = lower.split_at(split);
        let index: usize = idx.parse().map_err(|_| unsupported())?;
        let family = match fam {
            "db" => Family::Daubechies,
            "sym" => Family::Symlet,
            "coif" => Family::Coiflet,
            _ => return Err(unsupported()),
        };
        filter_coefficients(family, index)
    }
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Daubechies => "db",
        Family::Symlet => "sym",
        Family::Coiflet => "coif",
        Family::Cdf97 => "cdf97",
        Family::Cdf53 => "cdf53",
    }
}

pub fn filter_coefficients(family: Family, index: usize) -> Result<WaveletSpec> {
    let supported = match family {
        Family::Daubechies => (1..=8).contains(&index),
        Family::Symlet => (2..=8).contains(&index),
        Family::Coiflet => (1..=5).contains(&index),
        Family::Cdf97 | Family::Cdf53 => true,
    };
    if !supported {
        return Err(Error::UnsupportedWavelet { family: family_name(family), index });
    }
    let orth = |h: Vec<f64>| WaveletSpec {
        family,
        index,
        analysis: Filter::causal(h.clone()),
        synthesis: Filter::causal(h),
        orthogonal: true,
    };
    let spec = match family {
        Family::Daubechies => orth(filters::daubechies(index)),
        Family::Symlet => orth(filters::symlet(index)),
        Family::Coiflet => orth(filters::coiflet(index)),
        Family::Cdf97 | Family::Cdf53 => {
            let ((a, ao), (s, so)) = if family == Family::Cdf97 { filters::cdf97() } else { filters::cdf53() };
            WaveletSpec {
                family,
                index: 0,
                analysis: Filter { taps: a, offset: ao },
                synthesis: Filter { taps: s, offset: so },
                orthogonal: false,
            }
        }
    };
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct TransformMatrix {
    pub w: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub levels: usize,
    pub n: usize,
    pub spec: WaveletSpec,
}

fn wrap(i: isize, m: usize) -> usize {
    i.rem_euclid(m as isize) as usize
}

/// Multi-level periodized analysis matrix and its inverse.
pub fn build_transform_matrix(spec: &WaveletSpec, n: usize, levels: usize) -> Result<TransformMatrix> {
    if levels < 1 || levels > n {
        return Err(Error::LevelsOutOfRange { levels, n });
    }
    let big_n = 1usize << n;
    let lo = &spec.analysis;
    let hi = spec.analysis_high();
    let slo = &spec.synthesis;
    let shi = spec.synthesis_high();
    let mut w = DMatrix::<f64>::identity(big_n, big_n);
    let mut inv = DMatrix::<f64>::identity(big_n, big_n);
    for level in 0..levels {
        let m = big_n >> level;
        let half = m / 2;
        let top = w.rows(0, m).clone_owned();
        let mut next = DMatrix::<f64>::zeros(m, big_n);
        for i in 0..half {
            for (k, c) in lo.iter() {
                let src = wrap(2 * i as isize + k, m);
                let r = top.row(src) * c;
                next.row_mut(i).add_assign(&r);
            }
            for (k, c) in hi.iter() {
                let src = wrap(2 * i as isize + k, m);
                let r = top.row(src) * c;
                next.row_mut(half + i).add_assign(&r);
            }
        }
        w.rows_mut(0, m).copy_from(&next);

        let left = inv.columns(0, m).clone_owned();
        let mut next = DMatrix::<f64>::zeros(big_n, m);
        for i in 0..half {
            for (k, c) in slo.iter() {
                let src = wrap(2 * i as isize + k, m);
                next.column_mut(i).axpy(c, &left.column(src), 1.0);
            }
            for (k, c) in shi.iter() {
                let src = wrap(2 * i as isize + k, m);
                next.column_mut(half + i).axpy(c, &left.column(src), 1.0);
            }
        }
        inv.columns_mut(0, m).copy_from(&next);
    }
    Ok(TransformMatrix { w, inverse: inv, levels, n, spec: spec.clone() })
}

/// Full pyramid (`levels = n`).
pub fn full_transform(spec: &WaveletSpec, n: usize) -> Result<TransformMatrix> {
    build_transform_matrix(spec, n, n)
}

/// Default cap on the total number of qubits `n·d` for tensor powers.
pub const DEFAULT_TENSOR_CAP: usize = 12;

/// `W^{⊗d}`, indexed by `(j_1, …, j_d)` with `j_1` most significant.
pub fn transform_dd(w: &TransformMatrix, d: usize, cap_bits: usize) -> Result<DMatrix<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    let bits = w.n * d;
    if bits > cap_bits {
        return Err(Error::SizeCap { bits, cap: cap_bits });
    }
    Ok(kron_power(&w.w, d))
}

/// Same as [`transform_dd`] for the inverse transform.
pub fn inverse_dd(w: &TransformMatrix, d: usize, cap_bits: usize) -> Result<DMatrix<f64>> {
    let bits = w.n * d;
    if bits > cap_bits {
        return Err(Error::SizeCap { bits, cap: cap_bits });
    }
    Ok(kron_power(&w.inverse, d))
}

/// Cascade filter-bank analysis of a vector, output in the same layout as `W x`.
pub fn analyze(spec: &WaveletSpec, x: &DVector<f64>, levels: usize) -> Result<DVector<f64>> {
    let big_n = x.len();
    let n = crate::linalg::log2_exact(big_n)?;
    if levels < 1 || levels > n {
        return Err(Error::LevelsOutOfRange { levels, n });
    }
    let hi = spec.analysis_high();
    let mut out: Vec<f64> = x.iter().copied().collect();
    let mut m = big_n;
    for _ in 0..levels {
        let approx: Vec<f64> = out[..m].to_vec();
        let half = m / 2;
        let mut a = vec![0.0; half];
        let mut d = vec![0.0; half];
        for i in 0..half {
            for (k, c) in spec.analysis.iter() {
                a[i] += c * approx[wrap(2 * i as isize + k, m)];
            }
            for (k, c) in hi.iter() {
                d[i] += c * approx[wrap(2 * i as isize + k, m)];
            }
        }
        out[..half].copy_from_slice(&a);
        out[half..m].copy_from_slice(&d);
        m = half;
    }
    Ok(DVector::from_vec(out))
}
