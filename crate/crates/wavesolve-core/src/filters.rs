//! Filter-bank design: Daubechies and Symlet filters by spectral factorization,
//! Coiflets by Gauss-Newton refinement, CDF biorthogonal pairs.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)] // float math without std
use num_traits::Float;

/// Roots of `sum_k coeffs[k] z^k` (Durand-Kerner with Newton polishing).
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| monic.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let deriv = |z: Complex64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..=deg).rev() {
            acc = acc * z + monic[k] * k as f64;
        }
        acc
    };
    let radius = 1.0 + monic[..deg].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> =
        (0..deg).map(|k| Complex64::from_polar(radius * 0.9, 2.0 * PI * k as f64 / deg as f64 + 0.4)).collect();
    for _ in 0..2000 {
        let mut shift = 0.0f64;
        for i in 0..deg {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            shift = shift.max(step.norm());
        }
        if shift < 1e-15 {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let d = deriv(*r);
            if d.norm() > 0.0 {
                *r -= eval(*r) / d;
            }
        }
    }
    z
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Roots in `y = sin²(ω/2)` of the Daubechies polynomial `P_N(y) = Σ C(N−1+k, k) y^k`.
fn daubechies_y_roots(vanishing: usize) -> Vec<Complex64> {
    let p: Vec<f64> = (0..vanishing).map(|k| binomial(vanishing - 1 + k, k)).collect();
    poly_roots(&p)
}

/// Maps a `y` root to the `z` root of `z² − (2 − 4y) z + 1` inside the unit circle.
fn inner_z_root(y: Complex64) -> Complex64 {
    let b = Complex64::new(2.0, 0.0) - y * 4.0;
    let disc = (b * b - 4.0).sqrt();
    let r = (b + disc) / 2.0;
    if r.norm() > 1.0 {
        Complex64::new(1.0, 0.0) / r
    } else {
        r
    }
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `√2 ((1+z⁻¹)/2)^N Π (1 − r z⁻¹)/(1 − r)`, coefficients in powers of `z⁻¹`.
fn filter_from_roots(vanishing: usize, roots: &[Complex64]) -> Vec<f64> {
    let one = Complex64::new(1.0, 0.0);
    let mut poly = vec![one];
    for _ in 0..vanishing {
        poly = poly_mul(&poly, &[one * 0.5, one * 0.5]);
    }
    for &r in roots {
        poly = poly_mul(&poly, &[one / (one - r), -r / (one - r)]);
    }
    poly.iter().map(|c| SQRT_2 * c.re).collect()
}

/// Minimum-phase Daubechies filter with `2N` taps.
pub fn daubechies(vanishing: usize) -> Vec<f64> {
    let roots: Vec<Complex64> = daubechies_y_roots(vanishing).into_iter().map(inner_z_root).collect();
    filter_from_roots(vanishing, &roots)
}

/// Groups roots into real singletons and conjugate pairs.
fn conjugate_groups(roots: &[Complex64]) -> Vec<Vec<Complex64>> {
    let mut used = vec![false; roots.len()];
    let mut groups = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if roots[i].im.abs() < 1e-10 {
            groups.push(vec![roots[i]]);
            continue;
        }
        let target = roots[i].conj();
        let j = (0..roots.len())
            .filter(|&k| !used[k])
            .min_by(|&a, &b| (roots[a] - target).norm().total_cmp(&(roots[b] - target).norm()))
            .expect("complex roots come in conjugate pairs");
        used[j] = true;
        groups.push(vec![roots[i], roots[j]]);
    }
    groups
}

/// Squared deviation of the unwrapped phase response from its best linear fit.
fn phase_nonlinearity(h: &[f64]) -> f64 {
    let m = 512;
    let mut w = Vec::with_capacity(m);
    let mut ph = Vec::with_capacity(m);
    let mut prev = 0.0;
    let mut offset = 0.0;
    for i in 1..m {
        let omega = PI * i as f64 / m as f64;
        let resp = h
            .iter()
            .enumerate()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, &c)| acc + Complex64::from_polar(c, -omega * k as f64));
        let mut a = resp.arg();
        if i > 1 {
            while a + offset - prev > PI {
                offset -= 2.0 * PI;
            }
            while a + offset - prev < -PI {
                offset += 2.0 * PI;
            }
        }
        a += offset;
        prev = a;
        w.push(omega);
        ph.push(a);
    }
    let (slope, icpt) = crate::linalg::linear_fit(&w, &ph);
    w.iter().zip(&ph).map(|(x, y)| (y - slope * x - icpt).powi(2)).sum()
}

/// Least-asymmetric (Symlet) filter with `2N` taps.
pub fn symlet(vanishing: usize) -> Vec<f64> {
    let roots: Vec<Complex64> = daubechies_y_roots(vanishing).into_iter().map(inner_z_root).collect();
    let groups = conjugate_groups(&roots);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0..(1usize << groups.len()) {
        let mut chosen = Vec::with_capacity(roots.len());
        for (g, group) in groups.iter().enumerate() {
            for &r in group {
                chosen.push(if mask >> g & 1 == 0 { r } else { Complex64::new(1.0, 0.0) / r });
            }
        }
        let h = filter_from_roots(vanishing, &chosen);
        let score = phase_nonlinearity(&h);
        if best.as_ref().is_none_or(|(s, _)| score < s - 1e-12) {
            best = Some((score, h));
        }
    }
    best.expect("at least one root choice").1
}

const COIF_SEEDS: [&[f64]; 5] = [
    &[
        -0.0156557285289848,
        -0.0727326213410511,
        0.3848648565381134,
        0.8525720416423,
        0.337897670951159,
        -0.0727322757411889,
    ],
    &[
        -0.0007205494453679,
        -0.0018232088707116,
        0.0056114348194211,
        0.0236801719464464,
        -0.0594344186467388,
        -0.0764885990786692,
        0.4170051844236707,
        0.8127236354493977,
        0.3861100668229939,
        -0.0673725547222826,
        -0.0414649367819558,
        0.0163873364635998,
    ],
    &[
        -0.0000345997770640,
        -0.0000709833031381,
        0.0004662169601128,
        0.0011175187708906,
        -0.0025745176887502,
        -0.0090079761366615,
        0.0158805448636158,
        0.0345550275730615,
        -0.0823019271068856,
        -0.0717998216193117,
        0.4284834763776168,
        0.7937772226256169,
        0.405176902409615,
        -0.0611233900026726,
        -0.0657719112818552,
        0.0234526961418362,
        0.0077825964273254,
        -0.0037935128644910,
    ],
    &[
        -0.0000017849850031,
        -0.0000032596802369,
        0.0000312298758654,
        0.0000623390344610,
        -0.0002599745524878,
        -0.0005890207562444,
        0.0012665619292991,
        0.0037514361572790,
        -0.0056582866866115,
        -0.0152117315279485,
        0.0250822618448678,
        0.0393344271233433,
        -0.0962204420340021,
        -0.0666274742634348,
        0.4343860564915321,
        0.7822389309206135,
        0.415308407030491,
        -0.0560773133167630,
        -0.0812666996808907,
        0.0266823001560570,
        0.0160689439647787,
        -0.0073461663276432,
        -0.0016294920126020,
        0.0008923136685824,
    ],
    &[
        -0.0000000951765727,
        -0.0000001674428858,
        0.0000020637618516,
        0.0000037346551755,
        -0.0000213150268122,
        -0.0000413404322769,
        0.0001405411497166,
        0.0003022595818445,
        -0.0006381313431115,
        -0.0016628637021860,
        0.0024333732129107,
        0.0067641854487565,
        -0.0091642311634856,
        -0.0197617789446276,
        0.0326835742705106,
        0.0412892087544753,
        -0.1055742087143175,
        -0.0620359639693546,
        0.4379916262173834,
        0.7742896037334738,
        0.4215662066908515,
        -0.0520431631816557,
        -0.0919200105692549,
        0.0281680289738655,
        0.0234081567882734,
        -0.0101311175209033,
        -0.0041593587818186,
        0.0021782363583355,
        0.0003585896879330,
        -0.0002120808398259,
    ],
];

/// Residuals and Jacobian of the Coiflet design equations.
fn coiflet_system(h: &[f64], order: usize, center: f64) -> (DVector<f64>, DMatrix<f64>) {
    let len = h.len();
    let scale = len as f64;
    let half = len / 2;
    let rows = 1 + (half - 1) + 1 + 2 * order + (2 * order - 1);
    let mut r = DVector::zeros(rows);
    let mut jac = DMatrix::zeros(rows, len);
    let mut row = 0;
    r[row] = h.iter().sum::<f64>() - SQRT_2;
    for j in 0..len {
        jac[(row, j)] = 1.0;
    }
    row += 1;
    for m in 1..half {
        let s = 2 * m;
        r[row] = (0..len - s).map(|k| h[k] * h[k + s]).sum();
        for j in 0..len {
            let mut d = 0.0;
            if j + s < len {
                d += h[j + s];
            }
            if j >= s {
                d += h[j - s];
            }
            jac[(row, j)] = d;
        }
        row += 1;
    }
    r[row] = h.iter().map(|x| x * x).sum::<f64>() - 1.0;
    for j in 0..len {
        jac[(row, j)] = 2.0 * h[j];
    }
    row += 1;
    for p in 0..2 * order {
        for k in 0..len {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let w = sign * ((k as f64 - center) / scale).powi(p as i32);
            r[row] += w * h[k];
            jac[(row, k)] = w;
        }
        row += 1;
    }
    for p in 1..2 * order {
        for k in 0..len {
            let w = ((k as f64 - center) / scale).powi(p as i32);
            r[row] += w * h[k];
            jac[(row, k)] = w;
        }
        row += 1;
    }
    (r, jac)
}

/// Coiflet filter with `6N` taps, refined to machine precision from tabulated seeds.
pub fn coiflet(order: usize) -> Vec<f64> {
    let mut h: Vec<f64> = COIF_SEEDS[order - 1].to_vec();
    let center = (h.iter().enumerate().map(|(k, c)| k as f64 * c).sum::<f64>() / SQRT_2).round();
    for _ in 0..30 {
        let (r, jac) = coiflet_system(&h, order, center);
        if r.amax() < 1e-15 {
            break;
        }
        let step = jac.svd(true, true).solve(&(-r), 1e-14).expect("svd with both factors");
        for (x, d) in h.iter_mut().zip(step.iter()) {
            *x += d;
        }
    }
    h
}

/// Laurent polynomial: `coeffs[i]` multiplies `z^(offset + i)`.
#[derive(Debug, Clone)]
struct Laurent {
    coeffs: Vec<Complex64>,
    offset: isize,
}

impl Laurent {
    fn mul(&self, other: &Laurent) -> Laurent {
        Laurent { coeffs: poly_mul(&self.coeffs, &other.coeffs), offset: self.offset + other.offset }
    }

    /// `cos²(ω/2) = (z + 2 + z⁻¹)/4`
    fn cos_sq() -> Laurent {
        let q = Complex64::new(0.25, 0.0);
        Laurent { coeffs: vec![q, q * 2.0, q], offset: -1 }
    }

    /// `1 − y/y0` with `y = (2 − z − z⁻¹)/4`.
    fn one_minus_y_over(y0: Complex64) -> Laurent {
        let a = Complex64::new(0.25, 0.0) / y0;
        Laurent { coeffs: vec![a, Complex64::new(1.0, 0.0) - a * 2.0, a], offset: -1 }
    }
}

/// CDF 9/7 pair: (9-tap analysis low-pass, 7-tap synthesis low-pass), both centered.
pub fn cdf97() -> ((Vec<f64>, isize), (Vec<f64>, isize)) {
    let roots = daubechies_y_roots(4);
    let real = *roots.iter().min_by(|a, b| a.im.abs().total_cmp(&b.im.abs())).expect("cubic has a real root");
    let complex: Vec<Complex64> = roots.iter().copied().filter(|r| r.im.abs() > 1e-8).collect();
    let mut base = Laurent::cos_sq().mul(&Laurent::cos_sq());
    let synth = base.mul(&Laurent::one_minus_y_over(Complex64::new(real.re, 0.0)));
    for &c in &complex {
        base = base.mul(&Laurent::one_minus_y_over(c));
    }
    let real_taps = |l: &Laurent| -> (Vec<f64>, isize) { (l.coeffs.iter().map(|c| SQRT_2 * c.re).collect(), l.offset) };
    (real_taps(&base), real_taps(&synth))
}

/// LeGall 5/3 pair: (5-tap analysis low-pass, 3-tap synthesis low-pass), both centered.
pub fn cdf53() -> ((Vec<f64>, isize), (Vec<f64>, isize)) {
    let analysis = [-0.125, 0.25, 0.75, 0.25, -0.125].iter().map(|c| c * SQRT_2).collect();
    let synthesis = [0.5, 1.0, 0.5].iter().map(|c| c / SQRT_2).collect();
    ((analysis, -2), (synthesis, -1))
}
