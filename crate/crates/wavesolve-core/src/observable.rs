//! Sparse observables given by location/value oracles, the extended observable on the
//! two select qubits, and expectation values computed by oracle traversal.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::Cell;

use nalgebra::DMatrix;
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::qsim::{StateVector, C64};

/// Real symmetric `2^n × 2^n` matrix with at most `s` nonzeros per row, exposed through
/// the location and value oracles. Queries are counted per instance.
#[derive(Debug, Clone)]
pub struct SparseObservable {
    pub name: String,
    pub n: usize,
    pub s: usize,
    rows: Vec<Vec<(usize, f64)>>,
    loc_queries: Cell<usize>,
    val_queries: Cell<usize>,
}

impl SparseObservable {
    /// Builds from per-row `(column, value)` lists; duplicate columns are summed.
    pub fn from_rows(name: &str, n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let dim = 1usize << n;
        if rows.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: rows.len() });
        }
        let mut clean = Vec::with_capacity(dim);
        for row in rows {
            let mut row: Vec<(usize, f64)> = row;
            if let Some(&(k, _)) = row.iter().find(|(k, _)| *k >= dim) {
                return Err(Error::DimensionMismatch { expected: dim, got: k });
            }
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (k, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == k => last.1 += v,
                    _ => merged.push((k, v)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            clean.push(merged);
        }
        for (j, row) in clean.iter().enumerate() {
            for &(k, v) in row {
                let back = lookup(&clean[k], j);
                if (back - v).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!("observable not symmetric at ({j}, {k})")));
                }
            }
        }
        let s = clean.iter().map(Vec::len).max().unwrap_or(0).max(1);
        Ok(SparseObservable {
            name: name.to_string(),
            n,
            s,
            rows: clean,
            loc_queries: Cell::new(0),
            val_queries: Cell::new(0),
        })
    }

    pub fn from_dense(name: &str, m: &DMatrix<f64>) -> Result<Self> {
        let n = crate::linalg::log2_exact(m.nrows())?;
        if m.ncols() != m.nrows() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let rows = (0..m.nrows())
            .map(|j| (0..m.ncols()).filter(|&k| m[(j, k)] != 0.0).map(|k| (k, m[(j, k)])).collect())
            .collect();
        Self::from_rows(name, n, rows)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diagonal("identity", &alloc::vec![1.0; 1usize << n])
    }

    pub fn diagonal(name: &str, values: &[f64]) -> Result<Self> {
        let n = crate::linalg::log2_exact(values.len())?;
        let rows = values.iter().enumerate().map(|(j, &v)| alloc::vec![(j, v)]).collect();
        Self::from_rows(name, n, rows)
    }

    /// Diagonal observable sampling `f` on the grid `x_j = j / 2^n`.
    pub fn grid_function(name: &str, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dim = 1usize << n;
        let values: Vec<f64> = (0..dim).map(|j| f(j as f64 / dim as f64)).collect();
        Self::diagonal(name, &values)
    }

    /// Periodic nearest-neighbour correlator `(1/2)(S + Sᵀ)`.
    pub fn nearest_neighbor(n: usize) -> Result<Self> {
        let dim = 1usize << n;
        let rows = (0..dim).map(|j| alloc::vec![((j + 1) % dim, 0.5), ((j + dim - 1) % dim, 0.5)]).collect();
        Self::from_rows("neighbor", n, rows)
    }

    /// Library observables by name: `identity`, `position` (the grid coordinate `x`),
    /// `cos` (`cos 2πx`) and `neighbor`.
    pub fn library(name: &str, n: usize) -> Result<Self> {
        match name {
            "identity" => Self::identity(n),
            "position" => Self::grid_function("position", n, |x| x),
            "cos" => Self::grid_function("cos", n, |x| libm::cos(2.0 * core::f64::consts::PI * x)),
            "neighbor" => Self::nearest_neighbor(n),
            other => Err(Error::InvalidParameter(format!("unknown observable {other}"))),
        }
    }

    pub const LIBRARY: [&'static str; 4] = ["identity", "position", "cos", "neighbor"];

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    /// Column of the `l`-th nonzero in row `j`, or `None` past the end of the row.
    pub fn loc(&self, j: usize, l: usize) -> Option<usize> {
        self.loc_queries.set(self.loc_queries.get() + 1);
        self.rows[j].get(l).map(|e| e.0)
    }

    pub fn val(&self, j: usize, k: usize) -> f64 {
        self.val_queries.set(self.val_queries.get() + 1);
        lookup(&self.rows[j], k)
    }

    /// `(loc, val)` query counts so far.
    pub fn queries(&self) -> (usize, usize) {
        (self.loc_queries.get(), self.val_queries.get())
    }

    pub fn reset_counters(&self) {
        self.loc_queries.set(0);
        self.val_queries.set(0);
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (j, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                m[(j, k)] = v;
            }
        }
        m
    }
}

fn lookup(row: &[(usize, f64)], k: usize) -> f64 {
    row.binary_search_by_key(&k, |e| e.0).map(|i| row[i].1).unwrap_or(0.0)
}

/// `M′ = Σ_{abcd} |ab⟩⟨cd| ⊗ M` on two select qubits and the data register.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedObservable<'a> {
    pub base: &'a SparseObservable,
}

pub fn extend(m: &SparseObservable) -> ExtendedObservable<'_> {
    ExtendedObservable { base: m }
}

impl ExtendedObservable<'_> {
    pub fn dim(&self) -> usize {
        4 * self.base.dim()
    }

    pub fn sparsity(&self) -> usize {
        4 * self.base.s
    }

    /// Location oracle: row `(a, b, j)`, entry `l = (2c + d)·s + l₀` maps to column
    /// `(2c + d)N + loc(j, l₀)`.
    pub fn loc(&self, row: usize, l: usize) -> Option<usize> {
        let big_n = self.base.dim();
        let j = row % big_n;
        let (cd, l0) = (l / self.base.s, l % self.base.s);
        if cd >= 4 {
            return None;
        }
        self.base.loc(j, l0).map(|k| cd * big_n + k)
    }

    pub fn val(&self, row: usize, col: usize) -> f64 {
        let big_n = self.base.dim();
        self.base.val(row % big_n, col % big_n)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        DMatrix::from_element(4, 4, 1.0).kronecker(&self.base.dense())
    }
}

/// `⟨ψ|M′|ψ⟩` by traversing the oracles of `M′`.
pub fn expectation(state: &StateVector, m: &ExtendedObservable<'_>) -> Result<f64> {
    if state.amps.len() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: state.amps.len() });
    }
    let mut acc = C64::new(0.0, 0.0);
    for (r, &amp) in state.amps.iter().enumerate() {
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        let mut row = C64::new(0.0, 0.0);
        for l in 0..m.sparsity() {
            if let Some(col) = m.loc(r, l) {
                row += state.amps[col] * m.val(r, col);
            }
        }
        acc += amp.conj() * row;
    }
    let scale =
        state.norm().powi(2).max(1.0) * m.base.rows.iter().flatten().map(|e| e.1.abs()).fold(0.0, f64::max).max(1.0);
    if acc.im.abs() > 1e-10 * scale {
        return Err(Error::ImaginaryPart(acc.im));
    }
    Ok(acc.re)
}
