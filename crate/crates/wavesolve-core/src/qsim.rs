//! Dense statevector simulator.
//!
//! Qubit 0 is the most significant bit of a basis index.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{unitarity_defect, CMatrix};

pub type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Largest state the simulator will allocate.
pub const MAX_STATE_QUBITS: usize = 24;
/// Default cap for [`circuit_to_matrix`].
pub const DEFAULT_MATRIX_CAP: usize = 14;

/// Dense unitary applied as a single oracle gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub matrix: CMatrix,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    H,
    X,
    Z,
    /// `diag(1, e^{iθ})`
    Phase(f64),
    /// `exp(iθZ) = diag(e^{iθ}, e^{−iθ})`
    RotZ(f64),
    /// `exp(−iθY)`, sending `|0⟩` to `cos θ|0⟩ + sin θ|1⟩`.
    RotY(f64),
    Swap,
    /// X on the target with two positive controls.
    Toffoli,
    /// `diag(1, e^{iθ})` on the target, conditioned on the controls.
    MultiControlledPhase(f64),
    UnitaryBlock(Arc<Block>),
    /// `RotY(angles[s])` on `targets[0]`, where `s` is the value of `targets[1..]`.
    MultiplexedRotY(Arc<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    /// `(qubit, polarity)`: the gate acts when the qubit equals the polarity.
    pub controls: Vec<(usize, bool)>,
}

impl Gate {
    fn single(kind: GateKind, q: usize) -> Gate {
        Gate { kind, targets: vec![q], controls: Vec::new() }
    }

    pub fn h(q: usize) -> Gate {
        Gate::single(GateKind::H, q)
    }

    pub fn x(q: usize) -> Gate {
        Gate::single(GateKind::X, q)
    }

    pub fn z(q: usize) -> Gate {
        Gate::single(GateKind::Z, q)
    }

    pub fn phase(q: usize, theta: f64) -> Gate {
        Gate::single(GateKind::Phase(theta), q)
    }

    pub fn rz(q: usize, theta: f64) -> Gate {
        Gate::single(GateKind::RotZ(theta), q)
    }

    pub fn ry(q: usize, theta: f64) -> Gate {
        Gate::single(GateKind::RotY(theta), q)
    }

    pub fn cx(c: usize, t: usize) -> Gate {
        Gate { kind: GateKind::X, targets: vec![t], controls: vec![(c, true)] }
    }

    pub fn toffoli(c1: usize, c2: usize, t: usize) -> Gate {
        Gate { kind: GateKind::Toffoli, targets: vec![t], controls: vec![(c1, true), (c2, true)] }
    }

    pub fn swap(a: usize, b: usize) -> Gate {
        Gate { kind: GateKind::Swap, targets: vec![a, b], controls: Vec::new() }
    }

    pub fn mc_phase(controls: &[(usize, bool)], t: usize, theta: f64) -> Gate {
        Gate { kind: GateKind::MultiControlledPhase(theta), targets: vec![t], controls: controls.to_vec() }
    }

    pub fn unitary(matrix: CMatrix, label: &str, targets: &[usize]) -> Gate {
        Gate {
            kind: GateKind::UnitaryBlock(Arc::new(Block { matrix, label: label.to_string() })),
            targets: targets.to_vec(),
            controls: Vec::new(),
        }
    }

    pub fn multiplexed_ry(target: usize, select: &[usize], angles: Vec<f64>) -> Gate {
        let mut targets = vec![target];
        targets.extend_from_slice(select);
        Gate { kind: GateKind::MultiplexedRotY(Arc::new(angles)), targets, controls: Vec::new() }
    }

    pub fn controlled_by(mut self, controls: &[(usize, bool)]) -> Gate {
        self.controls.extend_from_slice(controls);
        self
    }

    pub fn adjoint(&self) -> Gate {
        let kind = match &self.kind {
            GateKind::Phase(t) => GateKind::Phase(-t),
            GateKind::RotZ(t) => GateKind::RotZ(-t),
            GateKind::RotY(t) => GateKind::RotY(-t),
            GateKind::MultiControlledPhase(t) => GateKind::MultiControlledPhase(-t),
            GateKind::UnitaryBlock(b) => {
                let mut label = b.label.clone();
                if let Some(stripped) = label.strip_suffix('†') {
                    label = stripped.to_string();
                } else {
                    label.push('†');
                }
                GateKind::UnitaryBlock(Arc::new(Block { matrix: b.matrix.adjoint(), label }))
            }
            GateKind::MultiplexedRotY(a) => GateKind::MultiplexedRotY(Arc::new(a.iter().map(|x| -x).collect())),
            k => k.clone(),
        };
        Gate { kind, targets: self.targets.clone(), controls: self.controls.clone() }
    }

    /// Census label of the gate.
    pub fn label(&self) -> String {
        let nc = self.controls.len();
        match &self.kind {
            GateKind::H => "h".into(),
            GateKind::X => match nc {
                0 => "x".into(),
                1 => "cnot".into(),
                2 => "toffoli".into(),
                _ => "mcx".into(),
            },
            GateKind::Toffoli => "toffoli".into(),
            GateKind::Z => {
                if nc == 0 {
                    "z".into()
                } else {
                    "cz".into()
                }
            }
            GateKind::Phase(_) | GateKind::MultiControlledPhase(_) => match nc {
                0 => "phase".into(),
                1 => "cphase".into(),
                _ => "mcphase".into(),
            },
            GateKind::RotZ(_) => "rz".into(),
            GateKind::RotY(_) => "ry".into(),
            GateKind::Swap => "swap".into(),
            GateKind::UnitaryBlock(b) => alloc::format!("unitary:{}", b.label),
            GateKind::MultiplexedRotY(_) => "mux_ry".into(),
        }
    }

    fn validate(&self, q: usize) -> Result<()> {
        let mut seen = vec![false; q];
        for &t in self.targets.iter().chain(self.controls.iter().map(|(c, _)| c)) {
            if t >= q {
                return Err(Error::QubitOutOfRange { index: t, qubits: q });
            }
            if seen[t] {
                return Err(Error::OverlappingQubits(t));
            }
            seen[t] = true;
        }
        let want_targets = match &self.kind {
            GateKind::Swap => 2,
            GateKind::UnitaryBlock(b) => {
                let k = b.matrix.nrows();
                if b.matrix.ncols() != k || k != 1usize << self.targets.len() {
                    return Err(Error::DimensionMismatch { expected: 1 << self.targets.len(), got: k });
                }
                self.targets.len()
            }
            GateKind::MultiplexedRotY(a) => {
                if a.len() != 1usize << (self.targets.len() - 1) {
                    return Err(Error::DimensionMismatch { expected: 1 << (self.targets.len() - 1), got: a.len() });
                }
                self.targets.len()
            }
            _ => 1,
        };
        if self.targets.len() != want_targets || self.targets.is_empty() {
            return Err(Error::DimensionMismatch { expected: want_targets, got: self.targets.len() });
        }
        if self.kind == GateKind::Toffoli && self.controls.len() != 2 {
            return Err(Error::InvalidParameter("Toffoli needs two controls".into()));
        }
        Ok(())
    }
}

/// Roles of the qubits in a circuit; informational except for `clean_ancillas`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QubitRoles {
    pub flag: Vec<usize>,
    pub select: Vec<usize>,
    pub qpe: Vec<usize>,
    pub data: Vec<usize>,
    /// Ancillas that start in `|0⟩` and are returned to `|0⟩`.
    pub clean_ancillas: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub roles: QubitRoles,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Circuit {
        Circuit { num_qubits, gates: Vec::new(), roles: QubitRoles::default() }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends `other`, sending its qubit `i` to `map[i]`.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize]) -> Result<()> {
        if map.len() != other.num_qubits {
            return Err(Error::DimensionMismatch { expected: other.num_qubits, got: map.len() });
        }
        for g in &other.gates {
            let mut g = g.clone();
            for t in g.targets.iter_mut() {
                *t = map[*t];
            }
            for c in g.controls.iter_mut() {
                c.0 = map[c.0];
            }
            self.push(g)?;
        }
        Ok(())
    }

    /// Appends a circuit acting on the same register.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        let map: Vec<usize> = (0..other.num_qubits).collect();
        self.append_mapped(other, &map)
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
            roles: self.roles.clone(),
        }
    }

    /// Gate counts by census label.
    pub fn census(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for g in &self.gates {
            *m.entry(g.label()).or_insert(0) += 1;
        }
        m
    }

    pub fn toffoli_count(&self) -> usize {
        self.census().get("toffoli").copied().unwrap_or(0)
    }

    /// Number of oracle gates carrying the given label (adjoints included).
    pub fn oracle_uses(&self, label: &str) -> usize {
        self.gates
            .iter()
            .filter(|g| match &g.kind {
                GateKind::UnitaryBlock(b) => b.label.trim_end_matches('†') == label,
                _ => false,
            })
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amps: Vec<C64>,
    pub num_qubits: usize,
}

impl StateVector {
    pub fn zero(num_qubits: usize) -> Result<StateVector> {
        StateVector::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<StateVector> {
        if num_qubits > MAX_STATE_QUBITS {
            return Err(Error::SizeCap { bits: num_qubits, cap: MAX_STATE_QUBITS });
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, got: index });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(StateVector { amps, num_qubits })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<StateVector> {
        let num_qubits = crate::linalg::log2_exact(amps.len())?;
        Ok(StateVector { amps, num_qubits })
    }

    /// Real amplitudes normalized to unit length.
    pub fn from_real(v: &[f64]) -> Result<StateVector> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        StateVector::from_amplitudes(v.iter().map(|x| C64::new(x / norm, 0.0)).collect())
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self ⊗ other` with `self` on the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let q = self.num_qubits + other.num_qubits;
        if q > MAX_STATE_QUBITS {
            return Err(Error::SizeCap { bits: q, cap: MAX_STATE_QUBITS });
        }
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { amps, num_qubits: q })
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

#[inline]
fn bit(q: usize, k: usize) -> usize {
    1usize << (q - 1 - k)
}

fn single_matrix(kind: &GateKind) -> Option<[[C64; 2]; 2]> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    Some(match kind {
        GateKind::H => [[C64::new(s, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(-s, 0.0)]],
        GateKind::X | GateKind::Toffoli => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        GateKind::Phase(t) | GateKind::MultiControlledPhase(t) => [[ONE, ZERO], [ZERO, C64::from_polar(1.0, *t)]],
        GateKind::RotZ(t) => [[C64::from_polar(1.0, *t), ZERO], [ZERO, C64::from_polar(1.0, -*t)]],
        GateKind::RotY(t) => {
            let (s, c) = t.sin_cos();
            [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
        }
        _ => return None,
    })
}

/// Applies one gate in place.
pub fn apply_in_place(state: &mut StateVector, gate: &Gate) -> Result<()> {
    let q = state.num_qubits;
    gate.validate(q)?;
    let mut cmask = 0usize;
    let mut cval = 0usize;
    for &(c, pol) in &gate.controls {
        cmask |= bit(q, c);
        if pol {
            cval |= bit(q, c);
        }
    }
    let amps = &mut state.amps;
    let dim = amps.len();
    match &gate.kind {
        GateKind::Swap => {
            let a = bit(q, gate.targets[0]);
            let b = bit(q, gate.targets[1]);
            for i in 0..dim {
                if i & a != 0 && i & b == 0 && i & cmask == cval {
                    amps.swap(i, i ^ a ^ b);
                }
            }
        }
        GateKind::UnitaryBlock(blk) => {
            let k = gate.targets.len();
            let offs: Vec<usize> = (0..1usize << k)
                .map(|s| (0..k).filter(|r| s >> (k - 1 - r) & 1 == 1).fold(0, |acc, r| acc | bit(q, gate.targets[r])))
                .collect();
            let tmask = offs[offs.len() - 1];
            let mut buf = vec![ZERO; offs.len()];
            for i in 0..dim {
                if i & tmask != 0 || i & cmask != cval {
                    continue;
                }
                for (s, o) in offs.iter().enumerate() {
                    buf[s] = amps[i | o];
                }
                for (r, o) in offs.iter().enumerate() {
                    let mut acc = ZERO;
                    for (s, b) in buf.iter().enumerate() {
                        acc += blk.matrix[(r, s)] * b;
                    }
                    amps[i | o] = acc;
                }
            }
        }
        GateKind::MultiplexedRotY(angles) => {
            let t = bit(q, gate.targets[0]);
            let sel: Vec<usize> = gate.targets[1..].iter().map(|&s| bit(q, s)).collect();
            let trig: Vec<(f64, f64)> = angles.iter().map(|a| a.sin_cos()).collect();
            for i in 0..dim {
                if i & t != 0 || i & cmask != cval {
                    continue;
                }
                let idx = sel.iter().fold(0usize, |acc, &m| (acc << 1) | usize::from(i & m != 0));
                let (s, c) = trig[idx];
                let (a0, a1) = (amps[i], amps[i | t]);
                amps[i] = a0 * c - a1 * s;
                amps[i | t] = a0 * s + a1 * c;
            }
        }
        kind => {
            let m = single_matrix(kind).expect("single-qubit kind");
            let t = bit(q, gate.targets[0]);
            for i in 0..dim {
                if i & t != 0 || i & cmask != cval {
                    continue;
                }
                let (a0, a1) = (amps[i], amps[i | t]);
                amps[i] = m[0][0] * a0 + m[0][1] * a1;
                amps[i | t] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }
    Ok(())
}

pub fn apply(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    apply_in_place(&mut state, gate)?;
    Ok(state)
}

pub fn run_in_place(circuit: &Circuit, state: &mut StateVector) -> Result<()> {
    if state.num_qubits != circuit.num_qubits {
        return Err(Error::DimensionMismatch { expected: circuit.num_qubits, got: state.num_qubits });
    }
    for g in &circuit.gates {
        apply_in_place(state, g)?;
    }
    Ok(())
}

pub fn run(circuit: &Circuit, mut state: StateVector) -> Result<StateVector> {
    run_in_place(circuit, &mut state)?;
    Ok(state)
}

/// Full unitary of a circuit; column `j` is `run(circuit, |j⟩)`.
pub fn circuit_to_matrix(circuit: &Circuit, cap: usize) -> Result<CMatrix> {
    let q = circuit.num_qubits;
    if q > cap {
        return Err(Error::SizeCap { bits: q, cap });
    }
    let dim = 1usize << q;
    let mut m = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let out = run(circuit, StateVector::basis(q, j)?)?;
        for (i, a) in out.amps.iter().enumerate() {
            m[(i, j)] = *a;
        }
    }
    Ok(m)
}

/// Total probability of the basis states matching `pattern` (`(qubit, value)` pairs).
pub fn success_probability(state: &StateVector, pattern: &[(usize, bool)]) -> f64 {
    let q = state.num_qubits;
    let (mask, val) = pattern_mask(q, pattern);
    state.amps.iter().enumerate().filter(|(i, _)| i & mask == val).map(|(_, a)| a.norm_sqr()).sum()
}

pub(crate) fn pattern_mask(q: usize, pattern: &[(usize, bool)]) -> (usize, usize) {
    let mut mask = 0;
    let mut val = 0;
    for &(k, v) in pattern {
        mask |= bit(q, k);
        if v {
            val |= bit(q, k);
        }
    }
    (mask, val)
}

/// Amplitudes of the basis states matching `pattern`, in increasing index order of the
/// remaining qubits.
pub fn project(state: &StateVector, pattern: &[(usize, bool)]) -> Vec<C64> {
    let (mask, val) = pattern_mask(state.num_qubits, pattern);
    state.amps.iter().enumerate().filter(|(i, _)| i & mask == val).map(|(_, a)| *a).collect()
}

/// Checks on every basis input with the ancillas at zero that the ancillas come back to zero.
pub fn verify_clean_ancillas(circuit: &Circuit, ancillas: &[usize], tol: f64) -> Result<bool> {
    let q = circuit.num_qubits;
    let pattern: Vec<(usize, bool)> = ancillas.iter().map(|&a| (a, false)).collect();
    let (mask, val) = pattern_mask(q, &pattern);
    for j in 0..1usize << q {
        if j & mask != val {
            continue;
        }
        let out = run(circuit, StateVector::basis(q, j)?)?;
        if (1.0 - success_probability(&out, &pattern)).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks that every unitary block in the circuit is unitary.
pub fn check_blocks(circuit: &Circuit, tol: f64) -> Result<()> {
    for g in &circuit.gates {
        if let GateKind::UnitaryBlock(b) = &g.kind {
            let d = unitarity_defect(&b.matrix);
            if d > tol {
                return Err(Error::NotUnitary(d));
            }
        }
    }
    Ok(())
}
