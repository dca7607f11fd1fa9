//! Structured unitaries and block encodings: `U±`, controlled `U±`, the LCU block
//! encoding of the preconditioner, comparator/adder/maximum circuits, exact
//! dilations and the composed encoding of `A_p = P W A Wᵀ P`.
//!
//! Register conventions: a register is a list of qubits, most significant first.
//! Block encodings place their ancillas ahead of the data register.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm_c, to_complex, unitarity_defect, CMatrix};
use crate::qsim::{self, Circuit, Gate, GateKind, QubitRoles, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Control polarity selecting this branch: `|0⟩` for `U⁺`, `|1⟩` for `U⁻`.
    pub fn polarity(self) -> bool {
        self == Sign::Minus
    }
}

/// `θ_r = arccos(2^{-r})`.
pub fn theta(r: usize) -> f64 {
    libm::acos(libm::ldexp(1.0, -(r as i32)))
}

fn check_n(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidSize { n, min: 1 });
    }
    Ok(())
}

/// Gates of `U±` on `reg`, each additionally conditioned on `extra`.
///
/// The phase for `|j⟩` sits on the leading one of `j`: qubit `k` carries it when
/// qubits `0..k` are zero, and `⌊log₂ j⌋ = len − 1 − k` there.
fn u_pm_gates(reg: &[usize], sign: Sign, extra: &[(usize, bool)]) -> Vec<Gate> {
    let len = reg.len();
    let mut out = Vec::new();
    for k in 0..len.saturating_sub(1) {
        let mut controls = extra.to_vec();
        controls.extend(reg[..k].iter().map(|&q| (q, false)));
        out.push(Gate::mc_phase(&controls, reg[k], sign.factor() * theta(len - 1 - k)));
    }
    out
}

/// `U±|j⟩ = e^{±iθ_j}|j⟩` with `cos θ_j = 2^{-⌊log₂ j⌋}` and `θ_0 = 0`.
pub fn u_pm_circuit(n: usize, sign: Sign) -> Result<Circuit> {
    check_n(n)?;
    let reg: Vec<usize> = (0..n).collect();
    let mut c = Circuit::new(n);
    for g in u_pm_gates(&reg, sign, &[]) {
        c.push(g)?;
    }
    c.roles.data = reg;
    Ok(c)
}

/// Appends `U±` on `reg` conditioned on `ctrl` using multi-controlled phases only.
pub fn push_controlled_u_pm_compact(c: &mut Circuit, ctrl: (usize, bool), reg: &[usize], sign: Sign) -> Result<()> {
    for g in u_pm_gates(reg, sign, &[ctrl]) {
        c.push(g)?;
    }
    Ok(())
}

/// Appends `U±` on `reg` conditioned on `ctrl` through a Toffoli ladder of prefix ANDs
/// stored in `work` (at least `len − 2` clean qubits).
pub fn push_controlled_u_pm_ladder(
    c: &mut Circuit,
    ctrl: (usize, bool),
    reg: &[usize],
    work: &[usize],
    sign: Sign,
) -> Result<()> {
    let len = reg.len();
    if len < 2 {
        return Ok(());
    }
    let need = len - 2;
    if work.len() < need {
        return Err(Error::DimensionMismatch { expected: need, got: work.len() });
    }
    // z_0 = ctrl, z_{k+1} = z_k ∧ ¬q_k
    let z = |k: usize| if k == 0 { ctrl } else { (work[k - 1], true) };
    let mut ladder = Vec::with_capacity(need);
    for k in 0..need {
        ladder.push(Gate { kind: GateKind::Toffoli, targets: vec![work[k]], controls: vec![z(k), (reg[k], false)] });
    }
    for g in &ladder {
        c.push(g.clone())?;
    }
    for k in 0..len - 1 {
        c.push(Gate::phase(reg[k], sign.factor() * theta(len - 1 - k)).controlled_by(&[z(k)]))?;
    }
    for g in ladder.iter().rev() {
        c.push(g.clone())?;
    }
    Ok(())
}

/// `Λ₀(U⁺)` for `Sign::Plus`, `Λ₁(U⁻)` for `Sign::Minus`.
///
/// Layout: `[ctrl, data (n), work (n − 2)]`.
pub fn controlled_u_pm(n: usize, sign: Sign) -> Result<Circuit> {
    check_n(n)?;
    let work_len = n.saturating_sub(2);
    let mut c = Circuit::new(1 + n + work_len);
    let reg: Vec<usize> = (1..=n).collect();
    let work: Vec<usize> = (n + 1..n + 1 + work_len).collect();
    push_controlled_u_pm_ladder(&mut c, (0, sign.polarity()), &reg, &work, sign)?;
    c.roles = QubitRoles { select: vec![0], data: reg, clean_ancillas: work, ..QubitRoles::default() };
    Ok(c)
}

/// Block `(⟨0|_anc ⊗ I) U (|0⟩_anc ⊗ I)` of a circuit, indexed by the data register.
/// Qubits outside `ancillas ∪ data` are not allowed.
pub fn extract_block(circuit: &Circuit, ancillas: &[usize], data: &[usize]) -> Result<CMatrix> {
    let q = circuit.num_qubits;
    if ancillas.len() + data.len() != q {
        return Err(Error::DimensionMismatch { expected: q, got: ancillas.len() + data.len() });
    }
    let bit = |k: usize| 1usize << (q - 1 - k);
    let embed = |j: usize| {
        let m = data.len();
        (0..m).filter(|r| j >> (m - 1 - r) & 1 == 1).fold(0usize, |acc, r| acc | bit(data[r]))
    };
    let dim = 1usize << data.len();
    let index: Vec<usize> = (0..dim).map(embed).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for j in 0..dim {
        let s = qsim::run(circuit, StateVector::basis(q, index[j])?)?;
        for i in 0..dim {
            out[(i, j)] = s.amps[index[i]];
        }
    }
    Ok(out)
}

/// `(α, a, ε)` block encoding: `‖A − α(⟨0^a|⊗I) U (|0^a⟩⊗I)‖ ≤ ε`.
#[derive(Debug, Clone)]
pub struct BlockEncoding {
    pub circuit: Circuit,
    pub a: usize,
    pub alpha: f64,
    pub eps: f64,
    pub n: usize,
    pub ancillas: Vec<usize>,
    pub data: Vec<usize>,
}

impl BlockEncoding {
    /// Ancillas on qubits `0..a`, data on `a..a+n`.
    pub fn standard(circuit: Circuit, a: usize, n: usize, alpha: f64, eps: f64) -> BlockEncoding {
        BlockEncoding { circuit, a, alpha, eps, n, ancillas: (0..a).collect(), data: (a..a + n).collect() }
    }

    /// The encoded block without the factor `α`.
    pub fn extract(&self) -> Result<CMatrix> {
        extract_block(&self.circuit, &self.ancillas, &self.data)
    }

    /// `‖target − α · block‖₂`.
    pub fn error_against(&self, target: &DMatrix<f64>) -> Result<f64> {
        let block = self.extract()?;
        if block.nrows() != target.nrows() || target.nrows() != target.ncols() {
            return Err(Error::DimensionMismatch { expected: block.nrows(), got: target.nrows() });
        }
        let diff = to_complex(target) - block * Complex64::new(self.alpha, 0.0);
        Ok(spectral_norm_c(&diff))
    }

    /// Checks the declared contract against `target`, returning the measured error.
    pub fn verify(&self, target: &DMatrix<f64>) -> Result<f64> {
        let err = self.error_against(target)?;
        let slack = 1e-12 * self.alpha.max(1.0);
        if err > self.eps + slack {
            return Err(Error::Verification(alloc::format!(
                "block encoding error {err:e} exceeds declared {:e}",
                self.eps
            )));
        }
        Ok(err)
    }
}

/// `(1, 1, 0)` encoding of `P` as `(H⊗I) Λ₀(U⁺) Λ₁(U⁻) (H⊗I)`; ancilla is qubit 0.
pub fn u_p_block_encoding(n: usize) -> Result<BlockEncoding> {
    check_n(n)?;
    let mut c = Circuit::new(n + 1);
    let reg: Vec<usize> = (1..=n).collect();
    c.push(Gate::h(0))?;
    push_controlled_u_pm_compact(&mut c, (0, false), &reg, Sign::Plus)?;
    push_controlled_u_pm_compact(&mut c, (0, true), &reg, Sign::Minus)?;
    c.push(Gate::h(0))?;
    c.roles = QubitRoles { select: vec![0], data: reg, ..QubitRoles::default() };
    Ok(BlockEncoding::standard(c, 1, n, 1.0, 0.0))
}

fn push_comp(c: &mut Circuit, x: &[usize], y: &[usize], flag: usize, work: &[usize]) -> Result<()> {
    let n = x.len();
    let bit = |r: &[usize], i: usize| r[n - 1 - i];
    let mut forward = Vec::new();
    for i in 0..n {
        let (xi, yi, t) = (bit(x, i), bit(y, i), work[i]);
        // borrow_{i+1} = MAJ(¬x_i, y_i, borrow_i)
        forward.push(Gate { kind: GateKind::Toffoli, targets: vec![t], controls: vec![(xi, false), (yi, true)] });
        if i > 0 {
            let flip = Gate::x(yi).controlled_by(&[(xi, false)]);
            forward.push(flip.clone());
            forward.push(Gate::toffoli(work[i - 1], yi, t));
            forward.push(flip);
        }
    }
    for g in &forward {
        c.push(g.clone())?;
    }
    c.push(Gate::cx(work[n - 1], flag))?;
    c.push(Gate::x(flag))?;
    for g in forward.iter().rev() {
        c.push(g.clone())?;
    }
    Ok(())
}

fn push_cadd(c: &mut Circuit, x: &[usize], y: &[usize], flag: usize, out: &[usize]) -> Result<()> {
    for i in 0..x.len() {
        c.push(Gate { kind: GateKind::Toffoli, targets: vec![out[i]], controls: vec![(flag, true), (x[i], true)] })?;
        c.push(Gate { kind: GateKind::Toffoli, targets: vec![out[i]], controls: vec![(flag, false), (y[i], true)] })?;
    }
    Ok(())
}

/// `|x⟩|y⟩|f⟩ → |x⟩|y⟩|f ⊕ [x ≥ y]⟩` via a ripple borrow. Layout `[x, y, flag, work (n)]`.
pub fn comparator_circuit(n: usize) -> Result<Circuit> {
    check_n(n)?;
    let mut c = Circuit::new(3 * n + 1);
    let x: Vec<usize> = (0..n).collect();
    let y: Vec<usize> = (n..2 * n).collect();
    let work: Vec<usize> = (2 * n + 1..3 * n + 1).collect();
    push_comp(&mut c, &x, &y, 2 * n, &work)?;
    c.roles =
        QubitRoles { flag: vec![2 * n], data: (0..2 * n).collect(), clean_ancillas: work, ..QubitRoles::default() };
    Ok(c)
}

/// `|x⟩|y⟩|f⟩|o⟩ → |x⟩|y⟩|f⟩|o ⊕ (f ? x : y)⟩`. Layout `[x, y, f, out]`.
pub fn cadd_circuit(n: usize) -> Result<Circuit> {
    check_n(n)?;
    let mut c = Circuit::new(3 * n + 1);
    let x: Vec<usize> = (0..n).collect();
    let y: Vec<usize> = (n..2 * n).collect();
    let out: Vec<usize> = (2 * n + 1..3 * n + 1).collect();
    push_cadd(&mut c, &x, &y, 2 * n, &out)?;
    c.roles = QubitRoles { flag: vec![2 * n], data: (0..2 * n).collect(), ..QubitRoles::default() };
    Ok(c)
}

/// Qubit layout of [`max_circuit`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaxLayout {
    pub inputs: Vec<Vec<usize>>,
    pub out: Vec<usize>,
    pub flags: Vec<usize>,
    pub temps: Vec<Vec<usize>>,
    pub work: Vec<usize>,
}

impl MaxLayout {
    pub fn new(n: usize, d: usize) -> MaxLayout {
        let mut next = 0usize;
        let mut take = |k: usize| {
            let r: Vec<usize> = (next..next + k).collect();
            next += k;
            r
        };
        let inputs = (0..d).map(|_| take(n)).collect();
        let out = take(n);
        let flags = take(d.saturating_sub(1));
        let temps = (0..d.saturating_sub(2)).map(|_| take(n)).collect();
        let work = if d >= 2 { take(n) } else { Vec::new() };
        MaxLayout { inputs, out, flags, temps, work }
    }

    pub fn num_qubits(&self) -> usize {
        self.inputs.iter().map(Vec::len).sum::<usize>()
            + self.out.len()
            + self.flags.len()
            + self.temps.iter().map(Vec::len).sum::<usize>()
            + self.work.len()
    }

    /// Every qubit other than the inputs.
    pub fn ancillas(&self) -> Vec<usize> {
        let mut v = self.out.clone();
        v.extend(&self.flags);
        v.extend(self.temps.iter().flatten());
        v.extend(&self.work);
        v
    }
}

/// Writes `max(j_1, …, j_d)` into the output register by a pairwise tournament of
/// comparator and conditional-copy stages, then uncomputes the intermediate maxima.
pub fn max_circuit(n: usize, d: usize) -> Result<(Circuit, MaxLayout)> {
    check_n(n)?;
    if d < 1 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    let layout = MaxLayout::new(n, d);
    let mut c = Circuit::new(layout.num_qubits());
    if d == 1 {
        for (a, b) in layout.inputs[0].iter().zip(&layout.out) {
            c.push(Gate::cx(*a, *b))?;
        }
    } else {
        let mut compute = Circuit::new(c.num_qubits);
        let mut level: Vec<Vec<usize>> = layout.inputs.clone();
        let mut node = 0usize;
        let mut root = None;
        while level.len() > 1 {
            let mut next = Vec::new();
            for pair in level.chunks(2) {
                if pair.len() == 1 {
                    next.push(pair[0].clone());
                    continue;
                }
                let flag = layout.flags[node];
                push_comp(&mut compute, &pair[0], &pair[1], flag, &layout.work)?;
                if node + 1 == d - 1 {
                    root = Some((pair[0].clone(), pair[1].clone(), flag));
                    next.push(layout.out.clone());
                } else {
                    let dest = layout.temps[node].clone();
                    push_cadd(&mut compute, &pair[0], &pair[1], flag, &dest)?;
                    next.push(dest);
                }
                node += 1;
            }
            level = next;
        }
        let (x, y, flag) = root.expect("tournament has a final match");
        c.append(&compute)?;
        push_cadd(&mut c, &x, &y, flag, &layout.out)?;
        c.append(&compute.inverse())?;
    }
    let mut anc = layout.flags.clone();
    anc.extend(layout.temps.iter().flatten());
    anc.extend(&layout.work);
    c.roles = QubitRoles {
        data: layout.inputs.iter().flatten().copied().collect(),
        clean_ancillas: anc,
        ..QubitRoles::default()
    };
    Ok((c, layout))
}

/// Basis-state index with `value` written into `reg` (most significant qubit first).
fn place(q: usize, reg: &[usize], value: usize) -> usize {
    let len = reg.len();
    reg.iter()
        .enumerate()
        .filter(|(r, _)| value >> (len - 1 - r) & 1 == 1)
        .fold(0, |acc, (_, &k)| acc | 1 << (q - 1 - k))
}

fn maps_basis_state(c: &Circuit, input: usize, want: usize) -> Result<bool> {
    let out = qsim::run(c, StateVector::basis(c.num_qubits, input)?)?;
    Ok((out.amps[want].re - 1.0).abs() < 1e-12)
}

/// Runs the comparator on every pair `(x, y)` and checks that exactly `[x ≥ y]` lands on
/// the flag with every work qubit returned to zero. Returns the number of cases.
pub fn comparator_exhaustive(n: usize) -> Result<usize> {
    let c = comparator_circuit(n)?;
    let q = c.num_qubits;
    let x: Vec<usize> = (0..n).collect();
    let y: Vec<usize> = (n..2 * n).collect();
    let mut cases = 0;
    for xv in 0..1usize << n {
        for yv in 0..1usize << n {
            let input = place(q, &x, xv) | place(q, &y, yv);
            let want = input | if xv >= yv { place(q, &[2 * n], 1) } else { 0 };
            if !maps_basis_state(&c, input, want)? {
                return Err(Error::Verification(format!("comparator n = {n} fails at x = {xv}, y = {yv}")));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

/// Runs the maximum circuit on every input tuple and checks the output register and
/// the cleanliness of all other ancillas. Returns the number of cases.
pub fn max_exhaustive(n: usize, d: usize) -> Result<usize> {
    let (c, layout) = max_circuit(n, d)?;
    let q = c.num_qubits;
    let mask = (1usize << n) - 1;
    let total = 1usize << (n * d);
    for combo in 0..total {
        let values: Vec<usize> = (0..d).map(|k| (combo >> (n * (d - 1 - k))) & mask).collect();
        let input = layout.inputs.iter().zip(&values).fold(0, |acc, (r, &v)| acc | place(q, r, v));
        let max = values.iter().copied().max().unwrap_or(0);
        if !maps_basis_state(&c, input, input | place(q, &layout.out, max))? {
            return Err(Error::Verification(format!("max n = {n}, d = {d} fails at {values:?}")));
        }
    }
    Ok(total)
}

/// `U±_dD|j_1…j_d⟩ = e^{±iθ_max}|j_1…j_d⟩`: MAX, `U±` on the maximum, MAX†.
///
/// Layout: that of [`max_circuit`]; all non-input qubits are clean ancillas.
pub fn u_pm_dd(n: usize, d: usize, sign: Sign) -> Result<(Circuit, MaxLayout)> {
    let (max, layout) = max_circuit(n, d)?;
    let mut c = Circuit::new(max.num_qubits);
    c.append(&max)?;
    for g in u_pm_gates(&layout.out, sign, &[]) {
        c.push(g)?;
    }
    c.append(&max.inverse())?;
    c.roles = QubitRoles {
        data: layout.inputs.iter().flatten().copied().collect(),
        clean_ancillas: layout.ancillas(),
        ..QubitRoles::default()
    };
    Ok((c, layout))
}

/// Controlled `U±_dD` with the control on an extra leading qubit.
pub fn controlled_u_pm_dd(n: usize, d: usize, sign: Sign) -> Result<(Circuit, MaxLayout)> {
    let (max, layout) = max_circuit(n, d)?;
    let shift: Vec<usize> = (1..=max.num_qubits).collect();
    let mut c = Circuit::new(max.num_qubits + 1);
    c.append_mapped(&max, &shift)?;
    let out: Vec<usize> = layout.out.iter().map(|q| q + 1).collect();
    push_controlled_u_pm_compact(&mut c, (0, sign.polarity()), &out, sign)?;
    c.append_mapped(&max.inverse(), &shift)?;
    c.roles = QubitRoles {
        select: vec![0],
        data: layout.inputs.iter().flatten().map(|q| q + 1).collect(),
        clean_ancillas: layout.ancillas().iter().map(|q| q + 1).collect(),
        ..QubitRoles::default()
    };
    Ok((c, layout))
}

/// Ancillas needed by the `d`-dimensional `U_P` besides its LCU qubit.
pub fn u_p_work_qubits(n: usize, d: usize) -> usize {
    if d <= 1 {
        0
    } else {
        MaxLayout::new(n, d).num_qubits() - n * d
    }
}

/// Appends `Λ₀(U⁺) Λ₁(U⁻)` selected by `sel` on the `d`-dimensional register `data`,
/// using the MAX workspace `work` (length [`u_p_work_qubits`]) when `d > 1`.
pub fn push_selected_u_pm(
    c: &mut Circuit,
    sel: usize,
    data: &[usize],
    n: usize,
    d: usize,
    work: &[usize],
) -> Result<()> {
    if data.len() != n * d {
        return Err(Error::DimensionMismatch { expected: n * d, got: data.len() });
    }
    if d <= 1 {
        push_controlled_u_pm_compact(c, (sel, false), data, Sign::Plus)?;
        return push_controlled_u_pm_compact(c, (sel, true), data, Sign::Minus);
    }
    let (max, layout) = max_circuit(n, d)?;
    if work.len() != max.num_qubits - n * d {
        return Err(Error::DimensionMismatch { expected: max.num_qubits - n * d, got: work.len() });
    }
    // MAX-layout qubit → host qubit
    let mut map = vec![0usize; max.num_qubits];
    for (k, q) in layout.inputs.iter().flatten().enumerate() {
        map[*q] = data[k];
    }
    for (k, q) in layout.ancillas().iter().enumerate() {
        map[*q] = work[k];
    }
    let out: Vec<usize> = layout.out.iter().map(|&q| map[q]).collect();
    c.append_mapped(&max, &map)?;
    push_controlled_u_pm_compact(c, (sel, false), &out, Sign::Plus)?;
    push_controlled_u_pm_compact(c, (sel, true), &out, Sign::Minus)?;
    c.append_mapped(&max.inverse(), &map)
}

/// Appends the `(1, ·, 0)` encoding of `P_dD` on `data`, with LCU qubit `lcu` and
/// MAX workspace `work` (length [`u_p_work_qubits`]).
pub fn push_u_p(c: &mut Circuit, lcu: usize, data: &[usize], n: usize, d: usize, work: &[usize]) -> Result<()> {
    c.push(Gate::h(lcu))?;
    push_selected_u_pm(c, lcu, data, n, d, work)?;
    c.push(Gate::h(lcu))
}

/// Encoding of the `d`-dimensional preconditioner. Layout `[lcu, work, data]`.
pub fn u_p_block_encoding_dd(n: usize, d: usize) -> Result<BlockEncoding> {
    check_n(n)?;
    let w = u_p_work_qubits(n, d);
    let a = 1 + w;
    let mut c = Circuit::new(a + n * d);
    let work: Vec<usize> = (1..a).collect();
    let data: Vec<usize> = (a..a + n * d).collect();
    push_u_p(&mut c, 0, &data, n, d, &work)?;
    c.roles = QubitRoles { select: vec![0], data, clean_ancillas: work, ..QubitRoles::default() };
    Ok(BlockEncoding::standard(c, a, n * d, 1.0, 0.0))
}

/// Real unitary `[[B, √(I−BBᵀ)], [√(I−BᵀB), −Bᵀ]]` for a contraction `B`.
pub fn dilation_unitary(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = b.nrows();
    if b.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: b.ncols() });
    }
    let svd = b.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let vt = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    if smax > 1.0 + 1e-12 {
        return Err(Error::NormViolation(smax));
    }
    let comp = DMatrix::from_diagonal(&svd.singular_values.map(|s| (1.0 - s * s).max(0.0).sqrt()));
    let top = u * &comp * u.transpose();
    let bottom = vt.transpose() * &comp * vt;
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(b);
    out.view_mut((0, m), (m, m)).copy_from(&top);
    out.view_mut((m, 0), (m, m)).copy_from(&bottom);
    out.view_mut((m, m), (m, m)).copy_from(&(-b.transpose()));
    Ok(out)
}

/// One-ancilla exact dilation of `A/α` as a single oracle labeled `label`.
pub fn dilation_block_encoding_labeled(a: &DMatrix<f64>, alpha: f64, label: &str) -> Result<BlockEncoding> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("alpha must be positive, got {alpha}")));
    }
    let n = crate::linalg::log2_exact(a.nrows())?;
    let u = dilation_unitary(&(a / alpha))?;
    let defect = unitarity_defect(&to_complex(&u));
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let mut c = Circuit::new(n + 1);
    let targets: Vec<usize> = (0..=n).collect();
    c.push(Gate::unitary(to_complex(&u), label, &targets))?;
    c.roles = QubitRoles { data: (1..=n).collect(), ..QubitRoles::default() };
    Ok(BlockEncoding::standard(c, 1, n, alpha, 1e-10 * alpha))
}

pub fn dilation_block_encoding(a: &DMatrix<f64>, alpha: f64) -> Result<BlockEncoding> {
    dilation_block_encoding_labeled(a, alpha, "U_A")
}

/// Encoding of `A_p = P W A Wᵀ P` from an encoding of `A` and the analysis transform
/// `w` (already tensored for `d > 1`), using `U_A` once.
///
/// Layout `[lcu₁, lcu₂, work₁, work₂, anc_A, data]`; each `U_P` gets its own LCU qubit.
pub fn u_ap_block_encoding(u_a: &BlockEncoding, w: &DMatrix<f64>, n: usize, d: usize) -> Result<BlockEncoding> {
    let dim = 1usize << (n * d);
    if u_a.n != n * d || w.nrows() != dim || w.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: w.nrows() });
    }
    let wc = to_complex(w);
    let defect = unitarity_defect(&wc);
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let pw = u_p_work_qubits(n, d);
    let a = 2 + 2 * pw + u_a.a;
    let q = a + n * d;
    let mut c = Circuit::new(q);
    let work1: Vec<usize> = (2..2 + pw).collect();
    let work2: Vec<usize> = (2 + pw..2 + 2 * pw).collect();
    let anc_a: Vec<usize> = (2 + 2 * pw..a).collect();
    let data: Vec<usize> = (a..q).collect();

    push_u_p(&mut c, 1, &data, n, d, &work2)?;
    let w_gate = Gate::unitary(wc, "W", &data);
    c.push(w_gate.adjoint())?;
    let mut map = vec![0usize; u_a.circuit.num_qubits];
    for (k, &qa) in u_a.ancillas.iter().enumerate() {
        map[qa] = anc_a[k];
    }
    for (k, &qd) in u_a.data.iter().enumerate() {
        map[qd] = data[k];
    }
    c.append_mapped(&u_a.circuit, &map)?;
    c.push(w_gate)?;
    push_u_p(&mut c, 0, &data, n, d, &work1)?;

    let mut clean = work1;
    clean.extend(work2);
    c.roles = QubitRoles { select: vec![0, 1], data, clean_ancillas: clean, ..QubitRoles::default() };
    let ancillas: Vec<usize> = (0..a).collect();
    let data: Vec<usize> = (a..q).collect();
    Ok(BlockEncoding { circuit: c, a, alpha: u_a.alpha, eps: u_a.eps, n: n * d, ancillas, data })
}
