//! The solution-state pipeline: loading `|b⟩`, select-controlled `U±`, the inverse block
//! encoding, amplitude amplification, norm recovery and observable readout.
//!
//! Pipeline register layout:
//! `[flag, sel_a, sel_b, qmi ancillas…, MAX work…, data…, kick, dilution]`.
//! The matrix handed to the inverse block encoding is `A_p / σ_max` (null direction
//! filled for singular systems), so the encoding scale `α` defaults to `κ_p`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math without std
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockenc::{self, BlockEncoding};
use crate::error::{Error, Result};
use crate::fdm::DiscretizedSystem;
use crate::linalg::{householder_from_e0, to_complex, unitarity_defect};
use crate::observable::{self, SparseObservable};
use crate::precond::PreconditionedSystem;
use crate::qmi::{self, QmiConfig, QmiRoute};
use crate::qsim::{self, Circuit, Gate, QubitRoles, StateVector, C64};

pub type CVector = DVector<C64>;

/// Exact amplitude loading of `b / ‖b‖` from `|0…0⟩`.
pub fn prepare_b_state(b: &DVector<f64>) -> Result<StateVector> {
    StateVector::from_real(b.as_slice())
}

/// The `P_b` oracle as a unitary block on the data register.
pub fn b_oracle(b: &DVector<f64>, data: &[usize]) -> Result<Gate> {
    let h = householder_from_e0(b)?;
    Ok(Gate::unitary(to_complex(&h), "P_b", data))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineLayout {
    pub flag: usize,
    pub sel_a: usize,
    pub sel_b: usize,
    /// Inverse-encoding ancillas other than its flag.
    pub qmi_extra: Vec<usize>,
    pub work: Vec<usize>,
    pub data: Vec<usize>,
    /// Phase-kickback ancilla for the reflections.
    pub kick: usize,
    /// Spare qubit used to dilute the success probability for exact amplification.
    pub dilution: usize,
    pub num_qubits: usize,
}

impl PipelineLayout {
    fn new(qmi_ancillas: usize, work: usize, data: usize) -> Self {
        let extra_start = 3;
        let work_start = extra_start + qmi_ancillas - 1;
        let data_start = work_start + work;
        let kick = data_start + data;
        PipelineLayout {
            flag: 0,
            sel_a: 1,
            sel_b: 2,
            qmi_extra: (extra_start..work_start).collect(),
            work: (work_start..data_start).collect(),
            data: (data_start..kick).collect(),
            kick,
            dilution: kick + 1,
            num_qubits: kick + 2,
        }
    }

    /// Pattern of the good subspace: flag and the other inverse-encoding ancillas at zero.
    pub fn good(&self) -> Vec<(usize, bool)> {
        let mut g = vec![(self.flag, false)];
        g.extend(self.qmi_extra.iter().map(|&q| (q, false)));
        g
    }

    /// Every qubit outside `(sel_a, sel_b, data)`, all at zero.
    fn post_selection(&self) -> Vec<(usize, bool)> {
        let mut p = self.good();
        p.extend(self.work.iter().map(|&q| (q, false)));
        p.push((self.kick, false));
        p.push((self.dilution, false));
        p
    }
}

#[derive(Debug, Clone)]
pub struct SolutionPipeline {
    /// `U_Ψ`: prepares the pre-amplification state.
    pub prepare: Circuit,
    /// `H` on `sel_a`, the second select stage and `W†`.
    pub finish: Circuit,
    pub layout: PipelineLayout,
    pub qmi: BlockEncoding,
    pub route: QmiRoute,
    pub t: usize,
    /// Normalization `σ` with `A_p / σ` passed to the inverse encoding.
    pub scale: f64,
    pub kappa_p: f64,
    /// Declared normalized error of the inverse encoding.
    pub qmi_eps: f64,
    pub n: usize,
    pub d: usize,
}

impl SolutionPipeline {
    pub fn alpha(&self) -> f64 {
        self.qmi.alpha
    }
}

/// The matrix fed to the inverse encoding: `A_p / σ_max` with the null direction filled.
pub fn normalized_matrix(ps: &PreconditionedSystem) -> DMatrix<f64> {
    ps.deflated() / ps.sigma_max
}

fn check_inputs(ps: &PreconditionedSystem) -> Result<DVector<f64>> {
    let defect = unitarity_defect(&to_complex(&ps.w));
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let b = &ps.sys.b;
    if b.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let b = b.normalize();
    if ps.kernel.is_some() {
        let mean = b.sum() / (b.len() as f64).sqrt();
        if mean.abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "singular system needs a mean-free right-hand side (component {mean:e} along the kernel)"
            )));
        }
    }
    Ok(b)
}

pub fn build_solution_pipeline(ps: &PreconditionedSystem, cfg: &QmiConfig) -> Result<SolutionPipeline> {
    let b = check_inputs(ps)?;
    let (n, d) = (ps.sys.n, ps.sys.d);
    let nd = n * d;
    let a_n = normalized_matrix(ps);
    let qmi = qmi::build_qmi(&a_n, cfg)?;
    let work_len = blockenc::u_p_work_qubits(n, d);
    let layout = PipelineLayout::new(qmi.a, work_len, nd);
    let q = layout.num_qubits;
    let data = layout.data.clone();
    let w_gate = Gate::unitary(to_complex(&ps.w), "W", &data);

    let mut prep = Circuit::new(q);
    prep.push(Gate::h(layout.sel_b))?;
    prep.push(b_oracle(&b, &data)?)?;
    prep.push(w_gate.clone())?;
    blockenc::push_selected_u_pm(&mut prep, layout.sel_b, &data, n, d, &layout.work)?;
    // the inverse encoding acts on the select slot after the swap, leaving its flag on qubit 0
    prep.push(Gate::swap(layout.flag, layout.sel_b))?;
    let mut map = vec![0usize; qmi.circuit.num_qubits];
    map[qmi.ancillas[0]] = layout.sel_b;
    for (k, &qa) in qmi.ancillas.iter().skip(1).enumerate() {
        map[qa] = layout.qmi_extra[k];
    }
    for (k, &qd) in qmi.data.iter().enumerate() {
        map[qd] = data[k];
    }
    prep.append_mapped(&qmi.circuit, &map)?;
    prep.push(Gate::swap(layout.flag, layout.sel_b))?;

    let mut finish = Circuit::new(q);
    finish.push(Gate::h(layout.sel_a))?;
    blockenc::push_selected_u_pm(&mut finish, layout.sel_a, &data, n, d, &layout.work)?;
    finish.push(w_gate.adjoint())?;

    let roles = QubitRoles {
        flag: vec![layout.flag],
        select: vec![layout.sel_a, layout.sel_b],
        qpe: layout.qmi_extra.clone(),
        data: data.clone(),
        clean_ancillas: {
            let mut c = layout.work.clone();
            c.push(layout.kick);
            c.push(layout.dilution);
            c
        },
    };
    prep.roles = roles.clone();
    finish.roles = roles;
    let qmi_eps = qmi.eps / qmi.alpha;
    Ok(SolutionPipeline {
        prepare: prep,
        finish,
        layout,
        qmi,
        route: cfg.route,
        t: if cfg.route == QmiRoute::QpeCrot { cfg.t } else { 0 },
        scale: ps.sigma_max,
        kappa_p: ps.kappa_p,
        qmi_eps,
        n,
        d,
    })
}

/// `diag(e^{±iθ_j})` with `cos θ_j = P_jj`.
pub fn u_pm_diagonal(ps: &PreconditionedSystem, sign: blockenc::Sign) -> CVector {
    let s = if sign == blockenc::Sign::Plus { 1.0 } else { -1.0 };
    ps.precond.diag.map(|p| C64::new(p, s * (1.0 - p * p).max(0.0).sqrt()))
}

/// Classical branches `ψ_ab = Wᵀ U^a (A_p/σ)^{-1} U^b W b̂`, indexed by `2a + b`
/// (`a = 0` selects `U⁺`).
pub fn classical_branches(ps: &PreconditionedSystem) -> Result<[CVector; 4]> {
    let b = check_inputs(ps)?;
    let inv = normalized_matrix(ps).try_inverse().ok_or(Error::Spectrum("matrix is singular".into()))?;
    let inv = to_complex(&inv);
    let w = to_complex(&ps.w);
    let wt = w.transpose();
    let bw = &w * b.map(|x| C64::new(x, 0.0));
    let u = [u_pm_diagonal(ps, blockenc::Sign::Plus), u_pm_diagonal(ps, blockenc::Sign::Minus)];
    Ok(core::array::from_fn(|ab| {
        let right = bw.component_mul(&u[ab & 1]);
        let mid = (&inv * right).component_mul(&u[ab >> 1]);
        &wt * mid
    }))
}

/// `ξ² = (1/4) Σ ‖ψ_ab‖²`.
pub fn xi_from_branches(branches: &[CVector; 4]) -> f64 {
    (branches.iter().map(|v| v.norm_squared()).sum::<f64>() / 4.0).sqrt()
}

/// `(1/2ξ) Σ |ab⟩ψ_ab` as a state over `(sel_a, sel_b, data)`.
pub fn branch_state(branches: &[CVector; 4]) -> Result<StateVector> {
    let xi = xi_from_branches(branches);
    let amps: Vec<C64> = branches.iter().flat_map(|v| v.iter().map(|x| x / (2.0 * xi))).collect();
    StateVector::from_amplitudes(amps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ideal,
    Faithful,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Ideal => "ideal",
            Mode::Faithful => "faithful",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "ideal" => Some(Mode::Ideal),
            "faithful" => Some(Mode::Faithful),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplifyConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Smallest acceptable pre-amplification probability; defaults to `1/(2α²)`.
    pub floor: Option<f64>,
    /// Sampling repetitions used by the faithful norm estimate.
    pub reps: usize,
    /// Growth factor of the exponential schedule.
    pub lambda: f64,
    pub max_attempts: usize,
}

impl AmplifyConfig {
    pub fn ideal() -> Self {
        AmplifyConfig { mode: Mode::Ideal, seed: 0, floor: None, reps: 10_000, lambda: 6.0 / 5.0, max_attempts: 10_000 }
    }

    pub fn faithful(seed: u64) -> Self {
        AmplifyConfig { mode: Mode::Faithful, seed, ..Self::ideal() }
    }
}

/// Registers used by [`amplify_circuit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmplificationRegisters {
    pub good: Vec<(usize, bool)>,
    pub kick: usize,
    pub dilution: Option<usize>,
}

/// Outcome of amplitude amplification on a bare preparation circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplified {
    pub state: StateVector,
    /// Good-subspace probability of the prepared state.
    pub p: f64,
    /// Good-subspace probability of `state`.
    pub p_final: f64,
    /// Grover iterations applied (summed over attempts in faithful mode).
    pub rounds: usize,
    pub attempts: usize,
    /// Dilution angle, when exact amplification needed one.
    pub dilution_angle: Option<f64>,
    pub good: Vec<(usize, bool)>,
}

/// Appends `R` with `R|x⟩ = −|x⟩` on the states matching `pattern` and `|x⟩` otherwise,
/// through phase kickback on `kick` (left clean).
fn push_kickback_reflection(c: &mut Circuit, pattern: &[(usize, bool)], kick: usize) -> Result<()> {
    c.push(Gate::x(kick))?;
    c.push(Gate::h(kick))?;
    c.push(Gate::x(kick).controlled_by(pattern))?;
    c.push(Gate::h(kick))?;
    c.push(Gate::x(kick))
}

/// Global phase `−1` (as a phase on the clean kick qubit).
fn push_global_minus(c: &mut Circuit, kick: usize) -> Result<()> {
    c.push(Gate::x(kick))?;
    c.push(Gate::phase(kick, PI))?;
    c.push(Gate::x(kick))
}

/// One iterate `U (I − 2|0⟩⟨0|) U† R_good` with `R_good = 2Π_good − I`.
///
/// `R_good` is `Z` on the flag when the good pattern is the flag alone.
pub fn grover_iterate(prepare: &Circuit, regs: &AmplificationRegisters) -> Result<Circuit> {
    let q = prepare.num_qubits;
    let mut c = Circuit::new(q);
    match regs.good.as_slice() {
        [(f, false)] => c.push(Gate::z(*f))?,
        good => {
            push_kickback_reflection(&mut c, good, regs.kick)?;
            push_global_minus(&mut c, regs.kick)?;
        }
    }
    c.append(&prepare.inverse())?;
    let zero: Vec<(usize, bool)> = (0..q).filter(|&k| k != regs.kick).map(|k| (k, false)).collect();
    push_kickback_reflection(&mut c, &zero, regs.kick)?;
    c.append(prepare)?;
    c.roles = prepare.roles.clone();
    Ok(c)
}

fn ideal_rounds(p: f64) -> usize {
    let theta = p.sqrt().min(1.0).asin();
    (PI / (4.0 * theta)).floor() as usize
}

fn run_iterations(start: &StateVector, iterate: &Circuit, k: usize) -> Result<StateVector> {
    let mut s = start.clone();
    for _ in 0..k {
        qsim::run_in_place(iterate, &mut s)?;
    }
    Ok(s)
}

/// Amplitude amplification of the good subspace of `prepare|0⟩`.
///
/// Ideal mode applies `⌊π/(4 arcsin √p)⌋` iterates; if that leaves the good probability
/// below 2/3 and a dilution qubit is available, `p` is lowered to `sin²(π/(4k+2))` and
/// `k` iterates reach probability one. Faithful mode runs the exponential-schedule
/// search, sampling a measurement after each attempt.
pub fn amplify_circuit(
    prepare: &Circuit,
    regs: &AmplificationRegisters,
    floor: f64,
    cfg: &AmplifyConfig,
) -> Result<Amplified> {
    let q = prepare.num_qubits;
    let start = qsim::run(prepare, StateVector::zero(q)?)?;
    let p = qsim::success_probability(&start, &regs.good);
    if !(p >= floor) || p <= 0.0 {
        return Err(Error::ProbabilityFloor { p, floor });
    }
    let iterate = grover_iterate(prepare, regs)?;
    match cfg.mode {
        Mode::Ideal => {
            let k = ideal_rounds(p);
            let state = run_iterations(&start, &iterate, k)?;
            let p_final = qsim::success_probability(&state, &regs.good);
            let out =
                Amplified { state, p, p_final, rounds: k, attempts: 1, dilution_angle: None, good: regs.good.clone() };
            match regs.dilution {
                Some(dq) if p_final < 2.0 / 3.0 => dilute_and_amplify(prepare, regs, dq, p, out),
                _ => Ok(out),
            }
        }
        Mode::Faithful => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let cap = (1.0 / floor.sqrt()).clamp(1.0, 1e6);
            let mut m = 1.0f64;
            let mut rounds = 0;
            for attempt in 1..=cfg.max_attempts {
                let j = (rng.random::<f64>() * m).floor() as usize;
                let state = run_iterations(&start, &iterate, j)?;
                rounds += j;
                let pj = qsim::success_probability(&state, &regs.good);
                if rng.random::<f64>() < pj {
                    return Ok(Amplified {
                        state,
                        p,
                        p_final: pj,
                        rounds,
                        attempts: attempt,
                        dilution_angle: None,
                        good: regs.good.clone(),
                    });
                }
                m = (cfg.lambda * m).min(cap);
            }
            Err(Error::Verification(format!("search did not hit the good subspace in {} attempts", cfg.max_attempts)))
        }
    }
}

fn dilute_and_amplify(
    prepare: &Circuit,
    regs: &AmplificationRegisters,
    dq: usize,
    p: f64,
    plain: Amplified,
) -> Result<Amplified> {
    let theta = p.sqrt().asin();
    let k = (PI / (4.0 * theta) - 0.5).ceil().max(1.0) as usize;
    let target = (PI / (4.0 * k as f64 + 2.0)).sin();
    let ratio = (target / p.sqrt()).min(1.0);
    let angle = ratio.acos();
    let mut diluted = prepare.clone();
    diluted.push(Gate::ry(dq, angle))?;
    let mut good = regs.good.clone();
    good.push((dq, false));
    let regs2 = AmplificationRegisters { good: good.clone(), kick: regs.kick, dilution: None };
    let iterate = grover_iterate(&diluted, &regs2)?;
    let start = qsim::run(&diluted, StateVector::zero(prepare.num_qubits)?)?;
    let state = run_iterations(&start, &iterate, k)?;
    let p_final = qsim::success_probability(&state, &good);
    if p_final < plain.p_final {
        return Ok(plain);
    }
    Ok(Amplified { state, p, p_final, rounds: k, attempts: 1, dilution_angle: Some(angle), good })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    /// Full register after amplification and the finishing stage.
    pub psi: StateVector,
    /// `ξ = α √p_succ`.
    pub xi: f64,
    pub p_succ: f64,
    pub p_final: f64,
    pub rounds: usize,
    pub attempts: usize,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub diluted: bool,
    pub layout: PipelineLayout,
}

impl PipelineResult {
    /// Normalized good component over `(sel_a, sel_b, data)`.
    pub fn post_selected(&self) -> Result<StateVector> {
        let amps = qsim::project(&self.psi, &self.layout.post_selection());
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect())
    }
}

/// Runs amplitude amplification on the pipeline and then its finishing stage.
pub fn amplify(pipe: &SolutionPipeline, cfg: &AmplifyConfig) -> Result<PipelineResult> {
    let regs = AmplificationRegisters {
        good: pipe.layout.good(),
        kick: pipe.layout.kick,
        dilution: Some(pipe.layout.dilution),
    };
    let alpha = pipe.alpha();
    let floor = cfg.floor.unwrap_or(0.5 / (alpha * alpha));
    let amp = amplify_circuit(&pipe.prepare, &regs, floor, cfg)?;
    let psi = qsim::run(&pipe.finish, amp.state)?;
    let xi = match cfg.mode {
        Mode::Ideal => recover_norm(amp.p, alpha),
        Mode::Faithful => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
            estimate_norm(amp.p, alpha, cfg.reps, &mut rng).xi
        }
    };
    Ok(PipelineResult {
        psi,
        xi,
        p_succ: amp.p,
        p_final: amp.p_final,
        rounds: amp.rounds,
        attempts: amp.attempts,
        mode: cfg.mode,
        seed: (cfg.mode == Mode::Faithful).then_some(cfg.seed),
        diluted: amp.dilution_angle.is_some(),
        layout: pipe.layout.clone(),
    })
}

/// `ξ = κ_p √p_succ` (more generally `α √p_succ`).
pub fn recover_norm(p_succ: f64, kappa_p: f64) -> f64 {
    kappa_p * p_succ.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub xi: f64,
    pub std_err: f64,
    pub p_hat: f64,
    pub reps: usize,
}

/// Estimates `ξ` from `reps` seeded flag measurements with success probability `p_succ`.
/// The standard error follows from the binomial variance by the delta method.
pub fn estimate_norm<R: Rng>(p_succ: f64, kappa_p: f64, reps: usize, rng: &mut R) -> NormEstimate {
    let reps = reps.max(1);
    let hits = (0..reps).filter(|_| rng.random::<f64>() < p_succ).count();
    let p_hat = hits as f64 / reps as f64;
    let xi = recover_norm(p_hat, kappa_p);
    let se_p = (p_hat * (1.0 - p_hat) / reps as f64).sqrt();
    let std_err = if p_hat > 0.0 { kappa_p * se_p / (2.0 * p_hat.sqrt()) } else { f64::INFINITY };
    NormEstimate { xi, std_err, p_hat, reps }
}

/// Flag-zero probability of the preconditioner encoding applied to `b_w` (normalized
/// internally), i.e. `‖P b̂_w‖²`.
pub fn direct_probability(b_w: &DVector<f64>, n: usize, d: usize) -> Result<f64> {
    let be = blockenc::u_p_block_encoding_dd(n, d)?;
    let data = prepare_b_state(b_w)?;
    let anc = StateVector::zero(be.a)?;
    let out = qsim::run(&be.circuit, anc.tensor(&data)?)?;
    let pattern: Vec<(usize, bool)> = be.ancillas.iter().map(|&q| (q, false)).collect();
    Ok(qsim::success_probability(&out, &pattern))
}

/// Success probability of applying `P` directly to `W|b⟩`.
pub fn direct_approach_probability(sys: &DiscretizedSystem, w: &DMatrix<f64>) -> Result<f64> {
    if w.nrows() != sys.big_n {
        return Err(Error::DimensionMismatch { expected: sys.big_n, got: w.nrows() });
    }
    direct_probability(&(w * sys.b_normalized()?), sys.n, sys.d)
}

/// Classical `u = A^{-1} b̂`. For a system with a kernel this is the solution the
/// pipeline produces: `A u = b̂` with `u` orthogonal to `P^{-1} W 1` after the transform.
pub fn classical_solution(ps: &PreconditionedSystem) -> Result<DVector<f64>> {
    let b = check_inputs(ps)?;
    let a = &ps.sys.a;
    match &ps.kernel {
        None => a.clone().lu().solve(&b).ok_or(Error::Spectrum("matrix is singular".into())),
        Some(_) => {
            let big_n = a.nrows();
            let svd = a.clone().svd(true, true);
            let tol = 1e-10 * svd.singular_values.max();
            let u0 = svd.solve(&b, tol).map_err(|e| Error::Verification(e.into()))?;
            let ones = DVector::from_element(big_n, 1.0);
            let pinv2 = ps.precond.inverse_diag().map(|x| x * x);
            let g = ps.w.transpose() * (ps.w.clone() * &ones).component_mul(&pinv2);
            let shift = g.dot(&u0) / g.dot(&ones);
            Ok(u0 - ones * shift)
        }
    }
}

/// Classical `⟨u|M|u⟩` with `u = A^{-1} b / ‖b‖`.
pub fn classical_expectation(ps: &PreconditionedSystem, m: &SparseObservable) -> Result<f64> {
    let u = classical_solution(ps)?;
    Ok(u.dot(&(m.dense() * &u)))
}

/// One row of the run report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub operator: String,
    pub wavelet: String,
    pub n: usize,
    pub d: usize,
    pub route: QmiRoute,
    pub t: usize,
    pub observable: String,
    /// `ξ` of the normalized system `A_p / σ_max`.
    pub xi: f64,
    pub p_succ: f64,
    pub rounds: usize,
    pub quantum_value: f64,
    pub classical_value: f64,
    pub abs_error: f64,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub kappa_p: f64,
    pub p_final: f64,
    /// Error budget of the readout from the inverse encoding's declared error.
    pub bound: f64,
}

/// Builds and runs the pipeline and reads `⟨u|M|u⟩ = (ξ²/4)⟨ψ|M′|ψ⟩`, with `u` relative
/// to the normalized right-hand side.
pub fn end_to_end_expectation(
    ps: &PreconditionedSystem,
    qmi_cfg: &QmiConfig,
    m: &SparseObservable,
    cfg: &AmplifyConfig,
) -> Result<RunReport> {
    let pipe = build_solution_pipeline(ps, qmi_cfg)?;
    let res = amplify(&pipe, cfg)?;
    let psi = res.post_selected()?;
    let ext = observable::extend(m);
    let e = observable::expectation(&psi, &ext)?;
    let quantum = res.xi * res.xi / 4.0 * e / (pipe.scale * pipe.scale);
    let classical = classical_expectation(ps, m)?;
    let mnorm = crate::linalg::spectral_norm(&m.dense());
    let unorm = pipe.alpha() / pipe.scale;
    let rel = pipe.qmi_eps;
    let bound = mnorm * unorm * unorm * ((1.0 + rel).powi(2) - 1.0);
    Ok(RunReport {
        operator: String::from(ps.sys.kind.name()),
        wavelet: format!("{}", ps.spec),
        n: ps.sys.n,
        d: ps.sys.d,
        route: pipe.route,
        t: pipe.t,
        observable: m.name.clone(),
        xi: res.xi,
        p_succ: res.p_succ,
        rounds: res.rounds,
        quantum_value: quantum,
        classical_value: classical,
        abs_error: (quantum - classical).abs(),
        mode: res.mode,
        seed: res.seed,
        kappa_p: pipe.kappa_p,
        p_final: res.p_final,
        bound,
    })
}
