//! The five subcommands. Each writes its CSV (and SVG) artifacts, then reports a
//! verification failure if any checked quantity misses its tolerance.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use wavesolve_core::blockenc::{self, Sign};
use wavesolve_core::dwt::{self, WaveletSpec};
use wavesolve_core::fdm::{self, OperatorKind, OperatorSpec};
use wavesolve_core::linalg::{linear_fit, r_squared};
use wavesolve_core::observable::SparseObservable;
use wavesolve_core::polyapprox;
use wavesolve_core::precond::{self, PreconditionedSystem, SweepRow};
use wavesolve_core::qmi::{QmiConfig, QmiRoute};
use wavesolve_core::solver::{self, AmplifyConfig, Mode, RunReport};

use crate::error::{CliError, CliResult};
use crate::manifest::{Command, Manifest};
use crate::output::{num, OutputDir};
use crate::plot::{LinePlot, Series};

/// Files written and one-line findings of a run.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Runs the manifest's command on a pool of `jobs` workers (0 picks the core count).
pub fn run(manifest: &Manifest) -> CliResult<RunSummary> {
    let jobs: usize = manifest.parsed("jobs")?;
    let _: u64 = manifest.parsed("seed")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start {jobs} workers: {e}")))?;
    let dir = PathBuf::from(manifest.get("out"));
    pool.install(|| match manifest.command {
        Command::Condnum => condnum(manifest, &dir),
        Command::Solve => solve(manifest, &dir),
        Command::CircuitAudit => circuit_audit(manifest, &dir),
        Command::Polyinv => polyinv(manifest, &dir),
        Command::DirectProbe => direct_probe(manifest, &dir),
    })
}

fn parse_operator(name: &str) -> CliResult<OperatorSpec> {
    OperatorSpec::parse(name)
        .ok_or_else(|| CliError::Invalid(format!("unknown operator `{name}` (expected L1, L2, L3 or Laplace2D)")))
}

fn parse_wavelet(name: &str) -> CliResult<WaveletSpec> {
    Ok(WaveletSpec::parse(name)?)
}

fn has_kernel(kind: OperatorKind) -> bool {
    matches!(kind, OperatorKind::L1 | OperatorKind::Laplace2D)
}

/// Singular operators are only accepted with `kernel_policy = deflate_constant`.
fn check_kernel_policy(m: &Manifest, kind: OperatorKind) -> CliResult<()> {
    match m.get("kernel_policy") {
        "deflate_constant" => Ok(()),
        "none" if has_kernel(kind) => Err(CliError::Invalid(format!(
            "{} is singular (constant null vector); set kernel_policy = deflate_constant",
            kind.name()
        ))),
        "none" => Ok(()),
        other => Err(CliError::Invalid(format!("unknown kernel_policy `{other}` (expected deflate_constant or none)"))),
    }
}

fn finish(mut summary: RunSummary, out: OutputDir, failures: Vec<String>) -> CliResult<RunSummary> {
    summary.files = out.written().to_vec();
    if failures.is_empty() {
        Ok(summary)
    } else {
        for l in &summary.lines {
            eprintln!("{l}");
        }
        Err(CliError::Verification(failures.join("; ")))
    }
}

/// Slope of `log₂ y` against `x`.
fn log2_slope(x: &[f64], y: &[f64]) -> f64 {
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    linear_fit(x, &ly).0
}

fn condnum(m: &Manifest, dir: &Path) -> CliResult<RunSummary> {
    let ops = m.list("operators").iter().map(|s| parse_operator(s)).collect::<CliResult<Vec<_>>>()?;
    let wavelets = m.list("wavelets").iter().map(|s| parse_wavelet(s)).collect::<CliResult<Vec<_>>>()?;
    let ns: Vec<usize> = m.range("n")?.collect();
    if ops.is_empty() || wavelets.is_empty() {
        return Err(CliError::Invalid("operators and wavelets must be non-empty".into()));
    }
    for op in &ops {
        check_kernel_policy(m, op.kind)?;
    }

    let raw_cells: Vec<(usize, usize)> = (0..ops.len()).flat_map(|o| ns.iter().map(move |&n| (o, n))).collect();
    let raw: Vec<f64> =
        raw_cells.par_iter().map(|&(o, n)| precond::raw_condition_number(&ops[o], n)).collect::<Result<_, _>>()?;
    let raw_of = |o: usize, n: usize| raw[o * ns.len() + ns.iter().position(|&k| k == n).unwrap_or(0)];
    let ns_ref = &ns;
    let cells: Vec<(usize, usize, usize)> = (0..ops.len())
        .flat_map(|o| (0..wavelets.len()).flat_map(move |w| ns_ref.iter().map(move |&n| (o, w, n))))
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(o, w, n)| precond::sweep_cell(&ops[o], &wavelets[w], n, Some(raw_of(o, n))))
        .collect::<Result<_, _>>()?;

    let mut out = OutputDir::create(dir, m)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.operator.clone(),
                r.wavelet.clone(),
                r.n.to_string(),
                r.big_n.to_string(),
                r.d.to_string(),
                num(r.kappa_raw),
                num(r.kappa_precond),
            ]
        })
        .collect();
    out.csv("condnum.csv", &["operator", "wavelet", "n", "N", "d", "kappa_raw", "kappa_precond"], &table)?;

    let mut plot = LinePlot::new("Condition numbers with and without preconditioning", "N", "kappa", true, true);
    let mut fits = Vec::new();
    let mut summary = RunSummary::default();
    for group in rows.chunk_by(|a, b| a.operator == b.operator && a.wavelet == b.wavelet) {
        let (op, wl) = (&group[0].operator, &group[0].wavelet);
        let x: Vec<f64> = group.iter().map(|r| r.n as f64).collect();
        let kr: Vec<f64> = group.iter().map(|r| r.kappa_raw).collect();
        let kp: Vec<f64> = group.iter().map(|r| r.kappa_precond).collect();
        let (sr, sp) = (log2_slope(&x, &kr), log2_slope(&x, &kp));
        fits.push(vec![op.clone(), wl.clone(), num(sr), num(sp)]);
        summary.lines.push(format!("{op} {wl}: raw slope {sr:.3}, preconditioned slope {sp:.3}"));
        let pts = |k: &[f64]| group.iter().zip(k).map(|(r, &v)| (r.big_n as f64, v)).collect();
        plot = plot
            .with(Series::new(format!("{op} raw"), pts(&kr)).dashed())
            .with(Series::new(format!("{op} {wl}"), pts(&kp)));
    }
    out.csv("condnum_fits.csv", &["operator", "wavelet", "raw_slope", "precond_slope"], &fits)?;
    out.svg("condnum.svg", &plot)?;
    summary.lines.insert(0, format!("condnum: {} rows", rows.len()));
    finish(summary, out, Vec::new())
}

/// `A = I` with the L2 right-hand side, transformed and preconditioned as usual.
pub fn identity_system(spec: &WaveletSpec, n: usize) -> CliResult<PreconditionedSystem> {
    let mut sys = fdm::discretize_1d(&OperatorSpec::new(OperatorKind::L2), n)?;
    sys.a = DMatrix::identity(sys.big_n, sys.big_n);
    let w = dwt::full_transform(spec, n)?;
    let p = precond::build_preconditioner(n, 1)?;
    Ok(precond::precondition(&sys, &w, &p)?)
}

fn solve(m: &Manifest, dir: &Path) -> CliResult<RunSummary> {
    let spec = parse_wavelet(m.get("wavelet"))?;
    let n: usize = m.parsed("n")?;
    let ps = match m.get("operator") {
        "identity" => identity_system(&spec, n)?,
        name => {
            let op = parse_operator(name)?;
            check_kernel_policy(m, op.kind)?;
            precond::precondition_operator(&op, &spec, n)?
        }
    };
    let route = QmiRoute::parse(m.get("route")).ok_or_else(|| {
        CliError::Invalid(format!("unknown route `{}` (expected oracle_dilation or qpe_crot)", m.get("route")))
    })?;
    let eps = match m.get("qmi_eps") {
        "none" => None,
        _ => Some(m.parsed::<f64>("qmi_eps")?),
    };
    let qmi = QmiConfig { route, t: m.parsed("t")?, eps, alpha: None };
    let mode = Mode::parse(m.get("mode"))
        .ok_or_else(|| CliError::Invalid(format!("unknown mode `{}` (expected ideal or faithful)", m.get("mode"))))?;
    let seed: u64 = m.parsed("seed")?;
    let amp = match mode {
        Mode::Ideal => AmplifyConfig::ideal(),
        Mode::Faithful => AmplifyConfig::faithful(seed),
    };
    let names = m.list("observables");
    if names.is_empty() {
        return Err(CliError::Invalid("observables must be non-empty".into()));
    }
    let qubits = ps.sys.n * ps.sys.d;
    for name in &names {
        SparseObservable::library(name, qubits)?;
    }
    let reports: Vec<RunReport> = names
        .par_iter()
        .map(|name| {
            let obs = SparseObservable::library(name, qubits)?;
            solver::end_to_end_expectation(&ps, &qmi, &obs, &amp)
        })
        .collect::<Result<_, _>>()?;

    let mut out = OutputDir::create(dir, m)?;
    let mut failures = Vec::new();
    let mut summary = RunSummary::default();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let tol = r.bound + 1e-6;
            let ok = r.abs_error <= tol;
            if mode == Mode::Ideal && !ok {
                failures.push(format!("{}: |error| {:e} exceeds {:e}", r.observable, r.abs_error, tol));
            }
            summary.lines.push(format!(
                "{} {}: quantum {:.10} classical {:.10} error {:.2e}",
                r.operator, r.observable, r.quantum_value, r.classical_value, r.abs_error
            ));
            vec![
                r.operator.clone(),
                r.wavelet.clone(),
                r.n.to_string(),
                r.d.to_string(),
                r.route.name().to_string(),
                r.t.to_string(),
                r.observable.clone(),
                num(r.xi),
                num(r.p_succ),
                r.rounds.to_string(),
                num(r.quantum_value),
                num(r.classical_value),
                num(r.abs_error),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                r.mode.name().to_string(),
                num(r.kappa_p),
                num(r.p_final),
                num(r.bound),
                ok.to_string(),
            ]
        })
        .collect();
    out.csv(
        "solve.csv",
        &[
            "operator",
            "wavelet",
            "n",
            "d",
            "route",
            "t",
            "observable",
            "xi",
            "p_succ",
            "rounds",
            "quantum_value",
            "classical_value",
            "abs_error",
            "seed",
            "mode",
            "kappa_p",
            "p_final",
            "bound",
            "within_bound",
        ],
        &rows,
    )?;
    finish(summary, out, failures)
}

/// `(slope, intercept, max |residual|)` of a least-squares line.
pub fn line_with_residual(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (s, c) = linear_fit(x, y);
    let r = x.iter().zip(y).map(|(a, b)| (s * a + c - b).abs()).fold(0.0, f64::max);
    (s, c, r)
}

/// Per-comparison Toffoli cost of the maximum tournament, in units of `n`.
pub const MAX_TOFFOLI_PER_MATCH: f64 = 12.0;

/// Fit of `(d, n, count)` cells: the single constant `c = max count/(d·n)`, and the
/// largest residual of a straight line in `n` for each fixed `d`.
pub fn dn_constant(cells: &[(usize, usize, usize)]) -> (f64, f64) {
    let c = cells.iter().map(|&(d, n, t)| t as f64 / (d * n) as f64).fold(0.0, f64::max);
    let mut residual = 0.0f64;
    let mut ds: Vec<usize> = cells.iter().map(|c| c.0).collect();
    ds.dedup();
    for d in ds {
        let (x, y): (Vec<f64>, Vec<f64>) = cells.iter().filter(|c| c.0 == d).map(|c| (c.1 as f64, c.2 as f64)).unzip();
        if x.len() >= 2 {
            residual = residual.max(line_with_residual(&x, &y).2);
        }
    }
    (c, residual)
}

fn circuit_audit(m: &Manifest, dir: &Path) -> CliResult<RunSummary> {
    let u_ns: Vec<usize> = m.range("u_pm_n")?.collect();
    let ds: Vec<usize> = m.parsed_list("max_d")?;
    let max_ns: Vec<usize> = m.range("max_n")?.collect();
    let comp_n: usize = m.parsed("comp_n")?;

    let u_cells: Vec<(usize, Sign)> = u_ns.iter().flat_map(|&n| [(n, Sign::Plus), (n, Sign::Minus)]).collect();
    let u_counts: Vec<(usize, usize)> = u_cells
        .par_iter()
        .map(|&(n, s)| blockenc::controlled_u_pm(n, s).map(|c| (c.toffoli_count(), c.gates.len())))
        .collect::<Result<_, _>>()?;
    let max_cells: Vec<(usize, usize)> = ds.iter().flat_map(|&d| max_ns.iter().map(move |&n| (d, n))).collect();
    let max_counts: Vec<usize> = max_cells
        .par_iter()
        .map(|&(d, n)| blockenc::max_circuit(n, d).map(|(c, _)| c.toffoli_count()))
        .collect::<Result<_, _>>()?;
    let comp = blockenc::comparator_exhaustive(comp_n);

    let mut out = OutputDir::create(dir, m)?;
    let mut failures = Vec::new();
    let mut summary = RunSummary::default();
    let rows: Vec<Vec<String>> = u_cells
        .iter()
        .zip(&u_counts)
        .map(|(&(n, s), &(t, g))| vec![n.to_string(), sign_name(s).into(), t.to_string(), g.to_string()])
        .collect();
    out.csv("audit_u_pm.csv", &["n", "sign", "toffoli", "gates"], &rows)?;
    let rows: Vec<Vec<String>> = max_cells
        .iter()
        .zip(&max_counts)
        .map(|(&(d, n), &t)| vec![d.to_string(), n.to_string(), t.to_string(), num(t as f64 / (d * n) as f64)])
        .collect();
    out.csv("audit_max.csv", &["d", "n", "toffoli", "ratio"], &rows)?;
    let (cases, clean) = match &comp {
        Ok(k) => (*k, true),
        Err(e) => {
            failures.push(e.to_string());
            (0, false)
        }
    };
    out.csv(
        "audit_comp.csv",
        &["n", "cases", "clean"],
        &[vec![comp_n.to_string(), cases.to_string(), clean.to_string()]],
    )?;

    let mut fits = Vec::new();
    let mut plot = LinePlot::new("Toffoli counts", "n", "Toffoli gates", false, false);
    for sign in [Sign::Plus, Sign::Minus] {
        let (x, y): (Vec<f64>, Vec<f64>) =
            u_cells.iter().zip(&u_counts).filter(|(c, _)| c.1 == sign).map(|(c, t)| (c.0 as f64, t.0 as f64)).unzip();
        let (s, c, r) = line_with_residual(&x, &y);
        let pass = r < 1.0;
        if !pass {
            failures.push(format!("controlled U{} Toffoli count is not linear (residual {r})", sign_name(sign)));
        }
        let label = format!("controlled_u_{}", sign_name(sign));
        summary.lines.push(format!("{label}: {s:.3} n + {c:.3}, residual {r:.2e}"));
        fits.push(vec![label.clone(), num(s), num(c), num(r), String::new(), pass.to_string()]);
        plot = plot.with(Series::new(label, x.into_iter().zip(y).collect()));
    }
    let cells: Vec<(usize, usize, usize)> = max_cells.iter().zip(&max_counts).map(|(&(d, n), &t)| (d, n, t)).collect();
    let (cfit, resid) = dn_constant(&cells);
    let holds = cfit <= MAX_TOFFOLI_PER_MATCH && resid < 1.0;
    if !holds {
        failures.push(format!("MAX Toffoli counts: constant {cfit:.3}, linear residual {resid:.3}"));
    }
    summary.lines.push(format!("max: Toffoli <= {cfit:.3} d n, residual in n {resid:.2e}"));
    fits.push(vec!["max".into(), String::new(), String::new(), num(resid), num(cfit), holds.to_string()]);
    for &d in &ds {
        let pts = cells.iter().filter(|c| c.0 == d).map(|c| (c.1 as f64, c.2 as f64)).collect();
        plot = plot.with(Series::new(format!("max d={d}"), pts));
    }
    summary.lines.push(format!("comparator n = {comp_n}: {cases} cases, clean ancillas {clean}"));
    out.csv("audit_fits.csv", &["circuit", "slope", "intercept", "max_residual", "constant", "pass"], &fits)?;
    out.svg("audit_toffoli.svg", &plot)?;
    finish(summary, out, failures)
}

fn sign_name(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    }
}

fn polyinv(m: &Manifest, dir: &Path) -> CliResult<RunSummary> {
    let cs: Vec<f64> = m.parsed_list("c")?;
    let epss: Vec<f64> = m.parsed_list("eps")?;
    let dump: bool = m.parsed("dump_coefficients")?;
    let cells: Vec<(f64, f64)> = cs.iter().flat_map(|&c| epss.iter().map(move |&e| (c, e))).collect();
    let results = cells
        .par_iter()
        .map(|&(c, eps)| {
            let p = polyapprox::odd_inverse_polynomial(c, eps)?;
            let min = polyapprox::minimal_inverse_degree(c, eps)?;
            Ok((p.report(), min, p))
        })
        .collect::<Result<Vec<_>, wavesolve_core::Error>>()?;

    let mut out = OutputDir::create(dir, m)?;
    let mut failures = Vec::new();
    let mut summary = RunSummary::default();
    let mut rows = Vec::new();
    for (&(c, eps), (r, min, p)) in cells.iter().zip(&results) {
        let pass = r.sup_error <= r.target && r.max_abs <= 1.0 && r.oddness <= 1e-12;
        if !pass {
            failures.push(format!("c = {c}, eps = {eps:e}: {r:?}"));
        }
        summary.lines.push(format!(
            "c = {c}, eps = {eps:e}: degree {}, error {:.3e} (target {:.3e}), max |P| {:.4}",
            r.degree, r.sup_error, r.target, r.max_abs
        ));
        rows.push(vec![
            num(c),
            num(eps),
            polyapprox::log_rule_ell_max(eps).to_string(),
            p.inverse.ell_max.to_string(),
            min.to_string(),
            p.step.power.to_string(),
            p.step.base.degree().to_string(),
            p.step.degree().to_string(),
            r.degree.to_string(),
            num(r.sup_error),
            num(r.target),
            num(r.max_abs),
            num(r.oddness),
            pass.to_string(),
        ]);
        if dump {
            let tag = format!("c{c}_eps{eps:e}");
            let coeffs = |v: &[f64]| {
                v.iter().enumerate().map(|(l, a)| vec![l.to_string(), format!("{a:e}")]).collect::<Vec<_>>()
            };
            out.csv(&format!("poly_inverse_{tag}.csv"), &["ell", "coefficient"], &coeffs(&p.inverse.series.coeffs))?;
            out.csv(&format!("poly_step_{tag}.csv"), &["ell", "coefficient"], &coeffs(&p.step.base.coeffs))?;
        }
    }
    out.csv(
        "poly_errors.csv",
        &[
            "c",
            "eps",
            "log_rule_ell_max",
            "ell_max",
            "inverse_min_degree",
            "step_power",
            "step_base_degree",
            "step_degree",
            "total_degree",
            "sup_error",
            "target",
            "max_abs",
            "oddness",
            "pass",
        ],
        &rows,
    )?;

    let mut fits = Vec::new();
    let mut plot = LinePlot::new("Polynomial degree against accuracy", "1/eps", "degree", true, false);
    for &c in &cs {
        let sel: Vec<_> = cells.iter().zip(&results).filter(|(cell, _)| cell.0 == c).collect();
        let x: Vec<f64> = sel.iter().map(|(cell, _)| (1.0 / cell.1).ln()).collect();
        for (label, y) in [
            ("total_degree", sel.iter().map(|(_, r)| r.0.degree as f64).collect::<Vec<_>>()),
            ("inverse_min_degree", sel.iter().map(|(_, r)| r.1 as f64).collect()),
        ] {
            if x.len() >= 2 {
                let (s, _) = linear_fit(&x, &y);
                fits.push(vec![num(c), label.to_string(), num(s), num(r_squared(&x, &y))]);
            }
            let pts = sel.iter().zip(&y).map(|((cell, _), &v)| (1.0 / cell.1, v)).collect();
            plot = plot.with(Series::new(format!("{label} c={c}"), pts));
        }
    }
    out.csv("poly_fits.csv", &["c", "quantity", "slope_per_ln_inv_eps", "r_squared"], &fits)?;
    out.svg("poly_degree.svg", &plot)?;
    finish(summary, out, failures)
}

/// Transformed right-hand side for the probe.
fn probe_vector(m: &Manifest, n: usize) -> CliResult<(DVector<f64>, usize)> {
    let big_n = 1usize << n;
    let unit = |k: usize| DVector::from_fn(big_n, |j, _| if j == k { 1.0 } else { 0.0 });
    Ok(match m.get("rhs") {
        "uniform" => (DVector::from_element(big_n, 1.0), 1),
        "first" => (unit(0), 1),
        "last" => (unit(big_n - 1), 1),
        "operator" => {
            let op = parse_operator(m.get("operator"))?;
            let ps = precond::precondition_operator(&op, &parse_wavelet(m.get("wavelet"))?, n)?;
            (ps.basis() * ps.sys.b_normalized()?, ps.sys.d)
        }
        other => {
            return Err(CliError::Invalid(format!("unknown rhs `{other}` (expected uniform, first, last or operator)")))
        }
    })
}

fn direct_probe(m: &Manifest, dir: &Path) -> CliResult<RunSummary> {
    let ns: Vec<usize> = m.range("n")?.collect();
    let probs: Vec<(f64, usize)> = ns
        .par_iter()
        .map(|&n| {
            let (b, d) = probe_vector(m, n)?;
            Ok((solver::direct_probability(&b, n, d)?, d))
        })
        .collect::<CliResult<_>>()?;

    let mut out = OutputDir::create(dir, m)?;
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (&n, &(p, d)) in ns.iter().zip(&probs) {
        let big_n = (1usize << n) as f64;
        let bound = (2.0 / big_n).powi(2);
        if p < bound * (1.0 - 1e-12) {
            failures.push(format!("n = {n}: probability {p:e} below (2/N)^2 = {bound:e}"));
        }
        rows.push(vec![n.to_string(), (1usize << (n * d)).to_string(), num(p), num(bound)]);
        x.push(big_n.ln());
        y.push(p.ln());
    }
    out.csv("direct_probe.csv", &["n", "N", "probability", "lower_bound"], &rows)?;
    let (slope, icpt) = if x.len() >= 2 { linear_fit(&x, &y) } else { (f64::NAN, f64::NAN) };
    out.csv(
        "direct_probe_fit.csv",
        &["rhs", "slope", "intercept"],
        &[vec![m.get("rhs").into(), num(slope), num(icpt)]],
    )?;
    let pts = |v: &[f64]| x.iter().zip(v).map(|(a, b)| (a.exp(), b.exp())).collect();
    let bounds: Vec<f64> = x.iter().map(|a| (2.0 / a.exp()).powi(2).ln()).collect();
    let plot = LinePlot::new("Direct application of the preconditioner", "N", "success probability", true, true)
        .with(Series::new(m.get("rhs"), pts(&y)))
        .with(Series::new("(2/N)^2", pts(&bounds)).dashed());
    out.svg("direct_probe.svg", &plot)?;
    let summary = RunSummary {
        lines: vec![format!("direct probe ({}): log-log slope {slope:.3}", m.get("rhs"))],
        ..Default::default()
    };
    finish(summary, out, failures)
}
