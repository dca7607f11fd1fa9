use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command as Process;

use proptest::prelude::*;
use wavesolve::manifest::{parse_override, parse_pairs};
use wavesolve::{CliError, Command, Manifest};

type Row = BTreeMap<String, String>;

fn manifest(command: Command, overrides: &[(&str, &str)]) -> Manifest {
    let o: Vec<(String, String)> = overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    Manifest::resolve(command, None, &o).unwrap()
}

fn run_in(dir: &Path, command: Command, overrides: &[(&str, &str)]) -> wavesolve::RunSummary {
    let out = dir.display().to_string();
    let mut o = overrides.to_vec();
    o.push(("out", &out));
    wavesolve::run(&manifest(command, &o)).unwrap()
}

fn read_csv(path: &Path) -> (String, Vec<Row>) {
    let text = fs::read_to_string(path).unwrap();
    let (first, body) = text.split_once('\n').unwrap();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().unwrap().clone();
    let rows = reader
        .records()
        .map(|r| header.iter().zip(r.unwrap().iter()).map(|(k, v)| (k.to_string(), v.to_string())).collect())
        .collect();
    (first.to_string(), rows)
}

fn num(row: &Row, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {}", row[key]))
}

fn binary(args: &[&str]) -> i32 {
    Process::new(env!("CARGO_BIN_EXE_wavesolve")).args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn manifest_layers_defaults_file_and_overrides() {
    let text = "# solver settings\ncommand = solve\nn = 3\nroute = qpe_crot # trailing comment\n\n";
    let m = Manifest::resolve(Command::Solve, Some(text), &[("t".into(), "6".into())]).unwrap();
    assert_eq!(m.get("n"), "3");
    assert_eq!(m.get("route"), "qpe_crot");
    assert_eq!(m.get("t"), "6");
    assert_eq!(m.get("wavelet"), "db3");
    assert_eq!(m.parsed::<usize>("t").unwrap(), 6);
    assert_eq!(m.list("observables"), ["identity", "position", "cos", "neighbor"]);
    let m = manifest(Command::Condnum, &[("n_min", "5"), ("n_max", "7")]);
    assert_eq!(m.range("n").unwrap(), 5..=7);
    assert_eq!(parse_override("seed = 4").unwrap(), ("seed".into(), "4".into()));
    assert!(parse_override("seed").is_err());
    assert_eq!(parse_pairs("a=1\n# b=2\n").unwrap(), [("a".to_string(), "1".to_string())]);
}

#[test]
fn invalid_manifests_are_rejected() {
    let cases = ["bogus = 1", "n = 3\nn = 4", "command = condnum", "no equals sign", " = 3"];
    for text in cases {
        let err = Manifest::resolve(Command::Solve, Some(text), &[]).unwrap_err();
        assert!(matches!(err, CliError::Invalid(_)), "{text}: {err}");
        assert_eq!(err.exit_code(), 1);
    }
    let m = manifest(Command::Condnum, &[("n_min", "8"), ("n_max", "4")]);
    assert!(m.range("n").is_err());
    assert!(manifest(Command::Solve, &[("n", "three")]).parsed::<usize>("n").is_err());
    assert_eq!(CliError::Verification("x".into()).exit_code(), 2);
}

#[test]
fn hash_ignores_out_and_jobs() {
    let a = manifest(Command::Polyinv, &[("out", "/tmp/a"), ("jobs", "1")]);
    let b = manifest(Command::Polyinv, &[("out", "/tmp/b"), ("jobs", "4")]);
    let c = manifest(Command::Polyinv, &[("seed", "1")]);
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
    assert_ne!(a.render(), b.render());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rendered_manifest_resolves_to_itself(seed in 0u64..1_000_000, n in 2usize..8, t in 1usize..12) {
        let m = manifest(Command::Solve, &[("seed", &seed.to_string()), ("n", &n.to_string()), ("t", &t.to_string())]);
        let again = Manifest::resolve(Command::Solve, Some(&m.render()), &[]).unwrap();
        prop_assert_eq!(&again, &m);
        prop_assert_eq!(again.hash(), m.hash());
    }
}

#[test]
fn every_output_carries_the_manifest_hash() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_in(dir.path(), Command::DirectProbe, &[("n_max", "5")]);
    let hash = manifest(Command::DirectProbe, &[("n_max", "5")]).hash();
    assert!(summary.files.len() >= 4);
    for f in &summary.files {
        let text = fs::read_to_string(f).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.contains(&format!("manifest-sha256: {hash}")), "{}: {first}", f.display());
    }
    let saved = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    let m = Manifest::resolve(Command::DirectProbe, Some(&saved), &[]).unwrap();
    assert_eq!(m.hash(), hash);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let one = tempfile::tempdir().unwrap();
    let two = tempfile::tempdir().unwrap();
    let settings = [("operators", "L1,L2"), ("n_min", "3"), ("n_max", "6"), ("wavelets", "db2,db3")];
    run_in(one.path(), Command::Condnum, &[&settings[..], &[("jobs", "1")]].concat());
    run_in(two.path(), Command::Condnum, &[&settings[..], &[("jobs", "3")]].concat());
    for name in ["condnum.csv", "condnum_fits.csv", "condnum.svg"] {
        assert_eq!(fs::read(one.path().join(name)).unwrap(), fs::read(two.path().join(name)).unwrap(), "{name}");
    }
    let one = tempfile::tempdir().unwrap();
    let two = tempfile::tempdir().unwrap();
    run_in(one.path(), Command::Solve, &[("n", "3"), ("jobs", "1")]);
    run_in(two.path(), Command::Solve, &[("n", "3"), ("jobs", "4")]);
    assert_eq!(fs::read(one.path().join("solve.csv")).unwrap(), fs::read(two.path().join("solve.csv")).unwrap());
}

#[test]
fn solve_identity_operator_recovers_the_right_hand_side() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::Solve, &[("operator", "identity"), ("n", "3")]);
    let (_, rows) = read_csv(&dir.path().join("solve.csv"));
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(num(r, "abs_error") <= 1e-10, "{r:?}");
        assert_eq!(r["within_bound"], "true");
    }
}

#[test]
fn solve_oracle_and_phase_estimation_routes() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::Solve, &[("operator", "L2"), ("n", "4")]);
    let (_, rows) = read_csv(&dir.path().join("solve.csv"));
    for r in &rows {
        assert!(num(r, "abs_error") <= 1e-6, "{r:?}");
        assert!(num(r, "p_succ") >= 1.0 / num(r, "kappa_p").powi(2));
        assert_eq!(r["route"], "oracle_dilation");
    }
    let dir = tempfile::tempdir().unwrap();
    run_in(
        dir.path(),
        Command::Solve,
        &[("n", "3"), ("route", "qpe_crot"), ("t", "8"), ("observables", "position,cos")],
    );
    let (_, rows) = read_csv(&dir.path().join("solve.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(num(r, "abs_error") <= num(r, "bound"), "{r:?}");
        assert_eq!(r["t"], "8");
    }
}

#[test]
fn faithful_mode_records_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    run_in(
        dir.path(),
        Command::Solve,
        &[("n", "3"), ("mode", "faithful"), ("seed", "11"), ("observables", "identity")],
    );
    let (_, rows) = read_csv(&dir.path().join("solve.csv"));
    assert_eq!(rows[0]["seed"], "11");
    assert_eq!(rows[0]["mode"], "faithful");
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    assert_eq!(binary(&["solve", "--out", &out, "--set", "operator=L1", "--set", "kernel_policy=none"]), 1);
    assert_eq!(binary(&["solve", "--out", &out, "--set", "bogus=1"]), 1);
    assert_eq!(binary(&["solve", "--out", &out, "--set", "operator=L7"]), 1);
    assert_eq!(binary(&["frobnicate"]), 1);
    assert_eq!(binary(&["solve", "--manifest", "/nonexistent/manifest.txt"]), 1);
    assert_eq!(binary(&["--help"]), 0);
    assert_eq!(binary(&["solve", "--out", &out, "--seed", "3", "--jobs", "1", "--set", "n=3"]), 0);
    let m = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(m.contains("seed = 3") && m.contains("n = 3"));

    let file = dir.path().join("run.txt");
    fs::write(&file, "command = direct-probe\nrhs = last\nn_max = 5\n").unwrap();
    assert_eq!(binary(&["direct-probe", "--manifest", file.to_str().unwrap(), "--out", &out]), 0);
    assert_eq!(binary(&["condnum", "--manifest", file.to_str().unwrap(), "--out", &out]), 1);
}

#[test]
fn condnum_default_sweep() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::Condnum, &[]);
    let (_, rows) = read_csv(&dir.path().join("condnum.csv"));
    assert_eq!(rows.len(), 21);
    for r in &rows {
        assert!(num(r, "kappa_precond") < num(r, "kappa_raw"), "{r:?}");
        assert_eq!(num(r, "N"), 2f64.powf(num(r, "n")));
    }
    let (_, fits) = read_csv(&dir.path().join("condnum_fits.csv"));
    assert_eq!(fits.len(), 3);
    for f in &fits {
        assert!((num(f, "raw_slope") - 2.0).abs() <= 0.1, "{f:?}");
        assert!(num(f, "precond_slope") < 0.3, "{f:?}");
    }
    let svg = fs::read_to_string(dir.path().join("condnum.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.contains("</svg>"));
}

#[test]
fn condnum_wavelet_sweep_and_two_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    run_in(
        dir.path(),
        Command::Condnum,
        &[("operators", "L1"), ("wavelets", "db2,sym3,coif2,cdf97"), ("n_min", "4"), ("n_max", "7")],
    );
    let (_, fits) = read_csv(&dir.path().join("condnum_fits.csv"));
    assert_eq!(fits.len(), 4);
    for f in &fits {
        assert!(num(f, "precond_slope") < 0.5, "{f:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::Condnum, &[("operators", "Laplace2D"), ("n_min", "2"), ("n_max", "5")]);
    let (_, rows) = read_csv(&dir.path().join("condnum.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["d"] == "2"));
    assert_eq!(rows[3]["N"], "1024");
}

#[test]
fn circuit_audit_passes() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::CircuitAudit, &[("comp_n", "3")]);
    let (_, fits) = read_csv(&dir.path().join("audit_fits.csv"));
    assert!(fits.iter().all(|f| f["pass"] == "true"), "{fits:?}");
    let (_, comp) = read_csv(&dir.path().join("audit_comp.csv"));
    assert!(!comp.is_empty());
    let (_, max) = read_csv(&dir.path().join("audit_max.csv"));
    assert_eq!(max.len(), 2 * 5);
}

#[test]
fn polyinv_small_run() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::Polyinv, &[("c", "4"), ("eps", "1e-2,1e-3,1e-4")]);
    let (_, rows) = read_csv(&dir.path().join("poly_errors.csv"));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r["pass"], "true");
        assert!(num(r, "sup_error") <= num(r, "target"));
        assert!(num(r, "max_abs") <= 1.0);
    }
    let degrees: Vec<f64> = rows.iter().map(|r| num(r, "total_degree")).collect();
    assert!(degrees.windows(2).all(|w| w[0] <= w[1]), "{degrees:?}");
    let (_, coeffs) = read_csv(&dir.path().join("poly_inverse_c4_eps1e-3.csv"));
    assert_eq!(coeffs[0]["ell"], "0");
    assert!(dir.path().join("poly_degree.svg").exists());
}

#[test]
fn direct_probe_bounds_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::DirectProbe, &[("rhs", "last")]);
    let (_, rows) = read_csv(&dir.path().join("direct_probe.csv"));
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!((num(r, "probability") - num(r, "lower_bound")).abs() < 1e-12);
    }
    let (_, fit) = read_csv(&dir.path().join("direct_probe_fit.csv"));
    assert!((num(&fit[0], "slope") + 2.0).abs() < 1e-9);
    for rhs in ["uniform", "first", "operator"] {
        let dir = tempfile::tempdir().unwrap();
        run_in(dir.path(), Command::DirectProbe, &[("rhs", rhs), ("n_max", "6")]);
        let (_, rows) = read_csv(&dir.path().join("direct_probe.csv"));
        assert!(rows.iter().all(|r| num(r, "probability") >= num(r, "lower_bound") - 1e-15), "{rhs}");
    }
}
