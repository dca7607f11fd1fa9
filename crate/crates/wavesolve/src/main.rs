use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wavesolve::manifest::parse_override;
use wavesolve::{CliError, CliResult, Command, Manifest};

#[derive(Parser)]
#[command(name = "wavesolve", version, about = "Wavelet-preconditioned linear solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Condition numbers with and without preconditioning.
    Condnum(Common),
    /// End-to-end expectation values through the simulated pipeline.
    Solve(Common),
    /// Gate censuses and exhaustive checks of the arithmetic circuits.
    CircuitAudit(Common),
    /// Polynomial approximations of the inverse.
    Polyinv(Common),
    /// Success probability of applying the preconditioner directly.
    DirectProbe(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 uses every core).
    #[arg(long)]
    jobs: Option<usize>,
    /// Manifest override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn resolve(command: Command, args: &Common) -> CliResult<Manifest> {
    let text = match &args.manifest {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
        None => None,
    };
    let mut overrides = args.set.iter().map(|s| parse_override(s)).collect::<CliResult<Vec<_>>>()?;
    if let Some(out) = &args.out {
        overrides.push(("out".into(), out.display().to_string()));
    }
    if let Some(seed) = args.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    if let Some(jobs) = args.jobs {
        overrides.push(("jobs".into(), jobs.to_string()));
    }
    Manifest::resolve(command, text.as_deref(), &overrides)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match &cli.command {
        Sub::Condnum(a) => (Command::Condnum, a),
        Sub::Solve(a) => (Command::Solve, a),
        Sub::CircuitAudit(a) => (Command::CircuitAudit, a),
        Sub::Polyinv(a) => (Command::Polyinv, a),
        Sub::DirectProbe(a) => (Command::DirectProbe, a),
    };
    match resolve(command, args).and_then(|m| wavesolve::run(&m)) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
