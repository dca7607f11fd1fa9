//! Flat `key = value` experiment manifests with per-command defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Condnum,
    Solve,
    CircuitAudit,
    Polyinv,
    DirectProbe,
}

/// Keys accepted by every command. `out` and `jobs` do not affect results.
const COMMON: &[(&str, &str)] = &[("seed", "0"), ("jobs", "0"), ("out", "out")];

const CONDNUM: &[(&str, &str)] = &[
    ("operators", "L1,L2,L3"),
    ("wavelets", "db3"),
    ("n_min", "4"),
    ("n_max", "10"),
    ("kernel_policy", "deflate_constant"),
];

const SOLVE: &[(&str, &str)] = &[
    ("operator", "L2"),
    ("wavelet", "db3"),
    ("n", "4"),
    ("kernel_policy", "deflate_constant"),
    ("route", "oracle_dilation"),
    ("t", "8"),
    ("qmi_eps", "none"),
    ("mode", "ideal"),
    ("observables", "identity,position,cos,neighbor"),
];

const CIRCUIT_AUDIT: &[(&str, &str)] = &[
    ("u_pm_n_min", "2"),
    ("u_pm_n_max", "8"),
    ("max_d", "2,3"),
    ("max_n_min", "2"),
    ("max_n_max", "6"),
    ("comp_n", "4"),
];

const POLYINV: &[(&str, &str)] = &[("c", "32"), ("eps", "1e-2,1e-3,1e-4,1e-5,1e-6"), ("dump_coefficients", "true")];

const DIRECT_PROBE: &[(&str, &str)] =
    &[("rhs", "uniform"), ("operator", "L2"), ("wavelet", "db3"), ("n_min", "3"), ("n_max", "8")];

impl Command {
    pub const ALL: [Command; 5] =
        [Command::Condnum, Command::Solve, Command::CircuitAudit, Command::Polyinv, Command::DirectProbe];

    pub fn name(self) -> &'static str {
        match self {
            Command::Condnum => "condnum",
            Command::Solve => "solve",
            Command::CircuitAudit => "circuit-audit",
            Command::Polyinv => "polyinv",
            Command::DirectProbe => "direct-probe",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::Condnum => CONDNUM,
            Command::Solve => SOLVE,
            Command::CircuitAudit => CIRCUIT_AUDIT,
            Command::Polyinv => POLYINV,
            Command::DirectProbe => DIRECT_PROBE,
        }
    }

    fn accepts(self, key: &str) -> bool {
        COMMON.iter().chain(self.defaults()).any(|(k, _)| *k == key)
    }
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("line {}: expected `key = value`", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Invalid(format!("line {}: empty key", lineno + 1)));
        }
        pairs.push((k.to_string(), v.to_string()));
    }
    Ok(pairs)
}

/// Parses a `KEY=VALUE` override.
pub fn parse_override(s: &str) -> CliResult<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Invalid(format!("override `{s}` is not KEY=VALUE")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Fully resolved manifest of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub command: Command,
    values: BTreeMap<String, String>,
}

impl Manifest {
    /// Defaults, then the manifest file, then overrides. Unknown keys and keys repeated
    /// within the file are rejected.
    pub fn resolve(command: Command, file: Option<&str>, overrides: &[(String, String)]) -> CliResult<Manifest> {
        let mut values: BTreeMap<String, String> =
            COMMON.iter().chain(command.defaults()).map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut seen = BTreeMap::new();
        for (k, v) in file.map(parse_pairs).transpose()?.unwrap_or_default() {
            if k == "command" {
                if v != command.name() {
                    return Err(CliError::Invalid(format!("manifest is for `{v}`, not `{}`", command.name())));
                }
                continue;
            }
            if seen.insert(k.clone(), ()).is_some() {
                return Err(CliError::Invalid(format!("duplicate key `{k}`")));
            }
            Self::set(command, &mut values, k, v)?;
        }
        for (k, v) in overrides {
            Self::set(command, &mut values, k.clone(), v.clone())?;
        }
        Ok(Manifest { command, values })
    }

    fn set(command: Command, values: &mut BTreeMap<String, String>, k: String, v: String) -> CliResult<()> {
        if !command.accepts(&k) {
            return Err(CliError::Invalid(format!("unknown key `{k}` for {}", command.name())));
        }
        values.insert(k, v);
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key `{key}` has no default"))
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> CliResult<T> {
        let raw = self.get(key);
        raw.parse().map_err(|_| CliError::Invalid(format!("`{key}` = `{raw}` is not a valid value")))
    }

    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key).split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
    }

    pub fn parsed_list<T: FromStr>(&self, key: &str) -> CliResult<Vec<T>> {
        self.list(key)
            .iter()
            .map(|s| s.parse().map_err(|_| CliError::Invalid(format!("`{key}` entry `{s}` is not a valid value"))))
            .collect()
    }

    /// Inclusive range from `{prefix}_min` and `{prefix}_max`.
    pub fn range(&self, prefix: &str) -> CliResult<std::ops::RangeInclusive<usize>> {
        let lo: usize = self.parsed(&format!("{prefix}_min"))?;
        let hi: usize = self.parsed(&format!("{prefix}_max"))?;
        if lo > hi {
            return Err(CliError::Invalid(format!("{prefix}_min = {lo} exceeds {prefix}_max = {hi}")));
        }
        Ok(lo..=hi)
    }

    pub fn set_value(&mut self, key: &str, value: &str) -> CliResult<()> {
        Self::set(self.command, &mut self.values, key.to_string(), value.to_string())
    }

    /// `command = …` followed by every key in sorted order.
    pub fn render(&self) -> String {
        let mut out = format!("command = {}\n", self.command.name());
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of the rendered manifest without `out` and `jobs`.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("command = {}\n", self.command.name()));
        for (k, v) in self.values.iter().filter(|(k, _)| !matches!(k.as_str(), "out" | "jobs")) {
            h.update(format!("{k} = {v}\n"));
        }
        h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}
