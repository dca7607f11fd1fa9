//! Output directory handling: every file starts with a comment line carrying the
//! manifest hash, and the resolved manifest is written next to the results.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use crate::plot::LinePlot;

pub const MANIFEST_FILE: &str = "manifest.txt";

pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path, manifest: &Manifest) -> CliResult<OutputDir> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut out = OutputDir { dir: dir.to_path_buf(), hash: manifest.hash(), written: Vec::new() };
        let text = format!("{}{}", out.header("#"), manifest.render());
        out.write(MANIFEST_FILE, text.as_bytes())?;
        Ok(out)
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn header(&self, comment: &str) -> String {
        format!("{comment} manifest-sha256: {}\n", self.hash)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let mut buf = self.header("#").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush().map_err(|e| CliError::io(name, e))?;
        }
        self.write(name, &buf)
    }

    pub fn svg(&mut self, name: &str, plot: &LinePlot) -> CliResult<PathBuf> {
        let text = format!("<!--{}-->\n{}", self.header("").trim_end(), plot.render());
        self.write(name, text.as_bytes())
    }
}

/// Plain decimal for moderate magnitudes, scientific notation otherwise.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e7).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
