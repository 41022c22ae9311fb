//! CSV files with a commented header carrying the resolved configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use crate::rng::SEED_SCHEME;
use crate::Result;

/// Floats are written in shortest round-trip form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Joins coordinates with `;` so a point fits in one CSV field.
pub fn point(x: &[f64]) -> String {
    x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")
}

pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra comment lines (warnings, notes).
    pub notes: Vec<String>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes `dir/name`: `# ` comment lines (seed scheme, notes, resolved
    /// config), then the header row and the body.
    pub fn write(&self, dir: &Path, cfg: &RunConfig) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(&self.name);
        let mut out = BufWriter::new(File::create(&path)?);
        writeln!(out, "# seed_scheme: {SEED_SCHEME}")?;
        writeln!(out, "# seed: {}", cfg.run.seed)?;
        for n in &self.notes {
            writeln!(out, "# note: {n}")?;
        }
        writeln!(out, "# config:")?;
        for line in cfg.to_toml().lines() {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// The configuration echoed in a CSV written by [`CsvTable::write`].
pub fn echoed_config(text: &str) -> String {
    text.lines()
        .skip_while(|l| *l != "# config:")
        .skip(1)
        .map_while(|l| l.strip_prefix("# ").or_else(|| (l == "#").then_some("")))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Lines after the comment block.
pub fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n")
}
