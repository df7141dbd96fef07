//! Output directory bookkeeping, tab-separated tables and the run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Formats a float for a table cell; `{:e}` round-trips exactly.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Files written by one run, relative to its directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Creates `name` and hands a buffered writer to `body`.
    pub fn write<F>(&mut self, name: &str, body: F) -> io::Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.root.join(name))?);
        body(&mut w)?;
        w.flush()?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    /// Writes a header row and data rows, tab separated.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        self.write(name, |w| {
            writeln!(w, "{}", header.join("\t"))?;
            for r in rows {
                writeln!(w, "{}", r.join("\t"))?;
            }
            Ok(())
        })
    }

    /// Two-column series `x  y` for plotting.
    pub fn series(&mut self, name: &str, columns: [&str; 2], points: &[(f64, f64)]) -> io::Result<()> {
        let rows: Vec<Vec<String>> = points.iter().map(|(x, y)| vec![num(*x), num(*y)]).collect();
        self.table(name, &columns, &rows)
    }
}

/// Outcome of one requested check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    ChecksFailed,
    Error,
}

impl RunStatus {
    /// Process exit status.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::ChecksFailed => 1,
            RunStatus::Error => 2,
        }
    }
}

/// Machine-readable record of a run, written last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub experiment: String,
    /// SHA-256 of the effective configuration in canonical JSON form.
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
    pub timings: Vec<Timing>,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub status: RunStatus,
    pub error: Option<String>,
}

impl RunManifest {
    /// Writes `manifest.json` through a temporary file and a rename.
    pub fn write_atomic(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let tmp = dir.join(".manifest.json.tmp");
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(&tmp, text + "\n")?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        serde_json::from_str(&text).map_err(io::Error::other)
    }
}
