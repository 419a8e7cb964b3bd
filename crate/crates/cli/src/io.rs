//! File and stream plumbing shared by the subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use bt_core::models::{load_csv, load_points, Dataset, TargetModel};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Pretty JSON with a trailing newline.
pub fn pretty(value: &impl Serialize) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Where a subcommand's JSON goes: `--out` if given, else stdout.
#[derive(Debug, Clone, Default)]
pub struct Sink {
    pub path: Option<PathBuf>,
}

impl Sink {
    pub fn emit(&self, text: &str) -> CliResult<()> {
        match &self.path {
            Some(p) => write_file(p, text.as_bytes()),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }

    pub fn emit_json(&self, value: &impl Serialize) -> CliResult<()> {
        self.emit(&pretty(value)?)
    }

    /// Default location for a companion file: next to `--out` with the
    /// given extension, or `<stem>.<ext>` in the working directory.
    pub fn companion(&self, stem: &str, ext: &str) -> PathBuf {
        match &self.path {
            Some(p) => p.with_extension(ext),
            None => PathBuf::from(format!("{stem}.{ext}")),
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_model(path: &Path) -> CliResult<TargetModel> {
    Ok(TargetModel::load(path)?)
}

pub fn load_dataset(path: &Path, label_column: &str) -> CliResult<Dataset> {
    Ok(load_csv(path, label_column)?)
}

pub fn require<'a, T>(value: Option<&'a T>, flag: &str, what: &str) -> CliResult<&'a T> {
    value.ok_or_else(|| CliError::usage(format!("{what} needs {flag}")))
}

/// First row of a points file, label column dropped if present.
pub fn load_point(path: &Path, label_column: &str) -> CliResult<Vec<f64>> {
    let mut rows = load_points(path, Some(label_column))?;
    Ok(rows.swap_remove(0))
}

/// Parses `WxH`.
pub fn parse_grid(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::usage(format!("--grid expects WIDTHxHEIGHT, got {s:?}"));
    let (w, h) = s.split_once('x').ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    Ok((w, h))
}
