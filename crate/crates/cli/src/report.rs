//! Run reports, file digests and CSV helpers.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// One JSON line describing a kernel run.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub eps: f64,
    pub variant: String,
    pub m_lo: u64,
    pub m_hi: u64,
    pub n_sparse: u64,
    pub wall_ms: f64,
    pub outputs: Vec<String>,
}

impl RunReport {
    /// Prints the report to stderr and appends it to `file` when given.
    pub fn emit(&self, file: Option<&Path>) -> CliResult<()> {
        let line = serde_json::to_string(self).map_err(|e| CliError::internal(e.to_string()))?;
        eprintln!("{line}");
        if let Some(path) = file {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| CliError::io(format!("opening {}: {e}", path.display())))?;
            writeln!(f, "{line}")
                .map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

pub fn digest(path: &Path) -> CliResult<InputDigest> {
    let bytes =
        fs::read(path).map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

pub fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

/// 17 significant digits.
pub fn real(x: f64) -> String {
    uniexp_core::mtx::fmt_real(x)
}

pub fn csv_writer(path: Option<&Path>) -> CliResult<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(
            fs::File::create(p)
                .map_err(|e| CliError::io(format!("creating {}: {e}", p.display())))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

pub fn create_dir(path: &Path) -> CliResult<PathBuf> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::io(format!("creating {}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}
