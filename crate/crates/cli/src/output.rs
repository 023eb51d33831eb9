//! Output files of a run and the manifest that lists them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Writes files into the output directory and remembers their names in
/// creation order.
pub struct Outputs {
    dir: PathBuf,
    names: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), names: Vec::new() })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn write_with<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.names.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = to_json(value)?;
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn write_manifest(&self, manifest: &Manifest) -> Result<(), CliError> {
        std::fs::write(self.dir.join(MANIFEST), to_json(manifest)?)?;
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Serialize)]
pub struct Versions {
    #[serde(rename = "betachain-cli")]
    pub cli: &'static str,
    #[serde(rename = "betachain-core")]
    pub core: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Self { cli: env!("CARGO_PKG_VERSION"), core: betachain::VERSION }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ConfigError,
    NumericError,
    VerificationFailed,
    IoError,
}

/// `manifest.json`: everything needed to reproduce and audit a run. It holds
/// no timestamps or paths, so identical inputs give identical bytes.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub versions: Versions,
    pub command: String,
    pub seed: u64,
    /// The parsed configuration with defaults filled in; `null` if it could not be read.
    pub config: Option<RunConfig>,
    /// Files written by the run, in creation order.
    pub outputs: Vec<String>,
    pub status: Status,
    pub exit_code: u8,
    pub message: Option<String>,
}
