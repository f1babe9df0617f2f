//! Error reporting, staged output and run manifests.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;

/// A rejected input row, located in its source file when possible.
#[derive(Clone, Debug, Serialize)]
pub struct RowViolation {
    pub line: Option<usize>,
    pub scan_id: Option<String>,
    pub slice_id: Option<String>,
    pub rule: String,
    pub detail: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] scanfuse::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{} invalid row(s) in {}", violations.len(), path.display())]
    Violations { path: PathBuf, violations: Vec<RowViolation> },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Io { .. } => "io",
            CliError::Violations { .. } => "violations",
            CliError::Failed(_) => "failed",
        }
    }

    /// Machine-readable description of the failure.
    pub fn report(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "status": "error",
            "kind": self.kind(),
            "message": self.to_string(),
        });
        if let CliError::Violations { path, violations } = self {
            v["file"] = serde_json::json!(path.display().to_string());
            v["violations"] = serde_json::json!(violations);
        }
        if let CliError::Data(scanfuse::Error::Parse { line, .. }) = self {
            v["line"] = serde_json::json!(line);
        }
        v
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_sha256: String,
    config: &'a PipelineConfig,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    /// Wall-clock time of the run; not part of any checksum.
    created_unix: u64,
}

/// One invocation: records what was read, holds what will be written, and
/// writes nothing until [`Run::commit`].
pub struct Run {
    command: &'static str,
    pub config: PipelineConfig,
    inputs: Vec<FileDigest>,
    outputs: Vec<(PathBuf, Vec<u8>)>,
}

impl Run {
    pub fn new(command: &'static str, config: PipelineConfig) -> Self {
        Self { command, config, inputs: Vec::new(), outputs: Vec::new() }
    }

    /// Reads an input file and records its checksum.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let sha256 = sha256_hex(&bytes);
        log::debug!("read {} ({} bytes, sha256 {sha256})", path.display(), bytes.len());
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256 });
        Ok(bytes)
    }

    pub fn stage(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.outputs.push((path.into(), bytes));
    }

    /// Writes every staged file (each through a temporary file renamed into
    /// place) and then the manifest at `manifest_path`.
    pub fn commit(self, manifest_path: &Path) -> Result<(), CliError> {
        let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut digests = Vec::with_capacity(self.outputs.len());
        for (path, bytes) in &self.outputs {
            let shown = path.strip_prefix(&base).unwrap_or(path).display().to_string();
            digests.push(FileDigest { path: shown, sha256: sha256_hex(bytes) });
        }
        let config_json = serde_json::to_vec(&self.config).map_err(scanfuse::Error::from)?;
        let manifest = Manifest {
            tool: "scanfuse",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.config.seed,
            config_sha256: sha256_hex(&config_json),
            config: &self.config,
            inputs: self.inputs,
            outputs: digests,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).map_err(scanfuse::Error::from)?;
        manifest_bytes.push(b'\n');
        for (path, bytes) in &self.outputs {
            write_atomic(path, bytes)?;
            log::info!("wrote {}", path.display());
        }
        write_atomic(manifest_path, &manifest_bytes)?;
        log::info!("wrote {}", manifest_path.display());
        Ok(())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// `<file>.manifest.json` next to a single-file output.
pub fn sibling_manifest(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}
