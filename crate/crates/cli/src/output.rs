use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::Format;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "resbench";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What produced a report: enough to rerun it. Carries no timestamps.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the command's resolved configuration as JSON (output directory excluded).
    pub config_sha256: String,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> CliResult<Self> {
        let json = serde_json::to_vec(config).map_err(|e| CliError::config(e.to_string()))?;
        Ok(Provenance {
            tool: TOOL,
            version: VERSION,
            command: command.to_string(),
            seed,
            config_sha256: hex::encode(Sha256::digest(&json)),
        })
    }

    fn csv_header(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# seed: {}\n# config_sha256: {}\n",
            self.tool, self.version, self.command, self.seed, self.config_sha256
        )
    }
}

/// Output directory writer that stamps every report with its provenance.
pub struct Output {
    dir: PathBuf,
    pub format: Format,
    pub provenance: Provenance,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path, format: Format, provenance: Provenance) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            format,
            provenance,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::config(format!("cannot create {}: {e}", parent.display())))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes a CSV produced by `body`, preceded by `#` provenance lines.
    pub fn csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut Vec<u8>) -> resbench_core::Result<()>,
    ) -> CliResult<()> {
        let mut buf = self.provenance.csv_header().into_bytes();
        body(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    /// Writes `value` as pretty JSON with a leading `provenance` object.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let body = serde_json::to_value(value).map_err(|e| CliError::data(e.to_string()))?;
        let mut doc = serde_json::Map::new();
        doc.insert(
            "provenance".into(),
            serde_json::to_value(&self.provenance).map_err(|e| CliError::data(e.to_string()))?,
        );
        match body {
            Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("report".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).map_err(|e| CliError::data(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Records that a file was written by other means (e.g. the EMB1 writer).
    pub fn note_written(&mut self, path: PathBuf) {
        self.written.push(path);
    }
}

/// Appends one timestamped line per run to `run.log`; failures here never fail the run.
pub fn log_run(dir: &Path, command: &str, message: &str) {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    if fs::create_dir_all(dir).is_err() {
        return;
    }
    if let Ok(mut f) = fs::OpenOptions::new().create(true).append(true).open(dir.join("run.log")) {
        let _ = writeln!(f, "{stamp} {TOOL} {VERSION} {command}: {message}");
    }
}

/// Writes a header and rows with standard CSV quoting.
pub fn csv_rows<W: Write>(writer: W, header: &[&str], rows: &[Vec<String>]) -> resbench_core::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
        .map_err(|e| resbench_core::Error::InvalidArgument(e.to_string()))
}
