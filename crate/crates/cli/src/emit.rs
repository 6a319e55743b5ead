//! Output directory with a checksummed manifest.

use std::path::{Path, PathBuf};

use affquant::phase_space::{Profile, QuasiDistribution};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

pub struct Bundle {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Bundle { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: contents.len(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<(), Failure> {
        self.write(name, &pretty(v))
    }

    /// `<stem>.csv` plus the `<stem>.json` sidecar; `tol` is added to the sidecar tolerances.
    pub fn distribution(&mut self, stem: &str, d: &QuasiDistribution, tol: f64) -> Result<(), Failure> {
        self.write(&format!("{stem}.csv"), &d.to_csv())?;
        let mut side = d.sidecar();
        let mut tolerances = Map::new();
        tolerances.insert("requested".into(), json!(tol));
        if let Some(t) = d.metadata.get("tolerance") {
            tolerances.insert("quadrature".into(), t.clone());
        }
        side["tolerances"] = Value::Object(tolerances);
        let residuals: Map<String, Value> =
            d.metadata.iter().filter(|(k, _)| k.contains("residual")).map(|(k, v)| (k.clone(), v.clone())).collect();
        side["residuals"] = Value::Object(residuals);
        self.write_json(&format!("{stem}.json"), &side)
    }

    pub fn profile(&mut self, stem: &str, p: &Profile) -> Result<(), Failure> {
        self.write(&format!("{stem}.csv"), &p.to_csv())
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(self, mut manifest: Map<String, Value>) -> Result<PathBuf, Failure> {
        manifest.insert("files".into(), serde_json::to_value(&self.files).expect("file list serializes"));
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, pretty(&Value::Object(manifest))).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}
