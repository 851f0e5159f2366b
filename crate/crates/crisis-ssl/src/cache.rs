//! Append-only JSONL store of annotator responses.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hex SHA-256 of `text`.
pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub model: String,
    pub prompt_digest: String,
    pub text_digest: String,
}

impl CacheKey {
    pub fn new(model: &str, prompt: &str, text: &str) -> Self {
        Self { model: model.into(), prompt_digest: digest(prompt), text_digest: digest(text) }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    #[serde(flatten)]
    key: CacheKey,
    response: String,
    /// Seconds since the Unix epoch.
    timestamp: u64,
}

/// Responses keyed by (model, prompt digest, text digest). Reads load the whole
/// file; the last record for a key wins. Corrupt lines are skipped with a warning.
#[derive(Debug)]
pub struct AnnotationCache {
    path: PathBuf,
    entries: HashMap<CacheKey, String>,
    file: File,
}

impl AnnotationCache {
    pub fn open(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(rec) => {
                        entries.insert(rec.key, rec.response);
                    }
                    Err(e) => log::warn!("{}:{}: skipping corrupt cache line: {e}", path.display(), i + 1),
                }
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
        // A torn final write has no newline; keep the next record on its own line.
        let torn = fs::read(path).map_err(|e| Error::io(path, e))?.last().is_some_and(|&b| b != b'\n');
        if torn {
            file.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        Ok(Self { path: path.to_path_buf(), entries, file })
    }

    pub fn get(&self, key: &CacheKey) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Append a record and flush it before returning.
    pub fn put(&mut self, key: CacheKey, response: &str) -> Result<()> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let record = CacheRecord { key, response: response.into(), timestamp };
        let mut line = serde_json::to_string(&record).map_err(|e| Error::format(&self.path, e))?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).and_then(|_| self.file.flush()).map_err(|e| Error::io(&self.path, e))?;
        self.entries.insert(record.key, record.response);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
