//! Append-only completion cache, keyed by content hash.
//!
//! One JSON record per line. Corrupt lines are skipped with a warning and
//! never fatal, so a crash mid-write costs at most the interrupted record.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CompletionRecord, ContentHash, Source};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheLine {
    pub hash: String,
    pub model_id: String,
    pub prompt_digest: String,
    pub output_text: String,
    pub timestamp: u64,
}

pub struct Cache {
    path: PathBuf,
    index: RwLock<HashMap<String, CacheLine>>,
    // All appends funnel through this single writer.
    writer: Mutex<BufWriter<File>>,
}

impl Cache {
    /// Opens (or creates) the cache file and loads every parseable record.
    pub fn open(path: &Path) -> std::io::Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut index = HashMap::new();
        if path.exists() {
            let raw = fs::read_to_string(path)?;
            for (lineno, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheLine>(line) {
                    Ok(record) => {
                        index.insert(record.hash.clone(), record);
                    }
                    Err(error) => {
                        tracing::warn!(
                            path = %path.display(),
                            line = lineno + 1,
                            %error,
                            "skipping corrupt cache line"
                        );
                    }
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Cache {
            path: path.to_path_buf(),
            index: RwLock::new(index),
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("cache index poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, hash: &ContentHash) -> Option<CompletionRecord> {
        let index = self.index.read().expect("cache index poisoned");
        index.get(hash.as_str()).map(|line| CompletionRecord {
            content_hash: ContentHash(line.hash.clone()),
            output_text: line.output_text.clone(),
            latency: Duration::ZERO,
            source: Source::Cache,
        })
    }

    /// Appends the record and flushes before indexing it, so a record is
    /// only ever visible once it is durable.
    pub fn put(&self, line: CacheLine) -> std::io::Result<()> {
        let serialized = serde_json::to_string(&line)?;
        {
            let mut writer = self.writer.lock().expect("cache writer poisoned");
            writeln!(writer, "{serialized}")?;
            writer.flush()?;
        }
        self.index
            .write()
            .expect("cache index poisoned")
            .insert(line.hash.clone(), line);
        Ok(())
    }
}
