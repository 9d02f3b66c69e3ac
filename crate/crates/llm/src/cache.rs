//! Content-addressed completion cache: one JSON file per record, named by the
//! request's cache key.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::request::CompletionRecord;
use crate::LlmError;

#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    write_lock: Mutex<()>,
    tmp_counter: AtomicU64,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            write_lock: Mutex::new(()),
            tmp_counter: AtomicU64::new(0),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CompletionRecord>, LlmError> {
        let path = self.path_for(key);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LlmError::Cache(format!("{}: {e}", path.display()))),
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))
    }

    /// Store a record under its request's key. Writers are serialized and each
    /// file appears atomically, so readers never see a partial record.
    pub fn put(&self, record: &CompletionRecord) -> Result<PathBuf, LlmError> {
        let key = record.request.cache_key();
        let path = self.path_for(&key);
        let mut text = serde_json::to_string_pretty(record).expect("record serializes");
        text.push('\n');

        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let io_err = |e: io::Error| LlmError::Cache(format!("{}: {e}", path.display()));
        fs::create_dir_all(&self.dir).map_err(io_err)?;
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{key}.{}.{n}.tmp", std::process::id()));
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(text.as_bytes()).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
        drop(f);
        fs::rename(&tmp, &path).map_err(io_err)?;
        Ok(path)
    }

    /// Keys of every stored record, sorted.
    pub fn keys(&self) -> Result<Vec<String>, LlmError> {
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(LlmError::Cache(format!("{}: {e}", self.dir.display()))),
        };
        let mut keys: Vec<String> = entries
            .filter_map(Result::ok)
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let key = name.strip_suffix(".json")?;
                (!key.starts_with('.')).then(|| key.to_string())
            })
            .collect();
        keys.sort();
        Ok(keys)
    }
}
