//! Directory-tree JSON document store. Every write goes to a temporary
//! sibling and is renamed into place, so readers never see a torn file.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("document not found: {0}")]
    NotFound(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed document {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("path escapes the store root: {0}")]
    BadPath(String),
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone)]
pub struct DocStore {
    root: PathBuf,
}

impl DocStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|source| StoreError::Io {
            path: root.display().to_string(),
            source,
        })?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn resolve(&self, rel: &str) -> Result<PathBuf, StoreError> {
        let path = Path::new(rel);
        if rel.is_empty()
            || path.is_absolute()
            || path.components().any(|c| !matches!(c, std::path::Component::Normal(_)))
        {
            return Err(StoreError::BadPath(rel.to_string()));
        }
        Ok(self.root.join(path))
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.resolve(rel).is_ok_and(|p| p.exists())
    }

    pub fn write_bytes(&self, rel: &str, bytes: &[u8]) -> Result<(), StoreError> {
        let path = self.resolve(rel)?;
        let io = |source| StoreError::Io { path: rel.to_string(), source };
        let dir = path.parent().expect("resolved paths have a parent");
        std::fs::create_dir_all(dir).map_err(io)?;
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("doc");
        let tmp = dir.join(format!(
            ".{name}.tmp-{}-{}",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::write(&tmp, bytes).map_err(io)?;
        std::fs::rename(&tmp, &path).map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            io(e)
        })
    }

    pub fn write_text(&self, rel: &str, text: &str) -> Result<(), StoreError> {
        self.write_bytes(rel, text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, doc: &T) -> Result<(), StoreError> {
        let mut bytes = serde_json::to_vec_pretty(doc).map_err(|source| StoreError::Json {
            path: rel.to_string(),
            source,
        })?;
        bytes.push(b'\n');
        self.write_bytes(rel, &bytes)
    }

    pub fn read_text(&self, rel: &str) -> Result<String, StoreError> {
        let path = self.resolve(rel)?;
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(StoreError::NotFound(rel.to_string())),
            Err(source) => Err(StoreError::Io { path: rel.to_string(), source }),
        }
    }

    pub fn read_json<T: DeserializeOwned>(&self, rel: &str) -> Result<T, StoreError> {
        let text = self.read_text(rel)?;
        serde_json::from_str(&text).map_err(|source| StoreError::Json { path: rel.to_string(), source })
    }

    /// Sorted entry names directly under `rel` (empty if it does not exist).
    pub fn list(&self, rel: &str) -> Result<Vec<String>, StoreError> {
        let path = if rel.is_empty() { self.root.clone() } else { self.resolve(rel)? };
        let entries = match std::fs::read_dir(&path) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(StoreError::Io { path: rel.to_string(), source }),
        };
        let mut names: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| !n.starts_with('.'))
            .collect();
        names.sort();
        Ok(names)
    }

    /// Relative paths and contents of every file below `rel`, sorted by path.
    pub fn snapshot(&self, rel: &str) -> Result<Vec<(String, Vec<u8>)>, StoreError> {
        let mut out = Vec::new();
        let base = if rel.is_empty() { self.root.clone() } else { self.resolve(rel)? };
        let mut stack = vec![base.clone()];
        while let Some(dir) = stack.pop() {
            let Ok(entries) = std::fs::read_dir(&dir) else { continue };
            for entry in entries.filter_map(|e| e.ok()) {
                let path = entry.path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let bytes = std::fs::read(&path).map_err(|source| StoreError::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    let name = path.strip_prefix(&base).unwrap_or(&path).to_string_lossy().replace('\\', "/");
                    out.push((name, bytes));
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// SHA-256 over [`Self::snapshot`]; equal trees hash equal.
    pub fn tree_hash(&self, rel: &str) -> Result<String, StoreError> {
        let mut h = Sha256::new();
        for (name, bytes) in self.snapshot(rel)? {
            h.update(name.as_bytes());
            h.update([0]);
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
        Ok(hex::encode(h.finalize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = DocStore::open(dir.path()).unwrap();
        let doc = json!({"b": [1, 2], "a": "x"});
        store.write_json("projects/p1/project.json", &doc).unwrap();
        let back: serde_json::Value = store.read_json("projects/p1/project.json").unwrap();
        assert_eq!(back, doc);
        assert_eq!(store.list("projects").unwrap(), vec!["p1"]);
        assert!(store.list("nope").unwrap().is_empty());
        assert!(matches!(store.read_text("projects/p2/project.json"), Err(StoreError::NotFound(_))));
    }

    #[test]
    fn rejects_escaping_paths() {
        let dir = tempfile::tempdir().unwrap();
        let store = DocStore::open(dir.path()).unwrap();
        for bad in ["../x", "/etc/passwd", "a/../../b", ""] {
            assert!(matches!(store.write_text(bad, "x"), Err(StoreError::BadPath(_))), "{bad}");
        }
    }

    #[test]
    fn tree_hash_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        let store = DocStore::open(dir.path()).unwrap();
        store.write_text("a/b.txt", "1").unwrap();
        let h1 = store.tree_hash("").unwrap();
        store.write_text("a/b.txt", "1").unwrap();
        assert_eq!(store.tree_hash("").unwrap(), h1);
        store.write_text("a/b.txt", "2").unwrap();
        assert_ne!(store.tree_hash("").unwrap(), h1);
        assert!(store.list("a").unwrap().iter().all(|n| !n.contains("tmp")));
    }
}
