//! Content-addressed store for recorded chat exchanges.
//!
//! A fixture's key is the SHA-256 digest of (model, system prompt, user
//! prompt, schema name); the digest depends on nothing else, so two
//! processes computing the key for the same exchange always agree. Files
//! live under `<dir>/<digest>.json` and are written atomically
//! (write-to-temp, then rename), so concurrent readers never observe a
//! half-written fixture.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One recorded exchange as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub model: String,
    pub system: String,
    pub user: String,
    pub schema: String,
    pub response: String,
}

impl FixtureRecord {
    pub fn digest(&self) -> String {
        exchange_digest(&self.model, &self.system, &self.user, &self.schema)
    }
}

/// Stable fixture key for an exchange.
pub fn exchange_digest(model: &str, system: &str, user: &str, schema: &str) -> String {
    let mut hasher = Sha256::new();
    for field in [model, system, user, schema] {
        // length-prefix each field so boundaries are unambiguous
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    /// Load a recording by digest; `Ok(None)` when absent.
    pub fn load(&self, digest: &str) -> std::io::Result<Option<FixtureRecord>> {
        let path = self.path_for(digest);
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let record = serde_json::from_str(&text).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}: {e}", path.display()),
            )
        })?;
        Ok(Some(record))
    }

    /// Persist a recording under its digest, atomically. Returns the digest.
    pub fn store(&self, record: &FixtureRecord) -> std::io::Result<String> {
        std::fs::create_dir_all(&self.dir)?;
        let digest = record.digest();
        let final_path = self.path_for(&digest);
        let tmp_path = self
            .dir
            .join(format!(".{digest}.tmp.{}", std::process::id()));
        let mut body = serde_json::to_string_pretty(record).expect("fixture serializes");
        body.push('\n');
        std::fs::write(&tmp_path, body)?;
        std::fs::rename(&tmp_path, &final_path)?;
        Ok(digest)
    }

    /// All stored digests with their schema names, sorted by digest.
    pub fn list(&self) -> std::io::Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        let entries = match std::fs::read_dir(&self.dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(e),
        };
        for entry in entries {
            let entry = entry?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            let Some(digest) = name.strip_suffix(".json") else {
                continue;
            };
            if let Some(record) = self.load(digest)? {
                out.push((digest.to_string(), record.schema));
            }
        }
        out.sort();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> FixtureRecord {
        FixtureRecord {
            model: "gpt-4o-mini".into(),
            system: "You extract PICO elements.".into(),
            user: "Objective: ...".into(),
            schema: "pico".into(),
            response: r#"{"population":["adults"],"intervention":["metformin"]}"#.into(),
        }
    }

    #[test]
    fn digest_depends_only_on_the_four_key_fields() {
        let a = record();
        let mut b = record();
        b.response = "different".into();
        assert_eq!(a.digest(), b.digest());
        let mut c = record();
        c.user.push('!');
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn digest_is_not_fooled_by_field_boundary_shifts() {
        assert_ne!(
            exchange_digest("ab", "c", "u", "s"),
            exchange_digest("a", "bc", "u", "s")
        );
    }

    #[test]
    fn store_then_load_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::new(dir.path());
        let rec = record();
        let digest = store.store(&rec).unwrap();
        let loaded = store.load(&digest).unwrap().unwrap();
        assert_eq!(loaded, rec);
        assert!(store.load("0000").unwrap().is_none());
    }

    #[test]
    fn list_reports_digest_and_schema() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::new(dir.path());
        let digest = store.store(&record()).unwrap();
        assert_eq!(store.list().unwrap(), vec![(digest, "pico".to_string())]);
    }

    #[test]
    fn list_on_missing_dir_is_empty() {
        let store = FixtureStore::new("/nonexistent/fixtures");
        assert!(store.list().unwrap().is_empty());
    }
}
