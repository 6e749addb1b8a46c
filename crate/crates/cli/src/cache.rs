use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Version of the on-disk artifact layout; part of every cache key.
pub const ARTIFACT_VERSION: &str = "1";

/// SHA-256 of the canonical JSON of `(kind, artifact version, parts)`.
pub fn cache_key<T: Serialize + ?Sized>(kind: &str, parts: &T) -> String {
    let json = serde_json::to_string(&(kind, ARTIFACT_VERSION, parts)).expect("cache key parts serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// JSON artifact cache under `<root>/cache`.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(root: &Path) -> Self {
        Cache { dir: root.join("cache") }
    }

    pub fn path(&self, kind: &str, key: &str) -> PathBuf {
        self.dir.join(format!("{kind}-{key}.json"))
    }

    pub fn load<T: DeserializeOwned>(&self, kind: &str, key: &str) -> anyhow::Result<Option<T>> {
        let path = self.path(kind, key);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let value = serde_json::from_str(&text).with_context(|| format!("parsing cache entry {}", path.display()))?;
        Ok(Some(value))
    }

    pub fn store<T: Serialize>(&self, kind: &str, key: &str, value: &T) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.path(kind, key);
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(value)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }
}
