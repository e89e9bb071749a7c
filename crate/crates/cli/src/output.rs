//! Artifact directory and the optional oracle cache.

use std::path::PathBuf;

use sha2::{Digest, Sha256};
use wetting_core::io::write_atomic;

use crate::config::{Format, OutputBlock};

pub struct Artifacts {
    dir: PathBuf,
    formats: Vec<Format>,
}

impl Artifacts {
    pub fn new(block: &OutputBlock) -> Self {
        Artifacts { dir: PathBuf::from(&block.dir), formats: block.formats.clone() }
    }

    /// Writes `name` when its format is enabled.
    pub fn write(&self, name: &str, format: Format, contents: &str) -> std::io::Result<()> {
        if self.formats.contains(&format) {
            self.write_always(name, contents)?;
        }
        Ok(())
    }

    pub fn write_always(&self, name: &str, contents: &str) -> std::io::Result<()> {
        write_atomic(&self.dir.join(name), contents.as_bytes())
    }
}

/// Memoised oracle results under `$WETTING_LAB_CACHE`, keyed by a digest of
/// everything that determines them.
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn from_env() -> Self {
        Cache { dir: std::env::var_os("WETTING_LAB_CACHE").filter(|v| !v.is_empty()).map(PathBuf::from) }
    }

    pub fn key(parts: &[&str]) -> String {
        let mut h = Sha256::new();
        for p in parts {
            h.update(p.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.dir.as_ref()?.join(format!("{key}.txt"))).ok()
    }

    pub fn put(&self, key: &str, value: &str) {
        if let Some(dir) = &self.dir {
            // a cache that cannot be written only costs time
            let _ = write_atomic(&dir.join(format!("{key}.txt")), value.as_bytes());
        }
    }
}
