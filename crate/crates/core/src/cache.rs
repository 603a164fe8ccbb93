//! Content-addressed store of trap results keyed by document hash.

use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::TrapResult;
use crate::{Error, Result};

pub const DEFAULT_CACHE_DIR: &str = ".evatrap-cache";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultCache {
    root: PathBuf,
}

impl Default for ResultCache {
    fn default() -> Self {
        ResultCache::new(DEFAULT_CACHE_DIR)
    }
}

impl ResultCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ResultCache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry(&self, hash: &str) -> PathBuf {
        self.root.join(hash)
    }

    pub fn contains(&self, hash: &str) -> bool {
        self.entry(hash).join("params.json").is_file()
    }

    /// The stored result for `hash`, if any.
    pub fn lookup(&self, hash: &str) -> Result<Option<TrapResult>> {
        if !self.contains(hash) {
            return Ok(None);
        }
        let result = TrapResult::load(self.entry(hash))?;
        if result.hash != hash {
            return Err(Error::FieldMap(format!(
                "cache entry {hash} holds a result tagged {}",
                result.hash
            )));
        }
        Ok(Some(result))
    }

    /// Stores `result` under its own hash. The entry is written to a
    /// temporary directory and renamed into place.
    pub fn store(&self, result: &TrapResult) -> Result<PathBuf> {
        if result.hash.is_empty() {
            return Err(Error::InvalidArgument("cannot cache a result without a hash".into()));
        }
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let target = self.entry(&result.hash);
        let staging = self
            .root
            .join(format!(".{}.partial-{}", result.hash, std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
        }
        result.save(&staging)?;
        if target.exists() {
            fs::remove_dir_all(&target).map_err(|e| Error::io(&target, e))?;
        }
        fs::rename(&staging, &target).map_err(|e| Error::io(&target, e))?;
        Ok(target)
    }
}
