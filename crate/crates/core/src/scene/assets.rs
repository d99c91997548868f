use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use crate::imagecore::{load_hdr, load_ldr, LdrImage, RadianceImage};
use crate::{Error, Result};

#[derive(Debug)]
struct Entry<T> {
    path: Option<PathBuf>,
    loaded: OnceLock<Arc<T>>,
}

impl<T> Entry<T> {
    fn from_path(path: PathBuf) -> Self {
        Self {
            path: Some(path),
            loaded: OnceLock::new(),
        }
    }

    fn from_value(value: T) -> Self {
        let loaded = OnceLock::new();
        let _ = loaded.set(Arc::new(value));
        Self { path: None, loaded }
    }

    fn get(&self, load: impl FnOnce(&Path) -> Result<T>) -> Result<Arc<T>> {
        if let Some(v) = self.loaded.get() {
            return Ok(v.clone());
        }
        let path = self.path.as_deref().expect("unloaded entry without a path");
        let value = Arc::new(load(path)?);
        Ok(self.loaded.get_or_init(|| value).clone())
    }
}

/// Environment maps and LDR images keyed by file stem.
///
/// A registry directory holds `env/*.exr|*.hdr` and `ldr/*.jpg|*.png`.
/// Files are decoded on first use and cached.
#[derive(Debug, Default)]
pub struct AssetRegistry {
    env: BTreeMap<String, Entry<RadianceImage>>,
    ldr: BTreeMap<String, Entry<LdrImage>>,
}

impl AssetRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scan(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        let mut reg = Self::new();
        for (sub, exts) in [("env", &["exr", "hdr"][..]), ("ldr", &["jpg", "jpeg", "png"][..])] {
            let dir = root.join(sub);
            if !dir.is_dir() {
                continue;
            }
            for entry in std::fs::read_dir(&dir)? {
                let path = entry?.path();
                let ext = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .map(str::to_ascii_lowercase)
                    .unwrap_or_default();
                let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                    continue;
                };
                if !exts.contains(&ext.as_str()) {
                    continue;
                }
                let stem = stem.to_owned();
                if sub == "env" {
                    reg.env.insert(stem, Entry::from_path(path));
                } else {
                    reg.ldr.insert(stem, Entry::from_path(path));
                }
            }
        }
        Ok(reg)
    }

    pub fn insert_env(&mut self, id: impl Into<String>, image: RadianceImage) {
        self.env.insert(id.into(), Entry::from_value(image));
    }

    pub fn insert_ldr(&mut self, id: impl Into<String>, image: LdrImage) {
        self.ldr.insert(id.into(), Entry::from_value(image));
    }

    /// Sorted environment ids.
    pub fn env_ids(&self) -> Vec<&str> {
        self.env.keys().map(String::as_str).collect()
    }

    /// Sorted LDR ids.
    pub fn ldr_ids(&self) -> Vec<&str> {
        self.ldr.keys().map(String::as_str).collect()
    }

    pub fn env(&self, id: &str) -> Result<Arc<RadianceImage>> {
        self.env
            .get(id)
            .ok_or_else(|| Error::MissingAsset(format!("env/{id}")))?
            .get(|p| load_hdr(p).map(|(img, _)| img))
    }

    pub fn ldr(&self, id: &str) -> Result<Arc<LdrImage>> {
        self.ldr
            .get(id)
            .ok_or_else(|| Error::MissingAsset(format!("ldr/{id}")))?
            .get(|p| load_ldr(p))
    }
}
