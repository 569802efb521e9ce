use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::schema::{apply_schema, AuditTable, SchemaConfig};
use super::table::{parse_bytes, sha256_hex, ParseOptions};
use crate::error::{Error, Result};

/// Environment variable that overrides the dataset cache directory.
pub const CACHE_DIR_ENV: &str = "FAIRCI_CACHE_DIR";
/// Environment variable naming a registry file that replaces the built-in one.
pub const REGISTRY_ENV: &str = "FAIRCI_REGISTRY";

const BUILTIN_REGISTRY: &str = include_str!("../../presets/registry.json");
const DOWNLOAD_TIMEOUT: Duration = Duration::from_secs(120);

/// One dataset preset: where to get it, what it must hash to, how to read it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub url: String,
    /// Lowercase hex SHA-256 of the file.
    pub digest: String,
    pub schema: SchemaConfig,
    #[serde(default)]
    pub format: ParseOptions,
    #[serde(default)]
    pub description: String,
}

impl Preset {
    /// Cache file name: the last path segment of the URL.
    pub fn file_name(&self) -> &str {
        self.url
            .rsplit('/')
            .find(|s| !s.is_empty())
            .unwrap_or("dataset")
    }
}

/// Preset id → [`Preset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Registry {
    pub presets: BTreeMap<String, Preset>,
}

impl Registry {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_REGISTRY).expect("built-in registry is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let reg: Registry =
            serde_json::from_str(text).map_err(|e| Error::InvalidSchema(format!("registry: {e}")))?;
        for (id, p) in &reg.presets {
            p.schema
                .validate()
                .map_err(|e| Error::InvalidSchema(format!("preset {id}: {e}")))?;
        }
        Ok(reg)
    }

    /// The registry named by `FAIRCI_REGISTRY`, or the built-in one.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(REGISTRY_ENV) {
            Some(path) => {
                let path = PathBuf::from(path);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Self::from_json(&text)
            }
            None => Ok(Self::builtin()),
        }
    }

    pub fn get(&self, id: &str) -> Result<&Preset> {
        self.presets
            .get(id)
            .ok_or_else(|| Error::UnknownPreset(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.presets.keys().map(String::as_str)
    }
}

/// `FAIRCI_CACHE_DIR`, else `$XDG_CACHE_HOME/fairci`, else `~/.cache/fairci`.
pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_DIR_ENV) {
        return PathBuf::from(dir);
    }
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(dir).join("fairci");
    }
    match std::env::var_os("HOME") {
        Some(home) => PathBuf::from(home).join(".cache").join("fairci"),
        None => std::env::temp_dir().join("fairci"),
    }
}

/// Exclusive advisory lock on `<file>.lock`, released on drop.
struct CacheLock(File);

impl CacheLock {
    fn acquire(target: &Path) -> Result<Self> {
        let mut name = target.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        let f = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        f.lock().map_err(|e| Error::io(&path, e))?;
        Ok(CacheLock(f))
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

fn digest_mismatch(preset: &str, expected: &str, actual: String) -> Error {
    Error::DigestMismatch {
        preset: preset.to_string(),
        expected: expected.to_ascii_lowercase(),
        actual,
    }
}

/// Streams `url` into `dest`, returning the SHA-256 of what was written.
fn download(url: &str, dest: &Path) -> Result<String> {
    let net = |message: String| Error::NetworkError {
        url: url.to_string(),
        message,
    };
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(DOWNLOAD_TIMEOUT))
        .build()
        .into();
    let response = agent.get(url).call().map_err(|e| net(e.to_string()))?;
    let mut body = response.into_body().into_reader();
    let mut out = File::create(dest).map_err(|e| Error::io(dest, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 64 * 1024];
    loop {
        let k = match body.read(&mut buf) {
            Ok(0) => break,
            Ok(k) => k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(net(e.to_string())),
        };
        hasher.update(&buf[..k]);
        out.write_all(&buf[..k]).map_err(|e| Error::io(dest, e))?;
    }
    out.sync_all().map_err(|e| Error::io(dest, e))?;
    Ok(hex::encode(hasher.finalize()))
}

/// Makes sure a verified copy of `preset` is in `cache_dir` and returns its
/// path. A cached file is used as is when its digest matches; otherwise it is
/// downloaded (unless `offline`) to a temporary file, verified, and renamed
/// into place. A file that fails verification never becomes the cache entry.
pub fn ensure_cached(id: &str, preset: &Preset, cache_dir: &Path, offline: bool) -> Result<PathBuf> {
    fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    let target = cache_dir.join(preset.file_name());
    let _lock = CacheLock::acquire(&target)?;

    if target.exists() {
        let bytes = fs::read(&target).map_err(|e| Error::io(&target, e))?;
        let actual = sha256_hex(&bytes);
        if actual.eq_ignore_ascii_case(&preset.digest) {
            return Ok(target);
        }
        if offline {
            return Err(digest_mismatch(id, &preset.digest, actual));
        }
    } else if offline {
        return Err(Error::NotCached(id.to_string()));
    }

    let mut partial = target.as_os_str().to_owned();
    partial.push(".part");
    let partial = PathBuf::from(partial);
    let result = download(&preset.url, &partial).and_then(|actual| {
        if actual.eq_ignore_ascii_case(&preset.digest) {
            fs::rename(&partial, &target).map_err(|e| Error::io(&target, e))
        } else {
            Err(digest_mismatch(id, &preset.digest, actual))
        }
    });
    if result.is_err() {
        let _ = fs::remove_file(&partial);
    }
    result.map(|()| target)
}

/// Fetches (or reuses from cache) a preset dataset, verifies its digest and
/// ingests it with the preset's schema.
pub fn fetch_dataset(
    registry: &Registry,
    id: &str,
    cache_dir: &Path,
    offline: bool,
) -> Result<AuditTable> {
    let preset = registry.get(id)?;
    let path = ensure_cached(id, preset, cache_dir, offline)?;
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    // Re-check what is actually parsed, in case the file changed after the lock
    // was released.
    let actual = sha256_hex(&bytes);
    if !actual.eq_ignore_ascii_case(&preset.digest) {
        return Err(digest_mismatch(id, &preset.digest, actual));
    }
    let raw = parse_bytes(&bytes, &preset.format, &format!("preset:{id}"))?;
    apply_schema(&raw, &preset.schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_registry_loads() {
        let r = Registry::builtin();
        assert_eq!(r.ids().collect::<Vec<_>>(), ["adult", "compas", "german"]);
        assert_eq!(r.get("german").unwrap().file_name(), "german.data");
        assert!(matches!(r.get("mnist"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn offline_without_cache() {
        let dir = tempfile::tempdir().unwrap();
        let r = Registry::builtin();
        assert!(matches!(
            fetch_dataset(&r, "german", dir.path(), true),
            Err(Error::NotCached(_))
        ));
    }

    #[test]
    fn offline_cache_with_wrong_digest() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("german.data"), "A11 6\n").unwrap();
        let r = Registry::builtin();
        assert!(matches!(
            fetch_dataset(&r, "german", dir.path(), true),
            Err(Error::DigestMismatch { .. })
        ));
    }
}
