//! One-file-per-key response cache.
//!
//! Entries live at `<cache_dir>/<key>.json`, where the key hashes the prompt
//! fingerprint, model name and temperature. Each entry carries a checksum;
//! writes go to a temporary file that is renamed into place, so a crash
//! never leaves a readable-but-wrong entry behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatExchange, ExchangeSource, GatewayError};
use crate::prompt::{hex, Fingerprint, RenderedPrompt};

const LOCK_FILE: &str = ".lock";
const STRIPES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn new(fingerprint: &Fingerprint, model_name: &str, temperature: f64) -> Self {
        let mut h = Sha256::new();
        h.update(fingerprint.as_str().as_bytes());
        h.update([0]);
        h.update(model_name.as_bytes());
        h.update([0]);
        h.update(temperature.to_bits().to_le_bytes());
        CacheKey(hex(&h.finalize()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn stripe(&self) -> usize {
        usize::from_str_radix(&self.0[..2], 16).unwrap_or(0) % STRIPES
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    fingerprint: Fingerprint,
    model_name: String,
    temperature: f64,
    reply_text: String,
    latency_secs: f64,
    checksum: String,
}

impl Entry {
    fn checksum(key: &str, fingerprint: &Fingerprint, reply: &str, latency: f64) -> String {
        let mut h = Sha256::new();
        for part in [key.as_bytes(), fingerprint.as_str().as_bytes(), reply.as_bytes()] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        h.update(latency.to_bits().to_le_bytes());
        hex(&h.finalize())
    }

    fn is_valid(&self) -> bool {
        self.checksum == Entry::checksum(&self.key, &self.fingerprint, &self.reply_text, self.latency_secs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub entries: usize,
    pub bytes: u64,
}

pub struct ResponseCache {
    dir: PathBuf,
    stripes: Vec<Mutex<()>>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ResponseCache {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|source| GatewayError::CacheIo { path: dir.clone(), source })?;
        Ok(ResponseCache { dir, stripes: (0..STRIPES).map(|_| Mutex::new(())).collect() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub(crate) fn lock_key(&self, key: &CacheKey) -> MutexGuard<'_, ()> {
        self.stripes[key.stripe()].lock().unwrap_or_else(|e| e.into_inner())
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.0))
    }

    /// Returns the stored exchange, or `None` on a miss. Entries that fail
    /// to parse or fail their checksum are reported and treated as misses.
    pub fn get(&self, key: &CacheKey, prompt: &RenderedPrompt) -> Option<ChatExchange> {
        let path = self.path(key);
        let bytes = fs::read(&path).ok()?;
        let entry: Entry = match serde_json::from_slice(&bytes) {
            Ok(e) => e,
            Err(e) => {
                log::warn!("corrupt cache entry {} ({e}); treating as miss", path.display());
                return None;
            }
        };
        if !entry.is_valid() || entry.key != key.0 || entry.fingerprint != prompt.fingerprint {
            log::warn!("cache entry {} failed its checksum; treating as miss", path.display());
            return None;
        }
        Some(ChatExchange {
            prompt: prompt.clone(),
            reply_text: entry.reply_text,
            model_name: entry.model_name,
            latency_secs: entry.latency_secs,
            source: ExchangeSource::Cache,
            retries: 0,
        })
    }

    pub fn put(&self, key: &CacheKey, exchange: &ChatExchange, temperature: f64) -> Result<(), GatewayError> {
        let fingerprint = exchange.prompt.fingerprint.clone();
        let entry = Entry {
            checksum: Entry::checksum(&key.0, &fingerprint, &exchange.reply_text, exchange.latency_secs),
            key: key.0.clone(),
            fingerprint,
            model_name: exchange.model_name.clone(),
            temperature,
            reply_text: exchange.reply_text.clone(),
            latency_secs: exchange.latency_secs,
        };
        let body = serde_json::to_vec_pretty(&entry).expect("cache entry serializes");
        let io = |source| GatewayError::CacheIo { path: self.dir.clone(), source };
        let tmp = self.dir.join(format!(
            ".{}.{}.{}.tmp",
            key.0,
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&body).and_then(|_| f.sync_all()).map_err(io)?;
        drop(f);
        fs::rename(&tmp, self.path(key)).map_err(io)
    }

    pub fn stats(&self) -> Result<CacheStats, GatewayError> {
        cache_stats(&self.dir)
    }
}

fn is_entry(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
        && path.file_name().and_then(|n| n.to_str()).is_some_and(|n| !n.starts_with('.'))
}

/// Entry count and total entry bytes. A missing directory is empty.
pub fn cache_stats(dir: &Path) -> Result<CacheStats, GatewayError> {
    let mut stats = CacheStats { entries: 0, bytes: 0 };
    let read = match fs::read_dir(dir) {
        Ok(r) => r,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(stats),
        Err(source) => return Err(GatewayError::CacheIo { path: dir.to_path_buf(), source }),
    };
    for item in read.flatten() {
        let path = item.path();
        if is_entry(&path) {
            stats.entries += 1;
            stats.bytes += item.metadata().map(|m| m.len()).unwrap_or(0);
        }
    }
    Ok(stats)
}

/// Removes every entry. The directory is swapped out with a rename first,
/// so readers see either the full old cache or an empty one. Refused while
/// a [`CacheLock`] is held.
pub fn clear_cache(dir: &Path) -> Result<CacheStats, GatewayError> {
    if dir.join(LOCK_FILE).exists() {
        return Err(GatewayError::CacheLocked(dir.to_path_buf()));
    }
    let before = cache_stats(dir)?;
    if !dir.exists() {
        return Ok(before);
    }
    let io = |source| GatewayError::CacheIo { path: dir.to_path_buf(), source };
    let mut trash = dir.as_os_str().to_owned();
    trash.push(format!(".trash-{}", std::process::id()));
    let trash = PathBuf::from(trash);
    fs::rename(dir, &trash).map_err(io)?;
    fs::create_dir_all(dir).map_err(io)?;
    fs::remove_dir_all(&trash).map_err(io)?;
    Ok(before)
}

/// Marks a cache directory as in use by a mutating command. Released on drop.
#[derive(Debug)]
pub struct CacheLock {
    path: PathBuf,
}

impl CacheLock {
    pub fn acquire(dir: &Path) -> Result<Self, GatewayError> {
        fs::create_dir_all(dir).map_err(|source| GatewayError::CacheIo { path: dir.to_path_buf(), source })?;
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(CacheLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(GatewayError::CacheLocked(dir.to_path_buf()))
            }
            Err(source) => Err(GatewayError::CacheIo { path: dir.to_path_buf(), source }),
        }
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exchange(prompt: &RenderedPrompt, reply: &str) -> ChatExchange {
        ChatExchange {
            prompt: prompt.clone(),
            reply_text: reply.into(),
            model_name: "m".into(),
            latency_secs: 1.5,
            source: ExchangeSource::Live,
            retries: 0,
        }
    }

    #[test]
    fn put_then_get() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let p = RenderedPrompt::new("", "q");
        let key = CacheKey::new(&p.fingerprint, "m", 0.0);
        assert!(cache.get(&key, &p).is_none());
        cache.put(&key, &exchange(&p, "r"), 0.0).unwrap();
        let hit = cache.get(&key, &p).unwrap();
        assert_eq!(hit.source, ExchangeSource::Cache);
        assert_eq!(hit.reply_text, "r");
        assert_eq!(hit.latency_secs, 1.5);
        assert_eq!(cache.stats().unwrap().entries, 1);
    }

    #[test]
    fn key_discriminates_model_and_temperature() {
        let f = Fingerprint::of("", "q");
        assert_ne!(CacheKey::new(&f, "a", 0.0), CacheKey::new(&f, "b", 0.0));
        assert_ne!(CacheKey::new(&f, "a", 0.0), CacheKey::new(&f, "a", 0.7));
        assert_eq!(CacheKey::new(&f, "a", 0.0), CacheKey::new(&f, "a", 0.0));
    }

    #[test]
    fn tampered_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let p = RenderedPrompt::new("", "q");
        let key = CacheKey::new(&p.fingerprint, "m", 0.0);
        cache.put(&key, &exchange(&p, "<Answer>A</Answer>"), 0.0).unwrap();
        let path = dir.path().join(format!("{}.json", key.as_str()));
        let text = fs::read_to_string(&path).unwrap().replace("<Answer>A", "<Answer>B");
        fs::write(&path, text).unwrap();
        assert!(cache.get(&key, &p).is_none());
        fs::write(&path, "{ truncated").unwrap();
        assert!(cache.get(&key, &p).is_none());
    }

    #[test]
    fn leftover_tmp_files_are_not_entries() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(".abc.1.0.tmp"), "partial").unwrap();
        fs::write(dir.path().join(".lock"), "1").unwrap();
        assert_eq!(cache_stats(dir.path()).unwrap().entries, 0);
    }

    #[test]
    fn clear_and_lock() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("cache");
        assert_eq!(cache_stats(&dir).unwrap(), CacheStats { entries: 0, bytes: 0 });
        let cache = ResponseCache::open(&dir).unwrap();
        let p = RenderedPrompt::new("", "q");
        cache.put(&CacheKey::new(&p.fingerprint, "m", 0.0), &exchange(&p, "r"), 0.0).unwrap();

        let lock = CacheLock::acquire(&dir).unwrap();
        assert!(matches!(CacheLock::acquire(&dir), Err(GatewayError::CacheLocked(_))));
        assert!(matches!(clear_cache(&dir), Err(GatewayError::CacheLocked(_))));
        assert_eq!(cache_stats(&dir).unwrap().entries, 1);
        drop(lock);

        assert_eq!(clear_cache(&dir).unwrap().entries, 1);
        assert_eq!(cache_stats(&dir).unwrap().entries, 0);
        assert!(dir.is_dir());
    }
}
