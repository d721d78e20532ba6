//! Chat-completion gateway.
//!
//! A [`Gateway`] wraps one [`ChatProvider`] (live HTTP endpoint, replay
//! fixture, or a test double) and adds retries with exponential backoff and
//! full jitter, a shared token-bucket rate limiter for live calls, an
//! on-disk response cache, and optional recording of every exchange.
//! It is `Sync`: many worker threads may call it concurrently.

mod cache;
#[cfg(feature = "http")]
mod http;
mod limiter;
mod replay;

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::{Fingerprint, RenderedPrompt};

pub use cache::{cache_stats, clear_cache, CacheKey, CacheLock, CacheStats, ResponseCache};
#[cfg(feature = "http")]
pub use http::HttpProvider;
pub use limiter::RateLimiter;
pub use replay::{record_fixture, FixtureEntry, ReplayFixture, ReplayProvider};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("provider unavailable after {attempts} attempts: {last}")]
    ProviderUnavailable { attempts: u32, last: String },
    #[error("authentication rejected: {0}")]
    AuthError(String),
    #[error("malformed provider response: {0}")]
    MalformedProviderResponse(String),
    #[error("no replay entry for prompt {0}")]
    FixtureMiss(Fingerprint),
    #[error("fingerprint {0} recorded with two different replies")]
    DuplicateFingerprint(Fingerprint),
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("cache directory {path}: {source}")]
    CacheIo { path: PathBuf, source: std::io::Error },
    #[error("cache directory is locked by a running command ({0})")]
    CacheLocked(PathBuf),
    #[error("malformed fixture file: {0}")]
    Fixture(String),
}

/// Failure of a single provider attempt.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ProviderError {
    /// Timeouts, rate limiting, 5xx: worth retrying.
    #[error("transient: {0}")]
    Transient(String),
    #[error("auth: {0}")]
    Auth(String),
    #[error("malformed: {0}")]
    Malformed(String),
    #[error("fixture miss")]
    FixtureMiss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    #[serde(with = "secs")]
    pub request_timeout: Duration,
    pub parallelism: usize,
    pub cache_dir: Option<PathBuf>,
    /// Environment variable holding the bearer credential.
    pub api_key_env: String,
    pub requests_per_minute: u32,
}

pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4-turbo".into(),
            temperature: 0.0,
            max_retries: 3,
            request_timeout: Duration::from_secs(120),
            parallelism: 1,
            cache_dir: None,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            requests_per_minute: 30,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidConfig(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.parallelism == 0 {
            return Err(GatewayError::InvalidConfig("parallelism must be at least 1".into()));
        }
        if self.requests_per_minute == 0 {
            return Err(GatewayError::InvalidConfig("requests_per_minute must be at least 1".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(GatewayError::InvalidConfig("model name is empty".into()));
        }
        Ok(())
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeSource {
    Live,
    Cache,
    Replay,
}

/// One prompt and the reply it received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub prompt: RenderedPrompt,
    pub reply_text: String,
    pub model_name: String,
    pub latency_secs: f64,
    pub source: ExchangeSource,
    /// Failed attempts before the one that succeeded.
    pub retries: u32,
}

/// What a provider returns for one successful attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct ProviderReply {
    pub text: String,
    /// Provider-supplied latency (replay fixtures); live calls are timed by
    /// the gateway.
    pub latency_secs: Option<f64>,
}

pub trait ChatProvider: Send + Sync {
    /// One attempt, no retries.
    fn send(&self, prompt: &RenderedPrompt, config: &ProviderConfig) -> Result<ProviderReply, ProviderError>;

    fn source(&self) -> ExchangeSource;
}

impl<T: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<T> {
    fn send(&self, prompt: &RenderedPrompt, config: &ProviderConfig) -> Result<ProviderReply, ProviderError> {
        (**self).send(prompt, config)
    }

    fn source(&self) -> ExchangeSource {
        (**self).source()
    }
}

/// Counts provider attempts; used to assert query budgets and cache hits.
pub struct CountingProvider<P> {
    inner: P,
    calls: AtomicUsize,
}

impl<P: ChatProvider> CountingProvider<P> {
    pub fn new(inner: P) -> Self {
        CountingProvider { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<P: ChatProvider> ChatProvider for CountingProvider<P> {
    fn send(&self, prompt: &RenderedPrompt, config: &ProviderConfig) -> Result<ProviderReply, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.send(prompt, config)
    }

    fn source(&self) -> ExchangeSource {
        self.inner.source()
    }
}

/// Exponential backoff with full jitter: the wait before retry `k` (0-based)
/// is uniform in `[0, min(max, base * 2^k)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub base: Duration,
    pub max: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff { base: Duration::from_millis(500), max: Duration::from_secs(30) }
    }
}

impl Backoff {
    pub fn ceiling(&self, retry: u32) -> Duration {
        let factor = 2u32.saturating_pow(retry.min(20));
        self.base.saturating_mul(factor).min(self.max)
    }
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

pub struct Gateway {
    config: ProviderConfig,
    provider: Box<dyn ChatProvider>,
    cache: Option<ResponseCache>,
    limiter: Option<RateLimiter>,
    backoff: Backoff,
    sleep: Sleeper,
    rng: Mutex<SmallRng>,
    recorder: Option<Mutex<Vec<ChatExchange>>>,
}

impl Gateway {
    pub fn new(config: ProviderConfig, provider: impl ChatProvider + 'static) -> Result<Self, GatewayError> {
        config.validate()?;
        let cache = config.cache_dir.as_ref().map(ResponseCache::open).transpose()?;
        let limiter = (provider.source() == ExchangeSource::Live)
            .then(|| RateLimiter::per_minute(config.requests_per_minute, config.parallelism as u32));
        Ok(Gateway {
            config,
            provider: Box::new(provider),
            cache,
            limiter,
            backoff: Backoff::default(),
            sleep: Box::new(std::thread::sleep),
            rng: Mutex::new(SmallRng::seed_from_u64(seed())),
            recorder: None,
        })
    }

    /// Offline gateway answering from a fixture; no cache, no limiter.
    pub fn replay(fixture: ReplayFixture) -> Self {
        let config = ProviderConfig { model_name: "replay".into(), ..ProviderConfig::default() };
        Gateway::new(config, ReplayProvider::new(fixture)).expect("default config is valid")
    }

    pub fn with_backoff(mut self, backoff: Backoff) -> Self {
        self.backoff = backoff;
        self
    }

    /// Replaces the sleep used between retries (tests pass a recorder).
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    pub fn without_rate_limit(mut self) -> Self {
        self.limiter = None;
        self
    }

    /// Keeps a copy of every exchange served, for [`record_fixture`].
    pub fn recording(mut self) -> Self {
        self.recorder = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    pub fn cache(&self) -> Option<&ResponseCache> {
        self.cache.as_ref()
    }

    /// Exchanges seen so far, in service order (empty unless recording).
    pub fn recorded(&self) -> Vec<ChatExchange> {
        self.recorder.as_ref().map(|r| r.lock().expect("recorder poisoned").clone()).unwrap_or_default()
    }

    /// Calls the provider, retrying transient failures up to
    /// `max_retries` times. Credential failures are never retried.
    pub fn complete(&self, prompt: &RenderedPrompt) -> Result<ChatExchange, GatewayError> {
        let mut retries = 0;
        loop {
            if let Some(limiter) = &self.limiter {
                limiter.acquire(&*self.sleep);
            }
            let started = Instant::now();
            match self.provider.send(prompt, &self.config) {
                Ok(reply) => {
                    let latency_secs = reply.latency_secs.unwrap_or_else(|| started.elapsed().as_secs_f64()).max(0.0);
                    let exchange = ChatExchange {
                        prompt: prompt.clone(),
                        reply_text: reply.text,
                        model_name: self.config.model_name.clone(),
                        latency_secs,
                        source: self.provider.source(),
                        retries,
                    };
                    self.record(&exchange);
                    return Ok(exchange);
                }
                Err(ProviderError::Auth(msg)) => return Err(GatewayError::AuthError(msg)),
                Err(ProviderError::Malformed(msg)) => return Err(GatewayError::MalformedProviderResponse(msg)),
                Err(ProviderError::FixtureMiss) => return Err(GatewayError::FixtureMiss(prompt.fingerprint.clone())),
                Err(ProviderError::Transient(msg)) => {
                    if retries >= self.config.max_retries {
                        return Err(GatewayError::ProviderUnavailable { attempts: retries + 1, last: msg });
                    }
                    let ceiling = self.backoff.ceiling(retries);
                    let wait = self.rng.lock().expect("rng poisoned").random_range(Duration::ZERO..=ceiling);
                    log::warn!("transient provider failure ({msg}); retrying in {wait:?}");
                    (self.sleep)(wait);
                    retries += 1;
                }
            }
        }
    }

    /// [`complete`](Self::complete) behind the response cache. A hit costs
    /// no provider call. Concurrent calls for the same key are serialized,
    /// so each key reaches the provider at most once.
    pub fn cached_complete(&self, prompt: &RenderedPrompt) -> Result<ChatExchange, GatewayError> {
        let Some(cache) = &self.cache else {
            return self.complete(prompt);
        };
        let key = CacheKey::new(&prompt.fingerprint, &self.config.model_name, self.config.temperature);
        let _guard = cache.lock_key(&key);
        if let Some(hit) = cache.get(&key, prompt) {
            self.record(&hit);
            return Ok(hit);
        }
        let exchange = self.complete(prompt)?;
        cache.put(&key, &exchange, self.config.temperature)?;
        Ok(exchange)
    }

    fn record(&self, exchange: &ChatExchange) {
        if let Some(rec) = &self.recorder {
            rec.lock().expect("recorder poisoned").push(exchange.clone());
        }
    }
}

fn seed() -> u64 {
    #[cfg(not(target_arch = "wasm32"))]
    {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0x5eed)
    }
    #[cfg(target_arch = "wasm32")]
    {
        0x5eed
    }
}
