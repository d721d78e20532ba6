use std::path::{Path, PathBuf};

use causegraph::gateway::ProviderConfig;
use causegraph::pipeline::DEFAULT_ENTITY_CAP;
use causegraph::prompt::MEDICAL_DOMAIN_HINT;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    Live,
    /// Answer every prompt from a fixture file; no network, no cache.
    Replay(PathBuf),
    /// Live calls, with every exchange saved to a fixture file afterwards.
    Record(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub provider: ProviderConfig,
    pub mode: Mode,
    pub entity_cap: usize,
    pub enforce_acyclic: bool,
    pub output_dir: PathBuf,
    pub domain_hint: String,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            provider: ProviderConfig::default(),
            mode: Mode::Live,
            entity_cap: DEFAULT_ENTITY_CAP,
            enforce_acyclic: false,
            output_dir: PathBuf::from("out"),
            domain_hint: MEDICAL_DOMAIN_HINT.to_owned(),
        }
    }
}

/// Settings given on the command line or in the environment. `None` means
/// "not given", so the config file value (or the default) applies.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub replay: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub model: Option<String>,
    pub parallelism: Option<usize>,
    pub entity_cap: Option<usize>,
    pub enforce_acyclic: bool,
    pub output_dir: Option<PathBuf>,
    pub domain_hint: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub api_key_env: Option<String>,
}

/// TOML config file layout. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    provider: ProviderConfig,
    replay: Option<PathBuf>,
    record: Option<PathBuf>,
    entity_cap: Option<usize>,
    enforce_acyclic: Option<bool>,
    out: Option<PathBuf>,
    domain_hint: Option<String>,
}

impl CliConfig {
    /// Config file (if any) overlaid with `overrides`, then validated.
    /// Relative paths in the file are resolved against the file's directory.
    pub fn resolve(config_path: Option<&Path>, overrides: Overrides) -> Result<Self, String> {
        let mut file = match config_path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                let mut f: FileConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?;
                let base = p.parent().unwrap_or(Path::new("."));
                for path in [&mut f.replay, &mut f.record, &mut f.out, &mut f.provider.cache_dir].into_iter().flatten()
                {
                    if path.is_relative() {
                        *path = base.join(&*path);
                    }
                }
                f
            }
            None => FileConfig::default(),
        };

        let mut provider = std::mem::take(&mut file.provider);
        if let Some(m) = overrides.model {
            provider.model_name = m;
        }
        if let Some(p) = overrides.parallelism {
            provider.parallelism = p;
        }
        if let Some(d) = overrides.cache_dir {
            provider.cache_dir = Some(d);
        }
        if let Some(k) = overrides.api_key_env {
            provider.api_key_env = k;
        }

        // a mode given on the command line replaces the file's mode entirely
        let (replay, record) = if overrides.replay.is_some() || overrides.record.is_some() {
            (overrides.replay, overrides.record)
        } else {
            (file.replay, file.record)
        };
        let mode = match (replay, record) {
            (Some(_), Some(_)) => return Err("--replay and --record are mutually exclusive".into()),
            (Some(p), None) => Mode::Replay(p),
            (None, Some(p)) => Mode::Record(p),
            (None, None) => Mode::Live,
        };

        let defaults = CliConfig::default();
        let config = CliConfig {
            provider,
            mode,
            entity_cap: overrides.entity_cap.or(file.entity_cap).unwrap_or(defaults.entity_cap),
            enforce_acyclic: overrides.enforce_acyclic || file.enforce_acyclic.unwrap_or(false),
            output_dir: overrides.output_dir.or(file.out).unwrap_or(defaults.output_dir),
            domain_hint: overrides.domain_hint.or(file.domain_hint).unwrap_or(defaults.domain_hint),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.provider.validate().map_err(|e| e.to_string())?;
        if self.entity_cap < 2 {
            return Err(format!("entity cap must be at least 2, got {}", self.entity_cap));
        }
        match &self.mode {
            Mode::Replay(p) if !p.is_file() => Err(format!("replay fixture {} does not exist", p.display())),
            Mode::Record(p) => match p.parent().filter(|d| !d.as_os_str().is_empty()) {
                Some(dir) if !dir.is_dir() => Err(format!("cannot create fixture {}: no such directory", p.display())),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }
}
