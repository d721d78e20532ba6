//! Record/replay fixtures: prompt fingerprint → reply text.
//!
//! File layout (JSON, entries sorted by fingerprint):
//!
//! ```text
//! { "strict": true,
//!   "entries": [ { "fingerprint": "…", "reply": "…", "latency_secs": 0.0 } ] }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ChatExchange, ChatProvider, ExchangeSource, GatewayError, ProviderConfig, ProviderError, ProviderReply};
use crate::prompt::{Fingerprint, RenderedPrompt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub reply: String,
    #[serde(default)]
    pub latency_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayFixture {
    pub entries: BTreeMap<Fingerprint, FixtureEntry>,
    /// A strict fixture fails on unknown prompts; a lenient one answers
    /// them with an empty reply.
    pub strict: bool,
}

#[derive(Serialize, Deserialize)]
struct FixtureFile {
    strict: bool,
    entries: Vec<FileEntry>,
}

#[derive(Serialize, Deserialize)]
struct FileEntry {
    fingerprint: Fingerprint,
    reply: String,
    #[serde(default)]
    latency_secs: f64,
}

impl ReplayFixture {
    pub fn new(strict: bool) -> Self {
        ReplayFixture { entries: BTreeMap::new(), strict }
    }

    /// Adds an entry; re-adding the same reply is a no-op, a different
    /// reply for a known fingerprint is an error.
    pub fn insert(&mut self, fingerprint: Fingerprint, entry: FixtureEntry) -> Result<(), GatewayError> {
        match self.entries.get(&fingerprint) {
            Some(existing) if existing.reply != entry.reply => Err(GatewayError::DuplicateFingerprint(fingerprint)),
            Some(_) => Ok(()),
            None => {
                self.entries.insert(fingerprint, entry);
                Ok(())
            }
        }
    }

    pub fn reply_for(&mut self, prompt: &RenderedPrompt, reply: impl Into<String>) -> Result<(), GatewayError> {
        self.insert(prompt.fingerprint.clone(), FixtureEntry { reply: reply.into(), latency_secs: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let file = FixtureFile {
            strict: self.strict,
            entries: self
                .entries
                .iter()
                .map(|(f, e)| FileEntry {
                    fingerprint: f.clone(),
                    reply: e.reply.clone(),
                    latency_secs: e.latency_secs,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("fixture serializes");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self, GatewayError> {
        let file: FixtureFile = serde_json::from_str(text).map_err(|e| GatewayError::Fixture(e.to_string()))?;
        let mut fixture = ReplayFixture::new(file.strict);
        for e in file.entries {
            if fixture.entries.contains_key(&e.fingerprint) {
                return Err(GatewayError::Fixture(format!("fingerprint {} listed twice", e.fingerprint)));
            }
            fixture.entries.insert(e.fingerprint, FixtureEntry { reply: e.reply, latency_secs: e.latency_secs });
        }
        Ok(fixture)
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), GatewayError> {
        std::fs::write(path, self.to_text()).map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))
    }
}

/// Builds a strict fixture that replays exactly the given exchanges.
pub fn record_fixture(exchanges: &[ChatExchange]) -> Result<ReplayFixture, GatewayError> {
    let mut fixture = ReplayFixture::new(true);
    for ex in exchanges {
        fixture.insert(
            ex.prompt.fingerprint.clone(),
            FixtureEntry { reply: ex.reply_text.clone(), latency_secs: ex.latency_secs },
        )?;
    }
    Ok(fixture)
}

pub struct ReplayProvider {
    fixture: ReplayFixture,
}

impl ReplayProvider {
    pub fn new(fixture: ReplayFixture) -> Self {
        ReplayProvider { fixture }
    }
}

impl ChatProvider for ReplayProvider {
    fn send(&self, prompt: &RenderedPrompt, _: &ProviderConfig) -> Result<ProviderReply, ProviderError> {
        match self.fixture.entries.get(&prompt.fingerprint) {
            Some(e) => Ok(ProviderReply { text: e.reply.clone(), latency_secs: Some(e.latency_secs) }),
            None if self.fixture.strict => Err(ProviderError::FixtureMiss),
            None => {
                log::warn!("no replay entry for prompt {}; answering with an empty reply", prompt.fingerprint);
                Ok(ProviderReply { text: String::new(), latency_secs: Some(0.0) })
            }
        }
    }

    fn source(&self) -> ExchangeSource {
        ExchangeSource::Replay
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Gateway;

    fn exchange(user: &str, reply: &str) -> ChatExchange {
        ChatExchange {
            prompt: RenderedPrompt::new("", user),
            reply_text: reply.into(),
            model_name: "m".into(),
            latency_secs: 2.25,
            source: ExchangeSource::Live,
            retries: 0,
        }
    }

    #[test]
    fn replay_hit() {
        let p = RenderedPrompt::new("", "q");
        let mut f = ReplayFixture::new(true);
        f.reply_for(&p, "<Answer>A</Answer>").unwrap();
        let ex = Gateway::replay(f).complete(&p).unwrap();
        assert_eq!(ex.source, ExchangeSource::Replay);
        assert_eq!(ex.latency_secs, 0.0);
        assert_eq!(ex.reply_text, "<Answer>A</Answer>");
    }

    #[test]
    fn strict_miss_is_an_error() {
        let err = Gateway::replay(ReplayFixture::new(true)).complete(&RenderedPrompt::new("", "q")).unwrap_err();
        assert!(matches!(err, GatewayError::FixtureMiss(_)));
    }

    #[test]
    fn lenient_miss_is_empty() {
        let ex = Gateway::replay(ReplayFixture::new(false)).complete(&RenderedPrompt::new("", "q")).unwrap();
        assert_eq!(ex.reply_text, "");
    }

    #[test]
    fn record_round_trip() {
        let exchanges =
            vec![exchange("a", "reply α\nwith lines"), exchange("b", "x"), exchange("a", "reply α\nwith lines")];
        let fixture = record_fixture(&exchanges).unwrap();
        assert_eq!(fixture.len(), 2);
        let loaded = ReplayFixture::from_text(&fixture.to_text()).unwrap();
        assert_eq!(loaded, fixture);
        let gw = Gateway::replay(loaded);
        for ex in &exchanges {
            let again = gw.complete(&ex.prompt).unwrap();
            assert_eq!(again.reply_text.as_bytes(), ex.reply_text.as_bytes());
            assert_eq!(again.latency_secs, 2.25);
        }
    }

    #[test]
    fn empty_and_conflicting() {
        assert!(record_fixture(&[]).unwrap().is_empty());
        let err = record_fixture(&[exchange("a", "x"), exchange("a", "y")]).unwrap_err();
        assert!(matches!(err, GatewayError::DuplicateFingerprint(_)));
    }

    #[test]
    fn duplicate_in_file_is_rejected() {
        let text = r#"{"strict":true,"entries":[{"fingerprint":"f","reply":"a"},{"fingerprint":"f","reply":"a"}]}"#;
        assert!(matches!(ReplayFixture::from_text(text), Err(GatewayError::Fixture(_))));
    }
}
