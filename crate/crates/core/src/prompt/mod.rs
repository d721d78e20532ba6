//! Prompt rendering and reply parsing.
//!
//! Templates are plain text resources with `{{slot}}` placeholders. The
//! orientation template asks the model to pick one of three options for an
//! ordered entity pair and to close its reply with `<Answer>X</Answer>`.

mod entities;
mod orientation;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use entities::{parse_entity_list, render_entity_prompt, EntityList, MEDICAL_DOMAIN_HINT};
pub(crate) use orientation::earliest_mention;
pub use orientation::{
    parse_verdict, reask_prompt, render_orientation_prompt, OrientationQuestion, ParsedVerdict, Verdict,
};

pub const ORIENTATION_TEMPLATE: &str = include_str!("../../templates/orientation.txt");
pub const ENTITY_TEMPLATE: &str = include_str!("../../templates/entities.txt");
pub const REASK_SUFFIX: &str = include_str!("../../templates/reask.txt");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("entity `{0}` does not occur in the source text")]
    EntityNotInText(String),
    #[error("an orientation question needs two distinct entities")]
    SameEntity,
    #[error("source text is empty")]
    EmptyText,
    #[error("no well-formed <Entity> spans in reply")]
    NoEntitiesFound,
    #[error("template slot `{0}` has no value")]
    MissingSlot(String),
    #[error("template has an unterminated slot")]
    UnterminatedSlot,
}

/// Hex SHA-256 over both prompt texts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fingerprint(String);

impl Fingerprint {
    pub fn of(system_text: &str, user_text: &str) -> Self {
        let mut h = Sha256::new();
        h.update((system_text.len() as u64).to_le_bytes());
        h.update(system_text.as_bytes());
        h.update(user_text.as_bytes());
        Fingerprint(hex(&h.finalize()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<String> for Fingerprint {
    fn from(s: String) -> Self {
        Fingerprint(s)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system_text: String,
    pub user_text: String,
    pub fingerprint: Fingerprint,
}

impl RenderedPrompt {
    pub fn new(system_text: impl Into<String>, user_text: impl Into<String>) -> Self {
        let system_text = system_text.into();
        let user_text = user_text.into();
        let fingerprint = Fingerprint::of(&system_text, &user_text);
        RenderedPrompt { system_text, user_text, fingerprint }
    }
}

/// Single-pass `{{slot}}` substitution. Interpolated values are never
/// rescanned, so text containing braces is safe.
pub fn fill_template(template: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let close = after.find("}}").ok_or(PromptError::UnterminatedSlot)?;
        let name = after[..close].trim();
        let value = values
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| PromptError::MissingSlot(name.to_owned()))?;
        out.push_str(value);
        rest = &after[close + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_is_single_pass() {
        let out = fill_template("<{{a}}|{{b}}>", &[("a", "{{b}}"), ("b", "x")]).unwrap();
        assert_eq!(out, "<{{b}}|x>");
    }

    #[test]
    fn fill_errors() {
        assert_eq!(fill_template("{{a}}", &[]), Err(PromptError::MissingSlot("a".into())));
        assert_eq!(fill_template("{{a", &[("a", "1")]), Err(PromptError::UnterminatedSlot));
    }

    #[test]
    fn fingerprint_separates_system_and_user() {
        assert_ne!(Fingerprint::of("ab", "c"), Fingerprint::of("a", "bc"));
        assert_eq!(Fingerprint::of("s", "u"), Fingerprint::of("s", "u"));
        assert_eq!(Fingerprint::of("", "").as_str().len(), 64);
    }
}
