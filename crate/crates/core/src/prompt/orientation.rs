use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{fill_template, PromptError, RenderedPrompt, ORIENTATION_TEMPLATE, REASK_SUFFIX};
use crate::graph::Entity;
use crate::text::{byte_offset, char_index, find_loose, find_loose_from};

/// An ordered entity pair to orient against a source text. Option A of the
/// rendered prompt always reads "`entity_a` causes `entity_b`".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientationQuestion {
    source_text: String,
    entity_a: Entity,
    entity_b: Entity,
    shown_a: String,
    shown_b: String,
}

impl OrientationQuestion {
    /// Keeps the given roles. Each entity is shown in the prompt as the
    /// text span where it occurs, preferring the mention at its
    /// `first_offset`.
    pub fn new(source_text: &str, entity_a: Entity, entity_b: Entity) -> Result<Self, PromptError> {
        if entity_a.id == entity_b.id {
            return Err(PromptError::SameEntity);
        }
        let shown_a = mention(source_text, &entity_a)?;
        let shown_b = mention(source_text, &entity_b)?;
        Ok(OrientationQuestion { source_text: source_text.to_owned(), entity_a, entity_b, shown_a, shown_b })
    }

    /// Orders the pair by `first_offset`, then canonical label.
    pub fn in_document_order(source_text: &str, x: Entity, y: Entity) -> Result<Self, PromptError> {
        let key = |e: &Entity| (e.first_offset, e.canonical_label().to_owned());
        if key(&y) < key(&x) {
            Self::new(source_text, y, x)
        } else {
            Self::new(source_text, x, y)
        }
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn entity_a(&self) -> &Entity {
        &self.entity_a
    }

    pub fn entity_b(&self) -> &Entity {
        &self.entity_b
    }

    /// The text spans interpolated for the two entities.
    pub fn shown_labels(&self) -> (&str, &str) {
        (&self.shown_a, &self.shown_b)
    }
}

fn mention(text: &str, entity: &Entity) -> Result<String, PromptError> {
    let forms = entity.surface_forms();
    if let Some(at) = byte_offset(text, entity.first_offset) {
        for form in forms {
            if let Some((s, e)) = find_loose_from(text, form, at) {
                if s == at {
                    return Ok(text[s..e].to_owned());
                }
            }
        }
    }
    forms
        .iter()
        .filter_map(|f| find_loose(text, f))
        .min()
        .map(|(s, e)| text[s..e].to_owned())
        .ok_or_else(|| PromptError::EntityNotInText(entity.canonical_label().to_owned()))
}

/// Character index of the earliest mention of any of the entity's forms.
pub(crate) fn earliest_mention(text: &str, forms: impl IntoIterator<Item = impl AsRef<str>>) -> Option<usize> {
    forms.into_iter().filter_map(|f| find_loose(text, f.as_ref())).map(|(s, _)| char_index(text, s)).min()
}

pub fn render_orientation_prompt(q: &OrientationQuestion) -> RenderedPrompt {
    let user = fill_template(
        ORIENTATION_TEMPLATE,
        &[("text", &q.source_text), ("entity_a", &q.shown_a), ("entity_b", &q.shown_b)],
    )
    .expect("orientation template slots are fixed");
    RenderedPrompt::new("", user)
}

/// Follow-up prompt sent once when a reply carries no usable answer tag.
pub fn reask_prompt(original: &RenderedPrompt) -> RenderedPrompt {
    RenderedPrompt::new(original.system_text.clone(), format!("{}{}", original.user_text, REASK_SUFFIX))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Option A: entity_a causes entity_b.
    Forward,
    /// Option B: entity_b causes entity_a.
    Backward,
    /// Option C: not directly causally related.
    NoRelation,
    Unparsable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedVerdict {
    pub verdict: Verdict,
    /// Reply text before the answer tag that was used.
    pub rationale_text: String,
}

static ANSWER_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<Answer>(.*?)</Answer>").unwrap());

/// Reads the last `<Answer>…</Answer>` tag of a reply. Never fails: a reply
/// without a usable tag is `Unparsable`.
pub fn parse_verdict(raw_reply: &str) -> ParsedVerdict {
    let Some(m) = ANSWER_TAG.captures_iter(raw_reply).last() else {
        return ParsedVerdict { verdict: Verdict::Unparsable, rationale_text: raw_reply.trim().to_owned() };
    };
    let whole = m.get(0).expect("group 0 always matches");
    let verdict = match m[1].trim() {
        "A" | "a" => Verdict::Forward,
        "B" | "b" => Verdict::Backward,
        "C" | "c" => Verdict::NoRelation,
        _ => Verdict::Unparsable,
    };
    ParsedVerdict { verdict, rationale_text: raw_reply[..whole.start()].trim().to_owned() }
}
