//! Authoring replay fixtures without a live model.

use super::{enumerate_pairs, extract_entities, PipelineError};
use crate::gateway::{Gateway, ReplayFixture};
use crate::prompt::{
    parse_verdict, reask_prompt, render_entity_prompt, render_orientation_prompt, OrientationQuestion, Verdict,
};

/// Builds a strict fixture covering a whole pipeline run over `source_text`.
///
/// `entity_reply` is the model's answer to the extraction prompt. `answer`
/// is called once per orientation question with attempt 0; when that reply
/// does not parse it is called again with attempt 1 for the re-ask.
pub fn scripted_fixture(
    source_text: &str,
    domain_hint: &str,
    entity_reply: &str,
    entity_cap: usize,
    mut answer: impl FnMut(&OrientationQuestion, u32) -> String,
) -> Result<ReplayFixture, PipelineError> {
    let mut fixture = ReplayFixture::new(true);
    fixture.reply_for(&render_entity_prompt(source_text, domain_hint)?, entity_reply)?;
    let extraction = extract_entities(source_text, domain_hint, &Gateway::replay(fixture.clone()), entity_cap)?;
    for q in enumerate_pairs(&extraction.entities, source_text)? {
        let prompt = render_orientation_prompt(&q);
        let reply = answer(&q, 0);
        let unparsable = parse_verdict(&reply).verdict == Verdict::Unparsable;
        fixture.reply_for(&prompt, reply)?;
        if unparsable {
            fixture.reply_for(&reask_prompt(&prompt), answer(&q, 1))?;
        }
    }
    Ok(fixture)
}

/// A reply that picks `letter` after a one-line rationale.
pub fn answer_reply(letter: char) -> String {
    format!("Considering the text step by step, the best option is {letter}.\n<Answer>{letter}</Answer>")
}

/// Wraps spans as an extraction reply; inner vectors with more than one
/// span become synonym groups.
pub fn entity_reply(groups: &[&[&str]]) -> String {
    let tag = |s: &&str| format!("<Entity>{s}</Entity>");
    groups
        .iter()
        .map(|g| match g {
            [one] => tag(one),
            many => format!("<Group>{}</Group>", many.iter().map(tag).collect::<String>()),
        })
        .collect::<Vec<_>>()
        .join("\n")
}
