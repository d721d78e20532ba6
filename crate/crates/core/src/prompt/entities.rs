use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{fill_template, PromptError, RenderedPrompt, ENTITY_TEMPLATE};
use crate::text::normalize;

/// Entity categories emphasised for medical abstracts.
pub const MEDICAL_DOMAIN_HINT: &str = "diseases, medications, treatments, and symptoms";

/// Asks the model to list the entities of `source_text`, with synonyms
/// grouped. An empty `domain_hint` drops the emphasis sentence.
pub fn render_entity_prompt(source_text: &str, domain_hint: &str) -> Result<RenderedPrompt, PromptError> {
    if source_text.trim().is_empty() {
        return Err(PromptError::EmptyText);
    }
    let hint = domain_hint.trim();
    let clause = if hint.is_empty() {
        String::new()
    } else {
        format!("Identify entities with a particular emphasis on {hint}.\n")
    };
    let user = fill_template(ENTITY_TEMPLATE, &[("text", source_text), ("domain_clause", &clause)])?;
    Ok(RenderedPrompt::new("", user))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EntityList {
    /// Normalized spans, first occurrence order, no duplicates.
    pub entities: Vec<String>,
    /// Disjoint synonym clusters of two or more spans.
    pub merge_groups: Vec<BTreeSet<String>>,
}

static ENTITY_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<Entity>(.*?)</Entity>").unwrap());
static GROUP_TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<Group>(.*?)</Group>").unwrap());

/// Parses an extraction reply: `<Entity>` spans anywhere in the reply, and
/// `<Group>` blocks whose member spans are synonyms. Groups sharing a span
/// are merged so the clusters stay disjoint.
pub fn parse_entity_list(raw_reply: &str) -> Result<EntityList, PromptError> {
    let mut entities: Vec<String> = Vec::new();
    for cap in ENTITY_TAG.captures_iter(raw_reply) {
        let span = normalize(&cap[1]);
        if !span.is_empty() && !entities.contains(&span) {
            entities.push(span);
        }
    }
    if entities.is_empty() {
        return Err(PromptError::NoEntitiesFound);
    }

    let mut groups: Vec<BTreeSet<String>> = Vec::new();
    for block in GROUP_TAG.captures_iter(raw_reply) {
        let members: BTreeSet<String> =
            ENTITY_TAG.captures_iter(&block[1]).map(|c| normalize(&c[1])).filter(|s| !s.is_empty()).collect();
        let (overlapping, mut rest): (Vec<_>, Vec<_>) = groups.into_iter().partition(|g| !g.is_disjoint(&members));
        let merged = overlapping.into_iter().fold(members, |mut acc, g| {
            acc.extend(g);
            acc
        });
        rest.push(merged);
        groups = rest;
    }
    groups.retain(|g| g.len() >= 2);
    // keep groups in order of their earliest member
    let rank = |g: &BTreeSet<String>| g.iter().filter_map(|s| entities.iter().position(|e| e == s)).min();
    groups.sort_by_key(rank);

    Ok(EntityList { entities, merge_groups: groups })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medical_hint_is_interpolated() {
        let p = render_entity_prompt("Fulminant type 1 diabetes (FT1D) is ...", MEDICAL_DOMAIN_HINT).unwrap();
        for cat in ["diseases", "medications", "treatments", "symptoms"] {
            assert!(p.user_text.contains(cat));
        }
        assert!(p.user_text.contains("<Text>Fulminant type 1 diabetes (FT1D) is ...</Text>"));
        assert!(p.user_text.contains("<Group>"));
    }

    #[test]
    fn empty_hint_omits_emphasis() {
        let p = render_entity_prompt("Some text.", "").unwrap();
        assert!(!p.user_text.contains("particular emphasis"));
        assert!(!p.user_text.contains("\n\n\n"));
        assert_eq!(p.fingerprint, render_entity_prompt("Some text.", " ").unwrap().fingerprint);
    }

    #[test]
    fn empty_text_is_rejected() {
        assert_eq!(render_entity_prompt(" \n", "x"), Err(PromptError::EmptyText));
    }

    #[test]
    fn synonym_group_reply() {
        let reply =
            "<Entity>FT1D</Entity><Group><Entity>fulminant type 1 diabetes</Entity><Entity>FT1D</Entity></Group>";
        let list = parse_entity_list(reply).unwrap();
        assert_eq!(list.entities, vec!["ft1d", "fulminant type 1 diabetes"]);
        assert_eq!(
            list.merge_groups,
            vec![BTreeSet::from(["ft1d".to_owned(), "fulminant type 1 diabetes".to_owned()])]
        );
    }

    #[test]
    fn duplicates_collapse() {
        let list = parse_entity_list("<Entity>Fume</Entity>\n<Entity> fume </Entity><Entity>FUME</Entity>").unwrap();
        assert_eq!(list.entities, vec!["fume"]);
        assert!(list.merge_groups.is_empty());
    }

    #[test]
    fn malformed_only() {
        assert_eq!(parse_entity_list("<Entity>fume<Entity>dust</Entitty>"), Err(PromptError::NoEntitiesFound));
        assert_eq!(parse_entity_list("<Entity>  </Entity>"), Err(PromptError::NoEntitiesFound));
        assert_eq!(parse_entity_list(""), Err(PromptError::NoEntitiesFound));
    }

    #[test]
    fn overlapping_groups_merge() {
        let reply = "<Group><Entity>a</Entity><Entity>b</Entity></Group>\
                     <Entity>c</Entity>\
                     <Group><Entity>b</Entity><Entity>d</Entity></Group>\
                     <Group><Entity>e</Entity></Group>";
        let list = parse_entity_list(reply).unwrap();
        assert_eq!(list.entities, vec!["a", "b", "c", "d", "e"]);
        assert_eq!(list.merge_groups.len(), 1);
        assert_eq!(list.merge_groups[0], ["a", "b", "d"].iter().map(|s| s.to_string()).collect());
    }
}
