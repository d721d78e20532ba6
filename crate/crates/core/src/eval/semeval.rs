//! SemEval-2010 Task 8 file format.
//!
//! Each record is a block of lines:
//!
//! ```text
//! 8\t"The <e1>infection</e1> came from a <e2>wound</e2>."
//! Cause-Effect(e2,e1)
//! Comment:
//!
//! ```
//!
//! The `Comment:` line is optional. LF and CRLF line endings are accepted.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::text::{byte_offset, char_index};

pub const CAUSE_EFFECT: &str = "Cause-Effect";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalOrientation {
    E1CausesE2,
    E2CausesE1,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemEvalRecord {
    pub record_id: u32,
    /// Sentence with the entity tags removed.
    pub sentence: String,
    pub e1_span: String,
    pub e2_span: String,
    /// Character index of each span in `sentence`.
    pub e1_offset: usize,
    pub e2_offset: usize,
    pub relation_label: String,
    pub comment: Option<String>,
    pub causal_orientation: Option<CausalOrientation>,
}

impl SemEvalRecord {
    /// Builds a record from a tagged sentence such as
    /// `The <e1>infection</e1> came from a <e2>wound</e2>.`
    pub fn new(record_id: u32, tagged: &str, relation_label: &str, comment: Option<&str>) -> Result<Self, String> {
        let tags = parse_tags(tagged)?;
        let causal_orientation = orientation_of(relation_label)?;
        Ok(SemEvalRecord {
            record_id,
            sentence: tags.sentence,
            e1_span: tags.e1.0,
            e2_span: tags.e2.0,
            e1_offset: tags.e1.1,
            e2_offset: tags.e2.1,
            relation_label: relation_label.to_owned(),
            comment: comment.map(str::to_owned),
            causal_orientation,
        })
    }

    pub fn is_causal(&self) -> bool {
        self.causal_orientation.is_some()
    }

    /// The sentence with `<e1>`/`<e2>` tags re-inserted.
    pub fn tagged_sentence(&self) -> String {
        let s = &self.sentence;
        let at = |c| byte_offset(s, c).expect("offset inside sentence");
        let e1 = (at(self.e1_offset), at(self.e1_offset + self.e1_span.chars().count()));
        let e2 = (at(self.e2_offset), at(self.e2_offset + self.e2_span.chars().count()));
        let mut marks = [(e1.0, "<e1>"), (e1.1, "</e1>"), (e2.0, "<e2>"), (e2.1, "</e2>")];
        // closing tags sort before opening tags at the same position
        marks.sort_by_key(|&(pos, tag)| (pos, !tag.starts_with("</")));
        let mut out = String::with_capacity(s.len() + 18);
        let mut last = 0;
        for (pos, tag) in marks {
            out.push_str(&s[last..pos]);
            out.push_str(tag);
            last = pos;
        }
        out.push_str(&s[last..]);
        out
    }
}

fn orientation_of(label: &str) -> Result<Option<CausalOrientation>, String> {
    match label {
        "Cause-Effect(e1,e2)" => Ok(Some(CausalOrientation::E1CausesE2)),
        "Cause-Effect(e2,e1)" => Ok(Some(CausalOrientation::E2CausesE1)),
        l if l.starts_with(CAUSE_EFFECT) => Err(format!("malformed cause-effect label `{l}`")),
        "" => Err("empty relation label".into()),
        _ => Ok(None),
    }
}

struct Tags {
    sentence: String,
    e1: (String, usize),
    e2: (String, usize),
}

fn parse_tags(tagged: &str) -> Result<Tags, String> {
    let find_once = |tag: &str| -> Result<usize, String> {
        let mut hits = tagged.match_indices(tag);
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => Ok(i),
            (None, _) => Err(format!("missing {tag}")),
            (Some(_), Some(_)) => Err(format!("{tag} appears more than once")),
        }
    };
    let (o1, c1, o2, c2) = (find_once("<e1>")?, find_once("</e1>")?, find_once("<e2>")?, find_once("</e2>")?);
    if c1 < o1 || c2 < o2 {
        return Err("closing entity tag before its opening tag".into());
    }
    if !(c1 < o2 || c2 < o1) {
        return Err("entity spans overlap".into());
    }
    let span = |open: usize, close: usize, open_len: usize| tagged[open + open_len..close].to_owned();
    let (s1, s2) = (span(o1, c1, 4), span(o2, c2, 4));
    if s1.trim().is_empty() || s2.trim().is_empty() {
        return Err("empty entity span".into());
    }

    let mut sentence = String::with_capacity(tagged.len());
    let mut cuts = [(o1, 4), (c1, 5), (o2, 4), (c2, 5)];
    cuts.sort();
    let mut last = 0;
    let mut starts = [0usize; 2];
    for (pos, len) in cuts {
        sentence.push_str(&tagged[last..pos]);
        if pos == o1 {
            starts[0] = sentence.len();
        } else if pos == o2 {
            starts[1] = sentence.len();
        }
        last = pos + len;
    }
    sentence.push_str(&tagged[last..]);
    let e1 = (s1, char_index(&sentence, starts[0]));
    let e2 = (s2, char_index(&sentence, starts[1]));
    Ok(Tags { sentence, e1, e2 })
}

static HEADER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"^(\d+)\t"(.*)"$"#).unwrap());

pub fn parse_semeval(file_text: &str) -> Result<Vec<SemEvalRecord>, EvalError> {
    let lines: Vec<&str> = file_text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    let err = |line: usize, reason: String| EvalError::Parse { line: line + 1, reason };
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let header_line = i;
        let caps = HEADER.captures(lines[i]).ok_or_else(|| err(i, "expected `<id>\\t\"<sentence>\"`".into()))?;
        let id: u32 = caps[1].parse().map_err(|_| err(i, format!("record id `{}` out of range", &caps[1])))?;
        let tagged = caps[2].to_owned();
        i += 1;

        let label = match lines.get(i) {
            Some(l) if !l.trim().is_empty() => l.trim(),
            _ => return Err(err(i, "missing relation label".into())),
        };
        let label_line = i;
        i += 1;

        let mut comment = None;
        if let Some(c) = lines.get(i).and_then(|l| l.strip_prefix("Comment:")) {
            comment = Some(c.trim().to_owned());
            i += 1;
        }
        if let Some(l) = lines.get(i) {
            if !l.trim().is_empty() {
                return Err(err(i, "expected a blank line after the record".into()));
            }
        }

        let record = SemEvalRecord::new(id, &tagged, label, comment.as_deref()).map_err(|reason| {
            let at = if reason.contains("label") { label_line } else { header_line };
            err(at, reason)
        })?;
        if !seen.insert(id) {
            return Err(EvalError::DuplicateRecordId { id, line: header_line + 1 });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_semeval(records: &[SemEvalRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!("{}\t\"{}\"\n{}\n", r.record_id, r.tagged_sentence(), r.relation_label));
        match r.comment.as_deref() {
            Some("") => out.push_str("Comment:\n"),
            Some(c) => out.push_str(&format!("Comment: {c}\n")),
            None => {}
        }
        out.push('\n');
    }
    out
}
