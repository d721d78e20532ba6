//! DOT and structured (JSON) graph files.
//!
//! Structured file layout:
//!
//! ```text
//! {
//!   "kind": "extracted" | "ground_truth",
//!   "entities": [ { "id", "canonical_label", "surface_forms": [..], "first_offset" } ],
//!   "arcs": [ { "cause", "effect", "provenance", "source_exchange"?, "flags": [..] } ]
//! }
//! ```
//!
//! Entities are written in canonical-label order and arcs in (cause, effect)
//! order, so the output does not depend on insertion order.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Arc, ArcFlag, CausalGraph, Entity, EntityId, GraphError, GraphKind, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    #[serde(default)]
    pub kind: GraphKind,
    pub entities: Vec<EntityRecord>,
    #[serde(default)]
    pub arcs: Vec<ArcRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub id: EntityId,
    pub canonical_label: String,
    #[serde(default)]
    pub surface_forms: BTreeSet<String>,
    #[serde(default)]
    pub first_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcRecord {
    pub cause: EntityId,
    pub effect: EntityId,
    #[serde(default = "default_provenance")]
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_exchange: Option<String>,
    #[serde(default)]
    pub flags: BTreeSet<ArcFlag>,
}

fn default_provenance() -> Provenance {
    Provenance::Imported
}

impl GraphFile {
    pub fn from_graph(graph: &CausalGraph) -> Self {
        let mut entities: Vec<EntityRecord> = graph
            .entities()
            .map(|e| EntityRecord {
                id: e.id.clone(),
                canonical_label: e.canonical_label().to_owned(),
                surface_forms: e.surface_forms().clone(),
                first_offset: e.first_offset,
            })
            .collect();
        entities.sort_by(|a, b| a.canonical_label.cmp(&b.canonical_label).then(a.id.cmp(&b.id)));
        let arcs = graph
            .arcs()
            .map(|a| ArcRecord {
                cause: a.cause.clone(),
                effect: a.effect.clone(),
                provenance: a.provenance,
                source_exchange: a.source_exchange.clone(),
                flags: a.flags.clone(),
            })
            .collect();
        GraphFile { kind: graph.kind(), entities, arcs }
    }

    /// Rebuilds the graph, re-checking every invariant.
    pub fn into_graph(self) -> Result<CausalGraph, GraphError> {
        let mut g = CausalGraph::new(self.kind);
        for rec in self.entities {
            let mut e = Entity::new(rec.id, &rec.canonical_label)?.with_offset(rec.first_offset);
            if e.canonical_label() != rec.canonical_label {
                return Err(GraphError::Format(format!("canonical_label `{}` is not normalized", rec.canonical_label)));
            }
            for form in &rec.surface_forms {
                e = e.with_surface_form(form);
            }
            g.add_entity(e)?;
        }
        for rec in self.arcs {
            let mut arc = Arc::new(rec.cause, rec.effect, rec.provenance);
            arc.source_exchange = rec.source_exchange;
            arc.flags = rec.flags;
            let key = arc.key();
            if g.arc(&key.0, &key.1).is_some() {
                return Err(GraphError::Format(format!("duplicate arc {} -> {}", key.0, key.1)));
            }
            g.add_arc(arc)?;
        }
        Ok(g)
    }
}

/// Structured graph file text (pretty JSON, trailing newline).
pub fn to_structured(graph: &CausalGraph) -> String {
    let mut s = serde_json::to_string_pretty(&GraphFile::from_graph(graph)).expect("graph file serializes");
    s.push('\n');
    s
}

pub fn parse_graph(text: &str) -> Result<CausalGraph, GraphError> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
    file.into_graph()
}

/// Graphviz rendering. Suspected transitive arcs are dashed, arcs on a
/// directed cycle are red.
pub fn to_dot(graph: &CausalGraph) -> String {
    let mut out = String::from("digraph causal_graph {\n  node [shape=box];\n");
    let mut entities: Vec<&Entity> = graph.entities().collect();
    entities.sort_by(|a, b| a.canonical_label().cmp(b.canonical_label()).then(a.id.cmp(&b.id)));
    for e in entities {
        let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", escape(e.id.as_str()), escape(e.canonical_label()));
    }
    for a in graph.arcs() {
        let mut attrs = Vec::new();
        if a.has_flag(ArcFlag::SuspectedTransitive) {
            attrs.push("style=dashed");
        }
        if a.has_flag(ArcFlag::OnDirectedCycle) {
            attrs.push("color=red");
        }
        let attrs = if attrs.is_empty() { String::new() } else { format!(" [{}]", attrs.join(", ")) };
        let _ = writeln!(out, "  \"{}\" -> \"{}\"{};", escape(a.cause.as_str()), escape(a.effect.as_str()), attrs);
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}
