//! Orienting the undirected edges of a partially directed graph (e.g. the
//! CPDAG of a Markov equivalence class) from text.
//!
//! Input file: a structured graph file whose `arcs` are the directed part,
//! plus an `undirected` list of `[id, id]` pairs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{query_orientation, PipelineError};
use crate::gateway::Gateway;
use crate::graph::{Arc, CausalGraph, Entity, EntityId, GraphFile, GraphKind, Provenance};
use crate::parallel::try_map_ordered;
use crate::prompt::{earliest_mention, OrientationQuestion, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub struct PartiallyDirectedGraph {
    pub entities: Vec<Entity>,
    pub directed_arcs: Vec<(EntityId, EntityId)>,
    pub undirected_edges: Vec<(EntityId, EntityId)>,
}

impl PartiallyDirectedGraph {
    pub fn new(
        entities: Vec<Entity>,
        directed_arcs: Vec<(EntityId, EntityId)>,
        undirected_edges: Vec<(EntityId, EntityId)>,
    ) -> Result<Self, PipelineError> {
        let known: BTreeSet<&EntityId> = entities.iter().map(|e| &e.id).collect();
        let unordered =
            |(x, y): &(EntityId, EntityId)| if x <= y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
        let mut seen = BTreeSet::new();
        for edge in directed_arcs.iter().chain(&undirected_edges) {
            for id in [&edge.0, &edge.1] {
                if !known.contains(id) {
                    return Err(PipelineError::Pdag(format!("unknown entity `{id}`")));
                }
            }
            if edge.0 == edge.1 {
                return Err(PipelineError::Pdag(format!("self-loop on `{}`", edge.0)));
            }
            if !seen.insert(unordered(edge)) {
                return Err(PipelineError::Pdag(format!("pair ({}, {}) listed twice", edge.0, edge.1)));
            }
        }
        Ok(PartiallyDirectedGraph { entities, directed_arcs, undirected_edges })
    }
}

#[derive(Serialize, Deserialize)]
struct PdagFile {
    #[serde(flatten)]
    graph: GraphFile,
    #[serde(default)]
    undirected: Vec<(EntityId, EntityId)>,
}

pub fn parse_pdag(text: &str) -> Result<PartiallyDirectedGraph, PipelineError> {
    let file: PdagFile = serde_json::from_str(text).map_err(|e| PipelineError::Pdag(e.to_string()))?;
    let graph = file.graph.into_graph()?;
    PartiallyDirectedGraph::new(graph.entities().cloned().collect(), graph.arc_keys(), file.undirected)
}

#[derive(Debug, Clone)]
pub struct CpdagOrientation {
    pub graph: CausalGraph,
    pub queries: usize,
    pub warnings: Vec<String>,
}

/// Keeps directed arcs (provenance `Imported`) and asks the model to orient
/// each undirected edge. An edge answered "no direct relation", or left
/// unparsable, is dropped with a warning.
pub fn orient_cpdag(
    pdag: &PartiallyDirectedGraph,
    source_text: &str,
    gateway: &Gateway,
    parallelism: usize,
) -> Result<CpdagOrientation, PipelineError> {
    let mut graph = CausalGraph::new(GraphKind::Extracted);
    for e in &pdag.entities {
        let offset = earliest_mention(source_text, e.surface_forms()).unwrap_or(e.first_offset);
        graph.add_entity(e.clone().with_offset(offset))?;
    }
    for (c, e) in &pdag.directed_arcs {
        graph.add_arc(Arc::new(c.clone(), e.clone(), Provenance::Imported))?;
    }

    let questions = pdag
        .undirected_edges
        .iter()
        .map(|(x, y)| {
            let x = graph.entity(x).expect("validated").clone();
            let y = graph.entity(y).expect("validated").clone();
            OrientationQuestion::in_document_order(source_text, x, y)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let outcomes = try_map_ordered(&questions, parallelism, |q| query_orientation(q, gateway)).map_err(|(_, e)| e)?;

    let mut warnings = Vec::new();
    for (q, o) in questions.iter().zip(&outcomes) {
        let (a, b) = (&q.entity_a().id, &q.entity_b().id);
        let fingerprint = o.final_exchange().prompt.fingerprint.as_str();
        match o.parsed.verdict {
            Verdict::Forward => graph.add_arc(Arc::from_verdict(a.clone(), b.clone(), fingerprint))?,
            Verdict::Backward => graph.add_arc(Arc::from_verdict(b.clone(), a.clone(), fingerprint))?,
            Verdict::NoRelation | Verdict::Unparsable => {
                let w = format!(
                    "edge ({}, {}) dropped: the text gave no direction ({:?})",
                    q.entity_a().canonical_label(),
                    q.entity_b().canonical_label(),
                    o.parsed.verdict
                );
                log::warn!("{w}");
                warnings.push(w);
            }
        }
    }
    Ok(CpdagOrientation { graph, queries: questions.len(), warnings })
}
