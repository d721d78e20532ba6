//! Directed causal graphs over extracted entities.
//!
//! A [`CausalGraph`] is a set of [`Entity`] nodes and at most one [`Arc`] per
//! ordered pair. Arcs carry their provenance and analysis flags. The
//! structural analyses live in submodules and never mutate their input:
//! they return new graph values.

mod acyclic;
mod compare;
mod cycles;
mod serialize;
mod transitive;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize;

pub use acyclic::enforce_acyclicity;
pub use compare::{compare_graphs, scores, GraphComparison, LabelPair, Score};
pub use cycles::{annotate_cycles, detect_cycles, CycleReport, DEFAULT_CYCLE_CAP};
pub use serialize::{parse_graph, to_dot, to_structured, GraphFile};
pub use transitive::flag_transitive_candidates;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown entity `{0}`")]
    UnknownEntity(EntityId),
    #[error("self-loop on `{0}`")]
    SelfLoop(EntityId),
    #[error("arc {cause} -> {effect} conflicts with the existing opposite arc")]
    OppositeArcConflict { cause: EntityId, effect: EntityId },
    #[error("entity `{0}` already present")]
    DuplicateEntity(EntityId),
    #[error("canonical label `{0}` used by two entities")]
    DuplicateLabel(String),
    #[error("entity label is empty after normalization")]
    EmptyLabel,
    #[error("LLM-verdict arc {cause} -> {effect} has no source exchange")]
    MissingExchange { cause: EntityId, effect: EntityId },
    #[error("more than {cap} simple cycles")]
    CycleBudgetExceeded { cap: usize },
    #[error("malformed graph file: {0}")]
    Format(String),
}

/// Opaque, stable node identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_owned())
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        EntityId(s)
    }
}

/// A named thing mentioned in the text; one node of the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    canonical_label: String,
    surface_forms: BTreeSet<String>,
    /// Character index of the earliest mention in the source text.
    pub first_offset: usize,
}

impl Entity {
    /// Builds an entity whose canonical label is the normalized `label`.
    pub fn new(id: impl Into<EntityId>, label: &str) -> Result<Self, GraphError> {
        let canonical_label = normalize(label);
        if canonical_label.is_empty() {
            return Err(GraphError::EmptyLabel);
        }
        Ok(Entity {
            id: id.into(),
            surface_forms: BTreeSet::from([canonical_label.clone()]),
            canonical_label,
            first_offset: 0,
        })
    }

    pub fn with_offset(mut self, first_offset: usize) -> Self {
        self.first_offset = first_offset;
        self
    }

    /// Adds a synonym. Empty forms are ignored.
    pub fn with_surface_form(mut self, form: &str) -> Self {
        let form = normalize(form);
        if !form.is_empty() {
            self.surface_forms.insert(form);
        }
        self
    }

    pub fn canonical_label(&self) -> &str {
        &self.canonical_label
    }

    pub fn surface_forms(&self) -> &BTreeSet<String> {
        &self.surface_forms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LlmVerdict,
    GroundTruthAnnotation,
    Imported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcFlag {
    /// A longer directed path connects the same endpoints.
    SuspectedTransitive,
    OnDirectedCycle,
}

/// Directed cause → effect arc.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub cause: EntityId,
    pub effect: EntityId,
    pub provenance: Provenance,
    /// Fingerprint of the chat exchange that produced the arc.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_exchange: Option<String>,
    #[serde(default)]
    pub flags: BTreeSet<ArcFlag>,
}

impl Arc {
    pub fn new(cause: impl Into<EntityId>, effect: impl Into<EntityId>, provenance: Provenance) -> Self {
        Arc { cause: cause.into(), effect: effect.into(), provenance, source_exchange: None, flags: BTreeSet::new() }
    }

    pub fn from_verdict(cause: impl Into<EntityId>, effect: impl Into<EntityId>, exchange: impl Into<String>) -> Self {
        Arc { source_exchange: Some(exchange.into()), ..Arc::new(cause, effect, Provenance::LlmVerdict) }
    }

    pub fn key(&self) -> (EntityId, EntityId) {
        (self.cause.clone(), self.effect.clone())
    }

    pub fn has_flag(&self, flag: ArcFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Whether a graph was extracted by the pipeline or annotated by hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    #[default]
    Extracted,
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    kind: GraphKind,
    entities: BTreeMap<EntityId, Entity>,
    arcs: BTreeMap<(EntityId, EntityId), Arc>,
}

impl CausalGraph {
    pub fn new(kind: GraphKind) -> Self {
        CausalGraph { kind, entities: BTreeMap::new(), arcs: BTreeMap::new() }
    }

    /// Convenience constructor for fixtures: one entity per label (id equal
    /// to the label) and the given arcs.
    pub fn from_labels(kind: GraphKind, labels: &[&str], arcs: &[(&str, &str)]) -> Result<Self, GraphError> {
        let provenance = match kind {
            GraphKind::Extracted => Provenance::Imported,
            GraphKind::GroundTruth => Provenance::GroundTruthAnnotation,
        };
        let mut g = CausalGraph::new(kind);
        for (i, label) in labels.iter().enumerate() {
            g.add_entity(Entity::new(*label, label)?.with_offset(i))?;
        }
        for (c, e) in arcs {
            g.add_arc(Arc::new(*c, *e, provenance))?;
        }
        Ok(g)
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: GraphKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn add_entity(&mut self, entity: Entity) -> Result<(), GraphError> {
        if self.entities.contains_key(&entity.id) {
            return Err(GraphError::DuplicateEntity(entity.id));
        }
        if self.entities.values().any(|e| e.canonical_label == entity.canonical_label) {
            return Err(GraphError::DuplicateLabel(entity.canonical_label));
        }
        self.entities.insert(entity.id.clone(), entity);
        Ok(())
    }

    /// Inserts an arc. Re-adding an existing ordered pair is a no-op (the
    /// first insertion wins). The reverse of an existing arc is rejected in
    /// extracted graphs, where each unordered pair is queried once.
    pub fn add_arc(&mut self, arc: Arc) -> Result<(), GraphError> {
        for id in [&arc.cause, &arc.effect] {
            if !self.entities.contains_key(id) {
                return Err(GraphError::UnknownEntity(id.clone()));
            }
        }
        if arc.cause == arc.effect {
            return Err(GraphError::SelfLoop(arc.cause));
        }
        if arc.provenance == Provenance::LlmVerdict && arc.source_exchange.is_none() {
            return Err(GraphError::MissingExchange { cause: arc.cause, effect: arc.effect });
        }
        let key = arc.key();
        if self.arcs.contains_key(&key) {
            return Ok(());
        }
        if self.kind == GraphKind::Extracted && self.arcs.contains_key(&(arc.effect.clone(), arc.cause.clone())) {
            return Err(GraphError::OppositeArcConflict { cause: arc.cause, effect: arc.effect });
        }
        self.arcs.insert(key, arc);
        Ok(())
    }

    pub fn remove_arc(&mut self, cause: &EntityId, effect: &EntityId) -> Option<Arc> {
        self.arcs.remove(&(cause.clone(), effect.clone()))
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.get(id)
    }

    /// Entities in id order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    /// Arcs in (cause, effect) id order.
    pub fn arcs(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.values()
    }

    pub fn arc(&self, cause: &EntityId, effect: &EntityId) -> Option<&Arc> {
        self.arcs.get(&(cause.clone(), effect.clone()))
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn contains_arc(&self, cause: &str, effect: &str) -> bool {
        self.arcs.contains_key(&(EntityId::from(cause), EntityId::from(effect)))
    }

    /// Cause/effect ids of every arc, in order.
    pub fn arc_keys(&self) -> Vec<(EntityId, EntityId)> {
        self.arcs.keys().cloned().collect()
    }

    pub(crate) fn set_flag(&mut self, key: &(EntityId, EntityId), flag: ArcFlag, on: bool) {
        if let Some(arc) = self.arcs.get_mut(key) {
            if on {
                arc.flags.insert(flag);
            } else {
                arc.flags.remove(&flag);
            }
        }
    }

    /// Index view used by the structural analyses: node `i` is the `i`-th
    /// id in sorted order, adjacency lists are sorted.
    pub(crate) fn indexed(&self) -> Indexed {
        let ids: Vec<EntityId> = self.entities.keys().cloned().collect();
        let pos: BTreeMap<&EntityId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut succ = vec![Vec::new(); ids.len()];
        for (c, e) in self.arcs.keys() {
            succ[pos[c]].push(pos[e]);
        }
        for s in &mut succ {
            s.sort_unstable();
        }
        Indexed { ids, succ }
    }

    /// True when no pair of entities is joined by arcs in both directions.
    pub fn has_no_opposite_arcs(&self) -> bool {
        self.arcs.keys().all(|(c, e)| !self.arcs.contains_key(&(e.clone(), c.clone())))
    }
}

pub(crate) struct Indexed {
    pub ids: Vec<EntityId>,
    pub succ: Vec<Vec<usize>>,
}
