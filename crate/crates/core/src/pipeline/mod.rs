//! Text → entities → pairwise orientation queries → causal graph.
//!
//! Every unordered entity pair is queried exactly once, with the entity
//! that appears first in the text in the "A" role. Queries may run in
//! parallel; results are merged in pair order so the output never depends
//! on completion order.

mod cpdag;
mod scripted;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{ChatExchange, Gateway, GatewayError};
use crate::graph::{
    annotate_cycles, enforce_acyclicity, flag_transitive_candidates, Arc, CausalGraph, CycleReport, Entity, EntityId,
    GraphError, GraphFile, GraphKind, DEFAULT_CYCLE_CAP,
};
use crate::parallel::try_map_ordered;
use crate::prompt::earliest_mention;
use crate::prompt::{
    parse_entity_list, parse_verdict, reask_prompt, render_entity_prompt, render_orientation_prompt, Fingerprint,
    OrientationQuestion, ParsedVerdict, PromptError, Verdict,
};

pub use cpdag::{orient_cpdag, parse_pdag, CpdagOrientation, PartiallyDirectedGraph};
pub use scripted::{answer_reply, entity_reply, scripted_fixture};

pub const DEFAULT_ENTITY_CAP: usize = 20;
/// Per-document wall-time budget used for the projected-time check.
pub const DEFAULT_TIME_BUDGET_SECS: f64 = 30.0 * 60.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("need at least two entities to form a pair, found {0}")]
    TooFewEntities(usize),
    #[error("malformed partially directed graph: {0}")]
    Pdag(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub entity_cap: usize,
    pub parallelism: usize,
    pub enforce_acyclic: bool,
    pub cycle_cap: usize,
    pub time_budget_secs: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            entity_cap: DEFAULT_ENTITY_CAP,
            parallelism: 1,
            enforce_acyclic: false,
            cycle_cap: DEFAULT_CYCLE_CAP,
            time_budget_secs: DEFAULT_TIME_BUDGET_SECS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    ExtractEntities,
    EnumeratePairs,
    QueryOrientations,
    BuildGraph,
    AnalyzeGraph,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::ExtractEntities => "extract-entities",
            Stage::EnumeratePairs => "enumerate-pairs",
            Stage::QueryOrientations => "query-orientations",
            Stage::BuildGraph => "build-graph",
            Stage::AnalyzeGraph => "analyze-graph",
        };
        f.write_str(s)
    }
}

/// A run that stopped early, with whatever it had produced.
#[derive(Debug, Error)]
#[error("pipeline failed after stage {}: {error}", completed_stage.map(|s| s.to_string()).unwrap_or_else(|| "<none>".into()))]
pub struct PipelineFailure {
    pub completed_stage: Option<Stage>,
    #[source]
    pub error: PipelineError,
    pub entities: Vec<Entity>,
}

/// Entities extracted from one text.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub entities: Vec<Entity>,
    pub exchange: ChatExchange,
    pub warnings: Vec<String>,
}

/// Asks the model for the entities of `source_text`, merges synonym groups
/// and orders the result by first mention. Spans that do not occur in the
/// text are dropped; at most `cap` entities are kept (the latest-mentioned
/// ones are cut).
pub fn extract_entities(
    source_text: &str,
    domain_hint: &str,
    gateway: &Gateway,
    cap: usize,
) -> Result<Extraction, PipelineError> {
    let prompt = render_entity_prompt(source_text, domain_hint)?;
    let exchange = gateway.cached_complete(&prompt)?;
    let list = parse_entity_list(&exchange.reply_text)?;
    let mut warnings = Vec::new();

    let mut clusters: Vec<Vec<String>> = list.merge_groups.iter().map(|g| g.iter().cloned().collect()).collect();
    for span in &list.entities {
        if !list.merge_groups.iter().any(|g| g.contains(span)) {
            clusters.push(vec![span.clone()]);
        }
    }

    let mut entities: Vec<Entity> = Vec::new();
    for cluster in clusters {
        let mut found: Vec<(usize, &String)> = Vec::new();
        for form in &cluster {
            match earliest_mention(source_text, [form]) {
                Some(off) => found.push((off, form)),
                None => warnings.push(format!("entity `{form}` does not occur in the text; dropped")),
            }
        }
        // earliest mention names the cluster; longer span wins a tie
        found.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.len().cmp(&a.1.len())).then(a.1.cmp(b.1)));
        let Some(&(offset, canonical)) = found.first() else { continue };
        let mut entity = Entity::new("pending", canonical)?.with_offset(offset);
        for (_, form) in &found {
            entity = entity.with_surface_form(form);
        }
        entities.push(entity);
    }
    entities.sort_by(|a, b| (a.first_offset, a.canonical_label()).cmp(&(b.first_offset, b.canonical_label())));

    if entities.is_empty() {
        return Err(PromptError::NoEntitiesFound.into());
    }
    if entities.len() > cap {
        warnings.push(format!("{} entities extracted; keeping the first {cap} by position", entities.len()));
        entities.truncate(cap);
    }
    let width = entities.len().to_string().len().max(2);
    for (i, e) in entities.iter_mut().enumerate() {
        e.id = EntityId::new(format!("e{:0width$}", i + 1));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Extraction { entities, exchange, warnings })
}

/// All unordered pairs, each once, ordered by the (first, second) mention
/// positions; the earlier-mentioned entity takes the "A" role.
pub fn enumerate_pairs(entities: &[Entity], source_text: &str) -> Result<Vec<OrientationQuestion>, PipelineError> {
    if entities.len() < 2 {
        return Err(PipelineError::TooFewEntities(entities.len()));
    }
    let mut sorted: Vec<&Entity> = entities.iter().collect();
    sorted.sort_by(|a, b| (a.first_offset, a.canonical_label()).cmp(&(b.first_offset, b.canonical_label())));
    let mut out = Vec::with_capacity(sorted.len() * (sorted.len() - 1) / 2);
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            out.push(OrientationQuestion::new(source_text, (*a).clone(), (*b).clone())?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct OrientationOutcome {
    pub parsed: ParsedVerdict,
    /// The original exchange, plus the re-ask if one was needed.
    pub exchanges: Vec<ChatExchange>,
}

impl OrientationOutcome {
    pub fn reasked(&self) -> bool {
        self.exchanges.len() > 1
    }

    pub fn final_exchange(&self) -> &ChatExchange {
        self.exchanges.last().expect("at least one exchange")
    }
}

/// Renders and sends the orientation prompt. An unparsable reply gets one
/// re-ask; a second unparsable reply is returned as `Unparsable`.
pub fn query_orientation(
    question: &OrientationQuestion,
    gateway: &Gateway,
) -> Result<OrientationOutcome, GatewayError> {
    let prompt = render_orientation_prompt(question);
    let first = gateway.cached_complete(&prompt)?;
    let parsed = parse_verdict(&first.reply_text);
    if parsed.verdict != Verdict::Unparsable {
        return Ok(OrientationOutcome { parsed, exchanges: vec![first] });
    }
    let second = gateway.cached_complete(&reask_prompt(&prompt))?;
    let parsed = parse_verdict(&second.reply_text);
    Ok(OrientationOutcome { parsed, exchanges: vec![first, second] })
}

/// Ordered pair as queried: `a` held the "A" role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityPair {
    pub a: EntityId,
    pub b: EntityId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub verdict: Verdict,
    pub reasked: bool,
    /// Fingerprint of the exchange whose reply decided the verdict.
    pub exchange: Fingerprint,
    pub rationale: String,
}

/// One arc per Forward/Backward verdict, provenance `LlmVerdict`.
pub fn build_graph(
    entities: &[Entity],
    verdicts: &BTreeMap<EntityPair, PairVerdict>,
) -> Result<CausalGraph, GraphError> {
    let mut g = CausalGraph::new(GraphKind::Extracted);
    for e in entities {
        g.add_entity(e.clone())?;
    }
    for (pair, v) in verdicts {
        let arc = match v.verdict {
            Verdict::Forward => Arc::from_verdict(pair.a.clone(), pair.b.clone(), v.exchange.as_str()),
            Verdict::Backward => Arc::from_verdict(pair.b.clone(), pair.a.clone(), v.exchange.as_str()),
            Verdict::NoRelation | Verdict::Unparsable => continue,
        };
        g.add_arc(arc)?;
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub entity_count: usize,
    /// Orientation questions asked (one per pair).
    pub query_count: usize,
    pub reask_count: usize,
    pub mean_latency_secs: f64,
    /// Sample standard deviation over orientation exchanges.
    pub stdev_latency_secs: f64,
    pub abstention_count: usize,
    pub unparsable_count: usize,
    pub parallelism: usize,
    /// Summed orientation latency divided by the parallelism.
    pub projected_wall_time_secs: f64,
    pub within_time_budget: bool,
}

impl RunStats {
    fn from_outcomes(entity_count: usize, outcomes: &[OrientationOutcome], config: &PipelineConfig) -> Self {
        let latencies: Vec<f64> = outcomes.iter().flat_map(|o| o.exchanges.iter().map(|e| e.latency_secs)).collect();
        let (mean, stdev) = mean_stdev(&latencies);
        let total: f64 = latencies.iter().sum();
        let parallelism = config.parallelism.max(1);
        let projected = total / parallelism as f64;
        let count = |v: Verdict| outcomes.iter().filter(|o| o.parsed.verdict == v).count();
        RunStats {
            entity_count,
            query_count: outcomes.len(),
            reask_count: outcomes.iter().filter(|o| o.reasked()).count(),
            mean_latency_secs: mean,
            stdev_latency_secs: stdev,
            abstention_count: count(Verdict::NoRelation),
            unparsable_count: count(Verdict::Unparsable),
            parallelism,
            projected_wall_time_secs: projected,
            within_time_budget: projected <= config.time_budget_secs,
        }
    }
}

pub(crate) fn mean_stdev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub source_text: String,
    pub entities: Vec<Entity>,
    pub verdicts: BTreeMap<EntityPair, PairVerdict>,
    /// Final graph: cycle and transitive flags set, cycles broken when
    /// acyclicity is enforced.
    pub graph: CausalGraph,
    /// Cycles of the graph as extracted, before any arc removal.
    pub cycles: CycleReport,
    pub transitive_candidates: Vec<(EntityId, EntityId)>,
    pub removed_arcs: Vec<(EntityId, EntityId)>,
    pub stats: RunStats,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RunReport {
    source_text: String,
    stats: RunStats,
    verdicts: Vec<VerdictRecord>,
    graph: GraphFile,
    cycles: CycleReport,
    transitive_candidates: Vec<(EntityId, EntityId)>,
    removed_arcs: Vec<(EntityId, EntityId)>,
    warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VerdictRecord {
    a: EntityId,
    b: EntityId,
    #[serde(flatten)]
    verdict: PairVerdict,
}

impl PipelineRun {
    /// Run report as pretty JSON with a trailing newline.
    pub fn to_report(&self) -> String {
        let report = RunReport {
            source_text: self.source_text.clone(),
            stats: self.stats.clone(),
            verdicts: self
                .verdicts
                .iter()
                .map(|(p, v)| VerdictRecord { a: p.a.clone(), b: p.b.clone(), verdict: v.clone() })
                .collect(),
            graph: GraphFile::from_graph(&self.graph),
            cycles: self.cycles.clone(),
            transitive_candidates: self.transitive_candidates.clone(),
            removed_arcs: self.removed_arcs.clone(),
            warnings: self.warnings.clone(),
        };
        let mut s = serde_json::to_string_pretty(&report).expect("run report serializes");
        s.push('\n');
        s
    }

    /// Reads a run report back. Entities come from the embedded graph.
    pub fn from_report(text: &str) -> Result<Self, PipelineError> {
        let r: RunReport = serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
        let graph = r.graph.into_graph()?;
        let mut entities: Vec<Entity> = graph.entities().cloned().collect();
        entities.sort_by(|a, b| (a.first_offset, a.canonical_label()).cmp(&(b.first_offset, b.canonical_label())));
        Ok(PipelineRun {
            source_text: r.source_text,
            entities,
            verdicts: r.verdicts.into_iter().map(|v| (EntityPair { a: v.a, b: v.b }, v.verdict)).collect(),
            graph,
            cycles: r.cycles,
            transitive_candidates: r.transitive_candidates,
            removed_arcs: r.removed_arcs,
            stats: r.stats,
            warnings: r.warnings,
        })
    }
}

/// Full extraction: entities, all pairwise queries, graph assembly, cycle
/// and transitive-arc analysis, optional cycle breaking.
pub fn run_pipeline(
    source_text: &str,
    domain_hint: &str,
    config: &PipelineConfig,
    gateway: &Gateway,
) -> Result<PipelineRun, PipelineFailure> {
    let fail = |stage: Option<Stage>, entities: &[Entity]| {
        let entities = entities.to_vec();
        move |error: PipelineError| PipelineFailure { completed_stage: stage, error, entities }
    };

    let extraction = extract_entities(source_text, domain_hint, gateway, config.entity_cap).map_err(fail(None, &[]))?;
    let entities = extraction.entities;
    let mut warnings = extraction.warnings;

    let questions = enumerate_pairs(&entities, source_text).map_err(fail(Some(Stage::ExtractEntities), &entities))?;

    let outcomes = try_map_ordered(&questions, config.parallelism, |q| query_orientation(q, gateway))
        .map_err(|(_, e)| fail(Some(Stage::EnumeratePairs), &entities)(e.into()))?;

    let mut verdicts = BTreeMap::new();
    for (q, o) in questions.iter().zip(&outcomes) {
        let pair = EntityPair { a: q.entity_a().id.clone(), b: q.entity_b().id.clone() };
        if o.parsed.verdict == Verdict::Unparsable {
            warnings.push(format!("no usable answer for ({}, {}) after one re-ask", pair.a, pair.b));
        }
        verdicts.insert(
            pair,
            PairVerdict {
                verdict: o.parsed.verdict,
                reasked: o.reasked(),
                exchange: o.final_exchange().prompt.fingerprint.clone(),
                rationale: o.parsed.rationale_text.clone(),
            },
        );
    }
    let stats = RunStats::from_outcomes(entities.len(), &outcomes, config);

    let graph =
        build_graph(&entities, &verdicts).map_err(|e| fail(Some(Stage::QueryOrientations), &entities)(e.into()))?;
    debug_assert!(graph.has_no_opposite_arcs());

    let analyze = || -> Result<_, GraphError> {
        let (graph, cycles) = annotate_cycles(&graph, config.cycle_cap)?;
        let (graph, flagged) = flag_transitive_candidates(&graph);
        let (graph, removed) =
            if config.enforce_acyclic { enforce_acyclicity(&graph, config.cycle_cap)? } else { (graph, Vec::new()) };
        Ok((graph, cycles, flagged, removed))
    };
    let (graph, cycles, flagged, removed) =
        analyze().map_err(|e| fail(Some(Stage::BuildGraph), &entities)(e.into()))?;

    Ok(PipelineRun {
        source_text: source_text.to_owned(),
        entities,
        verdicts,
        graph,
        cycles,
        transitive_candidates: flagged.iter().map(Arc::key).collect(),
        removed_arcs: removed.iter().map(Arc::key).collect(),
        stats,
        warnings,
    })
}

#[cfg(test)]
mod tests;
