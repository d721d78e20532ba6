use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::semeval::{CausalOrientation, SemEvalRecord};
use super::EvalError;
use crate::gateway::Gateway;
use crate::graph::Entity;
use crate::parallel::try_map_ordered;
use crate::pipeline::query_orientation;
use crate::prompt::{OrientationQuestion, Verdict};

/// Orientation confusion counts. `counts[predicted][truth]`, index 0 is
/// "first entity causes second", index 1 the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
    /// Causal records the model answered "not directly related".
    pub abstained: u64,
    pub unparsable: u64,
}

impl ConfusionMatrix {
    pub fn from_grid(counts: [[u64; 2]; 2]) -> Self {
        ConfusionMatrix { counts, ..Default::default() }
    }

    pub fn grid_total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    /// Every record tallied, including abstentions and unparsable ones.
    pub fn record_total(&self) -> u64 {
        self.grid_total() + self.abstained + self.unparsable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub confusion: ConfusionMatrix,
    pub forward: ClassMetrics,
    pub backward: ClassMetrics,
    /// Unweighted mean of the two class F1 scores.
    pub macro_f1: f64,
    /// Grid trace over grid total.
    pub micro_accuracy: f64,
    #[serde(default)]
    pub misoriented_records: Vec<u32>,
    #[serde(default)]
    pub abstained_records: Vec<u32>,
    #[serde(default)]
    pub unparsable_records: Vec<u32>,
}

fn safe_div(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn class_metrics(c: &ConfusionMatrix, k: usize) -> ClassMetrics {
    let tp = c.counts[k][k];
    let predicted = c.counts[k][0] + c.counts[k][1];
    let actual = c.counts[0][k] + c.counts[1][k];
    let precision = safe_div(tp, predicted);
    let recall = safe_div(tp, actual);
    let f1 = safe_div(2 * tp, predicted + actual);
    ClassMetrics { precision, recall, f1 }
}

/// Per-class precision/recall/F1, macro F1 and accuracy over the grid.
/// Abstained and unparsable records are carried along but excluded from
/// every denominator. A class with an empty denominator scores 0.
pub fn compute_report(confusion: ConfusionMatrix) -> Result<PairwiseReport, EvalError> {
    if confusion.grid_total() == 0 {
        return Err(EvalError::EmptyEvaluationSet);
    }
    let forward = class_metrics(&confusion, 0);
    let backward = class_metrics(&confusion, 1);
    Ok(PairwiseReport {
        confusion,
        forward,
        backward,
        macro_f1: (forward.f1 + backward.f1) / 2.0,
        micro_accuracy: safe_div(confusion.trace(), confusion.grid_total()),
        misoriented_records: Vec::new(),
        abstained_records: Vec::new(),
        unparsable_records: Vec::new(),
    })
}

/// Asks for the orientation of every causal record (`e1` in the A role)
/// and tallies the answers against the annotation. Non-causal records are
/// skipped.
pub fn run_pairwise_eval(
    records: &[SemEvalRecord],
    gateway: &Gateway,
    parallelism: usize,
) -> Result<PairwiseReport, EvalError> {
    let causal: Vec<&SemEvalRecord> = records.iter().filter(|r| r.is_causal()).collect();
    if causal.is_empty() {
        return Err(EvalError::EmptyEvaluationSet);
    }
    let questions = causal.iter().map(|r| question_for(r)).collect::<Result<Vec<_>, _>>()?;
    let outcomes = try_map_ordered(&questions, parallelism, |q| query_orientation(q, gateway))
        .map_err(|(_, e)| EvalError::Gateway(e))?;

    let mut confusion = ConfusionMatrix::default();
    let (mut misoriented, mut abstained, mut unparsable) = (Vec::new(), Vec::new(), Vec::new());
    for (r, o) in causal.iter().zip(&outcomes) {
        let truth = match r.causal_orientation.expect("filtered to causal") {
            CausalOrientation::E1CausesE2 => 0,
            CausalOrientation::E2CausesE1 => 1,
        };
        let predicted = match o.parsed.verdict {
            Verdict::Forward => 0,
            Verdict::Backward => 1,
            Verdict::NoRelation => {
                confusion.abstained += 1;
                abstained.push(r.record_id);
                continue;
            }
            Verdict::Unparsable => {
                confusion.unparsable += 1;
                unparsable.push(r.record_id);
                continue;
            }
        };
        confusion.counts[predicted][truth] += 1;
        if predicted != truth {
            misoriented.push(r.record_id);
        }
    }
    let mut report = compute_report(confusion)?;
    report.misoriented_records = misoriented;
    report.abstained_records = abstained;
    report.unparsable_records = unparsable;
    Ok(report)
}

/// Orientation question for one record: `e1` is entity A, `e2` entity B.
pub fn question_for(record: &SemEvalRecord) -> Result<OrientationQuestion, EvalError> {
    let entity = |id: &str, span: &str, offset: usize| {
        Entity::new(id, span)
            .map(|e| e.with_offset(offset))
            .map_err(|e| EvalError::Record { id: record.record_id, reason: e.to_string() })
    };
    let a = entity("e1", &record.e1_span, record.e1_offset)?;
    let b = entity("e2", &record.e2_span, record.e2_offset)?;
    OrientationQuestion::new(&record.sentence, a, b)
        .map_err(|e| EvalError::Record { id: record.record_id, reason: e.to_string() })
}

/// The confusion grid laid out with predictions as rows and the annotation
/// as columns.
pub fn render_confusion_table(c: &ConfusionMatrix) -> String {
    let w = c.counts.iter().flatten().map(|n| n.to_string().len()).max().unwrap_or(1).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:>20}  {:^w$}", "", "Ground truth", w = 2 * w + 3);
    let _ = writeln!(out, "{:>20}  {:>w$}   {:>w$}", "", "A -> B", "A <- B");
    let _ = writeln!(out, "{:>20}  {:>w$}   {:>w$}", "Predicted  A -> B", c.counts[0][0], c.counts[0][1]);
    let _ = writeln!(out, "{:>20}  {:>w$}   {:>w$}", "A <- B", c.counts[1][0], c.counts[1][1]);
    let _ = writeln!(out, "abstained: {}  unparsable: {}", c.abstained, c.unparsable);
    out
}
