//! Evaluation harnesses: pairwise orientation on SemEval-style records and
//! whole-graph comparison against a reference graph.

mod graph_eval;
mod pairwise;
mod semeval;

use thiserror::Error;

use crate::gateway::GatewayError;

pub use graph_eval::{
    evaluate_batch, evaluate_graph, evaluate_graph_run, BatchEvaluation, DocumentEvaluation, GraphEvaluation,
    PooledScores,
};
pub use pairwise::{
    compute_report, question_for, render_confusion_table, run_pairwise_eval, ClassMetrics, ConfusionMatrix,
    PairwiseReport,
};
pub use semeval::{parse_semeval, write_semeval, CausalOrientation, SemEvalRecord, CAUSE_EFFECT};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: duplicate record id {id}")]
    DuplicateRecordId { id: u32, line: usize },
    #[error("record {id}: {reason}")]
    Record { id: u32, reason: String },
    #[error("nothing to evaluate")]
    EmptyEvaluationSet,
    #[error("the reference graph must be a ground-truth graph")]
    WrongGraphKind,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}
