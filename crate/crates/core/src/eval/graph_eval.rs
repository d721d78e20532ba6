use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::graph::{
    compare_graphs, flag_transitive_candidates, scores, CausalGraph, GraphComparison, GraphKind, LabelPair, Score,
};
use crate::pipeline::PipelineRun;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEvaluation {
    #[serde(flatten)]
    pub comparison: GraphComparison,
    /// False positives that are also transitive-reduction candidates in the
    /// extracted graph.
    pub transitive_false_positives: BTreeSet<LabelPair>,
    /// Share of false positives that are transitive candidates; undefined
    /// when there are no false positives.
    pub transitive_fp_share: Score,
}

/// Scores `extracted` against a ground-truth graph. Transitive candidates
/// are recomputed on `extracted`, so graphs loaded from files need no flags.
pub fn evaluate_graph(extracted: &CausalGraph, truth: &CausalGraph) -> Result<GraphEvaluation, EvalError> {
    if truth.kind() != GraphKind::GroundTruth {
        return Err(EvalError::WrongGraphKind);
    }
    let comparison = compare_graphs(extracted, truth);
    let (_, candidates) = flag_transitive_candidates(extracted);
    let label = |id| extracted.entity(id).expect("arc endpoint exists").canonical_label().to_owned();
    let flagged: BTreeSet<LabelPair> = candidates.iter().map(|a| (label(&a.cause), label(&a.effect))).collect();
    let transitive_false_positives: BTreeSet<LabelPair> =
        comparison.false_positive_arcs.intersection(&flagged).cloned().collect();
    let transitive_fp_share = match comparison.false_positive_arcs.len() {
        0 => Score::Undefined,
        n => Score::Value(transitive_false_positives.len() as f64 / n as f64),
    };
    Ok(GraphEvaluation { comparison, transitive_false_positives, transitive_fp_share })
}

pub fn evaluate_graph_run(run: &PipelineRun, truth: &CausalGraph) -> Result<GraphEvaluation, EvalError> {
    evaluate_graph(&run.graph, truth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentEvaluation {
    pub name: String,
    #[serde(flatten)]
    pub evaluation: GraphEvaluation,
}

/// Counts pooled over every document, scored once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledScores {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub transitive_false_positives: usize,
    pub precision: Score,
    pub recall: Score,
    pub f1: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEvaluation {
    pub documents: Vec<DocumentEvaluation>,
    pub pooled: PooledScores,
}

pub fn evaluate_batch<'a, I>(items: I) -> Result<BatchEvaluation, EvalError>
where
    I: IntoIterator<Item = (&'a str, &'a CausalGraph, &'a CausalGraph)>,
{
    let mut documents = Vec::new();
    let (mut tp, mut fp, mut fn_, mut tfp) = (0, 0, 0, 0);
    for (name, extracted, truth) in items {
        let evaluation = evaluate_graph(extracted, truth)?;
        let c = &evaluation.comparison;
        tp += c.true_positive_arcs.len();
        fp += c.false_positive_arcs.len();
        fn_ += c.false_negative_arcs.len();
        tfp += evaluation.transitive_false_positives.len();
        documents.push(DocumentEvaluation { name: name.to_owned(), evaluation });
    }
    if documents.is_empty() {
        return Err(EvalError::EmptyEvaluationSet);
    }
    let (precision, recall, f1) = scores(tp, fp, fn_);
    let pooled = PooledScores {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        transitive_false_positives: tfp,
        precision,
        recall,
        f1,
    };
    Ok(BatchEvaluation { documents, pooled })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(kind: GraphKind, arcs: &[(&str, &str)]) -> CausalGraph {
        CausalGraph::from_labels(kind, &["a", "b", "c", "d"], arcs).unwrap()
    }

    #[test]
    fn transitive_shortcut_is_the_only_false_positive() {
        let ex = g(GraphKind::Extracted, &[("a", "b"), ("b", "c"), ("a", "c")]);
        let truth = g(GraphKind::GroundTruth, &[("a", "b"), ("b", "c")]);
        let ev = evaluate_graph(&ex, &truth).unwrap();
        assert_eq!(ev.comparison.precision, Score::Value(2.0 / 3.0));
        assert_eq!(ev.comparison.recall, Score::Value(1.0));
        assert_eq!(ev.transitive_fp_share, Score::Value(1.0));
    }

    #[test]
    fn non_transitive_false_positive() {
        let ex = g(GraphKind::Extracted, &[("a", "b"), ("c", "d")]);
        let truth = g(GraphKind::GroundTruth, &[("a", "b")]);
        let ev = evaluate_graph(&ex, &truth).unwrap();
        assert_eq!(ev.transitive_fp_share, Score::Value(0.0));
        let exact = evaluate_graph(&truth.clone().with_kind(GraphKind::Extracted), &truth).unwrap();
        assert_eq!(exact.transitive_fp_share, Score::Undefined);
    }

    #[test]
    fn truth_must_be_ground_truth() {
        let ex = g(GraphKind::Extracted, &[("a", "b")]);
        assert!(matches!(evaluate_graph(&ex, &ex), Err(EvalError::WrongGraphKind)));
    }

    #[test]
    fn batch_pools_counts() {
        let ex1 = g(GraphKind::Extracted, &[("a", "b"), ("b", "c"), ("a", "c")]);
        let t1 = g(GraphKind::GroundTruth, &[("a", "b"), ("b", "c")]);
        let ex2 = g(GraphKind::Extracted, &[("c", "d")]);
        let t2 = g(GraphKind::GroundTruth, &[("c", "d"), ("a", "d")]);
        let b = evaluate_batch([("one", &ex1, &t1), ("two", &ex2, &t2)]).unwrap();
        assert_eq!((b.pooled.true_positives, b.pooled.false_positives, b.pooled.false_negatives), (3, 1, 1));
        assert_eq!(b.pooled.precision, Score::Value(0.75));
        assert_eq!(b.documents[1].name, "two");
        assert!(matches!(evaluate_batch(std::iter::empty()), Err(EvalError::EmptyEvaluationSet)));
    }
}
