use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CausalGraph;

/// Arc identified by the canonical labels of its endpoints.
pub type LabelPair = (String, String);

/// A ratio that may be undefined (empty denominator with a non-empty error
/// set). Serialized as a number or the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Value(f64),
    Undefined,
}

impl Score {
    /// `num / den`; an empty denominator scores 1 when nothing went wrong,
    /// and is undefined otherwise.
    pub fn ratio(num: usize, den: usize, errors: usize) -> Score {
        if den > 0 {
            Score::Value(num as f64 / den as f64)
        } else if errors == 0 {
            Score::Value(1.0)
        } else {
            Score::Undefined
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Score::Value(v) => Some(v),
            Score::Undefined => None,
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Value(v) => write!(f, "{v:.4}"),
            Score::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Score::Value(v) => s.serialize_f64(*v),
            Score::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Score::Value(v)),
            Raw::Text(t) if t == "undefined" => Ok(Score::Undefined),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid score `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphComparison {
    pub true_positive_arcs: BTreeSet<LabelPair>,
    pub false_positive_arcs: BTreeSet<LabelPair>,
    pub false_negative_arcs: BTreeSet<LabelPair>,
    pub precision: Score,
    pub recall: Score,
    pub f1: Score,
}

impl GraphComparison {
    pub fn from_sets(tp: BTreeSet<LabelPair>, fp: BTreeSet<LabelPair>, fn_: BTreeSet<LabelPair>) -> Self {
        let (precision, recall, f1) = scores(tp.len(), fp.len(), fn_.len());
        GraphComparison {
            true_positive_arcs: tp,
            false_positive_arcs: fp,
            false_negative_arcs: fn_,
            precision,
            recall,
            f1,
        }
    }
}

/// Precision, recall and F1 from raw counts.
pub fn scores(tp: usize, fp: usize, fn_: usize) -> (Score, Score, Score) {
    let precision = Score::ratio(tp, tp + fp, fp);
    let recall = Score::ratio(tp, tp + fn_, fn_);
    let f1 = match (precision, recall) {
        (Score::Value(p), Score::Value(r)) if p + r > 0.0 => Score::Value(2.0 * p * r / (p + r)),
        (Score::Value(_), Score::Value(_)) => Score::Value(0.0),
        _ => Score::Undefined,
    };
    (precision, recall, f1)
}

/// Compares an extracted graph with a ground-truth graph. Arcs are matched
/// by the canonical labels of their endpoints: a false positive is an arc
/// of `extracted` absent from `truth`, a false negative an arc of `truth`
/// absent from `extracted`.
pub fn compare_graphs(extracted: &CausalGraph, truth: &CausalGraph) -> GraphComparison {
    let predicted = label_arcs(extracted);
    let actual = label_arcs(truth);
    let tp = predicted.intersection(&actual).cloned().collect();
    let fp = predicted.difference(&actual).cloned().collect();
    let fn_ = actual.difference(&predicted).cloned().collect();
    GraphComparison::from_sets(tp, fp, fn_)
}

pub(crate) fn label_arcs(g: &CausalGraph) -> BTreeSet<LabelPair> {
    g.arcs()
        .map(|a| {
            let label = |id| g.entity(id).expect("arc endpoint exists").canonical_label().to_owned();
            (label(&a.cause), label(&a.effect))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    fn graph(kind: GraphKind, arcs: &[(&str, &str)]) -> CausalGraph {
        CausalGraph::from_labels(kind, &["a", "b", "c"], arcs).unwrap()
    }

    #[test]
    fn transitive_pattern_counts() {
        let x = graph(GraphKind::Extracted, &[("a", "b"), ("b", "c"), ("a", "c")]);
        let t = graph(GraphKind::GroundTruth, &[("a", "b"), ("b", "c")]);
        let c = compare_graphs(&x, &t);
        assert_eq!(c.precision, Score::Value(2.0 / 3.0));
        assert_eq!(c.recall, Score::Value(1.0));
        assert!((c.f1.value().unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(c.false_positive_arcs, BTreeSet::from([("a".to_owned(), "c".to_owned())]));
    }

    #[test]
    fn identical_graphs() {
        let x = graph(GraphKind::Extracted, &[("a", "b")]);
        let t = graph(GraphKind::GroundTruth, &[("a", "b")]);
        let c = compare_graphs(&x, &t);
        assert_eq!((c.precision, c.recall, c.f1), (Score::Value(1.0), Score::Value(1.0), Score::Value(1.0)));
    }

    #[test]
    fn empty_extraction() {
        let x = graph(GraphKind::Extracted, &[]);
        let t = graph(GraphKind::GroundTruth, &[("a", "b")]);
        let c = compare_graphs(&x, &t);
        assert_eq!(c.recall, Score::Value(0.0));
        assert!(c.false_positive_arcs.is_empty());
        assert_eq!(c.precision, Score::Value(1.0));
        assert_eq!(c.f1, Score::Value(0.0));
    }

    #[test]
    fn matching_is_by_label_not_id() {
        let mut x = CausalGraph::new(GraphKind::Extracted);
        x.add_entity(crate::graph::Entity::new("e001", "A").unwrap()).unwrap();
        x.add_entity(crate::graph::Entity::new("e002", "B").unwrap()).unwrap();
        x.add_arc(crate::graph::Arc::from_verdict("e001", "e002", "f")).unwrap();
        let t = graph(GraphKind::GroundTruth, &[("a", "b")]);
        assert_eq!(compare_graphs(&x, &t).true_positive_arcs.len(), 1);
    }

    #[test]
    fn score_serialization() {
        assert_eq!(serde_json::to_string(&Score::Undefined).unwrap(), "\"undefined\"");
        assert_eq!(serde_json::from_str::<Score>("0.5").unwrap(), Score::Value(0.5));
        assert_eq!(serde_json::from_str::<Score>("\"undefined\"").unwrap(), Score::Undefined);
        assert!(serde_json::from_str::<Score>("\"nan\"").is_err());
    }
}
