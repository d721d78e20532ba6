//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain strings or numbers and returns a JSON string, so
//! the page needs no generated type glue. The `*_json` functions carry the
//! logic and are tested natively.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use causegraph::eval::{compute_report, ConfusionMatrix};
use causegraph::graph::{
    detect_cycles, enforce_acyclicity, flag_transitive_candidates, to_dot, Arc, CausalGraph, Entity, GraphKind,
    Provenance,
};
use causegraph::prompt::{parse_verdict, render_orientation_prompt, OrientationQuestion, Verdict};

const CYCLE_CAP: usize = 2_000;

fn to_js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Renders the orientation prompt for `entity_a` (option A: a causes b)
/// and `entity_b`, both given as spans of `text`.
#[wasm_bindgen]
pub fn orientation_prompt(text: &str, entity_a: &str, entity_b: &str) -> Result<String, JsError> {
    to_js(orientation_prompt_json(text, entity_a, entity_b))
}

/// Reads the verdict from a model reply.
#[wasm_bindgen]
pub fn read_verdict(reply: &str) -> String {
    read_verdict_json(reply)
}

/// Analyses a graph given as one `cause -> effect` arc per line.
#[wasm_bindgen]
pub fn analyze_graph(arcs: &str) -> Result<String, JsError> {
    to_js(analyze_graph_json(arcs))
}

/// Orientation metrics for a 2x2 grid, rows are predictions.
#[wasm_bindgen]
pub fn confusion_metrics(fwd_fwd: u32, fwd_bwd: u32, bwd_fwd: u32, bwd_bwd: u32) -> Result<String, JsError> {
    to_js(confusion_metrics_json([[fwd_fwd, fwd_bwd], [bwd_fwd, bwd_bwd]]))
}

fn entity(text: &str, id: &str, span: &str) -> Result<Entity, String> {
    let span = span.trim();
    let offset = text.find(span).ok_or_else(|| format!("`{span}` does not occur in the text"))?;
    let e = Entity::new(id, span).map_err(|e| e.to_string())?;
    Ok(e.with_offset(text[..offset].chars().count()))
}

pub fn orientation_prompt_json(text: &str, a: &str, b: &str) -> Result<String, String> {
    if a.trim() == b.trim() {
        return Err("pick two different entities".into());
    }
    let q = OrientationQuestion::new(text, entity(text, "a", a)?, entity(text, "b", b)?).map_err(|e| e.to_string())?;
    let p = render_orientation_prompt(&q);
    Ok(json!({ "prompt": p.user_text, "fingerprint": p.fingerprint.as_str() }).to_string())
}

pub fn read_verdict_json(reply: &str) -> String {
    let parsed = parse_verdict(reply);
    let meaning = match parsed.verdict {
        Verdict::Forward => "A causes B",
        Verdict::Backward => "B causes A",
        Verdict::NoRelation => "not directly related",
        Verdict::Unparsable => "no usable <Answer> tag",
    };
    json!({ "verdict": parsed.verdict, "meaning": meaning, "rationale": parsed.rationale_text }).to_string()
}

fn parse_arcs(text: &str) -> Result<CausalGraph, String> {
    let mut g = CausalGraph::new(GraphKind::Extracted);
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (c, e) = line.split_once("->").ok_or_else(|| format!("line {}: expected `cause -> effect`", n + 1))?;
        let (c, e) = (c.trim(), e.trim());
        for label in [c, e] {
            if g.entity(&label.into()).is_none() {
                let offset = g.entity_count();
                let ent = Entity::new(label, label).map_err(|err| format!("line {}: {err}", n + 1))?;
                g.add_entity(ent.with_offset(offset)).map_err(|err| err.to_string())?;
            }
        }
        g.add_arc(Arc::new(c, e, Provenance::Imported)).map_err(|err| format!("line {}: {err}", n + 1))?;
    }
    if g.entity_count() == 0 {
        return Err("no arcs given".into());
    }
    Ok(g)
}

#[derive(Serialize)]
struct Analysis {
    entities: usize,
    arcs: usize,
    cycles: Vec<Vec<String>>,
    suspected_transitive: Vec<(String, String)>,
    removed_for_acyclicity: Vec<(String, String)>,
    dot: String,
}

pub fn analyze_graph_json(text: &str) -> Result<String, String> {
    let g = parse_arcs(text)?;
    let pairs = |arcs: Vec<Arc>| arcs.into_iter().map(|a| (a.cause.to_string(), a.effect.to_string())).collect();
    let report = detect_cycles(&g, CYCLE_CAP).map_err(|e| e.to_string())?;
    let (flagged, transitive) = flag_transitive_candidates(&g);
    let (_, removed) = enforce_acyclicity(&g, CYCLE_CAP).map_err(|e| e.to_string())?;
    let analysis = Analysis {
        entities: g.entity_count(),
        arcs: g.arc_count(),
        cycles: report.cycles.iter().map(|c| c.iter().map(|id| id.to_string()).collect()).collect(),
        suspected_transitive: pairs(transitive),
        removed_for_acyclicity: pairs(removed),
        dot: to_dot(&flagged),
    };
    serde_json::to_string(&analysis).map_err(|e| e.to_string())
}

pub fn confusion_metrics_json(grid: [[u32; 2]; 2]) -> Result<String, String> {
    let counts = grid.map(|row| row.map(u64::from));
    let report = compute_report(ConfusionMatrix::from_grid(counts)).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn prompt_mentions_both_entities() {
        let text = "Heavy rain flooded the cellar.";
        let v = parse(&orientation_prompt_json(text, "rain", "cellar").unwrap());
        let prompt = v["prompt"].as_str().unwrap();
        assert!(prompt.contains("rain") && prompt.contains("cellar"));
        assert_eq!(v["fingerprint"].as_str().unwrap().len(), 64);
        assert!(orientation_prompt_json(text, "rain", "roof").is_err());
        assert!(orientation_prompt_json(text, "rain", "rain").is_err());
    }

    #[test]
    fn verdicts() {
        assert_eq!(parse(&read_verdict_json("so <Answer>B</Answer>"))["verdict"], "backward");
        assert_eq!(parse(&read_verdict_json("no tag"))["meaning"], "no usable <Answer> tag");
    }

    #[test]
    fn graph_analysis() {
        let v = parse(&analyze_graph_json("a -> b\nb -> c\na -> c\n# note\nc -> d\nd -> a\n").unwrap());
        assert_eq!(v["arcs"], 5);
        assert_eq!(v["suspected_transitive"][0], json!(["a", "c"]));
        assert_eq!(v["cycles"].as_array().unwrap().len(), 2);
        assert!(v["dot"].as_str().unwrap().starts_with("digraph"));
        let removed = v["removed_for_acyclicity"].as_array().unwrap();
        assert!(!removed.is_empty());
        assert!(analyze_graph_json("a b").is_err());
        assert!(analyze_graph_json("").is_err());
    }

    #[test]
    fn metrics() {
        let v = parse(&confusion_metrics_json([[335, 7], [6, 650]]).unwrap());
        assert!((v["macro_f1"].as_f64().unwrap() - 0.985533).abs() < 1e-4);
        assert!(confusion_metrics_json([[0, 0], [0, 0]]).is_err());
    }
}
