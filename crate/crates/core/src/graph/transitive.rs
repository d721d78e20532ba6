use super::{Arc, ArcFlag, CausalGraph};

/// Flags every arc `u -> v` that is shadowed by another directed path from
/// `u` to `v` (necessarily of length >= 2). The arc set is left unchanged:
/// a shadowed arc may still be a genuine direct effect.
///
/// Returns the flagged copy of the graph and the flagged arcs in
/// (cause, effect) order.
pub fn flag_transitive_candidates(graph: &CausalGraph) -> (CausalGraph, Vec<Arc>) {
    let idx = graph.indexed();
    let mut out = graph.clone();
    let mut flagged = Vec::new();
    for (u, vs) in idx.succ.iter().enumerate() {
        for &v in vs {
            let key = (idx.ids[u].clone(), idx.ids[v].clone());
            let shadowed = reaches_without_arc(&idx.succ, u, v);
            out.set_flag(&key, ArcFlag::SuspectedTransitive, shadowed);
            if shadowed {
                flagged.push(out.arc(&key.0, &key.1).expect("arc exists").clone());
            }
        }
    }
    (out, flagged)
}

/// Is `to` reachable from `from` when the direct arc `from -> to` is removed?
fn reaches_without_arc(succ: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; succ.len()];
    seen[from] = true;
    let mut todo: Vec<usize> = succ[from].iter().copied().filter(|&w| w != to).collect();
    for &w in &todo {
        seen[w] = true;
    }
    while let Some(x) = todo.pop() {
        for &y in &succ[x] {
            if y == to {
                return true;
            }
            if !seen[y] {
                seen[y] = true;
                todo.push(y);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    fn flagged_pairs(g: &CausalGraph) -> Vec<(String, String)> {
        flag_transitive_candidates(g).1.into_iter().map(|a| (a.cause.to_string(), a.effect.to_string())).collect()
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.to_owned(), b.to_owned())
    }

    #[test]
    fn multiply_connected_pattern() {
        let g = CausalGraph::from_labels(GraphKind::Extracted, &["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")])
            .unwrap();
        assert_eq!(flagged_pairs(&g), vec![pair("a", "c")]);
    }

    #[test]
    fn chain_without_shortcut() {
        let g = CausalGraph::from_labels(GraphKind::Extracted, &["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        assert!(flagged_pairs(&g).is_empty());
    }

    #[test]
    fn four_node_instance() {
        let g = CausalGraph::from_labels(
            GraphKind::Extracted,
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "c"), ("c", "d"), ("a", "d"), ("a", "c")],
        )
        .unwrap();
        assert_eq!(flagged_pairs(&g), vec![pair("a", "c"), pair("a", "d")]);
        let (out, _) = flag_transitive_candidates(&g);
        assert_eq!(out.arc_count(), g.arc_count());
        assert!(out.arc(&"a".into(), &"c".into()).unwrap().has_flag(ArcFlag::SuspectedTransitive));
        assert!(!out.arc(&"a".into(), &"b".into()).unwrap().has_flag(ArcFlag::SuspectedTransitive));
    }

    #[test]
    fn reflagging_clears_stale_flags() {
        let g = CausalGraph::from_labels(GraphKind::Extracted, &["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")])
            .unwrap();
        let (mut flagged, _) = flag_transitive_candidates(&g);
        flagged.remove_arc(&"b".into(), &"c".into());
        let (again, list) = flag_transitive_candidates(&flagged);
        assert!(list.is_empty());
        assert!(again.arcs().all(|a| a.flags.is_empty()));
    }
}
