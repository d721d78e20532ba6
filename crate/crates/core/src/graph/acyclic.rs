use std::collections::BTreeMap;

use super::cycles::simple_cycles;
use super::{Arc, ArcFlag, CausalGraph, GraphError};

/// Makes the graph acyclic by greedy arc removal.
///
/// While cycles remain, removes the arc lying on the most simple cycles.
/// Ties prefer arcs flagged `SuspectedTransitive`, then the smallest
/// (cause, effect) id pair. Only arcs on some cycle are ever removed.
/// `OnDirectedCycle` flags are cleared on the returned graph.
pub fn enforce_acyclicity(graph: &CausalGraph, cap: usize) -> Result<(CausalGraph, Vec<Arc>), GraphError> {
    let mut g = graph.clone();
    let mut removed = Vec::new();
    loop {
        let idx = g.indexed();
        let cycles = simple_cycles(&idx.succ, cap)?;
        if cycles.is_empty() {
            break;
        }
        let mut coverage: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for cycle in &cycles {
            for (i, &u) in cycle.iter().enumerate() {
                *coverage.entry((u, cycle[(i + 1) % cycle.len()])).or_default() += 1;
            }
        }
        let (u, v) = coverage
            .iter()
            .map(|(&(u, v), &count)| {
                let key = (idx.ids[u].clone(), idx.ids[v].clone());
                let transitive = g.arc(&key.0, &key.1).is_some_and(|a| a.has_flag(ArcFlag::SuspectedTransitive));
                ((u, v), count, transitive)
            })
            // BTreeMap order is (cause, effect) order, so `min_by` keeps the
            // smallest pair among equals
            .min_by(|a, b| b.1.cmp(&a.1).then(b.2.cmp(&a.2)))
            .map(|(pair, _, _)| pair)
            .expect("a cycle has at least one arc");
        let arc = g.remove_arc(&idx.ids[u], &idx.ids[v]).expect("cycle arc exists");
        removed.push(arc);
    }
    for key in g.arc_keys() {
        g.set_flag(&key, ArcFlag::OnDirectedCycle, false);
    }
    Ok((g, removed))
}
