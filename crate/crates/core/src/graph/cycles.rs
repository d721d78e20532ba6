use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ArcFlag, CausalGraph, EntityId, GraphError};

/// Default cap on the number of simple cycles enumerated before giving up.
pub const DEFAULT_CYCLE_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    /// Simple cycles, each rotated to start at its smallest id, sorted.
    pub cycles: Vec<Vec<EntityId>>,
    pub is_acyclic: bool,
}

impl CycleReport {
    /// Ordered arc pairs lying on at least one reported cycle.
    pub fn cycle_arcs(&self) -> BTreeSet<(EntityId, EntityId)> {
        let mut out = BTreeSet::new();
        for cycle in &self.cycles {
            for (i, from) in cycle.iter().enumerate() {
                let to = &cycle[(i + 1) % cycle.len()];
                out.insert((from.clone(), to.clone()));
            }
        }
        out
    }
}

/// Enumerates every simple directed cycle (Johnson's circuit search).
pub fn detect_cycles(graph: &CausalGraph, cap: usize) -> Result<CycleReport, GraphError> {
    let idx = graph.indexed();
    let mut found = simple_cycles(&idx.succ, cap)?;
    found.sort();
    let cycles: Vec<Vec<EntityId>> =
        found.into_iter().map(|c| c.into_iter().map(|i| idx.ids[i].clone()).collect()).collect();
    Ok(CycleReport { is_acyclic: cycles.is_empty(), cycles })
}

/// Runs [`detect_cycles`] and returns a copy of the graph whose arcs carry
/// `OnDirectedCycle` exactly when they lie on some cycle.
pub fn annotate_cycles(graph: &CausalGraph, cap: usize) -> Result<(CausalGraph, CycleReport), GraphError> {
    let report = detect_cycles(graph, cap)?;
    let on_cycle = report.cycle_arcs();
    let mut out = graph.clone();
    for key in graph.arc_keys() {
        out.set_flag(&key, ArcFlag::OnDirectedCycle, on_cycle.contains(&key));
    }
    Ok((out, report))
}

/// Cycles over node indices, each starting at its minimum node. Node order
/// equals sorted id order, so the rotation is canonical for ids too.
pub(crate) fn simple_cycles(succ: &[Vec<usize>], cap: usize) -> Result<Vec<Vec<usize>>, GraphError> {
    let n = succ.len();
    let mut pred = vec![Vec::new(); n];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }

    let mut out = Vec::new();
    for start in 0..n {
        let component = component_of(start, succ, &pred);
        if component.iter().filter(|&&x| x).count() < 2 {
            continue;
        }
        let mut search = Circuit {
            succ,
            component: &component,
            start,
            blocked: vec![false; n],
            blocked_by: vec![Vec::new(); n],
            stack: Vec::new(),
            out: &mut out,
            cap,
        };
        search.run(start)?;
    }
    Ok(out)
}

/// Strongly connected component of `start` within the subgraph induced by
/// nodes `>= start`.
fn component_of(start: usize, succ: &[Vec<usize>], pred: &[Vec<usize>]) -> Vec<bool> {
    let reach = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; adj.len()];
        let mut todo = vec![start];
        seen[start] = true;
        while let Some(u) = todo.pop() {
            for &v in &adj[u] {
                if v >= start && !seen[v] {
                    seen[v] = true;
                    todo.push(v);
                }
            }
        }
        seen
    };
    let fwd = reach(succ);
    let bwd = reach(pred);
    fwd.iter().zip(&bwd).map(|(a, b)| *a && *b).collect()
}

struct Circuit<'a> {
    succ: &'a [Vec<usize>],
    component: &'a [bool],
    start: usize,
    blocked: Vec<bool>,
    blocked_by: Vec<Vec<usize>>,
    stack: Vec<usize>,
    out: &'a mut Vec<Vec<usize>>,
    cap: usize,
}

impl Circuit<'_> {
    fn run(&mut self, v: usize) -> Result<bool, GraphError> {
        let mut closed = false;
        self.stack.push(v);
        self.blocked[v] = true;
        for &w in &self.succ[v] {
            if !self.component[w] {
                continue;
            }
            if w == self.start {
                if self.out.len() >= self.cap {
                    return Err(GraphError::CycleBudgetExceeded { cap: self.cap });
                }
                self.out.push(self.stack.clone());
                closed = true;
            } else if !self.blocked[w] && self.run(w)? {
                closed = true;
            }
        }
        if closed {
            self.unblock(v);
        } else {
            for &w in &self.succ[v] {
                if self.component[w] && !self.blocked_by[w].contains(&v) {
                    self.blocked_by[w].push(v);
                }
            }
        }
        self.stack.pop();
        Ok(closed)
    }

    fn unblock(&mut self, v: usize) {
        let mut todo = vec![v];
        while let Some(u) = todo.pop() {
            if self.blocked[u] {
                self.blocked[u] = false;
                todo.append(&mut self.blocked_by[u]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    fn ids(v: &[&str]) -> Vec<EntityId> {
        v.iter().map(|s| EntityId::from(*s)).collect()
    }

    #[test]
    fn dag_has_no_cycles() {
        let g = CausalGraph::from_labels(GraphKind::Extracted, &["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        let r = detect_cycles(&g, DEFAULT_CYCLE_CAP).unwrap();
        assert!(r.is_acyclic);
        assert!(r.cycles.is_empty());
    }

    #[test]
    fn single_triangle() {
        let g = CausalGraph::from_labels(GraphKind::Extracted, &["a", "b", "c"], &[("b", "c"), ("c", "a"), ("a", "b")])
            .unwrap();
        let (flagged, r) = annotate_cycles(&g, DEFAULT_CYCLE_CAP).unwrap();
        assert_eq!(r.cycles, vec![ids(&["a", "b", "c"])]);
        assert!(!r.is_acyclic);
        assert!(flagged.arcs().all(|a| a.has_flag(ArcFlag::OnDirectedCycle)));
    }

    #[test]
    fn only_cycle_arcs_are_flagged() {
        let g = CausalGraph::from_labels(
            GraphKind::Extracted,
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "c"), ("c", "a"), ("c", "d")],
        )
        .unwrap();
        let (flagged, _) = annotate_cycles(&g, DEFAULT_CYCLE_CAP).unwrap();
        let cd = flagged.arc(&"c".into(), &"d".into()).unwrap();
        assert!(!cd.has_flag(ArcFlag::OnDirectedCycle));
    }

    #[test]
    fn cap_is_enforced() {
        // complete digraph on 6 nodes has far more than 10 simple cycles
        let labels = ["a", "b", "c", "d", "e", "f"];
        let mut arcs = Vec::new();
        for x in labels {
            for y in labels {
                if x != y {
                    arcs.push((x, y));
                }
            }
        }
        let g = CausalGraph::from_labels(GraphKind::GroundTruth, &labels, &arcs).unwrap();
        assert_eq!(detect_cycles(&g, 10), Err(GraphError::CycleBudgetExceeded { cap: 10 }));
        // 2-cycles: 15, 3-cycles: 40, 4: 90, 5: 144, 6: 120
        assert_eq!(detect_cycles(&g, DEFAULT_CYCLE_CAP).unwrap().cycles.len(), 409);
    }
}
