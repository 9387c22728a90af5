use std::collections::{BTreeMap, BinaryHeap};
use std::cmp::Reverse;

use super::types::*;
use super::GraphError;

/// Renames every leaf entity to its `Top_i` frequency rank.
///
/// Ranks follow descending occurrence count over all entity slots of the
/// graph, ties broken by kind name and then by value. Node references are
/// not counted.
pub fn rank_entities(mut graph: EventDependencyGraph) -> EventDependencyGraph {
    let mut counts: BTreeMap<EntityKey, usize> = BTreeMap::new();
    for node in graph.nodes() {
        for e in [&node.entity1, &node.entity2] {
            if let Some(key) = e.key() {
                *counts.entry(key).or_default() += 1;
            }
        }
    }
    let mut order: Vec<(EntityKey, usize)> = counts.into_iter().collect();
    order.sort_by(|(ka, ca), (kb, cb)| {
        cb.cmp(ca).then_with(|| ka.0.name().cmp(kb.0.name())).then_with(|| ka.1.cmp(&kb.1))
    });
    let table = order.into_iter().enumerate().map(|(i, (key, _))| (key, i as u32 + 1)).collect();
    graph.set_ranks(table);
    graph
}

/// Kahn's algorithm with smallest-id-first tie breaking.
pub fn topo_order(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Vec<usize>, GraphError> {
    let mut succ = vec![Vec::new(); node_count];
    let mut indegree = vec![0usize; node_count];
    for (from, to) in edges {
        succ[from].push(to);
        indegree[to] += 1;
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..node_count).filter(|&n| indegree[n] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(node_count);
    while let Some(Reverse(n)) = ready.pop() {
        order.push(n);
        for &m in &succ[n] {
            indegree[m] -= 1;
            if indegree[m] == 0 {
                ready.push(Reverse(m));
            }
        }
    }
    if order.len() != node_count {
        return Err(GraphError::Cycle);
    }
    Ok(order)
}

/// Processing order for the execution engine.
pub fn topo_schedule(graph: &EventDependencyGraph) -> Result<Vec<usize>, GraphError> {
    topo_order(graph.len(), graph.edges())
}
