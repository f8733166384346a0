//! Best-first search over an implicit graph with integer edge costs.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::hash::Hash;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("search exceeded the expansion cap of {cap}")]
pub struct CapExceeded {
    pub cap: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchStats {
    pub expansions: usize,
    /// Closed nodes that were reopened after a cheaper path appeared.
    pub reopened: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome<N, E> {
    /// Node sequence from start to goal, the edge labels between them, and
    /// the total cost.
    Found { nodes: Vec<N>, edges: Vec<E>, cost: u64, stats: SearchStats },
    Exhausted { stats: SearchStats },
}

/// A* with reopening. Successors whose `g + h` exceeds `budget` are
/// dropped; `h = None` marks dead ends. The heuristic need not be
/// consistent: a closed node is reopened whenever a cheaper path reaches it,
/// so an admissible heuristic still yields an optimal path.
///
/// Equal `f` values pop the larger `g` first, then the earlier insertion.
pub fn astar<N, E>(
    start: N,
    mut successors: impl FnMut(&N) -> Vec<(N, E, u64)>,
    mut h: impl FnMut(&N) -> Option<u64>,
    is_goal: impl Fn(&N) -> bool,
    budget: u64,
    cap: usize,
) -> Result<SearchOutcome<N, E>, CapExceeded>
where
    N: Clone + Eq + Hash,
    E: Clone,
{
    let mut ids: HashMap<N, usize> = HashMap::new();
    let mut nodes: Vec<N> = Vec::new();
    let mut g: Vec<u64> = Vec::new();
    let mut parent: Vec<Option<(usize, E)>> = Vec::new();
    let mut closed: Vec<bool> = Vec::new();
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let mut stats = SearchStats { expansions: 0, reopened: 0 };

    let Some(h0) = h(&start) else {
        return Ok(SearchOutcome::Exhausted { stats });
    };
    if h0 > budget {
        return Ok(SearchOutcome::Exhausted { stats });
    }
    ids.insert(start.clone(), 0);
    nodes.push(start);
    g.push(0);
    parent.push(None);
    closed.push(false);
    open.push(Reverse((h0, Reverse(0u64), seq, 0usize)));

    while let Some(Reverse((_, Reverse(gn), _, id))) = open.pop() {
        if gn != g[id] || closed[id] {
            continue;
        }
        if is_goal(&nodes[id]) {
            let mut path = vec![id];
            let mut edges = Vec::new();
            while let Some((p, e)) = &parent[*path.last().unwrap()] {
                edges.push(e.clone());
                path.push(*p);
            }
            path.reverse();
            edges.reverse();
            let nodes = path.into_iter().map(|i| nodes[i].clone()).collect();
            return Ok(SearchOutcome::Found { nodes, edges, cost: gn, stats });
        }
        if stats.expansions >= cap {
            return Err(CapExceeded { cap });
        }
        stats.expansions += 1;
        closed[id] = true;
        let current = nodes[id].clone();
        for (next, e, c) in successors(&current) {
            let ng = gn.saturating_add(c);
            let known = ids.get(&next).copied();
            if known.is_some_and(|nid| ng >= g[nid]) {
                continue;
            }
            let Some(hn) = h(&next) else { continue };
            if ng.saturating_add(hn) > budget {
                continue;
            }
            let nid = match known {
                Some(nid) => {
                    if closed[nid] {
                        closed[nid] = false;
                        stats.reopened += 1;
                    }
                    nid
                }
                None => {
                    let nid = nodes.len();
                    ids.insert(next.clone(), nid);
                    nodes.push(next);
                    g.push(u64::MAX);
                    parent.push(None);
                    closed.push(false);
                    nid
                }
            };
            let f = ng + hn;
            g[nid] = ng;
            parent[nid] = Some((id, e));
            seq += 1;
            open.push(Reverse((f, Reverse(ng), seq, nid)));
        }
    }
    Ok(SearchOutcome::Exhausted { stats })
}

/// Exact cost-to-goal of every node reachable from `start`.
///
/// Goals are not expanded. Nodes that cannot reach a goal are absent from
/// the result.
pub fn cost_to_go<N>(
    start: N,
    mut successors: impl FnMut(&N) -> Vec<(N, u64)>,
    is_goal: impl Fn(&N) -> bool,
    cap: usize,
) -> Result<HashMap<N, u64>, CapExceeded>
where
    N: Clone + Eq + Hash,
{
    let mut ids: HashMap<N, usize> = HashMap::from([(start.clone(), 0)]);
    let mut nodes = vec![start];
    let mut preds: Vec<Vec<(usize, u64)>> = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    let mut goals = Vec::new();
    let mut expanded = 0;
    while let Some(id) = queue.pop_front() {
        if is_goal(&nodes[id]) {
            goals.push(id);
            continue;
        }
        if expanded >= cap {
            return Err(CapExceeded { cap });
        }
        expanded += 1;
        let current = nodes[id].clone();
        for (next, c) in successors(&current) {
            let nid = *ids.entry(next.clone()).or_insert_with(|| {
                nodes.push(next);
                preds.push(Vec::new());
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            });
            preds[nid].push((id, c));
        }
    }

    let mut dist = vec![u64::MAX; nodes.len()];
    let mut heap = BinaryHeap::new();
    for &gid in &goals {
        dist[gid] = 0;
        heap.push(Reverse((0u64, gid)));
    }
    while let Some(Reverse((d, id))) = heap.pop() {
        if d != dist[id] {
            continue;
        }
        for &(p, c) in &preds[id] {
            let nd = d.saturating_add(c);
            if nd < dist[p] {
                dist[p] = nd;
                heap.push(Reverse((nd, p)));
            }
        }
    }
    Ok(nodes
        .into_iter()
        .zip(dist)
        .filter(|(_, d)| *d != u64::MAX)
        .collect())
}
