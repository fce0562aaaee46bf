//! The five low-level network-pruning heuristics and their parameter
//! schedules. Each heuristic maps (network, duals, modified costs, parameter)
//! to an edge mask over the interior (customer→customer) edges; source- and
//! sink-adjacent edges are never removed, so a singleton route always remains
//! available to the pricing problem.

use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::net::{EdgeMask, NodeId, PricingNetwork};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeuristicKind {
    Be1,
    Be2,
    Be3,
    Bn,
    Bp,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 5] = [
        HeuristicKind::Be1,
        HeuristicKind::Be2,
        HeuristicKind::Be3,
        HeuristicKind::Bn,
        HeuristicKind::Bp,
    ];

    pub fn index(self) -> usize {
        HeuristicKind::ALL.iter().position(|&k| k == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Be1 => "be1",
            HeuristicKind::Be2 => "be2",
            HeuristicKind::Be3 => "be3",
            HeuristicKind::Bn => "bn",
            HeuristicKind::Bp => "bp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        HeuristicKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Retry schedule of parameter values. BE3 values are fractions of |V|,
    /// BP values are path counts.
    pub fn schedule(self) -> &'static [f64] {
        match self {
            HeuristicKind::Be1 => &[0.1, 0.3, 0.5, 0.7],
            HeuristicKind::Be2 => &[0.1, 0.2, 0.3],
            HeuristicKind::Be3 => &[0.3, 0.5, 0.7],
            HeuristicKind::Bn => &[0.9, 0.7, 0.3],
            HeuristicKind::Bp => &[3.0, 5.0, 7.0, 9.0],
        }
    }
}

/// A heuristic plus its position in the retry schedule. The cursor advances
/// on failure, persists across CG iterations within an episode and resets at
/// episode start.
#[derive(Debug, Clone)]
pub struct HeuristicAction {
    pub kind: HeuristicKind,
    cursor: usize,
}

impl HeuristicAction {
    pub fn new(kind: HeuristicKind) -> Self {
        HeuristicAction { kind, cursor: 0 }
    }

    /// Parameter value at the cursor, or `None` once the schedule is exhausted.
    pub fn current_parameter(&self) -> Option<f64> {
        self.kind.schedule().get(self.cursor).copied()
    }

    /// Advance past the current value after a failed pricing attempt.
    pub fn note_failure(&mut self) {
        if self.cursor < self.kind.schedule().len() {
            self.cursor += 1;
        }
    }

    pub fn is_exhausted(&self) -> bool {
        self.cursor >= self.kind.schedule().len()
    }

    pub fn reset(&mut self) {
        self.cursor = 0;
    }
}

fn interior_edges(net: &PricingNetwork) -> Vec<usize> {
    (0..net.edges.len()).filter(|&e| net.is_interior(e)).collect()
}

/// BE1: drop interior edges with c_ij > α₁·π_max. A non-positive threshold
/// would remove every positive-cost edge, so it is clamped to the identity
/// mask instead.
pub fn be1(net: &PricingNetwork, duals: &[f64], alpha1: f64) -> Result<EdgeMask> {
    if duals.is_empty() {
        return Err(Error::InvalidArgument("be1: empty dual vector".into()));
    }
    let pi_max = duals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = alpha1 * pi_max;
    let mut mask = EdgeMask::all(net.edges.len());
    if threshold <= 0.0 {
        return Ok(mask);
    }
    for e in interior_edges(net) {
        if net.edges[e].cost > threshold {
            mask.0[e] = false;
        }
    }
    Ok(mask)
}

/// BE2: keep exactly ⌈α₂·|E|⌉ interior edges of lowest modified cost, ties
/// broken by (tail, head).
pub fn be2(net: &PricingNetwork, modified: &[f64], alpha2: f64) -> Result<EdgeMask> {
    check_costs(net, modified)?;
    let mut candidates = interior_edges(net);
    let keep = (alpha2 * candidates.len() as f64).ceil() as usize;
    candidates.sort_by(|&a, &b| {
        modified[a]
            .total_cmp(&modified[b])
            .then_with(|| (net.edges[a].tail, net.edges[a].head).cmp(&(net.edges[b].tail, net.edges[b].head)))
    });
    let mut mask = EdgeMask::all(net.edges.len());
    for &e in candidates.iter().skip(keep) {
        mask.0[e] = false;
    }
    Ok(mask)
}

/// BE3: an interior edge survives iff it is among the N cheapest in-edges of
/// its head or the N cheapest out-edges of its tail, by modified cost.
/// `fraction` is the Table-1 multiplier of |V|; N = ⌈fraction·|V|⌉.
pub fn be3(net: &PricingNetwork, modified: &[f64], fraction: f64) -> Result<EdgeMask> {
    check_costs(net, modified)?;
    let n = (fraction * net.num_nodes() as f64).ceil() as usize;
    be3_with_n(net, modified, n.max(1))
}

pub fn be3_with_n(net: &PricingNetwork, modified: &[f64], n: usize) -> Result<EdgeMask> {
    check_costs(net, modified)?;
    if n == 0 {
        return Err(Error::InvalidArgument("be3: N must be >= 1".into()));
    }
    let mut keep = vec![false; net.edges.len()];
    let by_cost = |a: &usize, b: &usize| {
        modified[*a]
            .total_cmp(&modified[*b])
            .then_with(|| (net.edges[*a].tail, net.edges[*a].head).cmp(&(net.edges[*b].tail, net.edges[*b].head)))
    };
    for v in 0..net.num_tasks {
        let mut ins: Vec<usize> = net.in_edges(v).iter().copied().filter(|&e| net.is_interior(e)).collect();
        ins.sort_by(by_cost);
        for &e in ins.iter().take(n) {
            keep[e] = true;
        }
        let mut outs: Vec<usize> = net.out_edges(v).iter().copied().filter(|&e| net.is_interior(e)).collect();
        outs.sort_by(by_cost);
        for &e in outs.iter().take(n) {
            keep[e] = true;
        }
    }
    let mut mask = EdgeMask::all(net.edges.len());
    for e in interior_edges(net) {
        mask.0[e] = keep[e];
    }
    Ok(mask)
}

/// BN: normalize duals into [0, β] and drop each interior edge independently
/// with the probability attached to its head node. Edges into the minimum-dual
/// node survive with certainty, edges into the maximum-dual node are dropped
/// with probability β.
pub fn bn(net: &PricingNetwork, duals: &[f64], beta: f64, rng: &mut impl Rng) -> Result<EdgeMask> {
    if duals.len() != net.num_tasks {
        return Err(Error::InvalidArgument("bn: dual length mismatch".into()));
    }
    let pi_max = duals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pi_min = duals.iter().copied().fold(f64::INFINITY, f64::min);
    let mut mask = EdgeMask::all(net.edges.len());
    if pi_max == pi_min {
        // Normalization undefined; fall back to the identity mask.
        return Ok(mask);
    }
    for e in interior_edges(net) {
        let head = net.edges[e].head;
        let p = beta * (duals[head] - pi_min) / (pi_max - pi_min);
        if rng.gen::<f64>() < p {
            mask.0[e] = false;
        }
    }
    Ok(mask)
}

/// Normalized edge cost for BP: maps c̄_min and everything below the midpoint
/// to 0 and c̄_max to 1.
pub fn bp_normalize(value: f64, min: f64, max: f64) -> f64 {
    if max == min {
        return 0.0;
    }
    (((value - min) - (max - value)) / (max - min)).max(0.0)
}

/// BP: keep the union of the edges of the K shortest loopless source→sink
/// paths under the normalized nonnegative costs.
pub fn bp(net: &PricingNetwork, modified: &[f64], k: usize) -> Result<EdgeMask> {
    check_costs(net, modified)?;
    if k == 0 {
        return Err(Error::InvalidArgument("bp: K must be >= 1".into()));
    }
    let max = modified.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = modified.iter().copied().fold(f64::INFINITY, f64::min);
    let norm: Vec<f64> = modified.iter().map(|&c| bp_normalize(c, min, max)).collect();
    let paths = k_shortest_paths(net, &norm, k);
    let mut mask = EdgeMask::all(net.edges.len());
    let mut keep = vec![false; net.edges.len()];
    for p in &paths {
        for &e in &p.edges {
            keep[e] = true;
        }
    }
    for e in interior_edges(net) {
        mask.0[e] = keep[e];
    }
    Ok(mask)
}

fn check_costs(net: &PricingNetwork, modified: &[f64]) -> Result<()> {
    if modified.len() != net.edges.len() {
        return Err(Error::InvalidArgument("modified cost length mismatch".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplePath {
    pub edges: Vec<usize>,
    pub cost: f64,
}

/// Dijkstra from `start` to the sink with banned nodes and edges. Nodes are
/// settled once, so the returned path is loopless even with zero-cost edges.
fn dijkstra(
    net: &PricingNetwork,
    costs: &[f64],
    start: NodeId,
    banned_nodes: &[bool],
    banned_edges: &[bool],
) -> Option<SimplePath> {
    // total_cmp ordering wrapper for f64 heap keys.
    #[derive(PartialEq)]
    struct Key(f64);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }

    let n = net.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap: BinaryHeap<std::cmp::Reverse<(Key, NodeId)>> = BinaryHeap::new();

    dist[start] = 0.0;
    heap.push(std::cmp::Reverse((Key(0.0), start)));
    while let Some(std::cmp::Reverse((Key(d), node))) = heap.pop() {
        if settled[node] || d > dist[node] {
            continue;
        }
        settled[node] = true;
        if node == net.sink() {
            break;
        }
        for &ei in net.out_edges(node) {
            if banned_edges[ei] {
                continue;
            }
            let head = net.edges[ei].head;
            if banned_nodes[head] || settled[head] {
                continue;
            }
            let nd = d + costs[ei];
            if nd < dist[head] {
                dist[head] = nd;
                via[head] = Some(ei);
                heap.push(std::cmp::Reverse((Key(nd), head)));
            }
        }
    }
    if dist[net.sink()].is_infinite() {
        return None;
    }
    let mut edges = Vec::new();
    let mut node = net.sink();
    while node != start {
        let ei = via[node]?;
        edges.push(ei);
        node = net.edges[ei].tail;
    }
    edges.reverse();
    Some(SimplePath { edges, cost: dist[net.sink()] })
}

/// Yen's algorithm: up to K shortest loopless source→sink paths, ascending by
/// cost with a deterministic edge-list tie-break. Fewer than K paths are
/// returned when the network does not contain K distinct ones.
pub fn k_shortest_paths(net: &PricingNetwork, costs: &[f64], k: usize) -> Vec<SimplePath> {
    let no_nodes = vec![false; net.num_nodes()];
    let no_edges = vec![false; net.edges.len()];
    let first = match dijkstra(net, costs, net.source(), &no_nodes, &no_edges) {
        Some(p) => p,
        None => return Vec::new(),
    };
    let mut found = vec![first];
    let mut candidates: Vec<SimplePath> = Vec::new();

    while found.len() < k {
        let last = found.last().unwrap().clone();
        for spur_idx in 0..last.edges.len() {
            let root = &last.edges[..spur_idx];
            let spur_node = if spur_idx == 0 {
                net.source()
            } else {
                net.edges[last.edges[spur_idx - 1]].head
            };
            let mut banned_edges = no_edges.clone();
            for p in &found {
                if p.edges.len() > spur_idx && p.edges[..spur_idx] == *root {
                    banned_edges[p.edges[spur_idx]] = true;
                }
            }
            let mut banned_nodes = no_nodes.clone();
            banned_nodes[net.source()] = spur_idx != 0;
            for &ei in root {
                banned_nodes[net.edges[ei].tail] = true;
            }
            banned_nodes[spur_node] = false;
            if let Some(spur) = dijkstra(net, costs, spur_node, &banned_nodes, &banned_edges) {
                let mut edges = root.to_vec();
                let root_cost: f64 = root.iter().map(|&e| costs[e]).sum();
                edges.extend_from_slice(&spur.edges);
                let cand = SimplePath { cost: root_cost + spur.cost, edges };
                if !candidates.iter().any(|c| c.edges == cand.edges)
                    && !found.iter().any(|c| c.edges == cand.edges)
                {
                    candidates.push(cand);
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let best = candidates
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.cost.total_cmp(&b.cost).then_with(|| a.edges.cmp(&b.edges)))
            .map(|(i, _)| i)
            .unwrap();
        found.push(candidates.swap_remove(best));
    }
    found
}
