//! Exact pricing by forward labeling with dominance: SPPRC on acyclic BDSP
//! networks, ESPPRC (elementary) on VRPTW networks. A brute-force path
//! enumerator doubles as the correctness oracle for small networks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::net::{NetView, NodeId, PricingNetwork};
use crate::{Error, Result};

pub const DEFAULT_LABEL_BUDGET: usize = 2_000_000;
/// Reduced-cost threshold below which a column counts as improving.
pub const NEGATIVE_EPS: f64 = 1e-6;

const RESOURCE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PricingMode {
    /// Paths may be non-elementary (irrelevant on acyclic networks).
    Spprc,
    /// Elementary paths only; labels carry a visited set.
    Espprc,
}

impl PricingMode {
    pub fn for_network(net: &PricingNetwork) -> Self {
        match net.kind {
            crate::instance::ProblemKind::Vrptw => PricingMode::Espprc,
            crate::instance::ProblemKind::Bdsp => PricingMode::Spprc,
        }
    }
}

/// A feasible source→sink path priced against a dual vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    /// Edge indices into the network's edge list, in path order.
    pub edges: Vec<usize>,
    /// Covered customer/trip nodes, ascending.
    pub covered: Vec<NodeId>,
    /// True cost Σ c_ij.
    pub cost: f64,
    /// Reduced cost Δ_p under the duals it was priced with.
    pub reduced_cost: f64,
}

impl Column {
    pub fn covers(&self, task: NodeId) -> bool {
        self.covered.binary_search(&task).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct PricingResult {
    /// Negative reduced-cost columns, ascending by Δ_p.
    pub columns: Vec<Column>,
    /// True when the label budget was exhausted before the search completed.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct PricingOpts {
    pub mode: PricingMode,
    pub label_budget: usize,
    pub eps: f64,
    pub use_dominance: bool,
}

impl PricingOpts {
    pub fn new(mode: PricingMode) -> Self {
        PricingOpts {
            mode,
            label_budget: DEFAULT_LABEL_BUDGET,
            eps: NEGATIVE_EPS,
            use_dominance: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Bitset(Vec<u64>);

impl Bitset {
    fn new(bits: usize) -> Self {
        Bitset(vec![0; bits.div_ceil(64)])
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn is_subset(&self, other: &Bitset) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
}

/// Partial-path state: node, accumulated modified cost, per-resource values,
/// visited set (ESPPRC), and a parent link for path reconstruction.
#[derive(Debug, Clone)]
pub struct Label {
    pub node: NodeId,
    pub cost: f64,
    pub resources: Vec<f64>,
    visited: Option<Bitset>,
    parent: Option<usize>,
    edge: Option<usize>,
}

/// Classic componentwise dominance: `a` dominates `b` iff it is no worse in
/// cost and every resource (and visits a subset of nodes, for ESPPRC) with at
/// least one strict inequality.
pub fn dominance(a: &Label, b: &Label) -> Result<bool> {
    if a.node != b.node {
        return Err(Error::InvalidArgument(
            "dominance compares labels at the same node".into(),
        ));
    }
    if a.cost > b.cost {
        return Ok(false);
    }
    if a.resources.iter().zip(&b.resources).any(|(x, y)| x > y) {
        return Ok(false);
    }
    match (&a.visited, &b.visited) {
        (Some(va), Some(vb)) if !va.is_subset(vb) => return Ok(false),
        _ => {}
    }
    let strict = a.cost < b.cost
        || a.resources.iter().zip(&b.resources).any(|(x, y)| x < y)
        || matches!((&a.visited, &b.visited), (Some(va), Some(vb)) if va != vb);
    Ok(strict)
}

struct HeapEntry {
    cost: f64,
    node: NodeId,
    label: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Min-heap: best-first by cost, tie-break by (node, creation index).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.node.cmp(&self.node))
            .then(other.label.cmp(&self.label))
    }
}

/// Solve the pricing problem on a (possibly masked) network view.
///
/// Returns every column with Δ_p < −ε found at the sink, ascending by Δ_p.
/// When the label budget is not hit the first element is globally optimal.
pub fn solve_pricing(view: NetView<'_>, modified: &[f64], opts: &PricingOpts) -> Result<PricingResult> {
    let net = view.net;
    if modified.len() != net.edges.len() {
        return Err(Error::InvalidArgument(format!(
            "modified cost vector length {} != edge count {}",
            modified.len(),
            net.edges.len()
        )));
    }
    if opts.label_budget == 0 {
        return Err(Error::InvalidArgument("label budget must be >= 1".into()));
    }
    let num_resources = net.resources.len();
    let source = net.source();
    let sink = net.sink();

    let mut labels: Vec<Label> = Vec::new();
    let mut alive: Vec<bool> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new(); net.num_nodes()];
    let mut heap = BinaryHeap::new();
    let mut truncated = false;

    let root = Label {
        node: source,
        cost: 0.0,
        resources: (0..num_resources)
            .map(|r| net.windows[source][r].0)
            .collect(),
        visited: (opts.mode == PricingMode::Espprc).then(|| Bitset::new(net.num_tasks)),
        parent: None,
        edge: None,
    };
    labels.push(root);
    alive.push(true);
    frontier[source].push(0);
    heap.push(HeapEntry { cost: 0.0, node: source, label: 0 });

    while let Some(entry) = heap.pop() {
        if !alive[entry.label] {
            continue;
        }
        let current = labels[entry.label].clone();
        if current.node == sink {
            continue;
        }
        for ei in view.out_edges(current.node) {
            let edge = &net.edges[ei];
            let head = edge.head;
            if let Some(v) = &current.visited {
                if net.is_task(head) && v.contains(head) {
                    continue;
                }
            }
            let mut resources = Vec::with_capacity(num_resources);
            let mut feasible = true;
            for r in 0..num_resources {
                let reset = edge.resets_continuous && net.continuous_resource == Some(r);
                let base = if reset {
                    edge.consumption[r]
                } else {
                    current.resources[r] + edge.consumption[r]
                };
                let (lo, hi) = net.windows[head][r];
                let val = base.max(lo);
                if val > hi + RESOURCE_EPS {
                    feasible = false;
                    break;
                }
                resources.push(val);
            }
            if !feasible {
                continue;
            }
            let visited = current.visited.as_ref().map(|v| {
                let mut nv = v.clone();
                if net.is_task(head) {
                    nv.insert(head);
                }
                nv
            });
            let candidate = Label {
                node: head,
                cost: current.cost + modified[ei],
                resources,
                visited,
                parent: Some(entry.label),
                edge: Some(ei),
            };
            if opts.use_dominance {
                let mut dominated = false;
                for &li in &frontier[head] {
                    if alive[li] && dominance(&labels[li], &candidate)? {
                        dominated = true;
                        break;
                    }
                }
                if dominated {
                    continue;
                }
                for &li in &frontier[head] {
                    if alive[li] && dominance(&candidate, &labels[li])? {
                        alive[li] = false;
                    }
                }
                frontier[head].retain(|&li| alive[li]);
            }
            if labels.len() >= opts.label_budget {
                truncated = true;
                break;
            }
            let idx = labels.len();
            heap.push(HeapEntry { cost: candidate.cost, node: head, label: idx });
            labels.push(candidate);
            alive.push(true);
            frontier[head].push(idx);
        }
        if truncated {
            break;
        }
    }

    let mut columns: Vec<Column> = frontier[sink]
        .iter()
        .filter(|&&li| alive[li])
        .map(|&li| reconstruct(net, &labels, li, modified))
        .filter(|c| c.reduced_cost < -opts.eps)
        .collect();
    sort_columns(&mut columns);
    Ok(PricingResult { columns, truncated })
}

fn reconstruct(net: &PricingNetwork, labels: &[Label], mut li: usize, modified: &[f64]) -> Column {
    let mut edges = Vec::new();
    while let Some(ei) = labels[li].edge {
        edges.push(ei);
        li = labels[li].parent.expect("non-root label has a parent");
    }
    edges.reverse();
    column_from_edges(net, &edges, modified)
}

fn column_from_edges(net: &PricingNetwork, edges: &[usize], modified: &[f64]) -> Column {
    let mut covered: Vec<NodeId> = edges
        .iter()
        .map(|&e| net.edges[e].head)
        .filter(|&h| net.is_task(h))
        .collect();
    covered.sort_unstable();
    Column {
        edges: edges.to_vec(),
        covered,
        cost: edges.iter().map(|&e| net.edges[e].cost).sum(),
        reduced_cost: edges.iter().map(|&e| modified[e]).sum(),
    }
}

fn sort_columns(columns: &mut [Column]) {
    columns.sort_by(|a, b| {
        a.reduced_cost
            .total_cmp(&b.reduced_cost)
            .then_with(|| a.edges.cmp(&b.edges))
    });
}

/// Enumerate every resource-feasible (and elementary, in ESPPRC mode)
/// source→sink path. Guarded to |V| ≤ 14; test oracle only.
pub fn enumerate_all_columns(
    view: NetView<'_>,
    modified: &[f64],
    mode: PricingMode,
) -> Result<Vec<Column>> {
    let net = view.net;
    if net.num_nodes() > 14 {
        return Err(Error::InvalidArgument(format!(
            "enumeration refused: |V| = {} > 14",
            net.num_nodes()
        )));
    }
    if modified.len() != net.edges.len() {
        return Err(Error::InvalidArgument("modified cost length mismatch".into()));
    }
    let num_resources = net.resources.len();
    let mut out = Vec::new();
    let mut path = Vec::new();
    let start: Vec<f64> = (0..num_resources)
        .map(|r| net.windows[net.source()][r].0)
        .collect();
    let mut visited = vec![false; net.num_tasks];

    fn dfs(
        net: &PricingNetwork,
        view: &NetView<'_>,
        modified: &[f64],
        mode: PricingMode,
        node: NodeId,
        resources: &[f64],
        visited: &mut Vec<bool>,
        path: &mut Vec<usize>,
        out: &mut Vec<Column>,
    ) {
        if node == net.sink() {
            out.push(column_from_edges(net, path, modified));
            return;
        }
        for ei in view.out_edges(node).collect::<Vec<_>>() {
            let edge = &net.edges[ei];
            let head = edge.head;
            if mode == PricingMode::Espprc && net.is_task(head) && visited[head] {
                continue;
            }
            let mut next = Vec::with_capacity(resources.len());
            let mut ok = true;
            for r in 0..resources.len() {
                let reset = edge.resets_continuous && net.continuous_resource == Some(r);
                let base = if reset {
                    edge.consumption[r]
                } else {
                    resources[r] + edge.consumption[r]
                };
                let (lo, hi) = net.windows[head][r];
                let val = base.max(lo);
                if val > hi + RESOURCE_EPS {
                    ok = false;
                    break;
                }
                next.push(val);
            }
            if !ok {
                continue;
            }
            if net.is_task(head) {
                visited[head] = true;
            }
            path.push(ei);
            dfs(net, view, modified, mode, head, &next, visited, path, out);
            path.pop();
            if net.is_task(head) {
                visited[head] = false;
            }
        }
    }

    dfs(
        net,
        &view,
        modified,
        mode,
        net.source(),
        &start,
        &mut visited,
        &mut path,
        &mut out,
    );
    sort_columns(&mut out);
    Ok(out)
}
