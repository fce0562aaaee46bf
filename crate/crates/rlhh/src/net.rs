//! Pricing networks for both problems: nodes are customers (VRPTW) or trips
//! (BDSP) plus a source and a sink, edges carry an original cost and one
//! consumption per resource. Reduced networks are views through an edge mask.

use crate::instance::{BdspInstance, ProblemKind, VrptwInstance};
use crate::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub tail: NodeId,
    pub head: NodeId,
    pub cost: f64,
    /// One consumption per resource, aligned with `PricingNetwork::resources`.
    pub consumption: Vec<f64>,
    /// BDSP only: the inter-trip gap is long enough to reset continuous
    /// driving, so the continuous resource restarts at this edge's consumption.
    pub resets_continuous: bool,
}

#[derive(Debug, Clone)]
pub struct PricingNetwork {
    pub kind: ProblemKind,
    /// Number of customer/trip nodes; ids 0..num_tasks. Source is
    /// `num_tasks`, sink is `num_tasks + 1`.
    pub num_tasks: usize,
    /// Adjacency-list order: sorted by (tail, head).
    pub edges: Vec<Edge>,
    pub resources: Vec<String>,
    /// Resource windows `[lo, hi]` per node (num_tasks + 2 rows), per resource.
    pub windows: Vec<Vec<(f64, f64)>>,
    /// Index into `resources` of the continuous-driving resource, if any.
    pub continuous_resource: Option<usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl PricingNetwork {
    pub fn source(&self) -> NodeId {
        self.num_tasks
    }

    pub fn sink(&self) -> NodeId {
        self.num_tasks + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.num_tasks + 2
    }

    pub fn is_task(&self, node: NodeId) -> bool {
        node < self.num_tasks
    }

    /// An edge between two customer/trip nodes (not source- or sink-adjacent).
    pub fn is_interior(&self, edge: usize) -> bool {
        let e = &self.edges[edge];
        self.is_task(e.tail) && self.is_task(e.head)
    }

    pub fn out_edges(&self, node: NodeId) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn in_edges(&self, node: NodeId) -> &[usize] {
        &self.in_edges[node]
    }

    fn from_edges(
        kind: ProblemKind,
        num_tasks: usize,
        mut edges: Vec<Edge>,
        resources: Vec<String>,
        windows: Vec<Vec<(f64, f64)>>,
        continuous_resource: Option<usize>,
    ) -> Self {
        edges.sort_by_key(|e| (e.tail, e.head));
        let mut out_edges = vec![Vec::new(); num_tasks + 2];
        let mut in_edges = vec![Vec::new(); num_tasks + 2];
        for (i, e) in edges.iter().enumerate() {
            debug_assert_ne!(e.tail, e.head, "self-loop");
            out_edges[e.tail].push(i);
            in_edges[e.head].push(i);
        }
        PricingNetwork {
            kind,
            num_tasks,
            edges,
            resources,
            windows,
            continuous_resource,
            out_edges,
            in_edges,
        }
    }

    /// Dual-adjusted edge costs: c̄_ij = c_ij − π_j for edges whose head is a
    /// customer/trip node, unchanged for sink edges.
    pub fn modified_costs(&self, duals: &[f64]) -> Result<Vec<f64>> {
        if duals.len() != self.num_tasks {
            return Err(Error::InvalidArgument(format!(
                "dual vector length {} != task count {}",
                duals.len(),
                self.num_tasks
            )));
        }
        Ok(self
            .edges
            .iter()
            .map(|e| {
                if self.is_task(e.head) {
                    e.cost - duals[e.head]
                } else {
                    e.cost
                }
            })
            .collect())
    }

    pub fn full_view(&self) -> NetView<'_> {
        NetView { net: self, mask: None }
    }

    pub fn masked_view<'a>(&'a self, mask: &'a EdgeMask) -> Result<NetView<'a>> {
        if mask.len() != self.edges.len() {
            return Err(Error::InvalidArgument(format!(
                "mask length {} != edge count {}",
                mask.len(),
                self.edges.len()
            )));
        }
        Ok(NetView {
            net: self,
            mask: Some(mask),
        })
    }
}

/// Per-edge keep flags over a network's edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMask(pub Vec<bool>);

impl EdgeMask {
    pub fn all(n: usize) -> Self {
        EdgeMask(vec![true; n])
    }

    pub fn none(n: usize) -> Self {
        EdgeMask(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn kept(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

/// Read-only view of a network restricted to kept edges.
#[derive(Clone, Copy)]
pub struct NetView<'a> {
    pub net: &'a PricingNetwork,
    mask: Option<&'a EdgeMask>,
}

impl<'a> NetView<'a> {
    pub fn keeps(&self, edge: usize) -> bool {
        self.mask.map_or(true, |m| m.0[edge])
    }

    pub fn out_edges(&self, node: NodeId) -> impl Iterator<Item = usize> + '_ {
        self.net
            .out_edges(node)
            .iter()
            .copied()
            .filter(move |&e| self.keeps(e))
    }

    pub fn edge_count(&self) -> usize {
        match self.mask {
            Some(m) => m.kept(),
            None => self.net.edges.len(),
        }
    }
}

pub fn euclidean(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// VRPTW edge criterion: customer j is reachable after customer i if
/// w̄_j − w̲_i ≥ T_i + t_ij.
pub fn vrptw_edge_allowed(inst: &VrptwInstance, i: usize, j: usize) -> bool {
    let ci = &inst.customers[i];
    let cj = &inst.customers[j];
    let t_ij = euclidean((ci.x, ci.y), (cj.x, cj.y));
    cj.due - ci.ready >= ci.service + t_ij
}

pub fn build_vrptw_network(inst: &VrptwInstance) -> PricingNetwork {
    let n = inst.customers.len();
    let source = n;
    let sink = n + 1;
    let depot = (inst.depot.x, inst.depot.y);
    let mut edges = Vec::new();

    for (j, cj) in inst.customers.iter().enumerate() {
        let d = euclidean(depot, (cj.x, cj.y));
        edges.push(Edge {
            tail: source,
            head: j,
            cost: d + inst.vehicle_fixed_cost,
            consumption: vec![d, cj.demand],
            resets_continuous: false,
        });
        edges.push(Edge {
            tail: j,
            head: sink,
            cost: d,
            consumption: vec![cj.service + d, 0.0],
            resets_continuous: false,
        });
    }
    for (i, ci) in inst.customers.iter().enumerate() {
        for (j, cj) in inst.customers.iter().enumerate() {
            if i == j || !vrptw_edge_allowed(inst, i, j) {
                continue;
            }
            let d = euclidean((ci.x, ci.y), (cj.x, cj.y));
            edges.push(Edge {
                tail: i,
                head: j,
                cost: d,
                consumption: vec![ci.service + d, cj.demand],
                resets_continuous: false,
            });
        }
    }

    let mut windows = Vec::with_capacity(n + 2);
    for c in &inst.customers {
        windows.push(vec![(c.ready, c.due), (0.0, inst.capacity)]);
    }
    // source, then sink
    windows.push(vec![(inst.depot.ready, inst.depot.ready), (0.0, 0.0)]);
    windows.push(vec![(inst.depot.ready, inst.depot.due), (0.0, inst.capacity)]);

    PricingNetwork::from_edges(
        ProblemKind::Vrptw,
        n,
        edges,
        vec!["time".into(), "load".into()],
        windows,
        None,
    )
}

pub fn build_bdsp_network(inst: &BdspInstance) -> PricingNetwork {
    let n = inst.trips.len();
    let source = n;
    let sink = n + 1;
    let mut edges = Vec::new();

    for (j, tj) in inst.trips.iter().enumerate() {
        let dur = tj.duration();
        edges.push(Edge {
            tail: source,
            head: j,
            cost: inst.driver_fixed_cost + dur,
            consumption: vec![dur, dur, dur],
            resets_continuous: false,
        });
        edges.push(Edge {
            tail: j,
            head: sink,
            cost: 0.0,
            consumption: vec![0.0, 0.0, 0.0],
            resets_continuous: false,
        });
    }
    for (i, ti) in inst.trips.iter().enumerate() {
        for (j, tj) in inst.trips.iter().enumerate() {
            if i == j {
                continue;
            }
            let gap = tj.start - ti.end;
            if gap < inst.min_changeover {
                continue;
            }
            let dur = tj.duration();
            edges.push(Edge {
                tail: i,
                head: j,
                cost: tj.end - ti.end,
                consumption: vec![tj.end - ti.end, dur, dur],
                resets_continuous: gap >= inst.break_threshold,
            });
        }
    }

    let task_windows = vec![
        (0.0, inst.max_working),
        (0.0, inst.max_driving),
        (0.0, inst.max_continuous_driving),
    ];
    let mut windows = vec![task_windows.clone(); n];
    windows.push(vec![(0.0, 0.0); 3]); // source
    windows.push(task_windows); // sink

    PricingNetwork::from_edges(
        ProblemKind::Bdsp,
        n,
        edges,
        vec!["working".into(), "driving".into(), "continuous".into()],
        windows,
        Some(2),
    )
}

/// Topological order of the nodes, or an error if the network has a cycle.
pub fn topological_sort(net: &PricingNetwork) -> Result<Vec<NodeId>> {
    let n = net.num_nodes();
    let mut indeg = vec![0usize; n];
    for e in &net.edges {
        indeg[e.head] += 1;
    }
    let mut queue: Vec<NodeId> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop() {
        order.push(v);
        for &ei in net.out_edges(v) {
            let h = net.edges[ei].head;
            indeg[h] -= 1;
            if indeg[h] == 0 {
                queue.push(h);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(Error::InvalidArgument("network contains a cycle".into()))
    }
}
