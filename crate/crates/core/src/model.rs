//! Problem representation: topology, commodities, candidate paths, and the
//! flattened incidence indexes every kernel iterates over.
//!
//! Three dense index spaces are assigned at build time:
//! * paths `r` in `0..num_paths()`, grouped contiguously by commodity;
//! * consensus pairs `(e, r)` in `0..num_pairs()`, grouped contiguously by
//!   path in path-edge order;
//! * edges `e` in topology order.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TeError};
use crate::reduce::{gather_sum, pairwise_sum_by};

/// Absolute tolerance used when deciding whether a constraint is violated.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    /// Mbps, finite and non-negative.
    pub capacity: f64,
    /// Routing weight, strictly positive.
    pub weight: f64,
}

/// Directed, capacitated graph with named nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl Topology {
    pub fn new(nodes: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.clone(), i).is_some() {
                return Err(TeError::InvalidTopology(format!("duplicate node {n}")));
            }
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if e.src >= nodes.len() || e.dst >= nodes.len() {
                return Err(TeError::InvalidTopology(format!(
                    "edge {i} references a node outside 0..{}",
                    nodes.len()
                )));
            }
            if e.src == e.dst {
                return Err(TeError::InvalidTopology(format!(
                    "edge {i} is a self loop on {}",
                    nodes[e.src]
                )));
            }
            if !e.capacity.is_finite() || e.capacity < 0.0 {
                return Err(TeError::InvalidTopology(format!(
                    "edge {i} has invalid capacity {}",
                    e.capacity
                )));
            }
            if !e.weight.is_finite() || e.weight <= 0.0 {
                return Err(TeError::InvalidTopology(format!(
                    "edge {i} has non-positive weight {}",
                    e.weight
                )));
            }
            if edge_index.insert((e.src, e.dst), i).is_some() {
                return Err(TeError::DuplicateEdge {
                    src: nodes[e.src].clone(),
                    dst: nodes[e.dst].clone(),
                });
            }
        }
        Ok(Topology {
            nodes,
            edges,
            node_index,
            edge_index,
        })
    }

    /// Builds a topology from `(src, dst, capacity, weight)` rows, creating
    /// nodes in order of first appearance.
    pub fn from_named_edges<S: AsRef<str>>(rows: &[(S, S, f64, f64)]) -> Result<Self> {
        let mut nodes: Vec<String> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut intern = |name: &str| -> usize {
            if let Some(&i) = seen.get(name) {
                return i;
            }
            nodes.push(name.to_string());
            seen.insert(name.to_string(), nodes.len() - 1);
            nodes.len() - 1
        };
        let mut edges = Vec::with_capacity(rows.len());
        for (s, d, c, w) in rows {
            let src = intern(s.as_ref());
            let dst = intern(d.as_ref());
            edges.push(Edge {
                src,
                dst,
                capacity: *c,
                weight: *w,
            });
        }
        Topology::new(nodes, edges)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.node_index.get(name).copied()
    }

    pub fn node_name(&self, id: usize) -> &str {
        &self.nodes[id]
    }

    pub fn edge_id(&self, src: usize, dst: usize) -> Option<usize> {
        self.edge_index.get(&(src, dst)).copied()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.capacity).collect()
    }

    /// Same graph with every capacity replaced.
    pub fn with_capacities(&self, capacities: &[f64]) -> Result<Self> {
        if capacities.len() != self.edges.len() {
            return Err(TeError::LengthMismatch {
                what: "capacities",
                expected: self.edges.len(),
                got: capacities.len(),
            });
        }
        let edges = self
            .edges
            .iter()
            .zip(capacities)
            .map(|(e, &c)| Edge {
                capacity: c,
                ..e.clone()
            })
            .collect();
        Topology::new(self.nodes.clone(), edges)
    }
}

/// Source/destination pair identifying a commodity independently of any
/// particular instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CommodityKey {
    pub src: usize,
    pub dst: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Commodity {
    pub src: usize,
    pub dst: usize,
    /// Requested rate in Mbps.
    pub demand: f64,
}

impl Commodity {
    pub fn new(src: usize, dst: usize, demand: f64) -> Self {
        Commodity { src, dst, demand }
    }

    pub fn key(&self) -> CommodityKey {
        CommodityKey {
            src: self.src,
            dst: self.dst,
        }
    }
}

/// A path is the ordered list of edge ids it traverses.
pub type Path = Vec<usize>;

/// Candidate paths per commodity, aligned with the commodity list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub paths: Vec<Vec<Path>>,
}

impl PathSet {
    pub fn new(paths: Vec<Vec<Path>>) -> Self {
        PathSet { paths }
    }
}

/// Immutable, validated problem with precomputed incidence maps.
#[derive(Debug, Clone)]
pub struct Instance {
    topology: Topology,
    commodities: Vec<Commodity>,
    /// Index of each retained commodity in the commodity list passed to
    /// [`build_instance`].
    source_commodity: Vec<usize>,
    commodity_path_offsets: Vec<usize>,
    path_commodity: Vec<usize>,
    path_pair_offsets: Vec<usize>,
    pair_edge: Vec<usize>,
    pair_path: Vec<usize>,
    edge_pair_offsets: Vec<usize>,
    edge_pairs: Vec<usize>,
    capacities: Vec<f64>,
    demands: Vec<f64>,
}

/// Validates inputs and assembles an [`Instance`].
///
/// Commodities with zero demand or without any path are dropped; everything
/// else keeps its input order.
pub fn build_instance(
    topology: Topology,
    commodities: Vec<Commodity>,
    pathset: PathSet,
) -> Result<Instance> {
    if pathset.paths.len() != commodities.len() {
        return Err(TeError::PathSetMismatch {
            expected: commodities.len(),
            got: pathset.paths.len(),
        });
    }
    let n_nodes = topology.num_nodes();
    let n_edges = topology.num_edges();
    let mut seen_keys = HashSet::new();
    for (i, c) in commodities.iter().enumerate() {
        let bad = |reason: &str| TeError::InvalidCommodity {
            index: i,
            reason: reason.to_string(),
        };
        if c.src >= n_nodes || c.dst >= n_nodes {
            return Err(bad("unknown node"));
        }
        if c.src == c.dst {
            return Err(bad("source equals destination"));
        }
        if !c.demand.is_finite() || c.demand < 0.0 {
            return Err(bad("demand must be finite and non-negative"));
        }
        if !seen_keys.insert(c.key()) {
            return Err(bad("duplicate source/destination pair"));
        }
    }

    let mut kept = Vec::new();
    let mut source_commodity = Vec::new();
    let mut commodity_path_offsets = vec![0];
    let mut path_commodity = Vec::new();
    let mut path_pair_offsets = vec![0];
    let mut pair_edge = Vec::new();
    let mut pair_path = Vec::new();

    for (ci, (commodity, paths)) in commodities.into_iter().zip(pathset.paths).enumerate() {
        for (pi, path) in paths.iter().enumerate() {
            check_path(&topology, &commodity, path, ci, pi)?;
        }
        if commodity.demand == 0.0 || paths.is_empty() {
            continue;
        }
        let k = kept.len();
        for path in paths {
            let r = path_commodity.len();
            path_commodity.push(k);
            for e in path {
                pair_edge.push(e);
                pair_path.push(r);
            }
            path_pair_offsets.push(pair_edge.len());
        }
        commodity_path_offsets.push(path_commodity.len());
        source_commodity.push(ci);
        kept.push(commodity);
    }

    let mut counts = vec![0usize; n_edges];
    for &e in &pair_edge {
        counts[e] += 1;
    }
    let mut edge_pair_offsets = Vec::with_capacity(n_edges + 1);
    edge_pair_offsets.push(0);
    for c in &counts {
        edge_pair_offsets.push(edge_pair_offsets.last().unwrap() + c);
    }
    let mut cursor = edge_pair_offsets.clone();
    let mut edge_pairs = vec![0usize; pair_edge.len()];
    for (p, &e) in pair_edge.iter().enumerate() {
        edge_pairs[cursor[e]] = p;
        cursor[e] += 1;
    }

    let capacities = topology.capacities();
    let demands = kept.iter().map(|c| c.demand).collect();
    Ok(Instance {
        topology,
        commodities: kept,
        source_commodity,
        commodity_path_offsets,
        path_commodity,
        path_pair_offsets,
        pair_edge,
        pair_path,
        edge_pair_offsets,
        edge_pairs,
        capacities,
        demands,
    })
}

fn check_path(topology: &Topology, c: &Commodity, path: &Path, ci: usize, pi: usize) -> Result<()> {
    let bad = |reason: String| TeError::InvalidPath {
        commodity: ci,
        path: pi,
        reason,
    };
    if path.is_empty() {
        return Err(bad("empty path".into()));
    }
    let edges = topology.edges();
    for &e in path {
        if e >= edges.len() {
            return Err(TeError::UnknownEdge {
                commodity: ci,
                path: pi,
                edge: e,
            });
        }
    }
    if edges[path[0]].src != c.src {
        return Err(bad(format!(
            "starts at {} instead of {}",
            topology.node_name(edges[path[0]].src),
            topology.node_name(c.src)
        )));
    }
    let last = edges[*path.last().unwrap()].dst;
    if last != c.dst {
        return Err(bad(format!(
            "ends at {} instead of {}",
            topology.node_name(last),
            topology.node_name(c.dst)
        )));
    }
    let mut visited = HashSet::new();
    visited.insert(c.src);
    for w in path.windows(2) {
        if edges[w[0]].dst != edges[w[1]].src {
            return Err(bad(format!("edges {} and {} are not adjacent", w[0], w[1])));
        }
    }
    for &e in path {
        if !visited.insert(edges[e].dst) {
            return Err(bad(format!(
                "revisits node {}",
                topology.node_name(edges[e].dst)
            )));
        }
    }
    Ok(())
}

impl Instance {
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    pub fn num_paths(&self) -> usize {
        self.path_commodity.len()
    }

    pub fn num_edges(&self) -> usize {
        self.capacities.len()
    }

    /// Number of `(edge, path)` consensus pairs, `Σ_r n_r`.
    pub fn num_pairs(&self) -> usize {
        self.pair_edge.len()
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn commodity_keys(&self) -> Vec<CommodityKey> {
        self.commodities.iter().map(Commodity::key).collect()
    }

    /// Position of a retained commodity in the original input list.
    pub fn source_commodity(&self, c: usize) -> usize {
        self.source_commodity[c]
    }

    /// Path ids of commodity `c` (a contiguous range).
    pub fn commodity_paths(&self, c: usize) -> std::ops::Range<usize> {
        self.commodity_path_offsets[c]..self.commodity_path_offsets[c + 1]
    }

    pub fn path_commodity(&self, r: usize) -> usize {
        self.path_commodity[r]
    }

    /// Pair ids of path `r`, in path order (a contiguous range).
    pub fn path_pairs(&self, r: usize) -> std::ops::Range<usize> {
        self.path_pair_offsets[r]..self.path_pair_offsets[r + 1]
    }

    /// Edge ids traversed by path `r`.
    pub fn path_edges(&self, r: usize) -> &[usize] {
        &self.pair_edge[self.path_pairs(r)]
    }

    /// Hop count `n_r`.
    pub fn path_len(&self, r: usize) -> usize {
        self.path_pair_offsets[r + 1] - self.path_pair_offsets[r]
    }

    pub fn pair_edge(&self, p: usize) -> usize {
        self.pair_edge[p]
    }

    pub fn pair_path(&self, p: usize) -> usize {
        self.pair_path[p]
    }

    /// Pair ids on edge `e`, in ascending order.
    pub fn edge_pairs(&self, e: usize) -> &[usize] {
        &self.edge_pairs[self.edge_pair_offsets[e]..self.edge_pair_offsets[e + 1]]
    }

    /// Number of paths traversing edge `e`, `n_e`.
    pub fn edge_load_count(&self, e: usize) -> usize {
        self.edge_pair_offsets[e + 1] - self.edge_pair_offsets[e]
    }

    /// Paths traversing edge `e`, ascending.
    pub fn edge_paths(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        self.edge_pairs(e).iter().map(move |&p| self.pair_path[p])
    }

    /// Total rate of commodity `c` under per-path rates `x`.
    pub fn commodity_sum(&self, x: &[f64], c: usize) -> f64 {
        let range = self.commodity_paths(c);
        pairwise_sum_by(range.len(), |i| x[range.start + i])
    }

    pub fn commodity_sums(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_commodities())
            .map(|c| self.commodity_sum(x, c))
            .collect()
    }

    /// Load on edge `e` when each path carries `x[r]`.
    pub fn edge_load(&self, x: &[f64], e: usize) -> f64 {
        let pairs = self.edge_pairs(e);
        pairwise_sum_by(pairs.len(), |i| x[self.pair_path[pairs[i]]])
    }

    pub fn edge_loads(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_edges()).map(|e| self.edge_load(x, e)).collect()
    }

    /// Load on edge `e` from per-pair values (e.g. rate suggestions).
    pub fn edge_pair_sum(&self, per_pair: &[f64], e: usize) -> f64 {
        gather_sum(per_pair, self.edge_pairs(e))
    }

    /// Copy of this instance with capacities and demands divided by `factor`.
    pub fn scaled(&self, factor: f64) -> Instance {
        let mut out = self.clone();
        for c in &mut out.capacities {
            *c /= factor;
        }
        for d in &mut out.demands {
            *d /= factor;
        }
        out
    }

    /// Same paths and commodities with new capacities and demands. Unlike
    /// [`build_instance`], commodities whose demand drops to zero are kept so
    /// that every index space stays aligned with `self`.
    pub fn with_values(&self, capacities: &[f64], demands: &[f64]) -> Result<Instance> {
        if capacities.len() != self.num_edges() {
            return Err(TeError::LengthMismatch {
                what: "capacities",
                expected: self.num_edges(),
                got: capacities.len(),
            });
        }
        if demands.len() != self.num_commodities() {
            return Err(TeError::LengthMismatch {
                what: "demands",
                expected: self.num_commodities(),
                got: demands.len(),
            });
        }
        for (i, v) in capacities.iter().chain(demands).enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(TeError::NonFinite {
                    what: "capacities/demands",
                    index: i,
                });
            }
        }
        let mut out = self.clone();
        out.topology = self.topology.with_capacities(capacities)?;
        out.capacities = capacities.to_vec();
        out.demands = demands.to_vec();
        for (c, &d) in out.commodities.iter_mut().zip(demands) {
            c.demand = d;
        }
        Ok(out)
    }
}

/// Constraint residuals of a rate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// `max(load_e - C_e, 0)` per edge.
    pub edge_overload: Vec<f64>,
    /// `max(S_c - D_c, 0)` per commodity.
    pub commodity_excess: Vec<f64>,
    pub negative_count: usize,
    /// Magnitude of the most negative rate, 0 when none.
    pub max_negative: f64,
    /// Share of all constraints (capacity, demand, sign) violated, in percent.
    pub pct_constraints_violated: f64,
    pub pct_edges_violated: f64,
    pub pct_commodities_violated: f64,
    /// Mean of violation / bound over violated capacity and demand
    /// constraints.
    pub mean_relative_violation: f64,
}

impl ViolationReport {
    pub fn violated_edges(&self) -> usize {
        self.edge_overload
            .iter()
            .filter(|&&v| v > FEASIBILITY_TOL)
            .count()
    }

    pub fn violated_commodities(&self) -> usize {
        self.commodity_excess
            .iter()
            .filter(|&&v| v > FEASIBILITY_TOL)
            .count()
    }

    /// No constraint is violated beyond [`FEASIBILITY_TOL`].
    pub fn is_feasible(&self) -> bool {
        self.violated_edges() == 0 && self.violated_commodities() == 0 && self.negative_count == 0
    }

    pub fn max_edge_overload(&self) -> f64 {
        self.edge_overload.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_commodity_excess(&self) -> f64 {
        self.commodity_excess.iter().copied().fold(0.0, f64::max)
    }
}

pub fn validate_allocation(instance: &Instance, x: &[f64]) -> Result<ViolationReport> {
    if x.len() != instance.num_paths() {
        return Err(TeError::LengthMismatch {
            what: "rates",
            expected: instance.num_paths(),
            got: x.len(),
        });
    }
    let mut relative = Vec::new();
    let edge_overload: Vec<f64> = (0..instance.num_edges())
        .map(|e| {
            let over = (instance.edge_load(x, e) - instance.capacities[e]).max(0.0);
            if over > FEASIBILITY_TOL {
                relative.push(over / instance.capacities[e].max(FEASIBILITY_TOL));
            }
            over
        })
        .collect();
    let commodity_excess: Vec<f64> = (0..instance.num_commodities())
        .map(|c| {
            let over = (instance.commodity_sum(x, c) - instance.demands[c]).max(0.0);
            if over > FEASIBILITY_TOL {
                relative.push(over / instance.demands[c].max(FEASIBILITY_TOL));
            }
            over
        })
        .collect();
    let negative_count = x.iter().filter(|&&v| v < -FEASIBILITY_TOL).count();
    let max_negative = x.iter().copied().fold(0.0f64, |m, v| m.max(-v));

    let pct = |n: usize, d: usize| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
    let violated_edges = edge_overload.iter().filter(|&&v| v > FEASIBILITY_TOL).count();
    let violated_commodities = commodity_excess
        .iter()
        .filter(|&&v| v > FEASIBILITY_TOL)
        .count();
    let total = edge_overload.len() + commodity_excess.len() + x.len();
    Ok(ViolationReport {
        pct_constraints_violated: pct(violated_edges + violated_commodities + negative_count, total),
        pct_edges_violated: pct(violated_edges, edge_overload.len()),
        pct_commodities_violated: pct(violated_commodities, commodity_excess.len()),
        mean_relative_violation: if relative.is_empty() {
            0.0
        } else {
            relative.iter().sum::<f64>() / relative.len() as f64
        },
        edge_overload,
        commodity_excess,
        negative_count,
        max_negative,
    })
}

/// Small hand-checkable instances.
pub mod fixtures {
    use super::*;

    /// A→B single edge with capacity `cap`, one commodity of `demand`.
    pub fn single_edge(cap: f64, demand: f64) -> Instance {
        let topo = Topology::from_named_edges(&[("A", "B", cap, 1.0)]).unwrap();
        build_instance(
            topo,
            vec![Commodity::new(0, 1, demand)],
            PathSet::new(vec![vec![vec![0]]]),
        )
        .unwrap()
    }

    /// A→{C,D}→B with two disjoint two-hop paths for a single A→B commodity.
    pub fn diamond(caps: [f64; 4], demand: f64) -> Instance {
        let topo = Topology::from_named_edges(&[
            ("A", "C", caps[0], 1.0),
            ("C", "B", caps[1], 1.0),
            ("A", "D", caps[2], 1.0),
            ("D", "B", caps[3], 1.0),
        ])
        .unwrap();
        let a = topo.node_id("A").unwrap();
        let b = topo.node_id("B").unwrap();
        build_instance(
            topo,
            vec![Commodity::new(a, b, demand)],
            PathSet::new(vec![vec![vec![0, 1], vec![2, 3]]]),
        )
        .unwrap()
    }

    /// `n` single-path commodities S_i→T sharing the edge X→T of capacity
    /// `cap`; each commodity also owns a private access edge S_i→X.
    pub fn shared_edge(n: usize, cap: f64, demands: &[f64]) -> Instance {
        let mut rows: Vec<(String, String, f64, f64)> = vec![("X".into(), "T".into(), cap, 1.0)];
        for i in 0..n {
            rows.push((format!("S{i}"), "X".into(), 1e9, 1.0));
        }
        let topo = Topology::from_named_edges(&rows).unwrap();
        let t = topo.node_id("T").unwrap();
        let commodities = (0..n)
            .map(|i| Commodity::new(topo.node_id(&format!("S{i}")).unwrap(), t, demands[i]))
            .collect();
        let paths = (0..n).map(|i| vec![vec![i + 1, 0]]).collect();
        build_instance(topo, commodities, PathSet::new(paths)).unwrap()
    }

    /// A→B (10), B→C (5); commodities A→B, A→C, B→C with single shortest
    /// paths.
    pub fn chain(demand: f64) -> Instance {
        let topo = Topology::from_named_edges(&[("A", "B", 10.0, 1.0), ("B", "C", 5.0, 1.0)]).unwrap();
        build_instance(
            topo,
            vec![
                Commodity::new(0, 1, demand),
                Commodity::new(0, 2, demand),
                Commodity::new(1, 2, demand),
            ],
            PathSet::new(vec![vec![vec![0]], vec![vec![0, 1]], vec![vec![1]]]),
        )
        .unwrap()
    }
}
