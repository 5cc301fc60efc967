//! Synthetic topologies, gravity-model demands and k-shortest paths.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use te_core::model::{Commodity, Edge, Path, PathSet, Topology};
use te_core::TeError;

/// Random connected topology with bidirectional links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomTopology {
    pub nodes: usize,
    /// Links added on top of a random spanning tree, per node.
    pub extra_links_per_node: f64,
    /// Each link draws its capacity uniformly from this list.
    pub capacities: Vec<f64>,
    pub seed: u64,
}

impl Default for RandomTopology {
    fn default() -> Self {
        RandomTopology {
            nodes: 10,
            extra_links_per_node: 0.5,
            capacities: vec![10.0, 25.0, 50.0, 100.0],
            seed: 0,
        }
    }
}

impl RandomTopology {
    pub fn generate(&self) -> Result<Topology, TeError> {
        if self.nodes < 2 {
            return Err(TeError::InvalidTopology("need at least 2 nodes".into()));
        }
        if self.capacities.is_empty() {
            return Err(TeError::InvalidTopology("empty capacity list".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.nodes;
        let mut links: Vec<(usize, usize)> = Vec::new();
        let mut linked = vec![vec![false; n]; n];
        for i in 1..n {
            let j = rng.gen_range(0..i);
            links.push((j, i));
            linked[i][j] = true;
            linked[j][i] = true;
        }
        let extra = (self.extra_links_per_node * n as f64).round() as usize;
        let max_links = n * (n - 1) / 2;
        let mut attempts = 0;
        while links.len() < (n - 1 + extra).min(max_links) && attempts < 100 * (extra + 1) {
            attempts += 1;
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b && !linked[a][b] {
                linked[a][b] = true;
                linked[b][a] = true;
                links.push((a.min(b), a.max(b)));
            }
        }
        let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let mut edges = Vec::with_capacity(2 * links.len());
        for (a, b) in links {
            let capacity = *self.capacities.choose(&mut rng).expect("non-empty");
            for (src, dst) in [(a, b), (b, a)] {
                edges.push(Edge {
                    src,
                    dst,
                    capacity,
                    weight: 1.0,
                });
            }
        }
        Topology::new(nodes, edges)
    }
}

/// Gravity model: `D_st = V · w_s w_t / Σ_{u≠v} w_u w_v`, node weight =
/// total capacity of incident edges (both directions). Emits every ordered
/// pair in row-major order, including zero demands.
pub fn gravity_demands(topology: &Topology, total_volume: f64) -> Result<Vec<Commodity>, TeError> {
    let n = topology.num_nodes();
    if n < 2 {
        return Err(TeError::InvalidTopology("gravity model needs at least 2 nodes".into()));
    }
    if !(total_volume > 0.0 && total_volume.is_finite()) {
        return Err(TeError::InvalidConfig("total_volume must be positive".into()));
    }
    let mut weight = vec![0.0; n];
    for e in topology.edges() {
        weight[e.src] += e.capacity;
        weight[e.dst] += e.capacity;
    }
    let total: f64 = weight.iter().sum();
    let self_pairs: f64 = weight.iter().map(|w| w * w).sum();
    let norm = total * total - self_pairs;
    let mut out = Vec::with_capacity(n * (n - 1));
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let d = if norm > 0.0 {
                total_volume * weight[s] * weight[t] / norm
            } else {
                0.0
            };
            out.push(Commodity::new(s, t, d));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    weight: f64,
    edges: Path,
}

impl Candidate {
    fn order(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| self.edges.cmp(&other.edges))
    }
}

fn path_weight(topology: &Topology, path: &[usize]) -> f64 {
    path.iter().map(|&e| topology.edges()[e].weight).sum()
}

/// Dijkstra from `src` to `dst` avoiding banned nodes and edges and edges
/// without capacity. Among equal distances the node with the smaller id is
/// settled first and only strict improvements relax, so the result is
/// deterministic.
pub fn shortest_path(
    topology: &Topology,
    out_edges: &[Vec<usize>],
    src: usize,
    dst: usize,
    banned_nodes: &[bool],
    banned_edges: &[bool],
) -> Option<Path> {
    let n = topology.num_nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Reverse((Ordered(0.0), src)));
    while let Some(Reverse((Ordered(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == dst {
            break;
        }
        for &e in &out_edges[u] {
            let edge = &topology.edges()[e];
            let v = edge.dst;
            if banned_edges[e] || banned_nodes[v] || edge.capacity <= 0.0 || done[v] {
                continue;
            }
            let nd = d + edge.weight;
            if nd < dist[v] {
                dist[v] = nd;
                via[v] = Some(e);
                heap.push(Reverse((Ordered(nd), v)));
            }
        }
    }
    if !dist[dst].is_finite() {
        return None;
    }
    let mut path = Vec::new();
    let mut at = dst;
    while at != src {
        let e = via[at]?;
        path.push(e);
        at = topology.edges()[e].src;
    }
    path.reverse();
    Some(path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ordered(f64);

impl Eq for Ordered {}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn outgoing(topology: &Topology) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); topology.num_nodes()];
    for (i, e) in topology.edges().iter().enumerate() {
        out[e.src].push(i);
    }
    out
}

/// Up to `k` loopless paths by Yen's deviation method, ordered by total
/// weight and then lexicographically by edge ids. Zero-capacity edges are
/// never used.
pub fn yen_paths(topology: &Topology, out_edges: &[Vec<usize>], src: usize, dst: usize, k: usize) -> Vec<Path> {
    let n = topology.num_nodes();
    let m = topology.num_edges();
    if k == 0 || src == dst {
        return Vec::new();
    }
    let Some(first) = shortest_path(topology, out_edges, src, dst, &vec![false; n], &vec![false; m]) else {
        return Vec::new();
    };
    let mut accepted = vec![Candidate {
        weight: path_weight(topology, &first),
        edges: first,
    }];
    let mut pending: Vec<Candidate> = Vec::new();
    while accepted.len() < k {
        let last = accepted.last().expect("non-empty").edges.clone();
        let mut node_seq = vec![src];
        node_seq.extend(last.iter().map(|&e| topology.edges()[e].dst));
        for i in 0..last.len() {
            let spur = node_seq[i];
            let root = &last[..i];
            let mut banned_edges = vec![false; m];
            for p in &accepted {
                if p.edges.len() > i && p.edges[..i] == *root {
                    banned_edges[p.edges[i]] = true;
                }
            }
            let mut banned_nodes = vec![false; n];
            for &v in &node_seq[..i] {
                banned_nodes[v] = true;
            }
            if let Some(tail) = shortest_path(topology, out_edges, spur, dst, &banned_nodes, &banned_edges) {
                let mut edges = root.to_vec();
                edges.extend(tail);
                let cand = Candidate {
                    weight: path_weight(topology, &edges),
                    edges,
                };
                if !accepted.iter().chain(&pending).any(|p| p.edges == cand.edges) {
                    pending.push(cand);
                }
            }
        }
        if pending.is_empty() {
            break;
        }
        pending.sort_by(|a, b| a.order(b));
        accepted.push(pending.remove(0));
    }
    accepted.sort_by(|a, b| a.order(b));
    accepted.into_iter().map(|c| c.edges).collect()
}

/// [`yen_paths`] for every commodity. Disconnected pairs get no paths.
pub fn k_shortest_paths(topology: &Topology, commodities: &[Commodity], k: usize) -> PathSet {
    let out = outgoing(topology);
    PathSet::new(
        commodities
            .iter()
            .map(|c| yen_paths(topology, &out, c.src, c.dst, k))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Topology {
        Topology::from_named_edges(&[
            ("A", "B", 1.0, 1.0),
            ("B", "A", 1.0, 1.0),
            ("B", "C", 1.0, 1.0),
            ("C", "B", 1.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn line_has_one_path() {
        let t = line();
        let ps = k_shortest_paths(&t, &[Commodity::new(0, 2, 1.0)], 4);
        assert_eq!(ps.paths[0], vec![vec![0, 2]]);
    }

    #[test]
    fn diamond_equal_weights_lexicographic() {
        let t = Topology::from_named_edges(&[
            ("A", "D", 1.0, 1.0),
            ("D", "B", 1.0, 1.0),
            ("A", "C", 1.0, 1.0),
            ("C", "B", 1.0, 1.0),
        ])
        .unwrap();
        let b = t.node_id("B").unwrap();
        let ps = k_shortest_paths(&t, &[Commodity::new(0, b, 1.0)], 2);
        assert_eq!(ps.paths[0], vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn zero_capacity_edges_skipped() {
        let t = Topology::from_named_edges(&[("A", "B", 0.0, 1.0), ("A", "C", 1.0, 1.0), ("C", "B", 1.0, 1.0)]).unwrap();
        let b = t.node_id("B").unwrap();
        let ps = k_shortest_paths(&t, &[Commodity::new(0, b, 1.0)], 4);
        assert_eq!(ps.paths[0], vec![vec![1, 2]]);
    }

    #[test]
    fn disconnected_pair_gets_nothing() {
        let t = Topology::from_named_edges(&[("A", "B", 1.0, 1.0)]).unwrap();
        let ps = k_shortest_paths(&t, &[Commodity::new(1, 0, 1.0)], 4);
        assert!(ps.paths[0].is_empty());
    }

    #[test]
    fn weights_order_paths() {
        let t = Topology::from_named_edges(&[
            ("A", "B", 1.0, 5.0),
            ("A", "C", 1.0, 1.0),
            ("C", "B", 1.0, 1.0),
            ("A", "D", 1.0, 1.0),
            ("D", "B", 1.0, 3.0),
        ])
        .unwrap();
        let b = t.node_id("B").unwrap();
        let ps = k_shortest_paths(&t, &[Commodity::new(0, b, 1.0)], 4);
        assert_eq!(ps.paths[0], vec![vec![1, 2], vec![3, 4], vec![0]]);
    }

    #[test]
    fn gravity_symmetric_pair() {
        let t = Topology::from_named_edges(&[("A", "B", 5.0, 1.0), ("B", "A", 5.0, 1.0)]).unwrap();
        let d = gravity_demands(&t, 10.0).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|c| (c.demand - 5.0).abs() < 1e-12));
    }

    #[test]
    fn gravity_zero_weight_node() {
        let t = Topology::new(
            vec!["A".into(), "B".into(), "Z".into()],
            vec![Edge {
                src: 0,
                dst: 1,
                capacity: 3.0,
                weight: 1.0,
            }],
        )
        .unwrap();
        let d = gravity_demands(&t, 6.0).unwrap();
        for c in &d {
            if c.src == 2 || c.dst == 2 {
                assert_eq!(c.demand, 0.0);
            }
        }
    }

    #[test]
    fn gravity_hand_computed() {
        // Incident capacity weights (1, 1, 2).
        let edge = |src, dst| Edge {
            src,
            dst,
            capacity: 1.0,
            weight: 1.0,
        };
        let t = Topology::new(vec!["A".into(), "B".into(), "C".into()], vec![edge(0, 2), edge(1, 2)]).unwrap();
        let d = gravity_demands(&t, 8.0).unwrap();
        let got: Vec<f64> = d.iter().map(|c| c.demand).collect();
        let expect: Vec<f64> = [1.0, 2.0, 1.0, 2.0, 2.0, 2.0].iter().map(|v| 8.0 * v / 10.0).collect();
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn random_topology_is_connected_and_deterministic() {
        let g = RandomTopology {
            nodes: 12,
            seed: 4,
            ..RandomTopology::default()
        };
        let a = g.generate().unwrap();
        let b = g.generate().unwrap();
        assert_eq!(a.edges(), b.edges());
        let cs: Vec<Commodity> = (1..12).map(|t| Commodity::new(0, t, 1.0)).collect();
        let ps = k_shortest_paths(&a, &cs, 1);
        assert!(ps.paths.iter().all(|p| p.len() == 1));
    }
}
