//! Temporal weighted multidigraph.
//!
//! Every transaction is kept as its own edge `(src, dst, weight, timestamp)`.
//! Out-edges of each node are stored in a CSR layout sorted by
//! `(timestamp, edge_id)`, which turns the successive-edge query `L_t(u)`
//! into a binary search for the first qualifying position followed by a
//! slice of the remaining edges.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::error::GraphError;

/// Dense node index into a [`Twmdg`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense edge index, assigned in insertion order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Unix seconds.
pub type Timestamp = u64;

/// One transfer. `weight` is in Ether.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemporalEdge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
    pub timestamp: Timestamp,
}

/// A transfer keyed by account labels, as read from or written to disk.
#[derive(Clone, Debug, PartialEq)]
pub struct TxRecord {
    pub src: String,
    pub dst: String,
    pub weight: f64,
    pub timestamp: Timestamp,
    pub tx_hash: Option<String>,
}

impl TxRecord {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, weight: f64, timestamp: Timestamp) -> Self {
        Self {
            src: src.into(),
            dst: dst.into(),
            weight,
            timestamp,
            tx_hash: None,
        }
    }
}

/// Temporal weighted multidigraph. Immutable once built.
#[derive(Clone, Debug)]
pub struct Twmdg {
    labels: Vec<String>,
    label_index: HashMap<String, NodeId>,
    edges: Vec<TemporalEdge>,
    tx_hashes: Vec<Option<String>>,
    out_offsets: Vec<usize>,
    out_edges: Vec<EdgeId>,
    out_times: Vec<Timestamp>,
}

impl Twmdg {
    /// Builds a graph from label-keyed records.
    ///
    /// Labels are lowercased, node ids are handed out in first-appearance
    /// order (source before destination) and edge ids follow input order.
    pub fn from_records(records: &[TxRecord]) -> Result<Self, GraphError> {
        let mut labels = Vec::new();
        let mut label_index = HashMap::new();
        let mut edges = Vec::with_capacity(records.len());
        let mut tx_hashes = Vec::with_capacity(records.len());

        let mut intern = |label: &str| -> NodeId {
            let key = label.to_lowercase();
            if let Some(&id) = label_index.get(&key) {
                return id;
            }
            let id = NodeId(labels.len() as u32);
            labels.push(key.clone());
            label_index.insert(key, id);
            id
        };

        for (index, rec) in records.iter().enumerate() {
            if !(rec.weight > 0.0) || !rec.weight.is_finite() {
                return Err(GraphError::NonPositiveWeight {
                    index,
                    weight: rec.weight,
                });
            }
            let src = intern(&rec.src);
            let dst = intern(&rec.dst);
            edges.push(TemporalEdge {
                id: EdgeId(index as u32),
                src,
                dst,
                weight: rec.weight,
                timestamp: rec.timestamp,
            });
            tx_hashes.push(rec.tx_hash.clone());
        }

        Ok(Self::assemble(labels, label_index, edges, tx_hashes))
    }

    fn assemble(
        labels: Vec<String>,
        label_index: HashMap<String, NodeId>,
        edges: Vec<TemporalEdge>,
        tx_hashes: Vec<Option<String>>,
    ) -> Self {
        let n = labels.len();
        let mut out_offsets = vec![0usize; n + 1];
        for e in &edges {
            out_offsets[e.src.index() + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
        }
        let mut cursor = out_offsets.clone();
        let mut out_edges = vec![EdgeId(0); edges.len()];
        for e in &edges {
            let slot = &mut cursor[e.src.index()];
            out_edges[*slot] = e.id;
            *slot += 1;
        }
        for u in 0..n {
            out_edges[out_offsets[u]..out_offsets[u + 1]]
                .sort_unstable_by_key(|id| (edges[id.index()].timestamp, *id));
        }
        let out_times = out_edges.iter().map(|id| edges[id.index()].timestamp).collect();

        Self {
            labels,
            label_index,
            edges,
            tx_hashes,
            out_offsets,
            out_edges,
            out_times,
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeId> + '_ {
        (0..self.labels.len() as u32).map(NodeId)
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, id: EdgeId) -> &TemporalEdge {
        &self.edges[id.index()]
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.labels[node.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Looks up a node by address; the query is lowercased first.
    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.label_index.get(&label.to_lowercase()).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.labels.len()
    }

    /// All out-edges of `node`, ordered by `(timestamp, edge_id)`.
    #[inline]
    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        let u = node.index();
        &self.out_edges[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    #[inline]
    pub fn out_degree(&self, node: NodeId) -> usize {
        let u = node.index();
        self.out_offsets[u + 1] - self.out_offsets[u]
    }

    /// Temporal successive edges `L_t(u) = { e | Src(e) = u, T(e) >= t }`,
    /// in `(timestamp, edge_id)` order.
    #[inline]
    pub fn successive_edges(&self, node: NodeId, t: Timestamp) -> &[EdgeId] {
        let u = node.index();
        let (lo, hi) = (self.out_offsets[u], self.out_offsets[u + 1]);
        let start = lo + self.out_times[lo..hi].partition_point(|&ts| ts < t);
        &self.out_edges[start..hi]
    }

    /// Label-keyed records in edge-id order.
    pub fn to_records(&self) -> Vec<TxRecord> {
        self.edges
            .iter()
            .zip(&self.tx_hashes)
            .map(|(e, hash)| TxRecord {
                src: self.labels[e.src.index()].clone(),
                dst: self.labels[e.dst.index()].clone(),
                weight: e.weight,
                timestamp: e.timestamp,
                tx_hash: hash.clone(),
            })
            .collect()
    }

    /// Graph induced by a subset of edges (given in the order they should be
    /// re-numbered). Nodes are re-densified in first-appearance order.
    pub fn edge_subgraph(&self, edge_ids: &[EdgeId]) -> Twmdg {
        let records: Vec<TxRecord> = edge_ids
            .iter()
            .map(|&id| {
                let e = self.edge(id);
                TxRecord {
                    src: self.labels[e.src.index()].clone(),
                    dst: self.labels[e.dst.index()].clone(),
                    weight: e.weight,
                    timestamp: e.timestamp,
                    tx_hash: self.tx_hashes[id.index()].clone(),
                }
            })
            .collect();
        // weights were validated when `self` was built
        Twmdg::from_records(&records).expect("edges of a valid graph")
    }

    /// Directed K-order neighbourhood around `center`.
    ///
    /// An edge `a -> b` is kept when `a` is at most `k_out - 1` forward hops
    /// from `center` (so the edge extends a forward path of length at most
    /// `k_out`), or `b` is at most `k_in - 1` hops before `center`. Distances
    /// are breadth-first over the collapsed reachability relation, so every
    /// parallel edge between a kept pair is kept. Self-loops on retained
    /// nodes are kept as well. Nodes are renumbered in the order of their
    /// original ids and edges in the order of their original ids; labels carry
    /// the mapping back.
    pub fn k_order_subgraph(&self, center: NodeId, k_in: usize, k_out: usize) -> Twmdg {
        let n = self.node_count();
        let forward = self.bfs_depths(center, k_out, Direction::Forward);
        let backward = self.bfs_depths(center, k_in, Direction::Backward);

        let mut keep_node = vec![false; n];
        for u in 0..n {
            keep_node[u] = forward[u].is_some() || backward[u].is_some();
        }

        let mut kept_edges: Vec<EdgeId> = Vec::new();
        for e in &self.edges {
            let on_forward = forward[e.src.index()].is_some_and(|d| d < k_out);
            let on_backward = backward[e.dst.index()].is_some_and(|d| d < k_in);
            let self_loop = e.src == e.dst && keep_node[e.src.index()];
            if on_forward || on_backward || self_loop {
                kept_edges.push(e.id);
            }
        }

        let kept_nodes: Vec<usize> = (0..n).filter(|&u| keep_node[u]).collect();
        let mut remap = vec![u32::MAX; n];
        let mut labels = Vec::with_capacity(kept_nodes.len());
        let mut label_index = HashMap::with_capacity(kept_nodes.len());
        for (new, &old) in kept_nodes.iter().enumerate() {
            remap[old] = new as u32;
            labels.push(self.labels[old].clone());
            label_index.insert(self.labels[old].clone(), NodeId(new as u32));
        }
        let mut edges = Vec::with_capacity(kept_edges.len());
        let mut hashes = Vec::with_capacity(kept_edges.len());
        for (new, &old) in kept_edges.iter().enumerate() {
            let e = self.edge(old);
            edges.push(TemporalEdge {
                id: EdgeId(new as u32),
                src: NodeId(remap[e.src.index()]),
                dst: NodeId(remap[e.dst.index()]),
                weight: e.weight,
                timestamp: e.timestamp,
            });
            hashes.push(self.tx_hashes[old.index()].clone());
        }
        Twmdg::assemble(labels, label_index, edges, hashes)
    }

    fn bfs_depths(&self, center: NodeId, max_depth: usize, dir: Direction) -> Vec<Option<usize>> {
        let n = self.node_count();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            match dir {
                Direction::Forward => adj[e.src.index()].push(e.dst.index()),
                Direction::Backward => adj[e.dst.index()].push(e.src.index()),
            }
        }
        let mut depth = vec![None; n];
        depth[center.index()] = Some(0);
        let mut queue = VecDeque::from([center.index()]);
        while let Some(u) = queue.pop_front() {
            let du = depth[u].unwrap();
            if du >= max_depth {
                continue;
            }
            for &v in &adj[u] {
                if depth[v].is_none() {
                    depth[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        depth
    }

    /// Merges parallel edges into one weighted edge per ordered pair and
    /// drops timestamps.
    pub fn collapse_to_static(&self) -> StaticDigraph {
        let n = self.node_count();
        let mut per_node: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
        for e in &self.edges {
            per_node[e.src.index()].push((e.dst, e.weight));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for mut list in per_node {
            // stable sort keeps edge-id order among parallels, so the sum is reproducible
            list.sort_by_key(|&(dst, _)| dst);
            let mut i = 0;
            while i < list.len() {
                let dst = list[i].0;
                let mut w = 0.0;
                while i < list.len() && list[i].0 == dst {
                    w += list[i].1;
                    i += 1;
                }
                targets.push(dst);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        StaticDigraph {
            offsets,
            targets,
            weights,
        }
    }

    /// Total (in + out) degree of every node, counting parallel edges and
    /// counting a self-loop twice.
    pub fn total_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.node_count()];
        for e in &self.edges {
            deg[e.src.index()] += 1;
            deg[e.dst.index()] += 1;
        }
        deg
    }

    /// Degree histogram with a discrete power-law fit above `xmin`.
    pub fn degree_histogram(&self, xmin: u64) -> DegreeHistogram {
        DegreeHistogram::from_degrees(&self.total_degrees(), xmin)
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Backward,
}

/// Simple weighted digraph: at most one edge per ordered pair, out-lists
/// sorted by destination.
#[derive(Clone, Debug)]
pub struct StaticDigraph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    weights: Vec<f64>,
}

impl StaticDigraph {
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        let u = node.index();
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn neighbor_weights(&self, node: NodeId) -> &[f64] {
        let u = node.index();
        &self.weights[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        self.neighbors(src).binary_search(&dst).is_ok()
    }

    pub fn edge_weight(&self, src: NodeId, dst: NodeId) -> Option<f64> {
        self.neighbors(src)
            .binary_search(&dst)
            .ok()
            .map(|i| self.neighbor_weights(src)[i])
    }

    /// `(src, dst, weight)` triples in source-then-destination order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            let node = NodeId(u as u32);
            self.neighbors(node)
                .iter()
                .zip(self.neighbor_weights(node))
                .map(move |(&v, &w)| (node, v, w))
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Maximum-likelihood power-law exponent for the degrees at or above `xmin`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub xmin: u64,
    pub tail_size: usize,
}

/// Minimum number of nodes in the tail for a fit to be reported.
pub const MIN_TAIL_FOR_FIT: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeHistogram {
    /// `(degree, node_count)` sorted by degree; zero counts are omitted.
    pub bins: Vec<(u64, u64)>,
    pub xmin: u64,
    pub fit: Option<PowerLawFit>,
}

impl DegreeHistogram {
    pub fn from_degrees(degrees: &[u64], xmin: u64) -> Self {
        let xmin = xmin.max(1);
        let mut counts: std::collections::BTreeMap<u64, u64> = Default::default();
        for &d in degrees {
            *counts.entry(d).or_default() += 1;
        }
        let bins = counts.into_iter().collect();
        let fit = fit_discrete_power_law(degrees, xmin);
        Self { bins, xmin, fit }
    }

    pub fn node_total(&self) -> u64 {
        self.bins.iter().map(|&(_, c)| c).sum()
    }
}

/// `gamma = 1 + n / sum(ln(d_i / (xmin - 0.5)))` over `d_i >= xmin`.
pub fn fit_discrete_power_law(degrees: &[u64], xmin: u64) -> Option<PowerLawFit> {
    let shift = xmin as f64 - 0.5;
    let tail: Vec<f64> = degrees
        .iter()
        .filter(|&&d| d >= xmin && d > 0)
        .map(|&d| (d as f64 / shift).ln())
        .collect();
    if tail.len() < MIN_TAIL_FOR_FIT {
        return None;
    }
    let sum: f64 = tail.iter().sum();
    if sum <= 0.0 {
        return None;
    }
    Some(PowerLawFit {
        exponent: 1.0 + tail.len() as f64 / sum,
        xmin,
        tail_size: tail.len(),
    })
}
