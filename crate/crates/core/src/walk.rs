//! Edge-selection laws, temporal and static walk samplers, and walk corpora.

use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::WalkError;
use crate::graph::{EdgeId, NodeId, StaticDigraph, Twmdg};
use crate::rng::{stage_rng, task_rng, TaskRng};

/// Time-domain bias over the candidate set `L_t(v)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalStrategy {
    /// Every candidate equally likely.
    #[default]
    Unbiased,
    /// Rank-proportional, earliest candidate gets the largest rank.
    BiasedRecent,
    /// Rank-proportional, latest candidate gets the largest rank.
    BiasedDistant,
}

/// Amount-domain bias over the candidate set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightStrategy {
    #[default]
    Unbiased,
    /// Proportional to the transferred amount.
    BiasedRaw,
    /// Proportional to the ascending rank of the amount.
    BiasedLinear,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkConfig {
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub alpha: f64,
    pub temporal: TemporalStrategy,
    pub weighted: WeightStrategy,
    pub min_emit_length: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walk_length: 10,
            walks_per_node: 20,
            alpha: 0.5,
            temporal: TemporalStrategy::Unbiased,
            weighted: WeightStrategy::Unbiased,
            min_emit_length: 2,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        if self.walk_length < 2 {
            return Err(WalkError::InvalidConfig(format!("walk length must be >= 2, got {}", self.walk_length)));
        }
        if self.walks_per_node < 1 {
            return Err(WalkError::InvalidConfig("walks per node must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(WalkError::InvalidConfig(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.min_emit_length < 2 || self.min_emit_length > self.walk_length {
            return Err(WalkError::InvalidConfig(format!(
                "min emit length must lie in [2, {}], got {}",
                self.walk_length, self.min_emit_length
            )));
        }
        Ok(())
    }
}

/// Node sequence plus the edges traversed between consecutive nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemporalWalk {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

impl TemporalWalk {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Checks edge chaining and non-decreasing timestamps against `g`.
    pub fn is_valid(&self, g: &Twmdg) -> bool {
        if self.nodes.is_empty() || self.edges.len() + 1 != self.nodes.len() {
            return false;
        }
        let chained = self.edges.iter().enumerate().all(|(i, &e)| {
            let edge = g.edge(e);
            edge.src == self.nodes[i] && edge.dst == self.nodes[i + 1]
        });
        chained && self.edges.windows(2).all(|w| g.edge(w[0]).timestamp <= g.edge(w[1]).timestamp)
    }
}

/// Ordinal ranks `1..=n` of `keys`, ascending, ties broken by `ids`.
fn ascending_ranks<K: PartialOrd + Copy>(keys: &[K], ids: &[EdgeId], out: &mut Vec<f64>) {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .partial_cmp(&keys[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ids[a].cmp(&ids[b]))
    });
    out.clear();
    out.resize(keys.len(), 0.0);
    for (rank, &i) in order.iter().enumerate() {
        out[i] = (rank + 1) as f64;
    }
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= total;
    }
}

fn fill_temporal(g: &Twmdg, candidates: &[EdgeId], strategy: TemporalStrategy, out: &mut Vec<f64>) {
    let n = candidates.len();
    match strategy {
        TemporalStrategy::Unbiased => {
            out.clear();
            out.resize(n, 1.0 / n as f64);
        }
        TemporalStrategy::BiasedRecent | TemporalStrategy::BiasedDistant => {
            let times: Vec<u64> = candidates.iter().map(|&e| g.edge(e).timestamp).collect();
            ascending_ranks(&times, candidates, out);
            if strategy == TemporalStrategy::BiasedRecent {
                for r in out.iter_mut() {
                    *r = (n + 1) as f64 - *r;
                }
            }
            normalize(out);
        }
    }
}

fn fill_weight(g: &Twmdg, candidates: &[EdgeId], strategy: WeightStrategy, out: &mut Vec<f64>) {
    let n = candidates.len();
    match strategy {
        WeightStrategy::Unbiased => {
            out.clear();
            out.resize(n, 1.0 / n as f64);
        }
        WeightStrategy::BiasedRaw => {
            out.clear();
            out.extend(candidates.iter().map(|&e| g.edge(e).weight));
            normalize(out);
        }
        WeightStrategy::BiasedLinear => {
            let weights: Vec<f64> = candidates.iter().map(|&e| g.edge(e).weight).collect();
            ascending_ranks(&weights, candidates, out);
            normalize(out);
        }
    }
}

/// Time-domain selection probabilities for `candidates` (all out-edges of
/// one node).
pub fn temporal_probabilities(
    g: &Twmdg,
    candidates: &[EdgeId],
    strategy: TemporalStrategy,
) -> Result<Vec<f64>, WalkError> {
    if candidates.is_empty() {
        return Err(WalkError::NoCandidates);
    }
    let mut out = Vec::with_capacity(candidates.len());
    fill_temporal(g, candidates, strategy, &mut out);
    Ok(out)
}

/// Amount-domain selection probabilities for `candidates`.
pub fn weight_probabilities(g: &Twmdg, candidates: &[EdgeId], strategy: WeightStrategy) -> Result<Vec<f64>, WalkError> {
    if candidates.is_empty() {
        return Err(WalkError::NoCandidates);
    }
    let mut out = Vec::with_capacity(candidates.len());
    fill_weight(g, candidates, strategy, &mut out);
    Ok(out)
}

/// `p_T^alpha * p_W^(1 - alpha)`, renormalized over the candidates.
pub fn combined_probabilities(p_time: &[f64], p_weight: &[f64], alpha: f64) -> Result<Vec<f64>, WalkError> {
    if p_time.len() != p_weight.len() {
        return Err(WalkError::DimensionMismatch(p_time.len(), p_weight.len()));
    }
    if p_time.is_empty() {
        return Err(WalkError::NoCandidates);
    }
    let mut out = Vec::with_capacity(p_time.len());
    blend_into(p_time, p_weight, alpha, &mut out);
    Ok(out)
}

fn blend_into(p_time: &[f64], p_weight: &[f64], alpha: f64, out: &mut Vec<f64>) {
    out.clear();
    if alpha == 1.0 {
        out.extend_from_slice(p_time);
        return;
    }
    if alpha == 0.0 {
        out.extend_from_slice(p_weight);
        return;
    }
    out.extend(
        p_time
            .iter()
            .zip(p_weight)
            .map(|(&a, &b)| if a == b { a } else { a.powf(alpha) * b.powf(1.0 - alpha) }),
    );
    normalize(out);
}

/// Inverse-CDF draw with a single uniform variate.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    // rounding can leave `target` a hair above the last partial sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Scratch buffers for one walker, reused across steps.
#[derive(Default)]
struct StepScratch {
    time: Vec<f64>,
    weight: Vec<f64>,
    blend: Vec<f64>,
}

impl StepScratch {
    fn pick<R: Rng + ?Sized>(&mut self, g: &Twmdg, candidates: &[EdgeId], cfg: &WalkConfig, rng: &mut R) -> EdgeId {
        let n = candidates.len();
        if n == 1 {
            // still consume one draw so the stream layout does not depend on degree
            let _ = rng.random::<f64>();
            return candidates[0];
        }
        let time_inactive = cfg.alpha == 0.0 || cfg.temporal == TemporalStrategy::Unbiased;
        let weight_inactive = cfg.alpha == 1.0 || cfg.weighted == WeightStrategy::Unbiased;
        if time_inactive && weight_inactive {
            let i = ((rng.random::<f64>() * n as f64) as usize).min(n - 1);
            return candidates[i];
        }
        fill_temporal(g, candidates, cfg.temporal, &mut self.time);
        fill_weight(g, candidates, cfg.weighted, &mut self.weight);
        blend_into(&self.time, &self.weight, cfg.alpha, &mut self.blend);
        candidates[sample_index(&self.blend, rng)]
    }
}

/// One temporal walk from `start`. The first hop may use any out-edge; every
/// later hop draws from `L_t(v)` with `t` the timestamp of the edge just taken.
pub fn sample_temporal_walk<R: Rng + ?Sized>(g: &Twmdg, start: NodeId, cfg: &WalkConfig, rng: &mut R) -> TemporalWalk {
    let mut scratch = StepScratch::default();
    walk_with_scratch(g, start, cfg, rng, &mut scratch)
}

fn walk_with_scratch<R: Rng + ?Sized>(
    g: &Twmdg,
    start: NodeId,
    cfg: &WalkConfig,
    rng: &mut R,
    scratch: &mut StepScratch,
) -> TemporalWalk {
    let mut nodes = Vec::with_capacity(cfg.walk_length);
    let mut edges = Vec::with_capacity(cfg.walk_length.saturating_sub(1));
    nodes.push(start);
    let mut current = start;
    let mut now = 0;
    while nodes.len() < cfg.walk_length {
        let candidates = g.successive_edges(current, now);
        if candidates.is_empty() {
            break;
        }
        let chosen = scratch.pick(g, candidates, cfg, rng);
        let edge = g.edge(chosen);
        edges.push(chosen);
        nodes.push(edge.dst);
        current = edge.dst;
        now = edge.timestamp;
    }
    TemporalWalk { nodes, edges }
}

/// Transition rule for walks on a collapsed digraph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum StaticWalkMode {
    Uniform,
    /// Second-order return (`p`) and in-out (`q`) biases.
    Node2Vec { p: f64, q: f64 },
}

/// One walk over `sg`, ignoring edge weights. Stops at dead ends.
pub fn sample_static_walk<R: Rng + ?Sized>(
    sg: &StaticDigraph,
    start: NodeId,
    walk_length: usize,
    mode: StaticWalkMode,
    rng: &mut R,
) -> Vec<NodeId> {
    let mut walk = Vec::with_capacity(walk_length);
    walk.push(start);
    let mut bias = Vec::new();
    while walk.len() < walk_length {
        let current = *walk.last().unwrap();
        let next = sg.neighbors(current);
        if next.is_empty() {
            break;
        }
        let choice = match (mode, walk.len()) {
            (StaticWalkMode::Node2Vec { p, q }, len) if len >= 2 && !(p == 1.0 && q == 1.0) => {
                let prev = walk[len - 2];
                bias.clear();
                bias.extend(next.iter().map(|&x| {
                    if x == prev {
                        1.0 / p
                    } else if sg.has_edge(prev, x) {
                        1.0
                    } else {
                        1.0 / q
                    }
                }));
                sample_index(&bias, rng)
            }
            _ => ((rng.random::<f64>() * next.len() as f64) as usize).min(next.len() - 1),
        };
        walk.push(next[choice]);
    }
    walk
}

/// Walks as sequences of indices into `labels`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    pub labels: Vec<String>,
    pub walks: Vec<Vec<u32>>,
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    pub fn walk_labels(&self, i: usize) -> impl Iterator<Item = &str> {
        self.walks[i].iter().map(move |&t| self.labels[t as usize].as_str())
    }

    /// One walk per line, labels separated by single spaces.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        for walk in &self.walks {
            for (i, &t) in walk.iter().enumerate() {
                if i > 0 {
                    out.write_all(b" ")?;
                }
                out.write_all(self.labels[t as usize].as_bytes())?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    /// Reads the line format produced by [`WalkCorpus::write`]; labels are
    /// interned in first-appearance order and blank lines are skipped.
    pub fn read<R: BufRead>(input: R) -> io::Result<Self> {
        let mut labels = Vec::new();
        let mut index = std::collections::HashMap::new();
        let mut walks = Vec::new();
        for line in input.lines() {
            let line = line?;
            let walk: Vec<u32> = line
                .split_whitespace()
                .map(|tok| {
                    *index.entry(tok.to_string()).or_insert_with(|| {
                        labels.push(tok.to_string());
                        (labels.len() - 1) as u32
                    })
                })
                .collect();
            if !walk.is_empty() {
                walks.push(walk);
            }
        }
        Ok(Self { labels, walks })
    }
}

/// Runs `walks_per_node` rounds; each round visits all nodes in a seeded
/// permutation. Task `(node, round)` owns its own random stream, so the
/// result is the same for any number of workers.
fn run_walk_tasks<T, F>(n: usize, rounds: usize, seed: u64, workers: usize, walk: F) -> Vec<T>
where
    T: Send,
    F: Fn(NodeId, &mut TaskRng) -> T + Sync,
{
    let mut tasks = Vec::with_capacity(n * rounds);
    for round in 0..rounds {
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.shuffle(&mut stage_rng(seed, round as u64));
        tasks.extend(order.into_iter().map(|u| (u, round as u32)));
    }
    let job = || {
        tasks
            .par_iter()
            .map(|&(u, round)| {
                let mut rng = task_rng(seed, u, round);
                walk(NodeId(u), &mut rng)
            })
            .collect::<Vec<_>>()
    };
    with_workers(workers, job)
}

/// Runs `job` on a pool of `workers` threads (0 means the global pool).
pub fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// All temporal walks, including those shorter than `min_emit_length`.
pub fn generate_temporal_walks(g: &Twmdg, cfg: &WalkConfig, workers: usize) -> Result<Vec<TemporalWalk>, WalkError> {
    cfg.validate()?;
    Ok(run_walk_tasks(g.node_count(), cfg.walks_per_node, cfg.seed, workers, |u, rng| {
        walk_with_scratch(g, u, cfg, rng, &mut StepScratch::default())
    }))
}

/// Temporal walk corpus: walks shorter than `min_emit_length` are dropped.
pub fn generate_corpus(g: &Twmdg, cfg: &WalkConfig, workers: usize) -> Result<WalkCorpus, WalkError> {
    let walks = generate_temporal_walks(g, cfg, workers)?;
    Ok(WalkCorpus {
        labels: g.labels().to_vec(),
        walks: walks
            .into_iter()
            .filter(|w| w.len() >= cfg.min_emit_length)
            .map(|w| w.nodes.into_iter().map(|n| n.0).collect())
            .collect(),
    })
}

/// Baseline corpus over the collapsed digraph of `g`.
pub fn generate_static_corpus(
    g: &Twmdg,
    cfg: &WalkConfig,
    mode: StaticWalkMode,
    workers: usize,
) -> Result<WalkCorpus, WalkError> {
    cfg.validate()?;
    let sg = g.collapse_to_static();
    let walks = run_walk_tasks(g.node_count(), cfg.walks_per_node, cfg.seed, workers, |u, rng| {
        sample_static_walk(&sg, u, cfg.walk_length, mode, rng)
    });
    Ok(WalkCorpus {
        labels: g.labels().to_vec(),
        walks: walks
            .into_iter()
            .filter(|w| w.len() >= cfg.min_emit_length)
            .map(|w| w.into_iter().map(|n| n.0).collect())
            .collect(),
    })
}
