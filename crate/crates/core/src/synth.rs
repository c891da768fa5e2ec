//! Synthetic transaction networks with power-law activity, finite account
//! lifetimes and planted time-ordered money-flow chains.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::Serialize;

use crate::error::SynthError;
use crate::graph::{EdgeId, NodeId, Timestamp, Twmdg, TxRecord};
use crate::rng::stage_rng;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n_nodes: usize,
    /// Exponent of the fitness (and hence degree) distribution.
    pub gamma: f64,
    /// Timestamps fall in `[0, horizon]`.
    pub horizon: u64,
    pub n_background_edges: usize,
    pub n_chains: usize,
    /// Nodes per chain.
    pub chain_length: usize,
    /// Lifetime of each account as a fraction of the horizon. Windows are
    /// placed so every instant has the same expected number of live accounts.
    pub activity_span: f64,
    pub weight_mu: f64,
    pub weight_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_nodes: 2_000,
            gamma: 2.5,
            horizon: 1_000_000,
            n_background_edges: 20_000,
            n_chains: 200,
            chain_length: 4,
            activity_span: 0.7,
            weight_mu: 0.0,
            weight_sigma: 1.0,
            seed: 0,
        }
    }
}

/// A planted chain: nodes in hop order and the edge id of each hop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedChain {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

impl PlantedChain {
    pub fn final_hop(&self) -> EdgeId {
        *self.edges.last().expect("chains have at least two hops")
    }
}

pub struct SynthGraph {
    pub graph: Twmdg,
    pub chains: Vec<PlantedChain>,
}

impl SynthGraph {
    pub fn planted_final_hops(&self) -> Vec<EdgeId> {
        self.chains.iter().map(PlantedChain::final_hop).collect()
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Infeasible(m));
        if self.n_nodes < 2 {
            return bad("need at least 2 nodes".into());
        }
        if !(self.gamma > 1.0) {
            return bad(format!("gamma must exceed 1, got {}", self.gamma));
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        if !(self.activity_span > 0.0 && self.activity_span <= 1.0) {
            return bad(format!("activity span must lie in (0, 1], got {}", self.activity_span));
        }
        if self.n_chains > 0 {
            if self.chain_length < 3 {
                return bad(format!("chain length must be >= 3, got {}", self.chain_length));
            }
            if self.chain_length > self.n_nodes {
                return bad("chain longer than the node count".into());
            }
            // hops need distinct integer timestamps, the last inside the final 10%
            if self.horizon / 10 < 1 || (self.horizon as usize) < 10 * self.chain_length {
                return bad(format!(
                    "horizon {} too coarse for chains of {} nodes",
                    self.horizon, self.chain_length
                ));
            }
        }
        if !(self.weight_sigma >= 0.0) || !self.weight_mu.is_finite() {
            return bad("invalid log-normal amount parameters".into());
        }
        Ok(())
    }
}

/// Sampler over node indices proportional to fitness, by inverse CDF.
struct FitnessSampler {
    cdf: Vec<f64>,
}

impl FitnessSampler {
    fn new(fitness: &[f64]) -> Self {
        let total: f64 = fitness.iter().sum();
        let mut acc = 0.0;
        let cdf = fitness
            .iter()
            .map(|f| {
                acc += f / total;
                acc
            })
            .collect();
        Self { cdf }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

/// Pareto(`gamma`) draw with scale 1: density proportional to `x^-gamma`.
fn pareto<R: Rng + ?Sized>(gamma: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (1.0 - u).powf(-1.0 / (gamma - 1.0))
}

/// Builds the background and the planted chains.
///
/// Background edges pick a uniform timestamp, then both endpoints in
/// proportion to fitness among the accounts active at that time (endpoints
/// are redrawn until distinct). Each chain runs over distinct accounts with
/// strictly increasing timestamps; its last hop lands in the final tenth of
/// the horizon. Records are emitted in timestamp order.
pub fn generate(cfg: &SynthConfig) -> Result<SynthGraph, SynthError> {
    cfg.validate()?;
    let mut rng = stage_rng(cfg.seed, 0x5947);
    let n = cfg.n_nodes;
    let h = cfg.horizon;
    let fitness: Vec<f64> = (0..n).map(|_| pareto(cfg.gamma, &mut rng)).collect();
    let span = (cfg.activity_span * h as f64).round() as u64;
    // windows may start before 0 so that every instant is covered equally
    let start: Vec<i64> = (0..n).map(|_| rng.random_range(-(span as i64)..=h as i64)).collect();
    let active = |u: usize, t: u64| start[u] <= t as i64 && t as i64 <= start[u] + span as i64;
    let sampler = FitnessSampler::new(&fitness);
    let amounts = LogNormal::new(cfg.weight_mu, cfg.weight_sigma)
        .map_err(|e| SynthError::Infeasible(e.to_string()))?;

    // (timestamp, src, dst, weight, chain slot)
    let mut raw: Vec<(u64, usize, usize, f64, Option<(usize, usize)>)> =
        Vec::with_capacity(cfg.n_background_edges + cfg.n_chains * cfg.chain_length);

    const MAX_REJECTIONS: usize = 1_000_000;
    for _ in 0..cfg.n_background_edges {
        let t = rng.random_range(0..=h);
        let draw = |rng: &mut _, exclude: Option<usize>| {
            (0..MAX_REJECTIONS)
                .map(|_| sampler.sample(rng))
                .find(|&u| active(u, t) && Some(u) != exclude)
                .ok_or_else(|| SynthError::Infeasible(format!("fewer than two accounts active at time {t}")))
        };
        let src = draw(&mut rng, None)?;
        let dst = draw(&mut rng, Some(src))?;
        raw.push((t, src, dst, amounts.sample(&mut rng), None));
    }

    let hops = cfg.chain_length.saturating_sub(1);
    let final_window = h - h / 10;
    for c in 0..cfg.n_chains {
        let mut nodes = Vec::with_capacity(cfg.chain_length);
        while nodes.len() < cfg.chain_length {
            let u = rng.random_range(0..n);
            if !nodes.contains(&u) {
                nodes.push(u);
            }
        }
        // earlier hops: distinct sorted times before the final window
        let mut times: Vec<u64> = Vec::with_capacity(hops);
        while times.len() < hops - 1 {
            let t = rng.random_range(0..final_window);
            if !times.contains(&t) {
                times.push(t);
            }
        }
        times.sort_unstable();
        times.push(rng.random_range(final_window..=h));
        let amount = amounts.sample(&mut rng);
        for (i, &t) in times.iter().enumerate() {
            raw.push((t, nodes[i], nodes[i + 1], amount, Some((c, i))));
        }
    }

    raw.sort_by_key(|r| r.0);
    let records: Vec<TxRecord> = raw
        .iter()
        .map(|&(t, s, d, w, _)| TxRecord::new(format!("0x{s:040x}"), format!("0x{d:040x}"), w, t as Timestamp))
        .collect();
    let graph = Twmdg::from_records(&records).map_err(|e| SynthError::Infeasible(e.to_string()))?;

    let mut chains: Vec<PlantedChain> = (0..cfg.n_chains)
        .map(|_| PlantedChain {
            nodes: Vec::with_capacity(cfg.chain_length),
            edges: vec![EdgeId(0); hops],
        })
        .collect();
    for (i, r) in raw.iter().enumerate() {
        if let Some((c, hop)) = r.4 {
            chains[c].edges[hop] = EdgeId(i as u32);
        }
    }
    for chain in &mut chains {
        let first = graph.edge(chain.edges[0]);
        chain.nodes.push(first.src);
        for &e in &chain.edges {
            chain.nodes.push(graph.edge(e).dst);
        }
    }
    Ok(SynthGraph { graph, chains })
}

/// Structureless control: uniform endpoints, uniform timestamps, unit-scale
/// log-normal amounts, no chains.
pub fn generate_uniform(n_nodes: usize, n_edges: usize, horizon: u64, seed: u64) -> Result<Twmdg, SynthError> {
    if n_nodes < 2 || horizon == 0 {
        return Err(SynthError::Infeasible("need >= 2 nodes and a positive horizon".into()));
    }
    let mut rng = stage_rng(seed, 0x554E);
    let amounts = LogNormal::new(0.0, 1.0).expect("valid parameters");
    let mut raw: Vec<(u64, usize, usize, f64)> = (0..n_edges)
        .map(|_| {
            let t = rng.random_range(0..=horizon);
            let s = rng.random_range(0..n_nodes);
            let d = loop {
                let d = rng.random_range(0..n_nodes);
                if d != s {
                    break d;
                }
            };
            (t, s, d, amounts.sample(&mut rng))
        })
        .collect();
    raw.sort_by_key(|r| r.0);
    let records: Vec<TxRecord> = raw
        .into_iter()
        .map(|(t, s, d, w)| TxRecord::new(format!("0x{s:040x}"), format!("0x{d:040x}"), w, t))
        .collect();
    Twmdg::from_records(&records).map_err(|e| SynthError::Infeasible(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            n_nodes: 300,
            n_background_edges: 2_000,
            n_chains: 20,
            ..Default::default()
        }
    }

    #[test]
    fn no_chains_means_background_only() {
        let cfg = SynthConfig { n_chains: 0, ..small() };
        let s = generate(&cfg).unwrap();
        assert!(s.chains.is_empty());
        assert_eq!(s.graph.edge_count(), 2_000);
    }

    #[test]
    fn chains_are_time_ordered_and_end_late() {
        let cfg = small();
        let s = generate(&cfg).unwrap();
        assert_eq!(s.chains.len(), 20);
        for c in &s.chains {
            assert_eq!(c.nodes.len(), cfg.chain_length);
            let ts: Vec<u64> = c.edges.iter().map(|&e| s.graph.edge(e).timestamp).collect();
            assert!(ts.windows(2).all(|w| w[0] < w[1]));
            assert!(*ts.last().unwrap() >= cfg.horizon - cfg.horizon / 10);
            for (i, &e) in c.edges.iter().enumerate() {
                assert_eq!(s.graph.edge(e).src, c.nodes[i]);
                assert_eq!(s.graph.edge(e).dst, c.nodes[i + 1]);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&small()).unwrap().graph.to_records();
        let b = generate(&small()).unwrap().graph.to_records();
        assert_eq!(a, b);
        let c = generate(&SynthConfig { seed: 1, ..small() }).unwrap().graph.to_records();
        assert_ne!(a, c);
    }

    #[test]
    fn infeasible_configs_rejected() {
        assert!(generate(&SynthConfig { chain_length: 2, ..small() }).is_err());
        assert!(generate(&SynthConfig { horizon: 20, chain_length: 5, ..small() }).is_err());
        assert!(generate(&SynthConfig { gamma: 1.0, ..small() }).is_err());
        assert!(generate(&SynthConfig { activity_span: 0.0, ..small() }).is_err());
    }

    #[test]
    fn uniform_graph_has_requested_size() {
        let g = generate_uniform(50, 400, 1000, 3).unwrap();
        assert_eq!(g.edge_count(), 400);
        assert!(g.edges().iter().all(|e| e.src != e.dst));
    }
}
