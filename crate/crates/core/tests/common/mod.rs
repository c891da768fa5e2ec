// Independent oracles shared by the integration tests. Nothing here calls
// into the code under test except to read graph contents.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twmdg::skipgram::sgns_gradient;
use twmdg::{EdgeId, NodeId, TemporalWalk, Twmdg, TxRecord};

pub fn label(i: usize) -> String {
    format!("0x{i:04x}")
}

/// Random multigraph over `n` labels with `m` edges; timestamps drawn from a
/// small range so ties are common.
pub fn random_records(n: usize, m: usize, t_max: u64, seed: u64) -> Vec<TxRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| {
            let s = rng.random_range(0..n);
            let d = rng.random_range(0..n);
            let w = rng.random_range(1..1000) as f64 / 100.0;
            TxRecord::new(label(s), label(d), w, rng.random_range(0..=t_max))
        })
        .collect()
}

pub fn random_graph(n: usize, m: usize, t_max: u64, seed: u64) -> Twmdg {
    Twmdg::from_records(&random_records(n, m, t_max, seed)).unwrap()
}

/// `{ e : Src(e) = u, T(e) >= t }` by linear scan.
pub fn brute_successive(g: &Twmdg, u: NodeId, t: u64) -> BTreeSet<EdgeId> {
    g.edges().iter().filter(|e| e.src == u && e.timestamp >= t).map(|e| e.id).collect()
}

/// Walk validity: chaining, non-decreasing time, length bound.
pub fn walk_is_valid(g: &Twmdg, w: &TemporalWalk, max_len: usize) -> bool {
    if w.nodes.is_empty() || w.nodes.len() > max_len || w.edges.len() + 1 != w.nodes.len() {
        return false;
    }
    let mut last_t = 0u64;
    for (i, &eid) in w.edges.iter().enumerate() {
        let Some(e) = g.edges().get(eid.index()) else {
            return false;
        };
        if e.src != w.nodes[i] || e.dst != w.nodes[i + 1] || e.timestamp < last_t {
            return false;
        }
        last_t = e.timestamp;
    }
    true
}

/// Hop distances by repeated relaxation over an edge list (no queue).
fn relax_distances(n: usize, arcs: &[(usize, usize)], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; n];
    dist[source] = Some(0);
    loop {
        let mut changed = false;
        for &(a, b) in arcs {
            if let Some(da) = dist[a] {
                if dist[b].is_none_or(|db: usize| da + 1 < db) {
                    dist[b] = Some(da + 1);
                    changed = true;
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Labelled edge multiset of the K-order subgraph: edges on a forward path of
/// at most `k_out` hops from the center, on a backward path of at most
/// `k_in` hops into it, and self-loops on retained nodes.
pub fn brute_k_order(g: &Twmdg, center: NodeId, k_in: usize, k_out: usize) -> (BTreeSet<String>, Vec<(String, String, u64, u64)>) {
    let n = g.node_count();
    let fwd_arcs: Vec<_> = g.edges().iter().map(|e| (e.src.index(), e.dst.index())).collect();
    let bwd_arcs: Vec<_> = fwd_arcs.iter().map(|&(a, b)| (b, a)).collect();
    let fwd = relax_distances(n, &fwd_arcs, center.index());
    let bwd = relax_distances(n, &bwd_arcs, center.index());
    let on_path = |s: usize, d: usize| fwd[s].is_some_and(|x| x < k_out) || bwd[d].is_some_and(|x| x < k_in);
    let mut nodes = BTreeSet::from([g.label(center).to_string()]);
    for e in g.edges() {
        if on_path(e.src.index(), e.dst.index()) {
            nodes.insert(g.label(e.src).to_string());
            nodes.insert(g.label(e.dst).to_string());
        }
    }
    let mut edges: Vec<_> = g
        .edges()
        .iter()
        .filter(|e| on_path(e.src.index(), e.dst.index()) || (e.src == e.dst && nodes.contains(g.label(e.src))))
        .map(|e| edge_key(g, e.id))
        .collect();
    edges.sort();
    (nodes, edges)
}

/// `(src label, dst label, timestamp, weight bits)`
pub fn edge_key(g: &Twmdg, id: EdgeId) -> (String, String, u64, u64) {
    let e = g.edge(id);
    (g.label(e.src).to_string(), g.label(e.dst).to_string(), e.timestamp, e.weight.to_bits())
}

/// Mann-Whitney AUC by enumerating every positive/negative pair.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                den += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

/// AP from the definition: precision at each positive's rank, averaged.
/// Ties keep input order.
pub fn brute_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let n = scores.len();
    // rank of i = number of items strictly ahead of it in a stable descending order
    let rank = |i: usize| (0..n).filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i)).count();
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let mut total = 0.0;
    for i in (0..n).filter(|&i| labels[i]) {
        let r = rank(i);
        let pos_ahead = (0..n).filter(|&j| labels[j] && rank(j) <= r).count() as f64;
        total += pos_ahead / (r + 1) as f64;
    }
    total / n_pos
}

/// Ordinal ranks 1..=n by ascending `key`, ties broken by position.
pub fn ascending_ranks<K: PartialOrd + Copy>(keys: &[K], ids: &[u32]) -> Vec<f64> {
    keys.iter()
        .enumerate()
        .map(|(i, &k)| {
            1.0 + keys
                .iter()
                .enumerate()
                .filter(|&(j, &kj)| kj < k || (kj == k && ids[j] < ids[i]))
                .count() as f64
        })
        .collect()
}

pub fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

/// Empirical frequencies of `draws` samples of `f` over `n` outcomes.
pub fn frequencies(n: usize, draws: usize, mut f: impl FnMut() -> usize) -> Vec<f64> {
    let mut counts = vec![0usize; n];
    for _ in 0..draws {
        counts[f()] += 1;
    }
    counts.iter().map(|&c| c as f64 / draws as f64).collect()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn label_multiset(g: &Twmdg) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    for e in g.edges() {
        *m.entry(format!("{}>{}", g.label(e.src), g.label(e.dst))).or_insert(0) += 1;
    }
    m
}

fn loss_of(center: &[f64], context: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    -sig(dot(center, context)).ln() - negatives.iter().map(|n| sig(-dot(center, n)).ln()).sum::<f64>()
}

/// Largest relative error of `analytic` against central differences of
/// `loss_of` in every coordinate of every vector.
pub fn gradient_check_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=16);
    let n_neg = rng.random_range(1..=5);
    let scale = rng.random_range(0.1..1.0);
    let mut v = |_| (0..d).map(|_| rng.random_range(-scale..scale)).collect::<Vec<f64>>();
    let center = v(0);
    let context = v(0);
    let negs: Vec<Vec<f64>> = (0..n_neg).map(&mut v).collect();
    let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
    let grad = sgns_gradient(&center, &context, &neg_refs);
    assert!((grad.loss - loss_of(&center, &context, &negs)).abs() < 1e-12);

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut check = |analytic: f64, plus: f64, minus: f64| {
        let numeric = (plus - minus) / (2.0 * h);
        let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    };
    for k in 0..d {
        let (mut p, mut m) = (center.clone(), center.clone());
        p[k] += h;
        m[k] -= h;
        check(grad.center[k], loss_of(&p, &context, &negs), loss_of(&m, &context, &negs));
        let (mut p, mut m) = (context.clone(), context.clone());
        p[k] += h;
        m[k] -= h;
        check(grad.context[k], loss_of(&center, &p, &negs), loss_of(&center, &m, &negs));
        for j in 0..n_neg {
            let (mut p, mut m) = (negs.clone(), negs.clone());
            p[j][k] += h;
            m[j][k] -= h;
            check(grad.negatives[j][k], loss_of(&center, &context, &p), loss_of(&center, &context, &m));
        }
    }
    worst
}
