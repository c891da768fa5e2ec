//! Temporal link-prediction protocol: time-ordered split, negative pairs,
//! concatenated embedding features, a hinge-loss linear classifier and
//! ranking metrics.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::EvalError;
use crate::graph::{NodeId, TemporalEdge, Twmdg};
use crate::rng::stage_rng;
use crate::skipgram::{train_embeddings, EmbeddingMatrix, SgnsParams};
use crate::walk::{
    generate_corpus, generate_static_corpus, StaticWalkMode, TemporalStrategy, WalkConfig, WalkCorpus, WeightStrategy,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.5 }
    }
}

impl SplitSpec {
    pub fn new(train_fraction: f64) -> Result<Self, EvalError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(EvalError::InvalidSplit(train_fraction));
        }
        Ok(Self { train_fraction })
    }

    /// `ceil(fraction * m)`, kept inside `[1, m - 1]`.
    pub fn train_size(&self, m: usize) -> usize {
        // the epsilon keeps e.g. 0.7 * 10 from rounding up to 8
        let raw = (self.train_fraction * m as f64 - 1e-9).ceil() as usize;
        raw.clamp(1, m.saturating_sub(1).max(1))
    }
}

/// Sorts by `(timestamp, edge_id)`; the first `ceil(fraction * m)` edges
/// train, the rest test.
pub fn temporal_split(edges: &[TemporalEdge], spec: SplitSpec) -> Result<(Vec<TemporalEdge>, Vec<TemporalEdge>), EvalError> {
    if edges.len() < 2 {
        return Err(EvalError::TooFewEdges(edges.len()));
    }
    SplitSpec::new(spec.train_fraction)?;
    let mut sorted = edges.to_vec();
    sorted.sort_by_key(|e| (e.timestamp, e.id));
    let test = sorted.split_off(spec.train_size(edges.len()));
    Ok((sorted, test))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LabeledPair {
    pub src: NodeId,
    pub dst: NodeId,
    pub positive: bool,
}

/// Draws `count` distinct ordered pairs `(u, v)`, `u != v`, uniformly among
/// those not in `forbidden`, by rejection. Gives up after `100 * count`
/// rejected draws.
pub fn sample_negative_pairs<R: Rng + ?Sized>(
    nodes: &[NodeId],
    forbidden: &HashSet<(NodeId, NodeId)>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<LabeledPair>, EvalError> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    if nodes.len() < 2 {
        return Err(EvalError::InsufficientNegatives { requested: count, found: 0 });
    }
    let mut taken = HashSet::with_capacity(count);
    let budget = 100 * count;
    let mut rejected = 0;
    while out.len() < count {
        let u = nodes[rng.random_range(0..nodes.len())];
        let v = nodes[rng.random_range(0..nodes.len())];
        if u == v || forbidden.contains(&(u, v)) || !taken.insert((u, v)) {
            rejected += 1;
            if rejected >= budget {
                return Err(EvalError::InsufficientNegatives {
                    requested: count,
                    found: out.len(),
                });
            }
            continue;
        }
        out.push(LabeledPair {
            src: u,
            dst: v,
            positive: false,
        });
    }
    Ok(out)
}

/// `[phi(src), phi(dst)]`, or `None` when either endpoint has no embedding.
pub fn edge_features(emb: &EmbeddingMatrix, src: &str, dst: &str) -> Option<Vec<f64>> {
    let a = emb.vector(src)?;
    let b = emb.vector(dst)?;
    let mut f = Vec::with_capacity(a.len() * 2);
    f.extend_from_slice(a);
    f.extend_from_slice(b);
    Some(f)
}

/// Linear scorer `w . x + b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

impl LinearClassifier {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) > 0.0
    }
}

/// Stochastic subgradient descent on
/// `mean(max(0, 1 - y (w.x + b))) + lambda |w|^2`.
///
/// With `lambda > 0` this is Pegasos: step `1 / (2 lambda t)` and a
/// projection onto the ball of radius `1 / sqrt(2 lambda)`. The bias is
/// treated as the weight of a constant feature. With `lambda == 0` the step
/// is `1 / sqrt(t)` and there is no projection.
pub fn train_linear_classifier(
    features: &[Vec<f64>],
    labels: &[bool],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearClassifier, EvalError> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(EvalError::ShapeMismatch);
    }
    let dim = features[0].len();
    if features.iter().any(|f| f.len() != dim) {
        return Err(EvalError::ShapeMismatch);
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(EvalError::SingleClass);
    }
    let reg = 2.0 * lambda;
    let radius = if reg > 0.0 { 1.0 / reg.sqrt() } else { f64::INFINITY };
    // last slot holds the bias
    let mut w = vec![0.0; dim + 1];
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut rng = stage_rng(seed, 0xC1A5);
    let mut t: u64 = 0;
    for _ in 0..epochs.max(1) {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let x = &features[i];
            let y = if labels[i] { 1.0 } else { -1.0 };
            let margin = y * (w[..dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[dim]);
            let eta = if reg > 0.0 { 1.0 / (reg * t as f64) } else { 1.0 / (t as f64).sqrt() };
            if reg > 0.0 {
                let shrink = 1.0 - eta * reg;
                w.iter_mut().for_each(|v| *v *= shrink);
            }
            if margin < 1.0 {
                for (wk, xk) in w[..dim].iter_mut().zip(x) {
                    *wk += eta * y * xk;
                }
                w[dim] += eta * y;
            }
            if radius.is_finite() {
                let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > radius {
                    let s = radius / norm;
                    w.iter_mut().for_each(|v| *v *= s);
                }
            }
        }
    }
    let bias = w.pop().unwrap();
    Ok(LinearClassifier { weights: w, bias, lambda })
}

/// Mann-Whitney AUC with ties counted as one half.
pub fn score_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::ShapeMismatch);
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::UndefinedMetric("AUC"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // walk tie groups in ascending score order
    let mut concordant = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0usize, 0usize);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        concordant += pos as f64 * neg_below as f64 + 0.5 * pos as f64 * neg as f64;
        neg_below += neg;
        i = j;
    }
    Ok(concordant / (n_pos as f64 * n_neg as f64))
}

/// Average precision over the score-descending order (stable on ties).
pub fn score_ap(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::ShapeMismatch);
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(EvalError::UndefinedMetric("AP"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / n_pos as f64)
}

/// Graph modeling and walk family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Collapsed digraph, uniform walks.
    StaticUnbiased,
    /// Collapsed digraph, node2vec walks.
    StaticBiased,
    /// Temporal walks, uniform in time and amount.
    TwmdgUnbiased,
    /// Temporal walks with time and amount biases.
    TwmdgBiased,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::StaticUnbiased,
        Method::StaticBiased,
        Method::TwmdgUnbiased,
        Method::TwmdgBiased,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::StaticUnbiased => "static-unbiased",
            Method::StaticBiased => "static-biased",
            Method::TwmdgUnbiased => "twmdg-unbiased",
            Method::TwmdgBiased => "twmdg-biased",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected one of static-unbiased, static-biased, twmdg-unbiased, twmdg-biased)"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub walk: WalkConfig,
    pub sgns: SgnsParams,
    pub split: SplitSpec,
    /// Time bias used by `twmdg-biased`.
    pub biased_temporal: TemporalStrategy,
    /// Amount bias used by `twmdg-biased`.
    pub biased_weight: WeightStrategy,
    pub node2vec_p: f64,
    pub node2vec_q: f64,
    pub lambda: f64,
    pub classifier_epochs: usize,
    /// Permute the training labels before fitting (null-model runs).
    pub shuffle_train_labels: bool,
    pub seed: u64,
    /// Walk worker threads, 0 for all cores. Does not affect results.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            walk: WalkConfig::default(),
            sgns: SgnsParams::default(),
            split: SplitSpec::default(),
            biased_temporal: TemporalStrategy::BiasedRecent,
            biased_weight: WeightStrategy::BiasedRaw,
            node2vec_p: 1.0,
            node2vec_q: 1.0,
            lambda: 1e-4,
            classifier_epochs: 10,
            shuffle_train_labels: false,
            seed: 0,
            workers: 0,
        }
    }
}

impl PipelineConfig {
    /// Walk configuration actually used for `method`; seeds are derived from
    /// the pipeline seed.
    pub fn walk_for(&self, method: Method) -> WalkConfig {
        let mut walk = self.walk.clone();
        walk.seed = self.seed;
        match method {
            Method::TwmdgUnbiased | Method::StaticUnbiased | Method::StaticBiased => {
                walk.temporal = TemporalStrategy::Unbiased;
                walk.weighted = WeightStrategy::Unbiased;
            }
            Method::TwmdgBiased => {
                walk.temporal = self.biased_temporal;
                walk.weighted = self.biased_weight;
            }
        }
        walk
    }

    pub fn sgns_for(&self) -> SgnsParams {
        SgnsParams {
            seed: self.seed,
            ..self.sgns.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub auc: f64,
    pub ap: f64,
    pub n_train_pos: usize,
    pub n_train_neg: usize,
    pub n_test_pos: usize,
    pub n_test_neg: usize,
    pub n_skipped: usize,
    pub method: Method,
    pub config: PipelineConfig,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Walk corpus for `method` over `g`.
pub fn method_corpus(g: &Twmdg, method: Method, cfg: &PipelineConfig) -> Result<WalkCorpus, EvalError> {
    let walk = cfg.walk_for(method);
    let corpus = match method {
        Method::StaticUnbiased => generate_static_corpus(g, &walk, StaticWalkMode::Uniform, cfg.workers)?,
        Method::StaticBiased => generate_static_corpus(
            g,
            &walk,
            StaticWalkMode::Node2Vec {
                p: cfg.node2vec_p,
                q: cfg.node2vec_q,
            },
            cfg.workers,
        )?,
        Method::TwmdgUnbiased | Method::TwmdgBiased => generate_corpus(g, &walk, cfg.workers)?,
    };
    Ok(corpus)
}

fn distinct_pairs(edges: &[TemporalEdge]) -> Vec<(NodeId, NodeId)> {
    let mut seen = HashSet::new();
    edges
        .iter()
        .map(|e| (e.src, e.dst))
        .filter(|p| seen.insert(*p))
        .collect()
}

/// Artifacts of one pipeline run besides the report.
pub struct PipelineRun {
    pub report: EvalReport,
    pub corpus: WalkCorpus,
    pub embeddings: EmbeddingMatrix,
}

/// Split, embed the training graph, classify concatenated features and
/// score the held-out pairs.
pub fn run_pipeline(g: &Twmdg, method: Method, cfg: &PipelineConfig) -> Result<EvalReport, EvalError> {
    run_pipeline_full(g, method, cfg).map(|r| r.report)
}

pub fn run_pipeline_full(g: &Twmdg, method: Method, cfg: &PipelineConfig) -> Result<PipelineRun, EvalError> {
    let (train, test) = temporal_split(g.edges(), cfg.split)?;
    let train_ids: Vec<_> = train.iter().map(|e| e.id).collect();
    let train_graph = g.edge_subgraph(&train_ids);

    let corpus = method_corpus(&train_graph, method, cfg)?;
    let (emb, _) = train_embeddings(&corpus, &cfg.sgns_for())?;
    let embedded = |n: NodeId| emb.row_of(g.label(n)).is_some();

    let train_pos: Vec<_> = distinct_pairs(&train)
        .into_iter()
        .filter(|&(u, v)| embedded(u) && embedded(v))
        .collect();
    let mut n_skipped = 0;
    let test_pos: Vec<_> = distinct_pairs(&test)
        .into_iter()
        .filter(|&(u, v)| {
            let ok = embedded(u) && embedded(v);
            n_skipped += usize::from(!ok);
            ok
        })
        .collect();

    let mut forbidden: HashSet<(NodeId, NodeId)> = g.edges().iter().map(|e| (e.src, e.dst)).collect();
    let train_nodes: Vec<NodeId> = train_graph
        .labels()
        .iter()
        .filter_map(|l| g.node_by_label(l))
        .filter(|&n| embedded(n))
        .collect();
    let mut rng = stage_rng(cfg.seed, 0x4E45);
    let train_neg = sample_negative_pairs(&train_nodes, &forbidden, train_pos.len(), &mut rng)?;
    forbidden.extend(train_neg.iter().map(|p| (p.src, p.dst)));
    let test_neg = sample_negative_pairs(&train_nodes, &forbidden, test_pos.len(), &mut rng)?;

    let featurize = |pairs: &mut dyn Iterator<Item = (NodeId, NodeId, bool)>| -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (u, v, y) in pairs {
            let f = edge_features(&emb, g.label(u), g.label(v)).expect("endpoints checked above");
            xs.push(f);
            ys.push(y);
        }
        (xs, ys)
    };
    let (train_x, mut train_y) = featurize(
        &mut train_pos
            .iter()
            .map(|&(u, v)| (u, v, true))
            .chain(train_neg.iter().map(|p| (p.src, p.dst, false))),
    );
    if cfg.shuffle_train_labels {
        train_y.shuffle(&mut stage_rng(cfg.seed, 0x5348));
    }
    let (test_x, test_y) = featurize(
        &mut test_pos
            .iter()
            .map(|&(u, v)| (u, v, true))
            .chain(test_neg.iter().map(|p| (p.src, p.dst, false))),
    );

    let clf = train_linear_classifier(&train_x, &train_y, cfg.lambda, cfg.classifier_epochs, cfg.seed)?;
    let scores: Vec<f64> = test_x.iter().map(|x| clf.score(x)).collect();
    let report = EvalReport {
        auc: score_auc(&scores, &test_y)?,
        ap: score_ap(&scores, &test_y)?,
        n_train_pos: train_pos.len(),
        n_train_neg: train_neg.len(),
        n_test_pos: test_pos.len(),
        n_test_neg: test_neg.len(),
        n_skipped,
        method,
        config: cfg.clone(),
    };
    Ok(PipelineRun {
        report,
        corpus,
        embeddings: emb,
    })
}
