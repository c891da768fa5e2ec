//! Skip-gram with negative sampling over walk corpora.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rand::Rng;
use serde::Serialize;

use crate::error::SgnsError;
use crate::rng::stage_rng;
use crate::walk::WalkCorpus;

/// Logits are clamped to this magnitude before the sigmoid.
pub const MAX_LOGIT: f64 = 30.0;
/// Exponent applied to counts when building the noise distribution.
pub const NEGATIVE_POWER: f64 = 0.75;
/// Resampling attempts for a negative that hits the true context.
pub const NEGATIVE_RETRIES: usize = 8;
/// Final learning rate as a fraction of the initial one.
pub const MIN_LR_FRACTION: f64 = 1e-4;

#[inline]
fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-MAX_LOGIT, MAX_LOGIT);
    1.0 / (1.0 + (-x).exp())
}

/// `ln(sigmoid(x))` for a clamped logit, computed without cancellation.
#[inline]
fn log_sigmoid(x: f64) -> f64 {
    let x = x.clamp(-MAX_LOGIT, MAX_LOGIT);
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Corpus vocabulary with the negative-sampling distribution.
#[derive(Clone, Debug)]
pub struct Vocab {
    labels: Vec<String>,
    counts: Vec<u64>,
    /// Corpus token -> vocab row.
    token_map: Vec<Option<u32>>,
    /// Cumulative noise distribution, last entry is 1.
    noise_cdf: Vec<f64>,
}

impl Vocab {
    /// Counts tokens and drops those seen fewer than `min_count` times.
    /// Rows keep the corpus' first-appearance order.
    pub fn build(corpus: &WalkCorpus, min_count: u64) -> Result<Self, SgnsError> {
        let mut freq = vec![0u64; corpus.labels.len()];
        for walk in &corpus.walks {
            for &t in walk {
                freq[t as usize] += 1;
            }
        }
        let mut labels = Vec::new();
        let mut counts = Vec::new();
        let mut token_map = vec![None; freq.len()];
        for (token, &f) in freq.iter().enumerate() {
            if f > 0 && f >= min_count {
                token_map[token] = Some(labels.len() as u32);
                labels.push(corpus.labels[token].clone());
                counts.push(f);
            }
        }
        if labels.is_empty() {
            return Err(SgnsError::EmptyVocab);
        }
        let mass: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(NEGATIVE_POWER)).collect();
        let total: f64 = mass.iter().sum();
        let mut acc = 0.0;
        let mut noise_cdf: Vec<f64> = mass
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect();
        *noise_cdf.last_mut().unwrap() = 1.0;
        Ok(Self {
            labels,
            counts,
            token_map,
            noise_cdf,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn count(&self, label: &str) -> Option<u64> {
        self.labels.iter().position(|l| l == label).map(|i| self.counts[i])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Probability of drawing row `i` as a negative.
    pub fn noise_probability(&self, i: usize) -> f64 {
        if i == 0 {
            self.noise_cdf[0]
        } else {
            self.noise_cdf[i] - self.noise_cdf[i - 1]
        }
    }

    pub fn sample_negative<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.noise_cdf.partition_point(|&c| c <= u).min(self.len() - 1)
    }

    fn row(&self, token: u32) -> Option<u32> {
        self.token_map[token as usize]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SgnsParams {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for SgnsParams {
    fn default() -> Self {
        Self {
            dim: 128,
            window: 4,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 1,
            seed: 0,
        }
    }
}

impl SgnsParams {
    pub fn validate(&self) -> Result<(), SgnsError> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(SgnsError::InvalidParams(
                "dim, window, negatives and epochs must all be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(SgnsError::InvalidParams("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Input (`phi`) and output (`psi`) vectors, row-major, one row per label.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl EmbeddingMatrix {
    /// `phi` uniform in `(-0.5/d, 0.5/d)`, `psi` zero.
    pub fn init<R: Rng + ?Sized>(labels: Vec<String>, dim: usize, rng: &mut R) -> Self {
        let half = 0.5 / dim as f64;
        let phi = (0..labels.len() * dim).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * half).collect();
        let psi = vec![0.0; labels.len() * dim];
        Self::from_parts(labels, dim, phi, psi)
    }

    pub fn from_parts(labels: Vec<String>, dim: usize, phi: Vec<f64>, psi: Vec<f64>) -> Self {
        assert_eq!(phi.len(), labels.len() * dim);
        assert_eq!(psi.len(), labels.len() * dim);
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Self {
            labels,
            index,
            dim,
            phi,
            psi,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Input vector of `label`, if it was embedded.
    pub fn vector(&self, label: &str) -> Option<&[f64]> {
        self.row_of(label).map(|i| self.input(i))
    }

    pub fn input(&self, row: usize) -> &[f64] {
        &self.phi[row * self.dim..(row + 1) * self.dim]
    }

    pub fn output(&self, row: usize) -> &[f64] {
        &self.psi[row * self.dim..(row + 1) * self.dim]
    }

    pub fn input_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.phi[row * self.dim..(row + 1) * self.dim]
    }

    pub fn output_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.psi[row * self.dim..(row + 1) * self.dim]
    }

    pub fn all_finite(&self) -> bool {
        self.phi.iter().chain(&self.psi).all(|x| x.is_finite())
    }

    /// Text format: `<n> <d>` header, then `<label> <v1> ... <vd>` per row.
    /// Floats use the shortest representation that reads back bit-exactly.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, label) in self.labels.iter().enumerate() {
            out.write_all(label.as_bytes())?;
            for x in self.input(i) {
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    /// Reads [`EmbeddingMatrix::write_text`] output. Output vectors are not
    /// stored in the file and come back as zeros.
    pub fn read_text<R: BufRead>(input: R) -> io::Result<Self> {
        let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty embedding file".into()))??;
        let mut head = header.split_whitespace().map(str::parse::<usize>);
        let (n, dim) = match (head.next(), head.next()) {
            (Some(Ok(n)), Some(Ok(d))) => (n, d),
            _ => return Err(bad(format!("bad header `{header}`"))),
        };
        let mut labels = Vec::with_capacity(n);
        let mut phi = Vec::with_capacity(n * dim);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let label = parts.next().unwrap_or_default().to_string();
            let before = phi.len();
            for p in parts {
                phi.push(p.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?);
            }
            if phi.len() - before != dim {
                return Err(bad(format!("line {}: expected {dim} values", lineno + 2)));
            }
            labels.push(label);
        }
        if labels.len() != n {
            return Err(bad(format!("header promises {n} rows, found {}", labels.len())));
        }
        let psi = vec![0.0; phi.len()];
        Ok(Self::from_parts(labels, dim, phi, psi))
    }
}

/// Loss and gradients of one (center, context, negatives) example.
#[derive(Clone, Debug, PartialEq)]
pub struct SgnsGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// `-ln s(phi.psi_o) - sum ln s(-phi.psi_n)` and its gradient with respect
/// to every vector involved.
pub fn sgns_gradient(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGradient {
    let d = center.len();
    let mut g_center = vec![0.0; d];
    let s_pos = dot(center, context);
    let mut loss = -log_sigmoid(s_pos);
    // d/ds of -ln s(s) is s(s) - 1
    let c_pos = sigmoid(s_pos) - 1.0;
    for k in 0..d {
        g_center[k] += c_pos * context[k];
    }
    let g_context = center.iter().map(|x| c_pos * x).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let s = dot(center, neg);
        loss -= log_sigmoid(-s);
        let c = sigmoid(s);
        for k in 0..d {
            g_center[k] += c * neg[k];
        }
        g_negs.push(center.iter().map(|x| c * x).collect());
    }
    SgnsGradient {
        loss,
        center: g_center,
        context: g_context,
        negatives: g_negs,
    }
}

/// Reusable buffers for [`sgns_step`].
#[derive(Default)]
pub struct StepBuffers {
    center_grad: Vec<f64>,
    center_old: Vec<f64>,
    coeffs: Vec<f64>,
}

/// One gradient-descent step on a single training example. All gradients
/// are taken at the current parameters before any row is written, so
/// repeated negatives accumulate exactly. Returns the pre-update loss.
pub fn sgns_step(
    emb: &mut EmbeddingMatrix,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
    buf: &mut StepBuffers,
) -> f64 {
    let d = emb.dim;
    buf.center_old.clear();
    buf.center_old.extend_from_slice(emb.input(center));
    buf.center_grad.clear();
    buf.center_grad.resize(d, 0.0);
    buf.coeffs.clear();

    let s_pos = dot(&buf.center_old, emb.output(context));
    let mut loss = -log_sigmoid(s_pos);
    buf.coeffs.push(sigmoid(s_pos) - 1.0);
    for &n in negatives {
        let s = dot(&buf.center_old, emb.output(n));
        loss -= log_sigmoid(-s);
        buf.coeffs.push(sigmoid(s));
    }
    if lr == 0.0 {
        return loss;
    }

    for (j, &target) in std::iter::once(&context).chain(negatives).enumerate() {
        let c = buf.coeffs[j];
        for (g, &o) in buf.center_grad.iter_mut().zip(emb.output(target)) {
            *g += c * o;
        }
    }
    for (j, &target) in std::iter::once(&context).chain(negatives).enumerate() {
        let step = lr * buf.coeffs[j];
        for (o, &x) in emb.output_mut(target).iter_mut().zip(&buf.center_old) {
            *o -= step * x;
        }
    }
    for (x, g) in emb.input_mut(center).iter_mut().zip(&buf.center_grad) {
        *x -= lr * g;
    }
    loss
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainStats {
    /// Mean loss per trained pair, one entry per epoch.
    pub epoch_loss: Vec<f64>,
    pub pairs_per_epoch: u64,
}

/// Trains input/output vectors over every (center, context) pair within a
/// fixed window of `params.window` positions on each side.
///
/// Single-threaded; the result depends only on the corpus and `params.seed`.
pub fn train_embeddings(corpus: &WalkCorpus, params: &SgnsParams) -> Result<(EmbeddingMatrix, TrainStats), SgnsError> {
    params.validate()?;
    let vocab = Vocab::build(corpus, params.min_count)?;
    let walks: Vec<Vec<usize>> = corpus
        .walks
        .iter()
        .map(|w| w.iter().filter_map(|&t| vocab.row(t)).map(|r| r as usize).collect())
        .collect();

    let k = params.window;
    let pairs_per_epoch: u64 = walks
        .iter()
        .map(|w| {
            let n = w.len();
            (0..n).map(|i| (i.min(k) + (n - 1 - i).min(k)) as u64).sum::<u64>()
        })
        .sum();
    let total_pairs = pairs_per_epoch * params.epochs as u64;

    let mut init_rng = stage_rng(params.seed, 0);
    let mut emb = EmbeddingMatrix::init(vocab.labels.clone(), params.dim, &mut init_rng);
    let mut rng = stage_rng(params.seed, 1);
    let mut buf = StepBuffers::default();
    let mut negs = Vec::with_capacity(params.negatives);
    let mut stats = TrainStats {
        epoch_loss: Vec::with_capacity(params.epochs),
        pairs_per_epoch,
    };

    let mut done: u64 = 0;
    for _ in 0..params.epochs {
        let mut epoch_loss = 0.0;
        for walk in &walks {
            let n = walk.len();
            for i in 0..n {
                let lo = i.saturating_sub(k);
                let hi = (i + k).min(n - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let (center, context) = (walk[i], walk[j]);
                    negs.clear();
                    for _ in 0..params.negatives {
                        let mut drawn = None;
                        for _ in 0..NEGATIVE_RETRIES {
                            let cand = vocab.sample_negative(&mut rng);
                            if cand != context {
                                drawn = Some(cand);
                                break;
                            }
                        }
                        negs.extend(drawn);
                    }
                    let progress = done as f64 / total_pairs.max(1) as f64;
                    let lr = params.learning_rate * (1.0 - (1.0 - MIN_LR_FRACTION) * progress);
                    epoch_loss += sgns_step(&mut emb, center, context, &negs, lr, &mut buf);
                    done += 1;
                }
            }
        }
        stats.epoch_loss.push(if pairs_per_epoch > 0 {
            epoch_loss / pairs_per_epoch as f64
        } else {
            0.0
        });
    }
    Ok((emb, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::task_rng;

    fn corpus(lines: &[&str]) -> WalkCorpus {
        WalkCorpus::read(lines.join("\n").as_bytes()).unwrap()
    }

    #[test]
    fn vocab_counts_and_threshold() {
        let c = corpus(&["A B A"]);
        let v = Vocab::build(&c, 1).unwrap();
        assert_eq!(v.count("A"), Some(2));
        assert_eq!(v.count("B"), Some(1));
        let v2 = Vocab::build(&c, 2).unwrap();
        assert_eq!(v2.labels(), &["A"]);
        assert_eq!(Vocab::build(&c, 3).unwrap_err(), SgnsError::EmptyVocab);
        assert_eq!(Vocab::build(&WalkCorpus::default(), 1).unwrap_err(), SgnsError::EmptyVocab);
    }

    #[test]
    fn noise_mass_follows_three_quarter_power() {
        let mut line = vec!["x"; 16];
        line.push("y");
        let v = Vocab::build(&corpus(&[&line.join(" ")]), 1).unwrap();
        let ratio = v.noise_probability(0) / v.noise_probability(1);
        assert!((ratio - 8.0).abs() < 1e-12);
        let total: f64 = (0..v.len()).map(|i| v.noise_probability(i)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_vectors_give_two_ln_two() {
        let mut emb = EmbeddingMatrix::from_parts(vec!["a".into(), "b".into(), "c".into()], 4, vec![0.0; 12], vec![0.0; 12]);
        let loss = sgns_step(&mut emb, 0, 1, &[2], 0.1, &mut StepBuffers::default());
        assert!((loss - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let mut rng = task_rng(1, 0, 0);
        let labels: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let phi: Vec<f64> = (0..16).map(|_| rng.random::<f64>() - 0.5).collect();
        let psi: Vec<f64> = (0..16).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut emb = EmbeddingMatrix::from_parts(labels, 4, phi, psi);
        let before = emb.clone();
        let loss = sgns_step(&mut emb, 0, 1, &[2, 3], 0.0, &mut StepBuffers::default());
        assert!(loss.is_finite() && loss > 0.0);
        assert_eq!(emb, before);
    }

    #[test]
    fn step_matches_gradient_function() {
        let mut rng = task_rng(2, 0, 0);
        let d = 6;
        let labels: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let phi: Vec<f64> = (0..4 * d).map(|_| rng.random::<f64>() - 0.5).collect();
        let psi: Vec<f64> = (0..4 * d).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut emb = EmbeddingMatrix::from_parts(labels, d, phi, psi);
        let grad = sgns_gradient(emb.input(0), emb.output(1), &[emb.output(2), emb.output(3)]);
        let before = emb.clone();
        let lr = 0.1;
        let loss = sgns_step(&mut emb, 0, 1, &[2, 3], lr, &mut StepBuffers::default());
        assert!((loss - grad.loss).abs() < 1e-12);
        for k in 0..d {
            assert!((emb.input(0)[k] - (before.input(0)[k] - lr * grad.center[k])).abs() < 1e-12);
            assert!((emb.output(1)[k] - (before.output(1)[k] - lr * grad.context[k])).abs() < 1e-12);
            assert!((emb.output(3)[k] - (before.output(3)[k] - lr * grad.negatives[1][k])).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let big = vec![100.0; 3];
        let g = sgns_gradient(&big, &big, &[&big]);
        assert!(g.loss.is_finite());
        assert!(g.center.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn training_shape_and_initialization() {
        let c = corpus(&["a b c d", "b c d e", "e a"]);
        let params = SgnsParams { dim: 8, epochs: 1, ..Default::default() };
        let (emb, stats) = train_embeddings(&c, &params).unwrap();
        assert_eq!(emb.len(), 5);
        assert_eq!(emb.dim(), 8);
        assert!(emb.all_finite());
        assert_eq!(stats.epoch_loss.len(), 1);
        // 4-token walks with window 4: 12 pairs each; 2-token walk: 2
        assert_eq!(stats.pairs_per_epoch, 26);

        let fresh = EmbeddingMatrix::init(vec!["x".into(); 1000], 16, &mut task_rng(0, 0, 0));
        let bound = 0.5 / 16.0;
        let inputs: Vec<f64> = (0..1000).flat_map(|r| fresh.input(r).to_vec()).collect();
        assert!(inputs.iter().all(|x| x.abs() < bound));
        let mean = inputs.iter().sum::<f64>() / inputs.len() as f64;
        assert!(mean.abs() < 1e-3);
        assert!((0..1000).all(|r| fresh.output(r).iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let c = corpus(&["a b c d", "b c d e"]);
        let (emb, _) = train_embeddings(&c, &SgnsParams { dim: 5, epochs: 2, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        emb.write_text(&mut buf).unwrap();
        let back = EmbeddingMatrix::read_text(&buf[..]).unwrap();
        assert_eq!(back.labels(), emb.labels());
        for i in 0..emb.len() {
            assert_eq!(back.input(i), emb.input(i));
        }
        assert!(String::from_utf8(buf).unwrap().starts_with("5 5\n"));
    }

    #[test]
    fn invalid_params_rejected() {
        let c = corpus(&["a b"]);
        assert!(train_embeddings(&c, &SgnsParams { dim: 0, ..Default::default() }).is_err());
        assert!(train_embeddings(&c, &SgnsParams { learning_rate: 0.0, ..Default::default() }).is_err());
    }
}
