//! Command-line front end.
//!
//! Every subcommand accepts `--config <file>` with flat `key=value` lines
//! whose keys are the long flag names; explicit flags override the file.
//! Artifact-producing commands write the resolved settings next to the
//! artifact as `<output>.config`, which can be fed back through `--config`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::graph::Twmdg;
use crate::ingest::{self, CrawlCaps, CrawlOptions, FixtureProvider, RetryPolicy, TxFilter};
use crate::linkpred::{run_pipeline, run_pipeline_full, Method, PipelineConfig, SplitSpec};
use crate::skipgram::{train_embeddings, SgnsParams};
use crate::synth::{self, SynthConfig};
use crate::walk::{TemporalStrategy, WalkConfig, WalkCorpus, WeightStrategy};

#[derive(Parser, Debug)]
#[command(name = "twmdg", version, about = "Temporal weighted multidigraph embedding toolkit")]
#[command(args_override_self = true, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert Etherscan JSON pages or CSV into canonical CSV.
    Ingest(IngestArgs),
    /// Crawl a K-order neighbourhood from recorded fixtures or the live API.
    Crawl(CrawlArgs),
    /// Degree histogram and power-law fit.
    Stats(StatsArgs),
    /// Generate a walk corpus.
    Walk(WalkArgs),
    /// Train skip-gram embeddings on a walk corpus.
    Embed(EmbedArgs),
    /// Run the temporal link-prediction pipeline.
    Eval(EvalArgs),
    /// Generate a synthetic transaction network.
    Synth(SynthArgs),
    /// Vary one hyperparameter and tabulate AUC per method.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum InputFormat {
    Csv,
    Etherscan,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum TimeBias {
    Recent,
    Distant,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum AmountBias {
    Raw,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SweepParam {
    K,
    L,
    R,
    D,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct Common {
    /// Flat key=value file; keys are long flag names.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct FilterArgs {
    /// Keep failed transactions.
    #[arg(long)]
    keep_failed: bool,
    /// Keep zero-value transactions.
    #[arg(long)]
    keep_zero: bool,
    /// Keep contract creations (empty recipient).
    #[arg(long)]
    keep_creations: bool,
}

impl FilterArgs {
    fn filter(&self) -> TxFilter {
        TxFilter {
            require_success: !self.keep_failed,
            require_nonzero: !self.keep_zero,
            drop_missing_recipient: !self.keep_creations,
        }
    }
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct IngestArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long, value_enum, default_value = "etherscan")]
    format: InputFormat,
    /// Input files (one API page per file for `etherscan`).
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    input: Vec<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    filter: FilterArgs,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct CrawlArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    center: String,
    #[arg(long, default_value_t = 1)]
    k_in: usize,
    #[arg(long, default_value_t = 1)]
    k_out: usize,
    /// Directory of recorded pages; omit for live mode (needs ETHERSCAN_API_KEY).
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long, default_value = "https://api.etherscan.io/v2/api")]
    api_url: String,
    /// Requests per second in live mode.
    #[arg(long, default_value_t = 5.0)]
    rate: f64,
    #[arg(long, default_value_t = 10_000)]
    max_accounts: usize,
    #[arg(long, default_value_t = 100_000)]
    max_tx: usize,
    #[arg(long, default_value_t = 10_000)]
    page_size: u32,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    filter: FilterArgs,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct StatsArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    input: PathBuf,
    /// Lower cutoff for the power-law fit.
    #[arg(long, default_value_t = 1)]
    xmin: u64,
    /// Histogram CSV; printed to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Add log10 columns for direct plotting.
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
struct WalkFlags {
    /// Walk length l.
    #[arg(long = "l", default_value_t = 10)]
    l: usize,
    /// Walks per node r.
    #[arg(long = "r", default_value_t = 20)]
    r: usize,
    /// Time/amount balance.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "recent")]
    time_bias: TimeBias,
    #[arg(long, value_enum, default_value = "raw")]
    amount_bias: AmountBias,
    #[arg(long, default_value_t = 2)]
    min_emit: usize,
    /// node2vec return parameter.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// node2vec in-out parameter.
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Walk worker threads (0 = all cores); results do not depend on it.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    workers: usize,
}

impl WalkFlags {
    fn time(&self) -> TemporalStrategy {
        match self.time_bias {
            TimeBias::Recent => TemporalStrategy::BiasedRecent,
            TimeBias::Distant => TemporalStrategy::BiasedDistant,
        }
    }

    fn amount(&self) -> WeightStrategy {
        match self.amount_bias {
            AmountBias::Raw => WeightStrategy::BiasedRaw,
            AmountBias::Linear => WeightStrategy::BiasedLinear,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
struct SgnsFlags {
    /// Embedding dimension d.
    #[arg(long = "d", default_value_t = 128)]
    d: usize,
    /// Context window k.
    #[arg(long = "k", default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    lr: f64,
    #[arg(long, default_value_t = 1)]
    min_count: u64,
}

impl SgnsFlags {
    fn params(&self, seed: u64) -> SgnsParams {
        SgnsParams {
            dim: self.d,
            window: self.k,
            negatives: self.negatives,
            epochs: self.epochs,
            learning_rate: self.lr,
            min_count: self.min_count,
            seed,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
struct EvalFlags {
    #[arg(long, default_value = "twmdg-biased", value_parser = parse_method)]
    #[serde(serialize_with = "ser_display")]
    method: Method,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    /// L2 strength of the linear classifier.
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    #[arg(long, default_value_t = 10)]
    clf_epochs: usize,
    /// Permute training labels (null-model control).
    #[arg(long)]
    shuffle_labels: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn ser_display<S: serde::Serializer, T: std::fmt::Display>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct WalkArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "twmdg-biased", value_parser = parse_method)]
    #[serde(serialize_with = "ser_display")]
    method: Method,
    #[command(flatten)]
    #[serde(flatten)]
    walk: WalkFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct EmbedArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    sgns: SgnsFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct EvalArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    input: PathBuf,
    /// JSON report path; printed to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the corpus and embeddings next to the report.
    #[arg(long)]
    keep_artifacts: bool,
    #[command(flatten)]
    #[serde(flatten)]
    eval: EvalFlags,
    #[command(flatten)]
    #[serde(flatten)]
    walk: WalkFlags,
    #[command(flatten)]
    #[serde(flatten)]
    sgns: SgnsFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct SynthArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    output: PathBuf,
    /// Also write the planted chains (one per line, edge ids in hop order).
    #[arg(long)]
    planted: Option<PathBuf>,
    #[arg(long, default_value_t = 2_000)]
    nodes: usize,
    #[arg(long, default_value_t = 2.5)]
    gamma: f64,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    #[arg(long, default_value_t = 20_000)]
    edges: usize,
    #[arg(long, default_value_t = 200)]
    chains: usize,
    #[arg(long, default_value_t = 4)]
    chain_length: usize,
    #[arg(long, default_value_t = 0.7)]
    activity_span: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
struct SweepArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long)]
    input: PathBuf,
    /// Table CSV; printed to stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    vary: SweepParam,
    #[arg(long, required = true, value_delimiter = ',')]
    values: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_method,
          default_value = "static-unbiased,static-biased,twmdg-unbiased,twmdg-biased")]
    #[serde(serialize_with = "ser_methods")]
    methods: Vec<Method>,
    #[command(flatten)]
    #[serde(flatten)]
    eval: EvalFlags,
    #[command(flatten)]
    #[serde(flatten)]
    walk: WalkFlags,
    #[command(flatten)]
    #[serde(flatten)]
    sgns: SgnsFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn ser_methods<S: serde::Serializer>(v: &[Method], s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&v.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","))
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();

    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Splices `key=value` lines from `--config <file>` in front of the
/// explicit flags, so later (explicit) occurrences win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, Error> {
    let pos = argv.iter().position(|a| a == "--config");
    let Some(pos) = pos else {
        return Ok(argv);
    };
    let Some(path) = argv.get(pos + 1) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(path)?;
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("{}:{}: expected key=value", path.to_string_lossy(), i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match value {
            "true" => injected.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => {
                injected.push(OsString::from(format!("--{key}")));
                injected.push(OsString::from(value));
            }
        }
    }
    // argv[0] is the program, argv[1] the subcommand
    let mut out: Vec<OsString> = argv[..2.min(argv.len())].to_vec();
    out.extend(injected);
    out.extend(argv.into_iter().skip(2));
    Ok(out)
}

/// Flattens serialized arguments to sorted `key=value` lines.
fn resolved_config<T: Serialize>(args: &T) -> String {
    let value = serde_json::to_value(args).expect("arguments serialize");
    let mut lines = Vec::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let text = match v {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => s,
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|x| x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string()))
                    .collect::<Vec<_>>()
                    .join(","),
                other => other.to_string(),
            };
            lines.push(format!("{k}={text}"));
        }
    }
    lines.sort();
    lines.join("\n") + "\n"
}

fn log_and_save_config<T: Serialize>(args: &T, artifact: Option<&Path>) -> Result<(), Error> {
    let text = resolved_config(args);
    log::info!("resolved configuration:\n{}", text.trim_end());
    if let Some(path) = artifact {
        std::fs::write(config_path(path), text)?;
    }
    Ok(())
}

/// `<artifact>.config`
pub fn config_path(artifact: &Path) -> PathBuf {
    let mut os = artifact.as_os_str().to_owned();
    os.push(".config");
    PathBuf::from(os)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn load_graph(path: &Path) -> Result<Twmdg, Error> {
    let file = File::open(path)?;
    let parsed = ingest::parse_csv(BufReader::new(file), TxFilter::default())?;
    if parsed.rejected > 0 {
        log::info!("{} zero-value rows dropped", parsed.rejected);
    }
    Ok(Twmdg::from_records(&parsed.records)?)
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Crawl(a) => cmd_crawl(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Walk(a) => cmd_walk(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

fn cmd_ingest(a: IngestArgs) -> Result<(), Error> {
    log_and_save_config(&a, Some(&a.output))?;
    let filter = a.filter.filter();
    let records = match a.format {
        InputFormat::Csv => {
            let mut all = Vec::new();
            for path in &a.input {
                let parsed = ingest::parse_csv(BufReader::new(File::open(path)?), filter)?;
                all.extend(parsed.records);
            }
            all
        }
        InputFormat::Etherscan => {
            let mut txs = Vec::new();
            for path in &a.input {
                let body = std::fs::read_to_string(path)?;
                txs.extend(ingest::parse_etherscan_page(&body, filter)?);
            }
            ingest::to_records(&ingest::dedup_by_hash(txs))
        }
    };
    log::info!("writing {} records to {}", records.len(), a.output.display());
    ingest::write_csv(&records, create(&a.output)?)?;
    Ok(())
}

fn cmd_crawl(a: CrawlArgs) -> Result<(), Error> {
    log_and_save_config(&a, Some(&a.output))?;
    let opts = CrawlOptions {
        k_in: a.k_in,
        k_out: a.k_out,
        caps: CrawlCaps {
            max_accounts: a.max_accounts,
            max_tx_per_account: a.max_tx,
        },
        page_size: a.page_size,
        filter: a.filter.filter(),
        retry: RetryPolicy::default(),
    };
    let result = match &a.fixtures {
        Some(dir) => ingest::crawl_k_order(&FixtureProvider::new(dir), &a.center, &opts)?,
        None => {
            let client = ingest::EtherscanClient::from_env(a.api_url.clone(), a.rate)?;
            ingest::crawl_k_order(&client, &a.center, &opts)?
        }
    };
    for ev in &result.cap_events {
        log::warn!("cap reached: {ev:?}");
    }
    log::info!(
        "{} accounts fetched, {} transactions",
        result.fetched_accounts.len(),
        result.transactions.len()
    );
    ingest::write_csv(&ingest::to_records(&result.transactions), create(&a.output)?)?;
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<(), Error> {
    log_and_save_config(&a, a.output.as_deref())?;
    let g = load_graph(&a.input)?;
    if g.is_empty() {
        return Err(Error::Parse("graph has no nodes".into()));
    }
    let hist = g.degree_histogram(a.xmin);
    let mut text = String::from(if a.gnuplot {
        "degree,count,log10_degree,log10_count\n"
    } else {
        "degree,count\n"
    });
    for &(d, c) in &hist.bins {
        if a.gnuplot {
            let ld = if d > 0 { (d as f64).log10().to_string() } else { String::new() };
            text.push_str(&format!("{d},{c},{ld},{}\n", (c as f64).log10()));
        } else {
            text.push_str(&format!("{d},{c}\n"));
        }
    }
    match &hist.fit {
        Some(fit) => log::info!(
            "nodes={} edges={} power-law exponent={:.4} (xmin={}, tail={})",
            g.node_count(),
            g.edge_count(),
            fit.exponent,
            fit.xmin,
            fit.tail_size
        ),
        None => log::info!(
            "nodes={} edges={} power-law fit unavailable (fewer than 10 nodes with degree >= {})",
            g.node_count(),
            g.edge_count(),
            hist.xmin
        ),
    }
    match &a.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn walk_config(w: &WalkFlags, seed: u64) -> WalkConfig {
    WalkConfig {
        walk_length: w.l,
        walks_per_node: w.r,
        alpha: w.alpha,
        temporal: TemporalStrategy::Unbiased,
        weighted: WeightStrategy::Unbiased,
        min_emit_length: w.min_emit,
        seed,
    }
}

fn pipeline_config(eval: &EvalFlags, walk: &WalkFlags, sgns: &SgnsFlags, seed: u64) -> Result<PipelineConfig, Error> {
    Ok(PipelineConfig {
        walk: walk_config(walk, seed),
        sgns: sgns.params(seed),
        split: SplitSpec::new(eval.train_fraction)?,
        biased_temporal: walk.time(),
        biased_weight: walk.amount(),
        node2vec_p: walk.p,
        node2vec_q: walk.q,
        lambda: eval.lambda,
        classifier_epochs: eval.clf_epochs,
        shuffle_train_labels: eval.shuffle_labels,
        seed,
        workers: walk.workers,
    })
}

fn cmd_walk(a: WalkArgs) -> Result<(), Error> {
    log_and_save_config(&a, Some(&a.output))?;
    let g = load_graph(&a.input)?;
    let eval = EvalFlags {
        method: a.method,
        train_fraction: 0.5,
        lambda: 0.0,
        clf_epochs: 1,
        shuffle_labels: false,
    };
    let sgns = SgnsFlags {
        d: 1,
        k: 1,
        negatives: 1,
        epochs: 1,
        lr: 0.025,
        min_count: 1,
    };
    let cfg = pipeline_config(&eval, &a.walk, &sgns, a.seed)?;
    let corpus = crate::linkpred::method_corpus(&g, a.method, &cfg)?;
    log::info!("{} walks, {} tokens", corpus.len(), corpus.token_count());
    corpus.write(create(&a.output)?)?;
    Ok(())
}

fn cmd_embed(a: EmbedArgs) -> Result<(), Error> {
    log_and_save_config(&a, Some(&a.output))?;
    let corpus = WalkCorpus::read(BufReader::new(File::open(&a.corpus)?))?;
    let (emb, stats) = train_embeddings(&corpus, &a.sgns.params(a.seed))?;
    log::info!("per-epoch mean loss: {:?}", stats.epoch_loss);
    emb.write_text(create(&a.output)?)?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<(), Error> {
    log_and_save_config(&a, a.output.as_deref())?;
    let g = load_graph(&a.input)?;
    let cfg = pipeline_config(&a.eval, &a.walk, &a.sgns, a.seed)?;
    let run = run_pipeline_full(&g, a.eval.method, &cfg)?;
    let json = run.report.to_json();
    match &a.output {
        Some(path) => {
            std::fs::write(path, format!("{json}\n"))?;
            if a.keep_artifacts {
                let mut corpus_path = path.as_os_str().to_owned();
                corpus_path.push(".corpus");
                run.corpus.write(create(Path::new(&corpus_path))?)?;
                let mut emb_path = path.as_os_str().to_owned();
                emb_path.push(".emb");
                run.embeddings.write_text(create(Path::new(&emb_path))?)?;
            }
        }
        None => println!("{json}"),
    }
    log::info!("AUC={:.4} AP={:.4}", run.report.auc, run.report.ap);
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), Error> {
    log_and_save_config(&a, Some(&a.output))?;
    let cfg = SynthConfig {
        n_nodes: a.nodes,
        gamma: a.gamma,
        horizon: a.horizon,
        n_background_edges: a.edges,
        n_chains: a.chains,
        chain_length: a.chain_length,
        activity_span: a.activity_span,
        weight_mu: a.mu,
        weight_sigma: a.sigma,
        seed: a.seed,
    };
    let out = synth::generate(&cfg)?;
    ingest::write_csv(&out.graph.to_records(), create(&a.output)?)?;
    if let Some(path) = &a.planted {
        let mut w = create(path)?;
        for chain in &out.chains {
            let ids: Vec<String> = chain.edges.iter().map(|e| e.0.to_string()).collect();
            writeln!(w, "{}", ids.join(" "))?;
        }
        w.flush()?;
    }
    log::info!("{} nodes, {} edges, {} chains", out.graph.node_count(), out.graph.edge_count(), out.chains.len());
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Error> {
    log_and_save_config(&a, a.output.as_deref())?;
    let g = load_graph(&a.input)?;
    let mut table = String::from("value");
    for m in &a.methods {
        table.push(',');
        table.push_str(m.as_str());
    }
    table.push('\n');
    for &v in &a.values {
        let mut walk = a.walk.clone();
        let mut sgns = a.sgns.clone();
        match a.vary {
            SweepParam::K => sgns.k = v,
            SweepParam::L => walk.l = v,
            SweepParam::R => walk.r = v,
            SweepParam::D => sgns.d = v,
        }
        let cfg = pipeline_config(&a.eval, &walk, &sgns, a.seed)?;
        table.push_str(&v.to_string());
        for &m in &a.methods {
            let report = run_pipeline(&g, m, &cfg)?;
            log::info!("{:?}={v} {m}: AUC={:.4}", a.vary, report.auc);
            table.push_str(&format!(",{}", report.auc));
        }
        table.push('\n');
    }
    match &a.output {
        Some(path) => std::fs::write(path, table)?,
        None => print!("{table}"),
    }
    Ok(())
}
