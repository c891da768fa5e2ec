use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn twmdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twmdg"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("ETHERSCAN_API_KEY")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = twmdg(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(args: &[&str]) -> i32 {
    twmdg(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Small synthetic graph shared by several tests.
fn synth(dir: &Path) -> PathBuf {
    let out = dir.join("g.csv");
    ok(&["synth", "--output", s(&out), "--nodes", "150", "--edges", "1500", "--chains", "10", "--seed", "2"]);
    out
}

#[test]
fn no_arguments_prints_usage() {
    let out = twmdg(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["eval", "--no-such-flag"]), 1);
}

#[test]
fn error_categories_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["stats", "--input", s(&dir.path().join("missing.csv"))]), 3);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "from,to,value,timestamp\na,b,oops,1\n").unwrap();
    assert_eq!(code(&["stats", "--input", s(&bad)]), 2);
    let g = synth(dir.path());
    assert_eq!(code(&["eval", "--input", s(&g), "--train-fraction", "1.5"]), 5);
    let out = dir.path().join("live.csv");
    assert_eq!(code(&["crawl", "--center", "0xabc", "--output", s(&out)]), 4);
}

#[test]
fn synth_config_reproduces_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let first = synth(dir.path());
    let config = dir.path().join("g.csv.config");
    let text = std::fs::read_to_string(&config).unwrap();
    assert!(text.contains("nodes=150\n") && text.contains("seed=2\n"));
    let second = dir.path().join("again.csv");
    ok(&["synth", "--config", s(&config), "--output", s(&second)]);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    // explicit flags beat the file
    let third = dir.path().join("other.csv");
    ok(&["synth", "--config", s(&config), "--output", s(&third), "--seed", "3"]);
    assert_ne!(std::fs::read(&first).unwrap(), std::fs::read(&third).unwrap());
}

#[test]
fn stats_writes_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let g = synth(dir.path());
    let hist = dir.path().join("hist.csv");
    ok(&["stats", "--input", s(&g), "--output", s(&hist), "--gnuplot", "--xmin", "5"]);
    let text = std::fs::read_to_string(&hist).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "degree,count,log10_degree,log10_count");
    let total: u64 = lines.map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    let edges = std::fs::read_to_string(&g).unwrap();
    let accounts: std::collections::HashSet<&str> = edges.lines().skip(1).flat_map(|l| l.split(',').take(2)).collect();
    assert_eq!(total, accounts.len() as u64);
}

#[test]
fn ingest_and_crawl_from_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("page.csv");
    let page = fixtures().join("pages/filters.json");
    ok(&["ingest", "--input", s(&page), "--output", s(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains(",1,10,0xf1\n"));

    let crawled = dir.path().join("crawl.csv");
    let center = format!("0x{:0>40}", "c0");
    ok(&[
        "crawl", "--center", &center, "--k-in", "0", "--k-out", "1", "--fixtures",
        s(&fixtures().join("crawl")), "--page-size", "3", "--output", s(&crawled),
    ]);
    assert_eq!(std::fs::read_to_string(&crawled).unwrap().lines().count(), 5);
}

#[test]
fn walk_embed_eval_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let g = synth(dir.path());
    let corpus = dir.path().join("walks.txt");
    ok(&["walk", "--input", s(&g), "--output", s(&corpus), "--r", "2", "--workers", "3"]);
    let again = dir.path().join("walks2.txt");
    ok(&["walk", "--config", s(&dir.path().join("walks.txt.config")), "--output", s(&again), "--workers", "1"]);
    assert_eq!(std::fs::read(&corpus).unwrap(), std::fs::read(&again).unwrap());

    let emb = dir.path().join("emb.txt");
    ok(&["embed", "--corpus", s(&corpus), "--output", s(&emb), "--d", "8", "--epochs", "1"]);
    let header = std::fs::read_to_string(&emb).unwrap().lines().next().unwrap().to_string();
    assert!(header.ends_with(" 8"));

    let report = dir.path().join("report.json");
    let common = ["--d", "8", "--r", "2", "--epochs", "1"];
    let mut args = vec!["eval", "--input", s(&g), "--output", s(&report), "--method", "twmdg-unbiased"];
    args.extend(common);
    ok(&args);
    let json = std::fs::read_to_string(&report).unwrap();
    let keys = ["\"auc\"", "\"ap\"", "\"n_train_pos\"", "\"n_train_neg\"", "\"n_test_pos\"", "\"n_test_neg\"", "\"n_skipped\"", "\"method\"", "\"config\""];
    let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "key order: {json}");

    let table = dir.path().join("sweep.csv");
    let mut args = vec!["sweep", "--input", s(&g), "--output", s(&table), "--vary", "d", "--values", "4,8"];
    args.extend(["--r", "2", "--epochs", "1", "--methods", "static-unbiased,twmdg-biased"]);
    ok(&args);
    let text = std::fs::read_to_string(&table).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "value,static-unbiased,twmdg-biased");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("4,") && rows[2].starts_with("8,"));
}
