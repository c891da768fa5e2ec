//! Transaction ingestion: canonical CSV, Etherscan-style JSON pages and a
//! breadth-first K-order crawler over an account-transactions provider.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::Deserialize;

use crate::error::IngestError;
use crate::graph::TxRecord;

/// Record filters applied while parsing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TxFilter {
    pub require_success: bool,
    pub require_nonzero: bool,
    pub drop_missing_recipient: bool,
}

impl Default for TxFilter {
    fn default() -> Self {
        Self {
            require_success: true,
            require_nonzero: true,
            drop_missing_recipient: true,
        }
    }
}

impl TxFilter {
    pub const NONE: TxFilter = TxFilter {
        require_success: false,
        require_nonzero: false,
        drop_missing_recipient: false,
    };

    pub fn accepts(&self, tx: &RawTransaction) -> bool {
        !(self.require_success && !tx.succeeded())
            && !(self.require_nonzero && tx.value_wei.is_zero())
            && !(self.drop_missing_recipient && tx.to.is_empty())
    }
}

// ---------------------------------------------------------------------------
// canonical CSV

const HEADER: [&str; 4] = ["from", "to", "value", "timestamp"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvParse {
    pub records: Vec<TxRecord>,
    /// Rows dropped by the filter (zero value).
    pub rejected: usize,
}

/// Reads `from,to,value,timestamp[,txhash]` rows; `value` is in Ether.
/// Rows with a zero value are dropped when `filter.require_nonzero` is set.
pub fn parse_csv<R: Read>(input: R, filter: TxFilter) -> Result<CsvParse, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(csv_error(e)),
        None => return Err(IngestError::MissingHeader),
    };
    let cols: Vec<String> = header.iter().map(|c| c.to_ascii_lowercase()).collect();
    let has_hash = match cols.len() {
        4 => false,
        5 if cols[4] == "txhash" => true,
        _ => return Err(IngestError::MissingHeader),
    };
    if cols[..4] != HEADER {
        return Err(IngestError::MissingHeader);
    }

    let mut out = CsvParse::default();
    for row in rows {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() == 1 && row[0].is_empty() {
            continue;
        }
        let expected = if has_hash { 5 } else { 4 };
        if row.len() != expected {
            return Err(IngestError::Csv {
                line,
                message: format!("expected {expected} fields, found {}", row.len()),
            });
        }
        let weight: f64 = row[2].parse().ok().filter(|w: &f64| w.is_finite() && *w >= 0.0).ok_or_else(|| {
            IngestError::Csv {
                line,
                message: format!("bad value `{}`", &row[2]),
            }
        })?;
        let timestamp: u64 = row[3].parse().map_err(|_| IngestError::Csv {
            line,
            message: format!("bad timestamp `{}`", &row[3]),
        })?;
        if row[0].is_empty() || row[1].is_empty() {
            return Err(IngestError::Csv {
                line,
                message: "empty address".into(),
            });
        }
        if filter.require_nonzero && weight == 0.0 {
            out.rejected += 1;
            continue;
        }
        let tx_hash = if has_hash && !row[4].is_empty() {
            Some(row[4].to_string())
        } else {
            None
        };
        out.records.push(TxRecord {
            src: row[0].to_string(),
            dst: row[1].to_string(),
            weight,
            timestamp,
            tx_hash,
        });
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> IngestError {
    IngestError::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

/// Canonical writer: LF line endings, header always present, `txhash`
/// column only when some record carries a hash. Values use the shortest
/// decimal that parses back to the same `f64`.
pub fn write_csv<W: Write>(records: &[TxRecord], out: W) -> Result<(), IngestError> {
    let with_hash = records.iter().any(|r| r.tx_hash.is_some());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| IngestError::Io(e.into());
    if with_hash {
        w.write_record(["from", "to", "value", "timestamp", "txhash"]).map_err(io)?;
    } else {
        w.write_record(HEADER).map_err(io)?;
    }
    for r in records {
        let value = r.weight.to_string();
        let ts = r.timestamp.to_string();
        if with_hash {
            w.write_record([&r.src, &r.dst, &value, &ts, r.tx_hash.as_deref().unwrap_or("")])
                .map_err(io)?;
        } else {
            w.write_record([&r.src, &r.dst, &value, &ts]).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Etherscan-compatible JSON

/// One transfer as reported by the account-transactions endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTransaction {
    pub tx_hash: String,
    pub from: String,
    /// Empty for contract creations.
    pub to: String,
    pub value_wei: BigUint,
    pub timestamp: u64,
    pub is_error: bool,
    /// `txreceipt_status`; `None` when the endpoint leaves it blank
    /// (blocks before receipts carried a status).
    pub receipt_ok: Option<bool>,
}

impl RawTransaction {
    pub fn succeeded(&self) -> bool {
        !self.is_error && self.receipt_ok != Some(false)
    }

    /// Lowercased addresses, value converted to Ether.
    pub fn to_record(&self) -> TxRecord {
        TxRecord {
            src: self.from.to_lowercase(),
            dst: self.to.to_lowercase(),
            weight: wei_to_ether(&self.value_wei),
            timestamp: self.timestamp,
            tx_hash: Some(self.tx_hash.clone()),
        }
    }
}

#[derive(Deserialize)]
struct ApiEnvelope {
    status: String,
    message: String,
    result: serde_json::Value,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ApiTx {
    hash: String,
    from: String,
    #[serde(default)]
    to: String,
    value: String,
    time_stamp: String,
    #[serde(default)]
    is_error: String,
    #[serde(default, rename = "txreceipt_status")]
    txreceipt_status: String,
}

/// Parses one API page and applies `filter`.
///
/// `status == "0"` with message "No transactions found" is an empty page;
/// any other non-"1" status is an API error.
pub fn parse_etherscan_page(json: &str, filter: TxFilter) -> Result<Vec<RawTransaction>, IngestError> {
    Ok(parse_page_unfiltered(json)?
        .into_iter()
        .filter(|tx| filter.accepts(tx))
        .collect())
}

fn parse_page_unfiltered(json: &str) -> Result<Vec<RawTransaction>, IngestError> {
    let env: ApiEnvelope = serde_json::from_str(json).map_err(|e| IngestError::Json(e.to_string()))?;
    if env.status != "1" {
        if env.status == "0" && env.message.starts_with("No transactions found") {
            return Ok(Vec::new());
        }
        let detail = match &env.result {
            serde_json::Value::String(s) => format!("{}: {s}", env.message),
            _ => env.message.clone(),
        };
        return Err(IngestError::Api {
            status: env.status,
            message: detail,
        });
    }
    let rows: Vec<ApiTx> = serde_json::from_value(env.result).map_err(|e| IngestError::Json(e.to_string()))?;
    rows.into_iter()
        .map(|row| {
            let value_wei = row
                .value
                .parse::<BigUint>()
                .map_err(|_| IngestError::Json(format!("tx {}: bad value `{}`", row.hash, row.value)))?;
            let timestamp = row
                .time_stamp
                .parse::<u64>()
                .map_err(|_| IngestError::Json(format!("tx {}: bad timeStamp `{}`", row.hash, row.time_stamp)))?;
            if row.hash.is_empty() || row.from.is_empty() {
                return Err(IngestError::Json("transaction without hash or sender".into()));
            }
            let receipt_ok = match row.txreceipt_status.as_str() {
                "" => None,
                s => Some(s == "1"),
            };
            Ok(RawTransaction {
                tx_hash: row.hash,
                from: row.from,
                to: row.to,
                value_wei,
                timestamp,
                is_error: row.is_error != "0" && !row.is_error.is_empty(),
                receipt_ok,
            })
        })
        .collect()
}

/// `wei / 10^18` rounded to the nearest `f64`, ties to even.
pub fn wei_to_ether(wei: &BigUint) -> f64 {
    if wei.is_zero() {
        return 0.0;
    }
    let denom = BigUint::from(10u32).pow(18);
    // scale so the integer quotient has exactly 64 significant bits
    let shift = 63 + denom.bits() as i64 - wei.bits() as i64;
    let (num, den) = if shift >= 0 {
        (wei << shift as usize, denom)
    } else {
        (wei.clone(), denom << (-shift) as usize)
    };
    let (mut q, mut r) = (&num / &den, &num % &den);
    let mut exp = -shift;
    if q.bits() > 64 {
        // quotient landed one bit wide; fold the low bit into the remainder
        if q.bit(0) {
            r += 1u32;
        }
        q >>= 1usize;
        exp += 1;
    } else if q.bits() < 64 {
        q = (q << 1usize) + ((&r << 1usize) / &den);
        r = (&r << 1usize) % &den;
        exp -= 1;
    }
    let q = q.to_u64().expect("64-bit quotient");
    let sticky = !r.is_zero();
    let mut mantissa = q >> 11;
    let low = q & 0x7ff;
    let half = 0x400;
    if low > half || (low == half && (sticky || mantissa & 1 == 1)) {
        mantissa += 1;
    }
    mantissa as f64 * 2f64.powi((exp + 11) as i32)
}

// ---------------------------------------------------------------------------
// crawling

/// Source of account transaction pages. Implementations return the raw
/// JSON body of page `page` (1-based) with `offset` rows per page.
pub trait AccountTxProvider {
    fn fetch_page(&self, address: &str, page: u32, offset: u32) -> Result<String, IngestError>;
}

/// Bounds on crawl size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrawlCaps {
    pub max_accounts: usize,
    pub max_tx_per_account: usize,
}

impl Default for CrawlCaps {
    fn default() -> Self {
        Self {
            max_accounts: 10_000,
            max_tx_per_account: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 5,
            base_delay: Duration::from_secs(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrawlOptions {
    pub k_in: usize,
    pub k_out: usize,
    pub caps: CrawlCaps,
    pub page_size: u32,
    pub filter: TxFilter,
    pub retry: RetryPolicy,
}

impl Default for CrawlOptions {
    fn default() -> Self {
        Self {
            k_in: 1,
            k_out: 1,
            caps: CrawlCaps::default(),
            page_size: 10_000,
            filter: TxFilter::default(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CapEvent {
    AccountLimit { skipped: String },
    TxLimit { account: String, kept: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrawlResult {
    /// Unique by hash, in first-fetched order.
    pub transactions: Vec<RawTransaction>,
    /// Accounts whose pages were fetched, in fetch order.
    pub fetched_accounts: Vec<String>,
    pub cap_events: Vec<CapEvent>,
}

fn with_retry<T>(policy: RetryPolicy, mut op: impl FnMut() -> Result<T, IngestError>) -> Result<T, IngestError> {
    let mut delay = policy.base_delay;
    let mut attempt = 1;
    loop {
        match op() {
            Err(IngestError::Transport(msg)) if attempt < policy.attempts => {
                log::warn!("transport failure (attempt {attempt}/{}): {msg}", policy.attempts);
                std::thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            other => return other,
        }
    }
}

struct Crawler<'a, P: AccountTxProvider + ?Sized> {
    provider: &'a P,
    opts: &'a CrawlOptions,
    cache: HashMap<String, Vec<RawTransaction>>,
    seen_hashes: HashSet<String>,
    result: CrawlResult,
}

impl<P: AccountTxProvider + ?Sized> Crawler<'_, P> {
    /// Transactions of `account`, fetching on first use. `None` once the
    /// account cap is exhausted.
    fn account(&mut self, account: &str) -> Result<Option<&[RawTransaction]>, IngestError> {
        if !self.cache.contains_key(account) {
            if self.cache.len() >= self.opts.caps.max_accounts {
                self.result.cap_events.push(CapEvent::AccountLimit {
                    skipped: account.to_string(),
                });
                return Ok(None);
            }
            let txs = self.fetch_all(account)?;
            for tx in &txs {
                if self.seen_hashes.insert(tx.tx_hash.clone()) {
                    self.result.transactions.push(tx.clone());
                }
            }
            self.result.fetched_accounts.push(account.to_string());
            self.cache.insert(account.to_string(), txs);
        }
        Ok(self.cache.get(account).map(Vec::as_slice))
    }

    fn fetch_all(&mut self, account: &str) -> Result<Vec<RawTransaction>, IngestError> {
        let cap = self.opts.caps.max_tx_per_account;
        let mut kept = Vec::new();
        let mut page = 1;
        loop {
            let body = with_retry(self.opts.retry, || self.provider.fetch_page(account, page, self.opts.page_size))?;
            let rows = parse_page_unfiltered(&body)?;
            let full_page = rows.len() as u32 >= self.opts.page_size;
            kept.extend(rows.into_iter().filter(|tx| self.opts.filter.accepts(tx)));
            if kept.len() >= cap {
                if kept.len() > cap || full_page {
                    self.result.cap_events.push(CapEvent::TxLimit {
                        account: account.to_string(),
                        kept: cap,
                    });
                }
                kept.truncate(cap);
                break;
            }
            if !full_page {
                break;
            }
            page += 1;
        }
        Ok(kept)
    }

    fn expand(&mut self, center: &str, depth_limit: usize, outward: bool) -> Result<(), IngestError> {
        let mut depth: HashMap<String, usize> = HashMap::from([(center.to_string(), 0)]);
        let mut queue = VecDeque::from([center.to_string()]);
        while let Some(acct) = queue.pop_front() {
            let d = depth[&acct];
            let Some(txs) = self.account(&acct)? else {
                continue;
            };
            if d >= depth_limit {
                continue;
            }
            let next: Vec<String> = txs
                .iter()
                .filter_map(|tx| {
                    let (from, to) = (tx.from.to_lowercase(), tx.to.to_lowercase());
                    match outward {
                        true if from == acct && !to.is_empty() => Some(to),
                        false if to == acct => Some(from),
                        _ => None,
                    }
                })
                .collect();
            for n in next {
                if !depth.contains_key(&n) {
                    depth.insert(n.clone(), d + 1);
                    queue.push_back(n);
                }
            }
        }
        Ok(())
    }
}

/// Breadth-first K-order crawl. Accounts up to `k_out` hops downstream and
/// `k_in` hops upstream of `center` have all their pages fetched; the
/// frontier only advances along retained (filtered) transactions.
pub fn crawl_k_order<P: AccountTxProvider + ?Sized>(
    provider: &P,
    center: &str,
    opts: &CrawlOptions,
) -> Result<CrawlResult, IngestError> {
    let center = center.to_lowercase();
    let mut crawler = Crawler {
        provider,
        opts,
        cache: HashMap::new(),
        seen_hashes: HashSet::new(),
        result: CrawlResult::default(),
    };
    crawler.expand(&center, opts.k_out, true)?;
    crawler.expand(&center, opts.k_in, false)?;
    Ok(crawler.result)
}

/// Drops repeated hashes, keeping the first occurrence.
pub fn dedup_by_hash(txs: Vec<RawTransaction>) -> Vec<RawTransaction> {
    let mut seen = HashSet::new();
    txs.into_iter().filter(|t| seen.insert(t.tx_hash.clone())).collect()
}

/// Converts crawled transactions to graph records, oldest first (ties keep
/// crawl order).
pub fn to_records(txs: &[RawTransaction]) -> Vec<TxRecord> {
    let mut recs: Vec<TxRecord> = txs.iter().map(RawTransaction::to_record).collect();
    recs.sort_by_key(|r| r.timestamp);
    recs
}

/// Provider backed by recorded pages in a directory:
/// `<dir>/<address>_<page>.json` (lowercase address). A missing file reads
/// as an empty result page.
pub struct FixtureProvider {
    dir: PathBuf,
}

impl FixtureProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

pub const EMPTY_PAGE: &str = r#"{"status":"0","message":"No transactions found","result":[]}"#;

impl AccountTxProvider for FixtureProvider {
    fn fetch_page(&self, address: &str, page: u32, _offset: u32) -> Result<String, IngestError> {
        let path = self.dir.join(format!("{}_{page}.json", address.to_lowercase()));
        match std::fs::read_to_string(&path) {
            Ok(body) => Ok(body),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(EMPTY_PAGE.to_string()),
            Err(e) => Err(e.into()),
        }
    }
}

/// Environment variable holding the API key for live crawls.
pub const API_KEY_ENV: &str = "ETHERSCAN_API_KEY";

/// Live client for the `account/txlist` endpoint with a global request-rate
/// limit.
pub struct EtherscanClient {
    base_url: String,
    api_key: String,
    chain_id: u64,
    min_interval: Duration,
    last_request: Mutex<Option<Instant>>,
    agent: ureq::Agent,
}

impl EtherscanClient {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, requests_per_second: f64) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: api_key.into(),
            chain_id: 1,
            min_interval: Duration::from_secs_f64(1.0 / requests_per_second.max(1e-3)),
            last_request: Mutex::new(None),
            agent: ureq::AgentBuilder::new().timeout(Duration::from_secs(30)).build(),
        }
    }

    /// Reads the key from [`API_KEY_ENV`].
    pub fn from_env(base_url: impl Into<String>, requests_per_second: f64) -> Result<Self, IngestError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| IngestError::Api {
            status: "0".into(),
            message: format!("{API_KEY_ENV} is not set"),
        })?;
        Ok(Self::new(base_url, key, requests_per_second))
    }

    fn throttle(&self) {
        let mut last = self.last_request.lock().unwrap();
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

impl AccountTxProvider for EtherscanClient {
    fn fetch_page(&self, address: &str, page: u32, offset: u32) -> Result<String, IngestError> {
        self.throttle();
        let resp = self
            .agent
            .get(&self.base_url)
            .query("chainid", &self.chain_id.to_string())
            .query("module", "account")
            .query("action", "txlist")
            .query("address", address)
            .query("startblock", "0")
            .query("endblock", "99999999")
            .query("page", &page.to_string())
            .query("offset", &offset.to_string())
            .query("sort", "asc")
            .query("apikey", &self.api_key)
            .call();
        match resp {
            Ok(r) => r.into_string().map_err(|e| IngestError::Transport(e.to_string())),
            Err(ureq::Error::Status(code, _)) if code >= 500 || code == 429 => {
                Err(IngestError::Transport(format!("HTTP {code}")))
            }
            Err(ureq::Error::Status(code, _)) => Err(IngestError::Api {
                status: code.to_string(),
                message: format!("HTTP {code}"),
            }),
            Err(e) => Err(IngestError::Transport(e.to_string())),
        }
    }
}
