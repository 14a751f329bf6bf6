//! Archived tweet ingestion and the on-disk corpus store.
//!
//! The store is a directory holding `corpus.bin` (length-prefixed binary
//! records) and `manifest.json` (counts, date range, schema version). Records
//! are written once, in input order, and streamed back in that same order.
//!
//! `corpus.bin` layout, all integers little-endian:
//!
//! ```text
//! magic "FSCO" | version u32 = 1 | count u64
//! count × { id u64 | created_at i64 | author_len u32 | author | text_len u32 | text }
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, IoContext, Result};

pub const STORE_FILE: &str = "corpus.bin";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const STORE_MAGIC: &[u8; 4] = b"FSCO";
pub const STORE_VERSION: u32 = 1;
const STORE_HEADER_LEN: u64 = 16;

/// One archived post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: u64,
    pub author: String,
    /// Seconds since the Unix epoch, UTC.
    pub created_at: i64,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub lines_read: u64,
    pub records_kept: u64,
    pub duplicates_dropped: u64,
    pub malformed_dropped: u64,
    pub out_of_range_dropped: u64,
    pub distinct_authors: u64,
    pub min_date: Option<i64>,
    pub max_date: Option<i64>,
}

impl CorpusStats {
    pub fn is_balanced(&self) -> bool {
        self.lines_read
            == self.records_kept
                + self.duplicates_dropped
                + self.malformed_dropped
                + self.out_of_range_dropped
    }
}

/// Inclusive calendar-date window, interpreted in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub since: NaiveDate,
    pub until: NaiveDate,
}

impl DateWindow {
    pub fn new(since: NaiveDate, until: NaiveDate) -> Result<Self> {
        if since > until {
            return Err(Error::invalid(format!(
                "since ({since}) must not be after until ({until})"
            )));
        }
        Ok(Self { since, until })
    }

    /// Parses `YYYY-MM-DD` bounds.
    pub fn parse(since: &str, until: &str) -> Result<Self> {
        let parse = |s: &str| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|e| Error::invalid(format!("bad date {s:?}: {e}")))
        };
        Self::new(parse(since)?, parse(until)?)
    }

    fn start_ts(&self) -> i64 {
        self.since.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp()
    }

    /// Exclusive upper bound: midnight after `until`.
    fn end_ts(&self) -> i64 {
        (self.until + Duration::days(1))
            .and_hms_opt(0, 0, 0)
            .unwrap()
            .and_utc()
            .timestamp()
    }

    pub fn contains(&self, ts: i64) -> bool {
        ts >= self.start_ts() && ts < self.end_ts()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub record_count: u64,
    pub store_file: String,
    pub store_bytes: u64,
    pub window: DateWindow,
    pub stats: CorpusStats,
}

// ---------------------------------------------------------------------------
// JSONL parsing

fn field<'a>(obj: &'a serde_json::Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| obj.get(*k).filter(|v| !v.is_null()))
}

fn parse_id(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn parse_author(v: &Value) -> Option<String> {
    let name = match v {
        Value::String(s) => s.as_str(),
        // snscrape nests the account under `user`.
        Value::Object(o) => o.get("username").and_then(Value::as_str)?,
        _ => return None,
    };
    let name = name.trim();
    (!name.is_empty()).then(|| name.to_string())
}

/// Parses the timestamp spellings seen in tweet archives into UTC seconds.
pub fn parse_timestamp(v: &Value) -> Option<i64> {
    match v {
        Value::Number(n) => n.as_i64(),
        Value::String(s) => parse_timestamp_str(s.trim()),
        _ => None,
    }
}

fn parse_timestamp_str(s: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%:z", "%Y-%m-%d %H:%M:%S%z", "%a %b %d %H:%M:%S %z %Y"] {
        if let Ok(dt) = DateTime::parse_from_str(s, fmt) {
            return Some(dt.timestamp());
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
    }
    None
}

/// Parses one JSONL line. Accepts both `{id,date,user,content}` and
/// `{id,created_at,author,text}` spellings.
pub fn parse_record(line: &str) -> std::result::Result<TweetRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid json: {e}"))?;
    let obj = value.as_object().ok_or("not a json object")?;
    let id = field(obj, &["id"]).and_then(parse_id).ok_or("missing or bad id")?;
    let author = field(obj, &["user", "author"])
        .and_then(parse_author)
        .ok_or("missing or bad author")?;
    let created_at = field(obj, &["date", "created_at"])
        .and_then(parse_timestamp)
        .ok_or("missing or unparseable date")?;
    let text = field(obj, &["content", "text", "rawContent"])
        .and_then(Value::as_str)
        .ok_or("missing text")?;
    if text.trim().is_empty() {
        return Err("empty text".into());
    }
    Ok(TweetRecord {
        id,
        author,
        created_at,
        text: text.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Store writer

struct StoreWriter {
    path: PathBuf,
    out: BufWriter<File>,
    count: u64,
    bytes: u64,
}

impl StoreWriter {
    fn create(path: PathBuf) -> Result<Self> {
        let file = File::create(&path).at(&path)?;
        let mut out = BufWriter::new(file);
        out.write_all(STORE_MAGIC).at(&path)?;
        out.write_all(&STORE_VERSION.to_le_bytes()).at(&path)?;
        out.write_all(&0u64.to_le_bytes()).at(&path)?;
        Ok(Self {
            path,
            out,
            count: 0,
            bytes: STORE_HEADER_LEN,
        })
    }

    fn push(&mut self, rec: &TweetRecord) -> Result<()> {
        let p = &self.path;
        self.out.write_all(&rec.id.to_le_bytes()).at(p)?;
        self.out.write_all(&rec.created_at.to_le_bytes()).at(p)?;
        for s in [&rec.author, &rec.text] {
            let len = u32::try_from(s.len())
                .map_err(|_| Error::invalid(format!("record {} field too long", rec.id)))?;
            self.out.write_all(&len.to_le_bytes()).at(p)?;
            self.out.write_all(s.as_bytes()).at(p)?;
        }
        self.count += 1;
        self.bytes += 8 + 8 + 4 + rec.author.len() as u64 + 4 + rec.text.len() as u64;
        Ok(())
    }

    fn finish(mut self) -> Result<(u64, u64)> {
        self.out.flush().at(&self.path)?;
        let mut file = self.out.into_inner().map_err(|e| Error::io(&self.path, e.into_error()))?;
        file.seek(SeekFrom::Start(8)).at(&self.path)?;
        file.write_all(&self.count.to_le_bytes()).at(&self.path)?;
        file.sync_all().at(&self.path)?;
        Ok((self.count, self.bytes))
    }
}

/// Reads newline-delimited JSON, filters and deduplicates it, and persists the
/// kept records under `out_dir`.
///
/// Lines are classified in order: malformed, then outside the date window,
/// then duplicate id (first kept occurrence wins). Whitespace-only lines are
/// skipped without being counted.
pub fn ingest_jsonl<R: BufRead>(
    mut input: R,
    window: DateWindow,
    out_dir: &Path,
) -> Result<CorpusStats> {
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let store_path = out_dir.join(STORE_FILE);
    let mut writer = StoreWriter::create(store_path)?;

    let mut stats = CorpusStats::default();
    let mut seen_ids = HashSet::new();
    let mut authors = HashSet::new();
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        let n = input
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io("<input>", e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let Ok(line) = std::str::from_utf8(&buf) else {
            stats.lines_read += 1;
            stats.malformed_dropped += 1;
            log::warn!("line {line_no}: invalid utf-8");
            continue;
        };
        if line.trim().is_empty() {
            continue;
        }
        stats.lines_read += 1;
        let rec = match parse_record(line) {
            Ok(rec) => rec,
            Err(reason) => {
                stats.malformed_dropped += 1;
                log::warn!("line {line_no}: {reason}");
                continue;
            }
        };
        if !window.contains(rec.created_at) {
            stats.out_of_range_dropped += 1;
            continue;
        }
        if !seen_ids.insert(rec.id) {
            stats.duplicates_dropped += 1;
            continue;
        }
        stats.min_date = Some(stats.min_date.map_or(rec.created_at, |m| m.min(rec.created_at)));
        stats.max_date = Some(stats.max_date.map_or(rec.created_at, |m| m.max(rec.created_at)));
        if !authors.contains(rec.author.as_str()) {
            authors.insert(rec.author.clone());
        }
        writer.push(&rec)?;
        stats.records_kept += 1;
    }
    stats.distinct_authors = authors.len() as u64;
    let (count, bytes) = writer.finish()?;
    debug_assert_eq!(count, stats.records_kept);

    let manifest = CorpusManifest {
        schema_version: STORE_VERSION,
        record_count: count,
        store_file: STORE_FILE.to_string(),
        store_bytes: bytes,
        window,
        stats: stats.clone(),
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::json(&manifest_path, e))?;
    std::fs::write(&manifest_path, json).at(&manifest_path)?;
    Ok(stats)
}

/// Convenience wrapper over [`ingest_jsonl`] for a file on disk.
pub fn ingest_file(input: &Path, window: DateWindow, out_dir: &Path) -> Result<CorpusStats> {
    let file = File::open(input).at(input)?;
    ingest_jsonl(BufReader::new(file), window, out_dir)
}

// ---------------------------------------------------------------------------
// Store reader

/// A persisted corpus. Cheap to clone; every stream opens its own file handle.
#[derive(Debug, Clone)]
pub struct Corpus {
    dir: PathBuf,
    manifest: CorpusManifest,
}

impl Corpus {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let manifest_path = dir.join(MANIFEST_FILE);
        let raw = std::fs::read(&manifest_path).at(&manifest_path)?;
        let manifest: CorpusManifest =
            serde_json::from_slice(&raw).map_err(|e| Error::json(&manifest_path, e))?;
        if manifest.schema_version != STORE_VERSION {
            return Err(Error::corrupt(
                &manifest_path,
                format!("unsupported schema version {}", manifest.schema_version),
            ));
        }
        let store = dir.join(&manifest.store_file);
        let len = std::fs::metadata(&store).at(&store)?.len();
        if len != manifest.store_bytes {
            return Err(Error::corrupt(
                &store,
                format!("store is {len} bytes, manifest expects {}", manifest.store_bytes),
            ));
        }
        Ok(Self { dir, manifest })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &CorpusManifest {
        &self.manifest
    }

    pub fn len(&self) -> u64 {
        self.manifest.record_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn store_path(&self) -> PathBuf {
        self.dir.join(&self.manifest.store_file)
    }

    /// Streams records one at a time in persisted order.
    pub fn records(&self) -> Result<RecordReader> {
        RecordReader::open(self.store_path(), self.manifest.record_count)
    }

    /// Streams fixed-size batches; only the last batch may be shorter.
    pub fn stream(&self, batch_size: usize) -> Result<Batches> {
        if batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        Ok(Batches {
            inner: self.records()?,
            batch_size,
        })
    }

    /// Record ids in persisted order.
    pub fn ids(&self) -> Result<Vec<u64>> {
        self.records()?.map(|r| r.map(|r| r.id)).collect()
    }

    /// Writes the kept records as JSONL (`{id, date, user, content}`), the
    /// input expected by the offline embedding exporter.
    pub fn export_jsonl(&self, path: &Path) -> Result<u64> {
        let mut out = BufWriter::new(File::create(path).at(path)?);
        let mut n = 0;
        for rec in self.records()? {
            let rec = rec?;
            let date = DateTime::<Utc>::from_timestamp(rec.created_at, 0)
                .map(|d| d.to_rfc3339())
                .unwrap_or_default();
            let line = serde_json::json!({
                "id": rec.id,
                "date": date,
                "user": rec.author,
                "content": rec.text,
            });
            writeln!(out, "{line}").at(path)?;
            n += 1;
        }
        out.flush().at(path)?;
        Ok(n)
    }
}

pub struct RecordReader {
    path: PathBuf,
    reader: BufReader<File>,
    remaining: u64,
    failed: bool,
}

impl RecordReader {
    fn open(path: PathBuf, expected: u64) -> Result<Self> {
        let file = File::open(&path).at(&path)?;
        let mut reader = BufReader::new(file);
        let mut header = [0u8; STORE_HEADER_LEN as usize];
        reader
            .read_exact(&mut header)
            .map_err(|_| Error::corrupt(&path, "store header truncated"))?;
        if &header[..4] != STORE_MAGIC {
            return Err(Error::corrupt(&path, "bad store magic"));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != STORE_VERSION {
            return Err(Error::corrupt(&path, format!("unsupported store version {version}")));
        }
        let count = u64::from_le_bytes(header[8..16].try_into().unwrap());
        if count != expected {
            return Err(Error::corrupt(
                &path,
                format!("store holds {count} records, manifest expects {expected}"),
            ));
        }
        Ok(Self {
            path,
            reader,
            remaining: count,
            failed: false,
        })
    }

    fn read_one(&mut self) -> Result<TweetRecord> {
        let truncated = |p: &Path| Error::corrupt(p, "store record truncated");
        let mut fixed = [0u8; 16];
        self.reader.read_exact(&mut fixed).map_err(|_| truncated(&self.path))?;
        let id = u64::from_le_bytes(fixed[..8].try_into().unwrap());
        let created_at = i64::from_le_bytes(fixed[8..].try_into().unwrap());
        let mut strings = [String::new(), String::new()];
        for s in &mut strings {
            let mut len = [0u8; 4];
            self.reader.read_exact(&mut len).map_err(|_| truncated(&self.path))?;
            let mut bytes = vec![0u8; u32::from_le_bytes(len) as usize];
            self.reader.read_exact(&mut bytes).map_err(|_| truncated(&self.path))?;
            *s = String::from_utf8(bytes)
                .map_err(|_| Error::corrupt(&self.path, "store record is not utf-8"))?;
        }
        let [author, text] = strings;
        Ok(TweetRecord {
            id,
            author,
            created_at,
            text,
        })
    }
}

impl Iterator for RecordReader {
    type Item = Result<TweetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 || self.failed {
            return None;
        }
        self.remaining -= 1;
        let rec = self.read_one();
        self.failed = rec.is_err();
        Some(rec)
    }
}

pub struct Batches {
    inner: RecordReader,
    batch_size: usize,
}

impl Iterator for Batches {
    type Item = Result<Vec<TweetRecord>>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut batch = Vec::with_capacity(self.batch_size.min(1 << 16));
        for rec in self.inner.by_ref() {
            match rec {
                Ok(rec) => batch.push(rec),
                Err(e) => return Some(Err(e)),
            }
            if batch.len() == self.batch_size {
                break;
            }
        }
        (!batch.is_empty()).then_some(Ok(batch))
    }
}

// ---------------------------------------------------------------------------
// Time buckets

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Day,
    Week,
    #[default]
    Month,
}

impl std::str::FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day" => Ok(Self::Day),
            "week" => Ok(Self::Week),
            "month" => Ok(Self::Month),
            other => Err(Error::invalid(format!("unknown granularity {other:?}"))),
        }
    }
}

impl Granularity {
    /// Start of the bucket holding `ts`; weeks start on Monday.
    pub fn bucket_start(self, ts: i64) -> i64 {
        let date = DateTime::<Utc>::from_timestamp(ts, 0)
            .expect("timestamp in range")
            .date_naive();
        let start = match self {
            Granularity::Day => date,
            Granularity::Week => {
                date - Duration::days(date.weekday().num_days_from_monday() as i64)
            }
            Granularity::Month => NaiveDate::from_ymd_opt(date.year(), date.month(), 1).unwrap(),
        };
        Utc.from_utc_datetime(&start.and_hms_opt(0, 0, 0).unwrap()).timestamp()
    }

    /// Start of the following bucket.
    pub fn next_start(self, start: i64) -> i64 {
        let date = DateTime::<Utc>::from_timestamp(start, 0).unwrap().date_naive();
        let next = match self {
            Granularity::Day => date + Duration::days(1),
            Granularity::Week => date + Duration::days(7),
            Granularity::Month => {
                let (y, m) = if date.month() == 12 {
                    (date.year() + 1, 1)
                } else {
                    (date.year(), date.month() + 1)
                };
                NaiveDate::from_ymd_opt(y, m, 1).unwrap()
            }
        };
        next.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBucket {
    pub granularity: Granularity,
    pub bucket_start: i64,
    pub doc_ids: Vec<u64>,
}

/// Partitions record ids into contiguous buckets, emitting empty buckets for
/// gaps so the time axis has no holes.
pub fn time_buckets_from<I>(records: I, granularity: Granularity) -> Result<Vec<TimeBucket>>
where
    I: IntoIterator<Item = Result<(u64, i64)>>,
{
    let mut filled: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
    for rec in records {
        let (id, ts) = rec?;
        filled.entry(granularity.bucket_start(ts)).or_default().push(id);
    }
    let (Some(&first), Some(&last)) = (filled.keys().next(), filled.keys().next_back()) else {
        return Err(Error::invalid("cannot bucket an empty corpus"));
    };
    let mut out = Vec::new();
    let mut start = first;
    while start <= last {
        out.push(TimeBucket {
            granularity,
            bucket_start: start,
            doc_ids: filled.remove(&start).unwrap_or_default(),
        });
        start = granularity.next_start(start);
    }
    Ok(out)
}

pub fn time_buckets(corpus: &Corpus, granularity: Granularity) -> Result<Vec<TimeBucket>> {
    time_buckets_from(
        corpus.records()?.map(|r| r.map(|r| (r.id, r.created_at))),
        granularity,
    )
}

/// Formats a bucket start as `YYYY-MM-DD`.
pub fn format_day(ts: i64) -> String {
    DateTime::<Utc>::from_timestamp(ts, 0)
        .map(|d| d.format("%Y-%m-%d").to_string())
        .unwrap_or_else(|| ts.to_string())
}
