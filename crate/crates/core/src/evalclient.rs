//! Resumable collection of sampled model responses.
//!
//! Requests target the de-facto chat-completions JSON shape: one user
//! message holding the question text verbatim, plus the decoding parameters.
//! Every (item, sample) outcome is appended to a durable JSONL event log —
//! the run ledger — before it counts as recorded, so a run can be killed and
//! resumed at any moment; done or failed pairs are never re-sent.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::BenchmarkItem;
use crate::grading::EvalRecord;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("endpoint config invalid: {0}")]
    BadConfig(String),
    #[error("api key environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("authentication failed (HTTP {0}); aborting run")]
    AuthFailure(u16),
    #[error("ledger io error on {path}: {source}")]
    LedgerIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("ledger line {0} is malformed: {1}")]
    LedgerCorrupt(usize, String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, backoff_base_ms: 250 }
    }
}

/// Endpoint and decoding configuration. Defaults follow the evaluation
/// protocol: temperature 0.6, top-p 0.95, 28k max response tokens, k = 16.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_response_tokens: u32,
    pub samples_per_item: u32,
    pub parallelism: usize,
    pub retry: RetryPolicy,
    pub request_timeout_secs: u64,
}

impl ModelEndpointConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        ModelEndpointConfig {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_env: None,
            temperature: 0.6,
            top_p: 0.95,
            max_response_tokens: 28_000,
            samples_per_item: 16,
            parallelism: 4,
            retry: RetryPolicy::default(),
            request_timeout_secs: 600,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.temperature < 0.0 {
            return Err(EvalError::BadConfig("temperature must be >= 0".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(EvalError::BadConfig("top_p must be in (0, 1]".into()));
        }
        if self.samples_per_item < 1 {
            return Err(EvalError::BadConfig("samples_per_item must be >= 1".into()));
        }
        if self.parallelism < 1 {
            return Err(EvalError::BadConfig("parallelism must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LedgerEntry {
    pub status: EntryStatus,
    /// Raw completion text; empty for failed entries.
    pub response: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub error: Option<String>,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LedgerEvent {
    run_id: String,
    item_id: String,
    sample_index: u32,
    #[serde(flatten)]
    entry: LedgerEntry,
}

/// Durable record of (item, sample) outcomes: an append-only JSONL event log
/// with an optional compacted snapshot.
#[derive(Debug)]
pub struct RunLedger {
    run_id: String,
    log_path: PathBuf,
    entries: BTreeMap<(String, u32), LedgerEntry>,
}

impl RunLedger {
    /// Opens (or creates) the event log at `log_path`, replaying any
    /// existing events. The first event recorded for a pair wins; done
    /// entries are immutable.
    pub fn open(log_path: &Path, run_id: &str) -> Result<RunLedger, EvalError> {
        let mut ledger = RunLedger {
            run_id: run_id.to_string(),
            log_path: log_path.to_path_buf(),
            entries: BTreeMap::new(),
        };
        if log_path.exists() {
            let file = File::open(log_path).map_err(|source| EvalError::LedgerIo {
                path: log_path.display().to_string(),
                source,
            })?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|source| EvalError::LedgerIo {
                    path: log_path.display().to_string(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: LedgerEvent = serde_json::from_str(&line)
                    .map_err(|e| EvalError::LedgerCorrupt(i + 1, e.to_string()))?;
                ledger
                    .entries
                    .entry((event.item_id, event.sample_index))
                    .or_insert(event.entry);
            }
        }
        Ok(ledger)
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, item_id: &str, sample_index: u32) -> Option<&LedgerEntry> {
        self.entries.get(&(item_id.to_string(), sample_index))
    }

    pub fn status_counts(&self) -> (usize, usize) {
        let done = self.entries.values().filter(|e| e.status == EntryStatus::Done).count();
        (done, self.entries.len() - done)
    }

    /// Appends and flushes one outcome. Recording an already-done pair is a
    /// no-op (at-most-once semantics).
    pub fn record(
        &mut self,
        item_id: &str,
        sample_index: u32,
        entry: LedgerEntry,
    ) -> Result<(), EvalError> {
        let key = (item_id.to_string(), sample_index);
        if let Some(existing) = self.entries.get(&key) {
            if existing.status == EntryStatus::Done {
                return Ok(());
            }
        }
        let event = LedgerEvent {
            run_id: self.run_id.clone(),
            item_id: item_id.to_string(),
            sample_index,
            entry: entry.clone(),
        };
        let io_err = |source| EvalError::LedgerIo {
            path: self.log_path.display().to_string(),
            source,
        };
        let mut file =
            OpenOptions::new().create(true).append(true).open(&self.log_path).map_err(io_err)?;
        let line = serde_json::to_string(&event).expect("event serializes");
        file.write_all(line.as_bytes()).and_then(|_| file.write_all(b"\n")).map_err(io_err)?;
        file.flush().map_err(io_err)?;
        self.entries.insert(key, entry);
        Ok(())
    }

    /// Writes a compacted snapshot of current entries next to the log.
    pub fn write_snapshot(&self) -> Result<PathBuf, EvalError> {
        let path = self.log_path.with_extension("snapshot.json");
        let io_err = |source| EvalError::LedgerIo { path: path.display().to_string(), source };
        let entries: Vec<LedgerEvent> = self
            .entries
            .iter()
            .map(|((item_id, sample_index), entry)| LedgerEvent {
                run_id: self.run_id.clone(),
                item_id: item_id.clone(),
                sample_index: *sample_index,
                entry: entry.clone(),
            })
            .collect();
        let json = serde_json::json!({ "run_id": self.run_id, "entries": entries });
        std::fs::write(&path, serde_json::to_string_pretty(&json).unwrap()).map_err(io_err)?;
        Ok(path)
    }

    /// Deterministic export for grading: one record per recorded pair,
    /// sorted by (item, sample); failed pairs yield empty responses.
    pub fn export_records(&self) -> Vec<EvalRecord> {
        self.entries
            .iter()
            .map(|((item_id, sample_index), entry)| EvalRecord {
                item_id: item_id.clone(),
                sample_index: *sample_index,
                raw_response: entry.response.clone(),
                extracted_answer: None,
                correctness: 0,
                response_chars: entry.response.chars().count() as u64,
                response_tokens: entry.completion_tokens,
            })
            .collect()
    }
}

#[derive(Debug, Default, Clone, Copy, Serialize, Deserialize)]
pub struct CollectStats {
    pub requested: usize,
    pub done: usize,
    pub failed: usize,
    pub skipped: usize,
}

/// Collects every (item, sample) pair not yet recorded in the ledger.
///
/// Workers share a claim queue, so each pending pair is sent at most once;
/// transient failures retry with exponential backoff; authentication
/// failures abort the whole run.
pub fn collect(
    items: &[BenchmarkItem],
    config: &ModelEndpointConfig,
    ledger: &mut RunLedger,
) -> Result<CollectStats, EvalError> {
    config.validate()?;
    let api_key = match &config.api_key_env {
        Some(var) => {
            Some(std::env::var(var).map_err(|_| EvalError::MissingApiKey(var.clone()))?)
        }
        None => None,
    };

    let mut tasks: Vec<(String, u32, String)> = Vec::new();
    let mut skipped = 0;
    for item in items {
        for i in 1..=config.samples_per_item {
            if ledger.get(&item.item_id, i).is_some() {
                skipped += 1;
            } else {
                tasks.push((item.item_id.clone(), i, item.question.clone()));
            }
        }
    }
    let requested = tasks.len();

    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(config.request_timeout_secs))
        .build()
        .map_err(|e| EvalError::BadConfig(e.to_string()))?;
    let url = format!("{}/chat/completions", config.base_url.trim_end_matches('/'));

    let queue = Mutex::new(tasks);
    let ledger_lock = Mutex::new(ledger);
    let abort: Mutex<Option<EvalError>> = Mutex::new(None);
    let abort_flag = AtomicBool::new(false);

    std::thread::scope(|scope| {
        for _ in 0..config.parallelism {
            scope.spawn(|| loop {
                if abort_flag.load(Ordering::Relaxed) {
                    return;
                }
                let task = queue.lock().unwrap().pop();
                let Some((item_id, sample_index, question)) = task else { return };
                match request_completion(&client, &url, config, api_key.as_deref(), &question) {
                    Ok(entry) | Err(RequestFailure::Recorded(entry)) => {
                        let mut guard = ledger_lock.lock().unwrap();
                        // Ledger write failures are terminal: losing records
                        // silently would defeat resumability.
                        if let Err(e) = guard.record(&item_id, sample_index, entry) {
                            *abort.lock().unwrap() = Some(e);
                            abort_flag.store(true, Ordering::Relaxed);
                            return;
                        }
                    }
                    Err(RequestFailure::Abort(e)) => {
                        *abort.lock().unwrap() = Some(e);
                        abort_flag.store(true, Ordering::Relaxed);
                        return;
                    }
                }
            });
        }
    });

    if let Some(e) = abort.lock().unwrap().take() {
        return Err(e);
    }
    let (done, failed) = ledger_lock.into_inner().unwrap().status_counts();
    Ok(CollectStats { requested, done, failed, skipped })
}

enum RequestFailure {
    /// Request gave up; the failure is recorded in the ledger.
    Recorded(LedgerEntry),
    /// The whole run must stop (authentication failure).
    Abort(EvalError),
}

fn request_completion(
    client: &reqwest::blocking::Client,
    url: &str,
    config: &ModelEndpointConfig,
    api_key: Option<&str>,
    question: &str,
) -> Result<LedgerEntry, RequestFailure> {
    // The question text is sent verbatim as the sole user message.
    let body = serde_json::json!({
        "model": config.model_name,
        "messages": [{"role": "user", "content": question}],
        "temperature": config.temperature,
        "top_p": config.top_p,
        "max_tokens": config.max_response_tokens,
    });

    let mut last_error = String::new();
    for attempt in 0..config.retry.max_attempts {
        if attempt > 0 {
            let backoff = config.retry.backoff_base_ms * (1 << (attempt - 1));
            std::thread::sleep(Duration::from_millis(backoff));
        }
        let mut req = client.post(url).json(&body);
        if let Some(key) = api_key {
            req = req.bearer_auth(key);
        }
        match req.send() {
            Ok(resp) => {
                let status = resp.status().as_u16();
                if status == 401 || status == 403 {
                    return Err(RequestFailure::Abort(EvalError::AuthFailure(status)));
                }
                let text = resp.text().unwrap_or_default();
                if status >= 500 {
                    last_error = format!("HTTP {status}: {text}");
                    continue; // transient, retry
                }
                if status >= 400 {
                    return Err(RequestFailure::Recorded(failed_entry(format!(
                        "HTTP {status}: {text}"
                    ))));
                }
                return match parse_completion(&text) {
                    Some((content, prompt_tokens, completion_tokens)) => Ok(LedgerEntry {
                        status: EntryStatus::Done,
                        response: content,
                        prompt_tokens,
                        completion_tokens,
                        error: None,
                        timestamp_ms: now_ms(),
                    }),
                    // Keep the payload for audit.
                    None => Err(RequestFailure::Recorded(failed_entry(format!(
                        "malformed endpoint response: {text}"
                    )))),
                };
            }
            Err(e) => {
                last_error = e.to_string();
                continue; // connect error / timeout, retry
            }
        }
    }
    Err(RequestFailure::Recorded(failed_entry(format!(
        "gave up after {} attempts: {last_error}",
        config.retry.max_attempts
    ))))
}

fn failed_entry(error: String) -> LedgerEntry {
    LedgerEntry {
        status: EntryStatus::Failed,
        response: String::new(),
        prompt_tokens: None,
        completion_tokens: None,
        error: Some(error),
        timestamp_ms: now_ms(),
    }
}

fn parse_completion(text: &str) -> Option<(String, Option<u64>, Option<u64>)> {
    let v: serde_json::Value = serde_json::from_str(text).ok()?;
    let content = v["choices"][0]["message"]["content"].as_str()?.to_string();
    let prompt_tokens = v["usage"]["prompt_tokens"].as_u64();
    let completion_tokens = v["usage"]["completion_tokens"].as_u64();
    Some((content, prompt_tokens, completion_tokens))
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn entry(status: EntryStatus, response: &str) -> LedgerEntry {
        LedgerEntry {
            status,
            response: response.to_string(),
            prompt_tokens: Some(10),
            completion_tokens: Some(5),
            error: None,
            timestamp_ms: 123,
        }
    }

    #[test]
    fn ledger_round_trips_raw_responses() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let mut ledger = RunLedger::open(&path, "run-1").unwrap();
        ledger.record("item-a", 1, entry(EntryStatus::Done, "resp \u{2713} bytes")).unwrap();
        ledger.record("item-a", 2, entry(EntryStatus::Failed, "")).unwrap();

        let reopened = RunLedger::open(&path, "run-1").unwrap();
        assert_eq!(reopened.len(), 2);
        assert_eq!(reopened.get("item-a", 1).unwrap().response, "resp \u{2713} bytes");
        assert_eq!(reopened.get("item-a", 2).unwrap().status, EntryStatus::Failed);
    }

    #[test]
    fn done_entries_are_immutable() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let mut ledger = RunLedger::open(&path, "run-1").unwrap();
        ledger.record("item-a", 1, entry(EntryStatus::Done, "first")).unwrap();
        ledger.record("item-a", 1, entry(EntryStatus::Done, "second")).unwrap();
        assert_eq!(ledger.get("item-a", 1).unwrap().response, "first");
        // failed entries may be superseded
        ledger.record("item-b", 1, entry(EntryStatus::Failed, "")).unwrap();
        ledger.record("item-b", 1, entry(EntryStatus::Done, "recovered")).unwrap();
        assert_eq!(ledger.get("item-b", 1).unwrap().response, "recovered");
    }

    #[test]
    fn export_is_sorted_and_failed_entries_are_empty() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let mut ledger = RunLedger::open(&path, "run-1").unwrap();
        ledger.record("item-b", 2, entry(EntryStatus::Done, "\\boxed{G}")).unwrap();
        ledger.record("item-a", 1, entry(EntryStatus::Failed, "ignored")).unwrap();
        ledger.record("item-b", 1, entry(EntryStatus::Done, "x")).unwrap();

        // failed entries export with empty responses regardless of payload
        let mut failed = entry(EntryStatus::Failed, "");
        failed.error = Some("timeout".into());
        ledger.record("item-c", 1, failed).unwrap();

        let records = ledger.export_records();
        let keys: Vec<(String, u32)> =
            records.iter().map(|r| (r.item_id.clone(), r.sample_index)).collect();
        assert_eq!(keys, vec![
            ("item-a".into(), 1),
            ("item-b".into(), 1),
            ("item-b".into(), 2),
            ("item-c".into(), 1),
        ]);
        assert_eq!(records[3].raw_response, "");
        assert_eq!(records[2].response_tokens, Some(5));
    }

    #[test]
    fn snapshot_is_written_next_to_log() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let mut ledger = RunLedger::open(&path, "run-9").unwrap();
        ledger.record("item-a", 1, entry(EntryStatus::Done, "r")).unwrap();
        let snap = ledger.write_snapshot().unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(snap).unwrap()).unwrap();
        assert_eq!(v["run_id"], "run-9");
        assert_eq!(v["entries"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut c = ModelEndpointConfig::new("http://localhost", "m");
        assert!(c.validate().is_ok());
        c.top_p = 0.0;
        assert!(c.validate().is_err());
        c.top_p = 0.95;
        c.samples_per_item = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn corrupt_ledger_reports_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        std::fs::write(&path, "{broken\n").unwrap();
        match RunLedger::open(&path, "r") {
            Err(EvalError::LedgerCorrupt(line, _)) => assert_eq!(line, 1),
            other => panic!("expected corrupt-ledger error, got {other:?}"),
        }
    }
}
