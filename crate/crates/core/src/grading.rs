//! Answer extraction, Pass@1 scoring, and report aggregation.
//!
//! Pass@1 for one item is the mean correctness over its k sampled responses
//! (Eq. `(1/k) * sum p_i`), with any-of credit for multi-solution items.
//! A response's answer is the last balanced `\boxed{...}` construct reduced
//! to a single letter; anything else scores 0.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::BenchmarkItem;
use crate::engine::Verdict;
use crate::topology::GameId;

#[derive(Debug, Error)]
pub enum GradingError {
    #[error("record {0} references item {1} but was scored against {2}")]
    MismatchedItem(usize, String, String),
    #[error("no records supplied for item {0}")]
    NoRecords(String),
    #[error("record references unknown item {0}")]
    UnknownItem(String),
    #[error("reference table is missing key ({model}, {benchmark})")]
    MissingKey { model: String, benchmark: String },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// One sampled model response with its extraction and correctness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub item_id: String,
    /// 1-based sample index within the item's k samples.
    pub sample_index: u32,
    pub raw_response: String,
    pub extracted_answer: Option<char>,
    /// 1 iff `extracted_answer` is one of the item's solutions.
    pub correctness: u8,
    pub response_chars: u64,
    pub response_tokens: Option<u64>,
}

/// Extracts the final answer: the last balanced `\boxed{...}`, stripped of
/// formatting wrappers and punctuation, uppercased, and accepted only if it
/// reduces to exactly one letter A-Y.
pub fn extract_answer(response: &str) -> Option<char> {
    let content = last_boxed_content(response)?;
    let reduced = strip_wrappers(&content);
    let mut chars = reduced.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => {
            let up = c.to_ascii_uppercase();
            ('A'..='Y').contains(&up).then_some(up)
        }
        _ => None,
    }
}

/// Content of the last `\boxed{...}` whose braces balance. Brace counting
/// skips backslash-escaped braces; an unbalanced trailing box (for example a
/// truncated response) falls back to the previous balanced one.
fn last_boxed_content(response: &str) -> Option<String> {
    const MARKER: &str = "\\boxed{";
    let mut found = None;
    let mut search_start = 0;
    while let Some(pos) = response[search_start..].find(MARKER) {
        let content_start = search_start + pos + MARKER.len();
        if let Some(content) = balanced_content(&response[content_start..]) {
            found = Some(content);
        }
        search_start = content_start;
    }
    found
}

fn balanced_content(s: &str) -> Option<String> {
    let mut depth = 1u32;
    let mut out = String::new();
    let mut prev_backslash = false;
    for c in s.chars() {
        if !prev_backslash {
            if c == '{' {
                depth += 1;
            } else if c == '}' {
                depth -= 1;
                if depth == 0 {
                    return Some(out);
                }
            }
        }
        prev_backslash = c == '\\' && !prev_backslash;
        out.push(c);
    }
    None
}

/// Repeatedly removes LaTeX text wrappers, surrounding whitespace, and
/// punctuation until a fixed point.
fn strip_wrappers(content: &str) -> String {
    const WRAPPERS: [&str; 6] = ["\\text{", "\\textbf{", "\\textrm{", "\\mathrm{", "\\mathbf{", "\\texttt{"];
    let mut s = content.trim().to_string();
    loop {
        let before = s.clone();
        for w in WRAPPERS {
            if s.starts_with(w) && s.ends_with('}') {
                s = s[w.len()..s.len() - 1].to_string();
            }
        }
        s = s
            .trim_matches(|c: char| {
                c.is_whitespace() || ".,!?:;\"'`$*()[]_-".contains(c)
            })
            .to_string();
        if s == before {
            return s;
        }
    }
}

/// Eq. 1: Pass@1 = (1/k) * sum p_i, with p_i = 1 iff the extracted answer is
/// any member of the item's solution set.
pub fn score_item(item: &BenchmarkItem, records: &[EvalRecord]) -> Result<f64, GradingError> {
    if records.is_empty() {
        return Err(GradingError::NoRecords(item.item_id.clone()));
    }
    let solutions: BTreeSet<char> = item.solutions.iter().copied().collect();
    let mut correct = 0u64;
    for (i, r) in records.iter().enumerate() {
        if r.item_id != item.item_id {
            return Err(GradingError::MismatchedItem(i, r.item_id.clone(), item.item_id.clone()));
        }
        if r.extracted_answer.is_some_and(|a| solutions.contains(&a)) {
            correct += 1;
        }
    }
    Ok(correct as f64 / records.len() as f64)
}

/// Fills in `extracted_answer` and `correctness` from the raw response.
pub fn grade_record(record: &mut EvalRecord, solutions: &BTreeSet<char>) {
    record.extracted_answer = extract_answer(&record.raw_response);
    record.correctness =
        u8::from(record.extracted_answer.is_some_and(|a| solutions.contains(&a)));
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct LengthStats {
    pub mean_chars: f64,
    pub stddev_chars: f64,
    pub mean_tokens: Option<f64>,
    pub stddev_tokens: Option<f64>,
}

/// Aggregated Pass@1 metrics over one evaluation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub per_item: BTreeMap<String, f64>,
    /// Macro-average over each game's items.
    pub per_task: BTreeMap<GameId, f64>,
    pub per_task_verdict: BTreeMap<GameId, BTreeMap<Verdict, f64>>,
    pub length_stats: BTreeMap<GameId, LengthStats>,
    pub samples_per_item: u32,
}

/// Aggregates graded records into per-item / per-task / per-verdict Pass@1
/// and response-length statistics. Deterministic for given inputs.
pub fn aggregate(records: &[EvalRecord], items: &[BenchmarkItem]) -> Result<Report, GradingError> {
    let by_id: BTreeMap<&str, &BenchmarkItem> =
        items.iter().map(|i| (i.item_id.as_str(), i)).collect();
    let mut grouped: BTreeMap<&str, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        if !by_id.contains_key(r.item_id.as_str()) {
            return Err(GradingError::UnknownItem(r.item_id.clone()));
        }
        grouped.entry(r.item_id.as_str()).or_default().push(r);
    }

    let mut per_item = BTreeMap::new();
    let mut task_scores: BTreeMap<GameId, Vec<f64>> = BTreeMap::new();
    let mut verdict_scores: BTreeMap<GameId, BTreeMap<Verdict, Vec<f64>>> = BTreeMap::new();
    let mut task_chars: BTreeMap<GameId, Vec<f64>> = BTreeMap::new();
    let mut task_tokens: BTreeMap<GameId, Vec<f64>> = BTreeMap::new();
    let mut k_max = 0u32;

    for (id, recs) in &grouped {
        let item = by_id[id];
        let solutions: BTreeSet<char> = item.solutions.iter().copied().collect();
        let correct = recs
            .iter()
            .filter(|r| r.extracted_answer.is_some_and(|a| solutions.contains(&a)))
            .count();
        let score = correct as f64 / recs.len() as f64;
        per_item.insert(id.to_string(), score);
        task_scores.entry(item.game_id).or_default().push(score);
        verdict_scores
            .entry(item.game_id)
            .or_default()
            .entry(item.verdict)
            .or_default()
            .push(score);
        k_max = k_max.max(recs.len() as u32);
        for r in recs {
            task_chars.entry(item.game_id).or_default().push(r.response_chars as f64);
            if let Some(t) = r.response_tokens {
                task_tokens.entry(item.game_id).or_default().push(t as f64);
            }
        }
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let stddev = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
    };

    let per_task = task_scores.iter().map(|(&g, v)| (g, mean(v))).collect();
    let per_task_verdict = verdict_scores
        .iter()
        .map(|(&g, m)| (g, m.iter().map(|(&v, s)| (v, mean(s))).collect()))
        .collect();
    let length_stats = task_chars
        .iter()
        .map(|(&g, chars)| {
            let tokens = task_tokens.get(&g);
            (g, LengthStats {
                mean_chars: mean(chars),
                stddev_chars: stddev(chars),
                mean_tokens: tokens.map(|t| mean(t)),
                stddev_tokens: tokens.map(|t| stddev(t)),
            })
        })
        .collect();

    Ok(Report { per_item, per_task, per_task_verdict, length_stats, samples_per_item: k_max })
}

/// Score table keyed by model, then benchmark name.
pub type ScoreTable = BTreeMap<String, BTreeMap<String, f64>>;

/// Reads a long-format CSV with header `model,benchmark,pass1`.
pub fn read_score_csv(path: &Path) -> Result<ScoreTable, GradingError> {
    let err = |source| GradingError::Csv { path: path.display().to_string(), source };
    let mut reader = csv::Reader::from_path(path).map_err(err)?;
    let mut table = ScoreTable::new();
    for row in reader.deserialize::<(String, String, f64)>() {
        let (model, benchmark, pass1) = row.map_err(err)?;
        table.entry(model).or_default().insert(benchmark, pass1);
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DeltaRow {
    pub model: String,
    pub task: String,
    pub reference: String,
    pub task_pass1: f64,
    pub reference_pass1: f64,
    pub delta: f64,
}

/// Eq. 2: elementwise `x - y` for every (task, reference-benchmark) pair
/// available for each model present in both tables.
pub fn delta_pass1(
    task_scores: &ScoreTable,
    reference_scores: &ScoreTable,
    tasks: &[&str],
    references: &[&str],
) -> Result<Vec<DeltaRow>, GradingError> {
    let mut rows = Vec::new();
    for (model, ts) in task_scores {
        let Some(rs) = reference_scores.get(model) else { continue };
        for &task in tasks {
            let x = *ts.get(task).ok_or_else(|| GradingError::MissingKey {
                model: model.clone(),
                benchmark: task.to_string(),
            })?;
            for &reference in references {
                let y = *rs.get(reference).ok_or_else(|| GradingError::MissingKey {
                    model: model.clone(),
                    benchmark: reference.to_string(),
                })?;
                rows.push(DeltaRow {
                    model: model.clone(),
                    task: task.to_string(),
                    reference: reference.to_string(),
                    task_pass1: x,
                    reference_pass1: y,
                    delta: x - y,
                });
            }
        }
    }
    Ok(rows)
}
