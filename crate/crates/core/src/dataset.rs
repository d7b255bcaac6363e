//! Question rendering and the JSONL benchmark format.
//!
//! Every item is self-verifying: replaying its move list through the engine
//! must reproduce its solutions and verdict exactly, and `load_dataset`
//! enforces that on every read. Rules preambles and narration styles come
//! from [`crate::templates`] and are reproduced byte-for-byte.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{get_solution, GameState, Player, SolutionRecord, Verdict};
use crate::enumerator::PoolEntry;
use crate::templates;
use crate::topology::{spec, GameId, GameSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON: {source}")]
    Malformed {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("item {item_id}: {reason}")]
    InvalidItem { item_id: String, reason: String },
    #[error("item {item_id}: replay mismatch: expected solutions {expected:?} ({expected_verdict}), got {actual:?} ({actual_verdict})")]
    ReplayMismatch {
        item_id: String,
        expected: Vec<char>,
        expected_verdict: Verdict,
        actual: Vec<char>,
        actual_verdict: Verdict,
    },
    #[error("item {item_id}: moves do not replay: {reason}")]
    BadMoves { item_id: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub position: char,
    pub player: Player,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorMetadata {
    pub seed: u64,
    pub tool_version: String,
}

/// One serialized benchmark question.
///
/// Field order here is the JSONL key order. Unknown fields found on disk are
/// preserved on reload (tolerant reader).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub schema_version: u32,
    pub item_id: String,
    pub game_id: GameId,
    pub n_moves: u8,
    pub next_player: Player,
    pub moves: Vec<MoveRecord>,
    pub question: String,
    pub solutions: Vec<char>,
    pub verdict: Verdict,
    /// Human-readable winning sets per solution move,
    /// e.g. "Fork with A-D-G & G-H-I".
    pub justification: BTreeMap<char, String>,
    pub generator_metadata: GeneratorMetadata,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// Whether to append the boxed-answer suffix to rendered questions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuffixMode {
    WithSuffix,
    NoSuffix,
}

/// Renders the full question text: rules preamble, move narrative in the
/// game's narration style, the asked-player sentence, and (optionally) the
/// boxed-answer suffix.
pub fn render_question(
    game: &GameSpec,
    moves: &[(char, Player)],
    suffix: SuffixMode,
) -> Result<String, DatasetError> {
    let mut text = String::from(game.rules_text);
    for (i, &(label, player)) in moves.iter().enumerate() {
        let expected = if i % 2 == 0 { Player::Alice } else { Player::Bob };
        if player != expected {
            return Err(DatasetError::InvalidItem {
                item_id: String::new(),
                reason: format!("move {i} by {player}, expected {expected} (must alternate starting with Alice)"),
            });
        }
        if game.index_of(label).is_none() {
            return Err(DatasetError::InvalidItem {
                item_id: String::new(),
                reason: format!("unknown label {label:?} for {}", game.game_id),
            });
        }
        text.push(' ');
        text.push_str(&templates::move_sentence(game.game_id, i, player, label));
    }
    let next = if moves.len() % 2 == 0 { Player::Alice } else { Player::Bob };
    text.push(' ');
    text.push_str(&templates::question_sentence(next));
    if suffix == SuffixMode::WithSuffix {
        text.push(' ');
        text.push_str(templates::ANSWER_SUFFIX);
    }
    Ok(text)
}

/// Renders a solution record's justification strings,
/// e.g. `G -> "Fork with A-D-G & G-H-I"`.
pub fn render_justification(record: &SolutionRecord) -> BTreeMap<char, String> {
    let prefix = match record.verdict {
        Verdict::Win => "Win with",
        Verdict::Blocked => "Blocks",
        Verdict::Fork => "Fork with",
    };
    record
        .justification
        .iter()
        .map(|(&mv, sets)| {
            let joined = sets
                .iter()
                .map(|s| s.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("-"))
                .collect::<Vec<_>>()
                .join(" & ");
            (mv, format!("{prefix} {joined}"))
        })
        .collect()
}

/// Builds a validated benchmark item from a pool entry.
pub fn make_item(
    entry: &PoolEntry,
    spec: &GameSpec,
    sample_index: usize,
    seed: u64,
    suffix: SuffixMode,
) -> BenchmarkItem {
    let moves = crate::enumerator::canonical_order(entry, spec);
    let solution = entry.solution(spec);
    let n = entry.n_moves();
    let item_id = format!(
        "{}-n{}-{:07x}{:07x}-{:04}",
        spec.game_id, n, entry.first, entry.second, sample_index
    );
    BenchmarkItem {
        schema_version: SCHEMA_VERSION,
        item_id,
        game_id: spec.game_id,
        n_moves: n,
        next_player: entry.next_player(),
        moves: moves.iter().map(|&(position, player)| MoveRecord { position, player }).collect(),
        question: render_question(spec, &moves, suffix).expect("pool entries render cleanly"),
        solutions: solution.moves.clone(),
        verdict: solution.verdict,
        justification: render_justification(&solution),
        generator_metadata: GeneratorMetadata {
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        extra: serde_json::Map::new(),
    }
}

/// Validates one item's internal invariants, including the engine replay.
pub fn validate_item(item: &BenchmarkItem) -> Result<(), DatasetError> {
    let game = spec(item.game_id);
    let id = || item.item_id.clone();

    if item.solutions.is_empty() {
        return Err(DatasetError::InvalidItem { item_id: id(), reason: "empty solutions".into() });
    }
    for &s in &item.solutions {
        if game.index_of(s).is_none() {
            return Err(DatasetError::InvalidItem {
                item_id: id(),
                reason: format!("solution label {s:?} is not a {} position", item.game_id),
            });
        }
    }
    if item.n_moves as usize != item.moves.len() {
        return Err(DatasetError::InvalidItem {
            item_id: id(),
            reason: format!("n_moves={} but {} moves listed", item.n_moves, item.moves.len()),
        });
    }

    // Question text must end with the asked-player sentence plus the
    // configured suffix (if present).
    let question_tail = templates::question_sentence(item.next_player);
    let with_suffix = format!("{question_tail} {}", templates::ANSWER_SUFFIX);
    if !item.question.ends_with(&with_suffix) && !item.question.ends_with(&question_tail) {
        return Err(DatasetError::InvalidItem {
            item_id: id(),
            reason: "question does not end with the asked-player sentence".into(),
        });
    }

    // Replay through the engine and require identical solutions + verdict.
    let labels: Vec<char> = item.moves.iter().map(|m| m.position).collect();
    let state = GameState::from_moves(item.game_id, &labels)
        .map_err(|e| DatasetError::BadMoves { item_id: id(), reason: e.to_string() })?;
    if state.to_move() != item.next_player {
        return Err(DatasetError::InvalidItem {
            item_id: id(),
            reason: format!("next_player {} but {} is to move", item.next_player, state.to_move()),
        });
    }
    let solution = get_solution(&state)
        .map_err(|e| DatasetError::BadMoves { item_id: id(), reason: e.to_string() })?
        .ok_or_else(|| DatasetError::InvalidItem {
            item_id: id(),
            reason: "state has no solution under the generation rule".into(),
        })?;
    if solution.moves != item.solutions || solution.verdict != item.verdict {
        return Err(DatasetError::ReplayMismatch {
            item_id: id(),
            expected: item.solutions.clone(),
            expected_verdict: item.verdict,
            actual: solution.moves,
            actual_verdict: solution.verdict,
        });
    }
    if render_justification(&solution) != item.justification {
        return Err(DatasetError::InvalidItem {
            item_id: id(),
            reason: "justification strings do not match the replayed solution".into(),
        });
    }
    Ok(())
}

/// Writes items as JSONL (one object per line, fixed key order, trailing
/// newline). Validates every item first; an invalid item fails the whole
/// batch and nothing is written.
pub fn emit_dataset(items: &[BenchmarkItem], path: &Path) -> Result<usize, DatasetError> {
    for item in items {
        validate_item(item)?;
    }
    let io_err = |source| DatasetError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("item serializes");
        w.write_all(line.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(items.len())
}

/// Loads a JSONL dataset, re-validating every invariant including the
/// engine-replay integrity seal.
pub fn load_dataset(path: &Path) -> Result<Vec<BenchmarkItem>, DatasetError> {
    let io_err = |source| DatasetError::Io { path: path.display().to_string(), source };
    let file = File::open(path).map_err(io_err)?;
    let reader = BufReader::new(file);
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let item: BenchmarkItem = serde_json::from_str(&line)
            .map_err(|source| DatasetError::Malformed { line: i + 1, source })?;
        validate_item(&item)?;
        items.push(item);
    }
    Ok(items)
}

/// Fixed-width text diagram of a state: letter grids with the occupancy
/// marks from the question templates (white/black stones), and per-cube
/// vertex lists for the cube game.
pub fn render_board_text(state: &GameState) -> String {
    let spec = state.spec();
    let alice = state.mask_of(Player::Alice);
    let bob = state.mask_of(Player::Bob);
    let cell = |label: char| -> char {
        let bit = 1u32 << spec.index_of(label).unwrap();
        if alice & bit != 0 {
            '\u{25cb}' // white stone
        } else if bob & bit != 0 {
            '\u{25cf}' // black stone
        } else {
            label
        }
    };

    match state.game() {
        GameId::Ottt => grid_text(&spec.positions, 3, cell),
        GameId::Sttt => grid_text(&spec.positions, 5, cell),
        GameId::Dttt => {
            let layout =
                ['A', 'B', 'C', 'J', 'K', 'D', 'E', 'F', 'L', 'M', 'G', 'H', 'I', 'N', 'O'];
            grid_text(&layout, 5, cell)
        }
        GameId::Cttt => {
            let mut out = String::new();
            for (name, verts) in
                [("cube 1", "ABCDEFGH"), ("cube 2", "BIJCFKLG")]
            {
                out.push_str(name);
                out.push(':');
                for v in verts.chars() {
                    out.push(' ');
                    out.push(v);
                    out.push('=');
                    let c = cell(v);
                    out.push(if c == v { '.' } else { c });
                }
                out.push('\n');
            }
            out
        }
    }
}

fn grid_text(labels: &[char], cols: usize, cell: impl Fn(char) -> char) -> String {
    let mut out = String::new();
    for row in labels.chunks(cols) {
        let line: Vec<String> = row.iter().map(|&l| cell(l).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
