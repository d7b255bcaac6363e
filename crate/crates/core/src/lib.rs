//! Generator, exact verifier, and evaluation harness for a family of four
//! two-player tic-tac-toe-style games (`oTTT`, `dTTT`, `cTTT`, `sTTT`).
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`topology`] defines the four boards and derives their winning sets
//!    from exact integer geometry.
//! 2. [`engine`] implements win / block / fork detection and the
//!    solution-with-verdict rule used to label questions.
//! 3. [`enumerator`] exhaustively enumerates candidate positions per
//!    (game, move count), filters them, and samples question pools.
//! 4. [`oracle`] independently re-proves every emitted solution by exact
//!    game-tree search.
//! 5. [`dataset`] renders states into natural-language questions and
//!    reads/writes the JSONL benchmark format.
//! 6. [`grading`] extracts boxed answers and computes Pass@1 reports.
//! 7. [`evalclient`] collects sampled model responses from a
//!    chat-completions endpoint with a durable, resumable ledger.
//!
//! Enumeration and verification sweeps run data-parallel under the
//! `parallel` feature (enabled by default); disabling it falls back to the
//! sequential code path with identical output.

pub mod dataset;
pub mod engine;
pub mod enumerator;
pub mod evalclient;
pub mod grading;
pub mod mockserver;
pub mod oracle;
pub mod templates;
pub mod topology;
