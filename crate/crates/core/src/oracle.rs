//! Independent exact verification of emitted solutions by game-tree search.
//!
//! Nothing here is consulted during generation; the oracle exists to
//! re-prove, after the fact, that every emitted solution means what its
//! verdict claims: a Win move wins in one ply, a Blocked move removes the
//! opponent's only immediate win, and a Fork move forces a win within three
//! further plies against optimal defense.
//!
//! Searches are exact within their ply bound. When the node budget runs out
//! the result is reported as inconclusive, never guessed.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::engine::{check_won, get_wins, GameState, SolutionRecord, Verdict};
use crate::topology::{GameSpec, PosMask};

/// Default node budget per query (expansions).
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchLimits {
    pub node_budget: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { node_budget: DEFAULT_NODE_BUDGET }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    WinInOne { r#move: char },
    MustBlock { r#move: char },
    ForcedWinAfter { r#move: char, within_plies: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProofResult {
    pub claim: Claim,
    pub outcome: Outcome,
    pub ply_bound: u32,
    pub nodes_expanded: u64,
}

impl ProofResult {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

/// Win-in-1: exact one-ply check that `mv` immediately wins for the mover.
pub fn verify_win(state: &GameState, mv: char) -> ProofResult {
    let spec = state.spec();
    let mover = state.to_move();
    let bit = move_bit(state, mv);
    let won = check_won(state.mask_of(mover) | bit, spec);
    ProofResult {
        claim: Claim::WinInOne { r#move: mv },
        outcome: if won { Outcome::Pass } else { Outcome::Fail },
        ply_bound: 1,
        nodes_expanded: 1,
    }
}

/// Must-block: the opponent had at least one immediate winning move before,
/// and zero after the mover plays `mv`.
pub fn verify_block(state: &GameState, mv: char) -> ProofResult {
    let spec = state.spec();
    let opponent = state.mask_of(state.to_move().other());
    let avail = state.available_mask();
    let bit = move_bit(state, mv);
    let before = get_wins(opponent, avail, spec);
    let after = get_wins(opponent, avail & !bit, spec);
    let ok = before != 0 && after == 0;
    ProofResult {
        claim: Claim::MustBlock { r#move: mv },
        outcome: if ok { Outcome::Pass } else { Outcome::Fail },
        ply_bound: 1,
        nodes_expanded: u64::from(avail.count_ones()) * 2,
    }
}

/// Exact bounded search: true iff, after the mover plays `mv`, the mover has
/// a forced win within `ply_bound` additional plies against optimal defense.
pub fn verify_forced_win(
    state: &GameState,
    mv: char,
    ply_bound: u32,
    limits: &SearchLimits,
) -> ProofResult {
    assert!(ply_bound >= 1);
    let spec = state.spec();
    let mover = state.to_move();
    let bit = move_bit(state, mv);
    let mover_mask = state.mask_of(mover) | bit;
    let opp_mask = state.mask_of(mover.other());
    let avail = state.available_mask() & !bit;

    let claim = Claim::ForcedWinAfter { r#move: mv, within_plies: ply_bound };
    if check_won(mover_mask, spec) {
        return ProofResult { claim, outcome: Outcome::Pass, ply_bound, nodes_expanded: 1 };
    }

    let mut ctx = SearchCtx::new(spec, limits.node_budget, true);
    // Opponent to move after `mv`; the mover forces a win iff the opponent's
    // best value is a loss.
    let outcome = match ctx.search(opp_mask, mover_mask, avail, Some(ply_bound), -1, 1) {
        Some(v) => {
            if v == -1 {
                Outcome::Pass
            } else {
                Outcome::Fail
            }
        }
        None => Outcome::Inconclusive,
    };
    ProofResult { claim, outcome, ply_bound, nodes_expanded: ctx.nodes }
}

/// Game value for the player to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameValue {
    MoverWin,
    Draw,
    MoverLoss,
}

impl GameValue {
    fn from_score(v: i8) -> GameValue {
        match v {
            1 => GameValue::MoverWin,
            0 => GameValue::Draw,
            _ => GameValue::MoverLoss,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactSolution {
    pub value: GameValue,
    /// Moves preserving the game value, sorted by label.
    pub optimal_moves: Vec<char>,
    pub nodes_expanded: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("node budget exhausted after {nodes} expansions; result inconclusive")]
    Inconclusive { nodes: u64 },
    #[error("solve_exact called on an already-won state")]
    AlreadyWon,
}

/// Exact game-theoretic value and value-preserving move set for the player
/// to move. Terminal draw is a full board without a winner.
pub fn solve_exact(state: &GameState, limits: &SearchLimits) -> Result<ExactSolution, OracleError> {
    solve_exact_inner(state, limits, true)
}

/// Same search with the transposition table disabled (test aid).
pub fn solve_exact_without_table(
    state: &GameState,
    limits: &SearchLimits,
) -> Result<ExactSolution, OracleError> {
    solve_exact_inner(state, limits, false)
}

fn solve_exact_inner(
    state: &GameState,
    limits: &SearchLimits,
    use_table: bool,
) -> Result<ExactSolution, OracleError> {
    let spec = state.spec();
    let cur_player = state.to_move();
    let cur = state.mask_of(cur_player);
    let opp = state.mask_of(cur_player.other());
    if check_won(cur, spec) || check_won(opp, spec) {
        return Err(OracleError::AlreadyWon);
    }
    let avail = state.available_mask();
    if avail == 0 {
        return Ok(ExactSolution { value: GameValue::Draw, optimal_moves: vec![], nodes_expanded: 0 });
    }

    let mut ctx = SearchCtx::new(spec, limits.node_budget, use_table);
    let mut best = -2i8;
    let mut values: Vec<(char, i8)> = Vec::new();
    let mut bits = avail;
    while bits != 0 {
        let bit = bits & bits.wrapping_neg();
        bits ^= bit;
        let label = spec.label_of(bit.trailing_zeros() as u8);
        // Full window per root move so every move's exact value is known.
        let v = if check_won(cur | bit, spec) {
            1
        } else {
            match ctx.search(opp, cur | bit, avail & !bit, None, -1, 1) {
                Some(child) => -child,
                None => return Err(OracleError::Inconclusive { nodes: ctx.nodes }),
            }
        };
        values.push((label, v));
        best = best.max(v);
    }
    let mut optimal: Vec<char> =
        values.into_iter().filter(|&(_, v)| v == best).map(|(l, _)| l).collect();
    optimal.sort_unstable();
    Ok(ExactSolution {
        value: GameValue::from_score(best),
        optimal_moves: optimal,
        nodes_expanded: ctx.nodes,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flag {
    Exact,
    Lower,
    Upper,
}

/// Per-query search context: node counter plus an occupancy-keyed
/// transposition table. Queries never share state.
struct SearchCtx<'s> {
    spec: &'s GameSpec,
    nodes: u64,
    budget: u64,
    table: Option<HashMap<(u64, u32), (i8, Flag)>>,
}

impl<'s> SearchCtx<'s> {
    fn new(spec: &'s GameSpec, budget: u64, use_table: bool) -> Self {
        SearchCtx { spec, nodes: 0, budget, table: use_table.then(HashMap::new) }
    }

    /// Negamax with alpha-beta over values {-1, 0, 1} from the perspective of
    /// the player holding `cur`. `plies` bounds the remaining depth (`None`
    /// for unbounded); at the bound, unresolved positions score 0, so a +1 /
    /// -1 result is always a genuine forced outcome within the bound.
    /// Returns `None` when the node budget is exhausted.
    fn search(
        &mut self,
        cur: PosMask,
        opp: PosMask,
        avail: PosMask,
        plies: Option<u32>,
        mut alpha: i8,
        beta: i8,
    ) -> Option<i8> {
        if avail == 0 {
            return Some(0);
        }
        if plies == Some(0) {
            return Some(0);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return None;
        }

        let key = ((cur as u64) | ((opp as u64) << 32), plies.unwrap_or(u32::MAX));
        if let Some(table) = &self.table {
            if let Some(&(v, flag)) = table.get(&key) {
                match flag {
                    Flag::Exact => return Some(v),
                    Flag::Lower if v >= beta => return Some(v),
                    Flag::Upper if v <= alpha => return Some(v),
                    _ => {}
                }
            }
        }

        let orig_alpha = alpha;
        let mut best = -1i8;
        let mut bits = avail;
        while bits != 0 {
            let bit = bits & bits.wrapping_neg();
            bits ^= bit;
            let v = if check_won(cur | bit, self.spec) {
                1
            } else {
                -self.search(opp, cur | bit, avail & !bit, plies.map(|p| p - 1), -beta, -alpha)?
            };
            if v > best {
                best = v;
            }
            if best > alpha {
                alpha = best;
            }
            if alpha >= beta {
                break;
            }
        }

        if let Some(table) = &mut self.table {
            let flag = if best <= orig_alpha {
                Flag::Upper
            } else if best >= beta {
                Flag::Lower
            } else {
                Flag::Exact
            };
            table.insert(key, (best, flag));
        }
        Some(best)
    }
}

fn move_bit(state: &GameState, mv: char) -> PosMask {
    let idx = state.spec().index_of(mv).expect("move label belongs to the game");
    let bit = 1u32 << idx;
    assert!(state.available_mask() & bit != 0, "move {mv} is not available");
    bit
}

/// Audit of one solution record against the verdict-appropriate checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionAudit {
    pub verdict: Verdict,
    pub checks: Vec<ProofResult>,
    pub outcome: Outcome,
}

/// Runs the oracle checks matching the record's verdict:
///
/// * Win: every solution move wins in one ply, and the solution set equals
///   the exact set of available moves passing the win-in-1 check.
/// * Blocked: the solution is a single move passing the must-block check.
/// * Fork: every solution move forces a win within 3 plies.
pub fn verify_solution(
    state: &GameState,
    record: &SolutionRecord,
    limits: &SearchLimits,
) -> SolutionAudit {
    let spec = state.spec();
    let mut checks = Vec::new();
    let mut failed = false;
    let mut inconclusive = false;

    match record.verdict {
        Verdict::Win => {
            let mut winning: Vec<char> = Vec::new();
            for &label in &spec.positions {
                if state.available_mask() & (1 << spec.index_of(label).unwrap()) == 0 {
                    continue;
                }
                let r = verify_win(state, label);
                if r.passed() {
                    winning.push(label);
                }
                if record.moves.contains(&label) {
                    if !r.passed() {
                        failed = true;
                    }
                    checks.push(r);
                }
            }
            if winning != record.moves {
                failed = true;
            }
        }
        Verdict::Blocked => {
            if record.moves.len() != 1 {
                failed = true;
            }
            for &mv in &record.moves {
                let r = verify_block(state, mv);
                if !r.passed() {
                    failed = true;
                }
                checks.push(r);
            }
        }
        Verdict::Fork => {
            for &mv in &record.moves {
                let r = verify_forced_win(state, mv, 3, limits);
                match r.outcome {
                    Outcome::Fail => failed = true,
                    Outcome::Inconclusive => inconclusive = true,
                    Outcome::Pass => {}
                }
                checks.push(r);
            }
        }
    }

    let outcome = if failed {
        Outcome::Fail
    } else if inconclusive {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    };
    SolutionAudit { verdict: record.verdict, checks, outcome }
}
