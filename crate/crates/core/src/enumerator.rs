//! Exhaustive candidate enumeration, filtering, and pool sampling.
//!
//! Enumeration walks unordered occupancy splits rather than ordered move
//! sequences: the filters and the solution depend only on final occupancy
//! (wins are monotone, so a non-won final position implies no intermediate
//! win), and the split space is orders of magnitude smaller. A canonical
//! alternating move order is synthesized afterwards for rendering.
//!
//! Splits partition cleanly over first-player combinations, so the walk is
//! data-parallel under the `parallel` feature; the sequential path produces
//! byte-identical pools.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::engine::{
    check_won, has_winning_fork, solve_position, solve_verdict, Player, SolutionRecord, Verdict,
};
use crate::topology::{GameId, GameSpec, PosMask};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("N={0} exceeds the board size {1}")]
    TooManyMoves(u8, usize),
    #[error("N={0} is not in the {1} schedule {2:?} (pass allow_off_schedule to override)")]
    OffSchedule(u8, GameId, Vec<u8>),
    #[error("cannot sample from an empty pool")]
    EmptyPool,
}

/// One filtered occupancy split. `first` belongs to the player who moved
/// first (Alice), `second` to the other; the solution belongs to the player
/// to move and is recomputed on demand from the masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub first: PosMask,
    pub second: PosMask,
    pub verdict: Verdict,
    /// Solution moves as a bitmask.
    pub moves: PosMask,
}

impl PoolEntry {
    pub fn n_moves(&self) -> u8 {
        (self.first.count_ones() + self.second.count_ones()) as u8
    }

    /// Alice moves next iff N is even.
    pub fn next_player(&self) -> Player {
        if self.n_moves() % 2 == 0 {
            Player::Alice
        } else {
            Player::Bob
        }
    }

    pub fn mask_of(&self, player: Player) -> PosMask {
        match player {
            Player::Alice => self.first,
            Player::Bob => self.second,
        }
    }

    /// Recomputes the full solution record with justifications.
    pub fn solution(&self, spec: &GameSpec) -> SolutionRecord {
        let current = self.mask_of(self.next_player());
        let opponent = self.mask_of(self.next_player().other());
        solve_position(current, opponent, spec).expect("pool entries carry a solution")
    }

    pub fn has_multiple_solutions(&self) -> bool {
        self.moves.count_ones() > 1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub win: u64,
    pub blocked: u64,
    pub fork: u64,
}

impl VerdictCounts {
    pub fn bump(&mut self, v: Verdict) {
        match v {
            Verdict::Win => self.win += 1,
            Verdict::Blocked => self.blocked += 1,
            Verdict::Fork => self.fork += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.win + self.blocked + self.fork
    }

    pub fn get(&self, v: Verdict) -> u64 {
        match v {
            Verdict::Win => self.win,
            Verdict::Blocked => self.blocked,
            Verdict::Fork => self.fork,
        }
    }
}

/// All retained splits for one game, possibly merged across several N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidatePool {
    pub game_id: GameId,
    /// Move counts contributing entries (a single value straight out of
    /// [`enumerate_pool`]; several after [`CandidatePool::merge`]).
    pub n_values: Vec<u8>,
    pub entries: Vec<PoolEntry>,
    pub pool_stats: VerdictCounts,
    /// Exact number of occupancy splits examined by enumeration.
    pub splits_examined: u64,
}

impl CandidatePool {
    /// Merges same-game pools, preserving per-pool entry order.
    pub fn merge(pools: Vec<CandidatePool>) -> CandidatePool {
        assert!(!pools.is_empty());
        let game_id = pools[0].game_id;
        assert!(pools.iter().all(|p| p.game_id == game_id));
        let mut merged = CandidatePool {
            game_id,
            n_values: Vec::new(),
            entries: Vec::new(),
            pool_stats: VerdictCounts::default(),
            splits_examined: 0,
        };
        for p in pools {
            merged.n_values.extend(&p.n_values);
            merged.entries.extend(p.entries);
            merged.pool_stats.win += p.pool_stats.win;
            merged.pool_stats.blocked += p.pool_stats.blocked;
            merged.pool_stats.fork += p.pool_stats.fork;
            merged.splits_examined += p.splits_examined;
        }
        merged
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingStrategy {
    Uniform,
    StratifiedByVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DedupPolicy {
    ByOccupancy,
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub seed: u64,
    pub per_game_target: usize,
    pub strategy: SamplingStrategy,
    pub dedup: DedupPolicy,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            seed: 0,
            per_game_target: 100,
            strategy: SamplingStrategy::Uniform,
            dedup: DedupPolicy::ByOccupancy,
        }
    }
}

/// Per-game question targets mirroring the published task counts
/// (102 + 100 + 90 + 120 = 412).
pub fn default_per_game_target(game: GameId) -> usize {
    match game {
        GameId::Ottt => 102,
        GameId::Dttt => 100,
        GameId::Cttt => 90,
        GameId::Sttt => 120,
    }
}

/// Enumerates all occupancy splits for `n` moves, applying both filters and
/// retaining only splits whose player-to-move has a solution.
///
/// Filters: (a) neither side has already won; (b) the player who made the
/// Nth move does not already hold a winning fork (two or more immediate
/// winning moves).
pub fn enumerate_pool(spec: &GameSpec, n: u8) -> Result<CandidatePool, EnumerateError> {
    enumerate_pool_with(spec, n, false)
}

pub fn enumerate_pool_with(
    spec: &GameSpec,
    n: u8,
    allow_off_schedule: bool,
) -> Result<CandidatePool, EnumerateError> {
    if n as usize > spec.total_positions {
        return Err(EnumerateError::TooManyMoves(n, spec.total_positions));
    }
    if !allow_off_schedule && !spec.n_schedule.contains(&n) {
        return Err(EnumerateError::OffSchedule(n, spec.game_id, spec.n_schedule.clone()));
    }

    let first_count = (n as usize + 1) / 2;
    let second_count = n as usize / 2;
    let first_masks = combination_masks(spec.total_positions, first_count);

    #[cfg(feature = "parallel")]
    let shards: Vec<(Vec<PoolEntry>, u64)> = first_masks
        .par_iter()
        .map(|&first| enumerate_second(spec, n, first, second_count))
        .collect();

    #[cfg(not(feature = "parallel"))]
    let shards: Vec<(Vec<PoolEntry>, u64)> = first_masks
        .iter()
        .map(|&first| enumerate_second(spec, n, first, second_count))
        .collect();

    let mut pool = CandidatePool {
        game_id: spec.game_id,
        n_values: vec![n],
        entries: Vec::new(),
        pool_stats: VerdictCounts::default(),
        splits_examined: 0,
    };
    for (entries, examined) in shards {
        pool.splits_examined += examined;
        for e in &entries {
            pool.pool_stats.bump(e.verdict);
        }
        pool.entries.extend(entries);
    }
    Ok(pool)
}

/// Sequential twin of [`enumerate_pool`], kept unconditionally compiled so
/// the two paths can be compared in tests and benchmarks.
pub fn enumerate_pool_sequential(spec: &GameSpec, n: u8) -> Result<CandidatePool, EnumerateError> {
    if n as usize > spec.total_positions {
        return Err(EnumerateError::TooManyMoves(n, spec.total_positions));
    }
    let first_count = (n as usize + 1) / 2;
    let second_count = n as usize / 2;
    let mut pool = CandidatePool {
        game_id: spec.game_id,
        n_values: vec![n],
        entries: Vec::new(),
        pool_stats: VerdictCounts::default(),
        splits_examined: 0,
    };
    for first in combination_masks(spec.total_positions, first_count) {
        let (entries, examined) = enumerate_second(spec, n, first, second_count);
        pool.splits_examined += examined;
        for e in &entries {
            pool.pool_stats.bump(e.verdict);
        }
        pool.entries.extend(entries);
    }
    Ok(pool)
}

/// Inner loop: all second-player combinations over the positions left free
/// by `first`, filtered and solved.
fn enumerate_second(
    spec: &GameSpec,
    n: u8,
    first: PosMask,
    second_count: usize,
) -> (Vec<PoolEntry>, u64) {
    let mut entries = Vec::new();
    let mut examined = 0u64;

    let first_won = check_won(first, spec);
    let rest: Vec<u8> = (0..spec.total_positions as u8)
        .filter(|&i| first & (1 << i) == 0)
        .collect();

    for_each_combination(&rest, second_count, |second| {
        examined += 1;
        if first_won || check_won(second, spec) {
            return;
        }
        let available = spec.full_mask() & !(first | second);
        // Nth move was made by the second player when N is even, else the
        // first; that player must not already hold a winning fork.
        let last_mover_mask = if n % 2 == 0 { second } else { first };
        if has_winning_fork(last_mover_mask, available, spec) {
            return;
        }
        let (current, opponent) =
            if n % 2 == 0 { (first, second) } else { (second, first) };
        if let Some((verdict, moves)) = solve_verdict(current, opponent, spec) {
            entries.push(PoolEntry { first, second, verdict, moves });
        }
    });
    (entries, examined)
}

/// All k-subsets of 0..n as bitmasks, lexicographic by index tuple.
fn combination_masks(n: usize, k: usize) -> Vec<PosMask> {
    let mut out = Vec::new();
    let positions: Vec<u8> = (0..n as u8).collect();
    for_each_combination(&positions, k, |m| out.push(m));
    out
}

/// Calls `f` with the bitmask of every k-subset of `positions`, in
/// lexicographic order, without per-item allocation.
fn for_each_combination(positions: &[u8], k: usize, mut f: impl FnMut(PosMask)) {
    let n = positions.len();
    if k > n {
        return;
    }
    if k == 0 {
        f(0);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut mask = 0u32;
        for &i in &idx {
            mask |= 1u32 << positions[i];
        }
        f(mask);

        let mut i = k - 1;
        while idx[i] == i + n - k {
            if i == 0 {
                return;
            }
            i -= 1;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Deterministic alternating move order for an entry: each player's
/// positions sorted by label, interleaved starting with the first player.
pub fn canonical_order(entry: &PoolEntry, spec: &GameSpec) -> Vec<(char, Player)> {
    let firsts = spec.labels_of_mask(entry.first);
    let seconds = spec.labels_of_mask(entry.second);
    let mut out = Vec::with_capacity(firsts.len() + seconds.len());
    for i in 0..firsts.len() {
        out.push((firsts[i], Player::Alice));
        if i < seconds.len() {
            out.push((seconds[i], Player::Bob));
        }
    }
    out
}

/// Seeded, reproducible sample of `config.per_game_target` entries.
///
/// Uniform strategy draws without replacement across the pool; stratified
/// balances verdict classes as evenly as the pool allows, redistributing
/// quota from exhausted classes. Output preserves pool order. If the target
/// meets or exceeds the pool size the whole pool is returned.
pub fn sample_pool(
    pool: &CandidatePool,
    config: &SamplingConfig,
) -> Result<Vec<PoolEntry>, EnumerateError> {
    if pool.entries.is_empty() {
        return Err(EnumerateError::EmptyPool);
    }
    let mut indices: Vec<usize> = (0..pool.entries.len()).collect();
    if config.dedup == DedupPolicy::ByOccupancy {
        let mut seen = std::collections::HashSet::new();
        indices.retain(|&i| seen.insert((pool.entries[i].first, pool.entries[i].second)));
    }

    // ChaCha keeps the stream stable across platforms and rand releases.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ pool.game_id as u64);
    let chosen: Vec<usize> = match config.strategy {
        SamplingStrategy::Uniform => {
            sample_without_replacement(&mut rng, &indices, config.per_game_target)
        }
        SamplingStrategy::StratifiedByVerdict => {
            let classes: Vec<Vec<usize>> = [Verdict::Win, Verdict::Blocked, Verdict::Fork]
                .iter()
                .map(|&v| {
                    indices
                        .iter()
                        .copied()
                        .filter(|&i| pool.entries[i].verdict == v)
                        .collect()
                })
                .collect();
            let quotas = split_quota(config.per_game_target, &[
                classes[0].len(),
                classes[1].len(),
                classes[2].len(),
            ]);
            let mut picked = Vec::new();
            for (class, quota) in classes.iter().zip(quotas) {
                picked.extend(sample_without_replacement(&mut rng, class, quota));
            }
            picked
        }
    };
    let mut chosen = chosen;
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| pool.entries[i]).collect())
}

/// Splits `target` across classes as evenly as their sizes allow.
fn split_quota(target: usize, sizes: &[usize]) -> Vec<usize> {
    let mut quotas = vec![0usize; sizes.len()];
    let mut remaining = target.min(sizes.iter().sum());
    // round-robin so ties break deterministically toward earlier classes
    while remaining > 0 {
        let mut progressed = false;
        for (q, &cap) in quotas.iter_mut().zip(sizes) {
            if remaining == 0 {
                break;
            }
            if *q < cap {
                *q += 1;
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    quotas
}

/// Floyd-style selection without replacement, deterministic for a given rng
/// stream; returns picks in selection order.
fn sample_without_replacement<R: Rng>(rng: &mut R, items: &[usize], k: usize) -> Vec<usize> {
    if k >= items.len() {
        return items.to_vec();
    }
    let mut pool: Vec<usize> = items.to_vec();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let j = rng.gen_range(0..pool.len());
        picked.push(pool.swap_remove(j));
    }
    picked
}

/// Figure-style distribution summary over pools or samples.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DistributionSummary {
    pub per_game: Vec<GameDistribution>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GameDistribution {
    pub game_id: GameId,
    pub total: u64,
    pub verdicts: VerdictCounts,
    pub single_solution: u64,
    pub multiple_solutions: u64,
}

/// Counts per (game, verdict) and per (game, single-vs-multiple-solution).
pub fn pool_report(pools: &[CandidatePool]) -> DistributionSummary {
    let per_game = pools
        .iter()
        .map(|pool| {
            let mut verdicts = VerdictCounts::default();
            let mut single = 0;
            let mut multiple = 0;
            for e in &pool.entries {
                verdicts.bump(e.verdict);
                if e.has_multiple_solutions() {
                    multiple += 1;
                } else {
                    single += 1;
                }
            }
            GameDistribution {
                game_id: pool.game_id,
                total: pool.entries.len() as u64,
                verdicts,
                single_solution: single,
                multiple_solutions: multiple,
            }
        })
        .collect();
    DistributionSummary { per_game }
}
