//! Board definitions for the four game variants.
//!
//! Each board is a list of labeled positions with integer coordinates plus a
//! set of winning position-sets. Winning sets for the cube and lattice games
//! are derived from exact integer geometry rather than hand-enumerated; the
//! resulting counts (8 / 15 / 23 / 25) are additionally frozen as regression
//! constants once the derivation oracles in the test suite confirm them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bitmask over the positions of one board (at most 25 bits used).
pub type PosMask = u32;

/// Frozen winning-set counts, confirmed by the derivation oracles in tests.
pub const WINNING_SET_COUNTS: [(GameId, usize); 4] = [
    (GameId::Ottt, 8),
    (GameId::Dttt, 15),
    (GameId::Cttt, 23),
    (GameId::Sttt, 25),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GameId {
    #[serde(rename = "oTTT")]
    Ottt,
    #[serde(rename = "dTTT")]
    Dttt,
    #[serde(rename = "cTTT")]
    Cttt,
    #[serde(rename = "sTTT")]
    Sttt,
}

impl GameId {
    pub const ALL: [GameId; 4] = [GameId::Ottt, GameId::Dttt, GameId::Cttt, GameId::Sttt];

    pub fn as_str(self) -> &'static str {
        match self {
            GameId::Ottt => "oTTT",
            GameId::Dttt => "dTTT",
            GameId::Cttt => "cTTT",
            GameId::Sttt => "sTTT",
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameId {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ottt" => Ok(GameId::Ottt),
            "dttt" => Ok(GameId::Dttt),
            "cttt" => Ok(GameId::Cttt),
            "sttt" => Ok(GameId::Sttt),
            _ => Err(TopologyError::UnknownGame(s.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("unknown game id: {0:?} (expected oTTT, dTTT, cTTT, or sTTT)")]
    UnknownGame(String),
    #[error("coordinate map is not two unit cubes sharing a face: {0}")]
    MalformedCubes(String),
    #[error("coordinate map is not a 5x5 unit lattice: {0}")]
    MalformedLattice(String),
}

/// Immutable description of one game variant.
#[derive(Debug, Clone, Serialize)]
pub struct GameSpec {
    pub game_id: GameId,
    /// Position labels in row-major (top-to-bottom, left-to-right) order.
    pub positions: Vec<char>,
    pub total_positions: usize,
    /// Number of positions per winning set (3 or 4).
    pub win_size: usize,
    /// Canonically sorted winning sets (members sorted, list sorted).
    pub winning_sets: Vec<Vec<char>>,
    /// Same sets as bitmasks, parallel to `winning_sets`.
    #[serde(skip)]
    pub winning_masks: Vec<PosMask>,
    /// Integer coordinates per label: (row, col) for grids, (x, y, z) for cubes.
    pub coordinates: BTreeMap<char, Vec<i64>>,
    /// Admissible move counts for question generation.
    pub n_schedule: Vec<u8>,
    /// Fixed rules preamble used verbatim in rendered questions.
    pub rules_text: &'static str,
}

impl GameSpec {
    pub fn index_of(&self, label: char) -> Option<u8> {
        self.positions.iter().position(|&c| c == label).map(|i| i as u8)
    }

    pub fn label_of(&self, index: u8) -> char {
        self.positions[index as usize]
    }

    pub fn full_mask(&self) -> PosMask {
        (1u32 << self.total_positions) - 1
    }

    pub fn mask_of(&self, labels: &[char]) -> Option<PosMask> {
        let mut m = 0;
        for &l in labels {
            m |= 1u32 << self.index_of(l)?;
        }
        Some(m)
    }

    pub fn labels_of_mask(&self, mask: PosMask) -> Vec<char> {
        (0..self.total_positions as u8)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| self.label_of(i))
            .collect()
    }

    pub fn winning_set_count(&self) -> usize {
        self.winning_sets.len()
    }

    /// Audit export: labels, coordinates, and winning sets as a JSON document.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "game_id": self.game_id,
            "positions": self.positions,
            "total_positions": self.total_positions,
            "win_size": self.win_size,
            "winning_set_count": self.winning_set_count(),
            "winning_sets": self.winning_sets,
            "coordinates": self.coordinates,
            "n_schedule": self.n_schedule,
        })
    }
}

/// Returns the cached immutable spec for a game.
pub fn spec(game: GameId) -> &'static GameSpec {
    static SPECS: OnceLock<Vec<GameSpec>> = OnceLock::new();
    let all = SPECS.get_or_init(|| GameId::ALL.iter().map(|&g| build_spec(g)).collect());
    &all[GameId::ALL.iter().position(|&g| g == game).unwrap()]
}

/// Builds the fully populated spec for one game, deriving its winning sets.
pub fn build_spec(game: GameId) -> GameSpec {
    match game {
        GameId::Ottt => {
            let positions: Vec<char> = ('A'..='I').collect();
            let coordinates = grid_coords(&positions, 3);
            let sets = canonical_sets(grid3_lines(&positions));
            finish_spec(game, positions, 3, sets, coordinates, vec![4, 5])
        }
        GameId::Dttt => {
            let positions: Vec<char> = ('A'..='O').collect();
            // Combined layout is 3 rows x 5 cols; grid 2 shares column C,F,I.
            let layout = ['A', 'B', 'C', 'J', 'K', 'D', 'E', 'F', 'L', 'M', 'G', 'H', 'I', 'N', 'O'];
            let mut coordinates = BTreeMap::new();
            for (i, &l) in layout.iter().enumerate() {
                coordinates.insert(l, vec![(i / 5) as i64, (i % 5) as i64]);
            }
            let grid1: Vec<char> = ('A'..='I').collect();
            let grid2 = vec!['C', 'J', 'K', 'F', 'L', 'M', 'I', 'N', 'O'];
            let mut lines = grid3_lines(&grid1);
            lines.extend(grid3_lines(&grid2));
            let sets = canonical_sets(lines);
            finish_spec(game, positions, 3, sets, coordinates, vec![6, 7])
        }
        GameId::Cttt => {
            let positions: Vec<char> = ('A'..='L').collect();
            let coordinates = cube_coords();
            let sets = derive_cube_planes(&coordinates).expect("built-in cube coordinates");
            finish_spec(game, positions, 4, sets, coordinates, vec![5, 6, 7])
        }
        GameId::Sttt => {
            let positions: Vec<char> = ('A'..='Y').collect();
            let coordinates = grid_coords(&positions, 5);
            let sets = derive_squares_5x5(&coordinates).expect("built-in lattice coordinates");
            finish_spec(game, positions, 4, sets, coordinates, vec![6, 7])
        }
    }
}

fn finish_spec(
    game_id: GameId,
    positions: Vec<char>,
    win_size: usize,
    winning_sets: Vec<Vec<char>>,
    coordinates: BTreeMap<char, Vec<i64>>,
    n_schedule: Vec<u8>,
) -> GameSpec {
    let total_positions = positions.len();
    let mut spec = GameSpec {
        game_id,
        positions,
        total_positions,
        win_size,
        winning_sets,
        winning_masks: Vec::new(),
        coordinates,
        n_schedule,
        rules_text: crate::templates::rules_text(game_id),
    };
    spec.winning_masks = spec
        .winning_sets
        .iter()
        .map(|s| spec.mask_of(s).expect("winning set uses known labels"))
        .collect();
    debug_assert!(spec.winning_sets.iter().all(|s| s.len() == win_size));
    spec
}

fn grid_coords(labels: &[char], cols: usize) -> BTreeMap<char, Vec<i64>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, vec![(i / cols) as i64, (i % cols) as i64]))
        .collect()
}

/// The 8 lines (3 rows, 3 columns, 2 diagonals) of one 3x3 grid given its
/// 9 labels in row-major order.
fn grid3_lines(labels: &[char]) -> Vec<Vec<char>> {
    assert_eq!(labels.len(), 9);
    let at = |r: usize, c: usize| labels[r * 3 + c];
    let mut lines = Vec::with_capacity(8);
    for i in 0..3 {
        lines.push(vec![at(i, 0), at(i, 1), at(i, 2)]);
        lines.push(vec![at(0, i), at(1, i), at(2, i)]);
    }
    lines.push(vec![at(0, 0), at(1, 1), at(2, 2)]);
    lines.push(vec![at(0, 2), at(1, 1), at(2, 0)]);
    lines
}

/// Sorts each set's members, then deduplicates and sorts the list.
fn canonical_sets(mut sets: Vec<Vec<char>>) -> Vec<Vec<char>> {
    for s in &mut sets {
        s.sort_unstable();
    }
    sets.sort();
    sets.dedup();
    sets
}

/// Cube-game coordinates: cube 1 occupies x in {0,1}, cube 2 x in {1,2};
/// the shared face B,C,G,F lies in the x = 1 plane.
fn cube_coords() -> BTreeMap<char, Vec<i64>> {
    [
        ('A', [0, 0, 1]),
        ('B', [1, 0, 1]),
        ('C', [1, 1, 1]),
        ('D', [0, 1, 1]),
        ('E', [0, 0, 0]),
        ('F', [1, 0, 0]),
        ('G', [1, 1, 0]),
        ('H', [0, 1, 0]),
        ('I', [2, 0, 1]),
        ('J', [2, 1, 1]),
        ('K', [2, 0, 0]),
        ('L', [2, 1, 0]),
    ]
    .into_iter()
    .map(|(l, c)| (l, c.to_vec()))
    .collect()
}

fn sub3(a: &[i64], b: &[i64]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: [i64; 3], b: [i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn dist2(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn collinear3(a: &[i64], b: &[i64], c: &[i64]) -> bool {
    cross3(sub3(b, a), sub3(c, a)) == [0, 0, 0]
}

/// True iff the 8 points form a unit cube (12 edges of length 1, 12 face
/// diagonals of sqrt(2), 4 body diagonals of sqrt(3)).
fn is_unit_cube(points: &[&Vec<i64>]) -> bool {
    if points.len() != 8 {
        return false;
    }
    let mut dists: Vec<i64> = Vec::with_capacity(28);
    for i in 0..8 {
        for j in i + 1..8 {
            dists.push(dist2(points[i], points[j]));
        }
    }
    dists.sort_unstable();
    dists == [vec![1i64; 12], vec![2; 12], vec![3; 4]].concat()
}

/// Derives every exactly-coplanar 4-vertex subset (no 3 collinear) of each of
/// the two unit cubes in the coordinate map; the union is deduplicated by set
/// equality. Rejects maps that do not form two unit cubes sharing a face.
pub fn derive_cube_planes(
    coords: &BTreeMap<char, Vec<i64>>,
) -> Result<Vec<Vec<char>>, TopologyError> {
    let labels: Vec<char> = coords.keys().copied().collect();
    if labels.len() != 12 || coords.values().any(|c| c.len() != 3) {
        return Err(TopologyError::MalformedCubes(format!(
            "expected 12 labeled 3-d points, got {}",
            labels.len()
        )));
    }

    // Locate the two unit cubes among all 8-subsets.
    let mut cubes: Vec<Vec<char>> = Vec::new();
    for combo in combinations(12, 8) {
        let pts: Vec<&Vec<i64>> = combo.iter().map(|&i| &coords[&labels[i]]).collect();
        if is_unit_cube(&pts) {
            cubes.push(combo.iter().map(|&i| labels[i]).collect());
        }
    }
    if cubes.len() != 2 {
        return Err(TopologyError::MalformedCubes(format!(
            "found {} unit cubes, expected 2",
            cubes.len()
        )));
    }
    let shared: Vec<char> = cubes[0].iter().copied().filter(|l| cubes[1].contains(l)).collect();
    if shared.len() != 4 {
        return Err(TopologyError::MalformedCubes(format!(
            "cubes share {} vertices, expected a 4-vertex face",
            shared.len()
        )));
    }

    let mut sets: Vec<Vec<char>> = Vec::new();
    for cube in &cubes {
        for combo in combinations(8, 4) {
            let quad: Vec<char> = combo.iter().map(|&i| cube[i]).collect();
            let p: Vec<&Vec<i64>> = quad.iter().map(|l| &coords[l]).collect();
            let coplanar = dot3(sub3(p[1], p[0]), cross3(sub3(p[2], p[0]), sub3(p[3], p[0]))) == 0;
            let no_collinear_triple = combinations(4, 3)
                .into_iter()
                .all(|t| !collinear3(p[t[0]], p[t[1]], p[t[2]]));
            if coplanar && no_collinear_triple {
                sets.push(quad);
            }
        }
    }
    Ok(canonical_sets(sets))
}

/// Derives the 16 axis-aligned unit squares and 9 diagonal (side sqrt 2)
/// squares of the 5x5 lattice. Rejects non-5x5 input.
pub fn derive_squares_5x5(
    coords: &BTreeMap<char, Vec<i64>>,
) -> Result<Vec<Vec<char>>, TopologyError> {
    if coords.len() != 25 || coords.values().any(|c| c.len() != 2) {
        return Err(TopologyError::MalformedLattice(format!(
            "expected 25 labeled 2-d points, got {}",
            coords.len()
        )));
    }
    let mut by_coord: BTreeMap<(i64, i64), char> = BTreeMap::new();
    for (&l, c) in coords {
        by_coord.insert((c[0], c[1]), l);
    }
    for r in 0..5 {
        for c in 0..5 {
            if !by_coord.contains_key(&(r, c)) {
                return Err(TopologyError::MalformedLattice(format!(
                    "missing lattice point ({r}, {c})"
                )));
            }
        }
    }

    let at = |r: i64, c: i64| by_coord[&(r, c)];
    let mut sets = Vec::with_capacity(25);
    for r in 0..4 {
        for c in 0..4 {
            sets.push(vec![at(r, c), at(r, c + 1), at(r + 1, c), at(r + 1, c + 1)]);
        }
    }
    for r in 1..4 {
        for c in 1..4 {
            sets.push(vec![at(r - 1, c), at(r, c - 1), at(r, c + 1), at(r + 1, c)]);
        }
    }
    Ok(canonical_sets(sets))
}

/// All k-subsets of 0..n as sorted index vectors, in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(labels: &str) -> Vec<char> {
        let mut v: Vec<char> = labels.chars().collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn ottt_has_eight_lines() {
        let s = build_spec(GameId::Ottt);
        assert_eq!(s.winning_set_count(), 8);
        assert_eq!(s.total_positions, 9);
        for line in ["ABC", "DEF", "GHI", "ADG", "BEH", "CFI", "AEI", "CEG"] {
            assert!(s.winning_sets.contains(&set(line)), "missing {line}");
        }
    }

    #[test]
    fn dttt_has_fifteen_lines_after_dedup() {
        let s = build_spec(GameId::Dttt);
        assert_eq!(s.winning_set_count(), 15);
        assert_eq!(s.total_positions, 15);
        // shared column counted once
        assert_eq!(s.winning_sets.iter().filter(|w| **w == set("CFI")).count(), 1);
        assert!(s.winning_sets.contains(&set("CLO")));
        assert!(s.winning_sets.contains(&set("KLI")));
    }

    #[test]
    fn dttt_grid1_restriction_equals_ottt_lines() {
        let d = build_spec(GameId::Dttt);
        let o = build_spec(GameId::Ottt);
        let grid1: Vec<Vec<char>> = d
            .winning_sets
            .iter()
            .filter(|w| w.iter().all(|&c| c <= 'I'))
            .cloned()
            .collect();
        assert_eq!(grid1, o.winning_sets);
    }

    #[test]
    fn cttt_planes_match_paper_examples() {
        let s = build_spec(GameId::Cttt);
        assert_eq!(s.winning_set_count(), 23);
        assert_eq!(s.total_positions, 12);
        assert!(s.winning_sets.contains(&set("ACGE")), "diagonal rectangle A-C-G-E");
        assert_eq!(s.winning_sets.iter().filter(|w| **w == set("BCGF")).count(), 1);
    }

    // Independent oracle: a coplanar non-degenerate 4-subset of a unit cube is
    // either a face (squared distances {1,1,1,1,2,2}) or a diagonal rectangle
    // ({1,1,2,2,3,3}). Classify all C(8,4) subsets by distance multiset alone.
    #[test]
    fn cube_plane_oracle_by_distance_multiset() {
        let coords = cube_coords();
        let cubes: [Vec<char>; 2] = [
            "ABCDEFGH".chars().collect(),
            "BCFGIJKL".chars().collect(),
        ];
        let mut expected: Vec<Vec<char>> = Vec::new();
        for cube in &cubes {
            for combo in combinations(8, 4) {
                let quad: Vec<char> = combo.iter().map(|&i| cube[i]).collect();
                let p: Vec<&Vec<i64>> = quad.iter().map(|l| &coords[l]).collect();
                let mut d = Vec::new();
                for i in 0..4 {
                    for j in i + 1..4 {
                        d.push(dist2(p[i], p[j]));
                    }
                }
                d.sort_unstable();
                if d == [1, 1, 1, 1, 2, 2] || d == [1, 1, 2, 2, 3, 3] {
                    expected.push(quad);
                }
            }
        }
        let expected = canonical_sets(expected);
        assert_eq!(expected.len(), 23);
        assert_eq!(derive_cube_planes(&coords).unwrap(), expected);
    }

    #[test]
    fn cube_planes_reject_malformed_input() {
        let mut coords = cube_coords();
        coords.insert('A', vec![5, 5, 5]);
        assert!(matches!(
            derive_cube_planes(&coords),
            Err(TopologyError::MalformedCubes(_))
        ));
    }

    #[test]
    fn sttt_squares_match_paper_examples() {
        let s = build_spec(GameId::Sttt);
        assert_eq!(s.winning_set_count(), 25);
        assert_eq!(s.total_positions, 25);
        assert!(s.winning_sets.contains(&set("ABGF")), "unit square ABGF");
        assert!(s.winning_sets.contains(&set("FBHL")), "diagonal square FBHL");
        // A 2x2 axis-aligned square of side 2 is not a winning set.
        assert!(!s.winning_sets.contains(&set("ACMK")));
    }

    // Independent oracle: brute-force all C(25,4) subsets, testing the two
    // square predicates by pairwise squared distances.
    #[test]
    fn square_oracle_by_brute_force() {
        let spec = build_spec(GameId::Sttt);
        let labels = spec.positions.clone();
        let mut expected: Vec<Vec<char>> = Vec::new();
        for combo in combinations(25, 4) {
            let quad: Vec<char> = combo.iter().map(|&i| labels[i]).collect();
            let p: Vec<&Vec<i64>> = quad.iter().map(|l| &spec.coordinates[l]).collect();
            let mut d = Vec::new();
            for i in 0..4 {
                for j in i + 1..4 {
                    d.push(dist2(p[i], p[j]));
                }
            }
            d.sort_unstable();
            if d == [1, 1, 1, 1, 2, 2] || d == [2, 2, 2, 2, 4, 4] {
                expected.push(quad);
            }
        }
        let expected = canonical_sets(expected);
        assert_eq!(expected.len(), 25);
        assert_eq!(spec.winning_sets, expected);
    }

    #[test]
    fn squares_reject_non_5x5_input() {
        let mut coords = grid_coords(&('A'..='Y').collect::<Vec<_>>(), 5);
        coords.remove(&'Y');
        assert!(matches!(
            derive_squares_5x5(&coords),
            Err(TopologyError::MalformedLattice(_))
        ));
        coords.insert('Y', vec![9, 9]);
        assert!(matches!(
            derive_squares_5x5(&coords),
            Err(TopologyError::MalformedLattice(_))
        ));
    }

    #[test]
    fn every_position_is_in_some_winning_set() {
        for &game in &GameId::ALL {
            let s = spec(game);
            for &p in &s.positions {
                assert!(
                    s.winning_sets.iter().any(|w| w.contains(&p)),
                    "{game}: position {p} unused"
                );
            }
        }
    }

    #[test]
    fn specs_are_internally_consistent() {
        for &game in &GameId::ALL {
            let s = spec(game);
            assert_eq!(s.positions.len(), s.total_positions);
            assert_eq!(s.winning_sets.len(), s.winning_masks.len());
            for (w, &m) in s.winning_sets.iter().zip(&s.winning_masks) {
                assert_eq!(w.len(), s.win_size);
                assert_eq!(m.count_ones() as usize, s.win_size);
                assert_eq!(s.mask_of(w), Some(m));
            }
            // no duplicate sets
            let mut sorted = s.winning_sets.clone();
            sorted.dedup();
            assert_eq!(sorted.len(), s.winning_sets.len());
            // distinct coordinates inside the bounding box
            let coords: Vec<_> = s.coordinates.values().collect();
            for i in 0..coords.len() {
                for j in i + 1..coords.len() {
                    assert_ne!(coords[i], coords[j]);
                }
            }
        }
    }

    #[test]
    fn derivations_are_deterministic() {
        for &game in &GameId::ALL {
            assert_eq!(build_spec(game).winning_sets, build_spec(game).winning_sets);
        }
    }

    #[test]
    fn frozen_counts_match_derivations() {
        for (game, count) in WINNING_SET_COUNTS {
            assert_eq!(spec(game).winning_set_count(), count, "{game}");
        }
    }

    #[test]
    fn n_schedules_match_expected() {
        assert_eq!(spec(GameId::Ottt).n_schedule, vec![4, 5]);
        assert_eq!(spec(GameId::Dttt).n_schedule, vec![6, 7]);
        assert_eq!(spec(GameId::Cttt).n_schedule, vec![5, 6, 7]);
        assert_eq!(spec(GameId::Sttt).n_schedule, vec![6, 7]);
    }

    #[test]
    fn game_id_round_trips_through_strings() {
        for &game in &GameId::ALL {
            assert_eq!(game.as_str().parse::<GameId>().unwrap(), game);
            let j = serde_json::to_string(&game).unwrap();
            assert_eq!(j, format!("\"{game}\""));
            assert_eq!(serde_json::from_str::<GameId>(&j).unwrap(), game);
        }
        assert!("xTTT".parse::<GameId>().is_err());
    }

    #[test]
    fn combinations_enumerate_in_lex_order() {
        let c = combinations(4, 2);
        assert_eq!(c, vec![
            vec![0, 1], vec![0, 2], vec![0, 3],
            vec![1, 2], vec![1, 3], vec![2, 3],
        ]);
        assert_eq!(combinations(25, 4).len(), 12650);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }
}
