//! Frozen question-text templates.
//!
//! The rules preambles and per-game move-narration styles are fixed string
//! constants; question rendering must reproduce them byte-for-byte, so they
//! are sealed by checksum tests and must not be edited casually.

use crate::engine::Player;
use crate::topology::GameId;

pub const RULES_OTTT: &str = "Alice and Bob are playing a game on a 3x3 grid. The points on the grid are labeled top to bottom, left to right, as A,B,C,D,E,F,G,H,I. Alice plays white. Bob plays black. At each turn, the player places a stone of the corresponding color onto one of the positions that has not been occupied. Whoever has three stones in a line (horizontal, vertical, or diagonal) wins.";

pub const RULES_DTTT: &str = "Alice and Bob are playing a game on two adjacent 3x3 grids. The points on the first grid are labeled top to bottom, left to right, as A,B,C,D,E,F,G,H,I. The points on the second grid are labeled top to bottom, left to right, as C,J,K,F,L,M,I,N,O. Note that points C,F, I are shared by the two grids. Alice plays white. Bob plays black. At each turn, the player places a stone of the corresponding color onto one of the positions that has not been occupied. Whoever has three stones in a line (horizontal, vertical, or diagonal) on either grid wins.";

pub const RULES_CTTT: &str = "Alice and Bob are playing a game on two adjacent cubes. ABCD forms the top rectangle in the first cube, and BIJC forms the top rectangle in the second cube. EFGH forms the bottom rectangle in the first cube, and FKLG forms the bottom rectangle in the second cube. AE is an edge, BF is an edge, CG is an edge, DH is an edge, IK is an edge, and JL is an edge. Note that vertices B,C,G,F are shared by the two cubes. Alice and Bob play a game where they take turns to put stickers on the vertices of the cubes that have not been occupied. Alice plays white stickers. Bob plays black stickers. The person who has four stickers on the same plane on either cube wins.";

pub const RULES_STTT: &str = "Alice and Bob are playing a game on a board. There are 5 equally spaced horizontal lines where the distance between two neighboring horizontal lines is 1. Similarly, there are 5 equally spaced vertical lines, and the distance between two neighboring vertical lines is 1. There are 25 intersection points between the 5 horizontal lines and 5 vertical lines. These 25 points are labeled from top to bottom, left to right, as A, B, C, D, \u{2026}, Y. Alice plays white. Bob plays black. At each turn, the player places a stone of the corresponding color onto one of the 25 points that have not been occupied. Whoever has four stones that form either a unit square (with side length of 1) or a \u{201c}diagonal square\u{201d} with side length equal to the square root of 2 wins. For example, ABGF is a unit square. FBHL is a diagonal square.";

/// Default answer-format suffix appended after the question sentence.
pub const ANSWER_SUFFIX: &str =
    "Let's think step by step and output the final answer within \\boxed{}.";

pub fn rules_text(game: GameId) -> &'static str {
    match game {
        GameId::Ottt => RULES_OTTT,
        GameId::Dttt => RULES_DTTT,
        GameId::Cttt => RULES_CTTT,
        GameId::Sttt => RULES_STTT,
    }
}

/// One narration sentence for the `move_index`-th move (0-based).
///
/// Each game narrates moves in its own fixed style; the opening move is
/// always "Alice first places a white stone at X.".
pub fn move_sentence(game: GameId, move_index: usize, player: Player, label: char) -> String {
    if move_index == 0 {
        debug_assert_eq!(player, Player::Alice);
        return format!("Alice first places a white stone at {label}.");
    }
    match (game, player) {
        (GameId::Ottt, Player::Alice) => format!("Alice places a white stone at {label}."),
        (GameId::Ottt, Player::Bob) => format!("Bob places a black stone at {label}."),
        (GameId::Dttt, Player::Alice) => format!("Then Alice at {label}."),
        (GameId::Dttt, Player::Bob) => format!("Bob places a black stone at {label}."),
        (GameId::Cttt | GameId::Sttt, Player::Alice) => {
            format!("Then Alice places a white stone at {label}.")
        }
        (GameId::Cttt | GameId::Sttt, Player::Bob) => {
            format!("Then Bob places a black stone at {label}.")
        }
    }
}

pub fn question_sentence(player: Player) -> String {
    format!("Where should {player} play next?")
}
