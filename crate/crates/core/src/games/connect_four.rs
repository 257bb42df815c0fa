//! Connect Four on a 6x7 board, stored as two bitplanes.
//!
//! Bit layout: bit `col * 7 + row`, row 0 at the bottom. Each column owns
//! seven bits; the top bit (row 6) is a sentinel that never holds a token,
//! which keeps column-full tests and the position key cheap.

use super::{Player, TerminalStatus};

pub const WIDTH: usize = 7;
pub const HEIGHT: usize = 6;
pub const CELLS: usize = WIDTH * HEIGHT;
pub const MAX_PLIES: u32 = CELLS as u32;

const COLUMN_STRIDE: usize = HEIGHT + 1;

const fn bottom_bit(col: usize) -> u64 {
    1u64 << (col * COLUMN_STRIDE)
}

const fn top_bit(col: usize) -> u64 {
    1u64 << (col * COLUMN_STRIDE + HEIGHT - 1)
}

const fn column_mask(col: usize) -> u64 {
    (((1u64 << HEIGHT) - 1)) << (col * COLUMN_STRIDE)
}

/// Mask of all playable cells.
const fn board_mask() -> u64 {
    let mut m = 0u64;
    let mut c = 0;
    while c < WIDTH {
        m |= column_mask(c);
        c += 1;
    }
    m
}

pub const BOARD_MASK: u64 = board_mask();

/// A Connect Four position. `mover` holds the side-to-move's tokens,
/// `mask` holds all tokens. Immutable value type; `drop_token` returns
/// a new state.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ConnectFourState {
    mover: u64,
    mask: u64,
    ply: u32,
}

impl Default for ConnectFourState {
    fn default() -> Self {
        Self::new()
    }
}

impl ConnectFourState {
    pub fn new() -> Self {
        ConnectFourState {
            mover: 0,
            mask: 0,
            ply: 0,
        }
    }

    pub fn ply(&self) -> u32 {
        self.ply
    }

    pub fn side_to_move(&self) -> Player {
        if self.ply % 2 == 0 {
            Player::First
        } else {
            Player::Second
        }
    }

    /// Tokens of the side to move.
    pub fn mover_tokens(&self) -> u64 {
        self.mover
    }

    /// Tokens of the side that just moved.
    pub fn opponent_tokens(&self) -> u64 {
        self.mask ^ self.mover
    }

    pub fn occupied(&self) -> u64 {
        self.mask
    }

    pub fn column_playable(&self, col: usize) -> bool {
        col < WIDTH && self.mask & top_bit(col) == 0
    }

    /// Bitmask over columns (bit c set = column c playable).
    pub fn playable_columns(&self) -> u8 {
        let mut cols = 0u8;
        for col in 0..WIDTH {
            if self.mask & top_bit(col) == 0 {
                cols |= 1 << col;
            }
        }
        cols
    }

    /// Drops a token for the side to move. Caller must check playability;
    /// debug builds assert it.
    pub fn drop_token(&self, col: usize) -> ConnectFourState {
        debug_assert!(self.column_playable(col), "column {col} not playable");
        // mask + bottom_bit sets the lowest empty cell of the column.
        let new_mask = self.mask | (self.mask + bottom_bit(col));
        ConnectFourState {
            mover: self.mover ^ self.mask, // perspective flip: opponent moves next
            mask: new_mask,
            ply: self.ply + 1,
        }
    }

    /// The bit the next token in `col` would occupy.
    pub fn drop_bit(&self, col: usize) -> u64 {
        (self.mask + bottom_bit(col)) & column_mask(col)
    }

    pub fn status(&self) -> TerminalStatus {
        // Only the side that just moved can have completed a line.
        if has_four(self.opponent_tokens()) {
            return TerminalStatus::Win(self.side_to_move().opponent());
        }
        if self.ply >= MAX_PLIES {
            TerminalStatus::Draw
        } else {
            TerminalStatus::Ongoing
        }
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self.status(), TerminalStatus::Ongoing)
    }

    /// True when dropping in `col` wins on the spot for the side to move.
    pub fn is_winning_move(&self, col: usize) -> bool {
        has_four(self.mover | self.drop_bit(col))
    }

    /// Bitmask of cells where the side to move would complete a line if a
    /// token appeared there (anywhere, not only currently reachable cells).
    pub fn winning_cells(&self) -> u64 {
        winning_cells(self.mover, self.mask)
    }

    /// Unique position key: `mover + mask` decodes column heights and token
    /// ownership unambiguously.
    pub fn key(&self) -> u64 {
        self.mover.wrapping_add(self.mask)
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<Player> {
        let bit = 1u64 << (col * COLUMN_STRIDE + row);
        if self.mask & bit == 0 {
            return None;
        }
        let first_tokens = if self.ply % 2 == 0 {
            self.mover
        } else {
            self.mask ^ self.mover
        };
        if first_tokens & bit != 0 {
            Some(Player::First)
        } else {
            Some(Player::Second)
        }
    }
}

/// Four-in-a-line test over one player's bitplane.
pub fn has_four(bb: u64) -> bool {
    // vertical
    let m = bb & (bb >> 1);
    if m & (m >> 2) != 0 {
        return true;
    }
    // horizontal
    let m = bb & (bb >> COLUMN_STRIDE);
    if m & (m >> (2 * COLUMN_STRIDE)) != 0 {
        return true;
    }
    // diagonal /
    let m = bb & (bb >> (COLUMN_STRIDE + 1));
    if m & (m >> (2 * (COLUMN_STRIDE + 1))) != 0 {
        return true;
    }
    // diagonal \
    let m = bb & (bb >> (COLUMN_STRIDE - 1));
    m & (m >> (2 * (COLUMN_STRIDE - 1))) != 0
}

/// Cells that would complete a four-line for `tokens`, excluding occupied
/// cells. Includes cells not yet reachable by gravity (future threats).
pub fn winning_cells(tokens: u64, occupied: u64) -> u64 {
    // vertical: only the cell directly above three stacked tokens
    let mut r = (tokens << 1) & (tokens << 2) & (tokens << 3);

    for shift in [COLUMN_STRIDE, COLUMN_STRIDE + 1, COLUMN_STRIDE - 1] {
        // tokens at distance 1 and 2 on one side
        let p = (tokens << shift) & (tokens << (2 * shift));
        r |= p & (tokens << (3 * shift)); // _xxx
        r |= p & (tokens >> shift); // x_xx
        let p = (tokens >> shift) & (tokens >> (2 * shift));
        r |= p & (tokens << shift); // xx_x
        r |= p & (tokens >> (3 * shift)); // xxx_
    }
    r & BOARD_MASK & !occupied
}

/// Serializes the move history as 1-based column digits ("44455554").
pub fn moves_to_codec(moves: &[usize]) -> String {
    moves
        .iter()
        .map(|c| char::from(b'1' + *c as u8))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn play(cols: &[usize]) -> ConnectFourState {
        let mut s = ConnectFourState::new();
        for &c in cols {
            s = s.drop_token(c);
        }
        s
    }

    #[test]
    fn gravity_fills_bottom_first() {
        let s = play(&[3]);
        assert_eq!(s.ply(), 1);
        assert_eq!(s.cell(0, 3), Some(Player::First));
        assert_eq!(s.cell(1, 3), None);
    }

    #[test]
    fn column_fills_and_closes() {
        let s = play(&[3, 3, 3, 3, 3, 3]);
        assert!(!s.column_playable(3));
        assert_eq!(s.playable_columns().count_ones(), 6);
    }

    #[test]
    fn vertical_win_detected() {
        // First: 0,0,0,0  Second: 1,1,1
        let s = play(&[0, 1, 0, 1, 0, 1, 0]);
        assert_eq!(s.status(), TerminalStatus::Win(Player::First));
    }

    #[test]
    fn horizontal_win_detected() {
        let s = play(&[0, 0, 1, 1, 2, 2, 3]);
        assert_eq!(s.status(), TerminalStatus::Win(Player::First));
    }

    #[test]
    fn diagonal_win_detected() {
        // Build a / diagonal for First at (0,0),(1,1),(2,2),(3,3).
        let s = play(&[0, 1, 1, 2, 2, 3, 2, 3, 3, 5, 3]);
        assert_eq!(s.status(), TerminalStatus::Win(Player::First));
    }

    #[test]
    fn winning_move_test_agrees_with_status() {
        let s = play(&[0, 1, 0, 1, 0, 1]);
        assert!(s.is_winning_move(0));
        assert!(!s.is_winning_move(3));
    }

    #[test]
    fn keys_distinguish_transpositions_with_different_heights() {
        let a = play(&[0, 1]);
        let b = play(&[1, 0]);
        // Same stones by color? No: both have First at one col... they differ.
        assert_ne!(a.key(), b.key());
        let c = play(&[0, 1, 2]);
        let d = play(&[2, 1, 0]);
        // Identical final boards reached by different orders share a key.
        assert_eq!(c.key(), d.key());
    }
}
