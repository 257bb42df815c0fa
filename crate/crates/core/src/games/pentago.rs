//! Pentago on a 6x6 board split into four 3x3 quadrants.
//!
//! Cells are indexed row-major (`row * 6 + col`, row 0 at the top), one bit
//! per cell in each player's bitplane. A move places a token on an empty
//! cell and then rotates one quadrant a quarter turn. The win condition
//! (five in a line) is evaluated on the position after the full move.

use super::{Player, Rotation, TerminalStatus};

pub const SIDE: usize = 6;
pub const CELLS: usize = SIDE * SIDE;
pub const MAX_PLIES: u32 = CELLS as u32;
pub const QUADRANTS: usize = 4;
/// Moves are (empty cell, quadrant, direction) triples.
pub const MAX_MOVES: usize = CELLS * QUADRANTS * 2;

pub const BOARD_MASK: u64 = (1u64 << CELLS) - 1;

/// Quadrant origin (row, col): 0 top-left, 1 top-right, 2 bottom-left,
/// 3 bottom-right.
const QUADRANT_ORIGIN: [(usize, usize); 4] = [(0, 0), (0, 3), (3, 0), (3, 3)];

const fn cell_bit(row: usize, col: usize) -> u64 {
    1u64 << (row * SIDE + col)
}

const fn quadrant_mask(q: usize) -> u64 {
    let (r0, c0) = QUADRANT_ORIGIN[q];
    let mut m = 0u64;
    let mut i = 0;
    while i < 3 {
        let mut j = 0;
        while j < 3 {
            m |= cell_bit(r0 + i, c0 + j);
            j += 1;
        }
        i += 1;
    }
    m
}

const QUADRANT_MASKS: [u64; 4] = [
    quadrant_mask(0),
    quadrant_mask(1),
    quadrant_mask(2),
    quadrant_mask(3),
];

/// All 32 five-in-a-line masks: 12 horizontal, 12 vertical, 8 diagonal.
const fn win_masks() -> [u64; 32] {
    let mut masks = [0u64; 32];
    let mut n = 0;
    // horizontal
    let mut r = 0;
    while r < SIDE {
        let mut c0 = 0;
        while c0 + 5 <= SIDE {
            let mut m = 0u64;
            let mut k = 0;
            while k < 5 {
                m |= cell_bit(r, c0 + k);
                k += 1;
            }
            masks[n] = m;
            n += 1;
            c0 += 1;
        }
        r += 1;
    }
    // vertical
    let mut c = 0;
    while c < SIDE {
        let mut r0 = 0;
        while r0 + 5 <= SIDE {
            let mut m = 0u64;
            let mut k = 0;
            while k < 5 {
                m |= cell_bit(r0 + k, c);
                k += 1;
            }
            masks[n] = m;
            n += 1;
            r0 += 1;
        }
        c += 1;
    }
    // diagonals (down-right and down-left)
    let mut r0 = 0;
    while r0 + 5 <= SIDE {
        let mut c0 = 0;
        while c0 + 5 <= SIDE {
            let mut m = 0u64;
            let mut k = 0;
            while k < 5 {
                m |= cell_bit(r0 + k, c0 + k);
                k += 1;
            }
            masks[n] = m;
            n += 1;
            let mut m = 0u64;
            let mut k = 0;
            while k < 5 {
                m |= cell_bit(r0 + k, SIDE - 1 - c0 - k);
                k += 1;
            }
            masks[n] = m;
            n += 1;
            c0 += 1;
        }
        r0 += 1;
    }
    masks
}

const WIN_MASKS: [u64; 32] = win_masks();

pub fn has_five(bb: u64) -> bool {
    WIN_MASKS.iter().any(|&m| bb & m == m)
}

/// Rotates the bits of one quadrant a quarter turn, leaving the rest alone.
pub fn rotate_quadrant(bb: u64, quadrant: usize, rotation: Rotation) -> u64 {
    let (r0, c0) = QUADRANT_ORIGIN[quadrant];
    let mut out = bb & !QUADRANT_MASKS[quadrant];
    for i in 0..3 {
        for j in 0..3 {
            if bb & cell_bit(r0 + i, c0 + j) != 0 {
                let (ni, nj) = match rotation {
                    Rotation::Cw => (j, 2 - i),
                    Rotation::Ccw => (2 - j, i),
                };
                out |= cell_bit(r0 + ni, c0 + nj);
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PentagoState {
    boards: [u64; 2],
    ply: u32,
}

impl Default for PentagoState {
    fn default() -> Self {
        Self::new()
    }
}

impl PentagoState {
    pub fn new() -> Self {
        PentagoState {
            boards: [0, 0],
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

    pub fn tokens(&self, player: Player) -> u64 {
        self.boards[player.index()]
    }

    pub fn occupied(&self) -> u64 {
        self.boards[0] | self.boards[1]
    }

    pub fn cell_empty(&self, cell: usize) -> bool {
        cell < CELLS && self.occupied() & (1u64 << cell) == 0
    }

    /// Places a token for the side to move and rotates `quadrant`.
    /// Caller must check emptiness; debug builds assert it.
    pub fn place_and_rotate(&self, cell: usize, quadrant: usize, rotation: Rotation) -> Self {
        debug_assert!(self.cell_empty(cell), "cell {cell} occupied");
        debug_assert!(quadrant < QUADRANTS);
        let mut boards = self.boards;
        boards[self.side_to_move().index()] |= 1u64 << cell;
        boards[0] = rotate_quadrant(boards[0], quadrant, rotation);
        boards[1] = rotate_quadrant(boards[1], quadrant, rotation);
        PentagoState {
            boards,
            ply: self.ply + 1,
        }
    }

    pub fn status(&self) -> TerminalStatus {
        let w0 = has_five(self.boards[0]);
        let w1 = has_five(self.boards[1]);
        match (w0, w1) {
            // A rotation can complete lines for both players at once.
            (true, true) => TerminalStatus::Draw,
            (true, false) => TerminalStatus::Win(Player::First),
            (false, true) => TerminalStatus::Win(Player::Second),
            (false, false) => {
                if self.ply >= MAX_PLIES {
                    TerminalStatus::Draw
                } else {
                    TerminalStatus::Ongoing
                }
            }
        }
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self.status(), TerminalStatus::Ongoing)
    }

    /// 64-bit mixed key (collision-resistant, not injective: the exact
    /// state is 72 bits). Use the state itself for exact dedup.
    pub fn key(&self) -> u64 {
        splitmix64(self.boards[0]).wrapping_add(splitmix64(self.boards[1].rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
