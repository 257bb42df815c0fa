//! Alpha-beta negamax with iterative deepening, null-window probes, a
//! center-first threat-count move ordering, and a fixed-size direct-mapped
//! transposition table with atomic always-replace entries.
//!
//! The table is a pure accelerator: results are identical with any table
//! size, including zero (see tests).

use super::{QVector, ILLEGAL_Q};
use crate::games::connect_four::{winning_cells, ConnectFourState, BOARD_MASK, WIDTH};
use std::sync::atomic::{AtomicU64, Ordering};

pub const DEFAULT_TABLE_LOG2: u32 = 24;

/// Static center-first column order.
const COLUMN_ORDER: [usize; 7] = [3, 2, 4, 1, 5, 0, 6];

const COLUMN_STRIDE: usize = 7;
const BOTTOM_ROW: u64 = {
    let mut m = 0u64;
    let mut c = 0;
    while c < WIDTH {
        m |= 1u64 << (c * COLUMN_STRIDE);
        c += 1;
    }
    m
};

const FLAG_EXACT: u64 = 1;
const FLAG_LOWER: u64 = 2;
const FLAG_UPPER: u64 = 3;

/// Entry layout: [key+1 : 50 bits][flag : 2 bits][score as i8 : 8 bits].
/// Zero means empty. Single-word atomics keep concurrent solves safe
/// without locks; a lost race merely wastes a lookup.
struct Table {
    entries: Vec<AtomicU64>,
    index_shift: u32,
}

impl Table {
    fn new(log2_entries: u32) -> Table {
        assert!(log2_entries <= 30);
        let n = 1usize << log2_entries;
        let mut entries = Vec::with_capacity(n);
        entries.resize_with(n, || AtomicU64::new(0));
        Table {
            entries,
            index_shift: 64 - log2_entries,
        }
    }

    #[inline]
    fn index(&self, key: u64) -> usize {
        (key.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> self.index_shift) as usize
    }

    #[inline]
    fn probe(&self, key: u64) -> Option<(u64, i32)> {
        if self.entries.is_empty() {
            return None;
        }
        let e = self.entries[self.index(key)].load(Ordering::Relaxed);
        if e == 0 || (e >> 10) != key + 1 {
            return None;
        }
        let flag = (e >> 8) & 0x3;
        let score = (e & 0xff) as u8 as i8 as i32;
        Some((flag, score))
    }

    #[inline]
    fn store(&self, key: u64, flag: u64, score: i32) {
        if self.entries.is_empty() {
            return;
        }
        let packed = ((key + 1) << 10) | (flag << 8) | (score as i8 as u8 as u64);
        self.entries[self.index(key)].store(packed, Ordering::Relaxed);
    }
}

pub struct Solver {
    table: Table,
    nodes: AtomicU64,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::with_table_log2(DEFAULT_TABLE_LOG2)
    }
}

impl Solver {
    /// Standard solver with the default 2^24-entry table (128 MiB).
    pub fn new() -> Solver {
        Solver::default()
    }

    pub fn with_table_log2(log2_entries: u32) -> Solver {
        Solver {
            table: Table::new(log2_entries),
            nodes: AtomicU64::new(0),
        }
    }

    /// Solver without a transposition table (for equivalence tests).
    pub fn without_table() -> Solver {
        Solver {
            table: Table {
                entries: Vec::new(),
                index_shift: 64,
            },
            nodes: AtomicU64::new(0),
        }
    }

    /// Nodes expanded since construction (diagnostics only).
    pub fn node_count(&self) -> u64 {
        self.nodes.load(Ordering::Relaxed)
    }

    /// Exact score of a non-terminal position for its side to move.
    pub fn score(&self, state: &ConnectFourState) -> i32 {
        debug_assert!(!state.is_terminal());
        let ply = state.ply() as i32;
        // Win on the very next stone is not handled by negamax's window
        // logic; settle it here.
        if self.has_immediate_win(state) {
            return 42 - (ply + 1);
        }
        // Earliest conceivable loss: opponent's next stone (ply + 2);
        // fastest win after the immediate-win check: ply + 3. Outcomes at
        // ply 42 encode as 0 either way, so bounds clamp to 0 near the end.
        let mut lo = (ply - 40).min(0);
        let mut hi = (39 - ply).max(0);
        // Iterative deepening by null-window probes, biased toward zero so
        // drawish positions resolve quickly.
        while lo < hi {
            let mut med = lo + (hi - lo) / 2;
            if med <= 0 && lo / 2 < med {
                med = lo / 2;
            } else if med >= 0 && hi / 2 > med {
                med = hi / 2;
            }
            let r = self.negamax(state, med, med + 1);
            if r <= med {
                hi = r;
            } else {
                lo = r;
            }
        }
        lo
    }

    /// Exact q-values for every column of a non-terminal position.
    pub fn solve_moves(&self, state: &ConnectFourState) -> QVector {
        let ply = state.ply() as i32;
        let mut values = [ILLEGAL_Q; 7];
        for col in 0..WIDTH {
            if !state.column_playable(col) {
                continue;
            }
            values[col] = if state.is_winning_move(col) {
                (42 - (ply + 1)) as i8
            } else {
                let child = state.drop_token(col);
                if child.is_terminal() {
                    0 // board full without a line
                } else {
                    (-self.score(&child)) as i8
                }
            };
        }
        QVector { values }
    }

    #[inline]
    fn has_immediate_win(&self, state: &ConnectFourState) -> bool {
        let possible = (state.occupied() + BOTTOM_ROW) & BOARD_MASK;
        winning_cells(state.mover_tokens(), state.occupied()) & possible != 0
    }

    /// Alpha-beta negamax over ply-anchored scores. Precondition: the
    /// position is non-terminal and the side to move has no immediate win.
    fn negamax(&self, state: &ConnectFourState, mut alpha: i32, mut beta: i32) -> i32 {
        debug_assert!(alpha < beta);
        debug_assert!(!self.has_immediate_win(state));
        self.nodes.fetch_add(1, Ordering::Relaxed);

        let ply = state.ply() as i32;
        let mover = state.mover_tokens();
        let occupied = state.occupied();
        let possible = (occupied + BOTTOM_ROW) & BOARD_MASK;

        // Non-losing moves: block a single immediate opponent threat, never
        // feed a threat sitting directly above our landing cell; two or more
        // immediate threats cannot be stopped.
        let opponent_win = winning_cells(mover ^ occupied, occupied);
        let forced = possible & opponent_win;
        let mut candidates = possible;
        if forced != 0 {
            if forced & (forced - 1) != 0 {
                return ply - 40; // opponent wins at ply + 2 whatever we do
            }
            candidates = forced;
        }
        candidates &= !(opponent_win >> 1);
        if candidates == 0 {
            return ply - 40;
        }

        // With no immediate win available, the fastest win is at ply + 3;
        // having a non-losing move, the earliest loss is at ply + 4.
        // Clamped to 0 where the board runs out first.
        let ub = (39 - ply).max(0);
        if beta > ub {
            beta = ub;
            if alpha >= beta {
                return beta;
            }
        }
        let lb = (ply - 38).min(0);
        if alpha < lb {
            alpha = lb;
            if alpha >= beta {
                return alpha;
            }
        }

        let key = state.key();
        if let Some((flag, score)) = self.table.probe(key) {
            match flag {
                FLAG_EXACT => return score,
                FLAG_LOWER => {
                    if score > alpha {
                        alpha = score;
                        if alpha >= beta {
                            return score;
                        }
                    }
                }
                _ => {
                    if score < beta {
                        beta = score;
                        if alpha >= beta {
                            return score;
                        }
                    }
                }
            }
        }

        // Order candidate columns: threats created, then center-first.
        let mut order: [(i32, usize); 7] = [(0, 0); 7];
        let mut n = 0;
        for (rank, &col) in COLUMN_ORDER.iter().enumerate() {
            let bit = state.drop_bit(col);
            if candidates & bit == 0 {
                continue;
            }
            let after = mover | bit;
            let threats = winning_cells(after, occupied | bit).count_ones() as i32;
            order[n] = (threats * 8 - rank as i32, col);
            n += 1;
        }
        order[..n].sort_by_key(|&(score, _)| std::cmp::Reverse(score));

        let alpha0 = alpha;
        let mut best = i32::MIN;
        for &(_, col) in order[..n].iter() {
            let child = state.drop_token(col);
            // The candidate filter guarantees the opponent has no immediate
            // win in `child`, so the recursion precondition holds.
            let v = if child.ply() >= 42 {
                0 // final stone, no line: draw
            } else {
                -self.negamax(&child, -beta, -alpha)
            };
            if v > best {
                best = v;
                if v > alpha {
                    alpha = v;
                    if alpha >= beta {
                        self.table.store(key, FLAG_LOWER, best);
                        return best;
                    }
                }
            }
        }

        let flag = if best <= alpha0 { FLAG_UPPER } else { FLAG_EXACT };
        self.table.store(key, flag, best);
        best
    }
}
