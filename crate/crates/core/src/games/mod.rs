//! Deterministic state machines for Connect Four and Pentago.
//!
//! States are immutable values: every operation is a pure function, and
//! `apply_move` returns a fresh state. Move ordering is fixed (columns and
//! cells ascending, quadrants ascending, clockwise before counterclockwise)
//! so replays and search tie-breaking are reproducible.

pub mod connect_four;
pub mod pentago;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use connect_four::ConnectFourState;
pub use pentago::PentagoState;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum GameId {
    ConnectFour,
    Pentago,
}

impl GameId {
    pub fn name(self) -> &'static str {
        match self {
            GameId::ConnectFour => "connect_four",
            GameId::Pentago => "pentago",
        }
    }

    pub fn parse(name: &str) -> Option<GameId> {
        match name {
            "connect_four" | "connect4" | "c4" => Some(GameId::ConnectFour),
            "pentago" => Some(GameId::Pentago),
            _ => None,
        }
    }

    /// Flattened observation length: three planes over the board.
    pub fn observation_len(self) -> usize {
        3 * self.cells()
    }

    pub fn cells(self) -> usize {
        match self {
            GameId::ConnectFour => connect_four::CELLS,
            GameId::Pentago => pentago::CELLS,
        }
    }

    /// Size of the fixed action space (7 columns; 36 cells x 4 quadrants x 2
    /// directions).
    pub fn action_count(self) -> usize {
        match self {
            GameId::ConnectFour => connect_four::WIDTH,
            GameId::Pentago => pentago::MAX_MOVES,
        }
    }

    pub fn max_plies(self) -> u32 {
        match self {
            GameId::ConnectFour => connect_four::MAX_PLIES,
            GameId::Pentago => pentago::MAX_PLIES,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Player {
    First,
    Second,
}

impl Player {
    pub fn index(self) -> usize {
        match self {
            Player::First => 0,
            Player::Second => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::First => Player::Second,
            Player::Second => Player::First,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Rotation {
    Cw,
    Ccw,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum TerminalStatus {
    Ongoing,
    Win(Player),
    Draw,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Move {
    /// Connect Four: drop a token into a column (0..=6).
    Drop { column: u8 },
    /// Pentago: place on an empty cell (0..=35) then rotate a quadrant.
    Place {
        cell: u8,
        quadrant: u8,
        rotation: Rotation,
    },
}

impl Move {
    /// Index into the game's fixed action space. Pentago packs
    /// `cell * 8 + quadrant * 2 + direction` (0 = CW).
    pub fn action_index(self) -> usize {
        match self {
            Move::Drop { column } => column as usize,
            Move::Place {
                cell,
                quadrant,
                rotation,
            } => {
                let dir = match rotation {
                    Rotation::Cw => 0,
                    Rotation::Ccw => 1,
                };
                cell as usize * 8 + quadrant as usize * 2 + dir
            }
        }
    }

    pub fn from_action_index(game: GameId, index: usize) -> Option<Move> {
        match game {
            GameId::ConnectFour => {
                if index < connect_four::WIDTH {
                    Some(Move::Drop {
                        column: index as u8,
                    })
                } else {
                    None
                }
            }
            GameId::Pentago => {
                if index < pentago::MAX_MOVES {
                    Some(Move::Place {
                        cell: (index / 8) as u8,
                        quadrant: ((index / 2) % 4) as u8,
                        rotation: if index % 2 == 0 {
                            Rotation::Cw
                        } else {
                            Rotation::Ccw
                        },
                    })
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IllegalMove {
    #[error("game is already over")]
    GameOver,
    #[error("move {0:?} does not belong to this game")]
    WrongGame(Move),
    #[error("column {0} is out of range 0..=6")]
    ColumnOutOfRange(u8),
    #[error("column {0} is full")]
    ColumnFull(u8),
    #[error("cell {0} is out of range 0..=35")]
    CellOutOfRange(u8),
    #[error("quadrant {0} is out of range 0..=3")]
    QuadrantOutOfRange(u8),
    #[error("cell {0} is occupied")]
    CellOccupied(u8),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("empty move token at position {0}")]
    EmptyToken(usize),
    #[error("malformed move token {0:?}")]
    BadToken(String),
    #[error("illegal move at ply {ply}: {source}")]
    Illegal { ply: usize, source: IllegalMove },
}

/// A position in either game plus the move history that produced it.
/// The history backs the text codec and replay logs; the board itself is
/// a packed bitplane pair.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum GameState {
    ConnectFour(ConnectFourState),
    Pentago(PentagoState),
}

impl GameState {
    pub fn new(game: GameId) -> GameState {
        match game {
            GameId::ConnectFour => GameState::ConnectFour(ConnectFourState::new()),
            GameId::Pentago => GameState::Pentago(PentagoState::new()),
        }
    }

    pub fn game_id(&self) -> GameId {
        match self {
            GameState::ConnectFour(_) => GameId::ConnectFour,
            GameState::Pentago(_) => GameId::Pentago,
        }
    }

    pub fn ply(&self) -> u32 {
        match self {
            GameState::ConnectFour(s) => s.ply(),
            GameState::Pentago(s) => s.ply(),
        }
    }

    pub fn side_to_move(&self) -> Player {
        match self {
            GameState::ConnectFour(s) => s.side_to_move(),
            GameState::Pentago(s) => s.side_to_move(),
        }
    }

    pub fn status(&self) -> TerminalStatus {
        match self {
            GameState::ConnectFour(s) => s.status(),
            GameState::Pentago(s) => s.status(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self.status(), TerminalStatus::Ongoing)
    }

    /// Legal moves in the documented fixed order; empty on terminal states.
    pub fn legal_moves(&self) -> Vec<Move> {
        if self.is_terminal() {
            return Vec::new();
        }
        match self {
            GameState::ConnectFour(s) => (0..connect_four::WIDTH)
                .filter(|&c| s.column_playable(c))
                .map(|c| Move::Drop { column: c as u8 })
                .collect(),
            GameState::Pentago(s) => {
                let occupied = s.occupied();
                let mut moves = Vec::with_capacity(pentago::CELLS * 8);
                for cell in 0..pentago::CELLS {
                    if occupied & (1u64 << cell) != 0 {
                        continue;
                    }
                    for quadrant in 0..pentago::QUADRANTS {
                        for rotation in [Rotation::Cw, Rotation::Ccw] {
                            moves.push(Move::Place {
                                cell: cell as u8,
                                quadrant: quadrant as u8,
                                rotation,
                            });
                        }
                    }
                }
                moves
            }
        }
    }

    pub fn apply_move(&self, mv: Move) -> Result<GameState, IllegalMove> {
        if self.is_terminal() {
            return Err(IllegalMove::GameOver);
        }
        match (self, mv) {
            (GameState::ConnectFour(s), Move::Drop { column }) => {
                if column as usize >= connect_four::WIDTH {
                    return Err(IllegalMove::ColumnOutOfRange(column));
                }
                if !s.column_playable(column as usize) {
                    return Err(IllegalMove::ColumnFull(column));
                }
                Ok(GameState::ConnectFour(s.drop_token(column as usize)))
            }
            (
                GameState::Pentago(s),
                Move::Place {
                    cell,
                    quadrant,
                    rotation,
                },
            ) => {
                if cell as usize >= pentago::CELLS {
                    return Err(IllegalMove::CellOutOfRange(cell));
                }
                if quadrant as usize >= pentago::QUADRANTS {
                    return Err(IllegalMove::QuadrantOutOfRange(quadrant));
                }
                if !s.cell_empty(cell as usize) {
                    return Err(IllegalMove::CellOccupied(cell));
                }
                Ok(GameState::Pentago(s.place_and_rotate(
                    cell as usize,
                    quadrant as usize,
                    rotation,
                )))
            }
            (_, mv) => Err(IllegalMove::WrongGame(mv)),
        }
    }

    /// Three one-hot planes (side-to-move tokens, opponent tokens, empty),
    /// flattened plane-major then cell-major. Connect Four cells run
    /// bottom row first; Pentago cells run top row first, matching the
    /// bitboard layouts.
    pub fn observation(&self) -> Vec<f32> {
        let mut out = vec![0.0f32; self.game_id().observation_len()];
        self.write_observation(&mut out);
        out
    }

    /// Writes the observation into a caller-provided buffer (hot path for
    /// search); `out` must have length `observation_len()`.
    pub fn write_observation(&self, out: &mut [f32]) {
        let cells = self.game_id().cells();
        debug_assert_eq!(out.len(), 3 * cells);
        let (mine, theirs) = match self {
            GameState::ConnectFour(s) => (s.mover_tokens(), s.opponent_tokens()),
            GameState::Pentago(s) => {
                let stm = s.side_to_move();
                (s.tokens(stm), s.tokens(stm.opponent()))
            }
        };
        match self {
            GameState::ConnectFour(_) => {
                for row in 0..connect_four::HEIGHT {
                    for col in 0..connect_four::WIDTH {
                        let bit = 1u64 << (col * 7 + row);
                        let cell = row * connect_four::WIDTH + col;
                        write_cell(out, cells, cell, mine & bit != 0, theirs & bit != 0);
                    }
                }
            }
            GameState::Pentago(_) => {
                for cell in 0..cells {
                    let bit = 1u64 << cell;
                    write_cell(out, cells, cell, mine & bit != 0, theirs & bit != 0);
                }
            }
        }
    }

    /// Position key. Exact for Connect Four; 64-bit mixed hash for Pentago.
    pub fn key(&self) -> u64 {
        match self {
            GameState::ConnectFour(s) => s.key(),
            GameState::Pentago(s) => s.key(),
        }
    }

    pub fn as_connect_four(&self) -> Option<&ConnectFourState> {
        match self {
            GameState::ConnectFour(s) => Some(s),
            _ => None,
        }
    }
}

fn write_cell(out: &mut [f32], cells: usize, cell: usize, mine: bool, theirs: bool) {
    if mine {
        out[cell] = 1.0;
    } else if theirs {
        out[cells + cell] = 1.0;
    } else {
        out[2 * cells + cell] = 1.0;
    }
}

/// Legal-action mask recovered from an observation's empty plane. Used by
/// the training loss, which stores observations rather than states.
pub fn legal_mask_from_observation(game: GameId, obs: &[f32]) -> Vec<bool> {
    let cells = game.cells();
    let empty = &obs[2 * cells..3 * cells];
    match game {
        GameId::ConnectFour => {
            // column playable iff its top cell is empty
            (0..connect_four::WIDTH)
                .map(|col| empty[(connect_four::HEIGHT - 1) * connect_four::WIDTH + col] > 0.5)
                .collect()
        }
        GameId::Pentago => {
            let mut mask = vec![false; game.action_count()];
            for cell in 0..cells {
                if empty[cell] > 0.5 {
                    for a in cell * 8..(cell + 1) * 8 {
                        mask[a] = true;
                    }
                }
            }
            mask
        }
    }
}

/// Formats a move history as the text codec: Connect Four games are
/// 1-based column digits ("44455554"); Pentago games are comma-separated
/// "c<cell>-q<quadrant>-<cw|ccw>" tokens.
pub fn moves_to_codec(moves: &[Move]) -> String {
    let mut out = String::new();
    for (i, mv) in moves.iter().enumerate() {
        match mv {
            Move::Drop { column } => out.push(char::from(b'1' + column)),
            Move::Place {
                cell,
                quadrant,
                rotation,
            } => {
                if i > 0 {
                    out.push(',');
                }
                let dir = match rotation {
                    Rotation::Cw => "cw",
                    Rotation::Ccw => "ccw",
                };
                out.push_str(&format!("c{cell}-q{quadrant}-{dir}"));
            }
        }
    }
    out
}

/// Parses the text codec back into a move list.
pub fn codec_to_moves(game: GameId, codec: &str) -> Result<Vec<Move>, CodecError> {
    let mut moves = Vec::new();
    match game {
        GameId::ConnectFour => {
            for (i, ch) in codec.chars().enumerate() {
                match ch.to_digit(10) {
                    Some(d) if (1..=7).contains(&d) => moves.push(Move::Drop {
                        column: (d - 1) as u8,
                    }),
                    _ => return Err(CodecError::BadToken(format!("{ch} (position {i})"))),
                }
            }
        }
        GameId::Pentago => {
            if codec.is_empty() {
                return Ok(moves);
            }
            for (i, token) in codec.split(',').enumerate() {
                if token.is_empty() {
                    return Err(CodecError::EmptyToken(i));
                }
                moves.push(parse_pentago_token(token)?);
            }
        }
    }
    Ok(moves)
}

fn parse_pentago_token(token: &str) -> Result<Move, CodecError> {
    let bad = || CodecError::BadToken(token.to_string());
    let mut parts = token.split('-');
    let cell = parts
        .next()
        .and_then(|p| p.strip_prefix('c'))
        .and_then(|p| p.parse::<u8>().ok())
        .ok_or_else(bad)?;
    let quadrant = parts
        .next()
        .and_then(|p| p.strip_prefix('q'))
        .and_then(|p| p.parse::<u8>().ok())
        .ok_or_else(bad)?;
    let rotation = match parts.next() {
        Some("cw") => Rotation::Cw,
        Some("ccw") => Rotation::Ccw,
        _ => return Err(bad()),
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(Move::Place {
        cell,
        quadrant,
        rotation,
    })
}

/// Replays a codec string from the initial position, validating legality.
pub fn state_from_codec(game: GameId, codec: &str) -> Result<GameState, CodecError> {
    let moves = codec_to_moves(game, codec)?;
    let mut state = GameState::new(game);
    for (ply, mv) in moves.into_iter().enumerate() {
        state = state
            .apply_move(mv)
            .map_err(|source| CodecError::Illegal { ply, source })?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connect_four_empty_board_has_seven_moves() {
        let s = GameState::new(GameId::ConnectFour);
        assert_eq!(s.legal_moves().len(), 7);
    }

    #[test]
    fn pentago_empty_board_has_288_moves() {
        let s = GameState::new(GameId::Pentago);
        assert_eq!(s.legal_moves().len(), 288);
    }

    #[test]
    fn full_column_excluded_from_moves() {
        let mut s = GameState::new(GameId::ConnectFour);
        for _ in 0..6 {
            s = s.apply_move(Move::Drop { column: 3 }).unwrap();
        }
        let moves = s.legal_moves();
        assert_eq!(moves.len(), 6);
        assert!(!moves.contains(&Move::Drop { column: 3 }));
    }

    #[test]
    fn illegal_moves_name_the_rule() {
        let mut s = GameState::new(GameId::ConnectFour);
        assert_eq!(
            s.apply_move(Move::Drop { column: 9 }),
            Err(IllegalMove::ColumnOutOfRange(9))
        );
        for _ in 0..6 {
            s = s.apply_move(Move::Drop { column: 0 }).unwrap();
        }
        assert_eq!(
            s.apply_move(Move::Drop { column: 0 }),
            Err(IllegalMove::ColumnFull(0))
        );

        let p = GameState::new(GameId::Pentago);
        let p2 = p
            .apply_move(Move::Place {
                cell: 7,
                quadrant: 1,
                rotation: Rotation::Cw,
            })
            .unwrap();
        // cell 7 is in quadrant 0 which was not rotated... it was quadrant 1.
        // cell 7 = (1,1), quadrant 0; rotating quadrant 1 leaves it in place.
        assert_eq!(
            p2.apply_move(Move::Place {
                cell: 7,
                quadrant: 0,
                rotation: Rotation::Cw
            }),
            Err(IllegalMove::CellOccupied(7))
        );
    }

    #[test]
    fn pentago_rotation_leaves_other_quadrants() {
        let s = GameState::new(GameId::Pentago);
        // place at cell 0 (quadrant 0), rotate quadrant 3
        let s = s
            .apply_move(Move::Place {
                cell: 0,
                quadrant: 3,
                rotation: Rotation::Cw,
            })
            .unwrap();
        match &s {
            GameState::Pentago(p) => {
                assert_ne!(p.tokens(Player::First) & 1, 0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn observation_partitions_the_board() {
        let mut s = GameState::new(GameId::ConnectFour);
        for col in [3, 3, 4, 2, 5] {
            s = s.apply_move(Move::Drop { column: col }).unwrap();
        }
        let obs = s.observation();
        assert_eq!(obs.len(), 126);
        for cell in 0..42 {
            let sum: f32 = obs[cell] + obs[42 + cell] + obs[84 + cell];
            assert_eq!(sum, 1.0);
        }
    }

    #[test]
    fn empty_board_observation_is_all_empty_plane() {
        let s = GameState::new(GameId::ConnectFour);
        let obs = s.observation();
        assert!(obs[..84].iter().all(|&x| x == 0.0));
        assert!(obs[84..].iter().all(|&x| x == 1.0));

        let p = GameState::new(GameId::Pentago);
        let obs = p.observation();
        assert_eq!(obs.len(), 108);
        assert_eq!(obs.iter().sum::<f32>(), 36.0);
    }

    #[test]
    fn observation_is_mover_relative() {
        let s = GameState::new(GameId::ConnectFour)
            .apply_move(Move::Drop { column: 0 })
            .unwrap();
        // First's token at cell (0,0) is now the *opponent's* plane.
        let obs = s.observation();
        assert_eq!(obs[0], 0.0);
        assert_eq!(obs[42], 1.0);
    }

    #[test]
    fn codec_round_trip_connect_four() {
        let moves = vec![
            Move::Drop { column: 3 },
            Move::Drop { column: 3 },
            Move::Drop { column: 4 },
        ];
        let codec = moves_to_codec(&moves);
        assert_eq!(codec, "445");
        assert_eq!(codec_to_moves(GameId::ConnectFour, &codec).unwrap(), moves);
    }

    #[test]
    fn codec_round_trip_pentago() {
        let moves = vec![
            Move::Place {
                cell: 12,
                quadrant: 3,
                rotation: Rotation::Cw,
            },
            Move::Place {
                cell: 0,
                quadrant: 1,
                rotation: Rotation::Ccw,
            },
        ];
        let codec = moves_to_codec(&moves);
        assert_eq!(codec, "c12-q3-cw,c0-q1-ccw");
        assert_eq!(codec_to_moves(GameId::Pentago, &codec).unwrap(), moves);
    }

    #[test]
    fn codec_rejects_garbage() {
        assert!(codec_to_moves(GameId::ConnectFour, "48").is_err());
        assert!(codec_to_moves(GameId::ConnectFour, "0").is_err());
        assert!(codec_to_moves(GameId::Pentago, "c1-q9").is_err());
        assert!(state_from_codec(GameId::ConnectFour, "1111111").is_err());
    }

    #[test]
    fn action_index_round_trip() {
        for game in [GameId::ConnectFour, GameId::Pentago] {
            let s = GameState::new(game);
            for mv in s.legal_moves() {
                let idx = mv.action_index();
                assert_eq!(Move::from_action_index(game, idx), Some(mv));
            }
        }
    }

    #[test]
    fn legal_mask_matches_legal_moves() {
        let mut s = GameState::new(GameId::ConnectFour);
        for col in [0, 0, 0, 0, 0, 0, 3, 4] {
            s = s.apply_move(Move::Drop { column: col }).unwrap();
        }
        let mask = legal_mask_from_observation(GameId::ConnectFour, &s.observation());
        let legal: Vec<usize> = s.legal_moves().iter().map(|m| m.action_index()).collect();
        for (a, &m) in mask.iter().enumerate() {
            assert_eq!(m, legal.contains(&a));
        }
    }
}
