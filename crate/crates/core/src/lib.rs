//! Desk-scale AlphaZero laboratory.
//!
//! Trains MLP-guided MCTS agents on Connect Four and Pentago, rates them
//! with Bradley-Terry/Elo maximum likelihood, benchmarks against an exact
//! Connect Four solver, and fits power-law scaling relations (strength vs.
//! model size, vs. training compute, and optimal size vs. compute).

pub mod games;
pub mod net;
pub mod solver;

pub mod prelude {
    pub use crate::games::{GameId, GameState, Move, Player, Rotation, TerminalStatus};
}
