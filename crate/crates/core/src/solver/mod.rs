//! Exact Connect Four solver and temperature-parameterized solver agents.
//!
//! Scores are anchored to the game clock: a position where the side to move
//! forces a win that completes on overall ply `n` (counting every stone from
//! the first move) scores `42 - n`; a forced loss at ply `n` scores
//! `-(42 - n)`; a perfect-play draw scores 0. Because the ply at which a
//! line completes is baked into the score, plain negamax maximization
//! automatically prefers the fastest win and the slowest loss.

mod cache;
mod negamax;

pub use cache::SolverCache;
pub use negamax::{Solver, DEFAULT_TABLE_LOG2};

use crate::games::{ConnectFourState, GameState};
use rand::Rng;
use thiserror::Error;

pub const ILLEGAL_Q: i8 = -99;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("only Connect Four positions can be solved")]
    UnsupportedGame,
    #[error("cannot solve a terminal position")]
    TerminalPosition,
    #[error("q-vector has no legal moves")]
    EmptyQVector,
    #[error("solver temperature must be non-negative")]
    NegativeTemperature,
}

/// Exact per-column move scores for one position. Illegal columns hold
/// [`ILLEGAL_Q`].
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct QVector {
    pub values: [i8; 7],
}

impl QVector {
    pub fn from_values(values: [i8; 7]) -> QVector {
        QVector { values }
    }

    pub fn legal(&self) -> impl Iterator<Item = (usize, i8)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != ILLEGAL_Q)
            .map(|(c, &v)| (c, v))
    }

    pub fn legal_count(&self) -> usize {
        self.legal().count()
    }

    /// Best achievable score for the side to move.
    pub fn best(&self) -> Option<i8> {
        self.legal().map(|(_, v)| v).max()
    }

    /// Game-theoretic value sign from the mover's perspective: +1 / 0 / -1.
    pub fn value_sign(&self) -> i8 {
        match self.best() {
            Some(v) if v > 0 => 1,
            Some(v) if v < 0 => -1,
            _ => 0,
        }
    }

    /// Optimal moves: fastest win if winning, draw-holding moves if drawn,
    /// slowest loss otherwise. With ply-anchored scores these are exactly
    /// the argmax columns.
    pub fn optimal_columns(&self) -> Vec<usize> {
        match self.best() {
            None => Vec::new(),
            Some(b) => self.legal().filter(|&(_, v)| v == b).map(|(c, _)| c).collect(),
        }
    }
}

/// Temperature configuration for a solver-backed benchmark agent.
/// `temperature = 0` plays optimally (uniform over argmax), `infinity`
/// plays uniformly at random.
#[derive(Clone, Copy, Debug)]
pub struct SolverAgentConfig {
    pub temperature: f64,
}

impl SolverAgentConfig {
    pub fn new(temperature: f64) -> Result<SolverAgentConfig, SolverError> {
        if temperature < 0.0 || temperature.is_nan() {
            return Err(SolverError::NegativeTemperature);
        }
        Ok(SolverAgentConfig { temperature })
    }
}

/// Softmax of `q / temperature` over legal columns, returned as a
/// probability vector aligned with the 7 columns (zeros on illegal ones).
pub fn solver_policy(q: &QVector, cfg: &SolverAgentConfig) -> Result<[f64; 7], SolverError> {
    if cfg.temperature < 0.0 || cfg.temperature.is_nan() {
        return Err(SolverError::NegativeTemperature);
    }
    let legal: Vec<(usize, i8)> = q.legal().collect();
    if legal.is_empty() {
        return Err(SolverError::EmptyQVector);
    }
    let mut probs = [0.0f64; 7];
    if cfg.temperature == 0.0 {
        let best = legal.iter().map(|&(_, v)| v).max().unwrap();
        let ties: Vec<usize> = legal
            .iter()
            .filter(|&&(_, v)| v == best)
            .map(|&(c, _)| c)
            .collect();
        for c in &ties {
            probs[*c] = 1.0 / ties.len() as f64;
        }
    } else if cfg.temperature.is_infinite() {
        for &(c, _) in &legal {
            probs[c] = 1.0 / legal.len() as f64;
        }
    } else {
        let max_q = legal.iter().map(|&(_, v)| v as f64).fold(f64::MIN, f64::max);
        let mut total = 0.0;
        for &(c, v) in &legal {
            let e = ((v as f64 - max_q) / cfg.temperature).exp();
            probs[c] = e;
            total += e;
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
    }
    Ok(probs)
}

/// Solves the position and samples a move from the temperature policy.
pub fn solver_agent_move<R: Rng>(
    solver: &Solver,
    state: &GameState,
    cfg: &SolverAgentConfig,
    rng: &mut R,
) -> Result<crate::games::Move, SolverError> {
    let q = solve(solver, state)?;
    let probs = solver_policy(&q, cfg)?;
    let column = sample_index(&probs, rng);
    Ok(crate::games::Move::Drop {
        column: column as u8,
    })
}

/// Solves a [`GameState`], rejecting Pentago.
pub fn solve(solver: &Solver, state: &GameState) -> Result<QVector, SolverError> {
    match state {
        GameState::ConnectFour(s) => solve_connect_four(solver, s),
        GameState::Pentago(_) => Err(SolverError::UnsupportedGame),
    }
}

pub fn solve_connect_four(
    solver: &Solver,
    state: &ConnectFourState,
) -> Result<QVector, SolverError> {
    if state.is_terminal() {
        return Err(SolverError::TerminalPosition);
    }
    Ok(solver.solve_moves(state))
}

fn sample_index<R: Rng>(probs: &[f64; 7], rng: &mut R) -> usize {
    let x: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if x < acc {
                return i;
            }
        }
    }
    last
}
