//! From-scratch MLP with policy and value heads.
//!
//! Architecture: a torso of two fully-connected hidden layers feeds a
//! policy head and a value head, each with one hidden layer; every hidden
//! layer has the same width. Rectifier activations on hidden layers, tanh
//! on the value output, legal-move-masked softmax on the policy logits.
//!
//! Production networks use f32 parameters with 64-bit accumulation in loss
//! and gradient reductions; the same generic code instantiated at f64
//! backs the finite-difference gradient tests.

mod checkpoint;
mod scalar;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use scalar::Scalar;

use crate::games::GameId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Epsilon under which log-probabilities are clamped in the policy loss.
pub const POLICY_LOG_EPS: f64 = 1e-30;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("observation length {got} does not match architecture input {want}")]
    BadObservation { got: usize, want: usize },
    #[error("legal mask has no legal action")]
    NoLegalAction,
    #[error("non-finite {0} encountered")]
    NonFinite(&'static str),
    #[error("empty training batch")]
    EmptyBatch,
}

/// Network shape: input size and action count are fixed by the game,
/// hidden width is the scaling knob.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Architecture {
    pub input_size: usize,
    pub width: usize,
    pub action_count: usize,
}

impl Architecture {
    pub fn for_game(game: GameId, width: usize) -> Architecture {
        Architecture {
            input_size: game.observation_len(),
            width,
            action_count: game.action_count(),
        }
    }

    /// Linear layers as (fan_in, fan_out) pairs, in parameter-buffer order:
    /// torso 1, torso 2, policy hidden, policy out, value hidden, value out.
    pub fn layers(&self) -> [(usize, usize); 6] {
        let (d, w, a) = (self.input_size, self.width, self.action_count);
        [(d, w), (w, w), (w, w), (w, a), (w, w), (w, 1)]
    }

    /// Exact parameter count:
    /// `(d+1)w + (w+1)w + (w+1)w + (w+1)A + (w+1)w + (w+1)`.
    pub fn param_count(&self) -> u64 {
        self.layers()
            .iter()
            .map(|&(i, o)| ((i + 1) * o) as u64)
            .sum()
    }

    /// Forward-pass cost: 2 FLOPs per weight multiply-accumulate plus one
    /// FLOP per hidden unit for its activation (4 hidden layers of width w).
    pub fn forward_flops(&self) -> u64 {
        let mac: u64 = self.layers().iter().map(|&(i, o)| (i * o) as u64).sum();
        2 * mac + 4 * self.width as u64
    }
}

/// One self-play sample: observation, MCTS visit distribution over the
/// full action space, and the final game outcome from the mover's
/// perspective.
#[derive(Clone, Debug)]
pub struct TrainingExample {
    pub observation: Vec<f32>,
    pub policy: Vec<f32>,
    pub outcome: i8,
}

/// All weights and biases in one flat buffer. Layout per layer: weights
/// (row-major, `fan_out x fan_in`) then biases, layers in
/// [`Architecture::layers`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<S: Scalar = f32> {
    pub arch: Architecture,
    pub params: Vec<S>,
}

/// (weights range, biases range, fan_in, fan_out) per layer.
#[derive(Clone, Copy, Debug)]
pub struct LayerSpan {
    pub weights: (usize, usize),
    pub biases: (usize, usize),
    pub fan_in: usize,
    pub fan_out: usize,
}

pub fn layer_spans(arch: &Architecture) -> [LayerSpan; 6] {
    let mut spans = [LayerSpan {
        weights: (0, 0),
        biases: (0, 0),
        fan_in: 0,
        fan_out: 0,
    }; 6];
    let mut offset = 0;
    for (k, &(fan_in, fan_out)) in arch.layers().iter().enumerate() {
        let w_end = offset + fan_in * fan_out;
        let b_end = w_end + fan_out;
        spans[k] = LayerSpan {
            weights: (offset, w_end),
            biases: (w_end, b_end),
            fan_in,
            fan_out,
        };
        offset = b_end;
    }
    spans
}

/// Deterministic fan-in-scaled initialization: weights are uniform in
/// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
pub fn init_network<S: Scalar>(arch: Architecture, seed: u64) -> Network<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![S::zero(); arch.param_count() as usize];
    for span in layer_spans(&arch) {
        let bound = 1.0 / (span.fan_in as f64).sqrt();
        for p in params[span.weights.0..span.weights.1].iter_mut() {
            *p = S::from_f64(rng.gen_range(-bound..=bound));
        }
    }
    Network { arch, params }
}

/// Inference output: raw logits, legal-masked prior and scalar value.
#[derive(Clone, Debug)]
pub struct NetworkOutput<S: Scalar = f32> {
    pub logits: Vec<S>,
    pub prior: Vec<S>,
    pub value: S,
}

/// Reusable activation buffers for the inference path.
pub struct Scratch<S: Scalar = f32> {
    h0: Vec<S>,
    h1: Vec<S>,
    ph: Vec<S>,
    pub logits: Vec<S>,
    pub prior: Vec<S>,
    vh: Vec<S>,
}

impl<S: Scalar> Scratch<S> {
    pub fn new(arch: &Architecture) -> Scratch<S> {
        Scratch {
            h0: vec![S::zero(); arch.width],
            h1: vec![S::zero(); arch.width],
            ph: vec![S::zero(); arch.width],
            logits: vec![S::zero(); arch.action_count],
            prior: vec![S::zero(); arch.action_count],
            vh: vec![S::zero(); arch.width],
        }
    }
}

#[inline]
fn matvec<S: Scalar>(weights: &[S], biases: &[S], x: &[S], out: &mut [S]) {
    let d = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &weights[i * d..(i + 1) * d];
        // four accumulators keep the FMA pipeline busy and let the
        // auto-vectorizer reassociate
        let mut acc = [S::zero(); 4];
        let chunks = d / 4;
        for c in 0..chunks {
            let k = c * 4;
            acc[0] += row[k] * x[k];
            acc[1] += row[k + 1] * x[k + 1];
            acc[2] += row[k + 2] * x[k + 2];
            acc[3] += row[k + 3] * x[k + 3];
        }
        let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        for k in chunks * 4..d {
            s += row[k] * x[k];
        }
        *o = s + biases[i];
    }
}

#[inline]
fn relu_inplace<S: Scalar>(xs: &mut [S]) {
    for x in xs.iter_mut() {
        if *x < S::zero() {
            *x = S::zero();
        }
    }
}

/// Softmax restricted to legal actions; illegal entries are exactly zero.
/// Internally accumulates in f64 so the prior sums to 1 at f64 precision.
pub fn masked_softmax<S: Scalar>(
    logits: &[S],
    legal: &[bool],
    out: &mut [S],
) -> Result<(), NetError> {
    debug_assert_eq!(logits.len(), legal.len());
    let mut max = f64::NEG_INFINITY;
    for (l, &ok) in logits.iter().zip(legal) {
        if ok {
            max = max.max(l.to_f64());
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(NetError::NoLegalAction);
    }
    let mut total = 0.0f64;
    for ((o, l), &ok) in out.iter_mut().zip(logits).zip(legal) {
        if ok {
            let e = (l.to_f64() - max).exp();
            total += e;
            *o = S::from_f64(e);
        } else {
            *o = S::zero();
        }
    }
    for (o, &ok) in out.iter_mut().zip(legal) {
        if ok {
            *o = S::from_f64(o.to_f64() / total);
        }
    }
    Ok(())
}

impl<S: Scalar> Network<S> {
    pub fn new_random(arch: Architecture, seed: u64) -> Network<S> {
        init_network(arch, seed)
    }

    /// Forward pass into caller-provided scratch. Returns the value head
    /// output; the masked prior is left in `scratch.prior`.
    pub fn forward_into(
        &self,
        obs: &[S],
        legal: &[bool],
        scratch: &mut Scratch<S>,
    ) -> Result<S, NetError> {
        if obs.len() != self.arch.input_size {
            return Err(NetError::BadObservation {
                got: obs.len(),
                want: self.arch.input_size,
            });
        }
        let spans = layer_spans(&self.arch);
        let p = &self.params;
        let sl = |s: (usize, usize)| &p[s.0..s.1];

        matvec(sl(spans[0].weights), sl(spans[0].biases), obs, &mut scratch.h0);
        relu_inplace(&mut scratch.h0);
        matvec(sl(spans[1].weights), sl(spans[1].biases), &scratch.h0, &mut scratch.h1);
        relu_inplace(&mut scratch.h1);

        matvec(sl(spans[2].weights), sl(spans[2].biases), &scratch.h1, &mut scratch.ph);
        relu_inplace(&mut scratch.ph);
        matvec(sl(spans[3].weights), sl(spans[3].biases), &scratch.ph, &mut scratch.logits);

        matvec(sl(spans[4].weights), sl(spans[4].biases), &scratch.h1, &mut scratch.vh);
        relu_inplace(&mut scratch.vh);
        let mut v_out = [S::zero(); 1];
        matvec(sl(spans[5].weights), sl(spans[5].biases), &scratch.vh, &mut v_out);
        let value = v_out[0].tanh();

        masked_softmax(&scratch.logits, legal, &mut scratch.prior)?;
        Ok(value)
    }

    /// Convenience forward pass allocating its own buffers.
    pub fn forward(&self, obs: &[S], legal: &[bool]) -> Result<NetworkOutput<S>, NetError> {
        let mut scratch = Scratch::new(&self.arch);
        let value = self.forward_into(obs, legal, &mut scratch)?;
        Ok(NetworkOutput {
            logits: scratch.logits,
            prior: scratch.prior,
            value,
        })
    }
}

/// Loss components of Eq-style AlphaZero training: mean squared value
/// error, mean masked cross-entropy, and the L2 penalty over weights
/// (biases excluded). `total = value + policy + reg`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LossComponents {
    pub total: f64,
    pub value: f64,
    pub policy: f64,
    pub reg: f64,
}

/// Computes the loss of a batch without gradients.
pub fn loss<S: Scalar>(
    net: &Network<S>,
    batch: &[TrainingExample],
    c_reg: f64,
) -> Result<LossComponents, NetError> {
    let (components, _) = loss_and_grad_impl(net, batch, c_reg, false)?;
    Ok(components)
}

/// Computes the loss and its gradient with respect to every parameter.
/// Per-example gradients accumulate into f64 buffers.
pub fn loss_and_grad<S: Scalar>(
    net: &Network<S>,
    batch: &[TrainingExample],
    c_reg: f64,
) -> Result<(LossComponents, Vec<S>), NetError> {
    let (components, grad) = loss_and_grad_impl(net, batch, c_reg, true)?;
    Ok((components, grad.unwrap()))
}

fn loss_and_grad_impl<S: Scalar>(
    net: &Network<S>,
    batch: &[TrainingExample],
    c_reg: f64,
    want_grad: bool,
) -> Result<(LossComponents, Option<Vec<S>>), NetError> {
    if batch.is_empty() {
        return Err(NetError::EmptyBatch);
    }
    let arch = net.arch;
    let spans = layer_spans(&arch);
    let game = game_for_arch(&arch);
    let inv_b = 1.0 / batch.len() as f64;

    let mut grad_acc = if want_grad {
        Some(vec![0.0f64; net.params.len()])
    } else {
        None
    };
    let mut scratch = Scratch::<S>::new(&arch);
    let mut obs_s = vec![S::zero(); arch.input_size];
    let mut value_sum = 0.0f64;
    let mut policy_sum = 0.0f64;

    // backprop deltas
    let mut d_logits = vec![S::zero(); arch.action_count];
    let mut d_ph = vec![S::zero(); arch.width];
    let mut d_vh = vec![S::zero(); arch.width];
    let mut d_h1 = vec![S::zero(); arch.width];
    let mut d_h0 = vec![S::zero(); arch.width];

    for ex in batch {
        if ex.observation.len() != arch.input_size {
            return Err(NetError::BadObservation {
                got: ex.observation.len(),
                want: arch.input_size,
            });
        }
        for (s, &x) in obs_s.iter_mut().zip(&ex.observation) {
            *s = S::from_f64(x as f64);
        }
        let legal = crate::games::legal_mask_from_observation(game, &ex.observation);
        let value = net.forward_into(&obs_s, &legal, &mut scratch)?;

        let v = value.to_f64();
        let z = ex.outcome as f64;
        value_sum += (z - v) * (z - v);

        let mut ce = 0.0f64;
        for (a, &ok) in legal.iter().enumerate() {
            let pi = ex.policy[a] as f64;
            if ok && pi > 0.0 {
                let p = scratch.prior[a].to_f64().max(POLICY_LOG_EPS);
                ce -= pi * p.ln();
            }
        }
        policy_sum += ce;

        if let Some(acc) = grad_acc.as_deref_mut() {
            // d(policy CE)/d(logit_a) = p_a - pi_a on legal actions
            for a in 0..arch.action_count {
                d_logits[a] = if legal[a] {
                    S::from_f64(scratch.prior[a].to_f64() - ex.policy[a] as f64)
                } else {
                    S::zero()
                };
            }
            // d(value MSE)/d(pre-tanh) = 2 (v - z) (1 - v^2)
            let d_u = 2.0 * (v - z) * (1.0 - v * v);

            backprop(
                net, &spans, &obs_s, &scratch, &d_logits, d_u, &mut d_ph, &mut d_vh, &mut d_h1,
                &mut d_h0, acc,
            );
        }
    }

    let value_loss = value_sum * inv_b;
    let policy_loss = policy_sum * inv_b;

    // L2 over weights only
    let mut sq = 0.0f64;
    for span in spans {
        for w in &net.params[span.weights.0..span.weights.1] {
            let x = w.to_f64();
            sq += x * x;
        }
    }
    let reg_loss = c_reg * sq;

    let components = LossComponents {
        total: value_loss + policy_loss + reg_loss,
        value: value_loss,
        policy: policy_loss,
        reg: reg_loss,
    };

    let grad = grad_acc.map(|acc| {
        let mut g: Vec<S> = acc.iter().map(|&x| S::from_f64(x * inv_b)).collect();
        for span in spans {
            for i in span.weights.0..span.weights.1 {
                g[i] += S::from_f64(2.0 * c_reg * net.params[i].to_f64());
            }
        }
        g
    });

    Ok((components, grad))
}

fn game_for_arch(arch: &Architecture) -> GameId {
    if arch.input_size == GameId::Pentago.observation_len() {
        GameId::Pentago
    } else {
        GameId::ConnectFour
    }
}

/// Accumulates one example's parameter gradients (scaled by 1 at this
/// point; the 1/B factor is applied when converting to S).
#[allow(clippy::too_many_arguments)]
fn backprop<S: Scalar>(
    net: &Network<S>,
    spans: &[LayerSpan; 6],
    obs: &[S],
    scratch: &Scratch<S>,
    d_logits: &[S],
    d_value_pre: f64,
    d_ph: &mut [S],
    d_vh: &mut [S],
    d_h1: &mut [S],
    d_h0: &mut [S],
    acc: &mut [f64],
) {
    let p = &net.params;

    // ---- policy head output layer: logits = Wpo ph + bpo
    accumulate_layer(&spans[3], d_logits, &scratch.ph, acc);
    backward_through(&spans[3], p, d_logits, d_ph);
    relu_backward(d_ph, &scratch.ph);
    // ---- policy hidden: ph = relu(Wp h1 + bp)
    accumulate_layer(&spans[2], d_ph, &scratch.h1, acc);

    // ---- value head output: v = tanh(wv2 . vh + b)
    let d_v = [S::from_f64(d_value_pre)];
    accumulate_layer(&spans[5], &d_v, &scratch.vh, acc);
    backward_through(&spans[5], p, &d_v, d_vh);
    relu_backward(d_vh, &scratch.vh);
    // ---- value hidden: vh = relu(Wv h1 + bv)
    accumulate_layer(&spans[4], d_vh, &scratch.h1, acc);

    // ---- torso layer 2 receives gradients from both heads
    backward_through(&spans[2], p, d_ph, d_h1);
    let mut d_h1_v = vec![S::zero(); d_h1.len()];
    backward_through(&spans[4], p, d_vh, &mut d_h1_v);
    for (a, b) in d_h1.iter_mut().zip(&d_h1_v) {
        *a += *b;
    }
    relu_backward(d_h1, &scratch.h1);
    accumulate_layer(&spans[1], d_h1, &scratch.h0, acc);

    // ---- torso layer 1
    backward_through(&spans[1], p, d_h1, d_h0);
    relu_backward(d_h0, &scratch.h0);
    accumulate_layer(&spans[0], d_h0, obs, acc);
}

/// dL/dW += delta x^T ; dL/db += delta
fn accumulate_layer<S: Scalar>(span: &LayerSpan, delta: &[S], input: &[S], acc: &mut [f64]) {
    let d = span.fan_in;
    for (i, &dl) in delta.iter().enumerate() {
        let dl = dl.to_f64();
        if dl == 0.0 {
            continue;
        }
        let row = &mut acc[span.weights.0 + i * d..span.weights.0 + (i + 1) * d];
        for (w, &x) in row.iter_mut().zip(input) {
            *w += dl * x.to_f64();
        }
        acc[span.biases.0 + i] += dl;
    }
}

/// dL/dx = W^T delta
fn backward_through<S: Scalar>(span: &LayerSpan, params: &[S], delta: &[S], out: &mut [S]) {
    let d = span.fan_in;
    for o in out.iter_mut() {
        *o = S::zero();
    }
    for (i, &dl) in delta.iter().enumerate() {
        if dl.to_f64() == 0.0 {
            continue;
        }
        let row = &params[span.weights.0 + i * d..span.weights.0 + (i + 1) * d];
        for (o, &w) in out.iter_mut().zip(row) {
            *o += w * dl;
        }
    }
}

/// Zeroes deltas where the forward activation was clamped.
fn relu_backward<S: Scalar>(delta: &mut [S], activation: &[S]) {
    for (d, &a) in delta.iter_mut().zip(activation) {
        if a <= S::zero() {
            *d = S::zero();
        }
    }
}

/// Adaptive moment estimation state; update uses (0.9, 0.999, 1e-8).
#[derive(Clone, Debug)]
pub struct AdamState<S: Scalar = f32> {
    pub m: Vec<S>,
    pub v: Vec<S>,
    pub t: u64,
    pub learning_rate: f64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(param_len: usize, learning_rate: f64) -> AdamState<S> {
        AdamState {
            m: vec![S::zero(); param_len],
            v: vec![S::zero(); param_len],
            t: 0,
            learning_rate,
        }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// One optimizer step on a batch: computes the Eq.-(9)-style gradient
/// (L2 applied inside the loss gradient) and applies an Adam update.
/// Deterministic given (params, batch, state). Non-finite gradients abort.
pub fn train_step<S: Scalar>(
    net: &mut Network<S>,
    batch: &[TrainingExample],
    opt: &mut AdamState<S>,
    c_reg: f64,
) -> Result<LossComponents, NetError> {
    let (components, grad) = loss_and_grad(net, batch, c_reg)?;
    if !components.total.is_finite() {
        return Err(NetError::NonFinite("loss"));
    }
    for g in &grad {
        if !g.is_finite() {
            return Err(NetError::NonFinite("gradient"));
        }
    }
    opt.t += 1;
    let b1t = 1.0 - ADAM_BETA1.powi(opt.t as i32);
    let b2t = 1.0 - ADAM_BETA2.powi(opt.t as i32);
    let lr = opt.learning_rate;
    for i in 0..net.params.len() {
        let g = grad[i].to_f64();
        let m = ADAM_BETA1 * opt.m[i].to_f64() + (1.0 - ADAM_BETA1) * g;
        let v = ADAM_BETA2 * opt.v[i].to_f64() + (1.0 - ADAM_BETA2) * g * g;
        opt.m[i] = S::from_f64(m);
        opt.v[i] = S::from_f64(v);
        let update = lr * (m / b1t) / ((v / b2t).sqrt() + ADAM_EPS);
        net.params[i] = S::from_f64(net.params[i].to_f64() - update);
    }
    Ok(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{GameId, GameState, Move};

    fn arch4() -> Architecture {
        Architecture::for_game(GameId::ConnectFour, 4)
    }

    #[test]
    fn param_count_closed_form() {
        assert_eq!(arch4().param_count(), 608);
        // strictly increasing in width
        let mut prev = 0;
        for w in [1, 2, 4, 8, 16, 32, 64, 128, 256] {
            let n = Architecture::for_game(GameId::ConnectFour, w).param_count();
            assert!(n > prev);
            prev = n;
        }
    }

    #[test]
    fn init_matches_param_count_and_is_deterministic() {
        let a: Network<f32> = init_network(arch4(), 7);
        let b: Network<f32> = init_network(arch4(), 7);
        let c: Network<f32> = init_network(arch4(), 8);
        assert_eq!(a.params.len(), 608);
        assert_eq!(a.params, b.params);
        assert_ne!(a.params, c.params);
        assert_eq!(c.params.len(), 608);
        // biases zero
        for span in layer_spans(&arch4()) {
            assert!(a.params[span.biases.0..span.biases.1]
                .iter()
                .all(|&x| x == 0.0));
        }
    }

    #[test]
    fn forward_flops_input_layer_dominates_small_widths() {
        let f4 = Architecture::for_game(GameId::ConnectFour, 4).forward_flops();
        let f8 = Architecture::for_game(GameId::ConnectFour, 8).forward_flops();
        assert_eq!(f4, 6 * 16 + 272 * 4);
        assert!((f8 as f64) / (f4 as f64) < 4.0);
    }

    #[test]
    fn zero_weights_give_uniform_prior_and_zero_value() {
        let arch = arch4();
        let net = Network::<f32> {
            arch,
            params: vec![0.0; arch.param_count() as usize],
        };
        let state = GameState::new(GameId::ConnectFour);
        let obs: Vec<f32> = state.observation();
        let legal = vec![true; 7];
        let out = net.forward(&obs, &legal).unwrap();
        assert_eq!(out.value, 0.0);
        for p in &out.prior {
            assert!((p - 1.0 / 7.0).abs() < 1e-6);
        }
    }

    #[test]
    fn prior_sums_to_one_and_masks_illegal() {
        let arch = arch4();
        let mut state = GameState::new(GameId::ConnectFour);
        for _ in 0..6 {
            state = state.apply_move(Move::Drop { column: 2 }).unwrap();
        }
        let legal_moves = state.legal_moves();
        let mut legal = vec![false; 7];
        for mv in &legal_moves {
            legal[mv.action_index()] = true;
        }
        for seed in 0..50 {
            let net: Network<f32> = init_network(arch, seed);
            let out = net.forward(&state.observation(), &legal).unwrap();
            let sum: f64 = out.prior.iter().map(|&p| p as f64).sum();
            assert!((sum - 1.0).abs() < 1e-9, "seed {seed}: sum {sum}");
            assert_eq!(out.prior[2], 0.0);
        }
    }

    #[test]
    fn all_illegal_mask_errors() {
        let net: Network<f32> = init_network(arch4(), 1);
        let obs = vec![0.0f32; 126];
        let legal = vec![false; 7];
        assert_eq!(
            net.forward(&obs, &legal).unwrap_err(),
            NetError::NoLegalAction
        );
    }

    #[test]
    fn masked_softmax_shift_invariance() {
        // logits on a lattice so that adding the constant is exact in f32
        let logits: Vec<f32> = (0..7).map(|i| (i as f32 - 3.0) * 0.8125).collect();
        let shifted: Vec<f32> = logits.iter().map(|&l| l + 3.25).collect();
        let legal = vec![true, true, false, true, true, true, false];
        let mut a = vec![0.0f32; 7];
        let mut b = vec![0.0f32; 7];
        masked_softmax(&logits, &legal, &mut a).unwrap();
        masked_softmax(&shifted, &legal, &mut b).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn batch_for(arch: &Architecture, n: usize, seed: u64) -> Vec<TrainingExample> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for _ in 0..n {
            // random reachable positions via random playout prefixes
            let mut s = GameState::new(GameId::ConnectFour);
            let len = rng.gen_range(0..12);
            for _ in 0..len {
                let moves = s.legal_moves();
                if moves.is_empty() {
                    break;
                }
                let mv = moves[rng.gen_range(0..moves.len())];
                s = s.apply_move(mv).unwrap();
            }
            if s.is_terminal() {
                continue;
            }
            let legal: Vec<usize> = s.legal_moves().iter().map(|m| m.action_index()).collect();
            let mut policy = vec![0.0f32; arch.action_count];
            let mut total = 0.0;
            for &a in &legal {
                let x: f32 = rng.gen();
                policy[a] = x;
                total += x;
            }
            for p in policy.iter_mut() {
                *p /= total;
            }
            out.push(TrainingExample {
                observation: s.observation(),
                policy,
                outcome: [-1, 0, 1][rng.gen_range(0..3)],
            });
        }
        out
    }

    #[test]
    fn matching_predictions_minimize_value_and_policy_terms() {
        // Zero-weight net: v = 0, prior uniform over legal. With z = 0 and
        // a uniform target the value term vanishes and the policy term sits
        // at its cross-entropy minimum H(pi) = ln 7; with c_reg = 0 the
        // total is exactly that minimum.
        let arch = arch4();
        let zero_net = Network::<f64> {
            arch,
            params: vec![0.0; arch.param_count() as usize],
        };
        let ex = TrainingExample {
            observation: GameState::new(GameId::ConnectFour).observation(),
            policy: vec![1.0 / 7.0; 7],
            outcome: 0,
        };
        let c = loss(&zero_net, &[ex], 0.0).unwrap();
        assert_eq!(c.reg, 0.0);
        assert!(c.value.abs() < 1e-15);
        assert!((c.policy - (7.0f64).ln()).abs() < 1e-12);
        assert!((c.total - c.policy).abs() < 1e-15);
    }

    #[test]
    fn uniform_prior_cross_entropy_is_log_k() {
        // c_reg = 0, uniform p over k legal moves: policy term = ln k for
        // any target distribution
        let arch = arch4();
        let zero_net = Network::<f32> {
            arch,
            params: vec![0.0; arch.param_count() as usize],
        };
        let mut state = GameState::new(GameId::ConnectFour);
        for _ in 0..6 {
            state = state.apply_move(Move::Drop { column: 0 }).unwrap();
        }
        // 6 legal columns now
        let mut policy = vec![0.0f32; 7];
        policy[3] = 0.7;
        policy[4] = 0.3;
        let ex = TrainingExample {
            observation: state.observation(),
            policy,
            outcome: 1,
        };
        let c = loss(&zero_net, &[ex], 0.0).unwrap();
        assert!((c.policy - (6.0f64).ln()).abs() < 1e-6);
    }

    #[test]
    fn reg_term_is_exactly_c_times_weight_square_sum() {
        let arch = arch4();
        let net: Network<f64> = init_network(arch, 11);
        let batch = batch_for(&arch, 4, 1);
        let c_reg = 1e-4;
        let c = loss(&net, &batch, c_reg).unwrap();
        let mut sq = 0.0;
        for span in layer_spans(&arch) {
            for w in &net.params[span.weights.0..span.weights.1] {
                sq += w * w;
            }
        }
        assert_eq!(c.reg, c_reg * sq);
        assert!((c.total - (c.value + c.policy + c.reg)).abs() < 1e-15);
    }

    /// Central finite differences over the f64 instantiation.
    fn finite_difference_check(width: usize, seed: u64, tol: f64) {
        let arch = Architecture::for_game(GameId::ConnectFour, width);
        let net: Network<f64> = init_network(arch, seed);
        let batch = batch_for(&arch, 6, seed + 100);
        assert!(batch.len() >= 3);
        let c_reg = 1e-4;
        let (_, grad) = loss_and_grad(&net, &batch, c_reg).unwrap();

        let h = 1e-6;
        let mut worst = 0.0f64;
        // probe a deterministic subset of parameters plus every bias span edge
        let n = net.params.len();
        let step = (n / 97).max(1);
        let mut checked = 0;
        for i in (0..n).step_by(step) {
            let mut plus = net.clone();
            plus.params[i] += h;
            let lp = loss(&plus, &batch, c_reg).unwrap().total;
            let mut minus = net.clone();
            minus.params[i] -= h;
            let lm = loss(&minus, &batch, c_reg).unwrap().total;
            let fd = (lp - lm) / (2.0 * h);
            let ga = grad[i];
            let denom = ga.abs().max(fd.abs()).max(1e-8);
            let rel = (ga - fd).abs() / denom;
            worst = worst.max(rel);
            checked += 1;
        }
        assert!(checked > 50);
        assert!(worst <= tol, "max relative error {worst} > {tol}");
    }

    #[test]
    fn gradients_match_finite_differences_w4() {
        finite_difference_check(4, 5, 1e-4);
    }

    #[test]
    fn gradients_match_finite_differences_w16() {
        finite_difference_check(16, 9, 1e-4);
    }

    #[test]
    fn adam_reduces_policy_loss_on_fixed_batch() {
        let arch = Architecture::for_game(GameId::ConnectFour, 16);
        let mut net: Network<f32> = init_network(arch, 2);
        let batch = batch_for(&arch, 32, 3);
        let mut opt = AdamState::new(net.params.len(), 1e-3);
        let mut last = f64::INFINITY;
        let mut decreasing = true;
        for _ in 0..50 {
            let c = train_step(&mut net, &batch, &mut opt, 0.0).unwrap();
            if c.policy > last + 1e-9 {
                decreasing = false;
            }
            last = c.policy;
        }
        assert!(decreasing, "policy loss rose during the first 50 steps");
    }

    #[test]
    fn train_step_is_deterministic() {
        let arch = arch4();
        let batch = batch_for(&arch, 8, 3);
        let mut a: Network<f32> = init_network(arch, 2);
        let mut b: Network<f32> = init_network(arch, 2);
        let mut oa = AdamState::new(a.params.len(), 1e-3);
        let mut ob = AdamState::new(b.params.len(), 1e-3);
        for _ in 0..5 {
            train_step(&mut a, &batch, &mut oa, 1e-4).unwrap();
            train_step(&mut b, &batch, &mut ob, 1e-4).unwrap();
        }
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn zero_gradient_leaves_params_near_fixed() {
        // A stationary point: zero-weight net, uniform targets, value
        // target 0, c_reg = 0. Gradient is exactly zero, Adam moves nothing.
        let arch = arch4();
        let mut net = Network::<f32> {
            arch,
            params: vec![0.0; arch.param_count() as usize],
        };
        let state = GameState::new(GameId::ConnectFour);
        let ex = TrainingExample {
            observation: state.observation(),
            policy: vec![1.0 / 7.0; 7],
            outcome: 0,
        };
        let mut opt = AdamState::new(net.params.len(), 1e-3);
        train_step(&mut net, &[ex], &mut opt, 0.0).unwrap();
        for &p in &net.params {
            assert!(p.abs() < 1e-12);
        }
    }
}
