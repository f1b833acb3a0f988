//! Leaky RNN state, parameters, and forward dynamics.
//!
//! Each neuron carries a trainable time constant `tau >= 1`. One update is
//!
//! ```text
//! r_i(t) = phi( (1 - 1/tau_i) * r_i(t-1)
//!             + (1/tau_i) * ( sum_{j != i} W_rec[i][j] * r_j(t-1)
//!                           + W_in[i] * s(t) + b_rec[i] + b_in[i] ) )
//! ```
//!
//! with `phi` a leaky ReLU by default. With [`TauPlacement::Outside`] the
//! self-interaction term stays linear and is added after the nonlinearity.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Activation applied inside the update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    LeakyRelu,
    Relu,
    Tanh,
}

/// Where the self-interaction (leak) term sits relative to the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauPlacement {
    /// Leak term inside the nonlinearity argument.
    Inside,
    /// Linear self-interaction added after the nonlinearity.
    Outside,
}

/// Whether the recurrent/input biases are free per neuron or tied to a
/// single shared scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasMode {
    PerNeuron,
    Shared,
}

/// Static network configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NetConfig {
    /// Neuron count.
    pub n: usize,
    /// Negative slope of the leaky ReLU.
    pub alpha: f64,
    pub nonlinearity: Nonlinearity,
    pub tau_placement: TauPlacement,
    /// Upper clamp for time constants during optimization.
    pub tau_max: f64,
    pub bias_mode: BiasMode,
    /// Recurrent init gain g: W_rec entries are N(0, (g/sqrt(n))^2).
    pub init_gain: f64,
}

impl NetConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            alpha: 0.1,
            nonlinearity: Nonlinearity::LeakyRelu,
            tau_placement: TauPlacement::Inside,
            tau_max: 200.0,
            bias_mode: BiasMode::PerNeuron,
            init_gain: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be >= 2, got {}", self.n)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in [0, 1), got {}",
                self.alpha
            )));
        }
        if self.tau_max <= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "tau_max must be > 1, got {}",
                self.tau_max
            )));
        }
        Ok(())
    }

    pub(crate) fn phi(&self, x: f64) -> f64 {
        match self.nonlinearity {
            // x == 0 takes the positive branch so gradients stay deterministic.
            Nonlinearity::LeakyRelu => {
                if x >= 0.0 {
                    x
                } else {
                    self.alpha * x
                }
            }
            Nonlinearity::Relu => {
                if x >= 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Nonlinearity::Tanh => x.tanh(),
        }
    }

    pub(crate) fn phi_prime(&self, x: f64) -> f64 {
        match self.nonlinearity {
            Nonlinearity::LeakyRelu => {
                if x >= 0.0 {
                    1.0
                } else {
                    self.alpha
                }
            }
            Nonlinearity::Relu => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Nonlinearity::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

/// A linear two-logit classifier on the network state, dedicated to one
/// memory depth `target_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutHead {
    /// 2 x n logit weights.
    pub w_out: Array2<f64>,
    /// Two logit biases.
    pub b_out: Array1<f64>,
    /// The memory depth this head answers for.
    pub target_n: usize,
}

impl ReadoutHead {
    /// Fresh head with N(0, 1/n) weights and zero biases.
    pub fn init(n: usize, target_n: usize, rng: &mut ChaCha8Rng) -> Self {
        let std = 1.0 / (n as f64).sqrt();
        let w_out = Array2::from_shape_fn((2, n), |_| rng::normal(rng) * std);
        Self {
            w_out,
            b_out: Array1::zeros(2),
            target_n,
        }
    }
}

/// All trainable tensors of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    /// n x n recurrent weights; the diagonal is structurally zero.
    pub w_rec: Array2<f64>,
    /// Per-neuron input weights.
    pub w_in: Array1<f64>,
    /// Per-neuron recurrent bias (all entries equal in shared-bias mode).
    pub b_rec: Array1<f64>,
    /// Per-neuron input bias.
    pub b_in: Array1<f64>,
    /// Per-neuron time constants, in [1, tau_max].
    pub tau: Array1<f64>,
    /// Readout heads, target-N strictly increasing.
    pub heads: Vec<ReadoutHead>,
}

impl NetworkParams {
    /// Random initialization: W_rec ~ N(0, (g/sqrt(n))^2) off-diagonal,
    /// W_in ~ N(0, 1/n), biases zero, tau = 1 + |N(0, 0.1)|.
    pub fn init(cfg: &NetConfig, head_targets: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let n = cfg.n;
        let rec_std = cfg.init_gain / (n as f64).sqrt();
        let mut w_rec = Array2::from_shape_fn((n, n), |_| rng::normal(rng) * rec_std);
        for i in 0..n {
            w_rec[(i, i)] = 0.0;
        }
        let in_std = 1.0 / (n as f64).sqrt();
        let w_in = Array1::from_shape_fn(n, |_| rng::normal(rng) * in_std);
        let tau = Array1::from_shape_fn(n, |_| 1.0 + (rng::normal(rng) * 0.1).abs());
        let heads = head_targets
            .iter()
            .map(|&t| ReadoutHead::init(n, t, rng))
            .collect();
        Self {
            w_rec,
            w_in,
            b_rec: Array1::zeros(n),
            b_in: Array1::zeros(n),
            tau,
            heads,
        }
    }

    pub fn n(&self) -> usize {
        self.w_in.len()
    }

    /// Overwrite every time constant with one fixed value.
    pub fn set_fixed_tau(&mut self, value: f64) {
        self.tau.fill(value);
    }

    /// Re-zero the recurrent diagonal (the update sums over j != i).
    pub fn zero_rec_diagonal(&mut self) {
        let n = self.n();
        for i in 0..n {
            self.w_rec[(i, i)] = 0.0;
        }
    }

    /// Structural and invariant checks: shapes agree, tau >= 1, zero
    /// diagonal, non-empty heads with strictly increasing targets.
    pub fn validate(&self, cfg: &NetConfig) -> Result<()> {
        let n = cfg.n;
        let check = |context: &'static str, got: usize| -> Result<()> {
            if got != n {
                return Err(Error::DimMismatch {
                    context,
                    expected: n,
                    got,
                });
            }
            Ok(())
        };
        check("w_rec rows", self.w_rec.nrows())?;
        check("w_rec cols", self.w_rec.ncols())?;
        check("w_in", self.w_in.len())?;
        check("b_rec", self.b_rec.len())?;
        check("b_in", self.b_in.len())?;
        check("tau", self.tau.len())?;
        if self.tau.iter().any(|&t| !(t >= 1.0)) {
            return Err(Error::InvalidConfig("tau below 1".into()));
        }
        if (0..n).any(|i| self.w_rec[(i, i)] != 0.0) {
            return Err(Error::InvalidConfig("nonzero recurrent diagonal".into()));
        }
        if self.heads.is_empty() {
            return Err(Error::InvalidConfig("no readout heads".into()));
        }
        if self.heads.windows(2).any(|w| w[0].target_n >= w[1].target_n) {
            return Err(Error::InvalidConfig(
                "head target-N values must be strictly increasing".into(),
            ));
        }
        for h in &self.heads {
            if h.target_n < 2 {
                return Err(Error::InvalidConfig("head target_n must be >= 2".into()));
            }
            check("head w_out cols", h.w_out.ncols())?;
        }
        Ok(())
    }
}

/// Instantaneous neuron activities.
#[derive(Debug, Clone, PartialEq)]
pub struct NetState {
    pub r: Array1<f64>,
}

impl NetState {
    pub fn zeros(n: usize) -> Self {
        Self { r: Array1::zeros(n) }
    }
}

/// One update, written into flat output slices. `affine_out` receives the
/// recurrent-plus-input drive before tau scaling (needed for the tau
/// gradient), `phi_arg_out` the nonlinearity argument.
///
/// This is the single source of truth for the dynamics; [`step`] and the
/// trainer's unrolled forward pass both call it, so their trajectories are
/// bit-identical.
pub(crate) fn step_core(
    params: &NetworkParams,
    cfg: &NetConfig,
    prev: &[f64],
    input_bit: u8,
    affine_out: &mut [f64],
    phi_arg_out: &mut [f64],
    r_out: &mut [f64],
) {
    let n = cfg.n;
    let s = input_bit as f64;
    // affine = W_rec * prev + W_in * s + b_rec + b_in (diagonal is zero).
    let w = params.w_rec.as_slice().expect("contiguous w_rec");
    for i in 0..n {
        let row = &w[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for j in 0..n {
            acc += row[j] * prev[j];
        }
        affine_out[i] = acc + params.w_in[i] * s + params.b_rec[i] + params.b_in[i];
    }
    match cfg.tau_placement {
        TauPlacement::Inside => {
            for i in 0..n {
                let tau = params.tau[i];
                let arg = (1.0 - 1.0 / tau) * prev[i] + affine_out[i] / tau;
                phi_arg_out[i] = arg;
                r_out[i] = cfg.phi(arg);
            }
        }
        TauPlacement::Outside => {
            for i in 0..n {
                let tau = params.tau[i];
                let arg = affine_out[i] / tau;
                phi_arg_out[i] = arg;
                r_out[i] = (1.0 - 1.0 / tau) * prev[i] + cfg.phi(arg);
            }
        }
    }
}

fn first_nonfinite(r: &[f64]) -> Option<usize> {
    r.iter().position(|v| !v.is_finite())
}

/// Advance the network by one time step.
pub fn step(
    params: &NetworkParams,
    cfg: &NetConfig,
    state: &NetState,
    input_bit: u8,
) -> Result<NetState> {
    if state.r.len() != cfg.n {
        return Err(Error::DimMismatch {
            context: "state",
            expected: cfg.n,
            got: state.r.len(),
        });
    }
    params.validate(cfg)?;
    let n = cfg.n;
    let mut affine = vec![0.0; n];
    let mut phi_arg = vec![0.0; n];
    let mut r = vec![0.0; n];
    step_core(
        params,
        cfg,
        state.r.as_slice().expect("contiguous state"),
        input_bit,
        &mut affine,
        &mut phi_arg,
        &mut r,
    );
    if let Some(i) = first_nonfinite(&r) {
        return Err(Error::NonFinite { neuron: i });
    }
    Ok(NetState { r: Array1::from(r) })
}

/// Run the network over a bit sequence, returning the state after every step.
pub fn rollout(
    params: &NetworkParams,
    cfg: &NetConfig,
    initial: &NetState,
    inputs: &[u8],
) -> Result<Vec<NetState>> {
    if inputs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if initial.r.len() != cfg.n {
        return Err(Error::DimMismatch {
            context: "state",
            expected: cfg.n,
            got: initial.r.len(),
        });
    }
    params.validate(cfg)?;
    let n = cfg.n;
    let mut states = Vec::with_capacity(inputs.len());
    let mut prev: Vec<f64> = initial.r.to_vec();
    let mut affine = vec![0.0; n];
    let mut phi_arg = vec![0.0; n];
    let mut r = vec![0.0; n];
    for (t, &s) in inputs.iter().enumerate() {
        step_core(params, cfg, &prev, s, &mut affine, &mut phi_arg, &mut r);
        if let Some(i) = first_nonfinite(&r) {
            return Err(Error::NonFiniteAtStep { neuron: i, step: t });
        }
        prev.copy_from_slice(&r);
        states.push(NetState {
            r: Array1::from(r.clone()),
        });
    }
    Ok(states)
}

/// Logits of one readout head: `w_out * r + b_out`.
pub fn readout(params: &NetworkParams, state: &NetState, head_index: usize) -> Result<Array1<f64>> {
    let head = params.heads.get(head_index).ok_or(Error::InvalidHead {
        index: head_index,
        count: params.heads.len(),
    })?;
    if state.r.len() != head.w_out.ncols() {
        return Err(Error::DimMismatch {
            context: "readout state",
            expected: head.w_out.ncols(),
            got: state.r.len(),
        });
    }
    Ok(head.w_out.dot(&state.r) + &head.b_out)
}

/// Class prediction from two logits; ties go to class 0.
pub fn predict(logits: &Array1<f64>) -> u8 {
    u8::from(logits[1] > logits[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single_neuron_params(tau: f64, w_in: f64) -> (NetworkParams, NetConfig) {
        let mut cfg = NetConfig::new(2);
        cfg.alpha = 0.1;
        let mut rng = rng::stream_rng(0, rng::Stream::Init, 0, 0);
        let mut p = NetworkParams::init(&cfg, &[2], &mut rng);
        p.w_rec.fill(0.0);
        p.w_in.fill(0.0);
        p.w_in[0] = w_in;
        p.b_rec.fill(0.0);
        p.b_in.fill(0.0);
        p.tau.fill(tau);
        (p, cfg)
    }

    #[test]
    fn tau_one_is_memoryless() {
        // tau = 1, unit input weight: the state equals the current input.
        let (p, cfg) = single_neuron_params(1.0, 1.0);
        let mut state = NetState::zeros(2);
        state.r[0] = 123.0; // must not matter
        let next = step(&p, &cfg, &state, 1).unwrap();
        assert_abs_diff_eq!(next.r[0], 1.0, epsilon = 0.0);

        let mut other = NetState::zeros(2);
        other.r[0] = -7.0;
        let next2 = step(&p, &cfg, &other, 1).unwrap();
        assert_eq!(next.r[0], next2.r[0]);
    }

    #[test]
    fn tau_two_halves_the_carryover() {
        let (p, cfg) = single_neuron_params(2.0, 0.0);
        let mut state = NetState::zeros(2);
        state.r[0] = 1.0;
        let next = step(&p, &cfg, &state, 0).unwrap();
        assert_abs_diff_eq!(next.r[0], 0.5, epsilon = 0.0);
    }

    #[test]
    fn leaky_branch_scales_negatives() {
        // Pre-activation -2 with alpha = 0.1 gives -0.2.
        let (mut p, cfg) = single_neuron_params(1.0, -2.0);
        p.b_rec.fill(0.0);
        let state = NetState::zeros(2);
        let next = step(&p, &cfg, &state, 1).unwrap();
        assert_abs_diff_eq!(next.r[0], -0.2, epsilon = 1e-15);
    }

    #[test]
    fn rollout_of_zero_network_stays_zero() {
        let (p, cfg) = single_neuron_params(1.0, 0.0);
        let states = rollout(&p, &cfg, &NetState::zeros(2), &[1, 0, 1, 1]).unwrap();
        assert_eq!(states.len(), 4);
        for s in states {
            assert!(s.r.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rollout_single_step_matches_step() {
        let cfg = NetConfig::new(5);
        let mut rng = rng::stream_rng(11, rng::Stream::Init, 0, 0);
        let p = NetworkParams::init(&cfg, &[2], &mut rng);
        let init = NetState::zeros(5);
        let a = step(&p, &cfg, &init, 1).unwrap();
        let b = rollout(&p, &cfg, &init, &[1]).unwrap();
        assert_eq!(a, b[0]);
    }

    #[test]
    fn huge_tau_freezes_activity() {
        let (p, cfg) = single_neuron_params(1e6, 0.0);
        let mut init = NetState::zeros(2);
        init.r[0] = 1.0;
        let states = rollout(&p, &cfg, &init, &[0; 10]).unwrap();
        let mut prev = 1.0;
        for s in &states {
            assert!((s.r[0] - prev).abs() < 1e-5);
            prev = s.r[0];
        }
        assert!((states[9].r[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn tau_two_impulse_decays_geometrically() {
        // Linear regime: r(t) = 0.5^t * r(0) after an impulse.
        let (p, cfg) = single_neuron_params(2.0, 1.0);
        let mut inputs = vec![0u8; 8];
        inputs[0] = 1;
        let states = rollout(&p, &cfg, &NetState::zeros(2), &inputs).unwrap();
        let r0 = states[0].r[0];
        assert_abs_diff_eq!(r0, 0.5, epsilon = 1e-15);
        for t in 1..8 {
            assert_abs_diff_eq!(states[t].r[0], r0 * 0.5f64.powi(t as i32), epsilon = 1e-12);
        }
    }

    #[test]
    fn readout_matches_dot_product_and_breaks_ties_to_zero() {
        let cfg = NetConfig::new(4);
        let mut rng = rng::stream_rng(5, rng::Stream::Init, 0, 0);
        let p = NetworkParams::init(&cfg, &[2], &mut rng);
        let mut state = NetState::zeros(4);
        for i in 0..4 {
            state.r[i] = i as f64 * 0.25 - 0.3;
        }
        let logits = readout(&p, &state, 0).unwrap();
        // Independent recomputation.
        for c in 0..2 {
            let mut acc = p.heads[0].b_out[c];
            for j in 0..4 {
                acc += p.heads[0].w_out[(c, j)] * state.r[j];
            }
            assert_abs_diff_eq!(logits[c], acc, epsilon = 1e-15);
        }

        let zero_logits = Array1::zeros(2);
        assert_eq!(predict(&zero_logits), 0);

        let mut basis = NetworkParams::init(&cfg, &[2], &mut rng);
        basis.heads[0].w_out.fill(0.0);
        basis.heads[0].w_out[(0, 0)] = 1.0;
        basis.heads[0].b_out.fill(0.0);
        let mut e1 = NetState::zeros(4);
        e1.r[0] = 1.0;
        let l = readout(&basis, &e1, 0).unwrap();
        assert_eq!((l[0], l[1]), (1.0, 0.0));
    }

    #[test]
    fn invalid_head_index_is_an_error() {
        let cfg = NetConfig::new(3);
        let mut rng = rng::stream_rng(5, rng::Stream::Init, 0, 0);
        let p = NetworkParams::init(&cfg, &[2], &mut rng);
        assert!(matches!(
            readout(&p, &NetState::zeros(3), 1),
            Err(Error::InvalidHead { index: 1, count: 1 })
        ));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let cfg = NetConfig::new(3);
        let mut rng = rng::stream_rng(5, rng::Stream::Init, 0, 0);
        let p = NetworkParams::init(&cfg, &[2], &mut rng);
        assert!(matches!(
            step(&p, &cfg, &NetState::zeros(4), 0),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn placements_agree_on_nonnegative_preactivations() {
        // With nonnegative drive and states, inside and outside placements
        // reduce to the same affine map.
        let mut cfg = NetConfig::new(3);
        let mut rng = rng::stream_rng(9, rng::Stream::Init, 0, 0);
        let mut p = NetworkParams::init(&cfg, &[2], &mut rng);
        p.w_rec.mapv_inplace(f64::abs);
        p.zero_rec_diagonal();
        p.w_in.mapv_inplace(f64::abs);
        p.tau.fill(2.0);
        let mut init = NetState::zeros(3);
        init.r.fill(0.4);

        cfg.tau_placement = TauPlacement::Inside;
        let a = rollout(&p, &cfg, &init, &[1, 1, 0, 1]).unwrap();
        cfg.tau_placement = TauPlacement::Outside;
        let b = rollout(&p, &cfg, &init, &[1, 1, 0, 1]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for i in 0..3 {
                assert_abs_diff_eq!(x.r[i], y.r[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tanh_inside_keeps_state_in_unit_interval() {
        let mut cfg = NetConfig::new(6);
        cfg.nonlinearity = Nonlinearity::Tanh;
        let mut rng = rng::stream_rng(2, rng::Stream::Init, 0, 0);
        let mut p = NetworkParams::init(&cfg, &[2], &mut rng);
        p.w_rec.mapv_inplace(|v| v * 10.0);
        p.zero_rec_diagonal();
        let inputs: Vec<u8> = (0..50).map(|i| (i % 2) as u8).collect();
        let states = rollout(&p, &cfg, &NetState::zeros(6), &inputs).unwrap();
        for s in &states {
            assert!(s.r.iter().all(|&v| v > -1.0 && v < 1.0));
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let cfg = NetConfig::new(8);
        let mut rng1 = rng::stream_rng(42, rng::Stream::Init, 0, 0);
        let p1 = NetworkParams::init(&cfg, &[2, 3], &mut rng1);
        let mut rng2 = rng::stream_rng(42, rng::Stream::Init, 0, 0);
        let p2 = NetworkParams::init(&cfg, &[2, 3], &mut rng2);
        let inputs: Vec<u8> = (0..40).map(|i| ((i * 7) % 3 == 0) as u8).collect();
        let a = rollout(&p1, &cfg, &NetState::zeros(8), &inputs).unwrap();
        let b = rollout(&p2, &cfg, &NetState::zeros(8), &inputs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for i in 0..8 {
                assert_eq!(x.r[i].to_bits(), y.r[i].to_bits());
            }
        }
    }

    #[test]
    fn init_respects_invariants() {
        let cfg = NetConfig::new(32);
        let mut rng = rng::stream_rng(1, rng::Stream::Init, 0, 0);
        let p = NetworkParams::init(&cfg, &[2, 3, 4], &mut rng);
        p.validate(&cfg).unwrap();
        assert!(p.tau.iter().all(|&t| t >= 1.0));
    }
}
