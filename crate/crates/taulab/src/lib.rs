//! Leaky recurrent networks with trainable per-neuron time constants.
//!
//! The crate trains small leaky RNNs on binary memory tasks (N-parity and
//! N-delayed-match-to-sample) under several curricula, then measures where
//! the memory lives: in the single-neuron time constants or in timescales
//! mediated by the learned recurrent connectivity.
//!
//! Module map:
//!
//! - [`net`] — network parameters and forward dynamics
//! - [`tasks`] — input/target generation for both task families
//! - [`trainer`] — backpropagation through time, SGD with Nesterov momentum
//! - [`curricula`] — the five training regimes and the curriculum loop
//! - [`timescales`] — autocorrelation estimation and exponential fits
//! - [`interventions`] — ablation, perturbation, and re-training probes
//! - [`popdyn`] — activity dimensionality and recurrent weight balance
//! - [`checkpoint`] — versioned binary persistence

pub mod checkpoint;
pub mod curricula;
pub mod error;
pub mod fit;
pub mod interventions;
pub mod net;
pub mod popdyn;
pub mod rng;
pub mod tasks;
pub mod timescales;
pub mod trainer;

pub use error::{Error, Result};
pub use net::{NetConfig, NetState, NetworkParams, Nonlinearity, ReadoutHead, TauPlacement};
pub use tasks::{Batch, TaskKind, TaskSpec};
pub use trainer::{GradientSet, OptState, TrainConfig};
