//! Imitation learning of Boltzmann (softmax) randomized stationary policies
//! for finite Markov decision processes.
//!
//! The crate covers the whole loop:
//!
//! * [`mdp`]: finite MDPs, policy-induced chains, exact stationary
//!   distributions, average reward and a discounted value-iteration solver.
//! * [`policy`]: feature maps, the softmax policy family, demonstration
//!   sampling, log-losses and KL divergences.
//! * [`learner`]: ℓ1-constrained maximum likelihood by projected gradient
//!   ascent, and the train/validate budget selection loop.
//! * [`perturbation`]: fundamental matrix, group inverse, ergodic
//!   coefficients, condition numbers and the regret certificate.
//! * [`gridworld`]: the 13×13 navigation benchmark.
//! * [`harness`]: configs, file formats and seeded experiment sweeps.
//!
//! Everything except [`harness`] is pure; values are immutable once built
//! and can be shared freely across threads.

pub mod error;
pub mod exec;
mod float_serde;
pub mod gridworld;
pub mod harness;
pub mod learner;
pub mod mdp;
pub mod perturbation;
pub mod policy;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
pub use gridworld::{Action, GridSpec};
pub use learner::{TrainConfig, TrainedPolicy};
pub use mdp::{DeterministicPolicy, Mdp, StationaryDistribution, StochasticMatrix};
pub use perturbation::{ChainAnalysis, Kappas, RegretCertificate};
pub use policy::{ActionPolicy, FeatureMap, Rsp, SampleSet};
