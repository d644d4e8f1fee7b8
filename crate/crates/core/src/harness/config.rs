//! Experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::TrainConfig;

/// The policies a sweep can evaluate, in output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// The expert that generated the samples.
    Target,
    /// Budget-selected ℓ1-constrained fit.
    L1,
    /// The same optimizer without a constraint, on all samples.
    Unregularized,
    /// `argmax_a R(x, a)`.
    Greedy,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Target,
        PolicyKind::L1,
        PolicyKind::Unregularized,
        PolicyKind::Greedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Target => "target",
            PolicyKind::L1 => "l1",
            PolicyKind::Unregularized => "unregularized",
            PolicyKind::Greedy => "greedy",
        }
    }
}

/// Synthetic sparse expert: `r` non-zero components of magnitude at most `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sparsity {
    pub r: usize,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Deterministic value-iteration expert; rewards only.
    #[default]
    ValueIteration,
    /// Random sparse Boltzmann expert; adds regret certificates.
    SparseSoftmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Grid spec JSON, relative to the config file; the built-in board when absent.
    pub grid_spec: Option<PathBuf>,
    pub sample_sizes: Vec<usize>,
    pub runs: usize,
    /// Optimizer and split settings. `train.seed` is unused: every trial
    /// derives its own split seed.
    pub train: TrainConfig,
    pub policies: Vec<PolicyKind>,
    pub master_seed: u64,
    /// Row-level CSV; the summary and timing files are written next to it.
    pub out_path: PathBuf,
    pub mode: Mode,
    /// Required in sparse_softmax mode.
    pub sparsity: Option<Sparsity>,
    /// Discount of the value-iteration expert (value_iteration mode).
    pub discount: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid_spec: None,
            sample_sizes: vec![50, 100, 200, 400, 800, 1600, 3200, 6400],
            runs: 100,
            train: TrainConfig::default(),
            policies: PolicyKind::ALL.to_vec(),
            master_seed: 0,
            out_path: PathBuf::from("results/sweep.csv"),
            mode: Mode::ValueIteration,
            sparsity: None,
            discount: 0.95,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.sample_sizes.is_empty() {
            return bad("sample_sizes is empty".into());
        }
        if self.sample_sizes.iter().any(|&m| m < 2) {
            return bad("every sample size must be at least 2".into());
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sample_sizes must be strictly increasing".into());
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.policies.is_empty() {
            return bad("no policies requested".into());
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad(format!("discount must lie in (0, 1), got {}", self.discount));
        }
        match (self.mode, self.sparsity) {
            (Mode::SparseSoftmax, None) => return bad("sparse_softmax mode needs sparsity {r, k}".into()),
            (Mode::SparseSoftmax, Some(s)) if s.r == 0 || !(s.k > 0.0) || !s.k.is_finite() => {
                return bad("sparsity needs r >= 1 and finite k > 0".into())
            }
            _ => {}
        }
        self.train.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// Requested policies, deduplicated, in [`PolicyKind::ALL`] order.
    pub fn policy_order(&self) -> Vec<PolicyKind> {
        let mut p = self.policies.clone();
        p.sort();
        p.dedup();
        p
    }
}
