//! Feature maps, softmax (Boltzmann) policies, demonstrations, and the
//! log-loss / KL functionals used to compare policies.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{induced_chain, stationary_distribution, DeterministicPolicy, Mdp, StationaryDistribution};

/// Anything that assigns an action distribution to each state.
pub trait ActionPolicy {
    /// Fail with [`Error::Config`] unless the policy is defined on an MDP
    /// with these dimensions.
    fn check_dims(&self, num_states: usize, num_actions: usize) -> Result<()>;

    /// Write `μ(· | x)` into `out` (length = number of actions).
    fn fill_action_probs(&self, x: usize, out: &mut [f64]);
}

impl<T: ActionPolicy + ?Sized> ActionPolicy for &T {
    fn check_dims(&self, num_states: usize, num_actions: usize) -> Result<()> {
        (**self).check_dims(num_states, num_actions)
    }

    fn fill_action_probs(&self, x: usize, out: &mut [f64]) {
        (**self).fill_action_probs(x, out)
    }
}

impl ActionPolicy for DeterministicPolicy {
    fn check_dims(&self, num_states: usize, num_actions: usize) -> Result<()> {
        if self.0.len() != num_states {
            return Err(Error::Config(format!(
                "policy covers {} states, MDP has {num_states}",
                self.0.len()
            )));
        }
        if let Some(&a) = self.0.iter().find(|&&a| a >= num_actions) {
            return Err(Error::Config(format!("action {a} out of range (H = {num_actions})")));
        }
        Ok(())
    }

    fn fill_action_probs(&self, x: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[self.0[x]] = 1.0;
    }
}

/// `φ(x, a) ∈ [0, 1]^n` for every state-action pair.
///
/// Stored flat as `values[(x * H + a) * n + i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureMapDoc", into = "FeatureMapDoc")]
pub struct FeatureMap {
    num_states: usize,
    num_actions: usize,
    num_features: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FeatureMapDoc {
    num_states: usize,
    num_actions: usize,
    num_features: usize,
    values: Vec<f64>,
}

impl TryFrom<FeatureMapDoc> for FeatureMap {
    type Error = Error;

    fn try_from(d: FeatureMapDoc) -> Result<Self> {
        FeatureMap::new(d.num_states, d.num_actions, d.num_features, d.values)
    }
}

impl From<FeatureMap> for FeatureMapDoc {
    fn from(f: FeatureMap) -> Self {
        FeatureMapDoc {
            num_states: f.num_states,
            num_actions: f.num_actions,
            num_features: f.num_features,
            values: f.values,
        }
    }
}

impl FeatureMap {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        num_features: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || num_features == 0 {
            return Err(Error::Config("feature map dimensions must be positive".into()));
        }
        if values.len() != num_states * num_actions * num_features {
            return Err(Error::Config(format!(
                "feature map has {} values, expected {}",
                values.len(),
                num_states * num_actions * num_features
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Config(format!("feature value {v} outside [0, 1]")));
        }
        Ok(FeatureMap {
            num_states,
            num_actions,
            num_features,
            values,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn get(&self, x: usize, a: usize) -> &[f64] {
        let n = self.num_features;
        let start = (x * self.num_actions + a) * n;
        &self.values[start..start + n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A Boltzmann randomized stationary policy
/// `μ_θ(a | x) ∝ exp(θ'φ(x, a))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rsp {
    theta: Vec<f64>,
    features: Arc<FeatureMap>,
}

impl Rsp {
    pub fn new(theta: Vec<f64>, features: Arc<FeatureMap>) -> Result<Self> {
        if theta.len() != features.num_features() {
            return Err(Error::Config(format!(
                "theta has {} components, feature map has {}",
                theta.len(),
                features.num_features()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Argument("theta must be finite".into()));
        }
        Ok(Rsp { theta, features })
    }

    /// The uniform policy `θ = 0`.
    pub fn zeros(features: Arc<FeatureMap>) -> Self {
        Rsp {
            theta: vec![0.0; features.num_features()],
            features,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn features(&self) -> &Arc<FeatureMap> {
        &self.features
    }

    pub fn l1_norm(&self) -> f64 {
        self.theta.iter().map(|t| t.abs()).sum()
    }

    /// `θ'φ(x, a)` for every action.
    pub fn logits(&self, x: usize, out: &mut [f64]) {
        for (a, l) in out.iter_mut().enumerate() {
            *l = dot(&self.theta, self.features.get(x, a));
        }
    }

    /// `log μ_θ(· | x)`, by max-shifted log-sum-exp.
    pub fn fill_log_probs(&self, x: usize, out: &mut [f64]) {
        self.logits(x, out);
        log_softmax_in_place(out);
    }

    /// `μ_θ(· | x)`.
    pub fn action_distribution(&self, x: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.features.num_actions()];
        self.fill_action_probs(x, &mut out);
        out
    }
}

impl ActionPolicy for Rsp {
    fn check_dims(&self, num_states: usize, num_actions: usize) -> Result<()> {
        if self.features.num_states() != num_states || self.features.num_actions() != num_actions {
            return Err(Error::Config(format!(
                "policy features are {}x{}, MDP is {num_states}x{num_actions}",
                self.features.num_states(),
                self.features.num_actions()
            )));
        }
        Ok(())
    }

    fn fill_action_probs(&self, x: usize, out: &mut [f64]) {
        self.logits(x, out);
        softmax_in_place(out);
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in v.iter_mut() {
        *l = (*l - max).exp();
        total += *l;
    }
    v.iter_mut().for_each(|p| *p /= total);
}

pub(crate) fn log_softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + v.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    v.iter_mut().for_each(|l| *l -= lse);
}

/// State-action demonstrations and the seed that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SampleSet {
    pub pairs: Vec<(usize, usize)>,
    pub seed: u64,
}

impl SampleSet {
    pub fn new(pairs: Vec<(usize, usize)>, seed: u64) -> Self {
        SampleSet { pairs, seed }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Fail unless every index fits an MDP of the given size.
    pub fn check_bounds(&self, num_states: usize, num_actions: usize) -> Result<()> {
        match self.pairs.iter().find(|&&(x, a)| x >= num_states || a >= num_actions) {
            Some(&(x, a)) => Err(Error::Config(format!(
                "sample ({x}, {a}) outside {num_states} states x {num_actions} actions"
            ))),
            None => Ok(()),
        }
    }
}

fn draw_index(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the last cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Draw `m` pairs with states i.i.d. from `states` and actions from `expert`.
pub fn sample_from_distribution(
    states: &StationaryDistribution,
    expert: &impl ActionPolicy,
    num_actions: usize,
    m: usize,
    seed: u64,
) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mu = vec![0.0; num_actions];
    let pairs = (0..m)
        .map(|_| {
            let x = draw_index(&mut rng, states.probs());
            expert.fill_action_probs(x, &mut mu);
            (x, draw_index(&mut rng, &mu))
        })
        .collect();
    SampleSet { pairs, seed }
}

/// Demonstrations from the expert's stationary state-action law.
pub fn sample_demonstrations(
    mdp: &Mdp,
    expert: &impl ActionPolicy,
    m: usize,
    seed: u64,
) -> Result<SampleSet> {
    let chain = induced_chain(mdp, expert)?;
    let pi = stationary_distribution(&chain)?;
    Ok(sample_from_distribution(&pi, expert, mdp.num_actions(), m, seed))
}

/// Expected negative log-likelihood of `rsp` under the state law `pi` and
/// the reference policy's actions.
pub fn log_loss_under(
    rsp: &Rsp,
    reference: &impl ActionPolicy,
    pi: &StationaryDistribution,
) -> f64 {
    let h = rsp.features().num_actions();
    let mut mu = vec![0.0; h];
    let mut logp = vec![0.0; h];
    let mut total = 0.0;
    for (x, &px) in pi.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        reference.fill_action_probs(x, &mut mu);
        rsp.fill_log_probs(x, &mut logp);
        for (w, lp) in mu.iter().zip(&logp) {
            if *w > 0.0 {
                total -= px * w * lp;
            }
        }
    }
    total
}

/// Exact log-loss of `rsp` on the stationary state-action law of `reference`.
pub fn log_loss(rsp: &Rsp, reference: &Rsp, mdp: &Mdp) -> Result<f64> {
    rsp.check_dims(mdp.num_states(), mdp.num_actions())?;
    let pi = stationary_distribution(&induced_chain(mdp, reference)?)?;
    Ok(log_loss_under(rsp, reference, &pi))
}

/// `(1/m) Σ_i −log μ_θ(a_i | x_i)`.
pub fn sample_log_loss(rsp: &Rsp, samples: &SampleSet) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("sample log-loss of an empty sample set".into()));
    }
    let fm = rsp.features();
    samples.check_bounds(fm.num_states(), fm.num_actions())?;
    let mut logp = vec![0.0; fm.num_actions()];
    let total: f64 = samples
        .pairs
        .iter()
        .map(|&(x, a)| {
            rsp.fill_log_probs(x, &mut logp);
            -logp[a]
        })
        .sum();
    Ok(total / samples.len() as f64)
}

/// `D(p ‖ q) = Σ_a p(a) log(p(a)/q(a))` in nats; `+∞` when `p` is not
/// absolutely continuous with respect to `q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions of different length");
    let mut d = 0.0;
    for (&pa, &qa) in p.iter().zip(q) {
        if pa > 0.0 {
            if qa <= 0.0 {
                return f64::INFINITY;
            }
            d += pa * (pa / qa).ln();
        }
    }
    d
}

/// KL between two softmax policies at one state, from log-probabilities so
/// that tiny probabilities do not underflow.
fn kl_between_at(base: &Rsp, other: &Rsp, x: usize, lp: &mut [f64], lq: &mut [f64]) -> f64 {
    base.fill_log_probs(x, lp);
    other.fill_log_probs(x, lq);
    lp.iter()
        .zip(lq.iter())
        .map(|(a, b)| {
            let p = a.exp();
            if p > 0.0 {
                p * (a - b)
            } else {
                0.0
            }
        })
        .sum()
}

/// `Σ_x π(x) D(μ_base(· | x) ‖ μ_other(· | x))` for a given state law.
pub fn averaged_kl_under(base: &Rsp, other: &Rsp, pi: &StationaryDistribution) -> f64 {
    let h = base.features().num_actions();
    let (mut lp, mut lq) = (vec![0.0; h], vec![0.0; h]);
    pi.probs()
        .iter()
        .enumerate()
        .filter(|(_, &px)| px > 0.0)
        .map(|(x, &px)| px * kl_between_at(base, other, x, &mut lp, &mut lq))
        .sum()
}

/// Stationary-weighted KL with weights from `base`'s own chain.
pub fn averaged_kl(base: &Rsp, other: &Rsp, mdp: &Mdp) -> Result<f64> {
    other.check_dims(mdp.num_states(), mdp.num_actions())?;
    let pi = stationary_distribution(&induced_chain(mdp, base)?)?;
    Ok(averaged_kl_under(base, other, &pi))
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum()
}
