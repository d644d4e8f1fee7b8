//! Random problem instances: dense ergodic MDPs, feature maps and sparse
//! parameter vectors. Used by property tests and by the synthetic-expert
//! experiment mode.

use rand::seq::index::sample;
use rand::Rng;

use crate::mdp::Mdp;
use crate::policy::FeatureMap;

/// An MDP whose kernel rows are strictly positive, so every policy induces
/// an irreducible aperiodic chain. Rewards uniform in `[-2, 2)`.
pub fn random_mdp(rng: &mut impl Rng, num_states: usize, num_actions: usize) -> Mdp {
    let mut transition = Vec::with_capacity(num_states * num_actions * num_states);
    for _ in 0..num_states * num_actions {
        let row: Vec<f64> = (0..num_states).map(|_| rng.gen::<f64>() + 0.01).collect();
        let s: f64 = row.iter().sum();
        transition.extend(row.iter().map(|v| v / s));
    }
    let reward = (0..num_states * num_actions).map(|_| rng.gen_range(-2.0..2.0)).collect();
    Mdp::new(num_states, num_actions, transition, reward).expect("rows are normalized")
}

/// Features uniform in `[0, 1]`.
pub fn random_feature_map(
    rng: &mut impl Rng,
    num_states: usize,
    num_actions: usize,
    num_features: usize,
) -> FeatureMap {
    let values = (0..num_states * num_actions * num_features).map(|_| rng.gen::<f64>()).collect();
    FeatureMap::new(num_states, num_actions, num_features, values).expect("values in range")
}

/// Dense parameter vector uniform in `(-bound, bound)`.
pub fn random_theta(rng: &mut impl Rng, num_features: usize, bound: f64) -> Vec<f64> {
    (0..num_features).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// `nonzero` randomly placed components, each uniform in `(-bound, bound)`.
pub fn random_sparse_theta(
    rng: &mut impl Rng,
    num_features: usize,
    nonzero: usize,
    bound: f64,
) -> Vec<f64> {
    let mut theta = vec![0.0; num_features];
    for i in sample(rng, num_features, nonzero.min(num_features)) {
        theta[i] = rng.gen_range(-bound..bound);
    }
    theta
}
