//! Finite MDPs and the Markov chains that policies induce on them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::ActionPolicy;

const ROW_SUM_TOL: f64 = 1e-12;
/// Smallest admissible ratio between the smallest and largest pivot of the
/// balance system before it is declared rank deficient.
const PIVOT_RATIO_TOL: f64 = 1e-13;
const BALANCE_RESIDUAL_TOL: f64 = 1e-8;
const VALUE_ITERATION_CAP: usize = 200_000;

/// A finite MDP with dense transition kernel and one-step reward.
///
/// The kernel is stored flat, `transition[(x * H + a) * |X| + y] = P(y | x, a)`,
/// and the reward as `reward[x * H + a] = R(x, a)`; this is also the JSON layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDoc", into = "MdpDoc")]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MdpDoc {
    num_states: usize,
    num_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
}

impl TryFrom<MdpDoc> for Mdp {
    type Error = Error;

    fn try_from(doc: MdpDoc) -> Result<Self> {
        Mdp::new(doc.num_states, doc.num_actions, doc.transition, doc.reward)
    }
}

impl From<Mdp> for MdpDoc {
    fn from(m: Mdp) -> Self {
        MdpDoc {
            num_states: m.num_states,
            num_actions: m.num_actions,
            transition: m.transition,
            reward: m.reward,
        }
    }
}

impl Mdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Config("an MDP needs at least one state and one action".into()));
        }
        let pairs = num_states * num_actions;
        if transition.len() != pairs * num_states {
            return Err(Error::Config(format!(
                "transition has {} entries, expected {}",
                transition.len(),
                pairs * num_states
            )));
        }
        if reward.len() != pairs {
            return Err(Error::Config(format!(
                "reward has {} entries, expected {pairs}",
                reward.len()
            )));
        }
        for (k, row) in transition.chunks(num_states).enumerate() {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::Config(format!(
                    "negative or non-finite transition probability at (x={}, a={})",
                    k / num_actions,
                    k % num_actions
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Config(format!(
                    "transition row (x={}, a={}) sums to {s}",
                    k / num_actions,
                    k % num_actions
                )));
            }
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("reward entries must be finite".into()));
        }
        Ok(Mdp {
            num_states,
            num_actions,
            transition,
            reward,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `P(· | x, a)` as a slice over successor states.
    pub fn successors(&self, x: usize, a: usize) -> &[f64] {
        let n = self.num_states;
        let start = (x * self.num_actions + a) * n;
        &self.transition[start..start + n]
    }

    pub fn reward(&self, x: usize, a: usize) -> f64 {
        self.reward[x * self.num_actions + a]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    /// `max |R(x, a)|`.
    pub fn r_max(&self) -> f64 {
        self.reward.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Same dynamics, different reward table.
    pub fn with_reward(&self, reward: Vec<f64>) -> Result<Mdp> {
        Mdp::new(self.num_states, self.num_actions, self.transition.clone(), reward)
    }
}

/// A square row-stochastic matrix over states.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Argument(format!(
                "stochastic matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for (i, row) in m.row_iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::Argument(format!("row {i} has a negative entry")));
            }
            let s = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Argument(format!("row {i} sums to {s}")));
            }
        }
        Ok(StochasticMatrix(m))
    }

    /// Build from row-major entries.
    pub fn from_rows(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Argument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    /// The rank-one chain `e π'` whose every row is `pi`.
    pub fn rank_one(pi: &[f64]) -> Result<Self> {
        let n = pi.len();
        Self::new(DMatrix::from_fn(n, n, |_, j| pi[j]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0[(x, y)]
    }
}

/// A probability vector over states, invariant under the chain it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationaryDistribution(Vec<f64>);

impl StationaryDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `‖π'P − π'‖₁`.
    pub fn balance_residual(&self, chain: &StochasticMatrix) -> f64 {
        let p = chain.matrix();
        (0..p.ncols())
            .map(|y| {
                let flow: f64 = (0..p.nrows()).map(|x| self.0[x] * p[(x, y)]).sum();
                (flow - self.0[y]).abs()
            })
            .sum()
    }

    /// Wrap an arbitrary probability vector. Used for limiting distributions
    /// and by tests; nothing checks invariance here.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let s: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|&p| !(p >= 0.0)) || (s - 1.0).abs() > 1e-10 {
            return Err(Error::Argument("not a probability vector".into()));
        }
        Ok(StationaryDistribution(probs))
    }
}

/// A deterministic stationary policy, one action per state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeterministicPolicy(pub Vec<usize>);

impl DeterministicPolicy {
    pub fn actions(&self) -> &[usize] {
        &self.0
    }
}

/// `P_μ(y | x) = Σ_a μ(a | x) P(y | x, a)`.
pub fn induced_chain(mdp: &Mdp, policy: &impl ActionPolicy) -> Result<StochasticMatrix> {
    policy.check_dims(mdp.num_states(), mdp.num_actions())?;
    let n = mdp.num_states();
    let h = mdp.num_actions();
    let mut out = DMatrix::zeros(n, n);
    let mut mu = vec![0.0; h];
    for x in 0..n {
        policy.fill_action_probs(x, &mut mu);
        for (a, &w) in mu.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (y, &p) in mdp.successors(x, a).iter().enumerate() {
                out[(x, y)] += w * p;
            }
        }
    }
    StochasticMatrix::new(out)
}

/// The unique stationary distribution of an ergodic chain, by a dense solve
/// of `(I − P')π = 0` with the last balance equation replaced by `e'π = 1`.
pub fn stationary_distribution(chain: &StochasticMatrix) -> Result<StationaryDistribution> {
    let n = chain.dim();
    let p = chain.matrix();
    let mut sys = DMatrix::<f64>::identity(n, n) - p.transpose();
    for j in 0..n {
        sys[(n - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::zeros(n);
    rhs[n - 1] = 1.0;

    let lu = sys.full_piv_lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if !(hi > 0.0) || lo / hi < PIVOT_RATIO_TOL {
        return Err(Error::NotErgodic(format!(
            "balance system is rank deficient (pivot ratio {:.3e})",
            lo / hi
        )));
    }
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NotErgodic("balance system is singular".into()))?;

    let mut probs: Vec<f64> = sol.iter().copied().collect();
    if probs.iter().any(|&v| v < -1e-10 || !v.is_finite()) {
        return Err(Error::NotErgodic(
            "balance solution has negative mass; chain has no unique stationary law".into(),
        ));
    }
    for v in probs.iter_mut() {
        *v = v.max(0.0);
    }
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|v| *v /= s);
    let pi = StationaryDistribution(probs);
    let residual = pi.balance_residual(chain);
    if residual > BALANCE_RESIDUAL_TOL {
        return Err(Error::NotErgodic(format!("balance residual {residual:.3e}")));
    }
    Ok(pi)
}

/// Long-run occupation law `lim_K (1/K) Σ_{k<K} u'P^k` from the initial law
/// `initial`.
///
/// Unlike [`stationary_distribution`] this is defined for chains with several
/// recurrent classes (e.g. under deterministic policies) and for periodic
/// chains. The lazy chain `(I + P)/2` has the same Cesàro limit and is
/// aperiodic, so its powers converge; they are computed by repeated squaring.
pub fn limiting_distribution(
    chain: &StochasticMatrix,
    initial: &[f64],
) -> Result<StationaryDistribution> {
    let n = chain.dim();
    if initial.len() != n {
        return Err(Error::Argument(format!(
            "initial law has {} entries, chain has {n} states",
            initial.len()
        )));
    }
    let mut q = (chain.matrix() + DMatrix::identity(n, n)) * 0.5;
    let mut converged = false;
    for _ in 0..64 {
        let mut next = &q * &q;
        // keep rounding drift in the row sums from compounding
        for mut row in next.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        let diff = (&next - &q).amax();
        q = next;
        if diff < 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged || (&q * chain.matrix() - &q).amax() > 1e-10 {
        return Err(Error::Convergence {
            iterations: 64,
            residual: (&q * chain.matrix() - &q).amax(),
        });
    }
    let u = nalgebra::DVector::from_column_slice(initial);
    let pi = q.transpose() * u;
    let mut probs: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|v| *v /= s);
    Ok(StationaryDistribution(probs))
}

/// `Σ_x π(x) Σ_a μ(a | x) R(x, a)` for a given state law.
pub fn average_reward_under(
    mdp: &Mdp,
    policy: &impl ActionPolicy,
    pi: &StationaryDistribution,
) -> Result<f64> {
    policy.check_dims(mdp.num_states(), mdp.num_actions())?;
    let mut mu = vec![0.0; mdp.num_actions()];
    let mut total = 0.0;
    for (x, &px) in pi.probs().iter().enumerate() {
        policy.fill_action_probs(x, &mut mu);
        let local: f64 = mu.iter().enumerate().map(|(a, &w)| w * mdp.reward(x, a)).sum();
        total += px * local;
    }
    Ok(total)
}

/// Long-run average reward of an ergodic policy.
pub fn average_reward(mdp: &Mdp, policy: &impl ActionPolicy) -> Result<f64> {
    let chain = induced_chain(mdp, policy)?;
    let pi = stationary_distribution(&chain)?;
    average_reward_under(mdp, policy, &pi)
}

/// Average reward from a uniform start, falling back to the limiting
/// distribution when the chain has more than one recurrent class.
pub fn average_reward_uniform_start(mdp: &Mdp, policy: &impl ActionPolicy) -> Result<f64> {
    let chain = induced_chain(mdp, policy)?;
    let pi = match stationary_distribution(&chain) {
        Ok(pi) => pi,
        Err(Error::NotErgodic(_)) => {
            let n = mdp.num_states();
            limiting_distribution(&chain, &vec![1.0 / n as f64; n])?
        }
        Err(e) => return Err(e),
    };
    average_reward_under(mdp, policy, &pi)
}

/// Output of [`value_iteration`].
#[derive(Debug, Clone)]
pub struct ValueIteration {
    pub policy: DeterministicPolicy,
    pub values: Vec<f64>,
    /// `‖V_{k+1} − V_k‖∞` for every sweep.
    pub residuals: Vec<f64>,
}

/// Index of the largest entry, earliest index on (near) ties.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * max.abs().max(1.0);
    values.iter().position(|&v| v >= max - slack).unwrap_or(0)
}

/// Discounted value iteration; returns the greedy policy of the fixed point.
pub fn value_iteration(mdp: &Mdp, discount: f64, tol: f64) -> Result<ValueIteration> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::Argument(format!("discount must lie in (0, 1), got {discount}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let n = mdp.num_states();
    let h = mdp.num_actions();
    let q_values = |v: &[f64], x: usize| -> Vec<f64> {
        (0..h)
            .map(|a| {
                let cont: f64 = mdp.successors(x, a).iter().zip(v).map(|(p, vy)| p * vy).sum();
                mdp.reward(x, a) + discount * cont
            })
            .collect()
    };

    let mut v = vec![0.0; n];
    let mut residuals = Vec::new();
    loop {
        let next: Vec<f64> = (0..n)
            .map(|x| q_values(&v, x).into_iter().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let res = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        residuals.push(res);
        v = next;
        if res < tol {
            break;
        }
        if residuals.len() >= VALUE_ITERATION_CAP {
            return Err(Error::Convergence {
                iterations: residuals.len(),
                residual: res,
            });
        }
    }
    let actions = (0..n).map(|x| argmax_first(&q_values(&v, x))).collect();
    Ok(ValueIteration {
        policy: DeterministicPolicy(actions),
        values: v,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{FeatureMap, Rsp};
    use crate::synth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn two_state_two_action() -> Mdp {
        // a=0: stay-ish, a=1: switch-ish
        let t = vec![
            0.9, 0.1, // x0 a0
            0.3, 0.7, // x0 a1
            0.2, 0.8, // x1 a0
            0.6, 0.4, // x1 a1
        ];
        Mdp::new(2, 2, t, vec![1.0, 0.0, 3.0, -1.0]).unwrap()
    }

    fn one_feature(mdp: &Mdp) -> Arc<FeatureMap> {
        // φ(x, 0) = 1, φ(x, 1) = 0
        let mut vals = vec![0.0; mdp.num_states() * mdp.num_actions()];
        for x in 0..mdp.num_states() {
            vals[x * 2] = 1.0;
        }
        Arc::new(FeatureMap::new(mdp.num_states(), 2, 1, vals).unwrap())
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(
            Mdp::new(1, 1, vec![0.5], vec![0.0]),
            Err(Error::Config(_))
        ));
        assert!(Mdp::new(2, 1, vec![1.0, 0.0, -0.1, 1.1], vec![0.0, 0.0]).is_err());
        assert!(Mdp::new(1, 1, vec![1.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn json_layout_round_trips() {
        let m = two_state_two_action();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"num_states\":2"));
        let back: Mdp = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.successors(1, 0), &[0.2, 0.8]);
        let bad = r#"{"num_states":1,"num_actions":1,"transition":[0.4],"reward":[0]}"#;
        assert!(serde_json::from_str::<Mdp>(bad).is_err());
    }

    #[test]
    fn single_action_chain_is_the_kernel() {
        let m = Mdp::new(2, 1, vec![0.3, 0.7, 0.6, 0.4], vec![0.0, 0.0]).unwrap();
        let fm = Arc::new(FeatureMap::new(2, 1, 1, vec![0.5, 0.2]).unwrap());
        let rsp = Rsp::new(vec![4.0], fm).unwrap();
        let p = induced_chain(&m, &rsp).unwrap();
        assert_eq!(p.matrix().as_slice(), DMatrix::from_row_slice(2, 2, &[0.3, 0.7, 0.6, 0.4]).as_slice());
    }

    #[test]
    fn zero_theta_averages_kernels() {
        let m = two_state_two_action();
        let rsp = Rsp::zeros(one_feature(&m));
        let p = induced_chain(&m, &rsp).unwrap();
        assert!((p.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((p.get(1, 1) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn hand_expanded_mixture() {
        // θ = 1 on φ(x,0)=1: μ(0|x) = e/(e+1), μ(1|x) = 1/(e+1)
        let m = two_state_two_action();
        let rsp = Rsp::new(vec![1.0], one_feature(&m)).unwrap();
        let p = induced_chain(&m, &rsp).unwrap();
        let e = std::f64::consts::E;
        let w0 = e / (e + 1.0);
        let w1 = 1.0 / (e + 1.0);
        assert!((p.get(0, 0) - (w0 * 0.9 + w1 * 0.3)).abs() < 1e-15);
        assert!((p.get(0, 1) - (w0 * 0.1 + w1 * 0.7)).abs() < 1e-15);
        assert!((p.get(1, 0) - (w0 * 0.2 + w1 * 0.6)).abs() < 1e-15);
        assert!((p.get(1, 1) - (w0 * 0.8 + w1 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let m = two_state_two_action();
        let fm = Arc::new(FeatureMap::new(3, 2, 1, vec![0.0; 6]).unwrap());
        let rsp = Rsp::zeros(fm);
        assert!(matches!(induced_chain(&m, &rsp), Err(Error::Config(_))));
    }

    #[test]
    fn two_state_balance() {
        let p = StochasticMatrix::from_rows(2, &[0.9, 0.1, 0.2, 0.8]).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        assert!((pi.probs()[0] - 2.0 / 3.0).abs() < 1e-14);
        assert!((pi.probs()[1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn doubly_stochastic_is_uniform() {
        let p = StochasticMatrix::from_rows(3, &[0.2, 0.5, 0.3, 0.3, 0.2, 0.5, 0.5, 0.3, 0.2]).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        for v in pi.probs() {
            assert!((v - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_one_chain_returns_its_row() {
        let row = [0.1, 0.2, 0.3, 0.4];
        let p = StochasticMatrix::rank_one(&row).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        for (a, b) in pi.probs().iter().zip(row) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn reducible_chain_is_not_ergodic() {
        let p = StochasticMatrix::from_rows(3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.5]).unwrap();
        assert!(matches!(stationary_distribution(&p), Err(Error::NotErgodic(_))));
        // The uniform-start limit still exists: half of state 2's mass drains to 0.
        let lim = limiting_distribution(&p, &[1.0 / 3.0; 3]).unwrap();
        assert!((lim.probs()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((lim.probs()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_chain_limit_is_the_time_average() {
        let p = StochasticMatrix::from_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        assert!((pi.probs()[0] - 0.5).abs() < 1e-14);
        // Powers oscillate, the occupation average does not.
        let lim = limiting_distribution(&p, &[1.0, 0.0]).unwrap();
        assert!((lim.probs()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_state_reward_is_mean_over_actions() {
        let m = Mdp::new(1, 3, vec![1.0; 3], vec![1.0, 2.0, 6.0]).unwrap();
        let fm = Arc::new(FeatureMap::new(1, 3, 1, vec![0.1, 0.7, 0.3]).unwrap());
        let r = average_reward(&m, &Rsp::zeros(fm)).unwrap();
        assert!((r - 3.0).abs() < 1e-14);
    }

    #[test]
    fn constant_reward_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = synth::random_mdp(&mut rng, 6, 3).with_reward(vec![2.5; 18]).unwrap();
        let fm = Arc::new(synth::random_feature_map(&mut rng, 6, 3, 4));
        let rsp = Rsp::new((0..4).map(|_| rng.gen_range(-3.0..3.0)).collect(), fm).unwrap();
        assert!((average_reward(&m, &rsp).unwrap() - 2.5).abs() < 1e-13);
    }

    #[test]
    fn average_reward_matches_long_simulation() {
        let m = two_state_two_action();
        let rsp = Rsp::new(vec![0.7], one_feature(&m)).unwrap();
        let exact = average_reward(&m, &rsp).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mu = [0.0; 2];
        let (mut x, mut total) = (0usize, 0.0);
        let steps = 1_000_000;
        for _ in 0..steps {
            rsp.fill_action_probs(x, &mut mu);
            let a = usize::from(rng.gen::<f64>() >= mu[0]);
            total += m.reward(x, a);
            x = usize::from(rng.gen::<f64>() >= m.successors(x, a)[0]);
        }
        assert!((total / steps as f64 - exact).abs() < 1e-2);
    }

    #[test]
    fn value_iteration_single_state_is_myopic() {
        let m = Mdp::new(1, 3, vec![1.0; 3], vec![0.5, 2.0, -1.0]).unwrap();
        let vi = value_iteration(&m, 0.9, 1e-10).unwrap();
        assert_eq!(vi.policy.actions(), &[1]);
    }

    #[test]
    fn value_iteration_takes_the_dominant_move() {
        // x0: a0 self-loop reward 0, a1 -> x1. x1 absorbing with reward 1.
        let t = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let m = Mdp::new(2, 2, t, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let vi = value_iteration(&m, 0.95, 1e-10).unwrap();
        assert_eq!(vi.policy.actions()[0], 1);
    }

    #[test]
    fn value_iteration_residuals_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = synth::random_mdp(&mut rng, 12, 4);
        let vi = value_iteration(&m, 0.8, 1e-12).unwrap();
        for w in vi.residuals.windows(2) {
            assert!(w[1] <= 0.8 * w[0] + 1e-14, "{} > 0.8 * {}", w[1], w[0]);
        }
    }

    #[test]
    fn value_iteration_rejects_bad_arguments() {
        let m = two_state_two_action();
        assert!(value_iteration(&m, 1.0, 1e-6).is_err());
        assert!(value_iteration(&m, 0.5, 0.0).is_err());
    }
}
