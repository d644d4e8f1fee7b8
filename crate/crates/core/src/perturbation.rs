//! Sensitivity of stationary distributions and the regret certificate.
//!
//! For an ergodic chain `P` with stationary law `π`, write `A = I − P`. The
//! fundamental matrix is `Z = (A + eπ')⁻¹` and the group inverse of `A` is
//! `A# = Z − eπ'`. Both control how far `π` moves when `P` is perturbed:
//!
//! ```text
//! ‖π₁ − π₂‖₁ ≤ κ ‖π₁'(P₁ − P₂)‖₁
//! ```
//!
//! where `κ`, evaluated on `P₂`, is any of `‖Z‖`, `‖A#‖` (max absolute row
//! sums), `1/(1 − τ(P))` or `τ(Z) = τ(A#)`, and
//! `τ(B) = ½ max_{i,j} Σ_s |b_is − b_js|` is the ergodic coefficient.
//!
//! Combining this with the variation-distance/KL inequality gives the regret
//! bound `|R̄(θ*) − R̄(θ̂)| ≤ √(2 D log 2) R_max (1 + κ)`, which
//! [`regret_certificate`] evaluates exactly alongside the true regret.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{induced_chain, stationary_distribution, Mdp, StationaryDistribution, StochasticMatrix};
use crate::policy::{averaged_kl_under, ActionPolicy, Rsp};

const AXIOM_TOL: f64 = 1e-8;
const ROW_SUM_TOL: f64 = 1e-8;

fn rank_one(pi: &StationaryDistribution) -> DMatrix<f64> {
    let n = pi.len();
    DMatrix::from_fn(n, n, |_, j| pi.probs()[j])
}

/// `Z = (I − P + eπ')⁻¹`.
pub fn fundamental_matrix(chain: &StochasticMatrix, pi: &StationaryDistribution) -> Result<DMatrix<f64>> {
    let n = chain.dim();
    if pi.len() != n {
        return Err(Error::Argument(format!(
            "stationary law has {} entries, chain has {n} states",
            pi.len()
        )));
    }
    let m = DMatrix::<f64>::identity(n, n) - chain.matrix() + rank_one(pi);
    let z = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotErgodic("I − P + eπ' is singular".into()))?;
    let check = (&z * &m - DMatrix::<f64>::identity(n, n)).amax();
    if !check.is_finite() || check > AXIOM_TOL {
        return Err(Error::NotErgodic(format!(
            "I − P + eπ' is numerically singular (inverse residual {check:.3e})"
        )));
    }
    Ok(z)
}

/// Worst absolute residual of the three group-inverse equations
/// `A A# A = A`, `A# A A# = A#`, `A A# = A# A`.
pub fn group_inverse_residual(a: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    let ag = a * g;
    let ga = g * a;
    let r1 = (&ag * a - a).amax();
    let r2 = (&ga * g - g).amax();
    let r3 = (&ag - &ga).amax();
    r1.max(r2).max(r3)
}

/// `A# = Z − eπ'`, verified against the defining equations.
pub fn group_inverse(chain: &StochasticMatrix, pi: &StationaryDistribution) -> Result<DMatrix<f64>> {
    let z = fundamental_matrix(chain, pi)?;
    group_inverse_from(chain, pi, &z)
}

fn group_inverse_from(
    chain: &StochasticMatrix,
    pi: &StationaryDistribution,
    z: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = chain.dim();
    let g = z - rank_one(pi);
    let a = DMatrix::<f64>::identity(n, n) - chain.matrix();
    let residual = group_inverse_residual(&a, &g);
    if !(residual <= AXIOM_TOL) {
        return Err(Error::Conditioning {
            what: "group inverse equations".into(),
            residual,
        });
    }
    Ok(g)
}

/// Max absolute row sum.
pub fn max_row_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `τ(B) = ½ max_{i,j} Σ_s |b_is − b_js|` for a matrix with equal row sums.
pub fn ergodic_coefficient(b: &DMatrix<f64>) -> Result<f64> {
    let n = b.nrows();
    let sums: Vec<f64> = b.row_iter().map(|r| r.sum()).collect();
    if let Some(&first) = sums.first() {
        let scale = sums.iter().fold(1.0f64, |m, s| m.max(s.abs()));
        if sums.iter().any(|s| (s - first).abs() > ROW_SUM_TOL * scale) {
            return Err(Error::Argument("ergodic coefficient needs equal row sums".into()));
        }
    }
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = (0..b.ncols()).map(|s| (b[(i, s)] - b[(j, s)]).abs()).sum();
            best = best.max(d);
        }
    }
    Ok(0.5 * best)
}

/// The four condition numbers of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappas {
    /// `‖Z‖`, max absolute row sum.
    #[serde(with = "crate::float_serde")]
    pub fundamental_norm: f64,
    /// `‖A#‖`, max absolute row sum.
    #[serde(with = "crate::float_serde")]
    pub group_inverse_norm: f64,
    /// `1/(1 − τ(P))`; `+∞` when `τ(P) = 1`.
    #[serde(with = "crate::float_serde")]
    pub ergodic_p: f64,
    /// `τ(Z)`, equal to `τ(A#)`.
    #[serde(with = "crate::float_serde")]
    pub ergodic_z: f64,
}

impl Kappas {
    pub const NAMES: [&'static str; 4] = ["norm_Z", "norm_group_inverse", "inv_one_minus_tau_P", "tau_Z"];

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.fundamental_norm,
            self.group_inverse_norm,
            self.ergodic_p,
            self.ergodic_z,
        ]
    }
}

/// Everything the perturbation bounds need about one chain.
#[derive(Debug, Clone)]
pub struct ChainAnalysis {
    pub pi: StationaryDistribution,
    pub fundamental: DMatrix<f64>,
    pub group_inverse: DMatrix<f64>,
    pub ergodic_coeff_p: f64,
    pub ergodic_coeff_z: f64,
    pub row_sum_norm_z: f64,
    pub row_sum_norm_gi: f64,
}

impl ChainAnalysis {
    pub fn new(chain: &StochasticMatrix) -> Result<Self> {
        let pi = stationary_distribution(chain)?;
        let fundamental = fundamental_matrix(chain, &pi)?;
        let group_inverse = group_inverse_from(chain, &pi, &fundamental)?;
        let ergodic_coeff_p = ergodic_coefficient(chain.matrix())?;
        let ergodic_coeff_z = ergodic_coefficient(&fundamental)?;
        let tau_gi = ergodic_coefficient(&group_inverse)?;
        let gap = (ergodic_coeff_z - tau_gi).abs();
        if gap > AXIOM_TOL * ergodic_coeff_z.max(1.0) {
            return Err(Error::Conditioning {
                what: "τ(Z) and τ(A#) disagree".into(),
                residual: gap,
            });
        }
        Ok(ChainAnalysis {
            row_sum_norm_z: max_row_sum_norm(&fundamental),
            row_sum_norm_gi: max_row_sum_norm(&group_inverse),
            pi,
            fundamental,
            group_inverse,
            ergodic_coeff_p,
            ergodic_coeff_z,
        })
    }

    pub fn kappas(&self) -> Kappas {
        let ergodic_p = if self.ergodic_coeff_p < 1.0 {
            1.0 / (1.0 - self.ergodic_coeff_p)
        } else {
            f64::INFINITY
        };
        Kappas {
            fundamental_norm: self.row_sum_norm_z,
            group_inverse_norm: self.row_sum_norm_gi,
            ergodic_p,
            ergodic_z: self.ergodic_coeff_z,
        }
    }
}

/// The four condition numbers of `chain`.
pub fn condition_numbers(chain: &StochasticMatrix) -> Result<Kappas> {
    Ok(ChainAnalysis::new(chain)?.kappas())
}

/// Both sides of `‖π_A − π_B‖₁ ≤ κ ‖π_A'(P_A − P_B)‖₁` with `κ` taken on `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCheck {
    #[serde(with = "crate::float_serde")]
    pub lhs: f64,
    /// `‖π_A' E‖₁`.
    #[serde(with = "crate::float_serde")]
    pub drift: f64,
    pub kappas: Kappas,
    /// `κ · drift` for each condition number, in [`Kappas::NAMES`] order.
    #[serde(with = "crate::float_serde::array")]
    pub rhs: [f64; 4],
}

fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn row_times(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    (m.transpose() * DVector::from_column_slice(v)).iter().copied().collect()
}

fn kappa_times(k: f64, drift: f64) -> f64 {
    // an infinite κ on a zero drift still bounds nothing
    if drift == 0.0 && k.is_infinite() {
        f64::INFINITY
    } else {
        k * drift
    }
}

pub fn perturbation_bound_check(chain_a: &StochasticMatrix, chain_b: &StochasticMatrix) -> Result<PerturbationCheck> {
    if chain_a.dim() != chain_b.dim() {
        return Err(Error::Argument("chains have different sizes".into()));
    }
    let pi_a = stationary_distribution(chain_a)?;
    let analysis_b = ChainAnalysis::new(chain_b)?;
    let e = chain_a.matrix() - chain_b.matrix();
    let drift: f64 = row_times(pi_a.probs(), &e).iter().map(|v| v.abs()).sum();
    let kappas = analysis_b.kappas();
    let k = kappas.as_array();
    Ok(PerturbationCheck {
        lhs: l1_distance(pi_a.probs(), analysis_b.pi.probs()),
        drift,
        kappas,
        rhs: [
            kappa_times(k[0], drift),
            kappa_times(k[1], drift),
            kappa_times(k[2], drift),
            kappa_times(k[3], drift),
        ],
    })
}

/// Max-abs residual of `π₁' − π₂' = π₂' E Z₁` with `E = P₁ − P₂`.
pub fn fundamental_identity_residual(chain1: &StochasticMatrix, chain2: &StochasticMatrix) -> Result<f64> {
    let pi1 = stationary_distribution(chain1)?;
    let pi2 = stationary_distribution(chain2)?;
    let z1 = fundamental_matrix(chain1, &pi1)?;
    let e = chain1.matrix() - chain2.matrix();
    let rhs = row_times(&row_times(pi2.probs(), &e), &z1);
    Ok(pi1
        .probs()
        .iter()
        .zip(pi2.probs())
        .zip(&rhs)
        .map(|((a, b), r)| (a - b - r).abs())
        .fold(0.0, f64::max))
}

/// Exact regret analysis of an estimated policy against a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCertificate {
    /// `D_{θ*}(μ_{θ*} ‖ μ_{θ̂})`, stationary-weighted KL in nats.
    #[serde(with = "crate::float_serde")]
    pub kl_term: f64,
    pub target_reward: f64,
    pub estimate_reward: f64,
    /// `|R̄(θ*) − R̄(θ̂)|`.
    #[serde(with = "crate::float_serde")]
    pub true_regret: f64,
    /// `|Σ_x π*(x) Σ_a (μ*(a|x) − μ̂(a|x)) R(x,a)|`.
    pub estimation_term: f64,
    /// `|Σ_x (π̂(x) − π*(x)) Σ_a μ̂(a|x) R(x,a)|`.
    pub perturbation_term: f64,
    /// Condition numbers of the estimated chain.
    pub kappas: Kappas,
    /// `√(2·kl·log 2)·R_max·(1 + κ)` per condition number.
    #[serde(with = "crate::float_serde::array")]
    pub bound_per_kappa: [f64; 4],
    /// `√(2·kl)·R_max·(1 + κ)`: the same chain of inequalities with the
    /// natural-log form of the variation-distance inequality.
    #[serde(with = "crate::float_serde::array")]
    pub nat_bound_per_kappa: [f64; 4],
    pub r_max: f64,
    /// Name of the condition number giving the smallest bound.
    pub best_kappa: String,
}

impl RegretCertificate {
    pub fn min_bound(&self) -> f64 {
        self.bound_per_kappa.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn scaled_bound(root: f64, r_max: f64, k: f64) -> f64 {
    if root.is_infinite() || k.is_infinite() {
        return f64::INFINITY;
    }
    root * r_max * (1.0 + k)
}

/// Certificate for replacing `target` by `estimate` on `mdp`, computed by
/// full enumeration of states and actions.
pub fn regret_certificate(mdp: &Mdp, target: &Rsp, estimate: &Rsp) -> Result<RegretCertificate> {
    target.check_dims(mdp.num_states(), mdp.num_actions())?;
    estimate.check_dims(mdp.num_states(), mdp.num_actions())?;
    let h = mdp.num_actions();

    let target_chain = induced_chain(mdp, target)?;
    let pi_t = stationary_distribution(&target_chain)?;
    let est = ChainAnalysis::new(&induced_chain(mdp, estimate)?)?;
    let pi_e = &est.pi;

    let (mut mu_t, mut mu_e) = (vec![0.0; h], vec![0.0; h]);
    let (mut r_t, mut r_e, mut estimation, mut perturbation) = (0.0, 0.0, 0.0, 0.0);
    for x in 0..mdp.num_states() {
        target.fill_action_probs(x, &mut mu_t);
        estimate.fill_action_probs(x, &mut mu_e);
        let local_t: f64 = (0..h).map(|a| mu_t[a] * mdp.reward(x, a)).sum();
        let local_e: f64 = (0..h).map(|a| mu_e[a] * mdp.reward(x, a)).sum();
        r_t += pi_t.probs()[x] * local_t;
        r_e += pi_e.probs()[x] * local_e;
        estimation += pi_t.probs()[x] * (local_t - local_e);
        perturbation += (pi_e.probs()[x] - pi_t.probs()[x]) * local_e;
    }

    let kl = averaged_kl_under(target, estimate, &pi_t).max(0.0);
    let r_max = mdp.r_max();
    let kappas = est.kappas();
    let k = kappas.as_array();
    let log2_root = (2.0 * kl * std::f64::consts::LN_2).sqrt();
    let nat_root = (2.0 * kl).sqrt();
    let bound_per_kappa = k.map(|kv| scaled_bound(log2_root, r_max, kv));
    let nat_bound_per_kappa = k.map(|kv| scaled_bound(nat_root, r_max, kv));
    let best = (0..4)
        .min_by(|&i, &j| bound_per_kappa[i].total_cmp(&bound_per_kappa[j]))
        .unwrap_or(0);

    Ok(RegretCertificate {
        kl_term: kl,
        target_reward: r_t,
        estimate_reward: r_e,
        true_regret: (r_t - r_e).abs(),
        estimation_term: estimation.abs(),
        perturbation_term: perturbation.abs(),
        kappas,
        bound_per_kappa,
        nat_bound_per_kappa,
        r_max,
        best_kappa: Kappas::NAMES[best].to_string(),
    })
}
