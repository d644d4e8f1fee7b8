//! ℓ1-constrained maximum likelihood for softmax policies, and the
//! train/validate loop that picks the ℓ1 budget from a hold-out split.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::policy::{dot, sample_log_loss, softmax_in_place, FeatureMap, Rsp, SampleSet};

/// Euclidean projection of `v` onto `{u : ‖u‖₁ ≤ radius}`.
///
/// Soft-thresholds at the level found from the sorted magnitudes. Points
/// already inside the ball (to a relative 1e-12) are returned unchanged,
/// which makes the projection exactly idempotent.
pub fn project_onto_l1_ball(v: &[f64], radius: f64) -> Result<Vec<f64>> {
    if !(radius >= 0.0) {
        return Err(Error::Argument(format!("l1 radius must be non-negative, got {radius}")));
    }
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= radius * (1.0 + 1e-12) {
        return Ok(v.to_vec());
    }
    if radius == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - radius) / (j + 1) as f64;
        if u > candidate {
            threshold = candidate;
        } else {
            break;
        }
    }
    Ok(v.iter()
        .map(|&x| x.signum() * (x.abs() - threshold).max(0.0))
        .collect())
}

/// Average log-likelihood `(1/m) Σ_i log μ_θ(a_i | x_i)` in sufficient-statistic
/// form: it only depends on the per-state visit weights and the empirical
/// feature mean, so evaluation cost does not grow with `m`.
struct Likelihood<'a> {
    features: &'a FeatureMap,
    /// `(state, c(x)/m)` for states present in the data.
    weights: Vec<(usize, f64)>,
    /// `(1/m) Σ_i φ(x_i, a_i)`.
    feature_mean: Vec<f64>,
}

impl<'a> Likelihood<'a> {
    fn new(samples: &[(usize, usize)], features: &'a FeatureMap) -> Self {
        let h = features.num_actions();
        let n = features.num_features();
        let mut counts = vec![0usize; features.num_states() * h];
        for &(x, a) in samples {
            counts[x * h + a] += 1;
        }
        let m = samples.len() as f64;
        let mut weights = Vec::new();
        let mut feature_mean = vec![0.0; n];
        for x in 0..features.num_states() {
            let row = &counts[x * h..(x + 1) * h];
            let cx: usize = row.iter().sum();
            if cx == 0 {
                continue;
            }
            weights.push((x, cx as f64 / m));
            for (a, &c) in row.iter().enumerate() {
                if c > 0 {
                    let w = c as f64 / m;
                    for (acc, phi) in feature_mean.iter_mut().zip(features.get(x, a)) {
                        *acc += w * phi;
                    }
                }
            }
        }
        Likelihood {
            features,
            weights,
            feature_mean,
        }
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let h = self.features.num_actions();
        let mut logits = vec![0.0; h];
        let mut total = dot(theta, &self.feature_mean);
        for &(x, w) in &self.weights {
            for (a, l) in logits.iter_mut().enumerate() {
                *l = dot(theta, self.features.get(x, a));
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            total -= w * lse;
        }
        total
    }

    fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let h = self.features.num_actions();
        let mut grad = self.feature_mean.clone();
        let mut probs = vec![0.0; h];
        let mut total = dot(theta, &self.feature_mean);
        for &(x, w) in &self.weights {
            for (a, l) in probs.iter_mut().enumerate() {
                *l = dot(theta, self.features.get(x, a));
            }
            let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + probs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            total -= w * lse;
            softmax_in_place(&mut probs);
            for (a, &p) in probs.iter().enumerate() {
                let scale = w * p;
                for (g, phi) in grad.iter_mut().zip(self.features.get(x, a)) {
                    *g -= scale * phi;
                }
            }
        }
        (total, grad)
    }
}

/// Average log-likelihood of `theta` on `samples`.
pub fn average_log_likelihood(samples: &SampleSet, features: &FeatureMap, theta: &[f64]) -> f64 {
    Likelihood::new(&samples.pairs, features).value(theta)
}

/// Analytic gradient `(1/m) Σ_i [φ(x_i, a_i) − Σ_b μ_θ(b | x_i) φ(x_i, b)]`.
pub fn log_likelihood_gradient(samples: &SampleSet, features: &FeatureMap, theta: &[f64]) -> Vec<f64> {
    Likelihood::new(&samples.pairs, features).value_and_gradient(theta).1
}

/// Optimizer report for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Average log-likelihood at the returned point.
    pub objective: f64,
    pub iterations: usize,
    /// `‖Proj(θ + ∇L) − θ‖₂` at the returned point.
    pub projected_gradient_norm: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// A fitted policy with its optimizer report.
#[derive(Debug, Clone)]
pub struct Fit {
    pub rsp: Rsp,
    pub diagnostics: FitDiagnostics,
}

/// Every accepted iterate's objective, for monotonicity checks.
pub type ObjectiveTrace = Vec<f64>;

fn project_or_identity(v: Vec<f64>, budget: f64) -> Vec<f64> {
    if budget.is_infinite() {
        v
    } else {
        project_onto_l1_ball(&v, budget).expect("budget validated")
    }
}

fn gradient_mapping_norm(theta: &[f64], grad: &[f64], budget: f64) -> f64 {
    let stepped: Vec<f64> = theta.iter().zip(grad).map(|(t, g)| t + g).collect();
    let projected = project_or_identity(stepped, budget);
    projected
        .iter()
        .zip(theta)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn fit_traced(
    samples: &[(usize, usize)],
    features: &Arc<FeatureMap>,
    budget: f64,
    tol: f64,
    max_iters: usize,
    trace: Option<&mut ObjectiveTrace>,
) -> Result<Fit> {
    if samples.is_empty() {
        return Err(Error::Argument("cannot fit on an empty sample set".into()));
    }
    if !(budget >= 0.0) {
        return Err(Error::Argument(format!("budget must be non-negative, got {budget}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    SampleSet::new(samples.to_vec(), 0).check_bounds(features.num_states(), features.num_actions())?;

    let lik = Likelihood::new(samples, features);
    let n = features.num_features();
    let mut theta = vec![0.0; n];
    let (mut value, mut grad) = lik.value_and_gradient(&theta);
    let mut trace = trace;
    if let Some(t) = trace.as_deref_mut() {
        t.push(value);
    }
    if budget == 0.0 {
        let pg = gradient_mapping_norm(&theta, &grad, budget);
        return Ok(Fit {
            rsp: Rsp::new(theta, features.clone())?,
            diagnostics: FitDiagnostics {
                objective: value,
                iterations: 0,
                projected_gradient_norm: pg,
                converged: true,
                warning: None,
            },
        });
    }

    let mut step = 1.0;
    let mut iterations = 0;
    let mut pg = gradient_mapping_norm(&theta, &grad, budget);
    while pg >= tol && iterations < max_iters {
        let mut accepted = None;
        while step > 1e-16 {
            let stepped: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g).collect();
            let cand = project_or_identity(stepped, budget);
            let (lin, sq) = cand.iter().zip(&theta).zip(&grad).fold(
                (0.0, 0.0),
                |(lin, sq), ((c, t), g)| (lin + g * (c - t), sq + (c - t) * (c - t)),
            );
            let cand_value = lik.value(&cand);
            // sufficient ascent for a 1/step-smooth objective
            if cand_value >= value + lin - sq / (2.0 * step) && cand_value >= value {
                accepted = Some(cand);
                break;
            }
            step *= 0.5;
        }
        let Some(next) = accepted else { break };
        theta = next;
        (value, grad) = lik.value_and_gradient(&theta);
        if let Some(t) = trace.as_deref_mut() {
            t.push(value);
        }
        iterations += 1;
        pg = gradient_mapping_norm(&theta, &grad, budget);
        step = (step * 2.0).min(1e6);
    }

    let converged = pg < tol;
    let warning = (!converged && pg > 100.0 * tol).then(|| {
        format!("stopped after {iterations} iterations with projected-gradient norm {pg:.3e}")
    });
    if let Some(w) = &warning {
        log::debug!("budget {budget}: {w}");
    }
    Ok(Fit {
        rsp: Rsp::new(theta, features.clone())?,
        diagnostics: FitDiagnostics {
            objective: value,
            iterations,
            projected_gradient_norm: pg,
            converged,
            warning,
        },
    })
}

/// Approximately maximize the average log-likelihood subject to
/// `‖θ‖₁ ≤ budget` by projected gradient ascent with backtracking, starting
/// from `θ = 0`. An infinite budget fits the unconstrained model.
pub fn fit_constrained_mle(
    samples: &SampleSet,
    features: &Arc<FeatureMap>,
    budget: f64,
    tol: f64,
    max_iters: usize,
) -> Result<Fit> {
    fit_traced(&samples.pairs, features, budget, tol, max_iters, None)
}

/// Settings of the train/validate loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Fraction of samples held out for validation.
    pub gamma: f64,
    /// Largest budget `C` on the grid `0, 1, 2, 4, …, C`.
    pub budget_cap: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Seed for the train/hold-out shuffle.
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.3,
            budget_cap: 16.0,
            tol: 1e-6,
            max_iters: 5000,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Argument(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.budget_cap >= 0.0) || self.budget_cap.is_infinite() {
            return Err(Error::Argument(format!(
                "budget cap must be finite and non-negative, got {}",
                self.budget_cap
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Argument(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// `{0, 1, 2, 4, …} ∩ [0, cap]`, with `cap` appended when it is not a power of two.
pub fn budget_grid(cap: f64) -> Vec<f64> {
    let mut grid = vec![0.0];
    let mut b = 1.0;
    while b <= cap {
        grid.push(b);
        b *= 2.0;
    }
    if *grid.last().unwrap() < cap {
        grid.push(cap);
    }
    grid
}

/// Sizes of the training and hold-out parts for `m` samples.
pub fn split_sizes(m: usize, gamma: f64) -> (usize, usize) {
    let train = (((1.0 - gamma) * m as f64) - 1e-9).ceil().max(0.0) as usize;
    let train = train.clamp(1, m.saturating_sub(1).max(1));
    (train, m - train)
}

/// One row of the per-budget validation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetResult {
    pub budget: f64,
    pub holdout_log_loss: f64,
    pub l1_norm: f64,
    pub diagnostics: FitDiagnostics,
}

/// Output of [`train_algorithm1`].
#[derive(Debug, Clone)]
pub struct TrainedPolicy {
    pub rsp: Rsp,
    pub chosen_budget: f64,
    pub per_budget: Vec<BudgetResult>,
    pub diagnostics: FitDiagnostics,
}

impl TrainedPolicy {
    pub fn holdout_log_loss(&self) -> f64 {
        self.per_budget
            .iter()
            .find(|r| r.budget == self.chosen_budget)
            .map(|r| r.holdout_log_loss)
            .unwrap_or(f64::NAN)
    }
}

/// Shuffle, split into training and hold-out parts, fit every budget on the
/// grid against the training part and keep the one with the lowest hold-out
/// log-loss (smaller budget on ties).
pub fn train_algorithm1(
    samples: &SampleSet,
    features: &Arc<FeatureMap>,
    config: &TrainConfig,
) -> Result<TrainedPolicy> {
    config.validate()?;
    let m = samples.len();
    if m < 2 {
        return Err(Error::Argument(format!("need at least 2 samples to split, got {m}")));
    }
    samples.check_bounds(features.num_states(), features.num_actions())?;

    let mut shuffled = samples.pairs.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let (n_train, _) = split_sizes(m, config.gamma);
    let holdout = SampleSet::new(shuffled.split_off(n_train), samples.seed);
    let train = shuffled;

    let grid = budget_grid(config.budget_cap);
    let fits = config.execution.map(&grid, |&b| {
        fit_traced(&train, features, b, config.tol, config.max_iters, None)
    });

    let mut per_budget = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    let mut rsps = Vec::with_capacity(grid.len());
    for (i, (fit, &budget)) in fits.into_iter().zip(&grid).enumerate() {
        let fit = fit?;
        let loss = sample_log_loss(&fit.rsp, &holdout)?;
        if best.is_none_or(|(_, l)| loss < l) {
            best = Some((i, loss));
        }
        per_budget.push(BudgetResult {
            budget,
            holdout_log_loss: loss,
            l1_norm: fit.rsp.l1_norm(),
            diagnostics: fit.diagnostics,
        });
        rsps.push(fit.rsp);
    }
    let (idx, _) = best.expect("grid is never empty");
    Ok(TrainedPolicy {
        rsp: rsps.swap_remove(idx),
        chosen_budget: grid[idx],
        diagnostics: per_budget[idx].diagnostics.clone(),
        per_budget,
    })
}
