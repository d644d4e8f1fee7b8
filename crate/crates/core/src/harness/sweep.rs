//! Seeded experiment sweeps over sample sizes and repetitions.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode, PolicyKind};
use super::io::{read_grid_spec, resolve, write_bytes, Expert};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gridworld::{build_feature_map, build_grid_mdp, greedy_policy, GridSpec};
use crate::learner::{fit_constrained_mle, train_algorithm1, TrainConfig};
use crate::mdp::{
    average_reward, average_reward_uniform_start, induced_chain, limiting_distribution,
    stationary_distribution, value_iteration, Mdp, StationaryDistribution,
};
use crate::perturbation::regret_certificate;
use crate::policy::{sample_from_distribution, FeatureMap, Rsp};
use crate::synth::random_sparse_theta;

/// SplitMix64 output function applied to `x + 0x9E3779B97F4A7C15`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `(m_index, run)`: `master ^ splitmix64((m_index << 32) | run)`.
pub fn trial_seed(master: u64, m_index: usize, run: usize) -> u64 {
    master ^ splitmix64(((m_index as u64) << 32) | run as u64)
}

/// One line of the row-level CSV. Blank cells mean "not applicable".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub run: usize,
    pub policy: String,
    pub average_reward: Option<f64>,
    pub holdout_log_loss: Option<f64>,
    pub chosen_budget: Option<f64>,
    pub l1_norm: Option<f64>,
    pub kl: Option<f64>,
    pub true_regret: Option<f64>,
    pub min_bound: Option<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub m: usize,
    pub policy: String,
    /// Rows with a reward.
    pub count: usize,
    pub errors: usize,
    pub mean_reward: Option<f64>,
    /// Sample standard deviation; 0 for a single run.
    pub std_reward: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub m: usize,
    pub run: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    /// Sorted by (m, run, policy order).
    pub rows: Vec<SweepRow>,
    pub timings: Vec<TimingRow>,
}

/// Everything a trial needs that does not depend on the trial.
struct Setup {
    mdp: Mdp,
    features: Arc<FeatureMap>,
    expert: Expert,
    /// Expert's long-run state law, the sampling distribution.
    law: StationaryDistribution,
    target_reward: f64,
    greedy_reward: Option<f64>,
}

fn load_grid(config: &ExperimentConfig, config_path: &Path) -> Result<GridSpec> {
    match &config.grid_spec {
        Some(p) => read_grid_spec(&resolve(config_path, p)),
        None => Ok(GridSpec::default()),
    }
}

fn prepare(config: &ExperimentConfig, config_path: &Path) -> Result<Setup> {
    let spec = load_grid(config, config_path)?;
    let mdp = build_grid_mdp(&spec)?;
    let features = Arc::new(build_feature_map(&spec)?);
    let (expert, law, target_reward) = match config.mode {
        Mode::ValueIteration => {
            let vi = value_iteration(&mdp, config.discount, 1e-10)?;
            let chain = induced_chain(&mdp, &vi.policy)?;
            let law = match stationary_distribution(&chain) {
                Ok(pi) => pi,
                Err(Error::NotErgodic(why)) => {
                    log::warn!("expert chain not ergodic ({why}); sampling from the uniform-start occupation law");
                    let n = mdp.num_states();
                    limiting_distribution(&chain, &vec![1.0 / n as f64; n])?
                }
                Err(e) => return Err(e),
            };
            let reward = average_reward_uniform_start(&mdp, &vi.policy)?;
            (Expert::Deterministic(vi.policy), law, reward)
        }
        Mode::SparseSoftmax => {
            let s = config.sparsity.expect("validated");
            let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
            rng.set_stream(1);
            let theta = random_sparse_theta(&mut rng, features.num_features(), s.r, s.k);
            let target = Rsp::new(theta, features.clone())?;
            let law = stationary_distribution(&induced_chain(&mdp, &target)?)?;
            let reward = average_reward(&mdp, &target)?;
            (Expert::Boltzmann(target), law, reward)
        }
    };
    let greedy_reward = if config.policies.contains(&PolicyKind::Greedy) {
        Some(average_reward_uniform_start(&mdp, &greedy_policy(&mdp))?)
    } else {
        None
    };
    Ok(Setup { mdp, features, expert, law, target_reward, greedy_reward })
}

fn empty_row(m: usize, run: usize, policy: PolicyKind) -> SweepRow {
    SweepRow {
        m,
        run,
        policy: policy.name().to_string(),
        average_reward: None,
        holdout_log_loss: None,
        chosen_budget: None,
        l1_norm: None,
        kl: None,
        true_regret: None,
        min_bound: None,
        error: String::new(),
    }
}

fn add_certificate(setup: &Setup, estimate: &Rsp, row: &mut SweepRow) -> Result<()> {
    if let Expert::Boltzmann(target) = &setup.expert {
        let cert = regret_certificate(&setup.mdp, target, estimate)?;
        row.kl = Some(cert.kl_term);
        row.true_regret = Some(cert.true_regret);
        row.min_bound = Some(cert.min_bound());
    }
    Ok(())
}

fn learned_row(
    setup: &Setup,
    policy: PolicyKind,
    rsp: &Rsp,
    row: &mut SweepRow,
) -> Result<()> {
    row.l1_norm = Some(rsp.l1_norm());
    row.average_reward = Some(average_reward(&setup.mdp, rsp)?);
    if policy != PolicyKind::Target {
        add_certificate(setup, rsp, row)?;
    }
    Ok(())
}

fn run_trial(
    setup: &Setup,
    config: &ExperimentConfig,
    policies: &[PolicyKind],
    m_index: usize,
    run: usize,
) -> (Vec<SweepRow>, TimingRow) {
    let start = Instant::now();
    let m = config.sample_sizes[m_index];
    let seed = trial_seed(config.master_seed, m_index, run);
    let samples = sample_from_distribution(
        &setup.law,
        &setup.expert,
        setup.mdp.num_actions(),
        m,
        seed,
    );
    let train = TrainConfig {
        seed: splitmix64(seed),
        execution: Execution::Sequential,
        ..config.train.clone()
    };
    let rows = policies
        .iter()
        .map(|&policy| {
            let mut row = empty_row(m, run, policy);
            let outcome = match policy {
                PolicyKind::Target => {
                    row.average_reward = Some(setup.target_reward);
                    if let Expert::Boltzmann(t) = &setup.expert {
                        row.l1_norm = Some(t.l1_norm());
                    }
                    Ok(())
                }
                PolicyKind::Greedy => {
                    row.average_reward = setup.greedy_reward;
                    Ok(())
                }
                PolicyKind::L1 => train_algorithm1(&samples, &setup.features, &train).and_then(|t| {
                    row.chosen_budget = Some(t.chosen_budget);
                    row.holdout_log_loss = Some(t.holdout_log_loss());
                    learned_row(setup, policy, &t.rsp, &mut row)
                }),
                PolicyKind::Unregularized => fit_constrained_mle(
                    &samples,
                    &setup.features,
                    f64::INFINITY,
                    train.tol,
                    train.max_iters,
                )
                .and_then(|fit| learned_row(setup, policy, &fit.rsp, &mut row)),
            };
            if let Err(e) = outcome {
                log::warn!("m={m} run={run} {}: {e}", policy.name());
                row.average_reward = None;
                row.error = e.to_string();
            }
            row
        })
        .collect();
    let timing = TimingRow { m, run, seconds: start.elapsed().as_secs_f64() };
    (rows, timing)
}

/// Run every (m, run) trial. Trials are independent and may be scheduled
/// in parallel; rows come back in (m, run, policy) order either way.
///
/// `config_path` anchors relative paths inside the config.
pub fn run_sweep(
    config: &ExperimentConfig,
    config_path: &Path,
    execution: Execution,
) -> Result<SweepResult> {
    config.validate()?;
    let setup = prepare(config, config_path)?;
    let policies = config.policy_order();
    let trials: Vec<(usize, usize)> = (0..config.sample_sizes.len())
        .flat_map(|mi| (0..config.runs).map(move |run| (mi, run)))
        .collect();
    let outputs = execution.map(&trials, |&(mi, run)| run_trial(&setup, config, &policies, mi, run));
    let mut result = SweepResult::default();
    for (rows, timing) in outputs {
        result.rows.extend(rows);
        result.timings.push(timing);
    }
    Ok(result)
}

/// Mean and sample standard deviation of the rewards per (m, policy).
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut groups: Vec<((usize, String), Vec<f64>, usize)> = Vec::new();
    for row in rows {
        let key = (row.m, row.policy.clone());
        let idx = match groups.iter().position(|g| g.0 == key) {
            Some(i) => i,
            None => {
                groups.push((key, Vec::new(), 0));
                groups.len() - 1
            }
        };
        match row.average_reward {
            Some(r) if row.error.is_empty() => groups[idx].1.push(r),
            _ => groups[idx].2 += 1,
        }
    }
    for ((m, policy), values, errors) in groups {
        let n = values.len();
        let (mean, std) = if n == 0 {
            (None, None)
        } else {
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            (Some(mean), Some(var.sqrt()))
        };
        out.push(SummaryRow { m, policy, count: n, errors, mean_reward: mean, std_reward: std });
    }
    out
}

fn to_csv<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for item in items {
        w.serialize(item)?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })
}

pub fn rows_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    to_csv(rows)
}

pub fn summary_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    to_csv(&summarize(rows))
}

/// Paths of the summary and timing files that accompany a row CSV.
pub fn companion_paths(out: &Path) -> (PathBuf, PathBuf) {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    (
        out.with_file_name(format!("{stem}_summary.csv")),
        out.with_file_name(format!("{stem}_timing.csv")),
    )
}

/// Write rows to `out`, the summary and the wall-clock sidecar next to it.
/// The first two files are pure functions of the config.
pub fn write_sweep(result: &SweepResult, out: &Path) -> Result<()> {
    let (summary, timing) = companion_paths(out);
    write_bytes(out, &rows_csv(&result.rows)?)?;
    write_bytes(&summary, &summary_csv(&result.rows)?)?;
    write_bytes(&timing, &to_csv(&result.timings)?)
}

pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Sparsity;

    fn small(policies: Vec<PolicyKind>) -> ExperimentConfig {
        ExperimentConfig {
            sample_sizes: vec![20, 40],
            runs: 3,
            policies,
            train: TrainConfig { budget_cap: 4.0, max_iters: 300, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference generator seeded with 0
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(trial_seed(5, 0, 0), 5 ^ 0xE220_A839_7B1D_CDAF);
        assert_ne!(trial_seed(0, 1, 0), trial_seed(0, 0, 1));
    }

    #[test]
    fn greedy_only_sweep_ignores_samples() {
        let c = ExperimentConfig { sample_sizes: vec![10], runs: 1, ..small(vec![PolicyKind::Greedy]) };
        let res = run_sweep(&c, Path::new("x.json"), Execution::Sequential).unwrap();
        assert_eq!(res.rows.len(), 1);
        let c2 = ExperimentConfig { sample_sizes: vec![500], ..c };
        let res2 = run_sweep(&c2, Path::new("x.json"), Execution::Sequential).unwrap();
        assert_eq!(res.rows[0].average_reward, res2.rows[0].average_reward);
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let c = small(PolicyKind::ALL.to_vec());
        let res = run_sweep(&c, Path::new("x.json"), Execution::Parallel).unwrap();
        assert_eq!(res.rows.len(), 2 * 3 * 4);
        let keys: Vec<_> = res.rows.iter().map(|r| (r.m, r.run, r.policy.clone())).collect();
        let names: Vec<_> = PolicyKind::ALL.iter().map(|p| p.name()).collect();
        assert_eq!(keys[0], (20, 0, "target".to_string()));
        assert_eq!(&keys[4..8].iter().map(|k| k.2.as_str()).collect::<Vec<_>>(), &names);
        assert_eq!(keys[23], (40, 2, "greedy".to_string()));
        assert!(res.rows.iter().all(|r| r.error.is_empty() && r.average_reward.is_some()));
        assert!(res.rows.iter().filter(|r| r.policy == "l1").all(|r| r.l1_norm.unwrap() <= 4.0 + 1e-9));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let c = small(vec![PolicyKind::L1, PolicyKind::Unregularized]);
        let a = run_sweep(&c, Path::new("x.json"), Execution::Sequential).unwrap();
        let b = run_sweep(&c, Path::new("x.json"), Execution::Parallel).unwrap();
        assert_eq!(rows_csv(&a.rows).unwrap(), rows_csv(&b.rows).unwrap());
    }

    #[test]
    fn summary_means_match_rows() {
        let c = small(vec![PolicyKind::L1, PolicyKind::Greedy]);
        let res = run_sweep(&c, Path::new("x.json"), Execution::Parallel).unwrap();
        for s in summarize(&res.rows) {
            let vals: Vec<f64> = res
                .rows
                .iter()
                .filter(|r| r.m == s.m && r.policy == s.policy)
                .map(|r| r.average_reward.unwrap())
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((s.mean_reward.unwrap() - mean).abs() < 1e-12);
            assert_eq!(s.count, 3);
        }
    }

    #[test]
    fn sparse_softmax_mode_certifies_learned_policies() {
        let c = ExperimentConfig {
            mode: Mode::SparseSoftmax,
            sparsity: Some(Sparsity { r: 4, k: 3.0 }),
            sample_sizes: vec![200],
            runs: 2,
            ..small(PolicyKind::ALL.to_vec())
        };
        let res = run_sweep(&c, Path::new("x.json"), Execution::Sequential).unwrap();
        for r in &res.rows {
            assert!(r.error.is_empty(), "{}", r.error);
            match r.policy.as_str() {
                "l1" | "unregularized" => {
                    assert!(r.kl.unwrap() >= 0.0);
                    assert!(r.true_regret.unwrap() >= 0.0);
                    assert!(r.min_bound.unwrap().is_finite());
                }
                _ => assert!(r.kl.is_none()),
            }
        }
    }

    #[test]
    fn written_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out").join("fig.csv");
        let c = small(vec![PolicyKind::L1, PolicyKind::Greedy]);
        let res = run_sweep(&c, Path::new("x.json"), Execution::Parallel).unwrap();
        write_sweep(&res, &out).unwrap();
        assert_eq!(read_rows(&out).unwrap(), res.rows);
        let (summary, timing) = companion_paths(&out);
        assert!(summary.exists() && timing.exists());
        let header = std::fs::read_to_string(&out).unwrap();
        assert!(header.starts_with(
            "m,run,policy,average_reward,holdout_log_loss,chosen_budget,l1_norm,kl,true_regret,min_bound,error\n"
        ));
    }
}
