//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rsp_core::harness::sweep::{rows_csv, summarize, summary_csv, SummaryRow};
use rsp_core::harness::{io::read_json, run_sweep, ExperimentConfig};
use rsp_core::learner::{average_log_likelihood, log_likelihood_gradient, project_onto_l1_ball};
use rsp_core::mdp::stationary_distribution;
use rsp_core::perturbation::{
    fundamental_identity_residual, fundamental_matrix, group_inverse, perturbation_bound_check,
    regret_certificate,
};
use rsp_core::policy::{averaged_kl, log_loss};
use rsp_core::synth::{random_feature_map, random_mdp, random_sparse_theta, random_theta};
use rsp_core::{Execution, Rsp, SampleSet, StochasticMatrix};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_time = took <= limit;
    let pass = out.pass && in_time;
    println!(
        "criterion {id}: {} ({}; {:.2}s of {}s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

/// Row-stochastic matrix with skewed positive entries.
fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> StochasticMatrix {
    let power = rng.gen_range(1.0..4.0);
    let mut m = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>().powf(power) + 1e-3);
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    StochasticMatrix::new(m).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst, mut violations, mut checked) = (f64::NEG_INFINITY, 0, 0);
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let h = rng.gen_range(2..=4);
        let k = 6;
        let mdp = random_mdp(&mut rng, n, h);
        let fm = Arc::new(random_feature_map(&mut rng, n, h, k));
        let star = random_sparse_theta(&mut rng, k, 2, 3.0);
        let scale = 10f64.powf(rng.gen_range(-3.0..0.5));
        let hat: Vec<f64> = star.iter().map(|t| t + scale * rng.gen_range(-1.0..1.0)).collect();
        let cert = regret_certificate(
            &mdp,
            &Rsp::new(star, fm.clone()).unwrap(),
            &Rsp::new(hat, fm).unwrap(),
        )
        .unwrap();
        for b in cert.bound_per_kappa.iter().filter(|b| b.is_finite()) {
            checked += 1;
            let excess = cert.true_regret - b;
            worst = worst.max(excess);
            if excess > 1e-8 {
                violations += 1;
            }
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} of {checked} finite bounds violated, max excess {worst:.3e}"),
    }
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=15);
        let h = rng.gen_range(2..=4);
        let mdp = random_mdp(&mut rng, n, h);
        let fm = Arc::new(random_feature_map(&mut rng, n, h, 5));
        let star = Rsp::new(random_theta(&mut rng, 5, 3.0), fm.clone()).unwrap();
        let hat = Rsp::new(random_theta(&mut rng, 5, 3.0), fm).unwrap();
        let gap = log_loss(&hat, &star, &mdp).unwrap() - log_loss(&star, &star, &mdp).unwrap();
        let kl = averaged_kl(&star, &hat, &mdp).unwrap();
        worst = worst.max((gap - kl).abs());
    }
    Outcome { pass: worst <= 1e-10, detail: format!("max |gap - KL| {worst:.3e}") }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst_bound, mut worst_identity) = (f64::NEG_INFINITY, 0f64);
    for _ in 0..100 {
        let n = rng.gen_range(2..=20);
        let a = random_chain(&mut rng, n);
        // partner: either a small perturbation of `a` or an unrelated chain
        let b = if rng.gen_bool(0.5) {
            let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
            let noise = random_chain(&mut rng, n);
            StochasticMatrix::new(a.matrix() * (1.0 - eps) + noise.matrix() * eps).unwrap()
        } else {
            random_chain(&mut rng, n)
        };
        let c = perturbation_bound_check(&a, &b).unwrap();
        for r in c.rhs.iter().filter(|r| r.is_finite()) {
            worst_bound = worst_bound.max(c.lhs - r);
        }
        worst_identity = worst_identity.max(fundamental_identity_residual(&a, &b).unwrap());
    }
    Outcome {
        pass: worst_bound <= 1e-8 && worst_identity <= 1e-8,
        detail: format!("max lhs - rhs {worst_bound:.3e}, max identity residual {worst_identity:.3e}"),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = if i < 10 { 50 } else { rng.gen_range(2..=50) };
        let chain = random_chain(&mut rng, n);
        let pi = stationary_distribution(&chain).unwrap();
        let z = fundamental_matrix(&chain, &pi).unwrap();
        let g = group_inverse(&chain, &pi).unwrap();
        let a = DMatrix::identity(n, n) - chain.matrix();
        let epi = DMatrix::from_fn(n, n, |_, c| pi.probs()[c]);
        let id = DMatrix::<f64>::identity(n, n);
        for r in [
            (&z * (&a + &epi) - &id).amax(),
            (&a * &g * &a - &a).amax(),
            (&g * &a * &g - &g).amax(),
            (&a * &g - &g * &a).amax(),
        ] {
            worst = worst.max(r);
        }
    }
    Outcome { pass: worst <= 1e-8, detail: format!("max residual {worst:.3e}") }
}

/// Coarse-to-fine grid minimizer of `‖u - v‖₂` over the 3-D ℓ1 ball.
fn grid_projection_3d(v: [f64; 3], radius: f64) -> [f64; 3] {
    let search = |center: [f64; 3], half: f64, step: f64| {
        let k = (half / step).round() as i64;
        let mut best = (center, f64::INFINITY);
        for i in -k..=k {
            for j in -k..=k {
                for l in -k..=k {
                    let u = [
                        center[0] + i as f64 * step,
                        center[1] + j as f64 * step,
                        center[2] + l as f64 * step,
                    ];
                    if u.iter().map(|x| x.abs()).sum::<f64>() > radius + 1e-9 {
                        continue;
                    }
                    let d: f64 = (0..3).map(|c| (u[c] - v[c]).powi(2)).sum();
                    if d < best.1 {
                        best = (u, d);
                    }
                }
            }
        }
        best.0
    };
    let coarse = search([0.0; 3], radius, 0.05);
    let snap = coarse.map(|x| (x / 0.001).round() * 0.001);
    search(snap, 0.1, 0.001)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_grad: f64 = 0.0;
    for _ in 0..20 {
        let (n, h, k) = (rng.gen_range(2..8), rng.gen_range(2..5), rng.gen_range(2..7));
        let fm = random_feature_map(&mut rng, n, h, k);
        let pairs = (0..50).map(|_| (rng.gen_range(0..n), rng.gen_range(0..h))).collect();
        let samples = SampleSet::new(pairs, 0);
        let theta = random_theta(&mut rng, k, 2.0);
        let grad = log_likelihood_gradient(&samples, &fm, &theta);
        let step = 1e-5;
        let numeric: Vec<f64> = (0..k)
            .map(|i| {
                let (mut up, mut down) = (theta.clone(), theta.clone());
                up[i] += step;
                down[i] -= step;
                (average_log_likelihood(&samples, &fm, &up) - average_log_likelihood(&samples, &fm, &down))
                    / (2.0 * step)
            })
            .collect();
        let diff: f64 = grad.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = numeric.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        worst_grad = worst_grad.max(diff / norm);
    }
    let mut worst_proj: f64 = 0.0;
    for _ in 0..20 {
        let v = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        // multiples of both grid steps so the ball's faces carry grid points
        let radius = rng.gen_range(4..=40) as f64 * 0.05;
        let exact = project_onto_l1_ball(&v, radius).unwrap();
        let oracle = grid_projection_3d(v, radius);
        for c in 0..3 {
            worst_proj = worst_proj.max((exact[c] - oracle[c]).abs());
        }
    }
    Outcome {
        pass: worst_grad < 1e-6 && worst_proj <= 2e-3,
        detail: format!("max gradient rel err {worst_grad:.3e}, max projection gap {worst_proj:.3e}"),
    }
}

fn config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/navigation.json")
}

fn mean(summary: &[SummaryRow], m: usize, policy: &str) -> f64 {
    summary
        .iter()
        .find(|s| s.m == m && s.policy == policy)
        .and_then(|s| s.mean_reward)
        .unwrap_or(f64::NAN)
}

fn main() {
    let mut all = true;
    all &= check("1 (regret certificate)", Duration::from_secs(30), criterion_1);
    all &= check("2 (log-loss gap = averaged KL)", Duration::from_secs(5), criterion_2);
    all &= check("3 (stationary perturbation)", Duration::from_secs(10), criterion_3);
    all &= check("4 (group inverse axioms)", Duration::from_secs(20), criterion_4);
    all &= check("5 (optimizer correctness)", Duration::from_secs(10), criterion_5);

    let path = config_path();
    let config: ExperimentConfig = read_json(&path).unwrap();
    let start = Instant::now();
    let first = run_sweep(&config, &path, Execution::Parallel).unwrap();
    let sweep_time = start.elapsed();
    let summary = summarize(&first.rows);
    let sizes = &config.sample_sizes;
    let errors: usize = summary.iter().map(|s| s.errors).sum();
    println!("navigation sweep: {} rows, {errors} failed trials, {:.1}s", first.rows.len(), sweep_time.as_secs_f64());
    for &m in sizes {
        println!(
            "  m={m:>5}  target {:.4}  l1 {:.4}  unregularized {:.4}  greedy {:.4}",
            mean(&summary, m, "target"),
            mean(&summary, m, "l1"),
            mean(&summary, m, "unregularized"),
            mean(&summary, m, "greedy"),
        );
    }
    let budget = Duration::from_secs(15 * 60);
    all &= check("6a (l1 within 5% of target, m >= 3200)", budget, || {
        let bad: Vec<usize> = sizes
            .iter()
            .copied()
            .filter(|&m| m >= 3200)
            .filter(|&m| !(mean(&summary, m, "l1") >= 0.95 * mean(&summary, m, "target")))
            .collect();
        Outcome { pass: bad.is_empty() && errors == 0, detail: format!("failing m: {bad:?}") }
    });
    all &= check("6b (l1 >= unregularized at the two smallest m)", budget, || {
        let bad: Vec<usize> = sizes[..2]
            .iter()
            .copied()
            .filter(|&m| !(mean(&summary, m, "l1") >= mean(&summary, m, "unregularized")))
            .collect();
        Outcome { pass: bad.is_empty(), detail: format!("failing m: {bad:?}") }
    });
    all &= check("6c (learned policies beat greedy, m >= 800)", budget, || {
        let greedy = mean(&summary, sizes[0], "greedy");
        let bad: Vec<(usize, &str)> = sizes
            .iter()
            .copied()
            .filter(|&m| m >= 800)
            .flat_map(|m| ["l1", "unregularized"].map(|p| (m, p)))
            .filter(|&(m, p)| !(mean(&summary, m, p) > mean(&summary, m, "greedy")))
            .collect();
        Outcome {
            pass: bad.is_empty(),
            detail: format!("greedy {greedy:.6}; failing (m, policy): {bad:?}"),
        }
    });

    all &= check("7 (determinism)", Duration::from_secs(15 * 60), || {
        let second = run_sweep(&config, &path, Execution::Sequential).unwrap();
        let same_rows = rows_csv(&first.rows).unwrap() == rows_csv(&second.rows).unwrap();
        let same_summary = summary_csv(&first.rows).unwrap() == summary_csv(&second.rows).unwrap();
        Outcome {
            pass: same_rows && same_summary,
            detail: format!(
                "rerun (sequential vs parallel): rows identical {same_rows}, summary identical {same_summary}"
            ),
        }
    });

    if !all {
        std::process::exit(1);
    }
}
