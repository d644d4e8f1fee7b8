use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rsp_core::gridworld::{build_feature_map, build_grid_mdp, GridSpec};
use rsp_core::harness::io::{
    certificate_table, read_env, read_expert, read_features, read_grid_spec, read_json,
    read_rsp, read_samples, write_json, write_samples, FeatureSource, TrainedPolicyDoc,
};
use rsp_core::harness::sweep::companion_paths;
use rsp_core::harness::{run_sweep, write_sweep, ExperimentConfig};
use rsp_core::learner::train_algorithm1;
use rsp_core::mdp::{induced_chain, limiting_distribution, stationary_distribution, value_iteration};
use rsp_core::perturbation::regret_certificate;
use rsp_core::policy::sample_from_distribution;
use rsp_core::{ActionPolicy, Error, Execution, TrainConfig};

/// Imitation learning of softmax policies on finite MDPs.
#[derive(Parser)]
#[command(name = "rsp", version)]
struct Cli {
    /// Worker threads for parallel work. Never changes results.
    #[arg(long, global = true, env = "RSP_THREADS")]
    threads: Option<usize>,

    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    /// The expert chain's unique stationary distribution (fails if not ergodic).
    Stationary,
    /// Long-run occupation law from a uniform initial state.
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a grid world by discounted value iteration and write the
    /// expert policy as a JSON array of actions.
    GridworldSolve {
        /// Grid spec JSON; the built-in 13x13 board when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.95)]
        discount: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the generic MDP JSON here.
        #[arg(long)]
        mdp_out: Option<PathBuf>,
        /// Also write the feature map JSON here.
        #[arg(long)]
        features_out: Option<PathBuf>,
    },
    /// Draw state-action demonstrations from an expert.
    Sample {
        /// MDP JSON or grid spec JSON.
        #[arg(long)]
        env: PathBuf,
        /// Expert: JSON action array or RSP JSON.
        #[arg(long)]
        expert: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Start::Stationary)]
        start: Start,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an l1-constrained policy with hold-out budget selection.
    Train {
        #[arg(long)]
        samples: PathBuf,
        /// Feature map JSON.
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        gamma: f64,
        /// Largest budget C of the grid 0, 1, 2, 4, ..., C.
        #[arg(long, default_value_t = 16.0)]
        cap: f64,
        /// Seed of the train/hold-out shuffle.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 5000)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact regret certificate of an estimated policy against a target.
    Certify {
        #[arg(long)]
        env: PathBuf,
        /// Target RSP JSON.
        #[arg(long)]
        target: PathBuf,
        /// Estimated RSP JSON (a `train` output works).
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a seeded sweep over sample sizes and repetitions.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's out_path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotErgodic(_) => 3,
        Error::Config(_) | Error::Argument(_) | Error::Json(_) | Error::Csv(_) | Error::Io { .. } => 2,
        Error::Conditioning { .. } | Error::Convergence { .. } => 1,
    }
}

/// Path as written into output files: relative to `from`'s directory when
/// both are relative, so the pair can be moved together.
fn relative_to(target: &Path, from: &Path) -> PathBuf {
    let (Ok(t), Some(dir)) = (std::path::absolute(target), from.parent()) else {
        return target.to_path_buf();
    };
    let Ok(d) = std::path::absolute(if dir.as_os_str().is_empty() { Path::new(".") } else { dir }) else {
        return target.to_path_buf();
    };
    let t: Vec<_> = t.components().collect();
    let d: Vec<_> = d.components().collect();
    let common = t.iter().zip(&d).take_while(|(a, b)| a == b).count();
    let mut rel = PathBuf::new();
    for _ in common..d.len() {
        rel.push("..");
    }
    for c in &t[common..] {
        rel.push(c);
    }
    rel
}

fn run(cli: Cli) -> rsp_core::Result<()> {
    let execution = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::GridworldSolve { config, discount, tol, out, mdp_out, features_out } => {
            let spec = match config {
                Some(p) => read_grid_spec(&p)?,
                None => GridSpec::default(),
            };
            let mdp = build_grid_mdp(&spec)?;
            let vi = value_iteration(&mdp, discount, tol)?;
            log::info!("value iteration converged after {} sweeps", vi.residuals.len());
            write_json(&out, &vi.policy)?;
            if let Some(p) = mdp_out {
                write_json(&p, &mdp)?;
            }
            if let Some(p) = features_out {
                write_json(&p, &build_feature_map(&spec)?)?;
            }
        }
        Command::Sample { env, expert, m, seed, start, out } => {
            let mdp = read_env(&env)?;
            let expert = read_expert(&expert)?;
            expert.check_dims(mdp.num_states(), mdp.num_actions())?;
            let chain = induced_chain(&mdp, &expert)?;
            let law = match start {
                Start::Stationary => stationary_distribution(&chain)?,
                Start::Uniform => {
                    let n = mdp.num_states();
                    limiting_distribution(&chain, &vec![1.0 / n as f64; n])?
                }
            };
            let samples = sample_from_distribution(&law, &expert, mdp.num_actions(), m, seed);
            write_samples(&out, &samples)?;
        }
        Command::Train { samples, features, gamma, cap, seed, tol, max_iters, out } => {
            let set = read_samples(&samples)?;
            let fm = Arc::new(read_features(&features)?);
            let config = TrainConfig { gamma, budget_cap: cap, tol, max_iters, seed, execution };
            let trained = execution.with_threads(cli.threads, || train_algorithm1(&set, &fm, &config))?;
            if let Some(w) = &trained.diagnostics.warning {
                log::warn!("{w}");
            }
            let doc = TrainedPolicyDoc::new(&trained, FeatureSource::Path(relative_to(&features, &out)));
            write_json(&out, &doc)?;
        }
        Command::Certify { env, target, estimate, out } => {
            let mdp = read_env(&env)?;
            let cert = regret_certificate(&mdp, &read_rsp(&target)?, &read_rsp(&estimate)?)?;
            write_json(&out, &cert)?;
            print!("{}", certificate_table(&cert));
        }
        Command::Experiment { config, out } => {
            let mut cfg: ExperimentConfig = read_json(&config)?;
            let out = match out {
                Some(p) => p,
                None => rsp_core::harness::io::resolve(&config, &cfg.out_path),
            };
            cfg.out_path = out.clone();
            let result = execution.with_threads(cli.threads, || run_sweep(&cfg, &config, execution))?;
            write_sweep(&result, &out)?;
            let failed = result.rows.iter().filter(|r| !r.error.is_empty()).count();
            let (summary, _) = companion_paths(&out);
            log::info!("{} rows ({failed} failed) -> {}, {}", result.rows.len(), out.display(), summary.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
