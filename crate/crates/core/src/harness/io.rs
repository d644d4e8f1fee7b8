//! JSON and CSV file formats.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{build_grid_mdp, GridSpec};
use crate::learner::{BudgetResult, FitDiagnostics, TrainedPolicy};
use crate::mdp::{DeterministicPolicy, Mdp};
use crate::perturbation::{Kappas, RegretCertificate};
use crate::policy::{ActionPolicy, FeatureMap, Rsp, SampleSet};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Parse a JSON document. Malformed or invalid content is a configuration
/// error that names the file.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// `relative` resolved against the directory holding `anchor`.
pub fn resolve(anchor: &Path, relative: &Path) -> PathBuf {
    if relative.is_absolute() {
        return relative.to_path_buf();
    }
    match anchor.parent() {
        Some(dir) => dir.join(relative),
        None => relative.to_path_buf(),
    }
}

pub fn read_grid_spec(path: &Path) -> Result<GridSpec> {
    let spec: GridSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

/// An environment file holds either a generic MDP (`"transition"` key) or a
/// grid spec (`"width"` key).
pub fn read_env(path: &Path) -> Result<Mdp> {
    let value: serde_json::Value = read_json(path)?;
    let bad = |e: serde_json::Error| Error::Config(format!("{}: {e}", path.display()));
    if value.get("transition").is_some() {
        serde_json::from_value(value).map_err(bad)
    } else if value.get("width").is_some() {
        let spec: GridSpec = serde_json::from_value(value).map_err(bad)?;
        spec.validate()?;
        build_grid_mdp(&spec)
    } else {
        Err(Error::Config(format!("{}: neither an MDP nor a grid spec", path.display())))
    }
}

pub fn read_features(path: &Path) -> Result<FeatureMap> {
    read_json(path)
}

/// Where a policy file finds its features.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureSource {
    /// Path to a feature-map JSON, relative to the policy file.
    Path(PathBuf),
    Inline(FeatureMap),
}

/// On-disk form of an RSP: `{"theta": [...], "feature_map": path-or-object}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RspDoc {
    pub theta: Vec<f64>,
    pub feature_map: FeatureSource,
}

impl RspDoc {
    pub fn resolve(self, anchor: &Path) -> Result<Rsp> {
        let features = match self.feature_map {
            FeatureSource::Inline(f) => f,
            FeatureSource::Path(p) => read_features(&resolve(anchor, &p))?,
        };
        Rsp::new(self.theta, Arc::new(features))
    }
}

pub fn read_rsp(path: &Path) -> Result<Rsp> {
    read_json::<RspDoc>(path)?.resolve(path)
}

/// A policy loaded from an expert file.
#[derive(Debug, Clone)]
pub enum Expert {
    Deterministic(DeterministicPolicy),
    Boltzmann(Rsp),
}

impl ActionPolicy for Expert {
    fn check_dims(&self, num_states: usize, num_actions: usize) -> Result<()> {
        match self {
            Expert::Deterministic(p) => p.check_dims(num_states, num_actions),
            Expert::Boltzmann(p) => p.check_dims(num_states, num_actions),
        }
    }

    fn fill_action_probs(&self, x: usize, out: &mut [f64]) {
        match self {
            Expert::Deterministic(p) => p.fill_action_probs(x, out),
            Expert::Boltzmann(p) => p.fill_action_probs(x, out),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ExpertDoc {
    Deterministic(DeterministicPolicy),
    Boltzmann(RspDoc),
}

/// Expert file: a JSON array of actions or an RSP document.
pub fn read_expert(path: &Path) -> Result<Expert> {
    match read_json::<ExpertDoc>(path)? {
        ExpertDoc::Deterministic(p) => Ok(Expert::Deterministic(p)),
        ExpertDoc::Boltzmann(doc) => Ok(Expert::Boltzmann(doc.resolve(path)?)),
    }
}

/// Output of the `train` command. Readable as an [`RspDoc`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedPolicyDoc {
    pub theta: Vec<f64>,
    pub feature_map: FeatureSource,
    pub l1_norm: f64,
    pub chosen_budget: f64,
    pub holdout_log_loss: f64,
    pub per_budget: Vec<BudgetResult>,
    pub diagnostics: FitDiagnostics,
}

impl TrainedPolicyDoc {
    pub fn new(trained: &TrainedPolicy, feature_map: FeatureSource) -> Self {
        TrainedPolicyDoc {
            theta: trained.rsp.theta().to_vec(),
            feature_map,
            l1_norm: trained.rsp.l1_norm(),
            chosen_budget: trained.chosen_budget,
            holdout_log_loss: trained.holdout_log_loss(),
            per_budget: trained.per_budget.clone(),
            diagnostics: trained.diagnostics.clone(),
        }
    }
}

const SEED_PREFIX: &str = "# seed=";

/// Sample CSV: a `# seed=<u64>` line, the header `state,action`, one pair
/// per row.
pub fn write_samples(path: &Path, samples: &SampleSet) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{SEED_PREFIX}{}", samples.seed).expect("write to vec");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state", "action"])?;
    for &(x, a) in &samples.pairs {
        w.serialize((x, a))?;
    }
    let out = w.into_inner().map_err(|e| io_err(path, e.into_error()))?;
    write_bytes(path, &out)
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let text = read_to_string(path)?;
    let seed = match text.lines().next().and_then(|l| l.strip_prefix(SEED_PREFIX)) {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{}: bad seed line", path.display())))?,
        None => 0,
    };
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["state", "action"] {
        return Err(Error::Config(format!(
            "{}: expected header state,action",
            path.display()
        )));
    }
    let pairs = r
        .deserialize::<(usize, usize)>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(SampleSet::new(pairs, seed))
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.6e}")
    }
}

/// Aligned text rendering of a certificate.
pub fn certificate_table(cert: &RegretCertificate) -> String {
    let mut s = String::new();
    let scalar = [
        ("kl_term", cert.kl_term),
        ("target_reward", cert.target_reward),
        ("estimate_reward", cert.estimate_reward),
        ("true_regret", cert.true_regret),
        ("estimation_term", cert.estimation_term),
        ("perturbation_term", cert.perturbation_term),
        ("r_max", cert.r_max),
    ];
    for (name, v) in scalar {
        s.push_str(&format!("{name:<20} {:>14}\n", fmt_value(v)));
    }
    s.push('\n');
    s.push_str(&format!(
        "{:<20} {:>14} {:>14} {:>14}\n",
        "kappa", "value", "bound", "bound_nat"
    ));
    let k = cert.kappas.as_array();
    for i in 0..4 {
        let mark = if Kappas::NAMES[i] == cert.best_kappa { " *" } else { "" };
        s.push_str(&format!(
            "{:<20} {:>14} {:>14} {:>14}{mark}\n",
            Kappas::NAMES[i],
            fmt_value(k[i]),
            fmt_value(cert.bound_per_kappa[i]),
            fmt_value(cert.nat_bound_per_kappa[i]),
        ));
    }
    s
}
