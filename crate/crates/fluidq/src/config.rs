//! The experiment configuration format: one TOML document with `[model]`,
//! `[run]` and `[output]` blocks. Unknown keys are hard errors (a typo in a
//! distribution parameter must not silently change the experiment), parse
//! failures carry line/column anchors, and the master seed is mandatory —
//! there is no wall-clock seeding anywhere.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::analytics;
use crate::error::{Error, Result};
use crate::levy::{JumpDistribution, NetInputModel};
use crate::sim::{self, QueueModel, VacationMode};
use crate::validation::SuiteTarget;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLawConfig {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Erlang { shape: u32, rate: f64 },
    Hyperexponential { weights: Vec<f64>, rates: Vec<f64> },
}

impl JumpLawConfig {
    fn build(&self) -> Result<JumpDistribution> {
        match self {
            JumpLawConfig::Exponential { rate } => JumpDistribution::exponential(*rate),
            JumpLawConfig::Deterministic { value } => JumpDistribution::deterministic(*value),
            JumpLawConfig::Erlang { shape, rate } => JumpDistribution::erlang(*shape, *rate),
            JumpLawConfig::Hyperexponential { weights, rates } => {
                JumpDistribution::hyperexponential(weights.clone(), rates.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub drift: f64,
    pub jump_rate: f64,
    pub jump_law: JumpLawConfig,
    pub service_rate: f64,
    #[serde(default)]
    pub failure_rate: f64,
    pub repair_law: Option<JumpLawConfig>,
    /// `direct_eta`, `work_during_vacation`, or `none` (reflected process,
    /// no vacations; requires `failure_rate = 0`).
    pub vacation_mode: String,
    pub vacation_law: Option<JumpLawConfig>,
    #[serde(default)]
    pub initial_workload: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct RunConfig {
    /// Mandatory: every stochastic output is a pure function of this seed.
    pub master_seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub warmup: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub spacing: Option<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub theta_grid: Option<Vec<f64>>,
    pub x_grid: Option<Vec<f64>>,
    /// Number of breakdown pairs to simulate for the embedding when p > 0.
    #[serde(default = "default_embedding_pairs")]
    pub embedding_pairs: usize,
    /// CSV file of `w_minus,w_plus` pairs; overrides embedded simulation.
    pub embedding_file: Option<PathBuf>,
}

fn default_horizon() -> f64 {
    100_000.0
}

fn default_samples() -> usize {
    100_000
}

fn default_replications() -> usize {
    10_000
}

fn default_embedding_pairs() -> usize {
    100_000
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    pub formats: Option<Vec<String>>,
}

/// A parsed and validated experiment: the model target plus run and output
/// settings, and the SHA-256 of the raw config bytes for output headers.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub target: SuiteTarget,
    pub run: RunConfig,
    pub output: OutputConfig,
    pub config_hash: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
struct ConfigFile {
    model: ModelConfig,
    run: RunConfig,
    #[serde(default)]
    output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|e| Error::Config(format!("{} is not UTF-8: {e}", path.display())))?;
        Self::from_str_with_hash(&text, sha256_hex(&bytes))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_str_with_hash(text, sha256_hex(text.as_bytes()))
    }

    fn from_str_with_hash(text: &str, config_hash: String) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let target = build_target(&file.model)?;
        Ok(Self { target, run: file.run, output: file.output, config_hash })
    }

    /// Effective seed after a CLI override.
    pub fn seed(&self, override_seed: Option<u64>) -> u64 {
        override_seed.unwrap_or(self.run.master_seed)
    }

    /// Transform grid: configured or the 16-point log default.
    pub fn theta_grid(&self) -> Vec<f64> {
        self.run.theta_grid.clone().unwrap_or_else(analytics::default_theta_grid)
    }

    /// CDF grid: configured, or 64 evenly spaced points up to
    /// mean + 6 standard deviations of the target.
    pub fn x_grid(&self, mean: f64, variance: f64) -> Vec<f64> {
        self.run.x_grid.clone().unwrap_or_else(|| {
            let hi = mean + 6.0 * variance.sqrt();
            (1..=64).map(|k| hi * k as f64 / 64.0).collect()
        })
    }

    /// Warmup before stationary sampling: configured or 50 mean busy periods.
    pub fn warmup(&self) -> f64 {
        match (&self.run.warmup, &self.target) {
            (Some(w), _) => *w,
            (None, SuiteTarget::Queue(m)) => sim::default_warmup(m),
            (None, SuiteTarget::Reflected(net)) => {
                100.0 / net.varphi_derivatives_at_zero().0
            }
        }
    }

    /// Spacing between stationary samples: configured or 5 mean busy periods.
    pub fn spacing(&self) -> f64 {
        match (&self.run.spacing, &self.target) {
            (Some(s), _) => *s,
            (None, SuiteTarget::Queue(m)) => sim::default_spacing(m),
            (None, SuiteTarget::Reflected(net)) => 10.0 / net.varphi_derivatives_at_zero().0,
        }
    }

    pub fn wants_format(&self, fmt: &str) -> bool {
        match &self.output.formats {
            None => true,
            Some(list) => list.iter().any(|f| f == fmt),
        }
    }
}

fn build_target(model: &ModelConfig) -> Result<SuiteTarget> {
    let net = NetInputModel::new(
        model.drift,
        model.jump_rate,
        model.jump_law.build()?,
        model.service_rate,
    )?;
    match model.vacation_mode.as_str() {
        "none" => {
            if model.failure_rate > 0.0 {
                return Err(Error::Config(
                    "breakdowns without vacations leave the workload unbounded below; \
                     vacation_mode = \"none\" requires failure_rate = 0"
                        .into(),
                ));
            }
            Ok(SuiteTarget::Reflected(net))
        }
        mode @ ("direct_eta" | "work_during_vacation") => {
            let vac_law = model
                .vacation_law
                .as_ref()
                .ok_or_else(|| Error::Config(format!("vacation_mode {mode:?} needs vacation_law")))?
                .build()?;
            let vacation = if mode == "direct_eta" {
                VacationMode::DirectEta(vac_law)
            } else {
                VacationMode::WorkDuringVacation(vac_law)
            };
            let repair_law = model.repair_law.as_ref().map(JumpLawConfig::build).transpose()?;
            let queue = QueueModel::new(
                net,
                model.failure_rate,
                repair_law,
                vacation,
                model.initial_workload,
            )?;
            Ok(SuiteTarget::Queue(queue))
        }
        other => Err(Error::Config(format!(
            "unknown vacation_mode {other:?}; expected direct_eta, work_during_vacation or none"
        ))),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Load `w_minus,w_plus` pairs from a CSV file (header line required).
pub fn load_embedding_pairs(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::Config(format!("{}:{}: missing column", path.display(), i + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))
        };
        let w_minus = parse(cols.next())?;
        let w_plus = parse(cols.next())?;
        pairs.push((w_minus, w_plus));
    }
    if pairs.is_empty() {
        return Err(Error::Config(format!("{} contains no pairs", path.display())));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
        [model]
        jump_rate = 0.5
        jump_law = { family = "exponential", rate = 1.0 }
        service_rate = 1.0
        failure_rate = 0.2
        repair_law = { family = "exponential", rate = 2.0 }
        vacation_mode = "direct_eta"
        vacation_law = { family = "deterministic", value = 1.0 }

        [run]
        master_seed = 42
    "#;

    #[test]
    fn parses_valid_config() {
        let cfg = ExperimentConfig::from_toml_str(GOOD).unwrap();
        match &cfg.target {
            SuiteTarget::Queue(m) => {
                assert!((m.p() - 0.2).abs() < 1e-15);
                assert_eq!(m.initial_workload(), 0.0);
            }
            SuiteTarget::Reflected(_) => panic!("expected a queue"),
        }
        assert_eq!(cfg.seed(None), 42);
        assert_eq!(cfg.seed(Some(7)), 7);
        assert_eq!(cfg.theta_grid().len(), 16);
        assert_eq!(cfg.config_hash.len(), 64);
    }

    #[test]
    fn unknown_keys_are_hard_errors_with_line_anchors() {
        let bad = GOOD.replace("[run]", "jump_rtae = 0.1\n        [run]");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("jump_rtae") || msg.contains("unknown field"), "{msg}");
        assert!(msg.contains("line"), "diagnostic should be line-anchored: {msg}");
    }

    #[test]
    fn missing_seed_is_rejected() {
        let bad = GOOD.replace("master_seed = 42", "horizon = 10.0");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("master_seed"), "{err}");
    }

    #[test]
    fn unstable_config_names_the_inequality() {
        let bad = GOOD.replace("failure_rate = 0.2", "failure_rate = 1.2");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("service rate"), "{msg}");
    }

    #[test]
    fn reflected_mode_must_not_have_failures() {
        let bad = GOOD.replace("vacation_mode = \"direct_eta\"", "vacation_mode = \"none\"");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let good = bad.replace("failure_rate = 0.2", "failure_rate = 0.0");
        let cfg = ExperimentConfig::from_toml_str(&good).unwrap();
        assert!(matches!(cfg.target, SuiteTarget::Reflected(_)));
    }

    #[test]
    fn hyperexponential_law_round_trips() {
        let text = GOOD.replace(
            r#"jump_law = { family = "exponential", rate = 1.0 }"#,
            r#"jump_law = { family = "hyperexponential", weights = [0.3, 0.7], rates = [1.0, 3.0] }"#,
        );
        assert!(ExperimentConfig::from_toml_str(&text).is_ok());
        let bad = text.replace("[0.3, 0.7]", "[0.3, 0.8]");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }
}
