//! Training configuration: JSON file, command-line overrides, validation.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stop_core::learn::{LearningRates, LossKind, SynergyMode, UpdateConfig, DEFAULT_EPSILON};
use stop_core::optim::MomentumConfig;
use stop_core::{InitMode, SurrogateKind};

use crate::error::{Failure, Result};

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "STOP_SEED";

pub fn parse_loss(s: &str) -> Result<LossKind> {
    match s.to_ascii_lowercase().as_str() {
        "ce" | "cross-entropy" | "crossentropy" => Ok(LossKind::CrossEntropy),
        "mse" | "mean-squared" => Ok(LossKind::MeanSquared),
        _ => Err(Failure::Usage(format!("unknown loss {s:?} (ce, mse)"))),
    }
}

pub fn parse_surrogate(s: &str) -> Result<SurrogateKind> {
    match s.to_ascii_lowercase().as_str() {
        "exp" | "expabs" | "exp-abs" => Ok(SurrogateKind::ExpAbs),
        "invquad" | "inv-quad" | "rational" => Ok(SurrogateKind::InvQuad),
        _ => Err(Failure::Usage(format!(
            "unknown surrogate {s:?} (exp, invquad)"
        ))),
    }
}

pub fn parse_init(s: &str) -> Result<InitMode> {
    match s.to_ascii_lowercase().as_str() {
        "fan-in" | "fanin" | "fan-in-scaled" => Ok(InitMode::FanInScaled),
        "standard" | "paper" | "unit" => Ok(InitMode::PaperLiteral),
        _ => Err(Failure::Usage(format!(
            "unknown init {s:?} (fan-in, standard)"
        ))),
    }
}

pub fn parse_mode(s: &str) -> Result<SynergyMode> {
    SynergyMode::from_str(s).map_err(|e| Failure::Usage(e.to_string()))
}

/// Where training and test samples come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// IDX image/label pairs, directly coded.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        #[serde(default = "ten")]
        classes: usize,
    },
    /// Manifests of event files, one `path label` pair per line.
    Events {
        train: PathBuf,
        test: PathBuf,
        classes: usize,
    },
    /// Uniform random inputs labelled by a frozen random copy of the network.
    Teacher {
        input_len: usize,
        classes: usize,
        samples: usize,
        #[serde(default)]
        test_samples: usize,
        #[serde(default)]
        seed: u64,
        /// Smallest gap between the teacher's top two spike counts.
        #[serde(default)]
        margin: Option<f64>,
    },
}

impl DatasetConfig {
    /// Joins relative dataset paths onto `base`.
    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DatasetConfig::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ..
            } => {
                [train_images, train_labels, test_images, test_labels]
                    .into_iter()
                    .for_each(fix);
            }
            DatasetConfig::Events { train, test, .. } => [train, test].into_iter().for_each(fix),
            DatasetConfig::Teacher { .. } => {}
        }
    }
}

fn ten() -> usize {
    10
}

/// Gradient rule used in training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainRule {
    Stop,
    /// Unrolled reverse mode through time, reset dependence included.
    Stbp,
}

pub fn parse_rule(s: &str) -> Result<TrainRule> {
    match s {
        "stop" => Ok(TrainRule::Stop),
        "stbp" => Ok(TrainRule::Stbp),
        _ => Err(Failure::Usage(format!("unknown rule {s:?} (stop, stbp)"))),
    }
}

fn stop() -> String {
    "stop".into()
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub architecture: String,
    pub dataset: DatasetConfig,
    pub time_steps: usize,
    pub mode: String,
    #[serde(default = "stop")]
    pub rule: String,
    pub loss: String,
    pub surrogate: String,
    pub lr_weights: f64,
    pub lr_thresholds: f64,
    pub lr_leakage: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    /// Run thresholds and leakages through momentum too.
    #[serde(default)]
    pub threshold_leakage_momentum: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub init: String,
    pub epsilon: f64,
    #[serde(default)]
    pub train_limit: Option<usize>,
    #[serde(default)]
    pub test_limit: Option<usize>,
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub metrics: Option<PathBuf>,
    /// Include wall-clock seconds in metrics rows. Turn off for
    /// byte-identical metrics across runs.
    #[serde(default = "yes")]
    pub wall_time: bool,
    /// Stop this invocation once this many epochs are done, leaving the
    /// schedule for a later resume. Not stored in checkpoints.
    #[serde(skip)]
    pub halt_after: Option<usize>,
}

impl TrainConfig {
    /// Desk-scale defaults for a dataset.
    pub fn desk(architecture: &str, dataset: DatasetConfig) -> Self {
        Self {
            architecture: architecture.into(),
            dataset,
            time_steps: 6,
            mode: "WTL".into(),
            rule: stop(),
            loss: "ce".into(),
            surrogate: "exp".into(),
            lr_weights: 1e-2,
            lr_thresholds: 1e-4,
            lr_leakage: 1e-4,
            weight_decay: 0.0,
            momentum: 0.9,
            threshold_leakage_momentum: false,
            epochs: 20,
            batch_size: 32,
            seed: 0,
            init: "fan-in".into(),
            epsilon: DEFAULT_EPSILON,
            train_limit: None,
            test_limit: None,
            checkpoint: None,
            metrics: None,
            wall_time: true,
            halt_after: None,
        }
    }

    /// Reads a config; relative dataset paths are taken from the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Failure::io(path))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        cfg.dataset.resolve(path.parent().unwrap_or(Path::new("")));
        Ok(cfg)
    }

    pub fn mode(&self) -> Result<SynergyMode> {
        parse_mode(&self.mode)
    }

    pub fn rule(&self) -> Result<TrainRule> {
        parse_rule(&self.rule)
    }

    pub fn loss(&self) -> Result<LossKind> {
        parse_loss(&self.loss)
    }

    pub fn surrogate(&self) -> Result<SurrogateKind> {
        parse_surrogate(&self.surrogate)
    }

    pub fn init(&self) -> Result<InitMode> {
        parse_init(&self.init)
    }

    pub fn classes(&self) -> usize {
        match &self.dataset {
            DatasetConfig::Idx { classes, .. }
            | DatasetConfig::Events { classes, .. }
            | DatasetConfig::Teacher { classes, .. } => *classes,
        }
    }

    pub fn rates(&self) -> LearningRates {
        LearningRates {
            weights: self.lr_weights,
            thresholds: self.lr_thresholds,
            leakage: self.lr_leakage,
        }
    }

    /// Optimizer settings at learning-rate scale `factor`.
    pub fn momentum_config(&self, factor: f64) -> MomentumConfig {
        MomentumConfig {
            update: UpdateConfig {
                rates: self.rates().scaled(factor),
                weight_decay: self.weight_decay,
                epsilon: self.epsilon,
            },
            momentum: self.momentum,
            threshold_leakage_momentum: self.threshold_leakage_momentum,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        self.rule()?;
        self.loss()?;
        self.surrogate()?;
        self.init()?;
        let bad = |m: String| Err(Failure::Usage(m));
        if self.time_steps == 0 {
            return bad("time_steps must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if !(self.weight_decay >= 0.0) {
            return bad(format!(
                "weight_decay {} must be non-negative",
                self.weight_decay
            ));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        let rates = [
            ("lr_weights", self.lr_weights, true),
            (
                "lr_thresholds",
                self.lr_thresholds,
                mode.trains_thresholds(),
            ),
            ("lr_leakage", self.lr_leakage, mode.trains_leakage()),
        ];
        for (name, v, enabled) in rates {
            if !v.is_finite() || v < 0.0 || (enabled && v == 0.0 && name != "lr_weights") {
                return bad(format!(
                    "{name} = {v} must be positive for mode {}",
                    mode.name()
                ));
            }
        }
        if self.classes() == 0 {
            return bad("classes must be at least 1".into());
        }
        Ok(())
    }

    /// SHA-256 over the fields that fix the parameter layout and dynamics:
    /// architecture, time-steps, surrogate, classes and input source kind.
    pub fn digest(&self, input_shape: &[usize]) -> String {
        let key = serde_json::json!({
            "architecture": self.architecture,
            "input_shape": input_shape,
            "classes": self.classes(),
            "time_steps": self.time_steps,
            "surrogate": self.surrogate().map(|s| format!("{s:?}")).unwrap_or_default(),
        });
        let hash = Sha256::digest(key.to_string().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Seed after the environment override.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|_| {
                Failure::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })?;
        }
        Ok(())
    }
}

/// Command-line values that replace config fields of the same name.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    #[arg(long)]
    pub architecture: Option<String>,
    #[arg(long)]
    pub time_steps: Option<usize>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub surrogate: Option<String>,
    #[arg(long)]
    pub lr_weights: Option<f64>,
    #[arg(long)]
    pub lr_thresholds: Option<f64>,
    #[arg(long)]
    pub lr_leakage: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub threshold_leakage_momentum: Option<bool>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub train_limit: Option<usize>,
    #[arg(long)]
    pub test_limit: Option<usize>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long)]
    pub wall_time: Option<bool>,
    #[arg(long)]
    pub halt_after: Option<usize>,
}

impl Overrides {
    pub fn apply(self, c: &mut TrainConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { c.$f = v; })*};
        }
        set!(
            architecture,
            time_steps,
            mode,
            rule,
            loss,
            surrogate,
            lr_weights,
            lr_thresholds,
            lr_leakage,
            weight_decay,
            momentum,
            threshold_leakage_momentum,
            epochs,
            batch_size,
            seed,
            init,
            epsilon,
            wall_time
        );
        if self.train_limit.is_some() {
            c.train_limit = self.train_limit;
        }
        if self.test_limit.is_some() {
            c.test_limit = self.test_limit;
        }
        if self.checkpoint.is_some() {
            c.checkpoint = self.checkpoint;
        }
        if self.metrics.is_some() {
            c.metrics = self.metrics;
        }
        if self.halt_after.is_some() {
            c.halt_after = self.halt_after;
        }
    }
}
