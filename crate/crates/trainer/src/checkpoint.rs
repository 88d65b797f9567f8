//! Versioned JSON checkpoints. Every float array is stored as base64 of its
//! little-endian bytes so that reloading is bit-exact.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use stop_core::optim::OptimizerState;
use stop_core::{LayerParams, NetworkParams, NetworkSpec, Tensor};

use crate::config::TrainConfig;
use crate::error::{Failure, Result};
use crate::metrics::{write_atomic, EpochMetrics};

pub const FORMAT: &str = "stop-checkpoint";
pub const VERSION: u32 = 1;

fn encode(v: &[f64]) -> String {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(s: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(s)
        .map_err(|e| Failure::Data(format!("corrupt checkpoint array: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Failure::Data(
            "corrupt checkpoint array: length not a multiple of 8".into(),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StoredLayer {
    weight_shape: Vec<usize>,
    weights: String,
    thresholds: String,
    leakage: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StoredOptimizer {
    epoch: usize,
    weights: Vec<Option<String>>,
    thresholds: Vec<Option<String>>,
    leakage: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Stored {
    format: String,
    version: u32,
    config_digest: String,
    config: TrainConfig,
    input_shape: Vec<usize>,
    /// Epochs completed.
    epoch: usize,
    layers: Vec<Option<StoredLayer>>,
    optimizer: StoredOptimizer,
    metrics: Vec<EpochMetrics>,
}

/// Everything needed to continue or evaluate a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub input_shape: Vec<usize>,
    pub epoch: usize,
    pub params: NetworkParams,
    pub optimizer: OptimizerState,
    pub metrics: Vec<EpochMetrics>,
}

impl Checkpoint {
    pub fn spec(&self) -> Result<NetworkSpec> {
        Ok(NetworkSpec::parse(
            &self.config.architecture,
            &self.input_shape,
            self.config.classes(),
            self.config.time_steps,
            self.config.surrogate()?,
        )?)
    }

    pub fn to_json(&self) -> String {
        let layers = self
            .params
            .layers
            .iter()
            .map(|l| {
                l.as_ref().map(|p| StoredLayer {
                    weight_shape: p.weights.shape().to_vec(),
                    weights: encode(p.weights.data()),
                    thresholds: encode(&p.thresholds),
                    leakage: encode(&[p.leakage]),
                })
            })
            .collect();
        let opt = |v: &[Option<Vec<f64>>]| v.iter().map(|b| b.as_deref().map(encode)).collect();
        let stored = Stored {
            format: FORMAT.into(),
            version: VERSION,
            config_digest: self.config.digest(&self.input_shape),
            config: self.config.clone(),
            input_shape: self.input_shape.clone(),
            epoch: self.epoch,
            layers,
            optimizer: StoredOptimizer {
                epoch: self.optimizer.epoch,
                weights: opt(&self.optimizer.weights),
                thresholds: opt(&self.optimizer.thresholds),
                leakage: encode(&self.optimizer.leakage),
            },
            metrics: self.metrics.clone(),
        };
        serde_json::to_string_pretty(&stored).expect("checkpoint serialize") + "\n"
    }

    /// Parses and checks format, version, digest and parameter shapes.
    pub fn from_json(text: &str) -> Result<Self> {
        let head: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Failure::Data(format!("corrupt checkpoint: {e}")))?;
        if head.get("format").and_then(|v| v.as_str()) != Some(FORMAT) {
            return Err(Failure::Data("not a checkpoint file".into()));
        }
        let version = head.get("version").and_then(|v| v.as_u64());
        if version != Some(VERSION as u64) {
            return Err(Failure::Data(format!(
                "checkpoint version {version:?}, expected {VERSION}"
            )));
        }
        let s: Stored = serde_json::from_value(head)
            .map_err(|e| Failure::Data(format!("corrupt checkpoint: {e}")))?;
        if s.config.digest(&s.input_shape) != s.config_digest {
            return Err(Failure::Data(
                "checkpoint config digest does not match its contents".into(),
            ));
        }
        let mut layers = Vec::with_capacity(s.layers.len());
        for l in s.layers {
            layers.push(match l {
                None => None,
                Some(l) => {
                    let leak = decode(&l.leakage)?;
                    if leak.len() != 1 {
                        return Err(Failure::Data("corrupt checkpoint: leakage".into()));
                    }
                    Some(LayerParams {
                        weights: Tensor::new(l.weight_shape, decode(&l.weights)?)
                            .map_err(|e| Failure::Data(format!("corrupt checkpoint: {e}")))?,
                        thresholds: decode(&l.thresholds)?,
                        leakage: leak[0],
                    })
                }
            });
        }
        let opt = |v: Vec<Option<String>>| -> Result<Vec<Option<Vec<f64>>>> {
            v.into_iter()
                .map(|b| b.map(|b| decode(&b)).transpose())
                .collect()
        };
        let cp = Checkpoint {
            config: s.config,
            input_shape: s.input_shape,
            epoch: s.epoch,
            params: NetworkParams { layers },
            optimizer: OptimizerState {
                weights: opt(s.optimizer.weights)?,
                thresholds: opt(s.optimizer.thresholds)?,
                leakage: decode(&s.optimizer.leakage)?,
                epoch: s.optimizer.epoch,
            },
            metrics: s.metrics,
        };
        let spec = cp.spec()?;
        cp.params
            .check(&spec)
            .map_err(|e| Failure::Data(format!("checkpoint parameters: {e}")))?;
        if !velocity_matches(&cp.optimizer, &spec) {
            return Err(Failure::Data(
                "checkpoint optimizer state does not match the network".into(),
            ));
        }
        Ok(cp)
    }

    /// Refuses a checkpoint whose model-defining fields differ from `config`.
    pub fn ensure_compatible(&self, config: &TrainConfig, input_shape: &[usize]) -> Result<()> {
        if config.digest(input_shape) != self.config.digest(&self.input_shape) {
            return Err(Failure::Data(
                "checkpoint config digest differs from the current configuration".into(),
            ));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Failure::io(path))?;
        Self::from_json(&text).map_err(|e| match e {
            Failure::Data(m) => Failure::Data(format!("{}: {m}", path.display())),
            e => e,
        })
    }
}

fn velocity_matches(o: &OptimizerState, spec: &NetworkSpec) -> bool {
    let fresh = OptimizerState::new(spec);
    let same = |a: &[Option<Vec<f64>>], b: &[Option<Vec<f64>>]| {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| x.as_ref().map(Vec::len) == y.as_ref().map(Vec::len))
    };
    same(&o.weights, &fresh.weights)
        && same(&o.thresholds, &fresh.thresholds)
        && o.leakage.len() == fresh.leakage.len()
}
