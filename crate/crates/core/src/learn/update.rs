use super::accumulate::GradAccumulator;
use super::SynergyMode;
use crate::error::{Error, Result};
use crate::gradients::LayerGradients;
use crate::topology::{LayerParams, LayerSpec, NetworkParams, NetworkSpec};

/// Lower bound applied to thresholds after every update.
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningRates {
    pub weights: f64,
    pub thresholds: f64,
    pub leakage: f64,
}

impl LearningRates {
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            weights: self.weights * factor,
            thresholds: self.thresholds * factor,
            leakage: self.leakage * factor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateConfig {
    pub rates: LearningRates,
    /// L2 coefficient added to the weight gradient only.
    pub weight_decay: f64,
    pub epsilon: f64,
}

/// Batch-mean weight gradient plus weight decay, written into `out`.
pub(crate) fn weight_gradient(
    lp: &LayerParams,
    g: &LayerGradients,
    batch: f64,
    decay: f64,
    out: &mut [f64],
) {
    for ((o, gw), w) in out.iter_mut().zip(&g.weights).zip(lp.weights.data()) {
        *o = gw / batch + decay * w;
    }
}

/// Truncated threshold and leakage steps for one layer. Threshold gradients
/// are averaged over the neurons sharing a threshold; leakage gradients over
/// the whole layer.
pub fn threshold_leakage_step(
    layer: &LayerSpec,
    lp: &mut LayerParams,
    g: &LayerGradients,
    cfg: &UpdateConfig,
    mode: SynergyMode,
    batch: f64,
) {
    if mode.trains_thresholds() && cfg.rates.thresholds != 0.0 {
        let group = layer.output_len() / layer.threshold_count();
        for (theta, chunk) in lp.thresholds.iter_mut().zip(g.thresholds.chunks(group)) {
            let grad = chunk.iter().sum::<f64>() / group as f64 / batch;
            *theta = (*theta - cfg.rates.thresholds * grad).max(cfg.epsilon);
        }
    }
    if mode.trains_leakage() && cfg.rates.leakage != 0.0 {
        let grad = g.leakage.iter().sum::<f64>() / g.leakage.len() as f64 / batch;
        lp.leakage = (lp.leakage - cfg.rates.leakage * grad).clamp(0.0, 1.0);
    }
}

fn check(batch_size: usize, cfg: &UpdateConfig) -> Result<f64> {
    if batch_size == 0 {
        return Err(Error::Parameter("batch size must be positive".into()));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::Parameter(alloc::format!(
            "epsilon must be positive, got {}",
            cfg.epsilon
        )));
    }
    Ok(batch_size as f64)
}

/// Plain gradient-descent step from a completed accumulator:
/// `w ← w − η_w(Δw/B + λw)`, `θ ← max(ε, θ − η_θ·Δθ̄)`,
/// `α ← clamp(α − η_α·Δᾱ, 0, 1)`.
pub fn apply_updates(
    spec: &NetworkSpec,
    params: &mut NetworkParams,
    acc: &GradAccumulator,
    cfg: &UpdateConfig,
    mode: SynergyMode,
    batch_size: usize,
) -> Result<()> {
    let batch = check(batch_size, cfg)?;
    let mut buf = alloc::vec::Vec::new();
    for ((layer, lp), g) in spec
        .layers
        .iter()
        .zip(&mut params.layers)
        .zip(&acc.grads.layers)
    {
        let (Some(lp), Some(g)) = (lp.as_mut(), g.as_ref()) else {
            continue;
        };
        if cfg.rates.weights != 0.0 {
            buf.resize(g.weights.len(), 0.0);
            weight_gradient(lp, g, batch, cfg.weight_decay, &mut buf);
            for (w, d) in lp.weights.data_mut().iter_mut().zip(&buf) {
                *w -= cfg.rates.weights * d;
            }
        }
        threshold_leakage_step(layer, lp, g, cfg, mode, batch);
    }
    Ok(())
}
