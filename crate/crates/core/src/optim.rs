//! Learning-rate schedule and momentum descent over accumulated gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::learn::weight_gradient;
use crate::learn::{threshold_leakage_step, GradAccumulator, SynergyMode, UpdateConfig};
use crate::topology::{NetworkParams, NetworkSpec};

/// Cosine annealing: `½·η₀·(1 + cos(π·e/E))` for `0 ≤ e < E`.
pub fn cosine_lr(initial: f64, epoch: usize, total: usize) -> Result<f64> {
    if epoch >= total {
        return Err(Error::Schedule { epoch, total });
    }
    let r = 0.5 * initial * (1.0 + libm::cos(core::f64::consts::PI * epoch as f64 / total as f64));
    Ok(r.max(0.0))
}

/// Velocity buffers, one per spiking layer.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub weights: Vec<Option<Vec<f64>>>,
    /// Used only when momentum is extended to thresholds and leakage.
    pub thresholds: Vec<Option<Vec<f64>>>,
    pub leakage: Vec<f64>,
    pub epoch: usize,
}

impl OptimizerState {
    pub fn new(spec: &NetworkSpec) -> Self {
        let per = |f: fn(&crate::topology::LayerSpec) -> usize| {
            spec.layers
                .iter()
                .map(|l| l.is_spiking().then(|| vec![0.0; f(l)]))
                .collect()
        };
        Self {
            weights: per(|l| l.weight_len()),
            thresholds: per(|l| l.threshold_count()),
            leakage: vec![0.0; spec.layers.len()],
            epoch: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumConfig {
    pub update: UpdateConfig,
    pub momentum: f64,
    /// Also run thresholds and leakage through velocity buffers before
    /// truncation. Off by default.
    pub threshold_leakage_momentum: bool,
}

/// `v ← µv + (Δw/B + λw)`, `w ← w − η_w·v`. Thresholds and leakage take the
/// truncated steps of [`crate::learn::apply_updates`] unless
/// `threshold_leakage_momentum` is set.
pub fn momentum_step(
    spec: &NetworkSpec,
    params: &mut NetworkParams,
    state: &mut OptimizerState,
    acc: &GradAccumulator,
    cfg: &MomentumConfig,
    mode: SynergyMode,
    batch_size: usize,
) -> Result<()> {
    if batch_size == 0 {
        return Err(Error::Parameter("batch size must be positive".into()));
    }
    if !(0.0..1.0).contains(&cfg.momentum) {
        return Err(Error::Parameter(alloc::format!(
            "momentum {} outside [0, 1)",
            cfg.momentum
        )));
    }
    if !(cfg.update.epsilon > 0.0) {
        return Err(Error::Parameter(alloc::format!(
            "epsilon must be positive, got {}",
            cfg.update.epsilon
        )));
    }
    let batch = batch_size as f64;
    let mu = cfg.momentum;
    let u = &cfg.update;
    let mut buf = Vec::new();
    for (l, layer) in spec.layers.iter().enumerate() {
        let (Some(lp), Some(g)) = (params.layers[l].as_mut(), acc.grads.layers[l].as_ref()) else {
            continue;
        };
        if u.rates.weights != 0.0 {
            let v = state.weights[l].as_mut().expect("spiking layer");
            buf.resize(g.weights.len(), 0.0);
            weight_gradient(lp, g, batch, u.weight_decay, &mut buf);
            for ((w, v), d) in lp.weights.data_mut().iter_mut().zip(v.iter_mut()).zip(&buf) {
                *v = mu * *v + d;
                *w -= u.rates.weights * *v;
            }
        }
        if !cfg.threshold_leakage_momentum {
            threshold_leakage_step(layer, lp, g, u, mode, batch);
            continue;
        }
        if mode.trains_thresholds() && u.rates.thresholds != 0.0 {
            let group = layer.output_len() / layer.threshold_count();
            let v = state.thresholds[l].as_mut().expect("spiking layer");
            for ((theta, chunk), v) in lp
                .thresholds
                .iter_mut()
                .zip(g.thresholds.chunks(group))
                .zip(v.iter_mut())
            {
                *v = mu * *v + chunk.iter().sum::<f64>() / group as f64 / batch;
                *theta = (*theta - u.rates.thresholds * *v).max(u.epsilon);
            }
        }
        if mode.trains_leakage() && u.rates.leakage != 0.0 {
            let v = &mut state.leakage[l];
            *v = mu * *v + g.leakage.iter().sum::<f64>() / g.leakage.len() as f64 / batch;
            lp.leakage = (lp.leakage - u.rates.leakage * *v).clamp(0.0, 1.0);
        }
    }
    Ok(())
}
