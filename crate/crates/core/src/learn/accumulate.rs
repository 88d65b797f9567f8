use alloc::vec::Vec;

use super::traces::LayerTraces;
use super::SynergyMode;
use crate::error::{shape_err, Result};
use crate::gradients::{GradientSet, LayerGradients};
use crate::numerics::outer_acc;
use crate::topology::{LayerSpec, NetworkSpec};

/// Running gradient sums over time-steps and samples.
#[derive(Clone, Debug, PartialEq)]
pub struct GradAccumulator {
    pub grads: GradientSet,
    pub samples: usize,
    pub loss_sum: f64,
    pub correct: usize,
}

impl GradAccumulator {
    pub fn new(spec: &NetworkSpec) -> Self {
        Self {
            grads: GradientSet::zeros(spec),
            samples: 0,
            loss_sum: 0.0,
            correct: 0,
        }
    }

    pub fn clear(&mut self) {
        self.grads.clear();
        self.samples = 0;
        self.loss_sum = 0.0;
        self.correct = 0;
    }

    /// Adds `other` into `self` element by element.
    pub fn merge(&mut self, other: &GradAccumulator) {
        for (a, b) in self.grads.layers.iter_mut().zip(&other.grads.layers) {
            if let (Some(a), Some(b)) = (a, b) {
                add(&mut a.weights, &b.weights);
                add(&mut a.thresholds, &b.thresholds);
                add(&mut a.leakage, &b.leakage);
            }
        }
        self.samples += other.samples;
        self.loss_sum += other.loss_sum;
        self.correct += other.correct;
    }
}

fn add(a: &mut [f64], b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
}

/// Adds one time-step's contribution of a spiking layer:
/// `Δw += δ ⊗ w̃`, `Δθ += δ·(θ̃ − 1)`, `Δα += δ·α̃`, gated by `mode`.
pub fn accumulate_gradients(
    layer: &LayerSpec,
    grads: &mut LayerGradients,
    delta: &[f64],
    traces: &LayerTraces,
    mode: SynergyMode,
    cols: &mut Vec<f64>,
) -> Result<()> {
    let n = layer.output_len();
    if delta.len() != n || traces.threshold.len() != n || traces.weight.len() != layer.input_len() {
        return Err(shape_err("accumulate_gradients", n, delta.len()));
    }
    match layer {
        LayerSpec::Dense { .. } => outer_acc(delta, &traces.weight, &mut grads.weights),
        LayerSpec::Conv(g) => g.weight_grad_acc(&traces.weight, delta, &mut grads.weights, cols),
        _ => return Err(shape_err("accumulate_gradients", "spiking layer", layer)),
    }
    if mode.trains_thresholds() {
        for ((acc, d), tr) in grads
            .thresholds
            .iter_mut()
            .zip(delta)
            .zip(&traces.threshold)
        {
            *acc += d * (tr - 1.0);
        }
    }
    if mode.trains_leakage() {
        for ((acc, d), tr) in grads.leakage.iter_mut().zip(delta).zip(&traces.leakage) {
            *acc += d * tr;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single() -> (LayerSpec, LayerGradients, LayerTraces) {
        let layer = LayerSpec::Dense {
            inputs: 1,
            outputs: 1,
        };
        let g = LayerGradients::zeros(&layer);
        let tr = LayerTraces {
            weight: vec![1.5],
            threshold: vec![0.0],
            leakage: vec![0.25],
        };
        (layer, g, tr)
    }

    #[test]
    fn products() {
        let (layer, mut g, tr) = single();
        accumulate_gradients(
            &layer,
            &mut g,
            &[0.1],
            &tr,
            SynergyMode::WTL,
            &mut Vec::new(),
        )
        .unwrap();
        assert!((g.weights[0] - 0.15).abs() < 1e-16);
        assert_eq!(g.thresholds[0], -0.1);
        assert_eq!(g.leakage[0], 0.025);
    }

    #[test]
    fn weight_mode_gates() {
        let (layer, mut g, tr) = single();
        accumulate_gradients(&layer, &mut g, &[0.1], &tr, SynergyMode::W, &mut Vec::new()).unwrap();
        assert_eq!(g.thresholds[0], 0.0);
        assert_eq!(g.leakage[0], 0.0);
        let (layer, mut g, tr) = single();
        accumulate_gradients(
            &layer,
            &mut g,
            &[0.1],
            &tr,
            SynergyMode::WT,
            &mut Vec::new(),
        )
        .unwrap();
        assert_eq!(g.leakage[0], 0.0);
        assert_ne!(g.thresholds[0], 0.0);
        let (layer, mut g, tr) = single();
        accumulate_gradients(
            &layer,
            &mut g,
            &[0.1],
            &tr,
            SynergyMode::WL,
            &mut Vec::new(),
        )
        .unwrap();
        assert_eq!(g.thresholds[0], 0.0);
        assert_ne!(g.leakage[0], 0.0);
    }

    #[test]
    fn shape_mismatch() {
        let (layer, mut g, tr) = single();
        assert!(accumulate_gradients(
            &layer,
            &mut g,
            &[0.1, 0.2],
            &tr,
            SynergyMode::W,
            &mut Vec::new()
        )
        .is_err());
    }
}
