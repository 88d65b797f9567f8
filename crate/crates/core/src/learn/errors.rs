//! Instantaneous neuron errors `δ[t] = ∂E[t]/∂U[t]`, computed top-down within
//! a single time-step.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::lif::{threshold_group, SurrogateKind};
use crate::numerics::{matvec_transpose_acc, Tensor};
use crate::topology::LayerSpec;

/// Per-time-step output loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// Softmax cross-entropy on the output spike vector.
    #[default]
    CrossEntropy,
    /// Half squared error against the one-hot target.
    MeanSquared,
}

/// Writes `∂E[t]/∂s` into `grad` and returns `E[t]`.
pub fn loss_and_grad(spikes: &[f64], label: usize, loss: LossKind, grad: &mut [f64]) -> f64 {
    debug_assert_eq!(spikes.len(), grad.len());
    match loss {
        LossKind::CrossEntropy => {
            let max = spikes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (g, s) in grad.iter_mut().zip(spikes) {
                *g = libm::exp(s - max);
                z += *g;
            }
            for g in grad.iter_mut() {
                *g /= z;
            }
            grad[label] -= 1.0;
            libm::log(z) + max - spikes[label]
        }
        LossKind::MeanSquared => {
            let mut e = 0.0;
            for (j, (g, s)) in grad.iter_mut().zip(spikes).enumerate() {
                *g = s - if j == label { 1.0 } else { 0.0 };
                e += *g * *g;
            }
            0.5 * e
        }
    }
}

/// Index of the single `1` in a one-hot vector.
pub fn one_hot_label(target: &[f64]) -> Result<usize> {
    let mut label = None;
    for (j, v) in target.iter().enumerate() {
        if *v == 1.0 {
            if label.replace(j).is_some() {
                return Err(Error::Target("more than one active class".into()));
            }
        } else if *v != 0.0 {
            return Err(Error::Target(alloc::format!(
                "entry {j} is {v}, expected 0 or 1"
            )));
        }
    }
    label.ok_or_else(|| Error::Target("no active class".into()))
}

/// `δ_j = (∂E/∂s_j)·φ(U_j − θ_j)` for the output layer.
pub fn output_error(
    spikes: &[f64],
    target: &[f64],
    potentials: &[f64],
    thresholds: &[f64],
    loss: LossKind,
    surrogate: SurrogateKind,
) -> Result<Vec<f64>> {
    let n = spikes.len();
    if target.len() != n || potentials.len() != n {
        return Err(shape_err(
            "output_error",
            n,
            (target.len(), potentials.len()),
        ));
    }
    let label = one_hot_label(target)?;
    let mut delta = vec![0.0; n];
    loss_and_grad(spikes, label, loss, &mut delta);
    apply_surrogate(&mut delta, potentials, thresholds, surrogate)?;
    Ok(delta)
}

/// Multiplies `grad` (with respect to spikes) by `φ(U − θ)` in place.
pub(crate) fn apply_surrogate(
    grad: &mut [f64],
    potentials: &[f64],
    thresholds: &[f64],
    surrogate: SurrogateKind,
) -> Result<()> {
    let group = threshold_group(potentials.len(), thresholds.len())?;
    for (j, g) in grad.iter_mut().enumerate() {
        *g *= surrogate.grad(potentials[j] - thresholds[j / group]);
    }
    Ok(())
}

/// Overwrites `grad_in` with the gradient of the layer's input given the
/// gradient at its output. For spiking layers `grad_out` is the neuron error
/// and the map is the transpose of the synaptic operator; pass-through
/// layers apply their own adjoint with no surrogate factor.
pub(crate) fn propagate_down(
    layer: &LayerSpec,
    weights: Option<&Tensor>,
    grad_out: &[f64],
    grad_in: &mut [f64],
    cols: &mut Vec<f64>,
) {
    match layer {
        LayerSpec::Dense { .. } => {
            grad_in.iter_mut().for_each(|v| *v = 0.0);
            matvec_transpose_acc(weights.expect("dense weights").data(), grad_out, grad_in);
        }
        LayerSpec::Conv(g) => {
            grad_in.iter_mut().for_each(|v| *v = 0.0);
            g.adjoint_acc(
                grad_out,
                weights.expect("conv weights").data(),
                grad_in,
                cols,
            );
        }
        LayerSpec::AvgPool(p) => p.adjoint(grad_out, grad_in),
        LayerSpec::Flatten { .. } => grad_in.copy_from_slice(grad_out),
    }
}

/// `δ^l_j = (Σ_k δ^{l+1}_k w_kj)·φ(U^l_j − θ^l_j)` where `upper` is the
/// spiking layer directly above.
pub fn hidden_error(
    delta_above: &[f64],
    upper: &LayerSpec,
    upper_weights: &Tensor,
    potentials: &[f64],
    thresholds: &[f64],
    surrogate: SurrogateKind,
) -> Result<Vec<f64>> {
    if !upper.is_spiking() {
        return Err(Error::Parameter(
            "hidden_error expects a spiking upper layer".into(),
        ));
    }
    if delta_above.len() != upper.output_len()
        || upper_weights.shape() != upper.weight_shape().as_slice()
    {
        return Err(shape_err(
            "hidden_error",
            upper.output_len(),
            delta_above.len(),
        ));
    }
    if potentials.len() != upper.input_len() {
        return Err(shape_err(
            "hidden_error",
            upper.input_len(),
            potentials.len(),
        ));
    }
    let mut delta = vec![0.0; potentials.len()];
    propagate_down(
        upper,
        Some(upper_weights),
        delta_above,
        &mut delta,
        &mut Vec::new(),
    );
    apply_surrogate(&mut delta, potentials, thresholds, surrogate)?;
    Ok(delta)
}
