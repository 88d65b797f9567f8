use alloc::vec;
use alloc::vec::Vec;

use super::tape::{
    loss, pass_adjoint, surrogate, synaptic_adjoint, synaptic_weight_grad, UnrolledTape,
};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::gradients::GradientSet;
use crate::learn::LossKind;
use crate::lif::SpikeMode;
use crate::topology::{NetworkParams, NetworkSpec};

/// Largest tape (in stored scalars) the reverse sweep will build.
pub const TAPE_SCALAR_LIMIT: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct StbpOutcome {
    /// Per-neuron gradients, same layout as the streaming rule's.
    pub grads: GradientSet,
    /// `Σ_t E[t]`.
    pub loss: f64,
    pub tape_len: usize,
    pub retained_time_indexed_tensors: usize,
}

/// Reverse-mode gradient of the total loss through space and time.
///
/// The reset term `−α·θ·s[t]` feeds `U[t+1]`. With `include_illusory` its
/// dependence on `s[t]` is differentiated, giving the temporal error
/// recurrence `∂/∂U[t] += α·(1 − θ·φ)·∂/∂U[t+1]`; without it the reset is
/// treated as a constant and only `α·∂/∂U[t+1]` flows back.
pub fn unrolled_stbp_gradients(
    spec: &NetworkSpec,
    params: &NetworkParams,
    sample: &Sample,
    include_illusory: bool,
    spike_mode: SpikeMode,
    loss_kind: LossKind,
) -> Result<StbpOutcome> {
    if sample.label >= spec.classes {
        return Err(Error::Target(alloc::format!(
            "label {} out of range",
            sample.label
        )));
    }
    let per_step: usize = spec
        .layers
        .iter()
        .map(|l| l.input_len() + 2 * l.output_len())
        .sum();
    let scalars = per_step * sample.frames.len();
    if scalars > TAPE_SCALAR_LIMIT {
        return Err(Error::SizeGuard {
            params: scalars,
            limit: TAPE_SCALAR_LIMIT,
        });
    }
    let tape = UnrolledTape::record(spec, params, &sample.frames, spike_mode);
    let mut grads = GradientSet::zeros(spec);
    let top = spec.layers.len() - 1;
    // ∂E*/∂U[t+1] per spiking layer
    let mut g_next: Vec<Vec<f64>> = spec
        .layers
        .iter()
        .map(|l| vec![0.0; l.output_len()])
        .collect();
    let mut total = 0.0;

    for t in (0..tape.len()).rev() {
        let (e, mut g) = loss(&tape.steps[t][top].output, sample.label, loss_kind);
        total += e;
        for l in (0..=top).rev() {
            let layer = &spec.layers[l];
            let Some(lp) = params.layers[l].as_ref() else {
                g = pass_adjoint(layer, &g);
                continue;
            };
            let a = lp.leakage;
            let group = layer.output_len() / lp.thresholds.len();
            let rec = &tape.steps[t][l];
            let mut g_u = vec![0.0; g.len()];
            let out = grads.layers[l].as_mut().expect("spiking");
            for j in 0..g.len() {
                let theta = lp.thresholds[j / group];
                let phi = surrogate(rec.potentials[j] - theta, spec.surrogate);
                let g_s = if include_illusory {
                    g[j] - a * theta * g_next[l][j]
                } else {
                    g[j]
                };
                g_u[j] = g_s * phi + a * g_next[l][j];
                let (u_prev, s_prev) = if t == 0 {
                    (0.0, 0.0)
                } else {
                    (
                        tape.steps[t - 1][l].potentials[j],
                        tape.steps[t - 1][l].output[j],
                    )
                };
                out.thresholds[j] += -phi * g_s - a * s_prev * g_u[j];
                out.leakage[j] += g_u[j] * (u_prev - theta * s_prev);
            }
            synaptic_weight_grad(layer, &g_u, &rec.input, &mut out.weights);
            g = synaptic_adjoint(layer, lp.weights.data(), &g_u);
            g_next[l] = g_u;
        }
    }
    Ok(StbpOutcome {
        grads,
        loss: total,
        tape_len: tape.len(),
        retained_time_indexed_tensors: tape.retained_time_indexed_tensors(),
    })
}
