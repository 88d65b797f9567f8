use alloc::vec;
use alloc::vec::Vec;

use super::tape::{
    loss, pass_adjoint, surrogate, synaptic_adjoint, synaptic_weight_grad, UnrolledTape,
};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::gradients::GradientSet;
use crate::learn::LearnOptions;
use crate::topology::{NetworkParams, NetworkSpec};

/// Largest network the per-scalar evaluation accepts.
pub const NAIVE_PARAM_LIMIT: usize = 10_000;

/// `Σ_{τ=from}^{to} a^{to−τ}·f(τ)` written out term by term.
fn discounted(a: f64, from: usize, to: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut sum = 0.0;
    for tau in from..=to {
        let mut p = 1.0;
        for _ in tau..to {
            p *= a;
        }
        sum += p * f(tau);
    }
    sum
}

/// Evaluates the trace-based gradient sums by definition: every `δ` from the
/// recorded states, every trace from its closed-form discounted sum.
pub fn naive_stop_gradients(
    spec: &NetworkSpec,
    params: &NetworkParams,
    sample: &Sample,
    opts: LearnOptions,
) -> Result<GradientSet> {
    let count = spec.parameter_count();
    if count > NAIVE_PARAM_LIMIT {
        return Err(Error::SizeGuard {
            params: count,
            limit: NAIVE_PARAM_LIMIT,
        });
    }
    if sample.label >= spec.classes {
        return Err(Error::Target(alloc::format!(
            "label {} out of range",
            sample.label
        )));
    }
    let tape = UnrolledTape::record(spec, params, &sample.frames, opts.spike_mode);
    let mut grads = GradientSet::zeros(spec);
    let first = spec.layers.iter().position(|l| l.is_spiking()).unwrap_or(0);
    let top = spec.layers.len() - 1;

    for t in 0..tape.len() {
        let mut g = loss(&tape.steps[t][top].output, sample.label, opts.loss).1;
        for l in (first..=top).rev() {
            let layer = &spec.layers[l];
            let Some(lp) = params.layers[l].as_ref() else {
                g = pass_adjoint(layer, &g);
                continue;
            };
            let a = lp.leakage;
            let group = layer.output_len() / lp.thresholds.len();
            let rec = |tau: usize| &tape.steps[tau][l];
            let delta: Vec<f64> = (0..g.len())
                .map(|j| {
                    g[j] * surrogate(
                        rec(t).potentials[j] - lp.thresholds[j / group],
                        spec.surrogate,
                    )
                })
                .collect();

            let w_trace: Vec<f64> = (0..layer.input_len())
                .map(|i| discounted(a, 0, t, |tau| rec(tau).input[i]))
                .collect();
            let out = grads.layers[l].as_mut().expect("spiking");
            synaptic_weight_grad(layer, &delta, &w_trace, &mut out.weights);

            for j in 0..delta.len() {
                let theta = lp.thresholds[j / group];
                if opts.mode.trains_thresholds() {
                    let th_trace = if t == 0 {
                        0.0
                    } else {
                        -a * discounted(a, 0, t - 1, |tau| rec(tau).output[j])
                    };
                    out.thresholds[j] += delta[j] * (th_trace - 1.0);
                }
                if opts.mode.trains_leakage() {
                    let lk_trace = if t == 0 {
                        0.0
                    } else {
                        discounted(a, 0, t - 1, |tau| {
                            rec(tau).potentials[j] - theta * rec(tau).output[j]
                        })
                    };
                    out.leakage[j] += delta[j] * lk_trace;
                }
            }
            g = if l > first {
                synaptic_adjoint(layer, lp.weights.data(), &delta)
            } else {
                vec![]
            };
        }
    }
    Ok(grads)
}
