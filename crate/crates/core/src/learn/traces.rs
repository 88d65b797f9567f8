//! Eligibility traces carried forward in time.
//!
//! Each trace is the derivative of a membrane potential with respect to one
//! parameter, with the surrogate-induced reset term dropped:
//!
//! * weights: `w̃[t] = α·w̃[t−1] + s_pre[t]`, one per presynaptic unit and
//!   shared by every postsynaptic neuron;
//! * thresholds: `θ̃[t] = α·(θ̃[t−1] − s[t−1])`;
//! * leakage: `α̃[t] = α·α̃[t−1] + (U[t−1] − θ·s[t−1])`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Result};
use crate::lif::threshold_group;
use crate::topology::NetworkSpec;

pub fn update_weight_traces(traces: &mut [f64], presynaptic: &[f64], leakage: f64) -> Result<()> {
    if traces.len() != presynaptic.len() {
        return Err(shape_err(
            "update_weight_traces",
            traces.len(),
            presynaptic.len(),
        ));
    }
    for (tr, s) in traces.iter_mut().zip(presynaptic) {
        *tr = leakage * *tr + s;
    }
    Ok(())
}

/// `previous_spikes` are the layer's own spikes from the previous step.
pub fn update_threshold_traces(
    traces: &mut [f64],
    previous_spikes: &[f64],
    leakage: f64,
) -> Result<()> {
    if traces.len() != previous_spikes.len() {
        return Err(shape_err(
            "update_threshold_traces",
            traces.len(),
            previous_spikes.len(),
        ));
    }
    for (tr, s) in traces.iter_mut().zip(previous_spikes) {
        *tr = leakage * (*tr - s);
    }
    Ok(())
}

/// `previous_potentials`/`previous_spikes` are the layer's state from the
/// previous step; `thresholds` may be shared per channel.
pub fn update_leakage_traces(
    traces: &mut [f64],
    previous_potentials: &[f64],
    previous_spikes: &[f64],
    thresholds: &[f64],
    leakage: f64,
) -> Result<()> {
    let n = traces.len();
    if previous_potentials.len() != n || previous_spikes.len() != n {
        return Err(shape_err(
            "update_leakage_traces",
            n,
            (previous_potentials.len(), previous_spikes.len()),
        ));
    }
    let group = threshold_group(n, thresholds.len())?;
    for (j, tr) in traces.iter_mut().enumerate() {
        let residual = previous_potentials[j] - thresholds[j / group] * previous_spikes[j];
        *tr = leakage * *tr + residual;
    }
    Ok(())
}

/// Traces of one spiking layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerTraces {
    /// One per presynaptic unit (the layer's input feature map).
    pub weight: Vec<f64>,
    /// One per neuron.
    pub threshold: Vec<f64>,
    /// One per neuron.
    pub leakage: Vec<f64>,
}

/// Traces for every spiking layer, aligned with [`NetworkSpec::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSet {
    pub layers: Vec<Option<LayerTraces>>,
}

impl TraceSet {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let layers = spec
            .layers
            .iter()
            .map(|l| {
                l.is_spiking().then(|| LayerTraces {
                    weight: vec![0.0; l.input_len()],
                    threshold: vec![0.0; l.output_len()],
                    leakage: vec![0.0; l.output_len()],
                })
            })
            .collect();
        Self { layers }
    }

    pub fn reset(&mut self) {
        for t in self.layers.iter_mut().flatten() {
            t.weight.iter_mut().for_each(|v| *v = 0.0);
            t.threshold.iter_mut().for_each(|v| *v = 0.0);
            t.leakage.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn buffer_count(&self) -> usize {
        self.layers.iter().flatten().count() * 3
    }
}
