//! The streaming learning rule.
//!
//! Every time-step runs a forward sweep that advances neuron states and
//! eligibility traces, then a backward sweep that computes the
//! instantaneous neuron errors top-down and folds `δ × trace` products into
//! a [`GradAccumulator`]. Nothing indexed by time survives the step.

mod accumulate;
mod complexity;
mod errors;
mod traces;
mod update;

use alloc::vec;
use alloc::vec::Vec;

pub use accumulate::{accumulate_gradients, GradAccumulator};
pub use complexity::{complexity_estimate, Complexity, LearningRule};
pub use errors::{hidden_error, loss_and_grad, one_hot_label, output_error, LossKind};
pub use traces::{
    update_leakage_traces, update_threshold_traces, update_weight_traces, LayerTraces, TraceSet,
};
pub use update::{
    apply_updates, threshold_leakage_step, LearningRates, UpdateConfig, DEFAULT_EPSILON,
};

pub(crate) use update::weight_gradient;

use crate::data::Sample;
use crate::error::{shape_err, Error, Result};
use crate::lif::{argmax_count, SpikeMode};
use crate::topology::{reset_network, step_layer, NetworkParams, NetworkSpec, NetworkState};

/// Which parameter groups learn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SynergyMode {
    W,
    WT,
    WL,
    #[default]
    WTL,
}

impl SynergyMode {
    pub fn trains_thresholds(self) -> bool {
        matches!(self, SynergyMode::WT | SynergyMode::WTL)
    }

    pub fn trains_leakage(self) -> bool {
        matches!(self, SynergyMode::WL | SynergyMode::WTL)
    }

    pub fn name(self) -> &'static str {
        match self {
            SynergyMode::W => "W",
            SynergyMode::WT => "WT",
            SynergyMode::WL => "WL",
            SynergyMode::WTL => "WTL",
        }
    }
}

impl core::str::FromStr for SynergyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "W" => Ok(SynergyMode::W),
            "WT" => Ok(SynergyMode::WT),
            "WL" => Ok(SynergyMode::WL),
            "WTL" => Ok(SynergyMode::WTL),
            _ => Err(Error::Parameter(alloc::format!(
                "unknown synergy mode {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LearnOptions {
    pub mode: SynergyMode,
    pub loss: LossKind,
    pub spike_mode: SpikeMode,
}

/// Outcome of one training sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleReport {
    /// Total loss summed over time-steps.
    pub loss: f64,
    /// Class with the highest output spike count.
    pub prediction: usize,
}

/// Reusable per-sample workspace: neuron states, traces and one gradient
/// buffer per layer output. Sized once for a network.
#[derive(Clone, Debug)]
pub struct Learner {
    state: NetworkState,
    traces: TraceSet,
    /// `∂E[t]/∂(output of layer l)`, turned into `δ` in place for spiking
    /// layers.
    grads: Vec<Vec<f64>>,
    counts: Vec<f64>,
    first_spiking: usize,
    error_evaluations: usize,
}

impl Learner {
    pub fn new(spec: &NetworkSpec) -> Self {
        Self {
            state: reset_network(spec),
            traces: TraceSet::zeros(spec),
            grads: spec
                .layers
                .iter()
                .map(|l| vec![0.0; l.output_len()])
                .collect(),
            counts: vec![0.0; spec.classes],
            first_spiking: spec.layers.iter().position(|l| l.is_spiking()).unwrap_or(0),
            error_evaluations: 0,
        }
    }

    /// Neuron-error evaluations (one per spiking layer per time-step) since
    /// construction.
    pub fn error_evaluations(&self) -> usize {
        self.error_evaluations
    }

    /// Buffers the workspace keeps between time-steps: membrane potentials
    /// and spikes per layer, three trace sets per spiking layer and one error
    /// buffer per layer.
    pub fn retained_time_indexed_tensors(&self) -> usize {
        let state = self
            .state
            .layers
            .iter()
            .filter(|s| !s.potentials.is_empty())
            .count()
            * 2
            + self
                .state
                .layers
                .iter()
                .filter(|s| s.potentials.is_empty())
                .count();
        state + self.traces.buffer_count() + self.grads.len()
    }

    /// Scalars held across time-steps by the workspace.
    pub fn retained_scalars(&self) -> usize {
        let state: usize = self
            .state
            .layers
            .iter()
            .map(|s| s.potentials.len() + s.spikes.len())
            .sum();
        let traces: usize = self
            .traces
            .layers
            .iter()
            .flatten()
            .map(|t| t.weight.len() + t.threshold.len() + t.leakage.len())
            .sum();
        state + traces + self.grads.iter().map(Vec::len).sum::<usize>()
    }

    /// Runs one sample through the network, adding its gradients to `acc`.
    pub fn learn(
        &mut self,
        spec: &NetworkSpec,
        params: &NetworkParams,
        sample: &Sample,
        opts: LearnOptions,
        acc: &mut GradAccumulator,
    ) -> Result<SampleReport> {
        if sample.label >= spec.classes {
            return Err(Error::Target(alloc::format!(
                "label {} with {} classes",
                sample.label,
                spec.classes
            )));
        }
        if sample.frames.is_empty() {
            return Err(Error::Encoding("sample has no frames".into()));
        }
        if acc.grads.layers.len() != spec.layers.len() {
            return Err(shape_err(
                "learn",
                spec.layers.len(),
                acc.grads.layers.len(),
            ));
        }
        self.state.reset();
        self.traces.reset();
        self.counts.iter_mut().for_each(|c| *c = 0.0);
        let mut loss = 0.0;
        for frame in sample.frames.iter() {
            if frame.len() != spec.input_len() {
                return Err(shape_err("learn", &spec.input_shape, frame.shape()));
            }
            self.forward(spec, params, frame.data(), opts.spike_mode)?;
            loss += self.backward(spec, params, sample.label, opts, acc)?;
            for (c, s) in self.counts.iter_mut().zip(self.state.output().data()) {
                *c += s;
            }
        }
        let prediction = argmax_count(&self.counts).expect("classes > 0");
        acc.samples += 1;
        acc.loss_sum += loss;
        acc.correct += usize::from(prediction == sample.label);
        Ok(SampleReport { loss, prediction })
    }

    fn forward(
        &mut self,
        spec: &NetworkSpec,
        params: &NetworkParams,
        input: &[f64],
        mode: SpikeMode,
    ) -> Result<()> {
        let NetworkState { layers, scratch } = &mut self.state;
        for (l, layer) in spec.layers.iter().enumerate() {
            let (below, rest) = layers.split_at_mut(l);
            let pre = if l == 0 {
                input
            } else {
                below[l - 1].spikes.data()
            };
            let state = &mut rest[0];
            let lp = params.layers[l].as_ref();
            if let (Some(lp), Some(tr)) = (lp, self.traces.layers[l].as_mut()) {
                let (u, s) = (state.potentials.data(), state.spikes.data());
                update_threshold_traces(&mut tr.threshold, s, lp.leakage)?;
                update_leakage_traces(&mut tr.leakage, u, s, &lp.thresholds, lp.leakage)?;
                update_weight_traces(&mut tr.weight, pre, lp.leakage)?;
            }
            step_layer(layer, lp, pre, state, scratch, spec.surrogate, mode)?;
        }
        Ok(())
    }

    fn backward(
        &mut self,
        spec: &NetworkSpec,
        params: &NetworkParams,
        label: usize,
        opts: LearnOptions,
        acc: &mut GradAccumulator,
    ) -> Result<f64> {
        let top = spec.layers.len() - 1;
        let loss = loss_and_grad(
            self.state.output().data(),
            label,
            opts.loss,
            &mut self.grads[top],
        );
        for l in (self.first_spiking..=top).rev() {
            let layer = &spec.layers[l];
            let (below, rest) = self.grads.split_at_mut(l);
            let g = &mut rest[0];
            let lp = params.layers[l].as_ref();
            if let Some(lp) = lp {
                errors::apply_surrogate(
                    g,
                    self.state.layers[l].potentials.data(),
                    &lp.thresholds,
                    spec.surrogate,
                )?;
                self.error_evaluations += 1;
                let grads = acc.grads.layers[l]
                    .as_mut()
                    .expect("spiking layer gradients");
                let tr = self.traces.layers[l]
                    .as_ref()
                    .expect("spiking layer traces");
                accumulate_gradients(layer, grads, g, tr, opts.mode, &mut self.state.scratch.cols)?;
            }
            if l > self.first_spiking {
                errors::propagate_down(
                    layer,
                    lp.map(|p| &p.weights),
                    g,
                    &mut below[l - 1],
                    &mut self.state.scratch.cols,
                );
            }
        }
        Ok(loss)
    }
}

/// Gradients of one sample from a fresh workspace.
pub fn learn_sample(
    spec: &NetworkSpec,
    params: &NetworkParams,
    sample: &Sample,
    opts: LearnOptions,
) -> Result<GradAccumulator> {
    let mut acc = GradAccumulator::new(spec);
    Learner::new(spec).learn(spec, params, sample, opts, &mut acc)?;
    Ok(acc)
}
