//! Scalar reference model. Every layer operation here is written as plain
//! index loops over single values so that it shares nothing with the
//! production kernels.

use alloc::vec;
use alloc::vec::Vec;

use crate::learn::LossKind;
use crate::lif::{Frames, SpikeMode, SurrogateKind};
use crate::topology::{LayerSpec, NetworkParams, NetworkSpec};

/// Values of one layer at one time-step.
#[derive(Clone, Debug, PartialEq)]
pub struct TapeLayer {
    pub input: Vec<f64>,
    /// Empty for pass-through layers.
    pub potentials: Vec<f64>,
    pub output: Vec<f64>,
}

/// Full record of every layer's input, membrane potential and output at
/// every time-step.
#[derive(Clone, Debug, PartialEq)]
pub struct UnrolledTape {
    pub steps: Vec<Vec<TapeLayer>>,
}

impl UnrolledTape {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Tensors held by the tape: input, output and (for spiking layers)
    /// potentials per layer per step.
    pub fn retained_time_indexed_tensors(&self) -> usize {
        self.steps
            .iter()
            .flatten()
            .map(|l| 2 + usize::from(!l.potentials.is_empty()))
            .sum()
    }

    pub fn scalars(&self) -> usize {
        self.steps
            .iter()
            .flatten()
            .map(|l| l.input.len() + l.potentials.len() + l.output.len())
            .sum()
    }

    /// Runs the network over `frames`, keeping everything.
    pub fn record(
        spec: &NetworkSpec,
        params: &NetworkParams,
        frames: &Frames,
        mode: SpikeMode,
    ) -> Self {
        let mut steps: Vec<Vec<TapeLayer>> = Vec::with_capacity(frames.len());
        for (t, frame) in frames.iter().enumerate() {
            let mut layers: Vec<TapeLayer> = Vec::with_capacity(spec.layers.len());
            let mut x = frame.data().to_vec();
            for (l, layer) in spec.layers.iter().enumerate() {
                let rec = match params.layers[l].as_ref() {
                    Some(lp) => {
                        let current = synaptic(layer, lp.weights.data(), &x);
                        let group = layer.output_len() / lp.thresholds.len();
                        let mut u = vec![0.0; current.len()];
                        let mut s = vec![0.0; current.len()];
                        for j in 0..u.len() {
                            let theta = lp.thresholds[j / group];
                            let (u_prev, s_prev) = if t == 0 {
                                (0.0, 0.0)
                            } else {
                                (steps[t - 1][l].potentials[j], steps[t - 1][l].output[j])
                            };
                            u[j] = lp.leakage * (u_prev - theta * s_prev) + current[j];
                            s[j] = fire(u[j] - theta, spec.surrogate, mode);
                        }
                        TapeLayer {
                            input: x,
                            potentials: u,
                            output: s,
                        }
                    }
                    None => {
                        let out = pass_forward(layer, &x);
                        TapeLayer {
                            input: x,
                            potentials: Vec::new(),
                            output: out,
                        }
                    }
                };
                x = rec.output.clone();
                layers.push(rec);
            }
            steps.push(layers);
        }
        Self { steps }
    }
}

pub(crate) fn surrogate(x: f64, kind: SurrogateKind) -> f64 {
    match kind {
        SurrogateKind::ExpAbs => libm::exp(-libm::fabs(x)),
        SurrogateKind::InvQuad => {
            let px = core::f64::consts::PI * x;
            1.0 / (1.0 + px * px)
        }
    }
}

pub(crate) fn fire(x: f64, kind: SurrogateKind, mode: SpikeMode) -> f64 {
    match (mode, kind) {
        (SpikeMode::Hard, _) => {
            if x >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
        (SpikeMode::Soft, SurrogateKind::ExpAbs) => {
            if x < 0.0 {
                libm::exp(x)
            } else {
                2.0 - libm::exp(-x)
            }
        }
        (SpikeMode::Soft, SurrogateKind::InvQuad) => {
            0.5 + libm::atan(core::f64::consts::PI * x) / core::f64::consts::PI
        }
    }
}

/// `(E, ∂E/∂s)` for one time-step.
pub(crate) fn loss(spikes: &[f64], label: usize, kind: LossKind) -> (f64, Vec<f64>) {
    match kind {
        LossKind::CrossEntropy => {
            let m = spikes
                .iter()
                .fold(f64::MIN, |a, b| if *b > a { *b } else { a });
            let z: f64 = spikes.iter().map(|s| libm::exp(s - m)).sum();
            let grad = spikes
                .iter()
                .enumerate()
                .map(|(j, s)| libm::exp(s - m) / z - if j == label { 1.0 } else { 0.0 })
                .collect();
            (m + libm::log(z) - spikes[label], grad)
        }
        LossKind::MeanSquared => {
            let grad: Vec<f64> = spikes
                .iter()
                .enumerate()
                .map(|(j, s)| s - if j == label { 1.0 } else { 0.0 })
                .collect();
            (grad.iter().map(|g| 0.5 * g * g).sum(), grad)
        }
    }
}

/// Input position read by output position `o` through kernel tap `k`, if
/// inside the map.
fn tap(o: usize, k: usize, stride: usize, pad: usize, size: usize) -> Option<usize> {
    let i = (o * stride + k) as isize - pad as isize;
    (i >= 0 && (i as usize) < size).then_some(i as usize)
}

/// Calls `f(output index, input index, weight index)` for every synapse.
fn for_each_synapse(layer: &LayerSpec, mut f: impl FnMut(usize, usize, usize)) {
    match layer {
        LayerSpec::Dense { inputs, outputs } => {
            for j in 0..*outputs {
                for i in 0..*inputs {
                    f(j, i, j * inputs + i);
                }
            }
        }
        LayerSpec::Conv(g) => {
            let (c_in, h, w, k) = (g.in_channels, g.in_height, g.in_width, g.kernel);
            let (oh, ow) = (g.out_height(), g.out_width());
            for o in 0..g.out_channels {
                for oy in 0..oh {
                    for ox in 0..ow {
                        for c in 0..c_in {
                            for ky in 0..k {
                                let Some(iy) = tap(oy, ky, g.stride, g.padding, h) else {
                                    continue;
                                };
                                for kx in 0..k {
                                    let Some(ix) = tap(ox, kx, g.stride, g.padding, w) else {
                                        continue;
                                    };
                                    f(
                                        (o * oh + oy) * ow + ox,
                                        (c * h + iy) * w + ix,
                                        ((o * c_in + c) * k + ky) * k + kx,
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        _ => unreachable!("pass-through layer has no synapses"),
    }
}

pub(crate) fn synaptic(layer: &LayerSpec, weights: &[f64], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layer.output_len()];
    for_each_synapse(layer, |j, i, w| out[j] += weights[w] * x[i]);
    out
}

/// Gradient with respect to the synaptic layer's input.
pub(crate) fn synaptic_adjoint(layer: &LayerSpec, weights: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layer.input_len()];
    for_each_synapse(layer, |j, i, w| out[i] += weights[w] * g[j]);
    out
}

/// `dW[w] += g[j]·x[i]` over every synapse.
pub(crate) fn synaptic_weight_grad(layer: &LayerSpec, g: &[f64], x: &[f64], dw: &mut [f64]) {
    for_each_synapse(layer, |j, i, w| dw[w] += g[j] * x[i]);
}

pub(crate) fn pass_forward(layer: &LayerSpec, x: &[f64]) -> Vec<f64> {
    match layer {
        LayerSpec::AvgPool(p) => {
            let (oh, ow) = (p.height / p.window, p.width / p.window);
            let mut out = vec![0.0; p.channels * oh * ow];
            for c in 0..p.channels {
                for y in 0..p.height {
                    for xx in 0..p.width {
                        let o = (c * oh + y / p.window) * ow + xx / p.window;
                        out[o] +=
                            x[(c * p.height + y) * p.width + xx] / (p.window * p.window) as f64;
                    }
                }
            }
            out
        }
        LayerSpec::Flatten { .. } => x.to_vec(),
        _ => unreachable!("spiking layer"),
    }
}

pub(crate) fn pass_adjoint(layer: &LayerSpec, g: &[f64]) -> Vec<f64> {
    match layer {
        LayerSpec::AvgPool(p) => {
            let (oh, ow) = (p.height / p.window, p.width / p.window);
            let mut out = vec![0.0; p.channels * p.height * p.width];
            for c in 0..p.channels {
                for y in 0..p.height {
                    for xx in 0..p.width {
                        let o = (c * oh + y / p.window) * ow + xx / p.window;
                        out[(c * p.height + y) * p.width + xx] =
                            g[o] / (p.window * p.window) as f64;
                    }
                }
            }
            out
        }
        LayerSpec::Flatten { .. } => g.to_vec(),
        _ => unreachable!("spiking layer"),
    }
}
