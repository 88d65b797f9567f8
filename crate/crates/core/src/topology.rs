//! Network architecture, learnable parameters, and the per-time-step forward
//! sweep.
//!
//! Architectures are written as dash-separated tokens:
//!
//! * `<n>C<k>` – convolution with `n` output channels, `k×k` kernel, stride 1
//!   and padding `⌊k/2⌋`;
//! * `P<w>` – average pooling over non-overlapping `w×w` windows;
//! * `<n>` – dense layer of `n` neurons. A flatten step is inserted before the
//!   first dense layer that follows a feature map.
//!
//! The last token must be a dense layer with one neuron per class, e.g.
//! `16C5-P2-32C5-P2-256-10` on a `1×28×28` input.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{shape_err, Error, Result};
use crate::lif::{lif_step, LifState, SpikeMode, SurrogateKind};
use crate::numerics::{matvec_acc, AvgPoolShape, Conv2dShape, Tensor};

pub const INITIAL_THRESHOLD: f64 = 1.0;

/// `e^(−1)`
pub fn initial_leakage() -> f64 {
    libm::exp(-1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdSharing {
    PerNeuron,
    PerChannel,
}

/// One stage of the feedforward network. Dense and convolutional layers are
/// spiking (they own LIF neurons and parameters); pooling and flatten pass
/// values through.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize },
    Conv(Conv2dShape),
    AvgPool(AvgPoolShape),
    Flatten { input_shape: [usize; 3] },
}

impl LayerSpec {
    pub fn is_spiking(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. } | LayerSpec::Conv(_))
    }

    pub fn input_shape(&self) -> Vec<usize> {
        match self {
            LayerSpec::Dense { inputs, .. } => vec![*inputs],
            LayerSpec::Conv(g) => g.input_shape().to_vec(),
            LayerSpec::AvgPool(p) => vec![p.channels, p.height, p.width],
            LayerSpec::Flatten { input_shape } => input_shape.to_vec(),
        }
    }

    pub fn output_shape(&self) -> Vec<usize> {
        match self {
            LayerSpec::Dense { outputs, .. } => vec![*outputs],
            LayerSpec::Conv(g) => g.output_shape().to_vec(),
            LayerSpec::AvgPool(p) => p.output_shape().to_vec(),
            LayerSpec::Flatten { input_shape } => vec![input_shape.iter().product()],
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_shape().iter().product()
    }

    /// Output units (neurons for spiking layers).
    pub fn output_len(&self) -> usize {
        self.output_shape().iter().product()
    }

    pub fn threshold_sharing(&self) -> Option<ThresholdSharing> {
        match self {
            LayerSpec::Dense { .. } => Some(ThresholdSharing::PerNeuron),
            LayerSpec::Conv(_) => Some(ThresholdSharing::PerChannel),
            _ => None,
        }
    }

    pub fn threshold_count(&self) -> usize {
        match self {
            LayerSpec::Dense { outputs, .. } => *outputs,
            LayerSpec::Conv(g) => g.out_channels,
            _ => 0,
        }
    }

    pub fn weight_shape(&self) -> Vec<usize> {
        match self {
            LayerSpec::Dense { inputs, outputs } => vec![*outputs, *inputs],
            LayerSpec::Conv(g) => g.kernel_shape().to_vec(),
            _ => Vec::new(),
        }
    }

    pub fn weight_len(&self) -> usize {
        if self.is_spiking() {
            self.weight_shape().iter().product()
        } else {
            0
        }
    }

    /// Synapses converging on one neuron.
    pub fn synaptic_fan_in(&self) -> usize {
        match self {
            LayerSpec::Dense { inputs, .. } => *inputs,
            LayerSpec::Conv(g) => g.in_channels * g.kernel * g.kernel,
            _ => 0,
        }
    }
}

/// Static description of a network: layers, presentation length, surrogate
/// and class count.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub time_steps: usize,
    pub surrogate: SurrogateKind,
    pub classes: usize,
}

impl NetworkSpec {
    pub fn new(
        input_shape: Vec<usize>,
        layers: Vec<LayerSpec>,
        time_steps: usize,
        surrogate: SurrogateKind,
        classes: usize,
    ) -> Result<Self> {
        if time_steps == 0 {
            return Err(Error::Parameter("time_steps must be at least 1".into()));
        }
        let mut shape = input_shape.clone();
        for (l, layer) in layers.iter().enumerate() {
            let expected = layer.input_shape();
            let compatible = expected == shape
                || (matches!(layer, LayerSpec::Dense { .. })
                    && expected[0] == shape.iter().product::<usize>());
            if !compatible {
                return Err(shape_err(
                    "NetworkSpec layer chain",
                    &shape,
                    alloc::format!("layer {l} input {expected:?}"),
                ));
            }
            shape = layer.output_shape();
        }
        let last = layers
            .iter()
            .rposition(LayerSpec::is_spiking)
            .ok_or_else(|| Error::Parameter("network needs at least one spiking layer".into()))?;
        if last + 1 != layers.len() || layers[last].output_len() != classes {
            return Err(Error::Parameter(alloc::format!(
                "final layer must be spiking with {classes} outputs"
            )));
        }
        Ok(Self {
            input_shape,
            layers,
            time_steps,
            surrogate,
            classes,
        })
    }

    pub fn parse(
        arch: &str,
        input_shape: &[usize],
        classes: usize,
        time_steps: usize,
        surrogate: SurrogateKind,
    ) -> Result<Self> {
        let layers = parse_architecture(arch, input_shape, classes)?;
        Self::new(input_shape.to_vec(), layers, time_steps, surrogate, classes)
    }

    /// Number of spiking layers.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| l.is_spiking()).count()
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn output_layer(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.is_spiking())
            .map(|l| l.weight_len() + l.threshold_count() + 1)
            .sum()
    }
}

fn parse_err(position: usize, token: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        position,
        token: token.to_string(),
        reason: reason.into(),
    }
}

fn parse_count(s: &str, position: usize, token: &str) -> Result<usize> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(parse_err(
            position,
            token,
            alloc::format!("expected a positive integer, found {s:?}"),
        )),
    }
}

/// Parses an architecture string into a shape-checked layer list. Token
/// positions in errors are 1-based.
pub fn parse_architecture(
    arch: &str,
    input_shape: &[usize],
    classes: usize,
) -> Result<Vec<LayerSpec>> {
    if arch.trim().is_empty() {
        return Err(parse_err(0, arch, "empty architecture"));
    }
    let mut shape = input_shape.to_vec();
    let mut layers = Vec::new();
    for (i, raw) in arch.trim().split('-').enumerate() {
        let pos = i + 1;
        let tok = raw.trim();
        if tok.is_empty() {
            return Err(parse_err(pos, tok, "empty token"));
        }
        if let Some(w) = tok.strip_prefix('P') {
            let window = parse_count(w, pos, tok)?;
            let [c, h, wd] = <[usize; 3]>::try_from(shape.as_slice())
                .map_err(|_| parse_err(pos, tok, "pooling needs a C×H×W feature map"))?;
            let pool = AvgPoolShape::new(c, h, wd, window).map_err(|_| {
                parse_err(
                    pos,
                    tok,
                    alloc::format!("{h}×{wd} not divisible by window {window}"),
                )
            })?;
            shape = pool.output_shape().to_vec();
            layers.push(LayerSpec::AvgPool(pool));
        } else if let Some((n, k)) = tok.split_once('C') {
            let channels = parse_count(n, pos, tok)?;
            let kernel = parse_count(k, pos, tok)?;
            let [c, h, w] = <[usize; 3]>::try_from(shape.as_slice())
                .map_err(|_| parse_err(pos, tok, "convolution needs a C×H×W feature map"))?;
            let geom = Conv2dShape::new(c, h, w, channels, kernel, 1, kernel / 2)
                .map_err(|e| parse_err(pos, tok, e.to_string()))?;
            shape = geom.output_shape().to_vec();
            layers.push(LayerSpec::Conv(geom));
        } else if tok.bytes().all(|b| b.is_ascii_digit()) {
            let outputs = parse_count(tok, pos, tok)?;
            if let Ok(input_shape) = <[usize; 3]>::try_from(shape.as_slice()) {
                layers.push(LayerSpec::Flatten { input_shape });
            } else if shape.len() != 1 {
                return Err(parse_err(
                    pos,
                    tok,
                    alloc::format!("cannot feed shape {shape:?} to a dense layer"),
                ));
            }
            let inputs = shape.iter().product();
            layers.push(LayerSpec::Dense { inputs, outputs });
            shape = vec![outputs];
        } else {
            return Err(parse_err(pos, tok, "unknown token"));
        }
    }
    let count = arch.trim().split('-').count();
    match layers.last() {
        Some(LayerSpec::Dense { outputs, .. }) if *outputs == classes => Ok(layers),
        _ => Err(parse_err(
            count,
            arch.trim().rsplit('-').next().unwrap_or(""),
            alloc::format!("final layer must be dense with {classes} neurons"),
        )),
    }
}

/// Learnable state of one spiking layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub weights: Tensor,
    pub thresholds: Vec<f64>,
    pub leakage: f64,
}

/// Parameters aligned with [`NetworkSpec::layers`]; `None` for pass-through
/// layers.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<Option<LayerParams>>,
}

impl NetworkParams {
    pub fn check(&self, spec: &NetworkSpec) -> Result<()> {
        if self.layers.len() != spec.layers.len() {
            return Err(shape_err(
                "NetworkParams",
                spec.layers.len(),
                self.layers.len(),
            ));
        }
        for (layer, params) in spec.layers.iter().zip(&self.layers) {
            match (layer.is_spiking(), params) {
                (true, Some(p)) => {
                    if p.weights.shape() != layer.weight_shape().as_slice() {
                        return Err(shape_err(
                            "weights",
                            layer.weight_shape(),
                            p.weights.shape(),
                        ));
                    }
                    if p.thresholds.len() != layer.threshold_count() {
                        return Err(shape_err(
                            "thresholds",
                            layer.threshold_count(),
                            p.thresholds.len(),
                        ));
                    }
                }
                (false, None) => {}
                _ => return Err(Error::Parameter("parameter/layer kind mismatch".into())),
            }
        }
        Ok(())
    }

    pub fn spiking(&self) -> impl Iterator<Item = (usize, &LayerParams)> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_ref().map(|p| (i, p)))
    }

    pub fn is_finite(&self) -> bool {
        self.spiking().all(|(_, p)| {
            p.weights.is_finite()
                && p.thresholds.iter().all(|v| v.is_finite())
                && p.leakage.is_finite()
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitMode {
    /// `σ = √(2 / fan_in)`
    #[default]
    FanInScaled,
    /// Standard Gaussian, `σ = 1`.
    PaperLiteral,
}

/// Gaussian weights, unit thresholds and `e^(−1)` leakages. Deterministic in
/// `seed`.
pub fn init_params(spec: &NetworkSpec, seed: u64, mode: InitMode) -> NetworkParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = spec
        .layers
        .iter()
        .map(|layer| {
            if !layer.is_spiking() {
                return None;
            }
            let sigma = match mode {
                InitMode::FanInScaled => libm::sqrt(2.0 / layer.synaptic_fan_in() as f64),
                InitMode::PaperLiteral => 1.0,
            };
            let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
            let data: Vec<f64> = (0..layer.weight_len())
                .map(|_| normal.sample(&mut rng))
                .collect();
            Some(LayerParams {
                weights: Tensor::new(layer.weight_shape(), data).expect("shape from spec"),
                thresholds: vec![INITIAL_THRESHOLD; layer.threshold_count()],
                leakage: initial_leakage(),
            })
        })
        .collect();
    NetworkParams { layers }
}

/// Reusable buffers for one forward step.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    pub(crate) input: Vec<f64>,
    pub(crate) indices: Vec<usize>,
    pub(crate) cols: Vec<f64>,
}

/// Per-layer dynamic state. Pass-through layers keep their output in
/// `spikes` and leave `potentials` unused.
#[derive(Clone, Debug)]
pub struct NetworkState {
    pub layers: Vec<LifState>,
    pub(crate) scratch: Scratch,
}

impl NetworkState {
    pub fn reset(&mut self) {
        self.layers.iter_mut().for_each(LifState::reset);
    }

    pub fn output(&self) -> &Tensor {
        &self.layers.last().expect("nonempty network").spikes
    }
}

/// Fresh all-zero state for every layer.
pub fn reset_network(spec: &NetworkSpec) -> NetworkState {
    let layers = spec
        .layers
        .iter()
        .map(|l| {
            let shape = l.output_shape();
            if l.is_spiking() {
                LifState::zeros(&shape)
            } else {
                LifState {
                    potentials: Tensor::zeros(&[0]),
                    spikes: Tensor::zeros(&shape),
                }
            }
        })
        .collect();
    NetworkState {
        layers,
        scratch: Scratch::default(),
    }
}

/// Advances one layer by one time-step given its presynaptic output `pre`.
pub fn step_layer(
    layer: &LayerSpec,
    params: Option<&LayerParams>,
    pre: &[f64],
    state: &mut LifState,
    scratch: &mut Scratch,
    surrogate: SurrogateKind,
    mode: SpikeMode,
) -> Result<()> {
    if pre.len() != layer.input_len() {
        return Err(shape_err("step_layer", layer.input_len(), pre.len()));
    }
    let synaptic = |scratch: &mut Scratch, p: &LayerParams| {
        scratch.input.clear();
        scratch.input.resize(layer.output_len(), 0.0);
        match layer {
            LayerSpec::Dense { .. } => {
                matvec_acc(
                    p.weights.data(),
                    pre,
                    &mut scratch.input,
                    &mut scratch.indices,
                );
            }
            LayerSpec::Conv(g) => {
                g.forward_acc(pre, p.weights.data(), &mut scratch.input, &mut scratch.cols)
            }
            _ => unreachable!(),
        }
    };
    match layer {
        LayerSpec::Dense { .. } | LayerSpec::Conv(_) => {
            let p = params
                .ok_or_else(|| Error::Parameter("spiking layer without parameters".into()))?;
            synaptic(scratch, p);
            lif_step(
                state,
                &scratch.input,
                &p.thresholds,
                p.leakage,
                surrogate,
                mode,
            )
        }
        LayerSpec::AvgPool(pool) => {
            pool.forward(pre, state.spikes.data_mut());
            Ok(())
        }
        LayerSpec::Flatten { .. } => {
            state.spikes.data_mut().copy_from_slice(pre);
            Ok(())
        }
    }
}

/// One time-step of the spatial forward sweep through every layer. Returns
/// the output layer's spikes.
pub fn forward_timestep<'a>(
    spec: &NetworkSpec,
    params: &NetworkParams,
    state: &'a mut NetworkState,
    input_frame: &Tensor,
    mode: SpikeMode,
) -> Result<&'a Tensor> {
    if input_frame.len() != spec.input_len() {
        return Err(shape_err(
            "forward_timestep",
            &spec.input_shape,
            input_frame.shape(),
        ));
    }
    let NetworkState { layers, scratch } = state;
    for l in 0..spec.layers.len() {
        let (below, rest) = layers.split_at_mut(l);
        let pre = if l == 0 {
            input_frame.data()
        } else {
            below[l - 1].spikes.data()
        };
        step_layer(
            &spec.layers[l],
            params.layers[l].as_ref(),
            pre,
            &mut rest[0],
            scratch,
            spec.surrogate,
            mode,
        )?;
    }
    Ok(state.output())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_spec(widths: &[usize], t: usize) -> NetworkSpec {
        let layers = widths
            .windows(2)
            .map(|w| LayerSpec::Dense {
                inputs: w[0],
                outputs: w[1],
            })
            .collect();
        NetworkSpec::new(
            vec![widths[0]],
            layers,
            t,
            SurrogateKind::ExpAbs,
            *widths.last().unwrap(),
        )
        .unwrap()
    }

    fn unit_params(spec: &NetworkSpec) -> NetworkParams {
        let mut p = init_params(spec, 0, InitMode::FanInScaled);
        for (_, lp) in p.layers.iter_mut().enumerate() {
            let lp = lp.as_mut().unwrap();
            lp.weights.fill(1.0);
            lp.leakage = 0.5;
        }
        p
    }

    #[test]
    fn parse_conv_pool_dense() {
        let layers = parse_architecture("64C3-P2-10", &[3, 32, 32], 10).unwrap();
        assert_eq!(layers.len(), 4);
        assert_eq!(
            layers[0],
            LayerSpec::Conv(Conv2dShape::new(3, 32, 32, 64, 3, 1, 1).unwrap())
        );
        assert_eq!(
            layers[1],
            LayerSpec::AvgPool(AvgPoolShape::new(64, 32, 32, 2).unwrap())
        );
        assert_eq!(
            layers[2],
            LayerSpec::Flatten {
                input_shape: [64, 16, 16]
            }
        );
        assert_eq!(
            layers[3],
            LayerSpec::Dense {
                inputs: 64 * 16 * 16,
                outputs: 10
            }
        );
    }

    #[test]
    fn parse_single_dense() {
        let layers = parse_architecture("10", &[100], 10).unwrap();
        assert_eq!(
            layers,
            vec![LayerSpec::Dense {
                inputs: 100,
                outputs: 10
            }]
        );
    }

    #[test]
    fn parse_rejects_indivisible_pool() {
        match parse_architecture("64C3-P3", &[3, 32, 32], 10) {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(matches!(
            parse_architecture("64X3-10", &[3, 8, 8], 10),
            Err(Error::Parse { position: 1, .. })
        ));
        assert!(matches!(
            parse_architecture("10-5", &[4], 10),
            Err(Error::Parse { position: 2, .. })
        ));
        assert!(matches!(
            parse_architecture("10-4C3-10", &[3, 8, 8], 10),
            Err(Error::Parse { position: 2, .. })
        ));
        assert!(parse_architecture("", &[4], 2).is_err());
        assert!(parse_architecture("8--2", &[4], 2).is_err());
    }

    #[test]
    fn paper_vgg11_shapes_chain() {
        let arch = "64C3-P2-128C3-P2-256C3-256C3-P2-512C3-512C3-P2-512C3-512C3-P2-4096-4096-10";
        let spec = NetworkSpec::parse(arch, &[3, 32, 32], 10, 6, SurrogateKind::ExpAbs).unwrap();
        assert_eq!(spec.depth(), 11);
    }

    #[test]
    fn init_values() {
        let spec = NetworkSpec::parse("4C3-P2-3", &[1, 4, 4], 3, 2, SurrogateKind::ExpAbs).unwrap();
        let p = init_params(&spec, 7, InitMode::FanInScaled);
        p.check(&spec).unwrap();
        for (_, lp) in p.spiking() {
            assert!(lp.thresholds.iter().all(|t| *t == 1.0));
            assert_eq!(lp.leakage, libm::exp(-1.0));
            assert!((lp.leakage - 0.367879).abs() < 1e-6);
        }
        assert_eq!(p.layers[0].as_ref().unwrap().thresholds.len(), 4);
        assert_eq!(p.layers[3].as_ref().unwrap().thresholds.len(), 3);
        assert_eq!(p, init_params(&spec, 7, InitMode::FanInScaled));
        assert_ne!(p, init_params(&spec, 8, InitMode::FanInScaled));
    }

    #[test]
    fn fan_in_scaled_std() {
        let spec = dense_spec(&[100, 200], 1);
        let p = init_params(&spec, 3, InitMode::FanInScaled);
        let w = p.layers[0].as_ref().unwrap().weights.data();
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let sd = libm::sqrt(w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0));
        assert!(
            (sd - libm::sqrt(0.02)).abs() < 0.1 * libm::sqrt(0.02),
            "sd {sd}"
        );
        let lit = init_params(&spec, 3, InitMode::PaperLiteral);
        let w = lit.layers[0].as_ref().unwrap().weights.data();
        let sd = libm::sqrt(w.iter().map(|v| v * v).sum::<f64>() / n);
        assert!((sd - 1.0).abs() < 0.1);
    }

    #[test]
    fn zero_weights_stay_silent() {
        let spec = NetworkSpec::parse("2C3-P2-3", &[1, 4, 4], 3, 3, SurrogateKind::ExpAbs).unwrap();
        let mut p = init_params(&spec, 1, InitMode::FanInScaled);
        for lp in p.layers.iter_mut().flatten() {
            lp.weights.fill(0.0);
        }
        let mut st = reset_network(&spec);
        for _ in 0..3 {
            forward_timestep(
                &spec,
                &p,
                &mut st,
                &Tensor::filled(&[1, 4, 4], 1.0),
                SpikeMode::Hard,
            )
            .unwrap();
            for l in &st.layers {
                assert!(l.potentials.data().iter().all(|v| *v == 0.0));
                assert!(l.spikes.data().iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn single_dense_steady_spikes() {
        let spec = dense_spec(&[1, 1], 4);
        let p = unit_params(&spec);
        let mut st = reset_network(&spec);
        for _ in 0..4 {
            let out = forward_timestep(
                &spec,
                &p,
                &mut st,
                &Tensor::from_vec(vec![1.0]),
                SpikeMode::Hard,
            )
            .unwrap();
            assert_eq!(out.data(), &[1.0]);
        }
    }

    #[test]
    fn stacked_dense_relay() {
        let spec = dense_spec(&[1, 1, 1], 4);
        let p = unit_params(&spec);
        let mut st = reset_network(&spec);
        for _ in 0..4 {
            forward_timestep(
                &spec,
                &p,
                &mut st,
                &Tensor::from_vec(vec![1.0]),
                SpikeMode::Hard,
            )
            .unwrap();
            assert_eq!(st.layers[0].spikes.data(), &[1.0]);
            assert_eq!(st.layers[1].spikes.data(), &[1.0]);
        }
    }

    #[test]
    fn reset_zeroes_everything() {
        let spec = NetworkSpec::parse("2C3-P2-3", &[1, 4, 4], 3, 3, SurrogateKind::ExpAbs).unwrap();
        let st = reset_network(&spec);
        assert_eq!(st.layers.len(), spec.layers.len());
        assert!(st
            .layers
            .iter()
            .all(|l| l.potentials.data().iter().all(|v| *v == 0.0)));
        assert!(st
            .layers
            .iter()
            .all(|l| l.spikes.data().iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn replay_after_reset_is_identical() {
        let spec =
            NetworkSpec::parse("3C3-P2-8-2", &[1, 6, 6], 2, 5, SurrogateKind::InvQuad).unwrap();
        let p = init_params(&spec, 11, InitMode::FanInScaled);
        let frame = Tensor::new(
            vec![1, 6, 6],
            (0..36).map(|i| ((i * 7) % 11) as f64 / 10.0).collect(),
        )
        .unwrap();
        let raster = |st: &mut NetworkState| {
            st.reset();
            let mut out = Vec::new();
            for _ in 0..5 {
                forward_timestep(&spec, &p, st, &frame, SpikeMode::Hard).unwrap();
                out.extend(st.layers.iter().flat_map(|l| l.spikes.data().to_vec()));
            }
            out
        };
        let mut st = reset_network(&spec);
        let a = raster(&mut st);
        let b = raster(&mut st);
        assert_eq!(a, b);
    }
}
