//! Gradient containers shared by the learning rule and the oracles.

use alloc::vec;
use alloc::vec::Vec;

use crate::topology::{LayerSpec, NetworkParams, NetworkSpec};

/// Location of one learnable scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamCoord {
    Weight {
        layer: usize,
        index: usize,
    },
    /// Index of the stored threshold (a channel for convolutional layers).
    Threshold {
        layer: usize,
        index: usize,
    },
    Leakage {
        layer: usize,
    },
}

impl ParamCoord {
    pub fn get(&self, params: &NetworkParams) -> f64 {
        match *self {
            ParamCoord::Weight { layer, index } => params.layers[layer]
                .as_ref()
                .expect("spiking")
                .weights
                .data()[index],
            ParamCoord::Threshold { layer, index } => {
                params.layers[layer].as_ref().expect("spiking").thresholds[index]
            }
            ParamCoord::Leakage { layer } => {
                params.layers[layer].as_ref().expect("spiking").leakage
            }
        }
    }

    pub fn set(&self, params: &mut NetworkParams, value: f64) {
        let lp = match *self {
            ParamCoord::Weight { layer, .. }
            | ParamCoord::Threshold { layer, .. }
            | ParamCoord::Leakage { layer } => params.layers[layer].as_mut().expect("spiking"),
        };
        match *self {
            ParamCoord::Weight { index, .. } => lp.weights.data_mut()[index] = value,
            ParamCoord::Threshold { index, .. } => lp.thresholds[index] = value,
            ParamCoord::Leakage { .. } => lp.leakage = value,
        }
    }
}

/// Gradients of one spiking layer, with threshold and leakage terms kept per
/// neuron (before any sharing is applied).
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub leakage: Vec<f64>,
}

impl LayerGradients {
    pub fn zeros(layer: &LayerSpec) -> Self {
        Self {
            weights: vec![0.0; layer.weight_len()],
            thresholds: vec![0.0; layer.output_len()],
            leakage: vec![0.0; layer.output_len()],
        }
    }

    pub fn clear(&mut self) {
        self.weights.iter_mut().for_each(|v| *v = 0.0);
        self.thresholds.iter_mut().for_each(|v| *v = 0.0);
        self.leakage.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Per-neuron gradients for every spiking layer, aligned with
/// [`NetworkSpec::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<Option<LayerGradients>>,
}

/// Gradients with respect to the stored parameters: thresholds summed over the
/// neurons sharing them, leakage summed over the layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterGradients {
    pub layers: Vec<Option<LayerParameterGradients>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParameterGradients {
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub leakage: f64,
}

impl GradientSet {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        Self {
            layers: spec
                .layers
                .iter()
                .map(|l| l.is_spiking().then(|| LayerGradients::zeros(l)))
                .collect(),
        }
    }

    pub fn clear(&mut self) {
        self.layers
            .iter_mut()
            .flatten()
            .for_each(LayerGradients::clear);
    }

    pub fn per_parameter(&self, spec: &NetworkSpec) -> ParameterGradients {
        let layers = spec
            .layers
            .iter()
            .zip(&self.layers)
            .map(|(layer, g)| {
                let g = g.as_ref()?;
                let group = layer.output_len() / layer.threshold_count();
                Some(LayerParameterGradients {
                    weights: g.weights.clone(),
                    thresholds: g.thresholds.chunks(group).map(|c| c.iter().sum()).collect(),
                    leakage: g.leakage.iter().sum(),
                })
            })
            .collect();
        ParameterGradients { layers }
    }

    /// All per-neuron entries in a fixed order, for element-wise comparison.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flatten()
            .flat_map(|g| {
                g.weights
                    .iter()
                    .chain(&g.thresholds)
                    .chain(&g.leakage)
                    .copied()
            })
            .collect()
    }
}

impl ParameterGradients {
    pub fn entries(&self) -> Vec<(ParamCoord, f64)> {
        let mut out = Vec::new();
        for (layer, g) in self.layers.iter().enumerate() {
            let Some(g) = g else { continue };
            out.extend(
                g.weights
                    .iter()
                    .enumerate()
                    .map(|(index, v)| (ParamCoord::Weight { layer, index }, *v)),
            );
            out.extend(
                g.thresholds
                    .iter()
                    .enumerate()
                    .map(|(index, v)| (ParamCoord::Threshold { layer, index }, *v)),
            );
            out.push((ParamCoord::Leakage { layer }, g.leakage));
        }
        out
    }

    pub fn get(&self, coord: ParamCoord) -> f64 {
        match coord {
            ParamCoord::Weight { layer, index } => {
                self.layers[layer].as_ref().expect("spiking").weights[index]
            }
            ParamCoord::Threshold { layer, index } => {
                self.layers[layer].as_ref().expect("spiking").thresholds[index]
            }
            ParamCoord::Leakage { layer } => self.layers[layer].as_ref().expect("spiking").leakage,
        }
    }
}
