//! Random tiny networks and samples for oracle comparisons.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Sample;
use crate::lif::{Frames, SurrogateKind};
use crate::numerics::AvgPoolShape;
use crate::numerics::{Conv2dShape, Tensor};
use crate::topology::{init_params, InitMode, LayerSpec, NetworkParams, NetworkSpec};

/// Bounds for [`random_case`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseConfig {
    /// Maximum neurons in any spiking layer.
    pub max_width: usize,
    pub min_layers: usize,
    /// Maximum spiking layers.
    pub max_layers: usize,
    pub max_steps: usize,
    /// Probability of a convolutional front end.
    pub conv_probability: f64,
}

impl Default for CaseConfig {
    fn default() -> Self {
        Self {
            max_width: 16,
            min_layers: 2,
            max_layers: 4,
            max_steps: 6,
            conv_probability: 0.5,
        }
    }
}

fn conv_layer(
    rng: &mut ChaCha8Rng,
    c: usize,
    h: usize,
    w: usize,
    max_width: usize,
) -> Option<Conv2dShape> {
    for _ in 0..32 {
        let k = rng.random_range(1..=3.min(h + 1));
        let stride = rng.random_range(1..=2);
        let pad = rng.random_range(0..=k / 2);
        if h + 2 * pad < k
            || w + 2 * pad < k
            || (h + 2 * pad - k) % stride != 0
            || (w + 2 * pad - k) % stride != 0
        {
            continue;
        }
        let (oh, ow) = (
            (h + 2 * pad - k) / stride + 1,
            (w + 2 * pad - k) / stride + 1,
        );
        let max_c = max_width / (oh * ow);
        if max_c == 0 {
            continue;
        }
        let oc = rng.random_range(1..=max_c.min(4));
        return Conv2dShape::new(c, h, w, oc, k, stride, pad).ok();
    }
    None
}

/// A random network, parameters scaled so that neurons fire some of the
/// time, and one random sample (graded or binary frames).
pub fn random_case(seed: u64, cfg: &CaseConfig) -> (NetworkSpec, NetworkParams, Sample) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = rng.random_range(1..=cfg.max_steps);
    let surrogate = if rng.random_bool(0.5) {
        SurrogateKind::ExpAbs
    } else {
        SurrogateKind::InvQuad
    };
    let classes = rng.random_range(2..=cfg.max_width.clamp(2, 5));
    let depth = rng.random_range(cfg.min_layers.max(1)..=cfg.max_layers.max(cfg.min_layers.max(1)));
    let mut layers = Vec::new();
    let input_shape;
    if depth >= 2 && rng.random_bool(cfg.conv_probability) {
        let c = rng.random_range(1..=2);
        let s = rng.random_range(2..=4);
        input_shape = vec![c, s, s];
        let (mut c, mut h, mut w) = (c, s, s);
        let convs = rng.random_range(1..=(depth - 1).min(2));
        for _ in 0..convs {
            let Some(g) = conv_layer(&mut rng, c, h, w, cfg.max_width) else {
                break;
            };
            let out = g.output_shape();
            layers.push(LayerSpec::Conv(g));
            (c, h, w) = (out[0], out[1], out[2]);
            if h % 2 == 0 && w % 2 == 0 && rng.random_bool(0.5) {
                let p = AvgPoolShape::new(c, h, w, 2).expect("even map");
                layers.push(LayerSpec::AvgPool(p));
                (h, w) = (h / 2, w / 2);
            }
        }
        layers.push(LayerSpec::Flatten {
            input_shape: [c, h, w],
        });
    } else {
        input_shape = vec![rng.random_range(1..=cfg.max_width)];
    }
    let mut width: usize = layers
        .last()
        .map(|l: &LayerSpec| l.output_len())
        .unwrap_or(input_shape[0]);
    let convs = layers.iter().filter(|l| l.is_spiking()).count();
    for _ in convs + 1..depth {
        let next = rng.random_range(1..=cfg.max_width);
        layers.push(LayerSpec::Dense {
            inputs: width,
            outputs: next,
        });
        width = next;
    }
    layers.push(LayerSpec::Dense {
        inputs: width,
        outputs: classes,
    });
    let spec = NetworkSpec::new(input_shape, layers, steps, surrogate, classes)
        .expect("consistent random network");

    let mut params = init_params(&spec, rng.random(), InitMode::PaperLiteral);
    for (l, lp) in params.layers.iter_mut().enumerate() {
        let Some(lp) = lp else { continue };
        let gain = rng.random_range(0.8..2.5) / libm::sqrt(spec.layers[l].synaptic_fan_in() as f64);
        lp.weights.data_mut().iter_mut().for_each(|w| *w *= gain);
        lp.thresholds
            .iter_mut()
            .for_each(|th| *th = rng.random_range(0.3..1.5));
        lp.leakage = rng.random_range(0.1..0.95);
    }

    let n = spec.input_len();
    let frames = if rng.random_bool(0.5) {
        let data = (0..n).map(|_| rng.random::<f64>()).collect();
        Frames::Repeated {
            frame: Tensor::new(spec.input_shape.clone(), data).expect("sized"),
            steps,
        }
    } else {
        Frames::Sequence(
            (0..steps)
                .map(|_| {
                    let data = (0..n)
                        .map(|_| if rng.random_bool(0.4) { 1.0 } else { 0.0 })
                        .collect();
                    Tensor::new(spec.input_shape.clone(), data).expect("sized")
                })
                .collect(),
        )
    };
    let label = rng.random_range(0..classes);
    (spec, params, Sample { frames, label })
}
