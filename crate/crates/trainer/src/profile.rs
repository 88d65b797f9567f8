//! Complexity tables and measured retained-state counts.

use std::fmt::Write;

use stop_core::data::Sample;
use stop_core::learn::{complexity_estimate, GradAccumulator, LearnOptions, Learner, LearningRule};
use stop_core::oracle::unrolled_stbp_gradients;
use stop_core::topology::init_params;
use stop_core::{Frames, InitMode, LayerSpec, NetworkSpec, SpikeMode, SurrogateKind, Tensor};

use crate::error::{Failure, Result};

fn dense_arch(layers: usize, width: usize) -> String {
    vec![width.to_string(); layers].join("-")
}

/// Analytic memory and multiply counts for an `L × N × T` dense network,
/// followed by the retained tensors measured on the same network.
pub fn run(layers: usize, width: usize, timesteps: usize) -> Result<String> {
    if layers == 0 || width == 0 || timesteps == 0 {
        return Err(Failure::Usage(
            "layers, width and timesteps must be positive".into(),
        ));
    }
    let mut s = String::new();
    let (l, n, t) = (layers as u64, width as u64, timesteps as u64);
    writeln!(s, "L={layers} N={width} T={timesteps}").unwrap();
    writeln!(s, "{:<10} {:>16} {:>20}", "rule", "memory", "multiplies").unwrap();
    for (name, rule) in [
        ("stbp", LearningRule::Stbp),
        ("stop-w", LearningRule::StopW),
        ("stop-wtl", LearningRule::StopWtl),
    ] {
        let c = complexity_estimate(l, n, t, rule);
        writeln!(s, "{name:<10} {:>16} {:>20}", c.memory, c.multiplies).unwrap();
    }
    let stbp = complexity_estimate(l, n, t, LearningRule::Stbp).memory as f64;
    let stop = complexity_estimate(l, n, t, LearningRule::StopW).memory as f64;
    writeln!(s, "memory ratio stbp/stop-w: {:.3}", stbp / stop).unwrap();

    let spec = NetworkSpec::parse(
        &dense_arch(layers, width),
        &[width],
        width,
        timesteps,
        SurrogateKind::ExpAbs,
    )?;
    let params = init_params(&spec, 0, InitMode::FanInScaled);
    let sample = Sample {
        frames: Frames::Repeated {
            frame: Tensor::filled(&[width], 0.5),
            steps: timesteps,
        },
        label: 0,
    };
    let mut learner = Learner::new(&spec);
    let mut acc = GradAccumulator::new(&spec);
    learner.learn(&spec, &params, &sample, LearnOptions::default(), &mut acc)?;
    writeln!(
        s,
        "measured stop: {} retained tensors, {} scalars",
        learner.retained_time_indexed_tensors(),
        learner.retained_scalars()
    )
    .unwrap();
    let tape = unrolled_stbp_gradients(
        &spec,
        &params,
        &sample,
        true,
        SpikeMode::Hard,
        Default::default(),
    )?;
    writeln!(
        s,
        "measured stbp: tape length {}, {} retained tensors",
        tape.tape_len, tape.retained_time_indexed_tensors
    )
    .unwrap();
    Ok(s)
}

/// One line per layer with shapes and parameter counts.
pub fn describe(spec: &NetworkSpec) -> String {
    let mut s = String::new();
    for (i, layer) in spec.layers.iter().enumerate() {
        let kind = match layer {
            LayerSpec::Dense { .. } => "dense".to_string(),
            LayerSpec::Conv(g) => format!("conv k{} s{} p{}", g.kernel, g.stride, g.padding),
            LayerSpec::AvgPool(p) => format!("avgpool {}", p.window),
            LayerSpec::Flatten { .. } => "flatten".to_string(),
        };
        let params = if layer.is_spiking() {
            layer.weight_len() + layer.threshold_count() + 1
        } else {
            0
        };
        writeln!(
            s,
            "{i:>2} {kind:<18} {:?} -> {:?} params {params}",
            layer.input_shape(),
            layer.output_shape()
        )
        .unwrap();
    }
    writeln!(s, "total parameters {}", spec.parameter_count()).unwrap();
    s
}
