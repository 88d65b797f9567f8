use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::lif::{argmax_count, Frames, SpikeMode};
use crate::numerics::Tensor;
use crate::topology::{
    forward_timestep, init_params, reset_network, InitMode, NetworkParams, NetworkSpec,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TeacherConfig {
    pub samples: usize,
    /// Inputs whose top two output spike counts differ by less than this are
    /// redrawn, so labels do not hinge on tie-breaking.
    pub min_margin: f64,
    /// Multiplier on the teacher's initial weights.
    pub weight_gain: f64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            samples: 500,
            min_margin: 1.0,
            weight_gain: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeacherDataset {
    pub data: Dataset,
    pub teacher: NetworkParams,
}

const TEACHER_ATTEMPTS: usize = 100;

/// Spike counts of the output layer over one presentation.
fn output_counts(spec: &NetworkSpec, params: &NetworkParams, frames: &Frames) -> Result<Vec<f64>> {
    let mut state = reset_network(spec);
    let mut counts = alloc::vec![0.0; spec.classes];
    for frame in frames.iter() {
        let out = forward_timestep(spec, params, &mut state, frame, SpikeMode::Hard)?;
        counts.iter_mut().zip(out.data()).for_each(|(c, s)| *c += s);
    }
    Ok(counts)
}

fn margin(counts: &[f64], top: usize) -> f64 {
    let runner_up = counts
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != top)
        .map(|(_, c)| *c)
        .fold(f64::NEG_INFINITY, f64::max);
    counts[top] - runner_up
}

/// Labels uniform random inputs with the decoded prediction of a frozen random
/// network. Teachers are redrawn until every class holds at least 80% of an
/// even share.
pub fn synthetic_teacher(
    seed: u64,
    spec: &NetworkSpec,
    cfg: &TeacherConfig,
) -> Result<TeacherDataset> {
    if cfg.samples == 0 {
        return Err(Error::Generation("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let need = libm::ceil(0.8 * cfg.samples as f64 / spec.classes as f64) as usize;
    for _ in 0..TEACHER_ATTEMPTS {
        let mut teacher = init_params(spec, rng.random(), InitMode::FanInScaled);
        for lp in teacher.layers.iter_mut().flatten() {
            lp.weights
                .data_mut()
                .iter_mut()
                .for_each(|w| *w *= cfg.weight_gain);
        }
        let mut samples = Vec::with_capacity(cfg.samples);
        let mut draws = 0;
        while samples.len() < cfg.samples && draws < 20 * cfg.samples {
            draws += 1;
            let data = (0..spec.input_len()).map(|_| rng.random::<f64>()).collect();
            let frames = Frames::Repeated {
                frame: Tensor::new(spec.input_shape.clone(), data)?,
                steps: spec.time_steps,
            };
            let counts = output_counts(spec, &teacher, &frames)?;
            let label = argmax_count(&counts).expect("classes > 0");
            if spec.classes > 1 && margin(&counts, label) < cfg.min_margin {
                continue;
            }
            samples.push(Sample { frames, label });
        }
        let data = Dataset::new(samples);
        if data.len() == cfg.samples && data.class_counts(spec.classes).iter().all(|c| *c >= need) {
            return Ok(TeacherDataset { data, teacher });
        }
    }
    Err(Error::Generation(alloc::format!(
        "no balanced teacher in {TEACHER_ATTEMPTS} attempts"
    )))
}
