//! Inference-only accuracy and loss.

use alloc::vec;

use crate::data::{Dataset, Sample};
use crate::error::{shape_err, Error, Result};
use crate::learn::{loss_and_grad, LossKind};
use crate::lif::{argmax_count, SpikeMode};
use crate::topology::{forward_timestep, reset_network, NetworkParams, NetworkSpec, NetworkState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Mean over samples of the loss summed over time-steps.
    pub mean_loss: f64,
    pub samples: usize,
    pub correct: usize,
}

/// Predicted class and total loss of one sample, reusing `state`.
pub fn predict(
    spec: &NetworkSpec,
    params: &NetworkParams,
    state: &mut NetworkState,
    sample: &Sample,
    loss: LossKind,
) -> Result<(usize, f64)> {
    if sample.label >= spec.classes {
        return Err(Error::Target(alloc::format!(
            "label {} with {} classes",
            sample.label,
            spec.classes
        )));
    }
    state.reset();
    let mut counts = vec![0.0; spec.classes];
    let mut grad = vec![0.0; spec.classes];
    let mut total = 0.0;
    for frame in sample.frames.iter() {
        if frame.len() != spec.input_len() {
            return Err(shape_err("predict", &spec.input_shape, frame.shape()));
        }
        let out = forward_timestep(spec, params, state, frame, SpikeMode::Hard)?;
        total += loss_and_grad(out.data(), sample.label, loss, &mut grad);
        counts.iter_mut().zip(out.data()).for_each(|(c, s)| *c += s);
    }
    Ok((argmax_count(&counts).expect("classes > 0"), total))
}

/// Fraction of samples whose most active output neuron matches the label.
pub fn evaluate(
    spec: &NetworkSpec,
    params: &NetworkParams,
    data: &Dataset,
    loss: LossKind,
) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut state = reset_network(spec);
    let (mut correct, mut loss_sum) = (0, 0.0);
    for sample in &data.samples {
        let (pred, l) = predict(spec, params, &mut state, sample, loss)?;
        correct += usize::from(pred == sample.label);
        loss_sum += l;
    }
    Ok(EvalReport {
        accuracy: correct as f64 / data.len() as f64,
        mean_loss: loss_sum / data.len() as f64,
        samples: data.len(),
        correct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthetic_teacher, TeacherConfig};
    use crate::lif::{Frames, SurrogateKind};
    use crate::numerics::Tensor;
    use crate::topology::{init_params, InitMode};
    use rand::{Rng, SeedableRng};

    #[test]
    fn teacher_scores_perfectly() {
        let spec = NetworkSpec::parse("16-2", &[20], 2, 4, SurrogateKind::InvQuad).unwrap();
        let t = synthetic_teacher(
            5,
            &spec,
            &TeacherConfig {
                samples: 150,
                ..Default::default()
            },
        )
        .unwrap();
        let r = evaluate(&spec, &t.teacher, &t.data, LossKind::CrossEntropy).unwrap();
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn random_labels_near_chance() {
        let spec = NetworkSpec::parse("10", &[8], 10, 2, SurrogateKind::ExpAbs).unwrap();
        let params = init_params(&spec, 0, InitMode::FanInScaled);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let samples = (0..1000)
            .map(|_| Sample {
                frames: Frames::Repeated {
                    frame: Tensor::new(vec![8], (0..8).map(|_| rng.random::<f64>()).collect())
                        .unwrap(),
                    steps: 2,
                },
                label: rng.random_range(0..10),
            })
            .collect();
        let r = evaluate(
            &spec,
            &params,
            &Dataset::new(samples),
            LossKind::CrossEntropy,
        )
        .unwrap();
        assert!((r.accuracy - 0.1).abs() <= 0.03, "{}", r.accuracy);
    }

    #[test]
    fn empty() {
        let spec = NetworkSpec::parse("2", &[2], 2, 1, SurrogateKind::ExpAbs).unwrap();
        let params = init_params(&spec, 0, InitMode::FanInScaled);
        assert!(matches!(
            evaluate(&spec, &params, &Dataset::default(), LossKind::CrossEntropy),
            Err(Error::EmptyDataset)
        ));
    }
}
