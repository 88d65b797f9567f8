//! The epoch loop: cosine-annealed momentum descent over shuffled batches.

use std::path::Path;
use std::time::Instant;

use stop_core::data::Sample;
use stop_core::data::{synthetic_teacher, Dataset, TeacherConfig};
use stop_core::eval::{evaluate, predict};
use stop_core::learn::{GradAccumulator, LearnOptions, Learner, LossKind};
use stop_core::optim::{cosine_lr, momentum_step, OptimizerState};
use stop_core::oracle::unrolled_stbp_gradients;
use stop_core::topology::init_params;
use stop_core::topology::NetworkState;
use stop_core::{NetworkParams, NetworkSpec, SpikeMode};

use crate::checkpoint::Checkpoint;
use crate::config::{DatasetConfig, TrainConfig, TrainRule};
use crate::error::{Failure, Result};
use crate::events::load_event_dataset;
use crate::idx::load_images;
use crate::metrics::{write_metrics, EpochMetrics};

/// Training and test samples with their common frame shape.
#[derive(Clone, Debug)]
pub struct TaskData {
    pub train: Dataset,
    pub test: Option<Dataset>,
    pub input_shape: Vec<usize>,
}

pub fn build_spec(cfg: &TrainConfig, input_shape: &[usize]) -> Result<NetworkSpec> {
    Ok(NetworkSpec::parse(
        &cfg.architecture,
        input_shape,
        cfg.classes(),
        cfg.time_steps,
        cfg.surrogate()?,
    )?)
}

pub fn load_task(cfg: &TrainConfig) -> Result<TaskData> {
    let t = cfg.time_steps;
    match &cfg.dataset {
        DatasetConfig::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            ..
        } => {
            let (train, shape) = load_images(train_images, train_labels, t, cfg.train_limit)?;
            let (test, test_shape) = load_images(test_images, test_labels, t, cfg.test_limit)?;
            if shape != test_shape {
                return Err(Failure::Data(format!(
                    "train images {shape:?} but test images {test_shape:?}"
                )));
            }
            Ok(TaskData {
                train,
                test: Some(test),
                input_shape: shape,
            })
        }
        DatasetConfig::Events { train, test, .. } => {
            let (train, shape) = load_event_dataset(train, t, cfg.train_limit)?;
            let (test, test_shape) = load_event_dataset(test, t, cfg.test_limit)?;
            if shape != test_shape {
                return Err(Failure::Data(format!(
                    "train frames {shape:?} but test frames {test_shape:?}"
                )));
            }
            Ok(TaskData {
                train,
                test: Some(test),
                input_shape: shape,
            })
        }
        DatasetConfig::Teacher {
            input_len,
            samples,
            test_samples,
            seed,
            margin,
            ..
        } => {
            let shape = vec![*input_len];
            let spec = build_spec(cfg, &shape)?;
            let mut gen = TeacherConfig {
                samples: samples + test_samples,
                ..Default::default()
            };
            if let Some(m) = margin {
                gen.min_margin = *m;
            }
            let data = synthetic_teacher(*seed, &spec, &gen)?.data;
            let (train, test) = data.split_at(*samples);
            Ok(TaskData {
                train,
                test: (!test.is_empty()).then_some(test),
                input_shape: shape,
            })
        }
    }
}

/// Shuffle seed of an epoch, distinct per epoch and run seed.
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed
        ^ (epoch as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
    pub optimizer: OptimizerState,
    pub metrics: Vec<EpochMetrics>,
}

/// Adds the unrolled reverse-mode gradient of one sample to `acc`.
fn stbp_learn(
    spec: &NetworkSpec,
    params: &NetworkParams,
    state: &mut NetworkState,
    sample: &Sample,
    loss: LossKind,
    acc: &mut GradAccumulator,
) -> Result<()> {
    let out = unrolled_stbp_gradients(spec, params, sample, true, SpikeMode::Hard, loss)?;
    for (a, b) in acc.grads.layers.iter_mut().zip(&out.grads.layers) {
        if let (Some(a), Some(b)) = (a, b) {
            a.weights
                .iter_mut()
                .zip(&b.weights)
                .for_each(|(x, y)| *x += y);
            a.thresholds
                .iter_mut()
                .zip(&b.thresholds)
                .for_each(|(x, y)| *x += y);
            a.leakage
                .iter_mut()
                .zip(&b.leakage)
                .for_each(|(x, y)| *x += y);
        }
    }
    let (prediction, _) = predict(spec, params, state, sample, loss)?;
    acc.samples += 1;
    acc.loss_sum += out.loss;
    acc.correct += usize::from(prediction == sample.label);
    Ok(())
}

fn layer_summary(params: &NetworkParams) -> (Vec<f64>, Vec<f64>) {
    params
        .spiking()
        .map(|(_, p)| {
            (
                p.thresholds.iter().sum::<f64>() / p.thresholds.len() as f64,
                p.leakage,
            )
        })
        .unzip()
}

/// Runs the remaining epochs of `cfg`, continuing from `resume` if given.
/// `on_epoch` sees each metrics row as it is produced.
pub fn train(
    cfg: &TrainConfig,
    task: &TaskData,
    resume: Option<Checkpoint>,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let spec = build_spec(cfg, &task.input_shape)?;
    let (mode, loss, rule) = (cfg.mode()?, cfg.loss()?, cfg.rule()?);
    let (mut params, mut optimizer, mut metrics, start) = match resume {
        Some(cp) => {
            cp.ensure_compatible(cfg, &task.input_shape)?;
            (cp.params, cp.optimizer, cp.metrics, cp.epoch)
        }
        None => (
            init_params(&spec, cfg.seed, cfg.init()?),
            OptimizerState::new(&spec),
            Vec::new(),
            0,
        ),
    };
    if task.train.is_empty() {
        return Err(Failure::Data("training set is empty".into()));
    }
    let opts = LearnOptions {
        mode,
        loss,
        spike_mode: SpikeMode::Hard,
    };
    let mut learner = Learner::new(&spec);
    let mut acc = GradAccumulator::new(&spec);
    let mut state = stop_core::topology::reset_network(&spec);
    let end = cfg.halt_after.map_or(cfg.epochs, |h| h.min(cfg.epochs));
    for epoch in start..end {
        let clock = Instant::now();
        let factor = cosine_lr(1.0, epoch, cfg.epochs)?;
        let mcfg = cfg.momentum_config(factor);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in task
            .train
            .batches(cfg.batch_size, Some(epoch_seed(cfg.seed, epoch)))?
        {
            acc.clear();
            for sample in &batch {
                match rule {
                    TrainRule::Stop => {
                        learner.learn(&spec, &params, sample, opts, &mut acc)?;
                    }
                    TrainRule::Stbp => {
                        stbp_learn(&spec, &params, &mut state, sample, loss, &mut acc)?
                    }
                }
            }
            if !acc.loss_sum.is_finite() {
                return Err(Failure::Numeric(format!(
                    "non-finite training loss in epoch {epoch}; last finite checkpoint kept"
                )));
            }
            loss_sum += acc.loss_sum;
            correct += acc.correct;
            momentum_step(
                &spec,
                &mut params,
                &mut optimizer,
                &acc,
                &mcfg,
                mode,
                batch.len(),
            )?;
            if !params.is_finite() {
                return Err(Failure::Numeric(format!(
                    "non-finite parameters in epoch {epoch}; last finite checkpoint kept"
                )));
            }
        }
        optimizer.epoch = epoch + 1;
        let test = task
            .test
            .as_ref()
            .map(|d| evaluate(&spec, &params, d, loss))
            .transpose()?;
        let n = task.train.len() as f64;
        let (mean_threshold, leakage) = layer_summary(&params);
        let rates = mcfg.update.rates;
        let row = EpochMetrics {
            epoch,
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            test_loss: test.map(|r| r.mean_loss),
            test_accuracy: test.map(|r| r.accuracy),
            wall_seconds: cfg.wall_time.then(|| clock.elapsed().as_secs_f64()),
            lr_weights: rates.weights,
            lr_thresholds: rates.thresholds,
            lr_leakage: rates.leakage,
            mean_threshold,
            leakage,
        };
        if !row.is_finite() {
            return Err(Failure::Numeric(format!(
                "non-finite metrics in epoch {epoch}; last finite checkpoint kept"
            )));
        }
        on_epoch(&row);
        metrics.push(row);
        persist(cfg, task, epoch + 1, &params, &optimizer, &metrics)?;
    }
    Ok(TrainOutcome {
        spec,
        params,
        optimizer,
        metrics,
    })
}

fn persist(
    cfg: &TrainConfig,
    task: &TaskData,
    epochs_done: usize,
    params: &NetworkParams,
    optimizer: &OptimizerState,
    metrics: &[EpochMetrics],
) -> Result<()> {
    if let Some(path) = &cfg.checkpoint {
        Checkpoint {
            config: cfg.clone(),
            input_shape: task.input_shape.clone(),
            epoch: epochs_done,
            params: params.clone(),
            optimizer: optimizer.clone(),
            metrics: metrics.to_vec(),
        }
        .save(path)?;
    }
    if let Some(path) = &cfg.metrics {
        write_metrics(path, metrics)?;
    }
    Ok(())
}

/// Loads the checkpoint at `path` if it exists.
pub fn resume_from(path: &Path) -> Result<Option<Checkpoint>> {
    if path.exists() {
        Checkpoint::load(path).map(Some)
    } else {
        Ok(None)
    }
}
