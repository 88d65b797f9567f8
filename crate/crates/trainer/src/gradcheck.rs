//! Command-line gradient self-check against the reference oracles.

use std::fmt;

use stop_core::gradients::{GradientSet, ParamCoord};
use stop_core::learn::{learn_sample, LearnOptions, LossKind, SynergyMode};
use stop_core::oracle::{
    compare_gradients, finite_diff_gradient, naive_stop_gradients, random_case, CaseConfig,
    DEFAULT_STEP,
};
use stop_core::{Frames, SpikeMode};

use crate::error::Result;

pub const NAIVE_TOLERANCE: f64 = 1e-9;
pub const FD_TOLERANCE: f64 = 1e-4;

const MODES: [SynergyMode; 4] = [
    SynergyMode::W,
    SynergyMode::WT,
    SynergyMode::WL,
    SynergyMode::WTL,
];

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub trials: usize,
    /// Largest relative deviation from the per-scalar evaluation.
    pub naive_max_rel: f64,
    pub naive_failures: usize,
    /// Largest relative deviation from central differences (soft spikes, T=1).
    pub fd_max_rel: f64,
    pub fd_failures: usize,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.naive_failures == 0 && self.fd_failures == 0
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "streaming vs per-scalar: max rel {:.3e}, {} of {} nets above {NAIVE_TOLERANCE:e}",
            self.naive_max_rel, self.naive_failures, self.trials
        )?;
        writeln!(
            f,
            "soft T=1 vs finite differences: max rel {:.3e}, {} of {} nets above {FD_TOLERANCE:e}",
            self.fd_max_rel, self.fd_failures, self.trials
        )?;
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

fn negate_thresholds(g: &mut GradientSet) {
    for l in g.layers.iter_mut().flatten() {
        l.thresholds.iter_mut().for_each(|v| *v = -*v);
    }
}

fn single_step(frames: Frames) -> Frames {
    match frames {
        Frames::Repeated { frame, .. } => Frames::Repeated { frame, steps: 1 },
        Frames::Sequence(mut f) => {
            f.truncate(1);
            Frames::Sequence(f)
        }
    }
}

/// Runs `trials` random networks through both checks. With `inject_fault` the
/// streaming threshold gradients are negated before comparison, which the
/// checks must detect.
pub fn run(trials: usize, seed: u64, inject_fault: bool) -> Result<Report> {
    let mut report = Report {
        trials,
        naive_max_rel: 0.0,
        naive_failures: 0,
        fd_max_rel: 0.0,
        fd_failures: 0,
    };
    let cfg = CaseConfig {
        max_width: 16,
        min_layers: 2,
        max_layers: 4,
        max_steps: 6,
        conv_probability: 0.4,
    };
    let small = CaseConfig {
        max_width: 6,
        min_layers: 1,
        max_layers: 3,
        max_steps: 1,
        conv_probability: 0.4,
    };
    for i in 0..trials {
        let s = seed.wrapping_add(i as u64);
        let loss = if i % 2 == 0 {
            LossKind::CrossEntropy
        } else {
            LossKind::MeanSquared
        };

        // threshold-training modes first so short runs still cover them
        let mode = MODES[[3, 1, 0, 2][i % 4]];
        let (spec, params, sample) = random_case(s, &cfg);
        let opts = LearnOptions {
            mode,
            loss,
            spike_mode: SpikeMode::Hard,
        };
        let mut fast = learn_sample(&spec, &params, &sample, opts)?.grads;
        if inject_fault {
            negate_thresholds(&mut fast);
        }
        let slow = naive_stop_gradients(&spec, &params, &sample, opts)?;
        let r = compare_gradients(&fast.flatten(), &slow.flatten())?;
        report.naive_max_rel = report.naive_max_rel.max(r.max_rel);
        report.naive_failures += usize::from(r.max_rel > NAIVE_TOLERANCE);

        let (mut spec, params, mut sample) = random_case(s, &small);
        spec.time_steps = 1;
        sample.frames = single_step(sample.frames);
        let opts = LearnOptions {
            mode: SynergyMode::WTL,
            loss,
            spike_mode: SpikeMode::Soft,
        };
        let mut fast = learn_sample(&spec, &params, &sample, opts)?.grads;
        if inject_fault {
            negate_thresholds(&mut fast);
        }
        let ours = fast.per_parameter(&spec);
        let coords: Vec<ParamCoord> = GradientSet::zeros(&spec)
            .per_parameter(&spec)
            .entries()
            .into_iter()
            .map(|(c, _)| c)
            .collect();
        let fd = coords
            .iter()
            .map(|c| {
                finite_diff_gradient(
                    &spec,
                    &params,
                    &sample,
                    *c,
                    DEFAULT_STEP,
                    SpikeMode::Soft,
                    loss,
                )
            })
            .collect::<stop_core::Result<Vec<f64>>>()?;
        let mine: Vec<f64> = coords.iter().map(|c| ours.get(*c)).collect();
        let r = compare_gradients(&mine, &fd)?;
        report.fd_max_rel = report.fd_max_rel.max(r.max_rel);
        report.fd_failures += usize::from(r.max_rel > FD_TOLERANCE);
    }
    Ok(report)
}
