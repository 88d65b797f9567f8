//! Acceptance suite. Runs every criterion in sequence (timed runs must not
//! share the CPU with each other) and prints one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stop_core::data::{slice_events, Event, EventStream, FrameNormalization, Sample};
use stop_core::gradients::{GradientSet, ParamCoord};
use stop_core::learn::{
    apply_updates, complexity_estimate, learn_sample, GradAccumulator, LearnOptions, Learner,
    LearningRates, LearningRule, LossKind, SynergyMode, UpdateConfig,
};
use stop_core::optim::{momentum_step, MomentumConfig, OptimizerState};
use stop_core::oracle::{
    compare_gradients, finite_diff_gradient, naive_stop_gradients, random_case, relative_error,
    unrolled_stbp_gradients, CaseConfig,
};
use stop_core::topology::init_params;
use stop_core::{Frames, InitMode, LayerSpec, NetworkSpec, SpikeMode, SurrogateKind, Tensor};
use stop_trainer::config::TrainConfig;
use stop_trainer::events::{format_events, load_event_dataset, parse_events};
use stop_trainer::train::{load_task, train};

const MODES: [SynergyMode; 4] = [
    SynergyMode::W,
    SynergyMode::WT,
    SynergyMode::WL,
    SynergyMode::WTL,
];
const FD_STEP: f64 = 1e-5;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn loss_of(i: usize) -> LossKind {
    if i % 2 == 0 {
        LossKind::CrossEntropy
    } else {
        LossKind::MeanSquared
    }
}

fn coords(spec: &NetworkSpec) -> Vec<ParamCoord> {
    GradientSet::zeros(spec)
        .per_parameter(spec)
        .entries()
        .into_iter()
        .map(|(c, _)| c)
        .collect()
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

fn within(clock: Instant, limit: Duration) -> bool {
    clock.elapsed() <= limit
}

fn streaming_vs_naive() -> Verdict {
    let clock = Instant::now();
    let cfg = CaseConfig {
        max_width: 16,
        min_layers: 2,
        max_layers: 4,
        max_steps: 6,
        conv_probability: 0.4,
    };
    let (mut worst, mut convs, mut steps_seen) = (0.0f64, 0, [false; 7]);
    for seed in 0..100u64 {
        let i = seed as usize;
        let (spec, params, sample) = random_case(seed, &cfg);
        convs += usize::from(spec.layers.iter().any(|l| matches!(l, LayerSpec::Conv(_))));
        steps_seen[spec.time_steps] = true;
        let opts = LearnOptions {
            mode: MODES[i % 4],
            loss: loss_of(i / 4),
            spike_mode: SpikeMode::Hard,
        };
        let fast = learn_sample(&spec, &params, &sample, opts).unwrap().grads;
        let slow = naive_stop_gradients(&spec, &params, &sample, opts).unwrap();
        worst = worst.max(
            compare_gradients(&fast.flatten(), &slow.flatten())
                .unwrap()
                .max_rel,
        );
    }
    let all_steps = steps_seen[1..].iter().all(|s| *s);
    let ok = worst <= 1e-9 && convs > 0 && all_steps && within(clock, Duration::from_secs(120));
    verdict(
        ok,
        format!(
            "100 nets ({convs} with conv, T 1..6 covered: {all_steps}), max rel {worst:.2e}, {:.1} s",
            clock.elapsed().as_secs_f64()
        ),
    )
}

fn soft_single_step_vs_fd() -> Verdict {
    let clock = Instant::now();
    let cfg = CaseConfig {
        max_width: 6,
        min_layers: 1,
        max_layers: 3,
        max_steps: 1,
        conv_probability: 0.4,
    };
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let (mut spec, params, mut sample) = random_case(seed, &cfg);
        spec.time_steps = 1;
        sample.frames = single_step(sample.frames);
        let loss = loss_of(seed as usize);
        let opts = LearnOptions {
            mode: SynergyMode::WTL,
            loss,
            spike_mode: SpikeMode::Soft,
        };
        let ours = learn_sample(&spec, &params, &sample, opts)
            .unwrap()
            .grads
            .per_parameter(&spec);
        let cs = coords(&spec);
        let fd: Vec<f64> = cs
            .iter()
            .map(|c| {
                finite_diff_gradient(&spec, &params, &sample, *c, FD_STEP, SpikeMode::Soft, loss)
                    .unwrap()
            })
            .collect();
        let mine: Vec<f64> = cs.iter().map(|c| ours.get(*c)).collect();
        worst = worst.max(compare_gradients(&mine, &fd).unwrap().max_rel);
    }
    let ok = worst <= 1e-4 && within(clock, Duration::from_secs(60));
    verdict(
        ok,
        format!(
            "20 nets, w/θ/α, max rel {worst:.2e}, {:.1} s",
            clock.elapsed().as_secs_f64()
        ),
    )
}

fn output_layer_detached() -> Verdict {
    let clock = Instant::now();
    let cfg = CaseConfig {
        max_width: 8,
        min_layers: 1,
        max_layers: 3,
        max_steps: 6,
        conv_probability: 0.4,
    };
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let (spec, params, sample) = random_case(seed, &cfg);
        let loss = loss_of(seed as usize);
        let opts = LearnOptions {
            mode: SynergyMode::WTL,
            loss,
            spike_mode: SpikeMode::Soft,
        };
        let stop = learn_sample(&spec, &params, &sample, opts).unwrap().grads;
        let stbp = unrolled_stbp_gradients(&spec, &params, &sample, false, SpikeMode::Soft, loss)
            .unwrap()
            .grads;
        let top = spec.output_layer();
        let (a, b) = (
            stop.layers[top].as_ref().unwrap(),
            stbp.layers[top].as_ref().unwrap(),
        );
        for (x, y) in [(&a.weights, &b.weights), (&a.thresholds, &b.thresholds)] {
            worst = worst.max(compare_gradients(x, y).unwrap().max_rel);
        }
    }
    let ok = worst <= 1e-9 && within(clock, Duration::from_secs(60));
    verdict(
        ok,
        format!(
            "50 nets, T ≤ 6, Δw and Δθ max rel {worst:.2e}, {:.1} s",
            clock.elapsed().as_secs_f64()
        ),
    )
}

/// A central difference at `h` carries roundoff of about `ε·|E|/h`, which
/// swamps gradients many orders below the loss. Coordinates missing at the
/// default step are retried once at ten times the step.
fn stbp_vs_fd() -> Verdict {
    let clock = Instant::now();
    let cfg = CaseConfig {
        max_width: 8,
        min_layers: 1,
        max_layers: 3,
        max_steps: 5,
        conv_probability: 0.4,
    };
    let (mut worst, mut retried, mut failing, mut checked) = (0.0f64, 0usize, 0usize, 0usize);
    for seed in 100..140u64 {
        let (spec, params, sample) = random_case(seed, &cfg);
        let loss = loss_of(seed as usize + 1);
        let out =
            unrolled_stbp_gradients(&spec, &params, &sample, true, SpikeMode::Soft, loss).unwrap();
        let ours = out.grads.per_parameter(&spec);
        let fd = |c: ParamCoord, h: f64| {
            finite_diff_gradient(&spec, &params, &sample, c, h, SpikeMode::Soft, loss)
        };
        for c in coords(&spec) {
            let mut rel = relative_error(ours.get(c), fd(c, FD_STEP).unwrap());
            if rel > 1e-4 {
                retried += 1;
                rel = relative_error(ours.get(c), fd(c, 10.0 * FD_STEP).unwrap());
            }
            worst = worst.max(rel);
            failing += usize::from(rel > 1e-4);
            checked += 1;
        }
    }
    let ok = failing == 0 && within(clock, Duration::from_secs(120));
    verdict(
        ok,
        format!(
            "40 nets, {checked} coordinates, {retried} retried at h=1e-4, {failing} above 1e-4, max rel {worst:.2e}, {:.1} s",
            clock.elapsed().as_secs_f64()
        ),
    )
}

fn retained_after(spec: &NetworkSpec, steps: usize) -> (usize, usize) {
    let mut spec = spec.clone();
    spec.time_steps = steps;
    let params = init_params(&spec, 1, InitMode::FanInScaled);
    let sample = Sample {
        frames: Frames::Repeated {
            frame: Tensor::filled(&spec.input_shape, 0.7),
            steps,
        },
        label: 1,
    };
    let mut learner = Learner::new(&spec);
    let mut acc = GradAccumulator::new(&spec);
    learner
        .learn(&spec, &params, &sample, LearnOptions::default(), &mut acc)
        .unwrap();
    (
        learner.retained_time_indexed_tensors(),
        learner.retained_scalars(),
    )
}

fn memory_behaviour() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;
    for arch in ["32-16-4", "4C3-P2-8C3-16-4"] {
        let shape: &[usize] = if arch.contains('C') {
            &[1, 8, 8]
        } else {
            &[12]
        };
        let spec = NetworkSpec::parse(arch, shape, 4, 2, SurrogateKind::ExpAbs).unwrap();
        let (short, long) = (retained_after(&spec, 2), retained_after(&spec, 20));
        ok &= short == long;
        notes.push(format!("{arch}: T=2 {short:?} T=20 {long:?}"));
    }
    let cfg = CaseConfig {
        max_width: 8,
        min_layers: 1,
        max_layers: 3,
        max_steps: 6,
        conv_probability: 0.4,
    };
    for seed in 0..20 {
        let (spec, params, sample) = random_case(seed, &cfg);
        let out = unrolled_stbp_gradients(
            &spec,
            &params,
            &sample,
            true,
            SpikeMode::Hard,
            LossKind::CrossEntropy,
        )
        .unwrap();
        ok &= out.tape_len == sample.frames.len();
    }
    // the paper's table, written out
    for (l, n, t) in [
        (4u128, 100u128, 6u128),
        (3, 512, 10),
        (1, 1, 1),
        (8, 4096, 20),
    ] {
        let (lu, nu, tu) = (l as u64, n as u64, t as u64);
        let rows = [
            (LearningRule::Stbp, 2 * t * l * n, t * l * n * (2 * n + 7)),
            (LearningRule::StopW, 3 * l * n, t * l * n * (2 * n + 2)),
            (LearningRule::StopWtl, 5 * l * n, t * l * n * (2 * n + 6)),
        ];
        for (rule, memory, multiplies) in rows {
            let c = complexity_estimate(lu, nu, tu, rule);
            ok &= c.memory == memory && c.multiplies == multiplies;
        }
    }
    let at6 = complexity_estimate(4, 100, 6, LearningRule::Stbp).memory as f64
        / complexity_estimate(4, 100, 6, LearningRule::StopW).memory as f64;
    ok &= at6 == 4.0;
    for t in 1..=20u64 {
        let r = complexity_estimate(5, 64, t, LearningRule::Stbp).memory * 3;
        ok &= r == complexity_estimate(5, 64, t, LearningRule::StopW).memory * 2 * t as u128;
    }
    notes.push(format!(
        "tape length = T on 20 nets, table exact, 2T/3 at T=6 = {at6}"
    ));
    verdict(ok, notes.join("; "))
}

fn truncation_invariants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let spec = NetworkSpec::parse("3C3-P2-12-5", &[2, 6, 6], 5, 3, SurrogateKind::ExpAbs).unwrap();
    let mut plain = init_params(&spec, 3, InitMode::FanInScaled);
    let mut with_momentum = plain.clone();
    let mut opt = OptimizerState::new(&spec);
    let mut acc = GradAccumulator::new(&spec);
    let (mut min_theta, mut alpha_range) = (f64::INFINITY, (f64::INFINITY, f64::NEG_INFINITY));
    let mut ok = true;
    for step in 0..1000 {
        for g in acc.grads.layers.iter_mut().flatten() {
            for v in g
                .weights
                .iter_mut()
                .chain(&mut g.thresholds)
                .chain(&mut g.leakage)
            {
                let magnitude = 10f64.powf(rng.random_range(-6.0..12.0));
                *v = if rng.random_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                };
            }
        }
        let update = UpdateConfig {
            rates: LearningRates {
                weights: 10f64.powf(rng.random_range(-4.0..0.0)),
                thresholds: 10f64.powf(rng.random_range(-4.0..2.0)),
                leakage: 10f64.powf(rng.random_range(-4.0..2.0)),
            },
            weight_decay: 0.0,
            epsilon: 0.01,
        };
        let mode = MODES[step % 4];
        let batch = rng.random_range(1..64);
        apply_updates(&spec, &mut plain, &acc, &update, mode, batch).unwrap();
        let mcfg = MomentumConfig {
            update,
            momentum: 0.9,
            threshold_leakage_momentum: step % 2 == 0,
        };
        momentum_step(
            &spec,
            &mut with_momentum,
            &mut opt,
            &acc,
            &mcfg,
            SynergyMode::WTL,
            batch,
        )
        .unwrap();
        for params in [&plain, &with_momentum] {
            for (_, lp) in params.spiking() {
                for th in &lp.thresholds {
                    min_theta = min_theta.min(*th);
                    ok &= *th >= 0.01;
                }
                alpha_range = (alpha_range.0.min(lp.leakage), alpha_range.1.max(lp.leakage));
                ok &= (0.0..=1.0).contains(&lp.leakage);
            }
        }
    }
    verdict(
        ok,
        format!(
            "1000 steps, plain and momentum, min θ {min_theta}, α in [{}, {}]",
            alpha_range.0, alpha_range.1
        ),
    )
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn teacher_config() -> TrainConfig {
    TrainConfig::load(&configs_dir().join("teacher.json")).unwrap()
}

fn desk_learning() -> Verdict {
    let mut notes = Vec::new();

    let mut cfg = teacher_config();
    cfg.wall_time = false;
    let clock = Instant::now();
    let task = load_task(&cfg).unwrap();
    let out = train(&cfg, &task, None, |_| {}).unwrap();
    let teacher_time = clock.elapsed();
    let teacher_acc = out.metrics.last().map(|m| m.train_accuracy).unwrap_or(0.0);
    let teacher_ok =
        out.metrics.len() == 20 && teacher_acc >= 0.95 && teacher_time < Duration::from_secs(60);
    notes.push(format!(
        "teacher: train acc {:.4} after {} epochs in {:.1} s",
        teacher_acc,
        out.metrics.len(),
        teacher_time.as_secs_f64()
    ));

    let path = configs_dir().join("mnist-desk.json");
    let mnist_ok = match TrainConfig::load(&path).and_then(|cfg| {
        let clock = Instant::now();
        let task = load_task(&cfg)?;
        let out = train(&cfg, &task, None, |m| {
            eprintln!("  mnist epoch {} test {:?}", m.epoch, m.test_accuracy);
        })?;
        Ok((cfg, out, clock.elapsed()))
    }) {
        Ok((cfg, out, elapsed)) => {
            let acc = out
                .metrics
                .last()
                .and_then(|m| m.test_accuracy)
                .unwrap_or(0.0);
            notes.push(format!(
                "mnist {} T={} {}: test acc {:.4} after {} epochs in {:.1} min",
                cfg.architecture,
                cfg.time_steps,
                cfg.mode,
                acc,
                out.metrics.len(),
                elapsed.as_secs_f64() / 60.0
            ));
            acc >= 0.96
                && out.metrics.len() <= 10
                && elapsed <= Duration::from_secs(30 * 60)
                && cfg.architecture == "16C5-P2-32C5-P2-256-10"
                && cfg.time_steps == 6
                && cfg.mode == "WTL"
                && cfg.loss == "ce"
                && cfg.momentum == 0.9
        }
        Err(e) => {
            notes.push(format!("mnist run failed: {e}"));
            false
        }
    };
    verdict(teacher_ok && mnist_ok, notes.join("; "))
}

fn ablation_config(seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig::load(&configs_dir().join("ablation.json")).unwrap();
    cfg.seed = seed;
    cfg.wall_time = false;
    cfg
}

fn ablation() -> Verdict {
    let task = load_task(&ablation_config(0)).unwrap();
    let mut finals = [Vec::new(), Vec::new(), Vec::new()];
    for seed in 0..3 {
        for (k, (mode, rule)) in [("W", "stop"), ("WTL", "stop"), ("W", "stbp")]
            .into_iter()
            .enumerate()
        {
            let mut cfg = ablation_config(seed);
            cfg.mode = mode.into();
            cfg.rule = rule.into();
            let out = train(&cfg, &task, None, |_| {}).unwrap();
            finals[k].push(out.metrics.last().and_then(|m| m.test_accuracy).unwrap());
        }
    }
    let mean = |v: &[f64]| 100.0 * v.iter().sum::<f64>() / v.len() as f64;
    let (w, wtl, stbp) = (mean(&finals[0]), mean(&finals[1]), mean(&finals[2]));
    let direction = if w > stbp {
        "STOP-W above"
    } else {
        "STOP-W not above"
    };
    verdict(
        wtl >= w - 0.3,
        format!("mean test acc over 3 seeds: WTL {wtl:.2}% W {w:.2}% STBP-with-illusory {stbp:.2}% ({direction} STBP)"),
    )
}

fn random_stream(rng: &mut ChaCha8Rng, h: usize, w: usize, n: usize) -> EventStream {
    let mut t = 0i64;
    let events = (0..n)
        .map(|_| {
            t += rng.random_range(0..5);
            Event {
                t,
                x: rng.random_range(0..w),
                y: rng.random_range(0..h),
                polarity: rng.random_range(0..2),
            }
        })
        .collect();
    EventStream::new(h, w, events).unwrap()
}

fn event_pipeline() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ok = true;
    for _ in 0..200 {
        let (h, w) = (rng.random_range(1..12), rng.random_range(1..12));
        let steps = rng.random_range(1..12);
        let n = rng.random_range(steps..400);
        let stream = random_stream(&mut rng, h, w, n);
        let parsed = parse_events(&format_events(&stream)).unwrap();
        ok &= parsed == stream;
        let raw = slice_events(&parsed, steps, FrameNormalization::None).unwrap();
        let total: f64 = raw.iter().flat_map(|f| f.data()).sum();
        ok &= total == n as f64 && raw.len() == steps;
        ok &= raw == slice_events(&stream, steps, FrameNormalization::None).unwrap();
        let norm = slice_events(&stream, steps, FrameNormalization::PerSampleMax).unwrap();
        ok &= norm == slice_events(&stream, steps, FrameNormalization::PerSampleMax).unwrap();
    }

    let ten: Vec<Event> = (0..10)
        .map(|t| Event {
            t,
            x: 2,
            y: 1,
            polarity: 1,
        })
        .collect();
    let stream = EventStream::new(4, 4, ten).unwrap();
    let frames = slice_events(&stream, 2, FrameNormalization::None).unwrap();
    let at = (4 + 1) * 4 + 2;
    let example: Vec<f64> = frames.iter().map(|f| f.data()[at]).collect();
    ok &= example == [5.0, 5.0] && frames.iter().all(|f| f.data().iter().sum::<f64>() == 5.0);

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.txt"), format_events(&stream)).unwrap();
    std::fs::write(dir.path().join("list.txt"), "a.txt 1\n").unwrap();
    let (data, shape) = load_event_dataset(&dir.path().join("list.txt"), 2, None).unwrap();
    let loaded = match &data.samples[0].frames {
        Frames::Sequence(f) => f.iter().map(|t| t.data()[at]).collect::<Vec<_>>(),
        _ => Vec::new(),
    };
    ok &= shape == [2, 4, 4] && loaded == [1.0, 1.0];
    verdict(ok, format!("200 random streams conserved and deterministic; 10 events, T=2: per-slice count {example:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        (
            "1 streaming rule equals per-scalar evaluation",
            streaming_vs_naive,
        ),
        (
            "2 soft single-step gradients equal finite differences",
            soft_single_step_vs_fd,
        ),
        (
            "3 output layer equals detached-reset reverse mode",
            output_layer_detached,
        ),
        (
            "4 unrolled reverse mode equals finite differences",
            stbp_vs_fd,
        ),
        (
            "5 memory does not grow with T; complexity table",
            memory_behaviour,
        ),
        ("6 threshold and leakage truncation", truncation_invariants),
        ("7 desk-scale learning", desk_learning),
        ("8 synergy ablation", ablation),
        ("9 event pipeline", event_pipeline),
    ];
    let only: Option<String> = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, check) in criteria {
        if only.as_ref().is_some_and(|o| !name.starts_with(o.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| verdict(false, "panicked".into()));
        failed += usize::from(!result.passed);
        println!(
            "criterion {name}: {} ({})",
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
