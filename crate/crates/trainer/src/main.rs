use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stop_trainer::checkpoint::Checkpoint;
use stop_trainer::config::{parse_surrogate, Overrides, TrainConfig};
use stop_trainer::events::load_event_dataset;
use stop_trainer::idx::{load_images, sibling_labels};
use stop_trainer::train::{load_task, resume_from, train};
use stop_trainer::{gradcheck, profile, Failure, Result};

#[derive(Parser)]
#[command(
    name = "stopsnn",
    version,
    about = "Train and inspect spiking networks with forward-trace learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a JSON config; flags override config fields.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Continue from the configured checkpoint if it exists.
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Accuracy and loss of a checkpoint on IDX images or an event manifest.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Label file for IDX images; inferred from the image file name if omitted.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Compare the streaming gradients with the reference computations on random networks.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Negate the streaming threshold gradients; the check must then fail.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Memory and multiply counts, analytic and measured.
    Profile {
        #[arg(long)]
        layers: usize,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        timesteps: usize,
    },
    /// Parse an architecture string and print its layers.
    ArchCheck {
        #[arg(long)]
        arch: String,
        /// Input shape such as 1x28x28 or 784.
        #[arg(long, default_value = "1x28x28")]
        input: String,
        #[arg(long, default_value_t = 10)]
        classes: usize,
    },
}

fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split('x')
        .map(|d| d.trim().parse::<usize>().ok().filter(|v| *v > 0))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Failure::Usage(format!("bad shape {s:?}")))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.4}"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            resume,
            overrides,
        } => {
            let mut cfg = TrainConfig::load(&config)?;
            cfg.apply_env()?;
            overrides.apply(&mut cfg);
            cfg.validate()?;
            let start = match (&cfg.checkpoint, resume) {
                (Some(p), true) => resume_from(p)?,
                (None, true) => {
                    return Err(Failure::Usage("--resume needs a checkpoint path".into()))
                }
                _ => None,
            };
            let task = load_task(&cfg)?;
            eprintln!(
                "training {} on {} samples ({} test), {} epochs",
                cfg.architecture,
                task.train.len(),
                task.test.as_ref().map_or(0, |d| d.len()),
                cfg.epochs
            );
            let out = train(&cfg, &task, start, |m| {
                println!(
                    "epoch {:>3}  loss {:.4}  train {:.4}  test {}  lr_w {:.3e}{}",
                    m.epoch,
                    m.train_loss,
                    m.train_accuracy,
                    fmt_opt(m.test_accuracy),
                    m.lr_weights,
                    m.wall_seconds
                        .map_or(String::new(), |s| format!("  {s:.1}s"))
                )
            })?;
            if let Some(m) = out.metrics.last() {
                println!("final test accuracy {}", fmt_opt(m.test_accuracy));
            }
            Ok(())
        }
        Command::Eval {
            checkpoint,
            data,
            labels,
        } => {
            let cp = Checkpoint::load(&checkpoint)?;
            let spec = cp.spec()?;
            let t = cp.config.time_steps;
            let (dataset, shape) = if data.extension().is_some_and(|e| e == "txt" || e == "list") {
                load_event_dataset(&data, t, None)?
            } else {
                let labels = labels.or_else(|| sibling_labels(&data)).ok_or_else(|| {
                    Failure::Usage("cannot infer the label file; pass --labels".into())
                })?;
                load_images(&data, &labels, t, None)?
            };
            if shape != cp.input_shape {
                return Err(Failure::Data(format!(
                    "data frames {shape:?}, checkpoint expects {:?}",
                    cp.input_shape
                )));
            }
            let r = stop_core::eval::evaluate(&spec, &cp.params, &dataset, cp.config.loss()?)?;
            println!(
                "samples {}  accuracy {:.4}  mean loss {:.4}",
                r.samples, r.accuracy, r.mean_loss
            );
            Ok(())
        }
        Command::Gradcheck {
            trials,
            seed,
            inject_fault,
        } => {
            let report = gradcheck::run(trials, seed, inject_fault)?;
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Numeric("gradient check exceeded tolerance".into()))
            }
        }
        Command::Profile {
            layers,
            width,
            timesteps,
        } => {
            print!("{}", profile::run(layers, width, timesteps)?);
            Ok(())
        }
        Command::ArchCheck {
            arch,
            input,
            classes,
        } => {
            let shape = parse_shape(&input)?;
            let spec =
                stop_core::NetworkSpec::parse(&arch, &shape, classes, 1, parse_surrogate("exp")?)?;
            print!("{}", profile::describe(&spec));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
