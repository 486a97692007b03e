use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hvn_experiments::ecg::{data_paths, load_data, run_ecg, TASK};
use hvn_experiments::metrics::{aggregate, save_csv};
use hvn_experiments::plot::emit_plot;
use hvn_experiments::synth::{run_sweep, Sweep};
use hvn_experiments::verify::{gradient_check, run_verify};
use hvn_experiments::{ExpError, ExpResult, ExperimentConfig, MetricRow};

#[derive(Parser)]
#[command(name = "hvn", version, about = "Covariance filter and network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the filtering identities and the network gradients.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Test accuracy against the number of samples per bag.
    SynthNSweep(RunArgs),
    /// Test accuracy against the SNR.
    SynthSnrSweep(RunArgs),
    /// UCR time-series classification across resolutions.
    Ecg {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Render a metrics CSV as an SVG chart.
    Plot {
        /// Metrics CSV to read.
        #[arg(long)]
        input: PathBuf,
        /// SVG file to write; defaults to the CSV path with an .svg extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    repeats: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> ExpResult<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(r) = self.repeats {
            config.repeats = r;
        }
        config.validate()?;
        Ok(config)
    }
}

fn task_dir(config: &ExperimentConfig, task: &str) -> ExpResult<PathBuf> {
    let dir = config.output_dir.join(task);
    std::fs::create_dir_all(&dir).map_err(|e| ExpError::io(&dir, e))?;
    Ok(dir)
}

fn checkpoint_dir(config: &ExperimentConfig, dir: &Path) -> Option<PathBuf> {
    config.save_checkpoints.then(|| dir.join("checkpoints"))
}

fn write_outputs(config: &ExperimentConfig, dir: &Path, rows: Vec<MetricRow>) -> ExpResult<()> {
    let rows = if config.repeats > 1 { aggregate(&rows) } else { rows };
    let csv = dir.join("metrics.csv");
    save_csv(&rows, &csv)?;
    let svg = dir.join("test_accuracy.svg");
    emit_plot(&csv, &svg)?;
    for r in &rows {
        println!("{:<16} {:<5} {}={:<6} test_acc={:.4} train_acc={:.4}", r.task, r.model, r.sweep_name, r.sweep_value, r.test_acc, r.train_acc);
    }
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}

fn run(cli: Cli) -> ExpResult<()> {
    match cli.command {
        Command::Verify { seed } => {
            let seed = seed.unwrap_or(0);
            let report = run_verify(seed)?;
            print!("{report}");
            let grad = gradient_check(seed)?;
            println!("{grad}");
            if report.passed() && grad.passed() {
                println!("all checks passed");
                Ok(())
            } else {
                Err(ExpError::VerifyFailed)
            }
        }
        Command::SynthNSweep(args) => synth(args, Sweep::Samples),
        Command::SynthSnrSweep(args) => synth(args, Sweep::Snr),
        Command::Ecg { run, train, test } => {
            let config = run.resolve()?;
            let (train, test) = data_paths(&config, train, test);
            let data = load_data(&train, &test)?;
            let dir = task_dir(&config, TASK)?;
            let rows = run_ecg(&config, &data, checkpoint_dir(&config, &dir).as_deref())?;
            println!("majority-class test rate {:.4}", data.test_majority_rate());
            write_outputs(&config, &dir, rows)
        }
        Command::Plot { input, out } => {
            let out = out.unwrap_or_else(|| input.with_extension("svg"));
            emit_plot(&input, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn synth(args: RunArgs, sweep: Sweep) -> ExpResult<()> {
    let config = args.resolve()?;
    let dir = task_dir(&config, sweep.task())?;
    let rows = run_sweep(&config, sweep, checkpoint_dir(&config, &dir).as_deref())?;
    write_outputs(&config, &dir, rows)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
