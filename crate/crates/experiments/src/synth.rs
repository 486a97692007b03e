//! Synthetic Gaussian-process bag classification sweeps.

use std::path::{Path, PathBuf};
use std::time::Instant;

use hvn_core::datagen::{SyntheticDataset, SyntheticGenerator};
use hvn_core::network::Example;

use crate::config::{ExperimentConfig, ModelKind};
use crate::error::ExpResult;
use crate::metrics::MetricRow;
use crate::models::{fpca_example, run_model, TaskData};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    /// Samples per bag at the fixed SNR.
    Samples,
    /// SNR in dB at the fixed sample count.
    Snr,
}

impl Sweep {
    pub fn task(self) -> &'static str {
        match self {
            Sweep::Samples => "synth-n-sweep",
            Sweep::Snr => "synth-snr-sweep",
        }
    }

    pub fn variable(self) -> &'static str {
        match self {
            Sweep::Samples => "n",
            Sweep::Snr => "snr_db",
        }
    }

    /// `(samples, snr_db)` at every sweep point.
    pub fn points(self, config: &ExperimentConfig) -> Vec<(usize, f64)> {
        let s = &config.synthetic;
        match self {
            Sweep::Samples => s.n_sweep.iter().map(|&n| (n, s.fixed_snr_db)).collect(),
            Sweep::Snr => s.snr_sweep.iter().map(|&snr| (s.fixed_samples, snr)).collect(),
        }
    }
}

pub fn generator(config: &ExperimentConfig) -> ExpResult<SyntheticGenerator> {
    let s = &config.synthetic;
    Ok(SyntheticGenerator::new(s.to_synthetic_config(s.fixed_samples, s.fixed_snr_db, config.seed))?)
}

/// Network inputs are the bags with their own covariances; FPCA inputs are
/// the per-sample scores in each bag's covariance eigenbasis.
pub fn task_data(dataset: &SyntheticDataset, num_scores: usize) -> ExpResult<TaskData> {
    let fpca = |bags: &[hvn_core::datagen::Bag]| -> ExpResult<Vec<Example>> {
        bags.iter()
            .map(|b| {
                let cov = b.cov.as_ref().expect("synthetic bags carry a covariance");
                fpca_example(cov, b.signals.columns(), num_scores, b.label)
            })
            .collect()
    };
    let input_features = dataset.train.first().map(|b| b.signals.len()).unwrap_or(0);
    Ok(TaskData {
        hvn_train: dataset.train.iter().map(|b| b.to_example()).collect(),
        hvn_test: dataset.test.iter().map(|b| b.to_example()).collect(),
        fpca_train: fpca(&dataset.train)?,
        fpca_test: fpca(&dataset.test)?,
        input_features,
        classes: 2,
    })
}

pub fn checkpoint_path(dir: &Path, model: ModelKind, variable: &str, value: f64, seed: u64) -> PathBuf {
    dir.join(format!("{}_{variable}{value}_seed{seed}.ckpt", model.name()))
}

/// Trains every configured model at one `(samples, snr_db)` point.
#[allow(clippy::too_many_arguments)]
pub fn run_point(
    config: &ExperimentConfig,
    generator: &SyntheticGenerator,
    sweep: Sweep,
    samples: usize,
    snr_db: f64,
    seed: u64,
    checkpoints: Option<&Path>,
) -> ExpResult<Vec<MetricRow>> {
    let dataset = generator.dataset(samples, snr_db, seed)?;
    let data = task_data(&dataset, config.model.fpca_scores)?;
    let value = match sweep {
        Sweep::Samples => samples as f64,
        Sweep::Snr => snr_db,
    };
    let train_config = config.train.to_train_config(seed);
    let mut rows = Vec::with_capacity(config.model.models.len());
    for &kind in &config.model.models {
        let ckpt = checkpoints.map(|dir| checkpoint_path(dir, kind, sweep.variable(), value, seed));
        let start = Instant::now();
        let outcome = run_model(kind, &config.model, &data, &train_config, ckpt.as_deref())?;
        let elapsed = start.elapsed().as_millis() as u64;
        rows.push(MetricRow {
            task: sweep.task().into(),
            model: kind.name().into(),
            sweep_name: sweep.variable().into(),
            sweep_value: value,
            seed,
            train_acc: outcome.train_acc,
            test_acc: outcome.test_acc,
            final_loss: outcome.final_loss,
            wall_ms: if config.record_wall_time { elapsed } else { 0 },
            test_acc_std: None,
        });
    }
    Ok(rows)
}

/// One row per model, sweep point and repeat; repeat `r` uses seed `seed + r`.
pub fn run_sweep(config: &ExperimentConfig, sweep: Sweep, checkpoints: Option<&Path>) -> ExpResult<Vec<MetricRow>> {
    let generator = generator(config)?;
    if let Some(dir) = checkpoints {
        std::fs::create_dir_all(dir).map_err(|e| crate::error::ExpError::io(dir, e))?;
    }
    let mut rows = Vec::new();
    for (samples, snr_db) in sweep.points(config) {
        for r in 0..config.repeats as u64 {
            rows.extend(run_point(config, &generator, sweep, samples, snr_db, config.seed.wrapping_add(r), checkpoints)?);
        }
    }
    Ok(rows)
}
