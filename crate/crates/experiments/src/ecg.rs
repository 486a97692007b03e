//! Time-series classification on a UCR dataset with one global covariance.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use hvn_core::covariance::{empirical_cov_matrix, normalize_cov, SignalBatch};
use hvn_core::datagen::{load_ucr, LabeledSeries, UcrData};
use hvn_core::discretize::discretize_series;
use hvn_core::network::Example;
use nalgebra::{DMatrix, DVector};

use crate::config::ExperimentConfig;
use crate::error::{ExpError, ExpResult};
use crate::metrics::MetricRow;
use crate::models::{fpca_example, run_model, TaskData};

pub const TASK: &str = "ecg";
pub const DEFAULT_TRAIN: &str = "data/ECG5000/ECG5000_TRAIN.tsv";
pub const DEFAULT_TEST: &str = "data/ECG5000/ECG5000_TEST.tsv";

/// Resolves the data paths and fails with a message naming both expected files.
pub fn load_data(train: &Path, test: &Path) -> ExpResult<UcrData> {
    let missing: Vec<String> = [train, test]
        .iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ExpError::MissingData(format!(
            "UCR files not found: {}. Expected the training split at {} and the test split at {}; \
             pass --train/--test or set ecg.train_path/ecg.test_path in the config",
            missing.join(", "),
            train.display(),
            test.display()
        )));
    }
    Ok(load_ucr(train, test)?)
}

pub fn data_paths(config: &ExperimentConfig, train: Option<PathBuf>, test: Option<PathBuf>) -> (PathBuf, PathBuf) {
    let train = train.or_else(|| config.ecg.train_path.clone()).unwrap_or_else(|| DEFAULT_TRAIN.into());
    let test = test.or_else(|| config.ecg.test_path.clone()).unwrap_or_else(|| DEFAULT_TEST.into());
    (train, test)
}

fn discretized(series: &[LabeledSeries], m: usize) -> ExpResult<DMatrix<f64>> {
    let cols = series
        .iter()
        .map(|s| discretize_series(&s.values, m))
        .collect::<Result<Vec<DVector<f64>>, _>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Every series becomes an `m × 1` network input sharing the normalized
/// training covariance. FPCA scores use the training mean and eigenbasis.
pub fn task_data(data: &UcrData, m: usize, num_scores: usize) -> ExpResult<TaskData> {
    let train = discretized(&data.train, m)?;
    let test = discretized(&data.test, m)?;
    let train_batch = SignalBatch::new(train.clone())?;
    let mean = train_batch.mean();
    let cov = Arc::new(normalize_cov(&empirical_cov_matrix(&train_batch)?));

    let split = |cols: &DMatrix<f64>, series: &[LabeledSeries]| -> ExpResult<(Vec<Example>, Vec<Example>)> {
        let mut hvn = Vec::with_capacity(series.len());
        let mut fpca = Vec::with_capacity(series.len());
        for (k, s) in series.iter().enumerate() {
            let col = cols.column(k);
            hvn.push(Example {
                features: DMatrix::from_column_slice(m, 1, col.as_slice()),
                shift: Some(cov.clone()),
                label: s.label,
            });
            let centered = DMatrix::from_column_slice(m, 1, (col - &mean).as_slice());
            fpca.push(fpca_example(&cov, &centered, num_scores, s.label)?);
        }
        Ok((hvn, fpca))
    };
    let (hvn_train, fpca_train) = split(&train, &data.train)?;
    let (hvn_test, fpca_test) = split(&test, &data.test)?;
    Ok(TaskData {
        hvn_train,
        hvn_test,
        fpca_train,
        fpca_test,
        input_features: 1,
        classes: data.classes(),
    })
}

/// Rows for every configured model at one resolution `m`.
pub fn run_resolution(config: &ExperimentConfig, data: &UcrData, m: usize, seed: u64, checkpoints: Option<&Path>) -> ExpResult<Vec<MetricRow>> {
    let task = task_data(data, m, config.model.fpca_scores.min(m))?;
    let mut section = config.model.clone();
    section.fpca_scores = section.fpca_scores.min(m);
    let train_config = config.train.to_train_config(seed);
    let mut rows = Vec::new();
    for &kind in &config.model.models {
        let ckpt = checkpoints.map(|dir| dir.join(format!("{}_m{m}_seed{seed}.ckpt", kind.name())));
        let start = Instant::now();
        let outcome = run_model(kind, &section, &task, &train_config, ckpt.as_deref())?;
        let elapsed = start.elapsed().as_millis() as u64;
        rows.push(MetricRow {
            task: TASK.into(),
            model: kind.name().into(),
            sweep_name: "m".into(),
            sweep_value: m as f64,
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

pub fn run_ecg(config: &ExperimentConfig, data: &UcrData, checkpoints: Option<&Path>) -> ExpResult<Vec<MetricRow>> {
    let len = data.series_len();
    if let Some(&bad) = config.ecg.m_sweep.iter().find(|&&m| m == 0 || m > len) {
        return Err(ExpError::Config(format!("resolution m = {bad} is outside 1..={len}")));
    }
    if let Some(dir) = checkpoints {
        std::fs::create_dir_all(dir).map_err(|e| ExpError::io(dir, e))?;
    }
    let mut rows = Vec::new();
    for &m in &config.ecg.m_sweep {
        for r in 0..config.repeats as u64 {
            rows.extend(run_resolution(config, data, m, config.seed.wrapping_add(r), checkpoints)?);
        }
    }
    Ok(rows)
}
