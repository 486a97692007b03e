//! Experiment configuration. Every default lives here and can be overridden
//! from a TOML file.

use std::path::{Path, PathBuf};

use hvn_core::datagen::SyntheticConfig;
use hvn_core::network::{AdamConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{ExpError, ExpResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Hvn,
    Mlp,
    Fpca,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Hvn => "hvn",
            ModelKind::Mlp => "mlp",
            ModelKind::Fpca => "fpca",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hvn" => Some(ModelKind::Hvn),
            "mlp" => Some(ModelKind::Mlp),
            "fpca" => Some(ModelKind::Fpca),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub layers: usize,
    pub width: usize,
    pub taps: usize,
    pub head_hidden: Vec<usize>,
    /// FPCA scores per sample.
    pub fpca_scores: usize,
    pub models: Vec<ModelKind>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            layers: 2,
            width: 32,
            taps: 2,
            head_hidden: vec![64],
            fpca_scores: 16,
            models: vec![ModelKind::Hvn, ModelKind::Mlp, ModelKind::Fpca],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let a = AdamConfig::default();
        let t = TrainConfig::default();
        Self {
            lr: a.lr,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
            epochs: t.epochs,
            batch_size: t.batch_size,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            adam: AdamConfig {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            },
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub channels: usize,
    pub bins: usize,
    pub grid_size: usize,
    pub length_scale: f64,
    pub rho: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub n_sweep: Vec<usize>,
    pub snr_sweep: Vec<f64>,
    /// Samples per bag during the SNR sweep.
    pub fixed_samples: usize,
    /// SNR in dB during the sample-count sweep.
    pub fixed_snr_db: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let s = SyntheticConfig::default();
        Self {
            channels: s.channels,
            bins: s.bins,
            grid_size: s.grid_size,
            length_scale: s.length_scale,
            rho: s.rho,
            train_per_class: s.train_per_class,
            test_per_class: s.test_per_class,
            n_sweep: vec![8, 16, 24, 48, 96],
            snr_sweep: vec![-10.0, 0.0, 10.0, 20.0, 30.0],
            fixed_samples: 24,
            fixed_snr_db: 30.0,
        }
    }
}

impl SyntheticSection {
    pub fn to_synthetic_config(&self, samples: usize, snr_db: f64, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            channels: self.channels,
            bins: self.bins,
            grid_size: self.grid_size,
            length_scale: self.length_scale,
            rho: self.rho,
            samples,
            snr_db,
            train_per_class: self.train_per_class,
            test_per_class: self.test_per_class,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EcgSection {
    pub m_sweep: Vec<usize>,
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
}

impl Default for EcgSection {
    fn default() -> Self {
        Self {
            m_sweep: vec![20, 35, 70, 140],
            train_path: None,
            test_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub repeats: usize,
    pub output_dir: PathBuf,
    /// Write measured wall time into the CSV. Off by default so identical
    /// runs produce byte-identical files.
    pub record_wall_time: bool,
    pub save_checkpoints: bool,
    pub model: ModelSection,
    pub train: TrainSection,
    pub synthetic: SyntheticSection,
    pub ecg: EcgSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            repeats: 1,
            output_dir: PathBuf::from("results"),
            record_wall_time: false,
            save_checkpoints: true,
            model: ModelSection::default(),
            train: TrainSection::default(),
            synthetic: SyntheticSection::default(),
            ecg: EcgSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> ExpResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| ExpError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> ExpResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ExpError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> ExpResult<()> {
        let bad = |msg: &str| Err(ExpError::Config(msg.into()));
        let m = &self.model;
        if m.layers == 0 || m.width == 0 || m.head_hidden.contains(&0) || m.fpca_scores == 0 {
            return bad("model sizes must be positive");
        }
        if m.models.is_empty() {
            return bad("model list is empty");
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        let t = &self.train;
        if !(t.lr >= 0.0 && t.lr.is_finite()) || t.epochs == 0 || t.batch_size == 0 {
            return bad("training needs lr >= 0, epochs >= 1 and batch size >= 1");
        }
        if !(0.0..1.0).contains(&t.beta1) || !(0.0..1.0).contains(&t.beta2) || t.eps <= 0.0 {
            return bad("ADAM betas must lie in [0, 1) and eps must be positive");
        }
        let s = &self.synthetic;
        if s.n_sweep.is_empty() || s.snr_sweep.is_empty() {
            return bad("synthetic sweeps must be nonempty");
        }
        if s.n_sweep.iter().any(|&n| n < 2) || s.fixed_samples < 2 {
            return bad("bags need at least two samples");
        }
        if s.snr_sweep.iter().chain(std::iter::once(&s.fixed_snr_db)).any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return bad("SNR values must be finite or +inf");
        }
        if s.train_per_class == 0 || s.test_per_class == 0 {
            return bad("synthetic splits must be nonempty");
        }
        if s.grid_size % s.bins.max(1) != 0 || s.bins == 0 || s.channels == 0 {
            return bad("grid size must be a positive multiple of the bin count");
        }
        if !(s.rho > 0.0 && s.rho < 1.0) || !(s.length_scale > 0.0) {
            return bad("rho must lie in (0, 1) and the length scale must be positive");
        }
        if m.fpca_scores > s.channels * s.bins {
            return bad("fpca_scores exceeds the synthetic dimension");
        }
        if self.ecg.m_sweep.is_empty() || self.ecg.m_sweep.contains(&0) {
            return bad("ECG resolutions must be positive and nonempty");
        }
        Ok(())
    }
}
