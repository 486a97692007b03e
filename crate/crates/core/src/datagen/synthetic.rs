//! The two-class bag classification task.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gp::{GpSampler, GpSpec};
use super::noise::add_awgn;
use crate::covariance::{empirical_cov_matrix, normalize_cov, CovMatrix, SignalBatch};
use crate::discretize::{BinAverageOp, FunctionGrid};
use crate::error::{Error, Result};
use crate::network::Example;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub channels: usize,
    pub bins: usize,
    pub grid_size: usize,
    pub length_scale: f64,
    pub rho: f64,
    /// Samples per bag.
    pub samples: usize,
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            channels: 4,
            bins: 32,
            grid_size: 512,
            length_scale: 0.2,
            rho: 0.7,
            samples: 24,
            snr_db: 30.0,
            train_per_class: 200,
            test_per_class: 100,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Discretized dimension `m = d · p`.
    pub fn dim(&self) -> usize {
        self.channels * self.bins
    }

    fn gp_spec(&self, class: usize) -> GpSpec {
        GpSpec {
            channels: self.channels,
            length_scale: self.length_scale,
            rho: self.rho,
            class,
            grid_size: self.grid_size,
        }
    }
}

/// A labeled set of discretized signals (columns) with its normalized covariance.
#[derive(Debug, Clone)]
pub struct Bag {
    pub signals: SignalBatch,
    pub label: usize,
    pub cov: Option<Arc<CovMatrix>>,
}

impl Bag {
    /// Network input: the `m × n` bag filtered by its own covariance.
    pub fn to_example(&self) -> Example {
        Example {
            features: self.signals.columns().clone(),
            shift: self.cov.clone(),
            label: self.label,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub train: Vec<Bag>,
    pub test: Vec<Bag>,
}

/// SplitMix64 finalizer applied to `base`, `stream` and `index` in turn.
pub fn mix_seed(base: u64, stream: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(splitmix(splitmix(base) ^ stream) ^ index)
}

const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;

/// Holds the discretized GP factor `S L` for each class so datasets at many
/// sweep points reuse one Cholesky per class.
#[derive(Debug, Clone)]
pub struct SyntheticGenerator {
    config: SyntheticConfig,
    op: BinAverageOp,
    projected: [DMatrix<f64>; 2],
}

impl SyntheticGenerator {
    pub fn new(config: SyntheticConfig) -> Result<Self> {
        let op = BinAverageOp::new(config.bins, config.channels, config.grid_size)?;
        let project = |class: usize| -> Result<DMatrix<f64>> {
            let sampler = GpSampler::new(config.gp_spec(class))?;
            let l = sampler.factor();
            let mut out = DMatrix::zeros(op.output_dim(), l.ncols());
            for (k, col) in l.column_iter().enumerate() {
                let grid = FunctionGrid::from_flat(col.as_slice(), config.grid_size, config.channels)?;
                out.set_column(k, &op.forward(&grid)?);
            }
            Ok(out)
        };
        let projected = [project(0)?, project(1)?];
        Ok(Self { config, op, projected })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    pub fn operator(&self) -> &BinAverageOp {
        &self.op
    }

    /// One bag: discretized GP draws, noise, centering by the bag mean, then
    /// the normalized bag covariance.
    pub fn bag(&self, label: usize, samples: usize, snr_db: f64, seed: u64) -> Result<Bag> {
        if label > 1 {
            return Err(Error::LabelOutOfRange { label, classes: 2 });
        }
        if samples < 2 {
            return Err(Error::SampleSize { needed: 2, got: samples });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let factor = &self.projected[label];
        let z = DMatrix::from_fn(factor.ncols(), samples, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let clean = SignalBatch::new(factor * z)?;
        let signals = add_awgn(&clean, snr_db, &mut rng)?.centered();
        let cov = normalize_cov(&empirical_cov_matrix(&signals)?);
        Ok(Bag {
            signals,
            label,
            cov: Some(Arc::new(cov)),
        })
    }

    pub fn dataset(&self, samples: usize, snr_db: f64, seed: u64) -> Result<SyntheticDataset> {
        let c = &self.config;
        let split = |stream: u64, per_class: usize| -> Result<Vec<Bag>> {
            (0..2 * per_class)
                .map(|k| self.bag(k % 2, samples, snr_db, mix_seed(seed, stream, k as u64)))
                .collect()
        };
        Ok(SyntheticDataset {
            train: split(TRAIN_STREAM, c.train_per_class)?,
            test: split(TEST_STREAM, c.test_per_class)?,
        })
    }
}

pub fn make_synthetic_dataset(config: &SyntheticConfig) -> Result<SyntheticDataset> {
    SyntheticGenerator::new(*config)?.dataset(config.samples, config.snr_db, config.seed)
}


#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            grid_size: 64,
            samples: 6,
            train_per_class: 3,
            test_per_class: 2,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn balanced_and_centered() {
        let data = make_synthetic_dataset(&small()).unwrap();
        assert_eq!(data.train.len(), 6);
        assert_eq!(data.test.len(), 4);
        for split in [&data.train, &data.test] {
            let ones = split.iter().filter(|b| b.label == 1).count();
            assert_eq!(2 * ones, split.len());
        }
        for bag in data.train.iter().chain(&data.test) {
            assert_eq!(bag.signals.dim(), 128);
            assert_eq!(bag.signals.len(), 6);
            assert!(bag.signals.mean().amax() <= 1e-12);
            let lmax = bag.cov.as_ref().unwrap().eigen().unwrap().largest();
            assert!((lmax - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn default_dimension() {
        assert_eq!(SyntheticConfig::default().dim(), 128);
    }

    #[test]
    fn deterministic() {
        let a = make_synthetic_dataset(&small()).unwrap();
        let b = make_synthetic_dataset(&small()).unwrap();
        for (x, y) in a.train.iter().zip(&b.train) {
            assert_eq!(x.signals, y.signals);
        }
        let c = make_synthetic_dataset(&SyntheticConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a.train[0].signals, c.train[0].signals);
    }

    #[test]
    fn projected_factor_matches_fine_grid_path() {
        let config = small();
        let generator = SyntheticGenerator::new(config).unwrap();
        let sampler = GpSampler::new(config.gp_spec(1)).unwrap();
        let z = sampler.draw_normals(3, &mut ChaCha8Rng::seed_from_u64(3));
        let fine = sampler.factor() * &z;
        for (k, col) in fine.column_iter().enumerate() {
            let grid = FunctionGrid::from_flat(col.as_slice(), config.grid_size, config.channels).unwrap();
            let direct = generator.operator().forward(&grid).unwrap();
            let fast = &generator.projected[1] * z.column(k);
            assert!((direct - fast).amax() <= 1e-10);
        }
    }

    #[test]
    fn seed_mixing_separates_streams() {
        assert_ne!(mix_seed(0, 1, 0), mix_seed(0, 2, 0));
        assert_ne!(mix_seed(0, 1, 0), mix_seed(0, 1, 1));
        assert_ne!(mix_seed(0, 1, 0), mix_seed(1, 1, 0));
        assert_eq!(mix_seed(7, 1, 3), mix_seed(7, 1, 3));
    }
}
