//! Synthetic Gaussian-process bags, additive noise and UCR ingestion.

pub mod gp;
pub mod noise;
pub mod synthetic;
pub mod ucr;

pub use gp::{gp_kernel_matrix, sample_gp_bag, GpSampler, GpSpec};
pub use noise::{add_awgn, awgn_variance};
pub use synthetic::{make_synthetic_dataset, mix_seed, Bag, SyntheticConfig, SyntheticDataset, SyntheticGenerator};
pub use ucr::{load_ucr, load_ucr_file, LabeledSeries, UcrData};
