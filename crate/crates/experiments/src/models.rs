//! The three classifiers compared in every experiment and a uniform way to
//! train and score them.

use std::path::Path;

use hvn_core::covariance::CovMatrix;
use hvn_core::filters::project_scores;
use hvn_core::network::{
    evaluate, match_mlp_width, save_checkpoint, train, BagHeadModel, Example, HvnConfig, HvnModel, Objective,
    ParamTensors, TrainConfig,
};
use nalgebra::DMatrix;

use crate::config::{ModelKind, ModelSection};
use crate::error::ExpResult;

/// Inputs shared by all models at one experiment point.
#[derive(Debug, Clone)]
pub struct TaskData {
    /// Covariance-network inputs (`m × F_0` per example with its shift).
    pub hvn_train: Vec<Example>,
    pub hvn_test: Vec<Example>,
    /// FPCA score inputs (`O × samples` per example).
    pub fpca_train: Vec<Example>,
    pub fpca_test: Vec<Example>,
    pub input_features: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub train_acc: f64,
    pub test_acc: f64,
    pub final_loss: f64,
    pub params: usize,
}

pub fn hvn_config(section: &ModelSection, input: usize, classes: usize) -> HvnConfig {
    HvnConfig::new(input, section.layers, section.width, section.taps, section.head_hidden.clone(), classes)
}

/// Identity-shift network whose width brings its parameter count within 5% of the HVN.
pub fn mlp_config(section: &ModelSection, input: usize, classes: usize) -> ExpResult<HvnConfig> {
    let target = hvn_config(section, input, classes).param_count();
    let width = match_mlp_width(target, input, section.layers, &section.head_hidden, classes)?;
    Ok(HvnConfig::mlp(input, section.layers, width, section.head_hidden.clone(), classes))
}

/// FPCA inputs: the first `num_scores` coordinates of each centered column
/// of `centered` in the eigenbasis of `cov`.
pub fn fpca_example(cov: &CovMatrix, centered: &DMatrix<f64>, num_scores: usize, label: usize) -> ExpResult<Example> {
    let es = cov.eigen()?;
    Ok(Example {
        features: project_scores(&es, centered, num_scores).scores,
        shift: None,
        label,
    })
}

pub fn run_model(
    kind: ModelKind,
    section: &ModelSection,
    data: &TaskData,
    train_config: &TrainConfig,
    checkpoint: Option<&Path>,
) -> ExpResult<Outcome> {
    match kind {
        ModelKind::Hvn => {
            let model = HvnModel::new(hvn_config(section, data.input_features, data.classes))?;
            fit_and_score(&model, train_config, &data.hvn_train, &data.hvn_test, checkpoint)
        }
        ModelKind::Mlp => {
            let model = HvnModel::new(mlp_config(section, data.input_features, data.classes)?)?;
            fit_and_score(&model, train_config, &data.hvn_train, &data.hvn_test, checkpoint)
        }
        ModelKind::Fpca => {
            let model = BagHeadModel {
                input: section.fpca_scores,
                hidden: section.head_hidden.clone(),
                classes: data.classes,
            };
            fit_and_score(&model, train_config, &data.fpca_train, &data.fpca_test, checkpoint)
        }
    }
}

fn fit_and_score<O: Objective>(
    model: &O,
    config: &TrainConfig,
    train_set: &[Example],
    test_set: &[Example],
    checkpoint: Option<&Path>,
) -> ExpResult<Outcome> {
    let trained = train(model, config, train_set, None)?;
    if let Some(path) = checkpoint {
        save_checkpoint(path, &trained.params)?;
    }
    Ok(Outcome {
        train_acc: evaluate(model, &trained.params, train_set)?,
        test_acc: evaluate(model, &trained.params, test_set)?,
        final_loss: trained.history.final_loss().unwrap_or(f64::NAN),
        params: trained.params.num_params(),
    })
}
