//! Pooling, the MLP classifier head and the cross-entropy loss.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::activation::{gelu, gelu_grad};
use super::params::ParamTensors;
use crate::error::{shape_err, Error, Result};

/// Columnwise mean over the `m` rows.
pub fn mean_pool(x: &DMatrix<f64>) -> DVector<f64> {
    x.row_mean().transpose()
}

/// Affine layers `in → hidden… → classes`, GELU between consecutive layers.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    /// `weights[k]` is `in_k × out_k`.
    pub weights: Vec<DMatrix<f64>>,
    /// `biases[k]` is `out_k × 1`.
    pub biases: Vec<DMatrix<f64>>,
}

impl HeadParams {
    pub fn zeros(input: usize, hidden: &[usize], classes: usize) -> Self {
        let dims = head_dims(input, hidden, classes);
        Self {
            weights: dims.windows(2).map(|w| DMatrix::zeros(w[0], w[1])).collect(),
            biases: dims.windows(2).map(|w| DMatrix::zeros(w[1], 1)).collect(),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(input: usize, hidden: &[usize], classes: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(input, hidden, classes);
        for w in &mut p.weights {
            let bound = (6.0 / (w.nrows() + w.ncols()) as f64).sqrt();
            w.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn classes(&self) -> usize {
        self.weights.last().map(|w| w.ncols()).unwrap_or(0)
    }

    pub fn param_count(input: usize, hidden: &[usize], classes: usize) -> usize {
        head_dims(input, hidden, classes).windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

fn head_dims(input: usize, hidden: &[usize], classes: usize) -> Vec<usize> {
    std::iter::once(input).chain(hidden.iter().copied()).chain(std::iter::once(classes)).collect()
}

impl ParamTensors for HeadParams {
    fn named(&self) -> Vec<(String, &DMatrix<f64>)> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (k, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            out.push((format!("head.{k}.weight"), w));
            out.push((format!("head.{k}.bias"), b));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut DMatrix<f64>> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out
    }
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct HeadCache {
    /// Input to each affine layer.
    inputs: Vec<DVector<f64>>,
    /// Pre-activations of each hidden layer.
    pre: Vec<DVector<f64>>,
}

pub fn head_forward(params: &HeadParams, pooled: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(head_forward_cached(params, pooled)?.0)
}

pub fn head_forward_cached(params: &HeadParams, pooled: &DVector<f64>) -> Result<(DVector<f64>, HeadCache)> {
    if pooled.len() != params.input_dim() {
        return Err(shape_err("head_forward", params.input_dim(), pooled.len()));
    }
    let last = params.weights.len() - 1;
    let mut inputs = Vec::with_capacity(params.weights.len());
    let mut pre = Vec::with_capacity(last);
    let mut h = pooled.clone();
    for (k, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let z = w.tr_mul(&h) + b.column(0);
        inputs.push(h);
        if k == last {
            return Ok((z, HeadCache { inputs, pre }));
        }
        h = z.map(gelu);
        pre.push(z);
    }
    unreachable!("head has at least one layer")
}

/// Accumulates parameter gradients into `grads` and returns `∂L/∂pooled`.
pub fn head_backward(
    params: &HeadParams,
    cache: &HeadCache,
    dlogits: &DVector<f64>,
    grads: &mut HeadParams,
) -> DVector<f64> {
    let mut delta = dlogits.clone();
    for k in (0..params.weights.len()).rev() {
        grads.weights[k].ger(1.0, &cache.inputs[k], &delta, 1.0);
        grads.biases[k].column_mut(0).axpy(1.0, &delta, 1.0);
        let mut dh = &params.weights[k] * &delta;
        if k > 0 {
            dh.zip_apply(&cache.pre[k - 1], |g, z| *g *= gelu_grad(z));
        }
        delta = dh;
    }
    delta
}

pub fn softmax(logits: &DVector<f64>) -> DVector<f64> {
    let max = logits.max();
    let exp = logits.map(|v| (v - max).exp());
    let sum = exp.sum();
    exp / sum
}

/// `-log softmax(logits)[label]` via the max-shifted log-sum-exp.
pub fn cross_entropy(logits: &DVector<f64>, label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange { label, classes: logits.len() });
    }
    let max = logits.max();
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(lse - logits[label])
}

/// Loss and `∂L/∂logits = softmax - onehot`.
pub fn cross_entropy_grad(logits: &DVector<f64>, label: usize) -> Result<(f64, DVector<f64>)> {
    let loss = cross_entropy(logits, label)?;
    let mut g = softmax(logits);
    g[label] -= 1.0;
    Ok((loss, g))
}

pub fn argmax(v: &DVector<f64>) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}
