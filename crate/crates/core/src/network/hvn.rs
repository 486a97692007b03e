//! The discrete covariance network
//! `X_{t+1} = σ(Σ_j C^j X_t W_{t,j})`, followed by mean pooling and an MLP head.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::activation::Activation;
use super::head::{
    cross_entropy_grad, head_backward, head_forward_cached, mean_pool, HeadCache, HeadParams,
};
use super::params::ParamTensors;
use super::train::{Example, Objective};
use crate::covariance::CovMatrix;
use crate::error::{shape_err, Error, Result};

/// The shift operator a layer multiplies by.
#[derive(Debug, Clone, Copy)]
pub enum Shift<'a> {
    Identity,
    Cov(&'a CovMatrix),
}

impl Shift<'_> {
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Shift::Identity => x.clone(),
            Shift::Cov(c) => c.as_matrix() * x,
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Shift::Identity => None,
            Shift::Cov(c) => Some(c.dim()),
        }
    }
}

/// Which shift operator a network uses: the example's covariance, or the
/// identity (the component-wise MLP baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftKind {
    #[default]
    Covariance,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pooling {
    #[default]
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HvnConfig {
    /// Polynomial order `J`; each layer has `J + 1` taps.
    pub taps: usize,
    /// `F_0, …, F_T`.
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub pooling: Pooling,
    pub head_hidden: Vec<usize>,
    pub classes: usize,
    pub shift: ShiftKind,
}

impl HvnConfig {
    /// `layers` covariance layers of width `width` on `input` features.
    pub fn new(input: usize, layers: usize, width: usize, taps: usize, head_hidden: Vec<usize>, classes: usize) -> Self {
        let mut widths = vec![input];
        widths.extend(std::iter::repeat_n(width, layers));
        Self {
            taps,
            widths,
            activation: Activation::Gelu,
            pooling: Pooling::Mean,
            head_hidden,
            classes,
            shift: ShiftKind::Covariance,
        }
    }

    /// The MLP baseline: identity shift and `J = 1`.
    pub fn mlp(input: usize, layers: usize, width: usize, head_hidden: Vec<usize>, classes: usize) -> Self {
        Self {
            shift: ShiftKind::Identity,
            ..Self::new(input, layers, width, 1, head_hidden, classes)
        }
    }

    pub fn layers(&self) -> usize {
        self.widths.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers() < 1 {
            return Err(Error::InvalidInput("network needs at least one layer".into()));
        }
        if self.widths.iter().chain(&self.head_hidden).any(|&w| w == 0) {
            return Err(Error::InvalidInput("layer widths must be positive".into()));
        }
        if self.classes < 2 {
            return Err(Error::InvalidInput("need at least two classes".into()));
        }
        Ok(())
    }

    /// `Σ_t (J+1) F_t F_{t+1}` plus the head.
    pub fn param_count(&self) -> usize {
        let filters: usize = self.widths.windows(2).map(|w| (self.taps + 1) * w[0] * w[1]).sum();
        filters + HeadParams::param_count(*self.widths.last().unwrap(), &self.head_hidden, self.classes)
    }
}

/// Smallest-deviation hidden width for an identity-shift network whose
/// parameter count matches `target` within ±5%.
pub fn match_mlp_width(target: usize, input: usize, layers: usize, head_hidden: &[usize], classes: usize) -> Result<usize> {
    let count = |w: usize| HvnConfig::mlp(input, layers, w, head_hidden.to_vec(), classes).param_count();
    let (mut lo, mut hi) = (1usize, 1usize);
    while count(hi) < target {
        hi *= 2;
        if hi > 1 << 20 {
            return Err(Error::InvalidInput(format!("no width reaches {target} parameters")));
        }
    }
    // smallest width with count >= target
    while lo < hi {
        let mid = (lo + hi) / 2;
        if count(mid) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let dev = |w: usize| (count(w) as f64 / target as f64 - 1.0).abs();
    let best = if lo > 1 && dev(lo - 1) < dev(lo) { lo - 1 } else { lo };
    if dev(best) > 0.05 {
        return Err(Error::InvalidInput(format!(
            "closest width {best} gives {} parameters, more than 5% from {target}",
            count(best)
        )));
    }
    Ok(best)
}

/// Filter taps of every layer plus the classifier head.
#[derive(Debug, Clone, PartialEq)]
pub struct HvnParams {
    /// `weights[t][j]` is `F_t × F_{t+1}`.
    pub weights: Vec<Vec<DMatrix<f64>>>,
    pub head: HeadParams,
}

impl HvnParams {
    pub fn zeros(config: &HvnConfig) -> Self {
        let weights = config
            .widths
            .windows(2)
            .map(|w| (0..=config.taps).map(|_| DMatrix::zeros(w[0], w[1])).collect())
            .collect();
        Self {
            weights,
            head: HeadParams::zeros(*config.widths.last().unwrap(), &config.head_hidden, config.classes),
        }
    }

    /// Taps uniform in `±√(6 / ((J+1)(F_t + F_{t+1})))`; Glorot head.
    pub fn init(config: &HvnConfig, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(config);
        let taps = (config.taps + 1) as f64;
        for layer in &mut p.weights {
            for w in layer.iter_mut() {
                let bound = (6.0 / (taps * (w.nrows() + w.ncols()) as f64)).sqrt();
                w.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
            }
        }
        p.head = HeadParams::init(*config.widths.last().unwrap(), &config.head_hidden, config.classes, rng);
        p
    }
}

impl ParamTensors for HvnParams {
    fn named(&self) -> Vec<(String, &DMatrix<f64>)> {
        let mut out = Vec::new();
        for (t, layer) in self.weights.iter().enumerate() {
            for (j, w) in layer.iter().enumerate() {
                out.push((format!("layer.{t}.tap.{j}"), w));
            }
        }
        out.extend(self.head.named());
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut DMatrix<f64>> {
        let mut out: Vec<&mut DMatrix<f64>> = self.weights.iter_mut().flat_map(|l| l.iter_mut()).collect();
        out.extend(self.head.tensors_mut());
        out
    }
}

/// Values a layer keeps for its backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// `C^j X` for `j = 0..=J`.
    powers: Vec<DMatrix<f64>>,
    pre: DMatrix<f64>,
}

/// One covariance layer `σ(Σ_j C^j X W_j)`; powers of `C` are never formed.
pub fn hvn_layer_forward(shift: Shift<'_>, x: &DMatrix<f64>, weights: &[DMatrix<f64>], act: Activation) -> Result<DMatrix<f64>> {
    Ok(layer_forward_cached(shift, x, weights, act)?.0)
}

fn layer_forward_cached(
    shift: Shift<'_>,
    x: &DMatrix<f64>,
    weights: &[DMatrix<f64>],
    act: Activation,
) -> Result<(DMatrix<f64>, LayerCache)> {
    if let Some(m) = shift.dim() {
        if m != x.nrows() {
            return Err(shape_err("hvn_layer_forward", format!("{m} rows"), format!("{} rows", x.nrows())));
        }
    }
    let Some(first) = weights.first() else {
        return Err(Error::InvalidInput("layer needs at least one tap".into()));
    };
    if let Some(bad) = weights.iter().find(|w| w.nrows() != x.ncols() || w.ncols() != first.ncols()) {
        return Err(shape_err(
            "hvn_layer_forward",
            format!("{}x{} taps", x.ncols(), first.ncols()),
            format!("{}x{}", bad.nrows(), bad.ncols()),
        ));
    }
    let mut powers = Vec::with_capacity(weights.len());
    powers.push(x.clone());
    for j in 1..weights.len() {
        let next = shift.apply(&powers[j - 1]);
        powers.push(next);
    }
    let mut pre = &powers[0] * &weights[0];
    for (p, w) in powers.iter().zip(weights).skip(1) {
        pre.gemm(1.0, p, w, 1.0);
    }
    let out = pre.map(|z| act.apply(z));
    Ok((out, LayerCache { powers, pre }))
}

/// Accumulates `∂L/∂W_j` into `grads` and, when `need_input` is set,
/// returns `∂L/∂X = Σ_j C^j dZ W_jᵀ` evaluated by Horner's rule.
fn layer_backward(
    shift: Shift<'_>,
    cache: &LayerCache,
    weights: &[DMatrix<f64>],
    act: Activation,
    dout: &DMatrix<f64>,
    grads: &mut [DMatrix<f64>],
    need_input: bool,
) -> Option<DMatrix<f64>> {
    let mut dz = dout.clone();
    dz.zip_apply(&cache.pre, |g, z| *g *= act.derivative(z));
    for (g, p) in grads.iter_mut().zip(&cache.powers) {
        g.gemm_tr(1.0, p, &dz, 1.0);
    }
    if !need_input {
        return None;
    }
    let last = weights.len() - 1;
    let mut acc = &dz * weights[last].transpose();
    for w in weights[..last].iter().rev() {
        acc = shift.apply(&acc);
        acc.gemm(1.0, &dz, &w.transpose(), 1.0);
    }
    Some(acc)
}

/// Full forward pass.
#[derive(Debug, Clone)]
pub struct HvnForward {
    /// Output of every layer (`activations[t]` is `X_{t+1}`).
    pub activations: Vec<DMatrix<f64>>,
    pub pooled: DVector<f64>,
    pub logits: DVector<f64>,
    layer_caches: Vec<LayerCache>,
    head_cache: HeadCache,
}

pub fn hvn_forward(config: &HvnConfig, params: &HvnParams, shift: Shift<'_>, x: &DMatrix<f64>) -> Result<HvnForward> {
    if x.ncols() != config.widths[0] {
        return Err(shape_err("hvn_forward", format!("{} input features", config.widths[0]), x.ncols()));
    }
    let mut activations = Vec::with_capacity(config.layers());
    let mut layer_caches = Vec::with_capacity(config.layers());
    let mut h = x.clone();
    for layer in &params.weights {
        let (out, cache) = layer_forward_cached(shift, &h, layer, config.activation)?;
        layer_caches.push(cache);
        activations.push(out.clone());
        h = out;
    }
    let pooled = match config.pooling {
        Pooling::Mean => mean_pool(&h),
    };
    let (logits, head_cache) = head_forward_cached(&params.head, &pooled)?;
    Ok(HvnForward {
        activations,
        pooled,
        logits,
        layer_caches,
        head_cache,
    })
}

/// Cross-entropy loss of one example and its exact gradient.
pub fn hvn_backward(
    config: &HvnConfig,
    params: &HvnParams,
    shift: Shift<'_>,
    x: &DMatrix<f64>,
    label: usize,
) -> Result<(f64, DVector<f64>, HvnParams)> {
    let fwd = hvn_forward(config, params, shift, x)?;
    let (loss, dlogits) = cross_entropy_grad(&fwd.logits, label)?;
    let mut grads = HvnParams::zeros(config);
    let dpooled = head_backward(&params.head, &fwd.head_cache, &dlogits, &mut grads.head);

    let m = fwd.activations.last().unwrap().nrows();
    let mut dout = DMatrix::from_fn(m, dpooled.len(), |_, j| dpooled[j] / m as f64);
    for t in (0..config.layers()).rev() {
        let dx = layer_backward(
            shift,
            &fwd.layer_caches[t],
            &params.weights[t],
            config.activation,
            &dout,
            &mut grads.weights[t],
            t > 0,
        );
        if let Some(dx) = dx {
            dout = dx;
        }
    }
    Ok((loss, fwd.logits, grads))
}

/// The covariance network as a trainable objective.
#[derive(Debug, Clone)]
pub struct HvnModel {
    pub config: HvnConfig,
}

impl HvnModel {
    pub fn new(config: HvnConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    fn shift<'a>(&self, ex: &'a Example) -> Result<Shift<'a>> {
        match self.config.shift {
            ShiftKind::Identity => Ok(Shift::Identity),
            ShiftKind::Covariance => ex
                .shift
                .as_deref()
                .map(Shift::Cov)
                .ok_or_else(|| Error::InvalidInput("covariance network needs a covariance matrix per example".into())),
        }
    }
}

impl Objective for HvnModel {
    type Params = HvnParams;

    fn init(&self, rng: &mut rand_chacha::ChaCha8Rng) -> HvnParams {
        HvnParams::init(&self.config, rng)
    }

    fn logits(&self, params: &HvnParams, ex: &Example) -> Result<DVector<f64>> {
        Ok(hvn_forward(&self.config, params, self.shift(ex)?, &ex.features)?.logits)
    }

    fn loss_grad(&self, params: &HvnParams, ex: &Example) -> Result<(f64, DVector<f64>, HvnParams)> {
        hvn_backward(&self.config, params, self.shift(ex)?, &ex.features, ex.label)
    }
}

/// Classifier over a bag of per-sample feature vectors (the FPCA baseline):
/// each column of the example passes through the head, logits are averaged.
#[derive(Debug, Clone)]
pub struct BagHeadModel {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl BagHeadModel {
    pub fn param_count(&self) -> usize {
        HeadParams::param_count(self.input, &self.hidden, self.classes)
    }
}

impl Objective for BagHeadModel {
    type Params = HeadParams;

    fn init(&self, rng: &mut rand_chacha::ChaCha8Rng) -> HeadParams {
        HeadParams::init(self.input, &self.hidden, self.classes, rng)
    }

    fn logits(&self, params: &HeadParams, ex: &Example) -> Result<DVector<f64>> {
        let n = ex.features.ncols();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut acc = DVector::zeros(self.classes);
        for col in ex.features.column_iter() {
            acc += head_forward_cached(params, &col.into_owned())?.0;
        }
        Ok(acc / n as f64)
    }

    fn loss_grad(&self, params: &HeadParams, ex: &Example) -> Result<(f64, DVector<f64>, HeadParams)> {
        let n = ex.features.ncols();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut caches = Vec::with_capacity(n);
        let mut logits = DVector::zeros(self.classes);
        for col in ex.features.column_iter() {
            let (l, cache) = head_forward_cached(params, &col.into_owned())?;
            logits += l;
            caches.push(cache);
        }
        logits /= n as f64;
        let (loss, dlogits) = cross_entropy_grad(&logits, ex.label)?;
        let dper = dlogits / n as f64;
        let mut grads = params.zeros_like();
        for cache in &caches {
            head_backward(params, cache, &dper, &mut grads);
        }
        Ok((loss, logits, grads))
    }
}
