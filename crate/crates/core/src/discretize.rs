//! Discretization operators `S: H → ℝ^m` and their adjoints.
//!
//! Three Hilbert spaces are covered:
//!
//! * `L²([0,1]; ℝ^d)` emulated by [`FunctionGrid`], discretized by channelwise
//!   bin-averaging ([`BinAverageOp`]),
//! * square-summable sequences truncated to a finite vector, discretized by
//!   the canonical projection,
//! * an RKHS of kernel expansions, discretized by point evaluation
//!   ([`RkhsSampler`]).
//!
//! Flattened indices are channel-fastest: bin `j` and channel `c` (both
//! zero-based) land at `j * d + c`.

use nalgebra::{DMatrix, DVector};

use crate::covariance::{empirical_cov_matrix, empirical_cov_operator_apply, SignalBatch};
use crate::error::{shape_err, Error, Result};
use crate::linalg::{sym_eigendecomp, SymMatrix};

/// A `d`-channel function on `[0,1]` sampled at `M` uniform left grid points
/// `t_a = a / M`, with inner product `⟨u,v⟩ = Δ Σ_{a,c} u[a,c] v[a,c]`, `Δ = 1/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionGrid {
    values: DMatrix<f64>,
}

impl FunctionGrid {
    /// `values` is `M × d`: row `a` holds the channel values at `t_a`.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput("function grid needs at least one point and one channel".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("function grid values must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn zeros(grid_size: usize, channels: usize) -> Self {
        Self {
            values: DMatrix::zeros(grid_size, channels),
        }
    }

    /// Build from a flat vector laid out as `a * d + c`.
    pub fn from_flat(flat: &[f64], grid_size: usize, channels: usize) -> Result<Self> {
        if flat.len() != grid_size * channels {
            return Err(shape_err("FunctionGrid::from_flat", grid_size * channels, flat.len()));
        }
        Self::new(DMatrix::from_row_slice(grid_size, channels, flat))
    }

    pub fn grid_size(&self) -> usize {
        self.values.nrows()
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.grid_size() as f64
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn grid_point(&self, a: usize) -> f64 {
        a as f64 / self.grid_size() as f64
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.weight() * self.values.dot(&other.values))
    }

    pub fn norm(&self) -> f64 {
        (self.weight() * self.values.norm_squared()).sqrt()
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.values.shape() != other.values.shape() {
            return Err(shape_err(
                "FunctionGrid",
                format!("{:?}", self.values.shape()),
                format!("{:?}", other.values.shape()),
            ));
        }
        Ok(())
    }

    pub(crate) fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }
}

/// Contiguous partition of `0..len` grid points into bins.
#[derive(Debug, Clone, PartialEq)]
struct BinPartition {
    len: usize,
    /// `bounds[j]..bounds[j+1]` are the grid points of bin `j`.
    bounds: Vec<usize>,
}

impl BinPartition {
    /// Bins of size `⌊len/p⌋` or `⌈len/p⌉`, boundaries at `⌊j·len/p⌋`.
    fn near_uniform(len: usize, bins: usize) -> Self {
        let bounds = (0..=bins).map(|j| j * len / bins).collect();
        Self { len, bounds }
    }

    fn bins(&self) -> usize {
        self.bounds.len() - 1
    }

    fn range(&self, j: usize) -> std::ops::Range<usize> {
        self.bounds[j]..self.bounds[j + 1]
    }

    /// `1/√β(B_j)` with `β(B_j) = |B_j|/len`.
    fn inv_sqrt_measure(&self, j: usize) -> f64 {
        let width = self.range(j).len() as f64 / self.len as f64;
        1.0 / width.sqrt()
    }
}

/// Channelwise bin-averaging on a uniform partition of `[0,1]` into `p` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinAverageOp {
    bins: usize,
    channels: usize,
    grid_size: usize,
    partition: BinPartition,
}

impl BinAverageOp {
    /// Requires `grid_size` to be a multiple of `bins` so that every bin holds
    /// the same number of grid points.
    pub fn new(bins: usize, channels: usize, grid_size: usize) -> Result<Self> {
        if bins == 0 || channels == 0 || grid_size == 0 {
            return Err(Error::InvalidInput("bins, channels and grid size must be positive".into()));
        }
        if grid_size % bins != 0 {
            return Err(Error::Partition { grid: grid_size, bins });
        }
        Ok(Self {
            bins,
            channels,
            grid_size,
            partition: BinPartition::near_uniform(grid_size, bins),
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// `m = p·d`.
    pub fn output_dim(&self) -> usize {
        self.bins * self.channels
    }

    /// Flattened index of bin `j`, channel `c`.
    pub fn flat_index(&self, bin: usize, channel: usize) -> usize {
        bin * self.channels + channel
    }

    fn check_grid(&self, x: &FunctionGrid) -> Result<()> {
        if x.grid_size() % self.bins != 0 {
            return Err(Error::Partition { grid: x.grid_size(), bins: self.bins });
        }
        if x.grid_size() != self.grid_size || x.channels() != self.channels {
            return Err(shape_err(
                "BinAverageOp",
                format!("{}x{} grid", self.grid_size, self.channels),
                format!("{}x{} grid", x.grid_size(), x.channels()),
            ));
        }
        Ok(())
    }

    /// `(S v)_{ι(j,c)} = β(B_j)^{-1/2} Δ Σ_{t_a ∈ B_j} v_c(t_a)`.
    pub fn forward(&self, x: &FunctionGrid) -> Result<DVector<f64>> {
        self.check_grid(x)?;
        Ok(bin_average(&self.partition, x.values()))
    }

    /// `S* a = Σ a_{ι(j,c)} s_{(j,c)}` with `s_{(j,c)} = β(B_j)^{-1/2} 1_{B_j} e_c`.
    pub fn adjoint(&self, a: &DVector<f64>) -> Result<FunctionGrid> {
        if a.len() != self.output_dim() {
            return Err(shape_err("BinAverageOp::adjoint", self.output_dim(), a.len()));
        }
        let mut values = DMatrix::zeros(self.grid_size, self.channels);
        for j in 0..self.bins {
            let scale = self.partition.inv_sqrt_measure(j);
            for row in self.partition.range(j) {
                for c in 0..self.channels {
                    values[(row, c)] = scale * a[self.flat_index(j, c)];
                }
            }
        }
        FunctionGrid::new(values)
    }

    /// Discretize every sample into the columns of an `m × n` batch.
    pub fn forward_batch(&self, samples: &[FunctionGrid]) -> Result<SignalBatch> {
        let m = self.output_dim();
        let mut cols = DMatrix::zeros(m, samples.len());
        for (i, x) in samples.iter().enumerate() {
            cols.set_column(i, &self.forward(x)?);
        }
        SignalBatch::new(cols)
    }
}

fn bin_average(partition: &BinPartition, values: &DMatrix<f64>) -> DVector<f64> {
    let d = values.ncols();
    let delta = 1.0 / partition.len as f64;
    let mut out = DVector::zeros(partition.bins() * d);
    for j in 0..partition.bins() {
        let scale = partition.inv_sqrt_measure(j) * delta;
        for c in 0..d {
            let sum: f64 = partition.range(j).map(|a| values[(a, c)]).sum();
            out[j * d + c] = scale * sum;
        }
    }
    out
}

/// Single-channel bin-averaging of a series treated as a function on `[0,1]`
/// with one grid point per entry. When `m` does not divide the length the
/// bins have sizes `⌊L/m⌋` or `⌈L/m⌉`, each normalized by its own measure.
pub fn discretize_series(series: &[f64], m: usize) -> Result<DVector<f64>> {
    if m == 0 || m > series.len() {
        return Err(Error::InvalidInput(format!(
            "resolution m must lie in 1..={}, got {m}",
            series.len()
        )));
    }
    let values = DMatrix::from_column_slice(series.len(), 1, series);
    Ok(bin_average(&BinPartition::near_uniform(series.len(), m), &values))
}

/// `(S v)_j = v_j` for `j < m`.
pub fn canonical_projection(x: &[f64], m: usize) -> Result<DVector<f64>> {
    if m > x.len() {
        return Err(Error::Truncation { requested: m, available: x.len() });
    }
    Ok(DVector::from_column_slice(&x[..m]))
}

/// `S* a = Σ a_j e_j` embedded in a sequence of length `len`.
pub fn canonical_adjoint(a: &DVector<f64>, len: usize) -> Result<Vec<f64>> {
    if a.len() > len {
        return Err(Error::Truncation { requested: a.len(), available: len });
    }
    let mut out = vec![0.0; len];
    out[..a.len()].copy_from_slice(a.as_slice());
    Ok(out)
}

/// Kernel function on the real line.
pub type Kernel = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Point evaluation at fixed locations in an RKHS with kernel `K`.
pub struct RkhsSampler {
    kernel: Box<Kernel>,
    locations: Vec<f64>,
}

impl std::fmt::Debug for RkhsSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RkhsSampler").field("locations", &self.locations).finish()
    }
}

/// A function `Σ coeffs_i K(·, centers_i)` in the RKHS.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpansion {
    pub coeffs: Vec<f64>,
    pub centers: Vec<f64>,
}

impl RkhsSampler {
    /// Checks that the Gram matrix on `locations` is symmetric and PSD up to `-1e-10·max(1, λ_max)`.
    pub fn new(kernel: Box<Kernel>, locations: Vec<f64>) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::InvalidInput("need at least one sampling location".into()));
        }
        let s = Self { kernel, locations };
        let gram = SymMatrix::new(s.gram())?;
        let es = sym_eigendecomp(&gram)?;
        let min = *es.values().last().unwrap();
        if min < -1e-10 * es.largest().max(1.0) {
            return Err(Error::NotPsd { index: es.dim() - 1, pivot: min });
        }
        Ok(s)
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn kernel(&self, t: f64, s: f64) -> f64 {
        (self.kernel)(t, s)
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.locations.len();
        DMatrix::from_fn(m, m, |i, j| self.kernel(self.locations[i], self.locations[j]))
    }

    /// `(S v)_j = v(t_j) = Σ_i coeffs_i K(t_j, centers_i)`.
    pub fn evaluate(&self, coeffs: &[f64], centers: &[f64]) -> Result<DVector<f64>> {
        if coeffs.len() != centers.len() {
            return Err(shape_err("rkhs_evaluate", centers.len(), coeffs.len()));
        }
        Ok(DVector::from_iterator(
            self.locations.len(),
            self.locations.iter().map(|&t| {
                coeffs.iter().zip(centers).map(|(a, &c)| a * self.kernel(t, c)).sum()
            }),
        ))
    }

    /// `S* a = Σ a_j K(·, t_j)`.
    pub fn adjoint(&self, a: &DVector<f64>) -> Result<KernelExpansion> {
        if a.len() != self.locations.len() {
            return Err(shape_err("RkhsSampler::adjoint", self.locations.len(), a.len()));
        }
        Ok(KernelExpansion {
            coeffs: a.as_slice().to_vec(),
            centers: self.locations.clone(),
        })
    }

    /// RKHS inner product of two kernel expansions.
    pub fn inner(&self, u: &KernelExpansion, v: &KernelExpansion) -> f64 {
        let mut acc = 0.0;
        for (a, &s) in u.coeffs.iter().zip(&u.centers) {
            for (b, &t) in v.coeffs.iter().zip(&v.centers) {
                acc += a * b * self.kernel(s, t);
            }
        }
        acc
    }

    /// `σ(v) = S* σ_*(S v)`, a nonlinearity that stays inside the span of the representers.
    pub fn nonlinearity(&self, v: &KernelExpansion, act: impl Fn(f64) -> f64) -> Result<KernelExpansion> {
        let sampled = self.evaluate(&v.coeffs, &v.centers)?;
        self.adjoint(&sampled.map(act))
    }
}

/// Max-abs deviation between the covariance of the discretized samples and
/// `S Ĉ_n S*` assembled column by column from the fine-grid covariance operator.
pub fn check_compression_identity(samples: &[FunctionGrid], op: &BinAverageOp) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::SampleSize { needed: 2, got: samples.len() });
    }
    for s in &samples[1..] {
        samples[0].check_same_shape(s)?;
    }
    let discrete = empirical_cov_matrix(&op.forward_batch(samples)?)?;

    let m = op.output_dim();
    let mut compressed = DMatrix::zeros(m, m);
    let mut basis = DVector::zeros(m);
    for k in 0..m {
        basis.fill(0.0);
        basis[k] = 1.0;
        let lifted = op.adjoint(&basis)?;
        let image = empirical_cov_operator_apply(samples, &lifted)?;
        compressed.set_column(k, &op.forward(&image)?);
    }
    Ok((discrete.as_matrix() - compressed).amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, m: usize, d: usize) -> FunctionGrid {
        FunctionGrid::new(DMatrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn constant_function_bins() {
        let op = BinAverageOp::new(8, 2, 64).unwrap();
        let x = FunctionGrid::new(DMatrix::from_element(64, 2, 1.0)).unwrap();
        let s = op.forward(&x).unwrap();
        let expected = (1.0f64 / 8.0).sqrt();
        assert!(s.iter().all(|v| (v - expected).abs() < 1e-14));
        assert_eq!(s.len(), 16);
    }

    #[test]
    fn zero_function_bins() {
        let op = BinAverageOp::new(4, 3, 16).unwrap();
        let s = op.forward(&FunctionGrid::zeros(16, 3)).unwrap();
        assert!(s.iter().all(|v| *v == 0.0));
        let back = op.adjoint(&DVector::zeros(12)).unwrap();
        assert!(back.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_point_per_bin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_grid(&mut rng, 32, 1);
        let op = BinAverageOp::new(32, 1, 32).unwrap();
        let s = op.forward(&x).unwrap();
        let sd = (1.0f64 / 32.0).sqrt();
        for a in 0..32 {
            assert!((s[a] - x.values()[(a, 0)] * sd).abs() < 1e-15);
        }
    }

    #[test]
    fn indivisible_grid_rejected() {
        assert!(matches!(BinAverageOp::new(3, 1, 64), Err(Error::Partition { .. })));
    }

    #[test]
    fn adjoint_of_unit_vector_is_scaled_indicator() {
        let op = BinAverageOp::new(4, 2, 16).unwrap();
        let mut a = DVector::zeros(8);
        a[op.flat_index(0, 0)] = 1.0;
        let g = op.adjoint(&a).unwrap();
        for row in 0..16 {
            for c in 0..2 {
                let expected = if row < 4 && c == 0 { 2.0 } else { 0.0 };
                assert_eq!(g.values()[(row, c)], expected);
            }
        }
    }

    #[test]
    fn adjoint_wrong_length() {
        let op = BinAverageOp::new(4, 2, 16).unwrap();
        assert!(matches!(op.adjoint(&DVector::zeros(7)), Err(Error::Shape { .. })));
    }

    #[test]
    fn canonical_projection_basics() {
        let s = canonical_projection(&[5.0, 6.0, 7.0], 2).unwrap();
        assert_eq!(s.as_slice(), &[5.0, 6.0]);
        assert_eq!(canonical_projection(&[5.0, 6.0, 7.0], 3).unwrap().as_slice(), &[5.0, 6.0, 7.0]);
        assert!(matches!(canonical_projection(&[1.0], 2), Err(Error::Truncation { .. })));
        let a = DVector::from_vec(vec![1.0, -2.0]);
        let lifted = canonical_adjoint(&a, 5).unwrap();
        assert_eq!(canonical_projection(&lifted, 2).unwrap(), a);
    }

    fn gaussian_kernel() -> Box<Kernel> {
        Box::new(|t: f64, s: f64| (-(t - s) * (t - s) / 0.5).exp())
    }

    #[test]
    fn rkhs_reproducing_property() {
        let sampler = RkhsSampler::new(gaussian_kernel(), vec![0.3]).unwrap();
        let v = sampler.evaluate(&[1.0], &[0.3]).unwrap();
        assert_eq!(v[0], 1.0);
        let zero = sampler.evaluate(&[0.0, 0.0], &[0.1, 0.9]).unwrap();
        assert_eq!(zero[0], 0.0);
    }

    #[test]
    fn rkhs_two_centers_direct_sum() {
        let sampler = RkhsSampler::new(gaussian_kernel(), vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let v = sampler.evaluate(&[0.7, -1.3], &[0.2, 0.8]).unwrap();
        for (j, &t) in [0.0, 0.25, 0.5, 1.0].iter().enumerate() {
            let direct = 0.7 * (-(t - 0.2f64).powi(2) / 0.5).exp() - 1.3 * (-(t - 0.8f64).powi(2) / 0.5).exp();
            assert!((v[j] - direct).abs() <= 1e-14);
        }
    }

    #[test]
    fn rkhs_shape_error() {
        let sampler = RkhsSampler::new(gaussian_kernel(), vec![0.0]).unwrap();
        assert!(sampler.evaluate(&[1.0, 2.0], &[0.0]).is_err());
    }

    #[test]
    fn rkhs_rejects_indefinite_kernel() {
        let bad: Box<Kernel> = Box::new(|t: f64, s: f64| if t == s { 0.0 } else { 1.0 });
        assert!(RkhsSampler::new(bad, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn rkhs_nonlinearity_stays_in_span() {
        let sampler = RkhsSampler::new(gaussian_kernel(), vec![0.0, 0.5, 1.0]).unwrap();
        let v = KernelExpansion { coeffs: vec![1.0, -2.0], centers: vec![0.1, 0.6] };
        let out = sampler.nonlinearity(&v, |x| x.max(0.0)).unwrap();
        assert_eq!(out.centers, sampler.locations());
        let sampled = sampler.evaluate(&v.coeffs, &v.centers).unwrap();
        for (c, s) in out.coeffs.iter().zip(sampled.iter()) {
            assert_eq!(*c, s.max(0.0));
        }
    }

    #[test]
    fn series_discretization() {
        let series: Vec<f64> = (0..140).map(|i| i as f64 * 0.1 - 3.0).collect();
        let full = discretize_series(&series, 140).unwrap();
        let sd = (1.0f64 / 140.0).sqrt();
        for i in 0..140 {
            assert!((full[i] - series[i] * sd).abs() < 1e-14);
        }
        let constant = vec![2.5; 140];
        for m in [1, 20, 35, 70, 140, 3, 17] {
            let s = discretize_series(&constant, m).unwrap();
            let part = BinPartition::near_uniform(140, m);
            for j in 0..m {
                let width = part.range(j).len() as f64 / 140.0;
                assert!((s[j] - 2.5 * width.sqrt()).abs() < 1e-13, "m={m} j={j}");
            }
        }
        let one = discretize_series(&series, 1).unwrap();
        let mean: f64 = series.iter().sum::<f64>() / 140.0;
        assert!((one[0] - mean).abs() < 1e-13);
        assert!(discretize_series(&series, 0).is_err());
        assert!(discretize_series(&series, 141).is_err());
    }

    #[test]
    fn near_uniform_bin_sizes() {
        for m in 1..=140 {
            let part = BinPartition::near_uniform(140, m);
            let sizes: Vec<usize> = (0..m).map(|j| part.range(j).len()).collect();
            let lo = 140 / m;
            assert!(sizes.iter().all(|s| *s == lo || *s == lo + 1));
            assert_eq!(sizes.iter().sum::<usize>(), 140);
        }
    }

    #[test]
    fn compression_identical_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_grid(&mut rng, 16, 2);
        let op = BinAverageOp::new(4, 2, 16).unwrap();
        let dev = check_compression_identity(&[x.clone(), x], &op).unwrap();
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn compression_finest_discretization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<_> = (0..6).map(|_| random_grid(&mut rng, 32, 1)).collect();
        let op = BinAverageOp::new(32, 1, 32).unwrap();
        assert!(check_compression_identity(&samples, &op).unwrap() <= 1e-12);
    }

    #[test]
    fn compression_random_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples: Vec<_> = (0..10).map(|_| random_grid(&mut rng, 64, 2)).collect();
        let op = BinAverageOp::new(8, 2, 64).unwrap();
        assert!(check_compression_identity(&samples, &op).unwrap() <= 1e-10);
    }

    #[test]
    fn compression_needs_two_samples() {
        let op = BinAverageOp::new(4, 1, 16).unwrap();
        assert!(matches!(
            check_compression_identity(&[FunctionGrid::zeros(16, 1)], &op),
            Err(Error::SampleSize { .. })
        ));
    }
}
