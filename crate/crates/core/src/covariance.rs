//! Empirical covariance of discretized batches and of fine-grid samples.

use nalgebra::{DMatrix, DVector};

use crate::discretize::FunctionGrid;
use crate::error::{shape_err, Error, Result};
use crate::linalg::{power_iteration_max, sym_eigendecomp_psd, EigenSystem, SymMatrix};

/// `m × n` matrix whose column `i` is the discretized sample `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBatch {
    columns: DMatrix<f64>,
}

impl SignalBatch {
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        if columns.ncols() == 0 || columns.nrows() == 0 {
            return Err(Error::InvalidInput("signal batch needs at least one sample of positive dimension".into()));
        }
        if columns.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("signal batch entries must be finite".into()));
        }
        Ok(Self { columns })
    }

    pub fn from_signals(signals: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = signals.first() else {
            return Err(Error::SampleSize { needed: 1, got: 0 });
        };
        if let Some(bad) = signals.iter().find(|s| s.len() != first.len()) {
            return Err(shape_err("SignalBatch::from_signals", first.len(), bad.len()));
        }
        Self::new(DMatrix::from_columns(signals))
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn into_columns(self) -> DMatrix<f64> {
        self.columns
    }

    pub fn mean(&self) -> DVector<f64> {
        self.columns.column_mean()
    }

    /// Subtract the batch mean from every column.
    pub fn centered(&self) -> Self {
        Self {
            columns: center_columns(&self.columns, &self.mean()),
        }
    }

    /// Subtract an externally supplied mean, e.g. a training-set mean.
    pub fn centered_by(&self, mean: &DVector<f64>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(shape_err("SignalBatch::centered_by", self.dim(), mean.len()));
        }
        Ok(Self {
            columns: center_columns(&self.columns, mean),
        })
    }

    /// `(1/n) Σ ‖x_i‖²`.
    pub fn mean_sq_norm(&self) -> f64 {
        self.columns.norm_squared() / self.len() as f64
    }
}

fn center_columns(cols: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = cols.clone();
    for mut col in out.column_iter_mut() {
        col -= mean;
    }
    out
}

/// Symmetric PSD empirical covariance matrix estimated from `n` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    inner: SymMatrix,
    samples: usize,
}

impl CovMatrix {
    /// Wrap an arbitrary PSD matrix (no sample count is known, so the rank
    /// bound is the dimension).
    pub fn from_sym(inner: SymMatrix) -> Self {
        let samples = inner.dim() + 1;
        Self { inner, samples }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_sym(SymMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.inner
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.inner.as_matrix()
    }

    /// `n - 1`, the largest rank an `n`-sample covariance can have.
    pub fn rank_bound(&self) -> usize {
        self.samples.saturating_sub(1).min(self.dim())
    }

    pub fn eigen(&self) -> Result<EigenSystem> {
        sym_eigendecomp_psd(&self.inner)
    }
}

/// `Ĉ = (1/n) Σ (x_i - x̄)(x_i - x̄)ᵀ`.
pub fn empirical_cov_matrix(batch: &SignalBatch) -> Result<CovMatrix> {
    let n = batch.len();
    if n < 2 {
        return Err(Error::SampleSize { needed: 2, got: n });
    }
    let centered = batch.centered();
    let c = centered.columns();
    let cov = (c * c.transpose()) / n as f64;
    Ok(CovMatrix {
        inner: SymMatrix::symmetrized(cov)?,
        samples: n,
    })
}

/// `Ĉ_n v = (1/n) Σ ⟨x_i - x̄, v⟩ (x_i - x̄)` on the fine grid.
pub fn empirical_cov_operator_apply(samples: &[FunctionGrid], v: &FunctionGrid) -> Result<FunctionGrid> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::SampleSize { needed: 2, got: n });
    }
    for s in samples {
        s.check_same_shape(v)?;
    }
    let mut mean = DMatrix::zeros(v.grid_size(), v.channels());
    for s in samples {
        mean += s.values();
    }
    mean /= n as f64;

    let mut out = FunctionGrid::zeros(v.grid_size(), v.channels());
    let weight = v.weight();
    for s in samples {
        let dev = s.values() - &mean;
        let coef = weight * dev.dot(v.values()) / n as f64;
        *out.values_mut() += dev * coef;
    }
    Ok(out)
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 500;
const NORMALIZE_FLOOR: f64 = 1e-12;

/// `c / λ_max(c)`, or `c` unchanged when `λ_max ≤ 1e-12`. λ_max comes from
/// power iteration.
pub fn normalize_cov(c: &CovMatrix) -> CovMatrix {
    let lambda = power_iteration_max(&c.inner, POWER_TOL, POWER_MAX_ITER);
    rescale(c, lambda)
}

/// Same as [`normalize_cov`] but reuses an eigendecomposition of `c`.
pub fn normalize_cov_with(c: &CovMatrix, es: &EigenSystem) -> CovMatrix {
    rescale(c, es.largest())
}

fn rescale(c: &CovMatrix, lambda: f64) -> CovMatrix {
    if lambda > NORMALIZE_FLOOR {
        CovMatrix {
            inner: c.inner.scaled(1.0 / lambda),
            samples: c.samples,
        }
    } else {
        c.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_columns_give_zero() {
        let col = DVector::from_vec(vec![1.0, 2.0, -3.0]);
        let batch = SignalBatch::from_signals(&[col.clone(), col.clone(), col]).unwrap();
        let c = empirical_cov_matrix(&batch).unwrap();
        assert!(c.as_matrix().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn symmetric_pair() {
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let batch = SignalBatch::from_signals(&[x.clone(), -x.clone()]).unwrap();
        let c = empirical_cov_matrix(&batch).unwrap();
        assert!((c.as_matrix() - &x * x.transpose()).amax() < 1e-15);
        assert_eq!(c.rank_bound(), 1);
    }

    #[test]
    fn matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m, n) = (8, 20);
        let x = DMatrix::from_fn(m, n, |_, _| rng.random_range(-2.0..2.0));
        let c = empirical_cov_matrix(&SignalBatch::new(x.clone()).unwrap()).unwrap();
        let mut mean = vec![0.0; m];
        for i in 0..m {
            for k in 0..n {
                mean[i] += x[(i, k)];
            }
            mean[i] /= n as f64;
        }
        for i in 0..m {
            for j in 0..m {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += (x[(i, k)] - mean[i]) * (x[(j, k)] - mean[j]);
                }
                assert!((c.as_matrix()[(i, j)] - acc / n as f64).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn needs_two_samples() {
        let batch = SignalBatch::new(DMatrix::zeros(3, 1)).unwrap();
        assert!(matches!(empirical_cov_matrix(&batch), Err(Error::SampleSize { .. })));
    }

    #[test]
    fn operator_kernel_and_pair() {
        let x = FunctionGrid::new(DMatrix::from_fn(8, 1, |a, _| if a < 4 { 1.0 } else { 0.0 })).unwrap();
        let neg = FunctionGrid::new(-x.values().clone()).unwrap();
        let samples = [x.clone(), neg];
        let orth = FunctionGrid::new(DMatrix::from_fn(8, 1, |a, _| if a < 4 { 0.0 } else { 1.0 })).unwrap();
        let out = empirical_cov_operator_apply(&samples, &orth).unwrap();
        assert!(out.values().iter().all(|v| *v == 0.0));

        let out = empirical_cov_operator_apply(&samples, &x).unwrap();
        let nsq = x.norm().powi(2);
        assert!((out.values() - x.values() * nsq).amax() < 1e-15);
    }

    #[test]
    fn operator_self_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut grid = || FunctionGrid::new(DMatrix::from_fn(32, 2, |_, _| rng.random_range(-1.0..1.0))).unwrap();
        let samples: Vec<_> = (0..5).map(|_| grid()).collect();
        let (v, w) = (grid(), grid());
        let cv = empirical_cov_operator_apply(&samples, &v).unwrap();
        let cw = empirical_cov_operator_apply(&samples, &w).unwrap();
        assert!((cv.inner(&w).unwrap() - v.inner(&cw).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn operator_shape_error() {
        let samples = [FunctionGrid::zeros(8, 1), FunctionGrid::zeros(8, 1)];
        assert!(empirical_cov_operator_apply(&samples, &FunctionGrid::zeros(8, 2)).is_err());
    }

    #[test]
    fn normalization() {
        let c = CovMatrix::from_sym(SymMatrix::from_diagonal(&[4.0, 2.0]).unwrap());
        // power iteration stops at a 1e-10 relative change
        let nc = normalize_cov(&c);
        assert!((nc.as_matrix()[(0, 0)] - 1.0).abs() < 1e-9);
        assert!((nc.as_matrix()[(1, 1)] - 0.5).abs() < 1e-9);
        let exact = normalize_cov_with(&c, &c.eigen().unwrap());
        assert_eq!(exact.as_matrix()[(0, 0)], 1.0);
        assert_eq!(exact.as_matrix()[(1, 1)], 0.5);

        let z = CovMatrix::from_sym(SymMatrix::zeros(3));
        assert_eq!(normalize_cov(&z), z);

        let id = CovMatrix::identity(4);
        assert!((normalize_cov(&id).as_matrix() - DMatrix::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn normalization_preserves_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = DMatrix::from_fn(6, 9, |_, _| rng.random_range(-1.0..1.0));
        let c = empirical_cov_matrix(&SignalBatch::new(x).unwrap()).unwrap();
        let es = c.eigen().unwrap();
        let nc = normalize_cov_with(&c, &es);
        let nes = nc.eigen().unwrap();
        assert!((nes.largest() - 1.0).abs() < 1e-12);
        for (a, b) in es.values().iter().zip(nes.values()) {
            assert!((a / es.largest() - b).abs() < 1e-12);
        }
        for j in 0..6 {
            if es.values()[j] > 1e-10 {
                let dot = es.vector(j).dot(&nes.vector(j));
                assert!((dot.abs() - 1.0).abs() < 1e-9);
            }
        }
    }
}
