use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::discretize::FunctionGrid;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_psd, SymMatrix};

pub const GP_JITTER: f64 = 1e-10;

/// Separable kernel `K((t,c),(s,c')) = exp(-(t-s)²/(2φ²)) Σ[c,c']` where
/// `Σ = I` for class 0 and `Σ[i,j] = ρ^|i-j|` for class 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpSpec {
    pub channels: usize,
    pub length_scale: f64,
    pub rho: f64,
    pub class: usize,
    pub grid_size: usize,
}

impl GpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.grid_size == 0 {
            return Err(Error::InvalidInput("GP needs at least one channel and one grid point".into()));
        }
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(Error::InvalidInput(format!("length scale must be positive, got {}", self.length_scale)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidInput(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if self.class > 1 {
            return Err(Error::LabelOutOfRange { label: self.class, classes: 2 });
        }
        Ok(())
    }

    pub fn temporal(&self, t: f64, s: f64) -> f64 {
        let r = t - s;
        (-(r * r) / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    pub fn channel_cov(&self) -> DMatrix<f64> {
        let d = self.channels;
        match self.class {
            0 => DMatrix::identity(d, d),
            _ => DMatrix::from_fn(d, d, |i, j| self.rho.powi(i.abs_diff(j) as i32)),
        }
    }

    pub fn dim(&self) -> usize {
        self.grid_size * self.channels
    }
}

/// Gram matrix on the grid `t_a = a/M`, indexed `a * d + c`.
pub fn gp_kernel_matrix(spec: &GpSpec) -> Result<SymMatrix> {
    spec.validate()?;
    let d = spec.channels;
    let m = spec.grid_size as f64;
    let sigma = spec.channel_cov();
    let temporal: Vec<f64> = (0..spec.grid_size).map(|k| spec.temporal(k as f64 / m, 0.0)).collect();
    let k = DMatrix::from_fn(spec.dim(), spec.dim(), |i, j| {
        let (a, c) = (i / d, i % d);
        let (b, c2) = (j / d, j % d);
        temporal[a.abs_diff(b)] * sigma[(c, c2)]
    });
    SymMatrix::new(k)
}

/// Cached Cholesky factor of the GP Gram matrix.
#[derive(Debug, Clone)]
pub struct GpSampler {
    spec: GpSpec,
    factor: DMatrix<f64>,
}

impl GpSampler {
    pub fn new(spec: GpSpec) -> Result<Self> {
        let k = gp_kernel_matrix(&spec)?;
        let factor = cholesky_psd(&k, GP_JITTER)?;
        Ok(Self { spec, factor })
    }

    pub fn spec(&self) -> &GpSpec {
        &self.spec
    }

    /// Lower-triangular `L` with `L Lᵀ = K + jitter·I`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// `dim × n` standard normal draws.
    pub fn draw_normals(&self, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        DMatrix::from_fn(self.spec.dim(), n, |_, _| rng.sample(StandardNormal))
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<FunctionGrid>> {
        if n == 0 {
            return Err(Error::SampleSize { needed: 1, got: 0 });
        }
        let flat = &self.factor * self.draw_normals(n, rng);
        flat.column_iter()
            .map(|col| FunctionGrid::from_flat(col.as_slice(), self.spec.grid_size, self.spec.channels))
            .collect()
    }
}

/// `n` draws `L z` reshaped to `M × d` grids.
pub fn sample_gp_bag(spec: &GpSpec, n: usize, rng: &mut impl Rng) -> Result<Vec<FunctionGrid>> {
    GpSampler::new(*spec)?.sample(n, rng)
}
