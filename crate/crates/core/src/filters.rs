//! Covariance Fourier transform, spectral and polynomial covariance filters,
//! eigenspace projectors realised as polynomials, and FPCA scores.

use nalgebra::{DMatrix, DVector};
use twofloat::TwoFloat;

use crate::covariance::{empirical_cov_matrix, CovMatrix, SignalBatch};
use crate::error::{shape_err, Error, Result};
use crate::linalg::{matrix_poly_apply, rayleigh_quotient_precise, LagrangeFactors, tie_tolerance, EigenSystem, PolyCoeffs, SymMatrix};

/// Relative zero cutoff: eigenvalues at or below `ZERO_CUTOFF_REL · λ_max` belong to the kernel.
pub const ZERO_CUTOFF_REL: f64 = 1e-10;

pub fn default_zero_cutoff(es: &EigenSystem) -> f64 {
    ZERO_CUTOFF_REL * es.largest().max(0.0)
}

/// A frequency response `h` together with the value it applies on the kernel.
pub struct SpectralResponse {
    h: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    h_at_zero: f64,
}

impl SpectralResponse {
    /// Rejects responses that are non-finite anywhere on a 1000-point sampling of `[0, λ_max]`.
    pub fn new(h: impl Fn(f64) -> f64 + Send + Sync + 'static, lambda_max: f64) -> Result<Self> {
        let samples = 1000;
        for k in 0..=samples {
            let t = lambda_max.max(0.0) * k as f64 / samples as f64;
            if !h(t).is_finite() {
                return Err(Error::InvalidInput(format!("frequency response is not finite at {t}")));
            }
        }
        let h_at_zero = h(0.0);
        Ok(Self { h: Box::new(h), h_at_zero })
    }

    /// Override the value applied to the kernel component.
    pub fn with_h_at_zero(mut self, value: f64) -> Self {
        self.h_at_zero = value;
        self
    }

    /// Frequency response of the polynomial `Σ w_k λ^k`.
    pub fn polynomial(w: &PolyCoeffs, lambda_max: f64) -> Result<Self> {
        let w = w.clone();
        Self::new(move |t| w.eval(t), lambda_max)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.h)(t)
    }

    pub fn h_at_zero(&self) -> f64 {
        self.h_at_zero
    }
}

/// Distinct positive eigenvalues of an eigensystem and, for each, the
/// indices of the eigenvalues grouped under it.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinctSpectrum {
    values: Vec<f64>,
    precise: Vec<TwoFloat>,
    groups: Vec<Vec<usize>>,
}

impl DistinctSpectrum {
    /// Groups consecutive eigenvalues above `zero_cutoff` whose gap to the
    /// previous member is within the tie tolerance. Each group's value is the
    /// mean of its members.
    pub fn from_eigen(es: &EigenSystem, zero_cutoff: f64) -> Self {
        let tol = tie_tolerance(es.largest());
        let mut values = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut last = f64::NAN;
        for (idx, &lam) in es.values().iter().enumerate() {
            if lam <= zero_cutoff {
                break;
            }
            if !groups.is_empty() && (last - lam).abs() <= tol {
                groups.last_mut().unwrap().push(idx);
            } else {
                groups.push(vec![idx]);
            }
            last = lam;
        }
        for g in &groups {
            values.push(g.iter().map(|&i| es.values()[i]).sum::<f64>() / g.len() as f64);
        }
        let precise = values.iter().map(|&v| TwoFloat::from(v)).collect();
        Self { values, precise, groups }
    }

    /// Replace each distinct value by the mean Rayleigh quotient of its
    /// eigenvectors against `a`, evaluated in double-double precision.
    pub fn refined(mut self, a: &SymMatrix, es: &EigenSystem) -> Result<Self> {
        for (k, g) in self.groups.iter().enumerate() {
            let mut sum = TwoFloat::from(0.0);
            for &l in g {
                sum += rayleigh_quotient_precise(a, es.vector(l).as_slice())?;
            }
            let mean = sum / g.len() as f64;
            self.precise[k] = mean;
            self.values[k] = f64::from(mean);
        }
        Ok(self)
    }

    /// Distinct values in double-double precision.
    pub fn precise_values(&self) -> &[TwoFloat] {
        &self.precise
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Position of `alpha` among the distinct values.
    pub fn position(&self, alpha: f64) -> Result<usize> {
        self.values
            .iter()
            .position(|&v| v == alpha)
            .or_else(|| {
                let tol = tie_tolerance(self.values.first().copied().unwrap_or(0.0));
                self.values.iter().position(|&v| (v - alpha).abs() <= tol)
            })
            .ok_or(Error::InvalidTarget(alpha))
    }

    pub fn group_of(&self, alpha: f64) -> Result<&[usize]> {
        Ok(&self.groups[self.position(alpha)?])
    }
}

fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(shape_err(context, expected, got));
    }
    Ok(())
}

/// `x̃[ℓ] = ⟨x, φ_ℓ⟩`.
pub fn hvft(es: &EigenSystem, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("hvft", es.dim(), x.len())?;
    Ok(es.vectors().tr_mul(x))
}

/// `Σ_{λ_ℓ > cutoff} h(λ_ℓ) ⟨x,φ_ℓ⟩ φ_ℓ + h(0) x_⊥`.
pub fn spectral_filter_apply(
    es: &EigenSystem,
    resp: &SpectralResponse,
    x: &DVector<f64>,
    zero_cutoff: f64,
) -> Result<DVector<f64>> {
    let coeffs = hvft(es, x)?;
    let mut filtered = DVector::zeros(x.len());
    let mut kernel = x.clone();
    for (l, &lam) in es.values().iter().enumerate() {
        if lam <= zero_cutoff {
            continue;
        }
        let phi = es.vector(l);
        filtered.axpy(resp.eval(lam) * coeffs[l], &phi, 1.0);
        kernel.axpy(-coeffs[l], &phi, 1.0);
    }
    filtered.axpy(resp.h_at_zero(), &kernel, 1.0);
    Ok(filtered)
}

/// `Σ_j w_j C^j x` for a single signal or for every column of a batch.
pub fn spatial_filter_apply(c: &CovMatrix, w: &PolyCoeffs, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    matrix_poly_apply(c.as_sym(), w, x)
}

pub fn spatial_filter_apply_vec(c: &CovMatrix, w: &PolyCoeffs, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("spatial_filter_apply", c.dim(), x.len())?;
    let out = matrix_poly_apply(c.as_sym(), w, &DMatrix::from_column_slice(x.len(), 1, x.as_slice()))?;
    Ok(out.column(0).into_owned())
}

/// `P_α = Σ_{ℓ ∈ I(α)} φ_ℓ φ_ℓᵀ`.
pub fn eigenprojector(es: &EigenSystem, spectrum: &DistinctSpectrum, alpha: f64) -> Result<SymMatrix> {
    let group = spectrum.group_of(alpha)?;
    let n = es.dim();
    let mut p = DMatrix::zeros(n, n);
    for &l in group {
        let phi = es.vector(l);
        p.ger(1.0, &phi, &phi, 1.0);
    }
    SymMatrix::symmetrized(p)
}

/// Projector onto the kernel: identity minus all positive-eigenvalue projectors.
pub fn kernel_projector(es: &EigenSystem, spectrum: &DistinctSpectrum) -> Result<SymMatrix> {
    let n = es.dim();
    let mut p = DMatrix::identity(n, n);
    for g in spectrum.groups() {
        for &l in g {
            let phi = es.vector(l);
            p.ger(-1.0, &phi, &phi, 1.0);
        }
    }
    SymMatrix::symmetrized(p)
}

/// Polynomial filter `h_α` with `h_α(Ĉ) = P_α`: the scaled Lagrange
/// polynomial on the distinct spectrum, of degree `q = |Λ|`.
pub fn theorem1_filter(spectrum: &DistinctSpectrum, alpha: f64) -> Result<LagrangeFactors> {
    if spectrum.is_empty() {
        return Err(Error::Degenerate("spectrum has no positive eigenvalues".into()));
    }
    let idx = spectrum.position(alpha)?;
    LagrangeFactors::from_precise(spectrum.precise_values(), spectrum.values()[idx])
}

/// The matrix `h(C) = Σ_j w_j C^j`, built column by column through the
/// polynomial application path.
pub fn filter_matrix(c: &CovMatrix, w: &PolyCoeffs) -> Result<DMatrix<f64>> {
    spatial_filter_apply(c, w, &DMatrix::identity(c.dim(), c.dim()))
}

/// `h_α(C)` from the factored Lagrange polynomial.
pub fn projector_filter_matrix(c: &CovMatrix, h: &LagrangeFactors) -> Result<DMatrix<f64>> {
    h.apply(c.as_sym(), &DMatrix::identity(c.dim(), c.dim()))
}

/// Scores `⟨h_α(Ĉ)x, φ_ℓ⟩` for `ℓ ∈ I(α)` paired with the raw scores `⟨x, φ_ℓ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecovery {
    pub indices: Vec<usize>,
    pub filtered: Vec<f64>,
    pub raw: Vec<f64>,
}

impl ScoreRecovery {
    pub fn max_deviation(&self) -> f64 {
        self.filtered
            .iter()
            .zip(&self.raw)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn corollary1_scores(
    spectrum: &DistinctSpectrum,
    es: &EigenSystem,
    c: &CovMatrix,
    alpha: f64,
    x: &DVector<f64>,
) -> Result<ScoreRecovery> {
    let h = theorem1_filter(spectrum, alpha)?;
    check_len("corollary1_scores", c.dim(), x.len())?;
    let filtered_signal = h.apply(c.as_sym(), &DMatrix::from_column_slice(x.len(), 1, x.as_slice()))?.column(0).into_owned();
    let indices = spectrum.group_of(alpha)?.to_vec();
    let filtered = indices.iter().map(|&l| filtered_signal.dot(&es.vector(l))).collect();
    let raw = indices.iter().map(|&l| x.dot(&es.vector(l))).collect();
    Ok(ScoreRecovery { indices, filtered, raw })
}

/// First `O` PCA scores of each centered sample of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct FpcaScores {
    /// `O × n`, column `i` holds the scores of sample `i`.
    pub scores: DMatrix<f64>,
    /// Number of eigenvalues above the zero cutoff.
    pub rank: usize,
    /// Set when `O` exceeds the rank; trailing rows are zero.
    pub rank_warning: bool,
}

pub fn fpca_scores(batch: &SignalBatch, num_scores: usize) -> Result<FpcaScores> {
    if num_scores > batch.dim() {
        return Err(Error::InvalidInput(format!(
            "cannot take {num_scores} scores of {}-dimensional signals",
            batch.dim()
        )));
    }
    let cov = empirical_cov_matrix(batch)?;
    let es = cov.eigen()?;
    let centered = batch.centered();
    Ok(project_scores(&es, centered.columns(), num_scores))
}

/// Project already-centered columns onto the top `num_scores` eigenvectors
/// of `es`, zeroing rows at or beyond the numerical rank.
pub fn project_scores(es: &EigenSystem, centered: &DMatrix<f64>, num_scores: usize) -> FpcaScores {
    let cutoff = default_zero_cutoff(es);
    let rank = es.values().iter().take_while(|&&l| l > cutoff).count();
    let kept = num_scores.min(rank);
    let mut scores = DMatrix::zeros(num_scores, centered.ncols());
    if kept > 0 {
        let basis = es.vectors().columns(0, kept);
        scores.rows_mut(0, kept).copy_from(&(basis.transpose() * centered));
    }
    FpcaScores {
        scores,
        rank,
        rank_warning: num_scores > rank,
    }
}
