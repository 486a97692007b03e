//! Randomized checks of the exact identities behind covariance filtering,
//! plus a finite-difference check of the network gradients.

use std::fmt;
use std::time::Instant;

use hvn_core::covariance::{empirical_cov_matrix, normalize_cov, CovMatrix, SignalBatch};
use hvn_core::discretize::{check_compression_identity, BinAverageOp, FunctionGrid};
use hvn_core::filters::{
    corollary1_scores, default_zero_cutoff, eigenprojector, hvft, kernel_projector, projector_filter_matrix,
    spatial_filter_apply_vec, theorem1_filter, DistinctSpectrum,
};
use hvn_core::linalg::{PolyCoeffs, SymMatrix};
use hvn_core::network::{hvn_backward, HvnConfig, HvnParams, ParamTensors, Shift};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::ExpResult;

pub const PROJECTOR_TOL: f64 = 1e-7;
pub const RESOLUTION_TOL: f64 = 1e-7;
pub const SCORE_TOL: f64 = 1e-8;
pub const COMPRESSION_TOL: f64 = 1e-10;
pub const POINTWISE_TOL: f64 = 1e-9;
pub const GRAD_WORST_TOL: f64 = 1e-3;
pub const GRAD_P99_TOL: f64 = 1e-4;
/// Denominator floor of the gradient relative error.
pub const GRAD_REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            max_residual: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, residual: f64) {
        // NaN residuals must fail
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = if residual.is_nan() { f64::INFINITY } else { residual };
        }
    }

    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub name: &'static str,
    pub instances: usize,
    pub checks: Vec<Check>,
    pub elapsed_ms: u128,
}

impl Family {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub families: Vec<Family>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(Family::passed)
    }

    pub fn family(&self, name: &str) -> Option<&Family> {
        self.families.iter().find(|f| f.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fam in &self.families {
            writeln!(f, "{} ({} instances, {} ms)", fam.name, fam.instances, fam.elapsed_ms)?;
            for c in &fam.checks {
                let status = if c.passed() { "ok" } else { "FAIL" };
                writeln!(f, "  {:<24} max residual {:.3e}  tol {:.0e}  {status}", c.name, c.max_residual, c.tolerance)?;
            }
        }
        Ok(())
    }
}

fn gaussian_batch(rng: &mut ChaCha8Rng, m: usize, n: usize) -> SignalBatch {
    SignalBatch::new(DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))).expect("finite samples")
}

/// Eigenvalues `{1, 0.5, 0.5, 0.2, 0}` in a random rotation.
fn repeated_eigenvalue_cov(rng: &mut ChaCha8Rng) -> CovMatrix {
    let raw = DMatrix::from_fn(5, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = raw.qr().q();
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5, 0.5, 0.2, 0.0]));
    CovMatrix::from_sym(SymMatrix::symmetrized(&q * d * q.transpose()).expect("finite"))
}

fn projector_checks(c: &CovMatrix, x: &DVector<f64>, checks: &mut [Check; 3]) -> ExpResult<()> {
    let es = c.eigen()?;
    let spectrum = DistinctSpectrum::from_eigen(&es, default_zero_cutoff(&es)).refined(c.as_sym(), &es)?;
    let m = c.dim();
    let mut total = kernel_projector(&es, &spectrum)?.into_inner();
    for &alpha in spectrum.values() {
        let h = projector_filter_matrix(c, &theorem1_filter(&spectrum, alpha)?)?;
        let p = eigenprojector(&es, &spectrum, alpha)?;
        checks[0].record((&h - p.as_matrix()).norm());
        total += h;
        checks[2].record(corollary1_scores(&spectrum, &es, c, alpha, x)?.max_deviation());
    }
    checks[1].record((total - DMatrix::identity(m, m)).norm());
    Ok(())
}

/// Eigenprojector filters: `h_α(Ĉ) = P_α`, the filters plus the kernel
/// projector sum to the identity, and filtered scores equal raw scores.
pub fn verify_projector_filters(instances: usize, seed: u64) -> ExpResult<Family> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = [
        Check::new("projector", PROJECTOR_TOL),
        Check::new("resolution-of-identity", RESOLUTION_TOL),
        Check::new("score-recovery", SCORE_TOL),
    ];
    for _ in 0..instances {
        let m = rng.random_range(2..=12);
        let n = rng.random_range(2..=10);
        let c = empirical_cov_matrix(&gaussian_batch(&mut rng, m, n))?;
        let x = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
        projector_checks(&c, &x, &mut checks)?;
    }
    let c = repeated_eigenvalue_cov(&mut rng);
    let x = DVector::from_fn(5, |_, _| rng.sample(StandardNormal));
    projector_checks(&c, &x, &mut checks)?;
    Ok(Family {
        name: "projector-filters",
        instances: instances + 1,
        checks: checks.to_vec(),
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Covariance of bin-averaged samples against the compressed fine-grid
/// covariance operator, on a 512-point grid with 32 bins.
pub fn verify_compression(instances: usize, seed: u64) -> ExpResult<Family> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = Check::new("covariance-paths", COMPRESSION_TOL);
    let (grid, bins) = (512, 32);
    for k in 0..instances {
        let d = [1, 2, 4][k % 3];
        let n = rng.random_range(2..=8);
        let op = BinAverageOp::new(bins, d, grid)?;
        let samples = (0..n)
            .map(|_| FunctionGrid::new(DMatrix::from_fn(grid, d, |_, _| rng.sample(StandardNormal))))
            .collect::<Result<Vec<_>, _>>()?;
        check.record(check_compression_identity(&samples, &op)?);
    }
    Ok(Family {
        name: "compression",
        instances,
        checks: vec![check],
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Polynomial filtering multiplies each Fourier coefficient by `h(λ_ℓ)`.
pub fn verify_pointwise(instances: usize, seed: u64) -> ExpResult<Family> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = Check::new("frequency-response", POINTWISE_TOL);
    for _ in 0..instances {
        let m = rng.random_range(2..=12);
        let n = rng.random_range(2..=10);
        let c = normalize_cov(&empirical_cov_matrix(&gaussian_batch(&mut rng, m, n))?);
        let es = c.eigen()?;
        let degree = rng.random_range(0..=4);
        let w = PolyCoeffs::new((0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect())?;
        let x = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
        let out = hvft(&es, &spatial_filter_apply_vec(&c, &w, &x)?)?;
        let input = hvft(&es, &x)?;
        for (l, &lam) in es.values().iter().enumerate() {
            check.record((out[l] - w.eval(lam) * input[l]).abs());
        }
    }
    Ok(Family {
        name: "pointwise-filtering",
        instances,
        checks: vec![check],
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// All three identity families at their default instance counts.
pub fn run_verify(seed: u64) -> ExpResult<VerifyReport> {
    Ok(VerifyReport {
        families: vec![
            verify_projector_filters(100, seed)?,
            verify_compression(50, seed.wrapping_add(1))?,
            verify_pointwise(100, seed.wrapping_add(2))?,
        ],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub coordinates: usize,
    pub worst: f64,
    pub p99: f64,
    pub elapsed_ms: u128,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.worst <= GRAD_WORST_TOL && self.p99 <= GRAD_P99_TOL
    }
}

impl fmt::Display for GradientReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gradient check: {} coordinates, worst rel {:.3e} (tol {:.0e}), p99 rel {:.3e} (tol {:.0e}), {} ms",
            self.coordinates, self.worst, GRAD_WORST_TOL, self.p99, GRAD_P99_TOL, self.elapsed_ms
        )
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_REL_FLOOR)
}

/// Central differences (step `1e-4`) on every parameter of a 2-layer
/// network with `m = 32`, width 8 and `J = 2`, on the mean loss of a small batch.
pub fn gradient_check(seed: u64) -> ExpResult<GradientReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, f, batch) = (32, 8, 4);
    let config = HvnConfig::new(f, 2, f, 2, vec![64], 2);
    let params = HvnParams::init(&config, &mut rng);
    let data: Vec<(CovMatrix, DMatrix<f64>, usize)> = (0..batch)
        .map(|k| {
            let samples = gaussian_batch(&mut rng, m, 40);
            let c = normalize_cov(&empirical_cov_matrix(&samples)?);
            let x = DMatrix::from_fn(m, f, |_, _| rng.sample(StandardNormal));
            Ok((c, x, k % 2))
        })
        .collect::<ExpResult<_>>()?;

    let loss_and_grad = |p: &HvnParams| -> ExpResult<(f64, Vec<f64>)> {
        let mut total = 0.0;
        let mut grad = p.zeros_like();
        for (c, x, label) in &data {
            let (l, _, g) = hvn_backward(&config, p, Shift::Cov(c), x, *label)?;
            total += l;
            grad.add_scaled(&g, 1.0);
        }
        grad.scale(1.0 / batch as f64);
        Ok((total / batch as f64, grad.flatten()))
    };
    let (_, analytic) = loss_and_grad(&params)?;
    let flat = params.flatten();
    let h = 1e-4;
    let mut errs = Vec::with_capacity(flat.len());
    let mut probe = params.clone();
    for k in 0..flat.len() {
        let mut p = flat.clone();
        p[k] = flat[k] + h;
        probe.set_flat(&p);
        let lp = loss_and_grad(&probe)?.0;
        p[k] = flat[k] - h;
        probe.set_flat(&p);
        let lm = loss_and_grad(&probe)?.0;
        errs.push(relative_error(analytic[k], (lp - lm) / (2.0 * h)));
    }
    errs.sort_by(f64::total_cmp);
    let p99 = errs[((errs.len() as f64 * 0.99).ceil() as usize).saturating_sub(1)];
    Ok(GradientReport {
        coordinates: errs.len(),
        worst: *errs.last().unwrap_or(&0.0),
        p99,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_pass() {
        let report = VerifyReport {
            families: vec![
                verify_projector_filters(10, 1).unwrap(),
                verify_compression(3, 2).unwrap(),
                verify_pointwise(10, 3).unwrap(),
            ],
        };
        assert!(report.passed(), "{report}");
        assert_eq!(report.families.len(), 3);
        assert_eq!(report.family("projector-filters").unwrap().instances, 11);
        let text = report.to_string();
        assert!(text.contains("compression (3 instances"));
    }

    #[test]
    fn failing_check_is_reported() {
        let mut c = Check::new("x", 1e-3);
        c.record(f64::NAN);
        assert!(!c.passed());
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.001) - 0.001 / 1.001).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0) - 1e-3).abs() < 1e-15);
    }
}
