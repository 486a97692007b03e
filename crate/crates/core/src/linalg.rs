//! Dense symmetric linear algebra: Jacobi eigendecomposition, jittered
//! Cholesky, polynomial application by repeated multiplication and the
//! scaled Lagrange construction used to build eigenspace projectors.

use nalgebra::DMatrix;
use twofloat::TwoFloat;

use crate::error::{shape_err, Error, Result};

/// Absolute tolerance on `|a_ij - a_ji|` accepted by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Jacobi stops once the off-diagonal Frobenius norm is below this fraction of `‖a‖_F`.
pub const JACOBI_REL_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues in `[-PSD_CLAMP, 0)` are set to zero by [`sym_eigendecomp_psd`].
pub const PSD_CLAMP: f64 = 1e-10;

/// Two eigenvalues are the same distinct value when they differ by at most
/// `TIE_REL_TOL * max(1, λ_max)`.
pub const TIE_REL_TOL: f64 = 1e-8;

/// Nodes closer than this relative gap are rejected by [`LagrangeFactors::new`].
pub const NODE_REL_GAP: f64 = 1e-10;

/// Tie tolerance for a spectrum whose largest eigenvalue is `lambda_max`.
pub fn tie_tolerance(lambda_max: f64) -> f64 {
    TIE_REL_TOL * lambda_max.max(1.0)
}

/// A real symmetric matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(shape_err(
                "SymMatrix::new",
                "square matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// Replaces `m` by `(m + mᵀ)/2` before validating; used for products such
    /// as `X Xᵀ` that are symmetric only up to rounding.
    pub fn symmetrized(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(shape_err(
                "SymMatrix::symmetrized",
                "square matrix",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Self::new(sym)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

/// Eigenvalues in descending order with the matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, idx: usize) -> nalgebra::DVectorView<'_, f64> {
        self.vectors.column(idx)
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `Q diag(λ) Qᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, lam) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*lam);
        }
        scaled * self.vectors.transpose()
    }

    /// Same eigenvectors, eigenvalues multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            vectors: self.vectors.clone(),
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Eigenvalues come back sorted descending (ties keep their sweep order) and
/// each eigenvector is signed so that its first entry with magnitude above
/// `1e-12` is positive. The result is a deterministic function of the input.
pub fn sym_eigendecomp(a: &SymMatrix) -> Result<EigenSystem> {
    let n = a.dim();
    let src = a.as_matrix();
    if src.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    // row-major working copy
    let mut m: Vec<f64> = (0..n * n).map(|k| src[(k / n, k % n)]).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let total = a.frobenius();
    let threshold = JACOBI_REL_TOL * total;
    let mut converged = false;
    for _ in 0..=JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&m, n);
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, n, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    fix_signs(&mut vectors);
    Ok(EigenSystem { values, vectors })
}

/// [`sym_eigendecomp`] for matrices known to be PSD: eigenvalues in
/// `[-1e-10, 0)` are clamped to zero, anything more negative is an error.
pub fn sym_eigendecomp_psd(a: &SymMatrix) -> Result<EigenSystem> {
    let mut es = sym_eigendecomp(a)?;
    for (idx, lam) in es.values.iter_mut().enumerate() {
        if *lam < 0.0 {
            if *lam >= -PSD_CLAMP {
                *lam = 0.0;
            } else {
                return Err(Error::NotPsd { index: idx, pivot: *lam });
            }
        }
    }
    Ok(es)
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[i * n + j] * m[i * n + j];
            }
        }
    }
    acc.sqrt()
}

fn rotate(m: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = m[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = m[p * n + p];
    let aqq = m[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[k * n + p];
        let akq = m[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        m[k * n + p] = new_kp;
        m[p * n + k] = new_kp;
        m[k * n + q] = new_kq;
        m[q * n + k] = new_kq;
    }
    m[p * n + p] = app - t * apq;
    m[q * n + q] = aqq + t * apq;
    m[p * n + q] = 0.0;
    m[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Lower-triangular `L` with `L Lᵀ = a + jitter·I`.
pub fn cholesky_psd(a: &SymMatrix, jitter: f64) -> Result<DMatrix<f64>> {
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(Error::InvalidInput(format!("jitter must be a nonnegative finite number, got {jitter}")));
    }
    let n = a.dim();
    let src = a.as_matrix();
    // row-major lower triangle so the inner dot products run over contiguous memory
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let row_j = &l[j * n..j * n + j];
        let d = src[(j, j)] + jitter - dot(row_j, row_j);
        if !(d > 0.0) {
            return Err(Error::NotPsd { index: j, pivot: d });
        }
        let diag = d.sqrt();
        l[j * n + j] = diag;
        for i in (j + 1)..n {
            let (upper, lower) = l.split_at_mut(i * n);
            let row_j = &upper[j * n..j * n + j];
            let row_i = &mut lower[..n];
            let s = src[(i, j)] - dot(&row_i[..j], row_j);
            row_i[j] = s / diag;
        }
    }
    Ok(DMatrix::from_fn(n, n, |r, c| if c <= r { l[r * n + c] } else { 0.0 }))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coefficients `w_0..w_J` of a polynomial `Σ w_k t^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs(Vec<f64>);

impl PolyCoeffs {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("polynomial needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("polynomial coefficients must be finite".into()));
        }
        Ok(Self(coeffs))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, w| acc * t + w)
    }
}

/// `Σ_j w_j C^j x` evaluated by Horner's rule, one multiplication by `C` per tap.
pub fn matrix_poly_apply(c: &SymMatrix, w: &PolyCoeffs, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() != c.dim() {
        return Err(shape_err(
            "matrix_poly_apply",
            format!("{} rows", c.dim()),
            format!("{} rows", x.nrows()),
        ));
    }
    let coeffs = w.coeffs();
    let last = coeffs.len() - 1;
    let mut acc = x * coeffs[last];
    for &wj in coeffs[..last].iter().rev() {
        acc = c.as_matrix() * &acc;
        acc += x * wj;
    }
    Ok(acc)
}

/// Scaled Lagrange polynomial on `nodes ∪ {0}` kept in factored form
/// `(t/α) ∏_{β≠α} (t-β)/(α-β)`: one at `α`, zero at every other node and at
/// the origin, degree `nodes.len()`.
///
/// Nodes are held in double-double precision. Near-zero or clustered nodes
/// make `|h'|` at the other nodes as large as `1e10`, so rounding a node to
/// `f64` alone would already leave residuals near `1e-6` in `h(C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeFactors {
    alpha: TwoFloat,
    others: Vec<TwoFloat>,
}

impl LagrangeFactors {
    pub fn new(nodes: &[f64], target: f64) -> Result<Self> {
        let precise: Vec<TwoFloat> = nodes.iter().map(|&v| TwoFloat::from(v)).collect();
        Self::from_precise(&precise, target)
    }

    /// Same as [`LagrangeFactors::new`] with double-double nodes; `target` is
    /// matched against the nodes rounded to `f64`.
    pub fn from_precise(nodes: &[TwoFloat], target: f64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Degenerate("empty node set".into()));
        }
        let rounded: Vec<f64> = nodes.iter().map(|&v| f64::from(v)).collect();
        if let Some(bad) = rounded.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidInput(format!("nodes must be finite and positive, got {bad}")));
        }
        for (i, a) in rounded.iter().enumerate() {
            for b in &rounded[i + 1..] {
                if (a - b).abs() <= NODE_REL_GAP * a.abs().max(b.abs()) {
                    return Err(Error::Degenerate(format!("nodes {a} and {b} coincide")));
                }
            }
        }
        let alpha_idx = rounded
            .iter()
            .position(|&x| x == target)
            .or_else(|| {
                rounded
                    .iter()
                    .position(|&x| (x - target).abs() <= NODE_REL_GAP * x.abs().max(target.abs()))
            })
            .ok_or(Error::InvalidTarget(target))?;
        let others = nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != alpha_idx)
            .map(|(_, &b)| b)
            .collect();
        Ok(Self {
            alpha: nodes[alpha_idx],
            others,
        })
    }

    pub fn alpha(&self) -> f64 {
        f64::from(self.alpha)
    }

    pub fn degree(&self) -> usize {
        self.others.len() + 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = TwoFloat::from(t);
        let v = self
            .others
            .iter()
            .fold(t / self.alpha, |acc, &b| acc * (t - b) / (self.alpha - b));
        f64::from(v)
    }

    /// Monomial coefficients, expanded factor by factor.
    pub fn coeffs(&self) -> PolyCoeffs {
        let zero = TwoFloat::from(0.0);
        let mut poly = vec![zero, TwoFloat::from(1.0) / self.alpha];
        for &beta in &self.others {
            let scale = TwoFloat::from(1.0) / (self.alpha - beta);
            let mut next = vec![zero; poly.len() + 1];
            for (k, &p) in poly.iter().enumerate() {
                next[k + 1] += p * scale;
                next[k] -= beta * p * scale;
            }
            poly = next;
        }
        PolyCoeffs(poly.into_iter().map(f64::from).collect())
    }

    /// `h(C) x` applied one factor at a time in double-double arithmetic,
    /// rounded to `f64` at the end.
    pub fn apply(&self, c: &SymMatrix, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = c.dim();
        if x.nrows() != n {
            return Err(shape_err(
                "LagrangeFactors::apply",
                format!("{n} rows"),
                format!("{} rows", x.nrows()),
            ));
        }
        let cm = c.as_matrix();
        let cols = x.ncols();
        let mut acc: Vec<TwoFloat> = x.iter().map(|&v| TwoFloat::from(v)).collect();
        let factors = std::iter::once((TwoFloat::from(0.0), self.alpha))
            .chain(self.others.iter().map(|&b| (b, self.alpha - b)));
        let mut next = acc.clone();
        for (beta, denom) in factors {
            // column-major: entry (i, j) lives at j * n + i
            for j in 0..cols {
                let col = &acc[j * n..(j + 1) * n];
                for i in 0..n {
                    let mut s = TwoFloat::from(0.0);
                    for (k, &v) in col.iter().enumerate() {
                        s += v * cm[(i, k)];
                    }
                    next[j * n + i] = (s - col[i] * beta) / denom;
                }
            }
            std::mem::swap(&mut acc, &mut next);
        }
        Ok(DMatrix::from_iterator(n, cols, acc.into_iter().map(f64::from)))
    }
}

/// `vᵀ A v / vᵀ v` accumulated in double-double arithmetic.
pub fn rayleigh_quotient_precise(a: &SymMatrix, v: &[f64]) -> Result<TwoFloat> {
    let n = a.dim();
    if v.len() != n {
        return Err(shape_err("rayleigh_quotient_precise", n, v.len()));
    }
    let m = a.as_matrix();
    let mut num = TwoFloat::from(0.0);
    let mut den = TwoFloat::from(0.0);
    for i in 0..n {
        let mut s = TwoFloat::from(0.0);
        for (k, &vk) in v.iter().enumerate() {
            s += TwoFloat::from(m[(i, k)]) * vk;
        }
        num += s * v[i];
        den += TwoFloat::from(v[i]) * v[i];
    }
    if den == TwoFloat::from(0.0) {
        return Err(Error::Degenerate("zero vector".into()));
    }
    Ok(num / den)
}

/// Monomial coefficients of the scaled Lagrange polynomial; see [`LagrangeFactors`].
pub fn lagrange_poly_coeffs(nodes: &[f64], target: f64) -> Result<PolyCoeffs> {
    Ok(LagrangeFactors::new(nodes, target)?.coeffs())
}

/// Largest eigenvalue of a PSD matrix by power iteration with a Rayleigh
/// quotient stopping rule.
pub fn power_iteration_max(a: &SymMatrix, tol: f64, max_iter: usize) -> f64 {
    let n = a.dim();
    if n == 0 {
        return 0.0;
    }
    let m = a.as_matrix();
    // deterministic start with no exact orthogonality to typical eigenvectors
    let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i as f64 + 1.0).sin()));
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = m * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::symmetrized(raw).unwrap()
    }

    #[test]
    fn eig_identity() {
        let es = sym_eigendecomp(&SymMatrix::identity(2)).unwrap();
        assert_eq!(es.values(), &[1.0, 1.0]);
        let qtq = es.vectors().transpose() * es.vectors();
        assert!((qtq - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn eig_diagonal() {
        let es = sym_eigendecomp(&SymMatrix::from_diagonal(&[1.0, 3.0]).unwrap()).unwrap();
        assert_eq!(es.values(), &[3.0, 1.0]);
        assert!((es.vector(0)[1].abs() - 1.0).abs() < 1e-15);
        assert!((es.vector(1)[0].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_random_reconstruction() {
        let a = random_sym(5, 7);
        let es = sym_eigendecomp(&a).unwrap();
        let err = (es.reconstruct() - a.as_matrix()).norm();
        assert!(err <= 1e-12, "reconstruction error {err}");
        assert!(es.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eig_rejects_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(SymMatrix::new(m).is_err());
    }

    #[test]
    fn eig_zero_matrix() {
        let es = sym_eigendecomp(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(es.values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn eigenvector_signs_are_canonical() {
        let es = sym_eigendecomp(&random_sym(6, 11)).unwrap();
        for col in es.vectors().column_iter() {
            let first = col.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn psd_clamp() {
        let a = SymMatrix::from_diagonal(&[2.0, -5e-11]).unwrap();
        assert_eq!(sym_eigendecomp_psd(&a).unwrap().values(), &[2.0, 0.0]);
        let b = SymMatrix::from_diagonal(&[2.0, -1e-6]).unwrap();
        assert!(matches!(sym_eigendecomp_psd(&b), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn cholesky_identity() {
        let l = cholesky_psd(&SymMatrix::identity(4), 0.0).unwrap();
        assert_eq!(l, DMatrix::identity(4, 4));
    }

    #[test]
    fn cholesky_diagonal() {
        let l = cholesky_psd(&SymMatrix::from_diagonal(&[4.0, 9.0]).unwrap(), 0.0).unwrap();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn cholesky_rank_deficient_with_jitter() {
        let x = nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let a = SymMatrix::symmetrized(&x * x.transpose()).unwrap();
        assert!(cholesky_psd(&a, 0.0).is_err());
        let l = cholesky_psd(&a, 1e-10).unwrap();
        let err = (&l * l.transpose() - a.as_matrix()).amax();
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn cholesky_not_psd() {
        let a = SymMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        assert!(matches!(cholesky_psd(&a, 1e-10), Err(Error::NotPsd { index: 1, .. })));
    }

    #[test]
    fn poly_apply_trivial_filters() {
        let c = random_sym(4, 3);
        let x = DMatrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64 - 3.0);
        let id = matrix_poly_apply(&c, &PolyCoeffs::new(vec![1.0]).unwrap(), &x).unwrap();
        assert_eq!(id, x);
        let shift = matrix_poly_apply(&c, &PolyCoeffs::new(vec![0.0, 1.0]).unwrap(), &x).unwrap();
        assert!((shift - c.as_matrix() * &x).amax() < 1e-15);
    }

    #[test]
    fn poly_apply_shape_error() {
        let c = SymMatrix::identity(3);
        let x = DMatrix::zeros(2, 1);
        assert!(matches!(
            matrix_poly_apply(&c, &PolyCoeffs::new(vec![1.0]).unwrap(), &x),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn lagrange_singleton() {
        let p = lagrange_poly_coeffs(&[4.0], 4.0).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 0.25]);
    }

    #[test]
    fn lagrange_two_nodes() {
        let p = lagrange_poly_coeffs(&[2.0, 1.0], 2.0).unwrap();
        let expected = [0.0, -0.5, 0.5];
        for (a, b) in p.coeffs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((p.eval(0.0)).abs() < 1e-15);
        assert!((p.eval(1.0)).abs() < 1e-15);
        assert!((p.eval(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lagrange_three_nodes() {
        let p = lagrange_poly_coeffs(&[3.0, 1.0, 0.5], 1.0).unwrap();
        assert!((p.eval(1.0) - 1.0).abs() < 1e-8);
        for t in [3.0, 0.5, 0.0] {
            assert!(p.eval(t).abs() < 1e-8);
        }
    }

    #[test]
    fn lagrange_errors() {
        assert!(matches!(lagrange_poly_coeffs(&[1.0, 1.0], 1.0), Err(Error::Degenerate(_))));
        assert!(matches!(lagrange_poly_coeffs(&[1.0, 2.0], 3.0), Err(Error::InvalidTarget(_))));
        assert!(lagrange_poly_coeffs(&[1.0, -2.0], 1.0).is_err());
    }

    #[test]
    fn power_iteration_matches_jacobi() {
        let x = DMatrix::from_fn(6, 10, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * i as f64);
        let a = SymMatrix::symmetrized(&x * x.transpose()).unwrap();
        let es = sym_eigendecomp(&a).unwrap();
        let lam = power_iteration_max(&a, 1e-10, 500);
        assert!((lam - es.largest()).abs() <= 1e-8 * es.largest());
    }
}
