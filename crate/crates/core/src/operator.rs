//! Dense complex-matrix primitives.
//!
//! Everything above this module works in `M_n(C)` with the normalized trace
//! `tau(X) = Tr(X) / n`, so that `tau(I) = 1` and `||I||_2 = 1`. The helpers here
//! cover Hermitian spectral decomposition, polar decomposition, spectral
//! projectors (functional calculus of indicator functions), corner compression
//! and pseudo-inverse square roots.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense square complex matrix.
pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues closer than this are treated as one spectral cluster.
pub const CLUSTER_TOL: f64 = 1e-12;

/// Default relative tolerance for [`hermitize`].
pub const HERMITIZE_TOL: f64 = 1e-9;

/// Relative cutoff used by [`default_cutoff`].
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

const EIG_MAX_ITER: usize = 100_000;
const SVD_MAX_ITER: usize = 100_000;

pub fn zero(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds a matrix from real row-major entries.
pub fn from_real(n: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(n, n, entries.iter().map(|&v| Complex64::new(v, 0.0)))
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let mut m = zero(values.len());
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = Complex64::new(v, 0.0);
    }
    m
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Normalized trace `Tr(M) / dim`.
pub fn tau(m: &CMatrix) -> Complex64 {
    let n = m.nrows().max(1);
    m.trace() / n as f64
}

/// `||M||_2 = sqrt(tau(M* M))`.
pub fn tau_norm(m: &CMatrix) -> f64 {
    let n = m.nrows().max(1);
    frobenius(m) / (n as f64).sqrt()
}

/// `tau(A B)` without forming the product.
pub fn tau_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc / n.max(1) as f64
}

/// Entrywise transpose, no conjugation.
pub fn transpose(m: &CMatrix) -> CMatrix {
    m.transpose()
}

/// Returns `(M + M*) / 2` after checking that `M` is Hermitian up to
/// `tol * (1 + ||M||_F)`.
pub fn hermitize(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let asym = frobenius(&(m - m.adjoint()));
    let bound = tol * (1.0 + frobenius(m));
    if !(asym <= bound) {
        return Err(Error::AsymmetryExceedsTolerance {
            asymmetry: asym,
            tolerance: bound,
        });
    }
    Ok((m + m.adjoint()).scale(0.5))
}

/// Hermitian part without any check.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition `H = U diag(eigenvalues) U*` of a Hermitian matrix,
/// eigenvalues sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

/// A maximal run of eigenvalues whose consecutive gaps are at most [`CLUSTER_TOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    pub value: f64,
    pub start: usize,
    pub end: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|x| x)
    }

    /// Functional calculus: `f(H) = sum_i f(lambda_i) v_i v_i*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fv = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fv;
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }

    /// Projector onto the span of the eigenvectors selected by `keep`.
    pub fn projector_where(&self, keep: impl Fn(usize, f64) -> bool) -> CMatrix {
        let cols: Vec<usize> = (0..self.dim())
            .filter(|&j| keep(j, self.eigenvalues[j]))
            .collect();
        let basis = self.eigenvectors.select_columns(cols.iter());
        &basis * basis.adjoint()
    }

    /// Spectral projector `chi_{>= t}(H)`, eigenvalues within [`CLUSTER_TOL`] of `t` included.
    pub fn projector_geq(&self, t: f64) -> CMatrix {
        self.projector_where(|_, lam| lam >= t - CLUSTER_TOL)
    }

    /// Eigenvalue clusters in nonincreasing order.
    pub fn clusters(&self) -> Vec<Cluster> {
        let mut out: Vec<Cluster> = Vec::new();
        let mut start = 0;
        for j in 1..=self.dim() {
            let split =
                j == self.dim() || self.eigenvalues[j - 1] - self.eigenvalues[j] > CLUSTER_TOL;
            if split {
                let vals = &self.eigenvalues[start..j];
                let value = vals.iter().sum::<f64>() / vals.len() as f64;
                out.push(Cluster {
                    value,
                    start,
                    end: j,
                });
                start = j;
            }
        }
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

/// Hermitian eigensolver. Only the Hermitian part of `h` is used.
pub fn eig_hermitian(h: &CMatrix) -> Result<SpectralDecomposition> {
    let n = h.nrows();
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: zero(0),
        });
    }
    let eig = hermitian_part(h)
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure("Hermitian eigensolver"))?;

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps ties in solver order, which is deterministic
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let eigenvectors = eig.eigenvectors.select_columns(order.iter());
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `chi_{>= t}(H)`: the projector onto eigenvectors with eigenvalue `>= t`.
pub fn chi_geq(h: &CMatrix, t: f64) -> Result<CMatrix> {
    Ok(eig_hermitian(h)?.projector_geq(t))
}

/// Smallest eigenvalue of the Hermitian part of `h`.
pub fn min_eigenvalue(h: &CMatrix) -> Result<f64> {
    Ok(eig_hermitian(h)?.min_eigenvalue())
}

/// Polar decomposition `M = u * positive_part` with `positive_part = sqrt(M* M)`.
#[derive(Debug, Clone)]
pub struct PolarParts {
    /// Partial isometry with initial space `range(positive_part)`.
    pub isometry_part: CMatrix,
    pub positive_part: CMatrix,
}

impl PolarParts {
    /// `u * positive_part * u^* = sqrt(M M*)`, the positive part of the
    /// decomposition `M = sqrt(M M*) * u`.
    pub fn co_positive_part(&self) -> CMatrix {
        let u = &self.isometry_part;
        hermitian_part(&(u * &self.positive_part * u.adjoint()))
    }

    pub fn reconstruct(&self) -> CMatrix {
        &self.isometry_part * &self.positive_part
    }
}

/// Polar decomposition computed from a singular value decomposition
/// `M = W S V*`: `positive_part = V S V*`, `u = W_r V_r*` on the numerical support.
pub fn polar_decompose(m: &CMatrix) -> Result<PolarParts> {
    let n = m.nrows();
    if n == 0 {
        return Ok(PolarParts {
            isometry_part: zero(0),
            positive_part: zero(0),
        });
    }
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or(Error::ConvergenceFailure("singular value decomposition"))?;
    let w = svd
        .u
        .ok_or(Error::ConvergenceFailure("singular value decomposition"))?;
    let v_t = svd
        .v_t
        .ok_or(Error::ConvergenceFailure("singular value decomposition"))?;
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0, f64::max);
    let cutoff = s_max * 1e-13 * n as f64;

    let v = v_t.adjoint();
    let mut v_scaled = v.clone();
    for j in 0..n {
        for i in 0..n {
            v_scaled[(i, j)] *= s[j];
        }
    }
    let positive_part = hermitian_part(&(&v_scaled * &v_t));

    let support: Vec<usize> = (0..n).filter(|&j| s[j] > cutoff && s[j] > 0.0).collect();
    let isometry_part =
        w.select_columns(support.iter()) * v.select_columns(support.iter()).adjoint();
    Ok(PolarParts {
        isometry_part,
        positive_part,
    })
}

/// Positive square root of a positive semidefinite matrix. Eigenvalues within
/// roundoff of zero are treated as zero, since the square root would otherwise
/// lift a `1e-16` residue to `1e-8`.
pub fn sqrt_psd(a: &CMatrix) -> Result<CMatrix> {
    let eig = eig_hermitian(a)?;
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = eig.dim() as f64 * f64::EPSILON * scale;
    Ok(eig.apply(|x| if x > floor { x.sqrt() } else { 0.0 }))
}

/// `sum_{lambda_i > cutoff} lambda_i^{-1/2} v_i v_i*`.
pub fn pseudo_inv_sqrt(a: &CMatrix, cutoff: f64) -> Result<CMatrix> {
    Ok(eig_hermitian(a)?.apply(|x| if x > cutoff { 1.0 / x.sqrt() } else { 0.0 }))
}

/// Relative rank cutoff `1e-10 * lambda_max(A)`.
pub fn default_cutoff(a: &CMatrix) -> Result<f64> {
    Ok(PINV_RELATIVE_CUTOFF * eig_hermitian(a)?.max_eigenvalue().max(0.0))
}

/// Rank of a projector, read off its trace.
pub fn projector_rank(p: &CMatrix) -> usize {
    p.trace().re.round().max(0.0) as usize
}

/// Orthonormal basis (as columns) of the range of a projector.
pub fn range_basis(p: &CMatrix) -> Result<CMatrix> {
    let eig = eig_hermitian(p)?;
    let cols: Vec<usize> = (0..eig.dim())
        .filter(|&j| eig.eigenvalues[j] > 0.5)
        .collect();
    Ok(eig.eigenvectors.select_columns(cols.iter()))
}

/// `B* M B` for the basis matrix `B` of `range(P)`.
pub fn compress_corner(m: &CMatrix, p: &CMatrix, basis: &CMatrix) -> Result<CMatrix> {
    let rank = projector_rank(p);
    if rank != basis.ncols() {
        return Err(Error::RankMismatch {
            projector_rank: rank,
            basis_columns: basis.ncols(),
        });
    }
    if basis.nrows() != m.nrows() || p.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: basis.nrows(),
        });
    }
    Ok(basis.adjoint() * m * basis)
}

/// Inverse of [`compress_corner`]: `B C B*`.
pub fn expand_corner(c: &CMatrix, basis: &CMatrix) -> CMatrix {
    basis * c * basis.adjoint()
}

/// `||P^2 - P||_F`.
pub fn idempotency_defect(p: &CMatrix) -> f64 {
    frobenius(&(p * p - p))
}

/// `exp(i * t * H)` for Hermitian `H`.
pub fn unitary_exp(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let eig = eig_hermitian(h)?;
    let n = eig.dim();
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, t * lam);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}

/// Maximum entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitize_examples() {
        let id = identity(2);
        assert_eq!(hermitize(&id, HERMITIZE_TOL).unwrap(), id);

        let mut h = identity(2);
        h[(0, 1)] = c(0.0, 1e-12);
        h[(1, 0)] = c(0.0, -1e-12);
        assert!(max_abs_diff(&hermitize(&h, HERMITIZE_TOL).unwrap(), &h) == 0.0);

        let nil = from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            hermitize(&nil, HERMITIZE_TOL),
            Err(Error::AsymmetryExceedsTolerance { .. })
        ));
    }

    #[test]
    fn eig_examples() {
        let e = eig_hermitian(&diag(&[0.2, 0.9])).unwrap();
        assert_eq!(e.eigenvalues.len(), 2);
        assert!((e.eigenvalues[0] - 0.9).abs() < 1e-15);
        assert!((e.eigenvalues[1] - 0.2).abs() < 1e-15);

        let e = eig_hermitian(&identity(2)).unwrap();
        assert!(e.eigenvalues.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let u = &e.eigenvectors;
        assert!(max_abs_diff(&(u.adjoint() * u), &identity(2)) < 1e-12);

        // [[0,1],[1,0]]: eigenvalues (1, -1), eigenvectors (1, +-1)/sqrt 2
        let x = from_real(2, &[0.0, 1.0, 1.0, 0.0]);
        let e = eig_hermitian(&x).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] + 1.0).abs() < 1e-14);
        let v0 = e.eigenvectors.column(0);
        let ratio = v0[1] / v0[0];
        assert!((ratio - c(1.0, 0.0)).norm() < 1e-12);
        assert!((v0[0].norm() - 0.5f64.sqrt()).abs() < 1e-12);
        let v1 = e.eigenvectors.column(1);
        assert!((v1[1] / v1[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!(max_abs_diff(&e.reconstruct(), &x) < 1e-12);
    }

    #[test]
    fn polar_examples() {
        let p = polar_decompose(&diag(&[2.0, 3.0])).unwrap();
        assert!(max_abs_diff(&p.isometry_part, &identity(2)) < 1e-12);
        assert!(max_abs_diff(&p.positive_part, &diag(&[2.0, 3.0])) < 1e-12);

        let nil = from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        let p = polar_decompose(&nil).unwrap();
        assert!(max_abs_diff(&p.positive_part, &diag(&[0.0, 1.0])) < 1e-12);
        assert!(max_abs_diff(&p.isometry_part, &nil) < 1e-12);

        let p = polar_decompose(&zero(3)).unwrap();
        assert_eq!(frobenius(&p.isometry_part), 0.0);
        assert_eq!(frobenius(&p.positive_part), 0.0);
    }

    #[test]
    fn chi_examples() {
        let h = diag(&[0.2, 0.9]);
        assert!(max_abs_diff(&chi_geq(&h, 0.5).unwrap(), &diag(&[0.0, 1.0])) < 1e-14);
        assert!(max_abs_diff(&chi_geq(&h, -0.9 - 1.0).unwrap(), &identity(2)) < 1e-14);

        let x = from_real(2, &[0.0, 1.0, 1.0, 0.0]);
        let half = from_real(2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(max_abs_diff(&chi_geq(&x, 0.0).unwrap(), &half) < 1e-12);
    }

    #[test]
    fn chi_includes_eigenvalues_near_threshold() {
        let h = diag(&[0.5 - 5e-13, 0.1]);
        assert!(max_abs_diff(&chi_geq(&h, 0.5).unwrap(), &diag(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn tau_norm_examples() {
        assert!((tau_norm(&identity(5)) - 1.0).abs() < 1e-15);
        assert!((tau_norm(&diag(&[1.0, 0.0])) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((tau_norm(&diag(&[1.0, -1.0])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn corner_examples() {
        let p = diag(&[1.0, 0.0]);
        let b = range_basis(&p).unwrap();
        let out = compress_corner(&identity(2), &p, &b).unwrap();
        assert_eq!(out.nrows(), 1);
        assert!((out[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);

        let p = diag(&[0.0, 1.0]);
        let b = range_basis(&p).unwrap();
        let out = compress_corner(&diag(&[3.0, 5.0]), &p, &b).unwrap();
        assert!((out[(0, 0)] - c(5.0, 0.0)).norm() < 1e-14);

        let m = from_real(2, &[1.0, 2.0, 3.0, 4.0]);
        let b = range_basis(&identity(2)).unwrap();
        let out = compress_corner(&m, &identity(2), &b).unwrap();
        assert!(max_abs_diff(&expand_corner(&out, &b), &m) < 1e-12);

        let b1 = range_basis(&diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(
            compress_corner(&m, &identity(2), &b1),
            Err(Error::RankMismatch { .. })
        ));
    }

    #[test]
    fn sqrt_of_rank_deficient_square_has_clean_kernel() {
        let h = 0.5f64.sqrt();
        let u = from_real(2, &[h, h, h, -h]);
        let p = &u * diag(&[1.3, 0.0]) * &u;
        let r = sqrt_psd(&(&p * &p)).unwrap();
        assert!(max_abs_diff(&r, &p) < 1e-14);
    }

    #[test]
    fn pseudo_inv_sqrt_examples() {
        let out = pseudo_inv_sqrt(&diag(&[4.0, 0.0]), 1e-10).unwrap();
        assert!(max_abs_diff(&out, &diag(&[0.5, 0.0])) < 1e-14);
        assert!(max_abs_diff(&pseudo_inv_sqrt(&identity(3), 1e-10).unwrap(), &identity(3)) < 1e-14);
        let out = pseudo_inv_sqrt(&diag(&[1.0, 1e-14]), 1e-10).unwrap();
        assert!(max_abs_diff(&out, &diag(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn clusters_merge_near_degenerate_eigenvalues() {
        let e = eig_hermitian(&diag(&[1.0, 1.0 + 1e-13, 0.5])).unwrap();
        let cl = e.clusters();
        assert_eq!(cl.len(), 2);
        assert_eq!((cl[0].start, cl[0].end), (0, 2));
        assert_eq!((cl[1].start, cl[1].end), (2, 3));
    }
}
