//! Exact layer-cake identities for positive matrices.
//!
//! For positive `sigma` the map `lambda -> chi_{>= sqrt(lambda)}(sigma)` is a step
//! function with jumps at the squared eigenvalues, so every integral over
//! `lambda` below is a finite sum over those breakpoints.

use crate::error::{Error, Result};
use crate::operator::{eig_hermitian, tau, tau_norm, CMatrix, SpectralDecomposition};

/// Positivity floor for inputs.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Tolerance on `tau(sigma^2) = 1` for [`projector_slices`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// One step of the layer-cake decomposition: `measure` is the length of the
/// `lambda`-interval on which `chi_{>= sqrt(lambda)}(sigma)` equals `projector`.
#[derive(Debug, Clone)]
pub struct SpectralPiece {
    pub measure: f64,
    pub projector: CMatrix,
    /// Number of eigenvectors spanning `projector`.
    pub rank: usize,
    /// Orthonormal columns spanning the range of `projector`.
    pub basis: CMatrix,
    /// Index of the eigenvalue cluster that closes this piece.
    pub breakpoint: usize,
}

fn positive_spectrum(m: &CMatrix) -> Result<SpectralDecomposition> {
    let eig = eig_hermitian(m)?;
    let min = eig.min_eigenvalue();
    if min < -POSITIVITY_TOL {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(eig)
}

/// Layer-cake pieces of a positive matrix without any normalization requirement.
///
/// With distinct eigenvalues `s_1 > ... > s_k` (clustered), piece `j` has measure
/// `s_j^2 - s_{j+1}^2` (with `s_{k+1} = 0`) and projects onto the eigenvalues
/// `>= s_j`. Zero-measure pieces are dropped, so `sum measure * projector = sigma^2`.
pub fn spectral_pieces(sigma: &CMatrix) -> Result<Vec<SpectralPiece>> {
    let eig = positive_spectrum(sigma)?;
    let clusters = eig.clusters();
    let mut pieces = Vec::new();
    for (j, c) in clusters.iter().enumerate() {
        let s = c.value.max(0.0);
        let next = clusters.get(j + 1).map_or(0.0, |n| n.value.max(0.0));
        let measure = s * s - next * next;
        if measure <= 0.0 {
            continue;
        }
        let basis = eig.eigenvectors.columns(0, c.end).into_owned();
        let projector = &basis * basis.adjoint();
        pieces.push(SpectralPiece {
            measure,
            projector,
            rank: c.end,
            basis,
            breakpoint: j,
        });
    }
    Ok(pieces)
}

/// [`spectral_pieces`] for a state: `sigma` must also satisfy `tau(sigma^2) = 1`.
pub fn projector_slices(sigma: &CMatrix) -> Result<Vec<SpectralPiece>> {
    let value = tau(&(sigma * sigma)).re;
    if !((value - 1.0).abs() <= NORMALIZATION_TOL) {
        // Positivity is the more basic failure, report it first.
        positive_spectrum(sigma)?;
        return Err(Error::NotNormalized { value });
    }
    spectral_pieces(sigma)
}

/// `sum measure * projector`, which should reproduce `sigma^2`.
pub fn reconstruct_square(pieces: &[SpectralPiece], n: usize) -> CMatrix {
    pieces.iter().fold(crate::operator::zero(n), |acc, p| {
        acc + &p.projector * num_complex::Complex64::new(p.measure, 0.0)
    })
}

/// Both sides of the joint-distribution inequality for positive `rho`, `sigma`:
/// `lhs = int_0^inf ||chi_{>= sqrt(l)}(rho) - chi_{>= sqrt(l)}(sigma)||_2^2 dl` and
/// `rhs = ||rho - sigma||_2 ||rho + sigma||_2`.
pub fn verify_connes(rho: &CMatrix, sigma: &CMatrix) -> Result<(f64, f64)> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            found: sigma.nrows(),
        });
    }
    let er = positive_spectrum(rho)?;
    let es = positive_spectrum(sigma)?;

    let mut breaks: Vec<f64> = std::iter::once(0.0)
        .chain(
            er.eigenvalues
                .iter()
                .chain(&es.eigenvalues)
                .map(|s| s.max(0.0).powi(2)),
        )
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut lhs = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let t = ((lo + hi) / 2.0).sqrt();
        let diff = step_projector(&er, t) - step_projector(&es, t);
        lhs += (hi - lo) * tau_norm(&diff).powi(2);
    }
    let rhs = tau_norm(&(rho - sigma)) * tau_norm(&(rho + sigma));
    Ok((lhs, rhs))
}

// Strict threshold: t sits strictly between breakpoints, so no cluster tolerance is wanted.
fn step_projector(eig: &SpectralDecomposition, t: f64) -> CMatrix {
    eig.projector_where(|_, s| s >= t)
}
