//! The rounding pipeline: symmetrize, projectivize, slice the spectrum of the
//! state and assemble the synchronous convex decomposition.

mod lemmas;
mod orthogonalize;
mod slices;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{is_synchronous_game, Game};
use crate::operator::{self, identity, polar_decompose, CMatrix};
use crate::strategy::{
    correlation, correlation_distance, correlation_of, embed_tracial, synchronicity_unchecked,
    Correlation, Povm, TensorStrategy, TracialStrategy,
};

pub use lemmas::{lemma_report, measurement_substitution_check, LemmaCheck};
pub use orthogonalize::{
    nearest_pvm, orthogonalization_error, orthogonalize_checked, orthogonalize_povm,
    Orthogonalization, BOUND_SLACK,
};
pub use slices::{
    projector_slices, reconstruct_square, spectral_pieces, verify_connes, SpectralPiece,
    NORMALIZATION_TOL, POSITIVITY_TOL,
};

/// Synchronicity allowed for a component of a decomposition.
pub const COMPONENT_SYNC_TOL: f64 = 1e-8;
/// Tolerance on the weights of a decomposition summing to one.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// One synchronous component: a spectral slice of the state with projective
/// measurements on its corner.
#[derive(Debug, Clone)]
pub struct Slice {
    /// `measure * tau(projector)`; the weights of a decomposition sum to one.
    pub weight: f64,
    /// Length of the `lambda`-interval this slice stands for.
    pub measure: f64,
    pub projector: CMatrix,
    /// Orthonormal columns spanning the corner.
    pub basis: CMatrix,
    pub sub_dim: usize,
    /// Index of the eigenvalue breakpoint that closes the slice.
    pub breakpoint: usize,
    /// Per-question PVMs on the `sub_dim`-dimensional corner.
    pub pvms: Vec<Povm>,
}

/// A convex combination of synchronous correlations.
#[derive(Debug, Clone)]
pub struct RoundingDecomposition {
    pub slices: Vec<Slice>,
    pub correlations: Vec<Correlation>,
    pub mixed: Correlation,
    pub diagnostics: BTreeMap<String, f64>,
}

impl RoundingDecomposition {
    pub fn weights(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.weight).collect()
    }

    pub fn weight_sum(&self) -> f64 {
        self.slices.iter().map(|s| s.weight).sum()
    }

    /// `sum_j weight_j C_j` from the stored components.
    pub fn recompute_mixed(&self) -> Result<Correlation> {
        let parts: Vec<(f64, &Correlation)> = self
            .slices
            .iter()
            .zip(&self.correlations)
            .map(|(s, c)| (s.weight, c))
            .collect();
        Correlation::mixture(&parts)
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }
}

/// Synchronicity and distance bookkeeping for one pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageReport {
    pub delta_in: f64,
    pub delta_out: f64,
    /// `correlation_distance` between the stage's input and output.
    pub distance: f64,
    /// Stage-specific approximation error (orthogonalization error for
    /// [`projectivize`], zero for [`symmetrize`]).
    pub residual: f64,
}

fn is_positive(sigma: &CMatrix) -> Result<bool> {
    let asym = operator::max_abs_diff(sigma, &sigma.adjoint());
    if asym > 1e-12 * (1.0 + operator::frobenius(sigma)) {
        return Ok(false);
    }
    Ok(operator::min_eigenvalue(sigma)? >= -POSITIVITY_TOL)
}

fn require_positive(sigma: &CMatrix) -> Result<()> {
    let asym = operator::max_abs_diff(sigma, &sigma.adjoint());
    if asym > 1e-9 {
        return Err(Error::AsymmetryExceedsTolerance {
            asymmetry: asym,
            tolerance: 1e-9,
        });
    }
    let min = operator::min_eigenvalue(sigma)?;
    if min < -POSITIVITY_TOL {
        return Err(Error::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

fn stage_report(
    game: &Game,
    before: &Correlation,
    after: &Correlation,
    residual: f64,
) -> Result<StageReport> {
    Ok(StageReport {
        delta_in: synchronicity_unchecked(game, before),
        delta_out: synchronicity_unchecked(game, after),
        distance: correlation_distance(game, before, after)?,
        residual,
    })
}

/// Symmetric strategy built from Alice's measurements.
///
/// With `sigma = u |sigma|` the state of the output is `|sigma*| = u |sigma| u*`,
/// which is the positive part `sigma^+` whenever `sigma` is normal. Pairing
/// Alice's operators with `sigma^+` itself is wrong for non-normal `sigma`: the
/// state has to sit on Alice's side of the polar decomposition for the output
/// to reproduce the input correlation when the input is synchronous.
pub fn symmetrize(game: &Game, s: &TracialStrategy) -> Result<(TracialStrategy, StageReport)> {
    let before = correlation(s)?;
    let sigma = if is_positive(s.sigma())? {
        s.sigma().clone()
    } else {
        polar_decompose(s.sigma())?.co_positive_part()
    };
    let out = TracialStrategy::symmetric(sigma, s.alice().to_vec())?;
    let after = correlation(&out)?;
    let report = stage_report(game, &before, &after, 0.0)?;
    Ok((out, report))
}

/// Replaces each measurement of a symmetric strategy by a nearby PVM in the
/// `sigma`-weighted norm.
pub fn projectivize(game: &Game, s: &TracialStrategy) -> Result<(TracialStrategy, StageReport)> {
    if !s.is_symmetric() {
        return Err(Error::InvalidStrategy(
            "projectivize needs a symmetric strategy".into(),
        ));
    }
    require_positive(s.sigma())?;
    let results = s
        .alice()
        .par_iter()
        .map(|p| orthogonalize_checked(p, s.sigma()))
        .collect::<Result<Vec<_>>>()?;
    let residual = results.iter().map(|r| r.error).sum();
    let pvms = results.into_iter().map(|r| r.pvm).collect();
    let out = TracialStrategy::symmetric(s.sigma().clone(), pvms)?;
    let report = stage_report(game, &correlation(s)?, &correlation(&out)?, residual)?;
    Ok((out, report))
}

struct SliceOutcome {
    slice: Slice,
    correlation: Correlation,
    residual: f64,
    orth_error: f64,
}

fn build_slice(game: &Game, s: &TracialStrategy, piece: SpectralPiece) -> Result<SliceOutcome> {
    let n = s.dim();
    let r = piece.rank;
    let corner_state = identity(r);
    let mut pvms = Vec::with_capacity(s.num_questions());
    let mut residual = 0.0;
    let mut orth_error = 0.0;
    for (x, povm) in s.alice().iter().enumerate() {
        let compressed: Vec<CMatrix> = povm
            .elements()
            .iter()
            .map(|a| {
                operator::compress_corner(a, &piece.projector, &piece.basis)
                    .map(|c| operator::hermitian_part(&c))
            })
            .collect::<Result<_>>()?;
        let compressed = Povm::from_hermitian(compressed);
        let orth = orthogonalize_checked(&compressed, &corner_state)?;
        orth_error += orth.error;
        let mut local = 0.0;
        for (a, p) in povm.elements().iter().zip(orth.pvm.elements()) {
            let d = a * &piece.basis - &piece.basis * p;
            local += operator::frobenius(&d).powi(2) / n as f64;
        }
        residual += game.mu_x(x) * local;
        pvms.push(orth.pvm);
    }
    let correlation = correlation_of(&corner_state, &pvms, &pvms)?;
    let weight = piece.measure * r as f64 / n as f64;
    Ok(SliceOutcome {
        slice: Slice {
            weight,
            measure: piece.measure,
            projector: piece.projector,
            basis: piece.basis,
            sub_dim: r,
            breakpoint: piece.breakpoint,
            pvms,
        },
        correlation,
        residual: piece.measure * residual,
        orth_error,
    })
}

/// Cuts a symmetric projective strategy along the spectrum of its positive state.
///
/// Each layer-cake piece `(measure, P)` of `sigma` gives a corner `P M_n P`; the
/// measurements are compressed there, orthogonalized against the corner's
/// trace, and used as a symmetric strategy with the maximally entangled state
/// of the corner, which is synchronous. The component weight is
/// `measure * tau(P)`.
pub fn slice_strategies(game: &Game, s: &TracialStrategy) -> Result<RoundingDecomposition> {
    if !s.is_symmetric() {
        return Err(Error::InvalidStrategy(
            "slicing needs a symmetric strategy".into(),
        ));
    }
    if !s.is_projective() {
        return Err(Error::InvalidStrategy(
            "slicing needs projective measurements".into(),
        ));
    }
    require_positive(s.sigma())?;
    let pieces = projector_slices(s.sigma())?;
    let outcomes = pieces
        .into_par_iter()
        .map(|p| build_slice(game, s, p))
        .collect::<Result<Vec<_>>>()?;

    let mut diagnostics = BTreeMap::new();
    let mut slices = Vec::with_capacity(outcomes.len());
    let mut correlations = Vec::with_capacity(outcomes.len());
    let (mut residual, mut orth_error, mut max_delta) = (0.0, 0.0, 0.0f64);
    for o in outcomes {
        residual += o.residual;
        orth_error += o.slice.weight * o.orth_error;
        max_delta = max_delta.max(synchronicity_unchecked(game, &o.correlation));
        slices.push(o.slice);
        correlations.push(o.correlation);
    }
    let parts: Vec<(f64, &Correlation)> = slices
        .iter()
        .zip(&correlations)
        .map(|(s, c)| (s.weight, c))
        .collect();
    let mixed = Correlation::mixture(&parts)?;
    let weight_sum: f64 = slices.iter().map(|s| s.weight).sum();
    diagnostics.insert("slices".into(), slices.len() as f64);
    diagnostics.insert("weight_sum".into(), weight_sum);
    diagnostics.insert("slice_residual".into(), residual);
    diagnostics.insert("slice_orthogonalization_error".into(), orth_error);
    diagnostics.insert("max_component_delta".into(), max_delta);
    Ok(RoundingDecomposition {
        slices,
        correlations,
        mixed,
        diagnostics,
    })
}

/// Rounds a tensor-product strategy to a convex combination of synchronous correlations.
pub fn round_correlation(game: &Game, s: &TensorStrategy) -> Result<RoundingDecomposition> {
    if !is_synchronous_game(game) {
        return Err(Error::NotSynchronousGame);
    }
    if game.num_questions() != s.num_questions() || game.num_answers() != s.num_answers() {
        return Err(Error::AlphabetMismatch(format!(
            "game has {} questions / {} answers, strategy has {} / {}",
            game.num_questions(),
            game.num_answers(),
            s.num_questions(),
            s.num_answers()
        )));
    }
    round_tracial(game, &embed_tracial(s))
}

/// [`round_correlation`] for a strategy already in standard form.
pub fn round_tracial(game: &Game, s: &TracialStrategy) -> Result<RoundingDecomposition> {
    if !is_synchronous_game(game) {
        return Err(Error::NotSynchronousGame);
    }
    let c_in = correlation(s)?;
    let delta_in = synchronicity_unchecked(game, &c_in);
    let (sym, sym_report) = symmetrize(game, s)?;
    let (proj, proj_report) = projectivize(game, &sym)?;
    let mut dec = slice_strategies(game, &proj)?;
    let distance = correlation_distance(game, &c_in, &dec.mixed)?;
    let d = &mut dec.diagnostics;
    d.insert("delta_in".into(), delta_in);
    d.insert("distance".into(), distance);
    d.insert("symmetrize_delta".into(), sym_report.delta_out);
    d.insert("symmetrize_distance".into(), sym_report.distance);
    d.insert("projectivize_delta".into(), proj_report.delta_out);
    d.insert("projectivize_distance".into(), proj_report.distance);
    d.insert("projectivize_error".into(), proj_report.residual);
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_game;
    use crate::generate::{builtin_strategy, perturb_strategy, BUILTIN_STRATEGIES};
    use crate::operator::diag;
    use num_complex::Complex64;

    #[test]
    fn flat_state_gives_one_slice() {
        let g = builtin_game("k3").unwrap();
        let s = embed_tracial(&builtin_strategy("maxent", &g).unwrap());
        let dec = slice_strategies(&g, &s).unwrap();
        assert_eq!(dec.slices.len(), 1);
        assert!((dec.slices[0].weight - 1.0).abs() < 1e-12);
        assert_eq!(dec.slices[0].pvms, s.alice());
        assert!(dec.diagnostic("slice_residual").unwrap() < 1e-24);
    }

    #[test]
    fn two_level_state_gives_two_slices() {
        // sigma proportional to diag(1, 1/2), normalized so tau(sigma^2) = 1
        let c = (2.0f64 / 1.25).sqrt();
        let sigma = diag(&[c, c / 2.0]);
        let g = builtin_game("edge").unwrap();
        let pvm = Povm::computational(&[0, 1], 2);
        let s = TracialStrategy::symmetric(sigma, vec![pvm.clone(), pvm]).unwrap();
        let dec = slice_strategies(&g, &s).unwrap();
        assert_eq!(dec.slices.len(), 2);
        let w = dec.weights();
        assert!((w[0] - 0.75 * c * c * 0.5).abs() < 1e-12);
        assert!((w[1] - 0.25 * c * c).abs() < 1e-12);
        assert!((dec.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_strategies_round_exactly() {
        for game in ["k3", "edge", "cycle:4:2"] {
            let g = builtin_game(game).unwrap();
            for name in BUILTIN_STRATEGIES {
                let s = builtin_strategy(name, &g).unwrap();
                let dec = round_correlation(&g, &s).unwrap();
                let d = dec.diagnostic("distance").unwrap();
                assert!(d <= 1e-8, "{game}/{name}: distance {d}");
                assert!((dec.weight_sum() - 1.0).abs() <= WEIGHT_SUM_TOL);
            }
        }
    }

    #[test]
    fn symmetrize_fixed_point() {
        let g = builtin_game("k3").unwrap();
        let s = embed_tracial(&builtin_strategy("maxent", &g).unwrap());
        let (out, rep) = symmetrize(&g, &s).unwrap();
        assert_eq!(out, s);
        assert_eq!(rep.distance, 0.0);
    }

    #[test]
    fn symmetrize_keeps_non_normal_synchronous_correlation() {
        // sigma = [[0, a], [b, 0]]: swapping Alice's basis onto Bob's
        let (a, b) = (0.6f64, (2.0f64 - 0.36).sqrt());
        let sigma = operator::from_real(2, &[0.0, a, b, 0.0]);
        let alice = vec![Povm::computational(&[0, 1], 2)];
        let bob = vec![Povm::computational(&[1, 0], 2)];
        let g1 = crate::game::Game::new(
            vec!["0".into()],
            vec!["0".into(), "1".into()],
            vec![vec![1.0]],
            |_, _, a, b| a == b,
        )
        .unwrap();
        let s = TracialStrategy::new(sigma, alice, bob).unwrap();
        let (_, rep) = symmetrize(&g1, &s).unwrap();
        assert!(rep.delta_in < 1e-15);
        assert!(rep.distance < 1e-12, "distance {}", rep.distance);
    }

    #[test]
    fn rounding_perturbed_strategy_is_consistent() {
        let g = builtin_game("k3").unwrap();
        let base = builtin_strategy("maxent", &g).unwrap();
        let s = perturb_strategy(&base, 0.01, 3).unwrap();
        let dec = round_correlation(&g, &s).unwrap();
        assert!((dec.weight_sum() - 1.0).abs() < WEIGHT_SUM_TOL);
        assert!(dec.recompute_mixed().unwrap().max_abs_diff(&dec.mixed) < 1e-10);
        for c in &dec.correlations {
            assert!(synchronicity_unchecked(&g, c) <= COMPONENT_SYNC_TOL);
        }
        assert!(dec.diagnostic("distance").unwrap() < 0.2);
    }

    #[test]
    fn rejects_non_synchronous_game() {
        let g = crate::game::Game::new(
            vec!["0".into()],
            vec!["0".into(), "1".into()],
            vec![vec![1.0]],
            |_, _, _, _| true,
        )
        .unwrap();
        let s = TensorStrategy::new(
            1,
            1,
            vec![Complex64::new(1.0, 0.0)],
            vec![Povm::computational(&[0], 2)],
            vec![Povm::computational(&[0], 2)],
        )
        .unwrap();
        assert!(matches!(
            round_correlation(&g, &s),
            Err(Error::NotSynchronousGame)
        ));
    }
}
