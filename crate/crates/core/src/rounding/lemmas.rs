//! Both sides of the inequalities the rounding argument relies on, evaluated
//! on a concrete strategy.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::game::Game;
use crate::operator::{polar_decompose, tau_product, CMatrix};
use crate::strategy::{correlation_of, synchronicity_unchecked, Povm, TracialStrategy};

use super::orthogonalize::nearest_pvm;
use super::slices::verify_connes;
use super::symmetrize;

/// `lhs <= rhs` with `slack = rhs - lhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl LemmaCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack >= -tol
    }
}

fn symmetric_delta(game: &Game, sigma: &CMatrix, povms: &[Povm]) -> Result<f64> {
    Ok(synchronicity_unchecked(
        game,
        &correlation_of(sigma, povms, povms)?,
    ))
}

/// Substituting Alice's measurements by `c` moves the correlation by at most
/// `6 (delta_A + sqrt(gamma))`, where `delta_A` is the synchronicity of the
/// symmetric strategy `(sigma, A, A)` and
/// `gamma = E_x sum_a tau(sigma* (A_a^x - C_a^x)^2 sigma)`.
pub fn measurement_substitution_check(
    game: &Game,
    s: &TracialStrategy,
    c: &[Povm],
) -> Result<LemmaCheck> {
    let sigma = s.sigma();
    let rho = sigma * sigma.adjoint();
    let original = correlation_of(sigma, s.alice(), s.bob_left())?;
    let substituted = correlation_of(sigma, c, s.bob_left())?;
    let lhs = crate::strategy::correlation_distance(game, &original, &substituted)?;
    let mut gamma = 0.0;
    for (x, (a, cx)) in s.alice().iter().zip(c).enumerate() {
        let inner: f64 = a
            .elements()
            .iter()
            .zip(cx.elements())
            .map(|(ea, ec)| {
                let d = ea - ec;
                tau_product(&(&d * &d), &rho).re
            })
            .sum();
        gamma += game.mu_x(x) * inner;
    }
    let delta_a = symmetric_delta(game, sigma, s.alice())?;
    Ok(LemmaCheck::new(
        lhs,
        6.0 * (delta_a + gamma.max(0.0).sqrt()),
    ))
}

/// Evaluates every implemented inequality on `s`.
///
/// * `sync_factorization`: `1 - delta(S) <= sqrt(1 - delta(sigma, A)) sqrt(1 - delta(|sigma|, B))`,
///   with Alice's symmetric strategy on the state `sigma`. This form does not
///   hold in general (see `sync_factorization_co_polar`).
/// * `sync_factorization_co_polar`: the same with Alice's state `|sigma*|`.
/// * `measurement_substitution`: [`measurement_substitution_check`] with `C`
///   the nearest PVMs to Alice's measurements.
/// * `orthogonalization`: total error of those PVMs against `9 sum_x eps_x`.
/// * `connes_polar_pair`: the joint-distribution inequality for `|sigma|` and `|sigma*|`.
/// * `symmetrization_sync`: synchronicity after [`symmetrize`] against `2 delta(S)`.
pub fn lemma_report(game: &Game, s: &TracialStrategy) -> Result<BTreeMap<String, LemmaCheck>> {
    let mut out = BTreeMap::new();
    let sigma = s.sigma();
    let polar = polar_decompose(sigma)?;
    let plus = &polar.positive_part;
    let co_plus = polar.co_positive_part();

    let delta = synchronicity_unchecked(game, &correlation_of(sigma, s.alice(), s.bob_left())?);
    let delta_b = symmetric_delta(game, plus, s.bob_left())?;
    let delta_a = symmetric_delta(game, sigma, s.alice())?;
    let delta_a_co = symmetric_delta(game, &co_plus, s.alice())?;
    let root = |d: f64| (1.0 - d).max(0.0).sqrt();
    out.insert(
        "sync_factorization".to_string(),
        LemmaCheck::new(1.0 - delta, root(delta_a) * root(delta_b)),
    );
    out.insert(
        "sync_factorization_co_polar".to_string(),
        LemmaCheck::new(1.0 - delta, root(delta_a_co) * root(delta_b)),
    );

    let mut nearest = Vec::with_capacity(s.num_questions());
    let (mut err, mut eps) = (0.0, 0.0);
    for p in s.alice() {
        let o = nearest_pvm(p, sigma)?;
        err += o.error;
        eps += o.epsilon;
        nearest.push(o.pvm);
    }
    out.insert(
        "measurement_substitution".to_string(),
        measurement_substitution_check(game, s, &nearest)?,
    );
    out.insert(
        "orthogonalization".to_string(),
        LemmaCheck::new(err, 9.0 * eps),
    );

    let (lhs, rhs) = verify_connes(plus, &co_plus)?;
    out.insert("connes_polar_pair".to_string(), LemmaCheck::new(lhs, rhs));

    let (_, rep) = symmetrize(game, s)?;
    out.insert(
        "symmetrization_sync".to_string(),
        LemmaCheck::new(rep.delta_out, 2.0 * rep.delta_in),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::builtin_game;
    use crate::generate::builtin_strategy;
    use crate::operator::from_real;
    use crate::strategy::embed_tracial;
    use num_complex::Complex64;

    #[test]
    fn perfect_strategy_is_tight() {
        let g = builtin_game("k3").unwrap();
        let s = embed_tracial(&builtin_strategy("maxent", &g).unwrap());
        let r = lemma_report(&g, &s).unwrap();
        let f = r["sync_factorization"];
        assert!((f.lhs - 1.0).abs() < 1e-12 && (f.rhs - 1.0).abs() < 1e-12);
        for (name, c) in &r {
            assert!(c.holds(1e-8), "{name}: {c:?}");
        }
    }

    #[test]
    fn identical_substitution_has_zero_lhs() {
        let g = builtin_game("k3").unwrap();
        let s = embed_tracial(&builtin_strategy("skewed", &g).unwrap());
        let c = measurement_substitution_check(&g, &s, s.alice()).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.holds(0.0));
    }

    #[test]
    fn literal_factorization_fails_for_hadamard_state() {
        // sigma = H is unitary, so |sigma| = I and |sigma*| = I, but the symmetric
        // strategy on the state sigma itself is not synchronous.
        let h = 0.5f64.sqrt();
        let sigma = from_real(2, &[h, h, h, -h]) * Complex64::new(1.0, 0.0);
        let alice = vec![Povm::computational(&[0, 1], 2)];
        let bob = vec![alice[0].conjugate(&sigma.adjoint())];
        let g = crate::game::Game::new(
            vec!["0".into()],
            vec!["0".into(), "1".into()],
            vec![vec![1.0]],
            |_, _, a, b| a == b,
        )
        .unwrap();
        let s = TracialStrategy::new(sigma, alice, bob).unwrap();
        let r = lemma_report(&g, &s).unwrap();
        let lit = r["sync_factorization"];
        assert!((lit.lhs - 1.0).abs() < 1e-12);
        assert!((lit.rhs - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(!lit.holds(1e-8));
        assert!(r["sync_factorization_co_polar"].holds(1e-12));
    }
}
