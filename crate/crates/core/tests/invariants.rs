mod common;

use common::*;
use proptest::prelude::*;

use syncround::game::{is_synchronous_game, with_sync_test};
use syncround::generate::{
    builtin_strategy, perturb_strategy, random_noisy_strategy, random_povm, seeded_rng,
};
use syncround::operator::{self, chi_geq, polar_decompose, CMatrix};
use syncround::rounding::{
    lemma_report, nearest_pvm, projector_slices, reconstruct_square, round_correlation,
    round_tracial, symmetrize, verify_connes, COMPONENT_SYNC_TOL,
};
use syncround::soundness::{aggregate_slice_povms, dominated_factorization, SliceFamily};
use syncround::strategy::{
    correlation, embed_tracial, opposite, synchronicity, value_of_correlation, winning_probability,
    Povm, TracialStrategy,
};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cfg(48))]

    #[test]
    fn polar_matches_svd(n in 1usize..9, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let m = ginibre(n, &mut rng);
        let p = polar_decompose(&m).unwrap();
        prop_assert!(max_entry(&(p.reconstruct() - &m)) < 1e-10);
        let (_, pos) = svd_polar(&m);
        prop_assert!(max_entry(&(&p.positive_part - pos)) < 1e-9);
    }

    #[test]
    fn polar_of_rank_deficient(n in 2usize..8, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let g = ginibre(n, &mut rng);
        let mut m = g.clone();
        m.set_column(0, &CMatrix::zeros(n, 1).column(0));
        let p = polar_decompose(&m).unwrap();
        prop_assert!(max_entry(&(p.reconstruct() - &m)) < 1e-10);
        let (u, pos) = svd_polar(&m);
        prop_assert!(max_entry(&(&p.positive_part - pos)) < 1e-9);
        prop_assert!(max_entry(&(&p.isometry_part - u)) < 1e-8);
    }

    #[test]
    fn chi_geq_projector_and_monotone(n in 1usize..9, seed in any::<u64>(), t1 in -2.0f64..2.0, dt in 0.0f64..2.0) {
        let mut rng = seeded_rng(seed);
        let g = ginibre(n, &mut rng);
        let h = (&g + g.adjoint()).map(|z| z * 0.5);
        let p1 = chi_geq(&h, t1).unwrap();
        let p2 = chi_geq(&h, t1 + dt).unwrap();
        for p in [&p1, &p2] {
            prop_assert!(max_entry(&(p * p - p)) < 1e-10);
            prop_assert!(max_entry(&(p - p.adjoint())) < 1e-10);
        }
        prop_assert!(min_eig(&(&p1 - &p2)) >= -1e-10);
    }

    #[test]
    fn trace_is_tracial(n in 1usize..9, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = ginibre(n, &mut rng);
        let b = ginibre(n, &mut rng);
        let d = (operator::tau(&(&a * &b)) - operator::tau(&(&b * &a))).norm();
        prop_assert!(d <= 1e-10 * operator::frobenius(&a) * operator::frobenius(&b));
    }

    #[test]
    fn opposite_is_star_anti_isomorphism(n in 1usize..7, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = ginibre(n, &mut rng);
        let b = ginibre(n, &mut rng);
        prop_assert!(max_entry(&(opposite(&a.adjoint()) - opposite(&a).adjoint())) < 1e-12);
        prop_assert!(max_entry(&(opposite(&(&a * &b)) - opposite(&b) * opposite(&a))) < 1e-12);
    }

    #[test]
    fn sync_test_mixture_identity(q in 2usize..5, k in 2usize..4, c in 0.0f64..=1.0, seed in any::<u64>()) {
        let g = game_of_shape(q, k);
        let tested = with_sync_test(&g, c).unwrap();
        prop_assert!(is_synchronous_game(&tested));
        let s = embed_tracial(&random_noisy_strategy((2, 3), (q, k), 0.1, seed).unwrap());
        let corr = correlation(&s).unwrap();
        let omega = value_of_correlation(&g, &corr).unwrap();
        let delta = synchronicity(&g, &corr).unwrap();
        let tested_value = winning_probability(&tested, &s).unwrap();
        prop_assert!((tested_value - ((1.0 - c) * omega + c * (1.0 - delta))).abs() < 1e-10);
        if c > 0.0 {
            prop_assert!(delta <= (1.0 - tested_value) / c + 1e-10);
        }
    }

    #[test]
    fn embedding_preserves_correlations(da in 1usize..5, db in 1usize..5, q in 1usize..5, k in 1usize..5, seed in any::<u64>()) {
        let s = random_noisy_strategy((da, db), (q, k), 0.2, seed).unwrap();
        let want = tensor_correlation(&s);
        let got = correlation(&embed_tracial(&s)).unwrap();
        for (w, g) in want.iter().zip(got.data()) {
            prop_assert!((w - g).abs() <= 1e-9);
        }
        for x in 0..q {
            for y in 0..q {
                let row: f64 = (0..k).flat_map(|a| (0..k).map(move |b| (a, b)))
                    .map(|(a, b)| got.get(x, y, a, b)).sum();
                prop_assert!((row - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn perturbation_is_deterministic(eta in 0.0f64..0.3, seed in any::<u64>()) {
        let g = game_of_shape(3, 3);
        let base = builtin_strategy("maxent", &g).unwrap();
        let a = perturb_strategy(&base, eta, seed).unwrap();
        let b = perturb_strategy(&base, eta, seed).unwrap();
        prop_assert_eq!(&a, &b);
        if eta == 0.0 {
            prop_assert_eq!(&a, &base);
        }
    }

    #[test]
    fn co_polar_factorization_holds(n in 1usize..6, q in 1usize..4, k in 2usize..4, seed in any::<u64>()) {
        let g = game_of_shape(q, k);
        let s = random_tracial(n, q, k, seed);
        let r = lemma_report(&g, &s).unwrap();
        let f = r["sync_factorization_co_polar"];
        prop_assert!(f.holds(1e-8), "{:?}", f);
        prop_assert!(r["measurement_substitution"].holds(1e-8));
        prop_assert!(r["orthogonalization"].holds(1e-8));
        prop_assert!(r["connes_polar_pair"].holds(1e-8));
    }

    #[test]
    fn layer_cake_reconstructs_square(n in 1usize..17, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let sigma = random_positive(n, &mut rng);
        let pieces = projector_slices(&sigma).unwrap();
        let total: f64 = pieces.iter().map(|p| p.measure * p.rank as f64 / n as f64).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(max_entry(&(reconstruct_square(&pieces, n) - &sigma * &sigma)) < 1e-9);
    }

    #[test]
    fn connes_inequality(n in 1usize..17, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let rho = random_positive(n, &mut rng);
        let sigma = random_positive(n, &mut rng);
        let (lhs, rhs) = verify_connes(&rho, &sigma).unwrap();
        prop_assert!(lhs <= rhs + 1e-8, "{} > {}", lhs, rhs);
        let (z, _) = verify_connes(&rho, &rho).unwrap();
        prop_assert!(z.abs() < 1e-10);
    }

    #[test]
    fn orthogonalization_bound(n in 1usize..7, k in 2usize..5, seed in any::<u64>(), weight in 0.0f64..0.5) {
        let mut rng = seeded_rng(seed);
        let sigma = random_sigma(n, &mut rng);
        let povm = syncround::generate::noisy_povm(
            &random_povm(n, k, &mut rng).unwrap(), weight, &mut rng).unwrap();
        let o = nearest_pvm(&povm, &sigma).unwrap();
        prop_assert!(is_valid_pvm(&o.pvm, 1e-9));
        if o.epsilon < 1.0 / 9.0 {
            prop_assert!(o.within_bound(), "error {} eps {}", o.error, o.epsilon);
        }
    }

    #[test]
    fn dominated_pairs_factor(n in 1usize..9, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let a = random_positive(n, &mut rng);
        let a = &a * &a;
        let contraction = random_positive(n, &mut rng);
        let top = contraction.symmetric_eigenvalues().max();
        let x = contraction.map(|z| z / top.max(1.0));
        let root = operator::sqrt_psd(&a).unwrap();
        let b = &root * x * &root;
        let cut = operator::default_cutoff(&a).unwrap();
        let cm = dominated_factorization(&a, &b, cut).unwrap();
        prop_assert!(max_entry(&(&root * &cm * &root - &b)) < 1e-8);
        prop_assert!(min_eig(&cm) >= -1e-9);
        prop_assert!(min_eig(&(CMatrix::identity(n, n) - &cm)) >= -1e-9);
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn rounding_components_are_synchronous(eta in 1e-4f64..0.3, seed in any::<u64>(), pick in 0usize..4) {
        let (game, strat) = [("k3", "maxent"), ("k3", "skewed"), ("cycle:4:2", "rotated"), ("complete:4:4", "maxent")][pick];
        let g = syncround::game::builtin_game(game).unwrap();
        let base = builtin_strategy(strat, &g).unwrap();
        let s = perturb_strategy(&base, eta, seed).unwrap();
        let dec = round_correlation(&g, &s).unwrap();
        prop_assert!((dec.weight_sum() - 1.0).abs() <= 1e-9);
        for comp in &dec.correlations {
            prop_assert!(synchronicity(&g, comp).unwrap() <= COMPONENT_SYNC_TOL);
        }
        let again = dec.recompute_mixed().unwrap();
        prop_assert!(again.max_abs_diff(&dec.mixed) <= 1e-10);
    }

    #[test]
    fn rounding_random_tracial(n in 1usize..6, q in 1usize..4, k in 2usize..4, seed in any::<u64>()) {
        let g = game_of_shape(q, k);
        let s = random_tracial(n, q, k, seed);
        let dec = round_tracial(&g, &s).unwrap();
        prop_assert!((dec.weight_sum() - 1.0).abs() <= 1e-9);
        for comp in &dec.correlations {
            prop_assert!(synchronicity(&g, comp).unwrap() <= COMPONENT_SYNC_TOL);
        }
    }

    #[test]
    fn symmetrize_fixes_symmetric_positive(n in 1usize..6, q in 1usize..4, k in 2usize..4, seed in any::<u64>()) {
        let g = game_of_shape(q, k);
        let mut rng = seeded_rng(seed);
        let sigma = random_positive(n, &mut rng);
        let povms: Vec<Povm> = (0..q).map(|_| random_povm(n, k, &mut rng).unwrap()).collect();
        let s = TracialStrategy::symmetric(sigma, povms).unwrap();
        let (out, rep) = symmetrize(&g, &s).unwrap();
        prop_assert_eq!(out.sigma(), s.sigma());
        prop_assert!(rep.distance == 0.0);
    }

    #[test]
    fn aggregated_families_are_povms(n in 1usize..7, k in 2usize..4, seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let sigma = random_positive(n, &mut rng);
        let pieces = projector_slices(&sigma).unwrap();
        let fams: Vec<SliceFamily> = pieces.iter().map(|p| SliceFamily {
            measure: p.measure,
            basis: p.basis.clone(),
            povms: vec![random_povm(p.rank, k, &mut rng).unwrap(), random_povm(p.rank, k, &mut rng).unwrap()],
        }).collect();
        let h = aggregate_slice_povms(&sigma, &fams).unwrap();
        prop_assert_eq!(h.len(), 2);
        for p in &h {
            prop_assert!(is_valid_povm(p, 1e-9));
        }
    }
}
