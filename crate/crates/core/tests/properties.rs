use drbound::entropic::{one_shot_penalty, relative_entropy, sandwiched_renyi};
use drbound::io::{fingerprint, parse_state, state_to_json};
use drbound::measures::{beta_a, beta_b, dimension_feasible_point};
use drbound::opalg::{fidelity, partial_trace, partial_transpose, tensor, BipartiteOp, Subsystem};
use drbound::states::{random_bipartite_state, random_density_matrix, random_hermitian, random_product_state};
use drbound::sweep::PGrid;
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![(1, 2), (2, 2), (2, 3), (3, 2), (3, 3)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_transpose_is_an_involution((da, db) in dims(), seed in any::<u64>()) {
        let x = BipartiteOp::new(random_hermitian::<f64>(da * db, seed), da, db).unwrap();
        for side in [Subsystem::A, Subsystem::B] {
            let back = partial_transpose(&partial_transpose(&x, side), side);
            prop_assert!((back.op() - x.op()).max_abs() < 1e-14);
        }
    }

    #[test]
    fn partial_trace_of_product_recovers_factor(da in 1usize..4, db in 1usize..4, seed in any::<u64>()) {
        let a = random_density_matrix::<f64>(da, da, seed);
        let b = random_density_matrix::<f64>(db, db, seed ^ 1);
        let ab = tensor(a.op(), b.op());
        prop_assert!((&partial_trace(&ab, Subsystem::B) - a.op()).max_abs() < 1e-13);
        prop_assert!((&partial_trace(&ab, Subsystem::A) - b.op()).max_abs() < 1e-13);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(d in 2usize..5, r1 in 1usize..5, seed in any::<u64>()) {
        let rho = random_density_matrix::<f64>(d, r1.min(d), seed);
        let sigma = random_density_matrix::<f64>(d, d, seed ^ 2);
        let f1 = fidelity(rho.op(), sigma.op()).unwrap();
        let f2 = fidelity(sigma.op(), rho.op()).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-9);
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f1));
        prop_assert!((fidelity(rho.op(), rho.op()).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn relative_entropy_shifts_under_scaling(d in 2usize..5, seed in any::<u64>(), c in 0.05f64..20.0) {
        let rho = random_density_matrix::<f64>(d, 1 + (seed % d as u64) as usize, seed);
        let sigma = random_density_matrix::<f64>(d, d, seed ^ 3);
        let base = relative_entropy(rho.op(), sigma.op()).unwrap();
        let scaled = relative_entropy(rho.op(), &sigma.op().scaled(c)).unwrap();
        prop_assert!((scaled - (base - c.log2())).abs() < 1e-9);
        prop_assert!(base >= -1e-12);
    }

    #[test]
    fn renyi_dominates_umegaki(seed in any::<u64>(), alpha in 1.05f64..6.0) {
        let rho = random_density_matrix::<f64>(3, 2, seed);
        let sigma = random_density_matrix::<f64>(3, 3, seed ^ 4);
        let d = relative_entropy(rho.op(), sigma.op()).unwrap();
        let da = sandwiched_renyi(rho.op(), sigma.op(), alpha).unwrap();
        prop_assert!(da >= d - 1e-9);
    }

    #[test]
    fn penalty_matches_formula(eps in 0.0f64..0.99, alpha in 1.01f64..10.0) {
        let p = one_shot_penalty(eps, alpha).unwrap();
        let want = alpha / (alpha - 1.0) * (1.0 / (1.0 - eps)).log2();
        prop_assert!((p - want).abs() <= 1e-12 * want.max(1.0));
        prop_assert!(p >= 0.0);
    }

    #[test]
    fn grid_is_increasing_and_inclusive(start in 0.0f64..1.0, len in 0.0f64..1.0, step in 1e-3f64..1.5) {
        let stop = (start + len).min(1.0);
        let g = PGrid { start, stop, step };
        prop_assume!(g.validate().is_ok());
        let pts = g.points();
        prop_assert_eq!(pts[0], start);
        prop_assert!(pts.windows(2).all(|w| w[1] > w[0]));
        if step <= stop - start {
            prop_assert_eq!(*pts.last().unwrap(), stop);
        } else {
            prop_assert_eq!(pts.len(), 1);
        }
    }

    #[test]
    fn state_files_round_trip((da, db) in dims(), seed in any::<u64>()) {
        let rho = random_bipartite_state::<f64>(da, db, 1 + (seed % (da * db) as u64) as usize, seed);
        let back = parse_state(&state_to_json(rho.bip())).unwrap();
        prop_assert_eq!(back.dims(), (da, db));
        prop_assert!((back.op() - rho.op()).max_abs() < 1e-15);
        let again = parse_state(&state_to_json(back.bip())).unwrap();
        prop_assert_eq!(fingerprint(again.op()), fingerprint(back.op()));
    }
}

proptest! {
    // each case solves semi-definite programs
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn beta_of_product_state_is_one((da, db) in dims(), seed in any::<u64>()) {
        let rho = random_product_state::<f64>(da, db, seed);
        let a = beta_a(rho.bip(), rho.marginal(Subsystem::A).op()).unwrap();
        let b = beta_b(rho.bip(), rho.marginal(Subsystem::B).op()).unwrap();
        prop_assert!((a.value - 1.0).abs() < 1e-6, "betaA {}", a.value);
        prop_assert!((b.value - 1.0).abs() < 1e-6, "betaB {}", b.value);
    }

    #[test]
    fn beta_lies_between_one_and_dimension_point((da, db) in dims(), seed in any::<u64>()) {
        let rho = random_bipartite_state::<f64>(da, db, 1 + (seed % (da * db) as u64) as usize, seed);
        let b = beta_a(rho.bip(), rho.marginal(Subsystem::A).op()).unwrap();
        let dim = dimension_feasible_point(&rho, Subsystem::A).unwrap();
        prop_assert!(b.value >= 1.0 - 1e-6);
        prop_assert!(b.value <= dim.value + 1e-6);
    }
}
