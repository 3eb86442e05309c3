mod common;

use proptest::prelude::*;
use starq::features::{FeatureVector, PredictorMatrix};
use starq::fitting::{fit_rate_params, pearson, FitMode};
use starq::optimizer::{
    feasible_q, ContinuousOptimizer, DiscreteOptimizer, FeasibleSets, StarOptimizer,
};
use starq::ordering::{
    build_layer_grid, BackwardOrderer, ForwardOrderer, LayerLevels, LayerOrderer,
};
use starq::{QualityParams, RateParams, ResolutionRef, Star, CIF4};

use common::*;

prop_compose! {
    fn rate_params()(a in 0.8f64..2.0, b in 0.2f64..1.0, c in 0.3f64..1.5, r_max in 100.0f64..10_000.0) -> RateParams {
        RateParams::new(a, b, c, r_max, ResolutionRef::standard()).unwrap()
    }
}

prop_compose! {
    fn quality_params()(aq in 3.0f64..10.0, as_ in 1.0f64..5.0, at in 2.0f64..6.0) -> QualityParams {
        QualityParams::new(aq, as_, at, ResolutionRef::standard()).unwrap()
    }
}

prop_compose! {
    fn star()(q in 16.0f64..128.0, s in 0.01f64..1.0, t in 0.02f64..1.0) -> Star {
        Star { q, s: s * CIF4, t: t * 30.0 }
    }
}

fn features() -> impl Strategy<Value = FeatureVector> {
    (0.0f64..20.0, 0.0f64..20.0, 0.0f64..2.0)
        .prop_map(|(a, b, c)| FeatureVector::new(a, b, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_is_separable(p in rate_params(), x in star()) {
        let r = p.reference;
        let full = p.evaluate(&x).unwrap();
        let fq = p.evaluate(&Star { q: x.q, s: r.s_max, t: r.t_max }).unwrap();
        let fs = p.evaluate(&Star { q: r.q_min, s: x.s, t: r.t_max }).unwrap();
        let ft = p.evaluate(&Star { q: r.q_min, s: r.s_max, t: x.t }).unwrap();
        let product = fq * fs * ft / (p.r_max * p.r_max);
        prop_assert!(rel_err(product, full) <= 1e-12);
    }

    #[test]
    fn rate_monotone_in_each_axis(p in rate_params(), x in star(), k in 1.01f64..2.0) {
        let r0 = p.evaluate(&x).unwrap();
        for moved in [Star::new(x.q * k, x.s, x.t), Star::new(x.q, x.s / k, x.t), Star::new(x.q, x.s, x.t / k)] {
            let r = p.evaluate(&moved.unwrap()).unwrap();
            prop_assert!(r < r0);
        }
    }

    #[test]
    fn quality_normalized_bounded_and_monotone(qp in quality_params(), x in star(), k in 1.01f64..2.0) {
        let anchor = qp.reference.anchor();
        prop_assert!((qp.evaluate(&anchor).unwrap() - 1.0).abs() <= 1e-12);
        let q0 = qp.evaluate(&x).unwrap();
        prop_assert!(q0 > 0.0 && q0 <= 1.0 + 1e-12);
        for moved in [Star::new(x.q * k, x.s, x.t), Star::new(x.q, x.s / k, x.t), Star::new(x.q, x.s, x.t / k)] {
            let q = qp.evaluate(&moved.unwrap()).unwrap();
            prop_assert!(q < q0);
        }
    }

    #[test]
    fn feasible_q_inverts_rate(p in rate_params(), x in star(), frac in 0.001f64..2.0) {
        let budget = frac * p.r_max;
        let q = feasible_q(&p, x.s, x.t, budget).unwrap();
        let r = p.evaluate(&Star { q, ..x }).unwrap();
        prop_assert!(rel_err(r, budget) <= 1e-9);
    }

    #[test]
    fn pearson_affine_invariant(
        xs in prop::collection::vec(-100.0f64..100.0, 5..40),
        noise in prop::collection::vec(-1.0f64..1.0, 40),
        scale in 0.01f64..100.0,
        shift in -1000.0f64..1000.0,
    ) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, n)| 0.5 * x + 10.0 * n).collect();
        prop_assume!(xs.iter().any(|x| (x - xs[0]).abs() > 1e-3));
        let base = pearson(&xs, &ys).unwrap();
        let moved: Vec<f64> = ys.iter().map(|y| scale * y + shift).collect();
        prop_assert!((pearson(&xs, &moved).unwrap() - base).abs() <= 1e-12);
        prop_assert!(base.abs() <= 1.0);
    }

    #[test]
    fn predictor_is_affine_in_features(f in features(), g in features()) {
        for h in [PredictorMatrix::svc1(), PredictorMatrix::sl2()] {
            let zero = h.apply(&FeatureVector::new(0.0, 0.0, 0.0).unwrap());
            let sum = FeatureVector::new(f.mu_dfd + g.mu_dfd, f.sigma_mvm + g.sigma_mvm, f.sigma_mda + g.sigma_mda).unwrap();
            let (hf, hg, hs) = (h.apply(&f), h.apply(&g), h.apply(&sum));
            for k in 0..4 {
                let want = hf[k] + hg[k] - zero[k];
                prop_assert!((hs[k] - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn joint_residual_never_worse_than_protocol(p in rate_params(), seed in 0u64..1000) {
        let log = noisy_log(&p, seed, 0.05);
        let protocol = fit_rate_params(&log, FitMode::Protocol).unwrap();
        let joint = fit_rate_params(&log, FitMode::Joint).unwrap();
        prop_assert!(joint.sse() <= protocol.sse() * (1.0 + 1e-12));
    }

    #[test]
    fn forward_steps_are_locally_greedy(p in rate_params(), qp in quality_params()) {
        let grid = build_layer_grid(&p, &qp, &LayerLevels::standard()).unwrap();
        let dims = grid.dims();
        let path = ForwardOrderer.order(&grid);
        for w in path.steps.windows(2) {
            let cur = w[0].index;
            let ratio = |next: [usize; 3]| {
                (grid.quality_at(next) - grid.quality_at(cur)) / (grid.rate_at(next) - grid.rate_at(cur))
            };
            let taken = ratio(w[1].index);
            for axis in 0..3 {
                if cur[axis] + 1 < dims[axis] {
                    let mut alt = cur;
                    alt[axis] += 1;
                    prop_assert!(taken >= ratio(alt));
                }
            }
        }
    }

    #[test]
    fn directions_agree_on_single_axis_lattices(p in rate_params(), qp in quality_params(), axis in 0usize..3) {
        let mut levels = LayerLevels { s_values: vec![CIF4], t_values: vec![30.0], q_levels: vec![16.0] };
        match axis {
            0 => levels.s_values = vec![CIF4 / 16.0, CIF4 / 4.0, CIF4],
            1 => levels.t_values = vec![3.75, 7.5, 15.0, 30.0],
            _ => levels.q_levels = vec![64.0, 40.0, 26.0, 16.0],
        }
        let grid = build_layer_grid(&p, &qp, &levels).unwrap();
        prop_assert_eq!(ForwardOrderer.order(&grid), BackwardOrderer.order(&grid));
    }

    #[test]
    fn optimizers_are_deterministic(p in rate_params(), qp in quality_params(), frac in 0.02f64..1.0) {
        let budget = frac * p.r_max;
        let cont = ContinuousOptimizer::default();
        prop_assert_eq!(cont.optimize(&p, &qp, budget).unwrap(), cont.optimize(&p, &qp, budget).unwrap());
        let disc = DiscreteOptimizer { sets: FeasibleSets::dyadic() };
        let a = disc.optimize(&p, &qp, budget).ok();
        let b = disc.optimize(&p, &qp, budget).ok();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn discrete_matches_enumeration(p in rate_params(), qp in quality_params(), frac in 0.005f64..1.0) {
        let sets = FeasibleSets::dyadic();
        let budget = frac * p.r_max;
        let got = DiscreteOptimizer { sets: sets.clone() }.optimize(&p, &qp, budget).ok().map(|r| r.star);
        prop_assert_eq!(got, brute_force_discrete(&p, &qp, &sets, budget));
    }
}
