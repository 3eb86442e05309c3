mod common;

use starq::fitting::{fit_power_exponent, fit_rate_params, normalize_nrq, Direction, FitMode};
use starq::optimizer::{
    sweep_budgets, ContinuousOptimizer, DiscreteOptimizer, FeasibleSets, StarOptimizer,
};
use starq::ordering::{
    build_layer_grid, path_quality_loss, ForwardOrderer, LayerLevels, LayerOrderer,
};
use starq::tables::{qr_model, quality_params, rate_params, Scenario, Sequence};
use starq::{QualityParams, RateParams, Star, CIF, QCIF};

use common::*;

fn city() -> (RateParams, QualityParams) {
    (
        rate_params(Scenario::Svc1, Sequence::City),
        quality_params(Sequence::City),
    )
}

/// Best quality on an n x n log grid over (s, t) with q from the budget.
fn grid_oracle(rp: &RateParams, qp: &QualityParams, budget: f64, n: usize) -> (Star, f64) {
    let r = rp.reference;
    let mut best = (r.anchor(), f64::NEG_INFINITY);
    for s in geomspace(r.s_max / 1024.0, r.s_max, n) {
        for t in geomspace(r.t_max / 1024.0, r.t_max, n) {
            let q = r.q_min
                * ((rp.r_max / budget) * (s / r.s_max).powf(rp.c) * (t / r.t_max).powf(rp.b))
                    .powf(1.0 / rp.a);
            let star = Star {
                q: q.max(r.q_min),
                s,
                t,
            };
            let quality = qp.evaluate(&star).unwrap();
            if quality > best.1 {
                best = (star, quality);
            }
        }
    }
    best
}

#[test]
fn continuous_sweep_trends_for_city() {
    let (rp, qp) = city();
    let opt = ContinuousOptimizer::default();
    let results: Vec<_> = sweep_budgets(rp.r_max, 50)
        .into_iter()
        .map(|b| opt.optimize(&rp, &qp, b).unwrap())
        .collect();
    for w in results.windows(2) {
        assert!(
            w[1].star.s >= w[0].star.s,
            "s_opt fell: {:?} -> {:?}",
            w[0].star,
            w[1].star
        );
        assert!(
            w[1].star.t >= w[0].star.t,
            "t_opt fell: {:?} -> {:?}",
            w[0].star,
            w[1].star
        );
        assert!(w[1].quality > w[0].quality);
    }
    let last = results.last().unwrap();
    assert_eq!(last.star, rp.reference.anchor());
    assert_eq!(last.quality, 1.0);
}

#[test]
fn continuous_not_worse_than_finer_plain_grid() {
    let opt = ContinuousOptimizer::default();
    for seq in Sequence::ALL {
        let rp = rate_params(Scenario::Svc1, seq);
        let qp = quality_params(seq);
        for frac in [0.02, 0.05, 0.1, 0.3, 0.7] {
            let budget = frac * rp.r_max;
            let got = opt.optimize(&rp, &qp, budget).unwrap();
            let (_, oracle) = grid_oracle(&rp, &qp, budget, 127);
            assert!(
                got.quality >= oracle - 1e-3,
                "{} at {frac}: {} vs {oracle}",
                seq.name(),
                got.quality
            );
            assert!(rel_err(got.rate, budget) <= 1e-9 || got.rate < budget);
        }
    }
}

#[test]
fn small_budget_drops_both_resolutions() {
    let opt = ContinuousOptimizer::default();
    for seq in Sequence::ALL {
        let rp = rate_params(Scenario::Svc1, seq);
        let qp = quality_params(seq);
        let budget = rp.r_max / 100.0;
        let (oracle, _) = grid_oracle(&rp, &qp, budget, 200);
        assert!(
            oracle.s < rp.reference.s_max && oracle.t < rp.reference.t_max,
            "{}",
            seq.name()
        );
        let got = opt.optimize(&rp, &qp, budget).unwrap();
        assert!(
            got.star.s < rp.reference.s_max,
            "{}: {:?}",
            seq.name(),
            got.star
        );
        assert!(
            got.star.t < rp.reference.t_max,
            "{}: {:?}",
            seq.name(),
            got.star
        );
    }
}

#[test]
fn discrete_picks_qcif_when_only_qcif_fits() {
    let (rp, qp) = city();
    let sets = FeasibleSets::dyadic();
    let (q_hi, t_lo) = (sets.q_range.1, sets.t_values[0]);
    let cif_floor = rp
        .evaluate(&Star {
            q: q_hi,
            s: CIF,
            t: t_lo,
        })
        .unwrap();
    let qcif_floor = rp
        .evaluate(&Star {
            q: q_hi,
            s: QCIF,
            t: t_lo,
        })
        .unwrap();
    assert!(qcif_floor < cif_floor);
    let budget = 0.5 * (qcif_floor + cif_floor);
    let got = DiscreteOptimizer { sets: sets.clone() }
        .optimize(&rp, &qp, budget)
        .unwrap();
    assert_eq!(got.star.s, QCIF);
    assert_eq!(
        Some(got.star),
        brute_force_discrete(&rp, &qp, &sets, budget)
    );
}

#[test]
fn discrete_infeasible_below_smallest_operating_point() {
    let (rp, qp) = city();
    let sets = FeasibleSets::dyadic();
    let floor = rp
        .evaluate(&Star {
            q: sets.q_range.1,
            s: QCIF,
            t: sets.t_values[0],
        })
        .unwrap();
    let res = DiscreteOptimizer { sets }.optimize(&rp, &qp, floor * 0.99);
    assert!(matches!(res, Err(starq::Error::Infeasible(_))));
}

#[test]
fn layer_grids_monotone_for_every_sequence() {
    for seq in Sequence::ALL {
        let rp = rate_params(Scenario::Svc1, seq);
        let grid = build_layer_grid(&rp, &quality_params(seq), &LayerLevels::standard()).unwrap();
        assert_eq!(grid.dims(), [3, 4, 4]);
        assert!(rel_err(grid.rate_at(grid.top()), rp.r_max) <= 1e-12);
        for idx in grid.indices() {
            for axis in 0..3 {
                let mut next = idx;
                next[axis] += 1;
                if next[axis] < grid.dims()[axis] {
                    assert!(grid.rate_at(next) > grid.rate_at(idx));
                    assert!(grid.quality_at(next) >= grid.quality_at(idx));
                }
            }
        }
    }
}

#[test]
fn city_forward_path_stays_near_qr_envelope() {
    let (rp, qp) = city();
    let grid = build_layer_grid(&rp, &qp, &LayerLevels::standard()).unwrap();
    let path = ForwardOrderer.order(&grid);
    path.check_monotone().unwrap();
    let loss = path_quality_loss(&path, &qr_model(Sequence::City)).unwrap();
    assert!((0.0..=0.05).contains(&loss), "loss {loss}");
}

#[test]
fn nrq_exponent_recovers_city_a() {
    let (rp, _) = city();
    let log = synthetic_log(&rp);
    let a = fit_power_exponent(&normalize_nrq(&log).unwrap(), Direction::Decreasing).unwrap();
    assert!((a - rp.a).abs() <= 1e-6, "{a}");
}

#[test]
fn one_percent_noise_keeps_parameters_within_five_percent() {
    let (rp, _) = city();
    for mode in [FitMode::Protocol, FitMode::Joint] {
        let mut errs = Vec::new();
        for seed in 0..20 {
            let report = fit_rate_params(&noisy_log(&rp, seed, 0.01), mode).unwrap();
            assert!(report.pc >= 0.999);
            let p = report.params;
            errs.push(
                [
                    rel_err(p.a, rp.a),
                    rel_err(p.b, rp.b),
                    rel_err(p.c, rp.c),
                    rel_err(p.r_max, rp.r_max),
                ]
                .into_iter()
                .fold(0.0, f64::max),
            );
        }
        let p95 = percentile_95(errs);
        assert!(p95 <= 0.05, "{mode:?}: p95 {p95}");
    }
}
