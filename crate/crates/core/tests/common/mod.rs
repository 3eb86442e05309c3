#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use starq::fitting::{EncodeLog, RateSample};
use starq::optimizer::FeasibleSets;
use starq::{QualityParams, RateParams, Star, CIF, CIF4, QCIF};

pub const GRID_Q: [f64; 4] = [16.0, 26.0, 40.0, 64.0];
pub const GRID_T: [f64; 5] = [1.875, 3.75, 7.5, 15.0, 30.0];
pub const GRID_S: [f64; 3] = [QCIF, CIF, CIF4];

pub fn grid_stars() -> Vec<Star> {
    let mut out = Vec::new();
    for &q in &GRID_Q {
        for &s in &GRID_S {
            for &t in &GRID_T {
                out.push(Star { q, s, t });
            }
        }
    }
    out
}

/// Noiseless log over the 4 x 3 x 5 measurement grid.
pub fn synthetic_log(p: &RateParams) -> EncodeLog {
    let samples = grid_stars()
        .into_iter()
        .map(|star| RateSample::new(star, p.evaluate(&star).unwrap()))
        .collect();
    EncodeLog::with_reference(samples, p.reference).unwrap()
}

/// Same grid with i.i.d. multiplicative Gaussian noise of relative size `sigma`.
pub fn noisy_log(p: &RateParams, seed: u64, sigma: f64) -> EncodeLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let samples = grid_stars()
        .into_iter()
        .map(|star| {
            let r = p.evaluate(&star).unwrap() * (1.0 + noise.sample(&mut rng));
            RateSample::new(star, r)
        })
        .collect();
    EncodeLog::with_reference(samples, p.reference).unwrap()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

/// Independent enumeration for the discrete problem: every (s, t) pair,
/// stepsize from inverting the rate model, drop pairs needing q above the
/// range, then sort by (quality desc, q asc, t desc, s desc).
pub fn brute_force_discrete(
    rp: &RateParams,
    qp: &QualityParams,
    sets: &FeasibleSets,
    budget: f64,
) -> Option<Star> {
    let r = rp.reference;
    let mut cands: Vec<(f64, Star)> = Vec::new();
    for &s in &sets.s_values {
        for &t in &sets.t_values {
            let q_exact = r.q_min
                * ((rp.r_max / budget) * (s / r.s_max).powf(rp.c) * (t / r.t_max).powf(rp.b))
                    .powf(1.0 / rp.a);
            let q = if q_exact < sets.q_range.0 {
                sets.q_range.0
            } else {
                q_exact
            };
            if q > sets.q_range.1 {
                continue;
            }
            let star = Star { q, s, t };
            cands.push((qp.evaluate(&star).unwrap(), star));
        }
    }
    cands.sort_by(|(qa, a), (qb, b)| {
        qb.partial_cmp(qa)
            .unwrap()
            .then(a.q.partial_cmp(&b.q).unwrap())
            .then(b.t.partial_cmp(&a.t).unwrap())
            .then(b.s.partial_cmp(&a.s).unwrap())
    });
    cands.first().map(|(_, s)| *s)
}

/// Log-spaced values from `lo` to `hi` inclusive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

pub fn percentile_95(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (0.95 * (v.len() - 1) as f64).ceil() as usize;
    v[rank]
}
