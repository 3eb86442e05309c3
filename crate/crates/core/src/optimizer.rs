//! Rate-constrained quality maximization over (q, s, t).
//!
//! For a candidate frame size and frame rate the rate model is inverted for
//! the stepsize that spends the budget exactly ([`feasible_q`]); the search
//! is then two-dimensional over (s, t).

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::minimize::brent;
use crate::model::{qr_curve, QrModel, QualityParams, RateParams, Star, CIF, CIF4, QCIF};
use crate::registry::Registry;

/// Stepsize at which `(q, s, t)` costs exactly `budget`. May fall below
/// `q_min` for generous budgets; callers clamp.
pub fn feasible_q(p: &RateParams, s: f64, t: f64, budget: f64) -> Result<f64> {
    p.validate()?;
    ensure_positive("frame size", s)?;
    ensure_positive("frame rate", t)?;
    ensure_positive("budget", budget)?;
    if p.a == 0.0 {
        return Err(Error::invalid(
            "stepsize exponent a = 0: rate does not depend on q",
        ));
    }
    Ok(feasible_q_unchecked(p, s, t, budget))
}

fn feasible_q_unchecked(p: &RateParams, s: f64, t: f64, budget: f64) -> f64 {
    let r = &p.reference;
    let load = (p.r_max / budget) * (s / r.s_max).powf(p.c) * (t / r.t_max).powf(p.b);
    r.q_min * load.powf(1.0 / p.a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub star: Star,
    pub quality: f64,
    pub rate: f64,
    pub feasible: bool,
}

/// Discrete frame sizes and frame rates plus a stepsize interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSets {
    pub s_values: Vec<f64>,
    pub t_values: Vec<f64>,
    pub q_range: (f64, f64),
}

impl FeasibleSets {
    /// QCIF/CIF/4CIF, 3.75 to 30 Hz dyadic, q in [16, 104].
    pub fn dyadic() -> Self {
        Self {
            s_values: vec![QCIF, CIF, CIF4],
            t_values: vec![3.75, 7.5, 15.0, 30.0],
            q_range: (16.0, 104.0),
        }
    }

    pub fn validate(&self, p: &RateParams) -> Result<()> {
        let r = &p.reference;
        for (name, v, top) in [
            ("s_values", &self.s_values, r.s_max),
            ("t_values", &self.t_values, r.t_max),
        ] {
            if v.is_empty() {
                return Err(Error::invalid(format!("{name} is empty")));
            }
            for x in v {
                ensure_positive(name, *x)?;
            }
            if v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "{name} must be strictly increasing"
                )));
            }
            if *v.last().unwrap() != top {
                return Err(Error::invalid(format!(
                    "largest of {name} ({}) must equal the reference ({top})",
                    v.last().unwrap()
                )));
            }
        }
        let (lo, hi) = self.q_range;
        ensure_positive("q_range low", lo)?;
        if !(hi.is_finite() && hi >= lo) {
            return Err(Error::invalid(format!(
                "q_range ({lo}, {hi}) is not an interval"
            )));
        }
        if lo < r.q_min {
            return Err(Error::invalid(format!(
                "q_range low {lo} is below q_min {}",
                r.q_min
            )));
        }
        Ok(())
    }
}

/// A strategy for choosing (q, s, t) under a rate budget.
pub trait StarOptimizer: Send + Sync {
    fn name(&self) -> &'static str;
    fn optimize(
        &self,
        rate: &RateParams,
        quality: &QualityParams,
        budget: f64,
    ) -> Result<OptimizationResult>;
}

fn check_inputs(rate: &RateParams, quality: &QualityParams, budget: f64) -> Result<()> {
    rate.validate()?;
    quality.validate()?;
    ensure_positive("budget", budget)?;
    if rate.reference != quality.reference {
        return Err(Error::invalid(format!(
            "rate and quality models use different reference resolutions: {:?} vs {:?}",
            rate.reference, quality.reference
        )));
    }
    if rate.a == 0.0 {
        return Err(Error::invalid(
            "stepsize exponent a = 0: rate does not depend on q",
        ));
    }
    Ok(())
}

/// Log-spaced grid search over `(0, s_max] x (0, t_max]` followed by one
/// half-step refinement around the best cell.
#[derive(Debug, Clone, Copy)]
pub struct ContinuousOptimizer {
    /// Grid points per axis.
    pub points: usize,
    /// Smallest searched `s / s_max` and `t / t_max`.
    pub min_fraction: f64,
}

impl Default for ContinuousOptimizer {
    fn default() -> Self {
        Self {
            points: 64,
            min_fraction: 1.0 / 1024.0,
        }
    }
}

impl ContinuousOptimizer {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    fn candidate(
        rate: &RateParams,
        quality: &QualityParams,
        budget: f64,
        s: f64,
        t: f64,
    ) -> (Star, f64) {
        let q = feasible_q_unchecked(rate, s, t, budget).max(rate.reference.q_min);
        let star = Star { q, s, t };
        (star, quality.evaluate_unchecked(&star))
    }
}

impl StarOptimizer for ContinuousOptimizer {
    fn name(&self) -> &'static str {
        "continuous"
    }

    fn optimize(
        &self,
        rate: &RateParams,
        quality: &QualityParams,
        budget: f64,
    ) -> Result<OptimizationResult> {
        check_inputs(rate, quality, budget)?;
        if self.points < 2 {
            return Err(Error::invalid(
                "continuous search needs at least 2 grid points per axis",
            ));
        }
        if !(self.min_fraction > 0.0 && self.min_fraction < 1.0) {
            return Err(Error::invalid("min_fraction must lie in (0, 1)"));
        }
        let r = rate.reference;
        let n = self.points;
        let log_lo = self.min_fraction.ln();
        let step = -log_lo / (n - 1) as f64;
        // position k (possibly fractional) on the axis, k = n - 1 is the maximum
        let at = |max: f64, k: f64| -> f64 {
            if k >= (n - 1) as f64 {
                max
            } else {
                max * (log_lo + k * step).exp()
            }
        };

        let mut best: Option<(Star, f64, f64, f64)> = None;
        let consider = |best: &mut Option<(Star, f64, f64, f64)>, ks: f64, kt: f64| {
            let (star, qual) =
                Self::candidate(rate, quality, budget, at(r.s_max, ks), at(r.t_max, kt));
            if best.is_none_or(|b| qual > b.1) {
                *best = Some((star, qual, ks, kt));
            }
        };
        for i in 0..n {
            for j in 0..n {
                consider(&mut best, i as f64, j as f64);
            }
        }
        let (_, _, bi, bj) = best.unwrap();
        let top = (n - 1) as f64;
        for di in -2..=2 {
            for dj in -2..=2 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (ks, kt) = (bi + di as f64 * 0.5, bj + dj as f64 * 0.5);
                if (0.0..=top).contains(&ks) && (0.0..=top).contains(&kt) {
                    consider(&mut best, ks, kt);
                }
            }
        }

        let (star, qual, _, _) = best.unwrap();
        Ok(OptimizationResult {
            star,
            quality: qual,
            rate: rate.evaluate_unchecked(&star),
            feasible: true,
        })
    }
}

/// Exhaustive search over discrete frame sizes and rates with a bounded
/// stepsize. Ties go to the smaller q, then the larger t, then the larger s.
#[derive(Debug, Clone)]
pub struct DiscreteOptimizer {
    pub sets: FeasibleSets,
}

impl StarOptimizer for DiscreteOptimizer {
    fn name(&self) -> &'static str {
        "dyadic"
    }

    fn optimize(
        &self,
        rate: &RateParams,
        quality: &QualityParams,
        budget: f64,
    ) -> Result<OptimizationResult> {
        check_inputs(rate, quality, budget)?;
        self.sets.validate(rate)?;
        let (q_lo, q_hi) = self.sets.q_range;

        let mut best: Option<(Star, f64)> = None;
        for &s in &self.sets.s_values {
            for &t in &self.sets.t_values {
                let q = feasible_q_unchecked(rate, s, t, budget).max(q_lo);
                if q > q_hi {
                    continue;
                }
                let star = Star { q, s, t };
                let qual = quality.evaluate_unchecked(&star);
                let better = match best {
                    None => true,
                    Some((b, bq)) => {
                        qual > bq
                            || (qual == bq
                                && (q < b.q || (q == b.q && (t > b.t || (t == b.t && s > b.s)))))
                    }
                };
                if better {
                    best = Some((star, qual));
                }
            }
        }

        let (star, qual) = best.ok_or_else(|| {
            Error::Infeasible(format!(
                "budget {budget} kbps needs q > {q_hi} for every (s, t) pair"
            ))
        })?;
        Ok(OptimizationResult {
            star,
            quality: qual,
            rate: rate.evaluate_unchecked(&star),
            feasible: true,
        })
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerSettings {
    pub grid_points: usize,
    pub sets: FeasibleSets,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            grid_points: ContinuousOptimizer::default().points,
            sets: FeasibleSets::dyadic(),
        }
    }
}

pub type OptimizerFactory = fn(&OptimizerSettings) -> Box<dyn StarOptimizer>;

pub fn optimizers() -> Registry<OptimizerFactory> {
    let mut reg: Registry<OptimizerFactory> = Registry::new("optimizer");
    reg.register("continuous", |s| {
        Box::new(ContinuousOptimizer::with_points(s.grid_points))
    })
    .register("dyadic", |s| {
        Box::new(DiscreteOptimizer {
            sets: s.sets.clone(),
        })
    });
    reg
}

pub fn build_optimizer(name: &str, settings: &OptimizerSettings) -> Result<Box<dyn StarOptimizer>> {
    Ok(optimizers().get(name)?(settings))
}

/// `n` log-spaced budgets from `0.02 r_max` to `r_max` inclusive.
pub fn sweep_budgets(r_max: f64, n: usize) -> Vec<f64> {
    let lo = (0.02f64).ln();
    match n {
        0 => Vec::new(),
        1 => vec![r_max],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    r_max
                } else {
                    r_max * (lo * (1.0 - i as f64 / (n - 1) as f64)).exp()
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QrFit {
    pub model: QrModel,
    pub rmse: f64,
}

pub const KAPPA_BRACKET: (f64, f64) = (1e-6, 50.0);

/// Least-squares `kappa` for `(rate, best quality)` points.
pub fn fit_qr(curve: &[(f64, f64)], r_max: f64) -> Result<QrFit> {
    ensure_positive("r_max", r_max)?;
    if curve.len() < 3 {
        return Err(Error::insufficient(format!(
            "need at least 3 (rate, quality) points, got {}",
            curve.len()
        )));
    }
    for &(r, q) in curve {
        if !(r > 0.0 && r <= r_max) {
            return Err(Error::OutOfRange(format!("rate {r} outside (0, {r_max}]")));
        }
        if !q.is_finite() {
            return Err(Error::invalid(format!("quality {q} is not finite")));
        }
    }
    if curve.iter().all(|&(_, q)| q == curve[0].1) {
        return Err(Error::degenerate("all qualities are equal"));
    }

    let sse = |kappa: f64| -> f64 {
        curve
            .iter()
            .map(|&(r, q)| (qr_curve(kappa, r / r_max) - q).powi(2))
            .sum()
    };
    let (lo, hi) = KAPPA_BRACKET;
    let best = brent(sse, lo, hi, 5.0, 1e-12);
    Ok(QrFit {
        model: QrModel::new(best.x, r_max)?,
        rmse: (best.fx / curve.len() as f64).sqrt(),
    })
}
