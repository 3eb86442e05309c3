//! Greedy ordering of a scalable-layer lattice into one monotone path.
//!
//! The lattice has L frame sizes, M frame rates and N stepsizes. A path
//! starts at the cheapest layer and ends at the full-quality layer, moving
//! one level along one axis per step, so every prefix is decodable.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::model::{QrModel, QualityParams, RateParams, Star};
use crate::registry::Registry;

/// Level lists for building a lattice from the models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerLevels {
    /// Frame sizes, increasing.
    pub s_values: Vec<f64>,
    /// Frame rates, increasing.
    pub t_values: Vec<f64>,
    /// Stepsizes, decreasing.
    pub q_levels: Vec<f64>,
}

impl LayerLevels {
    /// QCIF/CIF/4CIF x {3.75, 7.5, 15, 30} Hz x q {64, 40, 26, 16}.
    pub fn standard() -> Self {
        Self {
            s_values: vec![crate::model::QCIF, crate::model::CIF, crate::model::CIF4],
            t_values: vec![3.75, 7.5, 15.0, 30.0],
            q_levels: vec![64.0, 40.0, 26.0, 16.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_levels("s_values", &self.s_values, true)?;
        check_levels("t_values", &self.t_values, true)?;
        check_levels("q_levels", &self.q_levels, false)
    }
}

fn check_levels(name: &str, v: &[f64], increasing: bool) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{name} is empty")));
    }
    for x in v {
        ensure_positive(name, *x)?;
    }
    let ordered = v
        .windows(2)
        .all(|w| if increasing { w[0] < w[1] } else { w[0] > w[1] });
    if !ordered {
        let dir = if increasing {
            "increasing"
        } else {
            "decreasing"
        };
        return Err(Error::invalid(format!("{name} must be strictly {dir}")));
    }
    Ok(())
}

/// Lattice coordinates `[l, m, n]` (zero-based spatial, temporal, amplitude).
pub type LayerIndex = [usize; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGrid {
    levels: LayerLevels,
    rate: Vec<f64>,
    quality: Vec<f64>,
}

impl LayerGrid {
    /// Wraps rate and quality tables laid out row-major as `[l][m][n]`.
    /// Rate must strictly increase and quality must not decrease along each
    /// axis.
    pub fn new(levels: LayerLevels, rate: Vec<f64>, quality: Vec<f64>) -> Result<Self> {
        levels.validate()?;
        let cells = levels.s_values.len() * levels.t_values.len() * levels.q_levels.len();
        if rate.len() != cells || quality.len() != cells {
            return Err(Error::invalid(format!(
                "expected {cells} rate and quality cells, got {} and {}",
                rate.len(),
                quality.len()
            )));
        }
        for (&r, &q) in rate.iter().zip(&quality) {
            ensure_positive("cell rate", r)?;
            if !q.is_finite() {
                return Err(Error::invalid("cell quality is not finite"));
            }
        }
        let grid = Self {
            levels,
            rate,
            quality,
        };
        for idx in grid.indices() {
            for axis in 0..3 {
                if let Some(next) = grid.step_up(idx, axis) {
                    if grid.rate_at(next) <= grid.rate_at(idx) {
                        return Err(Error::invalid(format!(
                            "rate does not increase from {idx:?} to {next:?}"
                        )));
                    }
                    if grid.quality_at(next) < grid.quality_at(idx) {
                        return Err(Error::invalid(format!(
                            "quality decreases from {idx:?} to {next:?}"
                        )));
                    }
                }
            }
        }
        Ok(grid)
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            self.levels.s_values.len(),
            self.levels.t_values.len(),
            self.levels.q_levels.len(),
        ]
    }

    pub fn levels(&self) -> &LayerLevels {
        &self.levels
    }

    fn offset(&self, [l, m, n]: LayerIndex) -> usize {
        let [_, mm, nn] = self.dims();
        (l * mm + m) * nn + n
    }

    pub fn rate_at(&self, idx: LayerIndex) -> f64 {
        self.rate[self.offset(idx)]
    }

    pub fn quality_at(&self, idx: LayerIndex) -> f64 {
        self.quality[self.offset(idx)]
    }

    pub fn star_at(&self, [l, m, n]: LayerIndex) -> Star {
        Star {
            q: self.levels.q_levels[n],
            s: self.levels.s_values[l],
            t: self.levels.t_values[m],
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = LayerIndex> {
        let [ll, mm, nn] = self.dims();
        (0..ll).flat_map(move |l| (0..mm).flat_map(move |m| (0..nn).map(move |n| [l, m, n])))
    }

    fn step_up(&self, mut idx: LayerIndex, axis: usize) -> Option<LayerIndex> {
        idx[axis] += 1;
        (idx[axis] < self.dims()[axis]).then_some(idx)
    }

    fn step_down(&self, mut idx: LayerIndex, axis: usize) -> Option<LayerIndex> {
        idx[axis] = idx[axis].checked_sub(1)?;
        Some(idx)
    }

    pub fn top(&self) -> LayerIndex {
        self.dims().map(|d| d - 1)
    }

    fn path_step(&self, idx: LayerIndex) -> PathStep {
        let star = self.star_at(idx);
        PathStep {
            index: idx,
            s: star.s,
            t: star.t,
            q: star.q,
            rate: self.rate_at(idx),
            quality: self.quality_at(idx),
        }
    }
}

/// Fills a lattice from the rate and quality models.
pub fn build_layer_grid(
    rp: &RateParams,
    qp: &QualityParams,
    levels: &LayerLevels,
) -> Result<LayerGrid> {
    levels.validate()?;
    let mut rate = Vec::new();
    let mut quality = Vec::new();
    for &s in &levels.s_values {
        for &t in &levels.t_values {
            for &q in &levels.q_levels {
                let star = Star::new(q, s, t)?;
                rate.push(rp.evaluate(&star)?);
                quality.push(qp.evaluate(&star)?);
            }
        }
    }
    LayerGrid::new(levels.clone(), rate, quality)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub index: LayerIndex,
    pub s: f64,
    pub t: f64,
    pub q: f64,
    pub rate: f64,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderedPath {
    pub steps: Vec<PathStep>,
}

impl OrderedPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Quality gain per unit rate increase for each step after the first.
    pub fn gain_ratios(&self) -> Vec<f64> {
        self.steps
            .windows(2)
            .map(|w| (w[1].quality - w[0].quality) / (w[1].rate - w[0].rate))
            .collect()
    }

    /// Largest rate increment between consecutive steps, divided by the
    /// final (largest) rate.
    pub fn max_normalized_gap(&self) -> f64 {
        let Some(last) = self.steps.last() else {
            return 0.0;
        };
        self.steps
            .windows(2)
            .map(|w| w[1].rate - w[0].rate)
            .fold(0.0, f64::max)
            / last.rate
    }

    /// Checks single-axis unit steps, non-decreasing s and t, non-increasing
    /// q and strictly increasing rate.
    pub fn check_monotone(&self) -> Result<()> {
        for w in self.steps.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let diffs: Vec<isize> = (0..3)
                .map(|k| b.index[k] as isize - a.index[k] as isize)
                .collect();
            if diffs.iter().filter(|&&d| d == 1).count() != 1
                || diffs.iter().any(|&d| d != 0 && d != 1)
            {
                return Err(Error::invalid(format!(
                    "step {:?} -> {:?} is not a single-axis successor",
                    a.index, b.index
                )));
            }
            if b.s < a.s || b.t < a.t || b.q > a.q {
                return Err(Error::invalid(format!(
                    "step {:?} -> {:?} breaks resolution monotonicity",
                    a.index, b.index
                )));
            }
            if b.rate <= a.rate {
                return Err(Error::invalid(format!(
                    "rate does not increase at {:?} -> {:?}",
                    a.index, b.index
                )));
            }
        }
        Ok(())
    }
}

/// A layer ordering strategy.
pub trait LayerOrderer: Send + Sync {
    fn name(&self) -> &'static str;
    fn order(&self, grid: &LayerGrid) -> OrderedPath;
}

/// Candidate axes in tie-break priority: amplitude, temporal, spatial.
const AXIS_PRIORITY: [usize; 3] = [2, 1, 0];

/// From the base layer, repeatedly take the move with the largest quality
/// gain per rate increase.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardOrderer;

impl LayerOrderer for ForwardOrderer {
    fn name(&self) -> &'static str {
        "forward"
    }

    fn order(&self, grid: &LayerGrid) -> OrderedPath {
        let mut cur = [0, 0, 0];
        let mut steps = vec![grid.path_step(cur)];
        while cur != grid.top() {
            let mut best: Option<(LayerIndex, f64)> = None;
            for axis in AXIS_PRIORITY {
                let Some(next) = grid.step_up(cur, axis) else {
                    continue;
                };
                let ratio = (grid.quality_at(next) - grid.quality_at(cur))
                    / (grid.rate_at(next) - grid.rate_at(cur));
                if best.is_none_or(|(_, r)| ratio > r) {
                    best = Some((next, ratio));
                }
            }
            cur = best.expect("a move exists below the top layer").0;
            steps.push(grid.path_step(cur));
        }
        OrderedPath { steps }
    }
}

/// From the full layer, repeatedly drop the layer with the smallest quality
/// loss per rate decrease. The result is returned in increasing-rate order.
#[derive(Debug, Clone, Copy, Default)]
pub struct BackwardOrderer;

impl LayerOrderer for BackwardOrderer {
    fn name(&self) -> &'static str {
        "backward"
    }

    fn order(&self, grid: &LayerGrid) -> OrderedPath {
        let mut cur = grid.top();
        let mut steps = vec![grid.path_step(cur)];
        while cur != [0, 0, 0] {
            let mut best: Option<(LayerIndex, f64)> = None;
            for axis in AXIS_PRIORITY {
                let Some(prev) = grid.step_down(cur, axis) else {
                    continue;
                };
                let ratio = (grid.quality_at(cur) - grid.quality_at(prev))
                    / (grid.rate_at(cur) - grid.rate_at(prev));
                if best.is_none_or(|(_, r)| ratio < r) {
                    best = Some((prev, ratio));
                }
            }
            cur = best.expect("a move exists above the base layer").0;
            steps.push(grid.path_step(cur));
        }
        steps.reverse();
        OrderedPath { steps }
    }
}

pub fn orderers() -> Registry<Box<dyn LayerOrderer>> {
    let mut reg: Registry<Box<dyn LayerOrderer>> = Registry::new("ordering direction");
    reg.register("forward", Box::new(ForwardOrderer))
        .register("backward", Box::new(BackwardOrderer));
    reg
}

/// Largest shortfall of the path's quality below the Q(R) envelope.
pub fn path_quality_loss(path: &OrderedPath, qr: &QrModel) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::invalid("path is empty"));
    }
    path.steps
        .iter()
        .map(|s| Ok(qr.evaluate(s.rate)? - s.quality))
        .try_fold(f64::NEG_INFINITY, |acc, d: Result<f64>| Ok(acc.max(d?)))
}
