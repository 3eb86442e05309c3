//! Rate-parameter prediction from content features.
//!
//! `[a, b, c, r_max]^T = H [1, mu_dfd, sigma_mvm, sigma_mda]^T` with a 4x4
//! predictor matrix per coding scenario.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RateParams, ResolutionRef};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Mean displaced frame difference.
    pub mu_dfd: f64,
    /// Standard deviation of motion-vector magnitude.
    pub sigma_mvm: f64,
    /// Standard deviation of motion direction activity.
    pub sigma_mda: f64,
}

impl FeatureVector {
    pub fn new(mu_dfd: f64, sigma_mvm: f64, sigma_mda: f64) -> Result<Self> {
        let f = Self {
            mu_dfd,
            sigma_mvm,
            sigma_mda,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu_dfd", self.mu_dfd),
            ("sigma_mvm", self.sigma_mvm),
            ("sigma_mda", self.sigma_mda),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "feature {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn augmented(&self) -> [f64; 4] {
        [1.0, self.mu_dfd, self.sigma_mvm, self.sigma_mda]
    }
}

/// Rows are (a, b, c, r_max); columns are (1, mu_dfd, sigma_mvm, sigma_mda).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorMatrix {
    pub scenario: String,
    pub rows: [[f64; 4]; 4],
}

pub const H_SVC1: [[f64; 4]; 4] = [
    [1.374, 0.059, -0.049, -0.253],
    [0.226, 0.022, -0.007, 0.305],
    [1.507, 0.005, 0.0013, -0.594],
    [-7262.0, 1240.0, -995.0, 8033.0],
];

pub const H_SL2: [[f64; 4]; 4] = [
    [1.538, 0.040, -0.025, -0.474],
    [-0.241, 0.025, -0.014, 0.530],
    [1.420, 0.011, 0.0099, -0.619],
    [-4598.0, 795.9, -549.2, 4810.0],
];

impl PredictorMatrix {
    pub fn svc1() -> Self {
        Self {
            scenario: "SVC#1".into(),
            rows: H_SVC1,
        }
    }

    pub fn sl2() -> Self {
        Self {
            scenario: "SL#2".into(),
            rows: H_SL2,
        }
    }

    /// Unclamped `H F`.
    pub fn apply(&self, f: &FeatureVector) -> [f64; 4] {
        let x = f.augmented();
        self.rows
            .map(|row| row.iter().zip(&x).map(|(h, v)| h * v).sum())
    }
}

pub fn predictors() -> Registry<PredictorMatrix> {
    let mut reg = Registry::new("scenario");
    reg.register("SVC#1", PredictorMatrix::svc1())
        .register("SL#2", PredictorMatrix::sl2());
    reg
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictOptions {
    /// Lower bound applied to a non-positive predicted `r_max`, in kbps.
    pub r_max_floor: f64,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self { r_max_floor: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamComponent {
    A,
    B,
    C,
    RMax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub params: RateParams,
    /// `H F` before clamping, in (a, b, c, r_max) order.
    pub raw: [f64; 4],
    /// Components that fell outside the model's domain and were clamped.
    pub clamped: Vec<ParamComponent>,
}

impl Prediction {
    pub fn out_of_domain(&self) -> bool {
        !self.clamped.is_empty()
    }
}

pub fn predict_params(
    h: &PredictorMatrix,
    f: &FeatureVector,
    reference: ResolutionRef,
    opts: PredictOptions,
) -> Result<Prediction> {
    f.validate()?;
    reference.validate()?;
    if !(opts.r_max_floor.is_finite() && opts.r_max_floor > 0.0) {
        return Err(Error::invalid("r_max floor must be > 0"));
    }
    let raw = h.apply(f);
    let mut clamped = Vec::new();
    let mut exp = |v: f64, c: ParamComponent| {
        if v < 0.0 {
            clamped.push(c);
            0.0
        } else {
            v
        }
    };
    let a = exp(raw[0], ParamComponent::A);
    let b = exp(raw[1], ParamComponent::B);
    let c = exp(raw[2], ParamComponent::C);
    let r_max = if raw[3] <= 0.0 {
        clamped.push(ParamComponent::RMax);
        opts.r_max_floor
    } else {
        raw[3]
    };
    Ok(Prediction {
        params: RateParams::new(a, b, c, r_max, reference)?,
        raw,
        clamped,
    })
}
