//! Closed-form rate and quality models over quantization stepsize, frame size
//! and frame rate.
//!
//! Frame size is always stored in pixels per frame and frame rate in Hz. The
//! models normalize against a [`ResolutionRef`] at evaluation time.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// 176x144.
pub const QCIF: f64 = 25_344.0;
/// 352x288.
pub const CIF: f64 = 101_376.0;
/// 704x576.
pub const CIF4: f64 = 405_504.0;

/// Resolves `qcif`, `cif` and `4cif` (any case) to a pixel count.
pub fn named_frame_size(name: &str) -> Option<f64> {
    match name.trim().to_ascii_lowercase().as_str() {
        "qcif" => Some(QCIF),
        "cif" => Some(CIF),
        "4cif" => Some(CIF4),
        _ => None,
    }
}

/// One operating point: quantization stepsize, frame size and frame rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Star {
    pub q: f64,
    pub s: f64,
    pub t: f64,
}

impl Star {
    pub fn new(q: f64, s: f64, t: f64) -> Result<Self> {
        let star = Self { q, s, t };
        star.validate()?;
        Ok(star)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("stepsize q", self.q)?;
        ensure_positive("frame size s", self.s)?;
        ensure_positive("frame rate t", self.t)
    }
}

/// Reference resolutions the models normalize against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRef {
    pub q_min: f64,
    pub s_max: f64,
    pub t_max: f64,
}

impl ResolutionRef {
    pub fn new(q_min: f64, s_max: f64, t_max: f64) -> Result<Self> {
        let r = Self {
            q_min,
            s_max,
            t_max,
        };
        r.validate()?;
        Ok(r)
    }

    /// q_min = 16 (QP 28), s_max = 4CIF, t_max = 30 Hz.
    pub fn standard() -> Self {
        Self {
            q_min: 16.0,
            s_max: CIF4,
            t_max: 30.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("q_min", self.q_min)?;
        ensure_positive("s_max", self.s_max)?;
        ensure_positive("t_max", self.t_max)
    }

    pub fn anchor(&self) -> Star {
        Star {
            q: self.q_min,
            s: self.s_max,
            t: self.t_max,
        }
    }
}

/// H.264 QP for a stepsize, using the continuous mapping `4 + 6 log2(q)`.
pub fn qp_from_stepsize(q: f64) -> Result<f64> {
    ensure_positive("stepsize", q)?;
    Ok(4.0 + 6.0 * q.log2())
}

pub fn stepsize_from_qp(qp: f64) -> f64 {
    ((qp - 4.0) / 6.0).exp2()
}

/// Parameters of the separable power-law rate model
/// `R = r_max (q/q_min)^-a (t/t_max)^b (s/s_max)^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_max: f64,
    pub reference: ResolutionRef,
}

impl RateParams {
    pub fn new(a: f64, b: f64, c: f64, r_max: f64, reference: ResolutionRef) -> Result<Self> {
        let p = Self {
            a,
            b,
            c,
            r_max,
            reference,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "rate exponent {name} must be finite and >= 0, got {v}"
                )));
            }
        }
        ensure_positive("r_max", self.r_max)?;
        self.reference.validate()
    }

    /// Rate in kbps at `star`.
    pub fn evaluate(&self, star: &Star) -> Result<f64> {
        self.validate()?;
        star.validate()?;
        Ok(self.evaluate_unchecked(star))
    }

    pub(crate) fn evaluate_unchecked(&self, star: &Star) -> f64 {
        let r = &self.reference;
        self.r_max
            * (star.q / r.q_min).powf(-self.a)
            * (star.t / r.t_max).powf(self.b)
            * (star.s / r.s_max).powf(self.c)
    }
}

/// Fixed exponents and QP-dependence of the quality model. These are not
/// fitted; [`QualityParams::validate`] rejects any other values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityConstants {
    pub beta_q: f64,
    pub beta_s: f64,
    pub beta_t: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub qp_clamp: f64,
}

impl Default for QualityConstants {
    fn default() -> Self {
        Self {
            beta_q: 1.0,
            beta_s: 0.74,
            beta_t: 0.63,
            nu1: -0.037,
            nu2: 2.25,
            qp_clamp: 28.0,
        }
    }
}

/// Perceptual quality model: a product of three normalized inverted
/// exponentials in q, s and t, where the spatial decay rate depends on QP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityParams {
    pub alpha_q: f64,
    pub alpha_s_tilde: f64,
    pub alpha_t: f64,
    pub reference: ResolutionRef,
    #[serde(default)]
    pub constants: QualityConstants,
}

impl QualityParams {
    pub fn new(
        alpha_q: f64,
        alpha_s_tilde: f64,
        alpha_t: f64,
        reference: ResolutionRef,
    ) -> Result<Self> {
        let p = Self {
            alpha_q,
            alpha_s_tilde,
            alpha_t,
            reference,
            constants: QualityConstants::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("alpha_q", self.alpha_q)?;
        ensure_positive("alpha_s_tilde", self.alpha_s_tilde)?;
        ensure_positive("alpha_t", self.alpha_t)?;
        if self.constants != QualityConstants::default() {
            return Err(Error::invalid(format!(
                "quality model constants are fixed; got {:?}",
                self.constants
            )));
        }
        self.reference.validate()
    }

    /// Spatial decay rate at stepsize `q`. Below the QP clamp it is held at
    /// its clamp value.
    pub fn alpha_s(&self, q: f64) -> Result<f64> {
        let k = &self.constants;
        let qp = qp_from_stepsize(q)?.max(k.qp_clamp);
        Ok(self.alpha_s_tilde * (k.nu1 * qp + k.nu2))
    }

    /// Quality in (0, 1] at `star`.
    pub fn evaluate(&self, star: &Star) -> Result<f64> {
        self.validate()?;
        star.validate()?;
        Ok(self.evaluate_unchecked(star))
    }

    pub(crate) fn evaluate_unchecked(&self, star: &Star) -> f64 {
        let k = &self.constants;
        let r = &self.reference;
        let qp = (4.0 + 6.0 * star.q.log2()).max(k.qp_clamp);
        let alpha_s = self.alpha_s_tilde * (k.nu1 * qp + k.nu2);
        inverted_exp((r.q_min / star.q).powf(k.beta_q), self.alpha_q)
            * inverted_exp((star.s / r.s_max).powf(k.beta_s), alpha_s)
            * inverted_exp((star.t / r.t_max).powf(k.beta_t), self.alpha_t)
    }
}

/// `(1 - exp(-alpha * u)) / (1 - exp(-alpha))`, with its limit `u` at alpha = 0.
fn inverted_exp(u: f64, alpha: f64) -> f64 {
    if alpha.abs() < 1e-12 {
        return u;
    }
    (-alpha * u).exp_m1() / (-alpha).exp_m1()
}

pub const QR_EXPONENT: f64 = 0.55;

fn default_qr_exponent() -> f64 {
    QR_EXPONENT
}

/// Single-parameter summary of the best achievable quality at a given rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QrModel {
    pub kappa: f64,
    pub r_max: f64,
    #[serde(default = "default_qr_exponent")]
    pub exponent: f64,
}

impl QrModel {
    pub fn new(kappa: f64, r_max: f64) -> Result<Self> {
        let m = Self {
            kappa,
            r_max,
            exponent: QR_EXPONENT,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("kappa", self.kappa)?;
        ensure_positive("r_max", self.r_max)?;
        if self.exponent != QR_EXPONENT {
            return Err(Error::invalid(format!(
                "Q(R) exponent is fixed at {QR_EXPONENT}, got {}",
                self.exponent
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, rate: f64) -> Result<f64> {
        self.validate()?;
        if !(rate > 0.0 && rate <= self.r_max) {
            return Err(Error::OutOfRange(format!(
                "rate {rate} outside (0, {}]",
                self.r_max
            )));
        }
        Ok(qr_curve(self.kappa, rate / self.r_max))
    }
}

pub(crate) fn qr_curve(kappa: f64, normalized_rate: f64) -> f64 {
    inverted_exp(normalized_rate.powf(QR_EXPONENT), kappa)
}
