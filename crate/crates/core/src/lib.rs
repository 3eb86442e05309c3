//! Analytic rate and perceptual-quality models for compressed video as
//! functions of quantization stepsize, frame size and frame rate, with
//! parameter fitting, content-based parameter prediction, rate-constrained
//! resolution selection and scalable-layer ordering.
//!
//! Algorithm families are exposed as traits with name-keyed registries:
//! [`fitting::fitters`], [`optimizer::optimizers`], [`ordering::orderers`]
//! and [`features::predictors`].

pub mod error;
pub mod features;
pub mod fitting;
pub mod minimize;
pub mod model;
pub mod optimizer;
pub mod ordering;
pub mod registry;
pub mod tables;

pub use error::{Error, Result};
pub use model::{
    named_frame_size, qp_from_stepsize, stepsize_from_qp, QrModel, QualityParams, RateParams,
    ResolutionRef, Star, CIF, CIF4, QCIF,
};
