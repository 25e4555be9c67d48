//! Bayesian tests of minimal macrorealist modifications (MMM) of quantum
//! mechanics against matter-wave interferometer count data.
//!
//! The crate is organised bottom-up: [`specfun`] and [`quadrature`] provide
//! numerics, [`mmm`] the observable consequences of a hypothesis point,
//! [`likelihood`] the per-experiment count models, [`inference`] the grid
//! posterior machinery, [`combine`] two-dimensional likelihood maps and
//! [`synth`] seeded synthetic data.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combine;
pub mod constants;
pub mod error;
pub mod inference;
pub mod likelihood;
pub mod mmm;
pub mod quadrature;
pub mod specfun;
pub mod synth;

pub use error::{Error, Result};
pub use inference::{Posterior, TauGrid};
pub use likelihood::{ExperimentModel, LikelihoodModel};
pub use mmm::{ArmGeometry, MmmParams, ParticleSpec};
