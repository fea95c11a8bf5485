//! Discovery of governing partial differential equations from gridded
//! spatio-temporal data.
//!
//! The pipeline differentiates the measured field, assembles a dictionary of
//! candidate terms `u^q * D^d u`, and selects the active terms by sparse
//! Bayesian regression with a spike-and-slab prior fitted by coordinate-ascent
//! variational Bayes. A sequentially thresholded ridge regression baseline,
//! benchmark solvers and an experiment harness are included.

pub mod baseline;
pub mod dictionary;
pub mod differentiation;
pub mod error;
pub mod field;
pub mod harness;
pub mod solvers;
pub mod ssvb;
pub mod terms;

pub use error::{Error, Result};
pub use field::{Axis, Field, GridPoint, GridSpec};
pub use terms::{BasisTerm, DerivPattern};
