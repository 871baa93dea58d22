//! Spatiotemporal interpolation and prediction of point environmental
//! observations.
//!
//! The crate covers the full grid-to-point workflow: curation of point time
//! series ([`preprocess`]), projection and rasterization ([`geo`]), variogram
//! estimation ([`variogram`]), ordinary kriging ([`kriging`]), predictors that
//! map gridded inputs to point targets ([`models`]), scoring functionals
//! ([`metrics`]) and the expanding-window cross-validation harness ([`cv`]).
//! [`pipeline`] holds file formats, configuration and the command layer used
//! by the `gwsinterp` binary.

pub mod cv;
pub mod error;
pub mod geo;
pub mod gridstack;
pub mod idw;
pub mod kriging;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod optimize;
pub mod pipeline;
pub mod preprocess;
pub mod synthetic;
pub mod time;
pub mod variogram;

pub use error::{Error, Result};
