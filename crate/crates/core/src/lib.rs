//! Singular spectrum analysis forecasting toolkit.
//!
//! Three forecasters share one SSA core:
//!
//! * basic SSA: embedding, eigendecomposition of the lag-covariance matrix,
//!   diagonal averaging and forecasting with the linear recurrent formula
//!   ([`ssa`]);
//! * bootstrap SSA: residual resampling around the reconstructed signal
//!   ([`bootstrap`]);
//! * general SSA: recurrent coefficients whose gradients follow random walks,
//!   updated by a Kalman recursion through the forecast period ([`kalman`]).
//!
//! [`evaluation`] holds the out-of-sample accuracy measures and
//! [`experiment`] the batch driver used by the `gssa` binary.

pub mod bootstrap;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod kalman;
pub mod par;
pub mod series;
pub mod ssa;

pub use error::{Error, Result};
pub use series::{DescriptiveStats, SampleSplit, TimeSeries};
pub use ssa::{EmbeddingConfig, LrfModel, SsaDecomposition};
