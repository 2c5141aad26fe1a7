//! Zero-inflated Poisson randomized-response (ZIP RR) models for sum-score
//! survey data.
//!
//! Respondents answer `M` sensitive yes/no items through a forced-response
//! randomizing device. The number of observed "yes" answers is modelled as a
//! misclassified, right-truncated Poisson count, optionally inflated at zero by
//! self-protective (SP) responders who answer "no" regardless of the device.
//!
//! The crate is organised bottom-up:
//!
//! - [`design`]: forced-response designs, sum-score misclassification matrices
//!   and moment prevalence estimates.
//! - [`distributions`]: truncated Poisson, exact Bernoulli-sum and the Poisson
//!   approximation report.
//! - [`models`]: the four nested likelihoods.
//! - [`estimation`]: BFGS maximum likelihood with numerical derivatives.
//! - [`diagnostics`]: information criteria, Pearson statistics, SP aggregates,
//!   effect sizes and residual grids.
//! - [`simulation`]: synthetic data, recovery studies and a brute-force
//!   likelihood oracle.
//! - [`data`]: CSV ingestion of frequency tables and individual records.

pub mod data;
pub mod design;
pub mod diagnostics;
pub mod distributions;
mod error;
pub mod estimation;
pub mod models;
pub mod simulation;

pub use data::{Dataset, DataFormat, PredictorRef};
pub use design::{DesignConfig, QMatrix, RRDesign};
pub use error::{Error, Result};
pub use estimation::{fit, FitOptions, FitResult};
pub use models::{ModelKind, ModelSpec, Observation, ParamVector};
