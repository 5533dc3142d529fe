//! Gradient tree-boosted Tweedie compound Poisson regression.
//!
//! The crate is organised bottom-up:
//!
//! * [`tweedie`] holds the distribution: reparametrisation, the series
//!   density, the boosting loss and its gradient, and exact sampling.
//! * [`data`] and [`tree`] provide the column-typed dataset and the
//!   least-squares regression tree used as base learner.
//! * [`boost`] runs the boosting loop, prediction and cross-validated
//!   selection of the number of trees and leaves.
//! * [`profile`] estimates the index and dispersion by profile likelihood.
//! * [`interpret`] and [`eval`] cover variable importance, partial dependence,
//!   MAD, ordered Lorenz curves and Gini indices.
//! * [`simgen`] generates the synthetic benchmark designs.

pub mod boost;
pub mod data;
mod error;
pub mod eval;
pub mod interpret;
pub mod optimize;
pub mod profile;
pub mod simgen;
pub mod tree;
pub mod tweedie;

pub use boost::{BoostConfig, BoostedModel, CvResult};
pub use data::{Column, Dataset, FeatureKind, FeatureMeta, Schema};
pub use error::{Error, Result};
pub use eval::{GiniMatrix, GiniSummary, LorenzResult};
pub use interpret::{Baseline, GridSpec, ImportanceReport, PartialDependenceGrid};
pub use profile::{PhiEstimate, ProfileConfig, ProfileResult, Tuning};
pub use simgen::{RfgSpec, Simulated};
pub use tree::{RegressionTree, SplitKind, SplitRule};
pub use tweedie::{CompoundPoissonParams, TweedieParams, WeightedObservation};
