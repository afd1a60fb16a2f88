//! Single-qubit frequency estimation.
//!
//! Likelihood models with visibility and dephasing, Cramér-Rao style risk
//! bounds, exact grid and Gaussian posterior tracking, offline and adaptive
//! measurement schedules, point estimators, and a Monte Carlo harness for
//! Bayes-risk curves.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod optim;
pub mod report;
pub mod scalar;
pub mod strategies;

pub use belief::{ExpectedRisk, GaussianBelief, GridPosterior};
pub use error::{Error, Result};
pub use model::{DecayTime, Measurement, Outcome, Record, TrueModel};
pub use scalar::Scalar;
pub use estimators::{Estimate, EstimatorKind};
pub use harness::{Cell, ExperimentPlan, RiskCurve, RiskEstimate, StrategyBinding};
pub use strategies::{StrategyKind, StrategySpec};

/// Double-precision aliases.
pub type Belief = GaussianBelief<f64>;
pub type Model = TrueModel<f64>;
pub type Measurement64 = Measurement<f64>;
pub type Record64 = Record<f64>;
pub type Decay = DecayTime<f64>;
