//! Posterior knowledge of `ω`: an exact grid posterior for warm-up and as a
//! reference, and a Gaussian summary with closed-form updates for tracking.

mod gaussian;
mod grid;
mod moment;

pub use gaussian::{optimal_dephased_time, ExpectedRisk, GaussianBelief, VARIANCE_FLOOR};
pub use grid::{GridPosterior, DEFAULT_GRID_NODES, MIN_GRID_NODES};
pub use moment::gauss_moment_match;

/// `t²σ²` beyond which a measurement carries no usable information and the
/// expected risk is returned as the prior variance.
pub(crate) const RISK_LOG_DOMAIN: f64 = 700.0;
