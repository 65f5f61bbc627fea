//! Measures on [0, 1] through their quantile functions: the isometry with
//! L²[0,1], exact 2-Wasserstein distances, straight-line geodesics and the
//! relative entropy functional.

mod entropy;
mod measure;
mod quantile;

pub use entropy::{
    entropy, k_convexity_check, ConvexityCheck, Density, PiecewiseDensity, ReferenceMeasure, RestrictedMeasure,
    ThresholdEvent,
};
pub use measure::{brute_force_w2, inverse_cdf_at, inverse_distribution, pushforward_leb, Atom, DiscreteMeasure};
pub use quantile::{geodesic, w2_distance, Piece, QuantileFunction, QuantileRepr, MASS_TOL, MERGE_TOL};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantileError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("quantile function decreases at piece {index}")]
    NotMonotone { index: usize },
    #[error("operation needs a step (piecewise-constant) quantile function")]
    NotStep,
    #[error("density integrates to {total}, not 1")]
    NotNormalized { total: f64 },
}
