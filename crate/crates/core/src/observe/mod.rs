//! Event detectors and Monte Carlo estimators.

pub mod detect;
pub mod estimate;
pub mod stats;

pub use detect::*;
pub use estimate::*;
pub use stats::*;
