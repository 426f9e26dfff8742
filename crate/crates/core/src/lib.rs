//! Bit-exact software model of an interpolation-free fractional motion
//! estimation engine.
//!
//! The heart of the approach: fit a quadratic error surface to the R-D costs
//! of an integer MV and its eight neighbors, read the quarter-pel minimum
//! off the surface with divider-free comparisons, and schedule the work so
//! a coarse MV predictor is always available before any CU needs its rate
//! term. Alongside the estimation path, the crate models the hardware's
//! interlaced per-CTU schedule and reproduces its cycle and throughput
//! arithmetic, and carries oracle baselines (exhaustive and two-step
//! quarter-pel searches over interpolated predictions) for evaluation.
//!
//! Everything on the estimation path is integer arithmetic; floating point
//! appears only in the oracle module and in evaluation metrics.

pub mod cmvp;
pub mod distortion;
pub mod driver;
mod error;
pub mod ime;
pub mod oracle;
pub mod pixel;
pub mod rate;
pub mod report;
pub mod schedule;
pub mod surface;

pub use error::{Error, Result};
