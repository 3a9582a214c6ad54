//! Statistics of the random sumset `A+A` for `A ⊆ [0, n-1]` with independent
//! membership probability `p`, and of the correlated sumset `A+B`.
//!
//! * [`misschance`]: probabilities that given sums are missing.
//! * [`moments`]: exact mean and variance of `|A+A|` and closed-form bounds.
//! * [`fringe`]: fringe enumeration and the certified divot bounds.
//! * [`correlated`]: the same questions for `A+B`.
//! * [`montecarlo`]: reproducible simulation of the missing-sums law.
//! * [`oracle`]: brute-force references used to validate everything else.

pub mod cli;
pub mod correlated;
pub mod error;
pub mod fringe;
pub mod graphs;
pub mod misschance;
pub mod model;
pub mod moments;
pub mod montecarlo;
pub mod oracle;

pub use error::{Error, Result};
pub use model::{CorrelatedParams, ModelParams, NumericMode, ProbValue, Scalar};
