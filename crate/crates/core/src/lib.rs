//! Simulation library for two-stage (JSDM) massive MU-MIMO downlink
//! user scheduling and beamforming.
//!
//! The library implements the ReDOS-PBR cone-based user-selection scheme
//! together with the SUS-ZFBF, RBF and greedy DPC-style baselines, the
//! supporting channel/covariance models, zero-forcing precoding with
//! water-filling power allocation, round-robin and proportional-fair
//! wrappers, feedback-overhead accounting, and executable checks of the
//! underlying analytical bounds (cone inner-product bound, Gershgorin
//! effective-gain bound, extreme-value tail behavior, sum-rate scaling).

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod fairness;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod plot;
pub mod rng;
pub mod scenario;
pub mod scheduling;
pub mod theory;

pub use error::{JsdmError, Result};
