//! Numerical optimization library for secure integrated sensing and
//! communication (ISAC) beamforming.
//!
//! The library maximizes the worst-user (or weighted-sum) secrecy rate of a
//! multi-user downlink subject to a total power budget and a pluggable sensing
//! constraint, with secrecy-outage probabilities handled exactly through an
//! implicit redundancy rate solved by bisection. The solver is a regularized
//! alternating max-min iteration: closed-form inner updates of the penalty
//! variable and the user-selection weights, followed by a single projected
//! gradient ascent step on the beamformers and the receive filter.
//!
//! Module map:
//! - [`numerics`]: complex vector/matrix primitives, Gaussian tail functions,
//!   finite-difference oracle.
//! - [`scenario`]: problem-instance generation and (de)serialization.
//! - [`sop`]: secrecy-outage machinery (residual, bisection, gradient, Monte
//!   Carlo oracle).
//! - [`rates`]: achievable rates, secrecy utilities and their gradients.
//! - [`sensing`]: sensing-metric interface (SINR, beampattern matching,
//!   detection probability, mutual information).
//! - [`projections`]: feasible-set projections (simplex, box, power ball,
//!   unit sphere).
//! - [`solver`]: the alternating max-min iteration with best-solution
//!   tracking.

pub mod error;
pub mod numerics;
pub mod projections;
pub mod rates;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod solver;
pub mod sop;

pub use error::Error;
pub use numerics::{CMat, CVec};
pub use scenario::{GeometryConfig, Scenario, Sizes};
pub use sensing::SensingMetric;
pub use solver::{Objective, Schedules, SolverConfig, SolverResult};
pub use sop::BeamformerSet;

/// Convenience alias used throughout the crate.
pub type Complex = num_complex::Complex64;
