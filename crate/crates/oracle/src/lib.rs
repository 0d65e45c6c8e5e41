//! Deliberately naive scalar-loop reference implementations.
//!
//! Everything here is written with plain `f64` loops and no shared code with
//! the production crates, so tests can compare the optimized tensor paths
//! against an independent route. Keep it slow and obvious.

pub mod stats;
pub mod losses;
pub mod metrics;
pub mod signal;
pub mod linalg;
pub mod optim;
