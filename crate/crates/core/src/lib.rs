//! Simulation and verification tools for the one-dimensional directed trap
//! model with heavy-tailed trap depths.

pub mod error;
pub mod lab;
pub mod model;
pub mod parallel;
pub mod rng;
pub mod stable;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
