//! Geometric phases of a spin-1/2 driven by a precessing classical field with
//! noise, or by a quantum vector operator.

pub mod classical;
pub mod curve;
pub mod dynamics;
pub mod error;
pub mod frames;
pub mod noise;
pub mod operators;
pub mod quantum;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
