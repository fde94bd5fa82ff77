//! Layer-wise local Hessians of feed-forward networks.
//!
//! The crate trains small networks, computes the Hessian of each block's
//! summed output with respect to that block's own parameters, summarizes
//! those Hessians spectrally, records everything in JSON-Lines snapshot
//! streams and runs a statistical analysis over the streams.

pub mod analysis;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod experiments;
pub mod local_hessian;
pub mod network;
pub mod numerics;
pub mod rng;
pub mod snapshot;
pub mod spectral;
pub mod training;

pub use error::{Error, Result};
