//! Learning content-addressable memory engine.
//!
//! Data lives in a weighted graph of cue and data neurons. Each access
//! reshapes the graph, and data that goes unused is compressed further.
//! The crate also provides a plain CAM baseline and a trace-driven
//! simulator that compares the two.

pub mod cam;
pub mod codec;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod nmn;
pub mod oplog;
pub mod ops;
pub mod workload;

pub use error::{Error, Result};
