//! Symbolic models of Bernoulli measures on Bedford-McMullen carpets, their
//! scenery flow, and the experiments built on top of it.

pub mod config;
pub mod dimension;
pub mod distance;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod phase;
pub mod render;
pub mod scenery;
pub mod symbolic;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
