//! Stochastic-geometry models for tracking a diffusing target with a
//! cooperative ISAC network: coverage, first-passage times, percolation,
//! resetting and cross-layer capacity.

pub mod coop;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod mc;
pub mod phy;
pub mod resetting;
pub mod xlayer;

pub use error::{Error, Result};
