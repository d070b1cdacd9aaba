//! Experiment harness: configuration, result tables and the experiment drivers.

pub mod config;
pub mod experiments;
pub mod table;
pub mod validate;
