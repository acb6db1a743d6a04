//! Experiment runner library behind the `fedppg` binary: configuration,
//! the sweep executor, and report rendering.

pub mod config;
pub mod report;
pub mod runner;
