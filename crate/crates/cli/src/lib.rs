//! Experiment driver: config parsing, the solve and measure commands, and
//! the built-in acceptance suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod suite;
