//! Experiment layer: configuration, initial conditions, runs, sweeps and
//! file formats.

pub mod checkpoint;
pub mod config;
pub mod init;
pub mod report;
pub mod run;
pub mod probe;
pub mod sweep;
pub mod validate;
