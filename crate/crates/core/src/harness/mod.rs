//! Experiment plumbing: file formats, metrics, presets, sweeps and reports.

pub mod config;
pub mod csvio;
pub mod metrics;
pub mod report;
pub mod runner;
pub mod svg;
pub mod model;
