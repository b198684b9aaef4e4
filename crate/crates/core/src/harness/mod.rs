//! Experiment plumbing: inputs, baselines, metrics, traces and runs.

pub mod baselines;
pub mod config;
pub mod inputs;
pub mod metrics;
pub mod runs;
pub mod trace;
