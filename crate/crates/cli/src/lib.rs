//! Command-line and HTTP front ends for the oobn-lab engine.

pub mod report;
pub mod service;
