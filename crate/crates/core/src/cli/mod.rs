//! Command-line harness: presets, experiment recipes, the dynamic latency
//! benchmark and artifact bookkeeping.
pub mod app;
pub mod bench;
pub mod experiments;
pub mod manifest;
pub mod presets;
pub mod recipes;
