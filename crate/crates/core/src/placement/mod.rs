//! Greedy aperiodic lens placement and the periodic closest-packing baseline.
//!
//! Each step tentatively adds a lens at every candidate grid point, scores the
//! resulting crosstalk set by its minimum pairwise distance and its angular
//! variance-to-mean ratio, and keeps the best weighted, normalized score.

mod dmin;
mod grid;
mod optimizer;
mod periodic;
mod vmr;

pub use dmin::{dmin_bounded, dmin_incremental, dmin_naive, dmin_naive_from, PointIndex};
pub use grid::{candidate_set, generate_grid, CandidateGrid};
pub use optimizer::{
    choose, normalize_scores, optimize_layout, optimize_layout_with, select_next, trace_to_csv, Optimization,
    OptimizerParams, OptimizerState, Scored, Selection, TraceRow, COINCIDENT_EPS,
};
pub use periodic::{hex_centers, periodic_baseline, periodic_in, periodic_matched};
pub use vmr::{sector_counts, sector_of, vmr_about, vmr_from_counts, vmr_score};
