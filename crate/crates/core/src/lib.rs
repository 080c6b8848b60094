//! Light-field illumination that lights a scene while leaving a chosen
//! target dark: aperiodic lens-array design, LED pattern computation and a
//! ray-based irradiance simulator.

pub mod cli;
pub mod error;
pub mod illumination;
pub mod io;
pub mod math;
pub mod optics;
pub mod patterns;
pub mod placement;
pub mod scene;

pub use error::{Error, Result};
