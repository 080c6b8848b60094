//! LED-pattern computation for target-excluding lighting: light transport
//! inversion, reciprocity ray tracing and marker-hull geometry.

mod geometry;
mod hull;
mod ltm;
mod raytrace;

pub use geometry::{dilate, geometry_pattern, lens_off_pixels};
pub use hull::{convex_contains, convex_hull};
pub use ltm::{build_ltm, objective, solve_ltm, LtmSolution, SolveParams, TransportMatrix};
pub use raytrace::{raytrace_pattern, reciprocity_capture, ReciprocityCapture};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::illumination::{map::mean, IrradianceMap, LedPattern, Raster, RenderOptions, Renderer};
use crate::scene::{LensLayout, Scene, SystemGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ltm,
    Raytrace,
    Geometry,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ltm, Method::Raytrace, Method::Geometry];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ltm => "ltm",
            Method::Raytrace => "raytrace",
            Method::Geometry => "geometry",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ltm" => Ok(Method::Ltm),
            "raytrace" => Ok(Method::Raytrace),
            "geometry" => Ok(Method::Geometry),
            _ => Err(Error::Unknown { what: "pattern method", name: s.into() }),
        }
    }
}

/// Mean irradiance over the target mask.
pub fn target_leakage(map: &IrradianceMap, target_mask: &[bool]) -> Result<f64> {
    mean(map.masked(target_mask)).ok_or(Error::Empty("target mask"))
}

/// Receiver cells for the transport matrix: cells on a lattice of every
/// `stride`-th cell within `window` mm of the target's footprint box, plus
/// every cell of the target silhouette at full resolution. Returns the cells
/// and, per row, whether it is a target cell.
pub fn ltm_receivers(raster: &Raster, scene: &Scene, window: f64, stride: usize) -> (Vec<usize>, Vec<bool>) {
    let stride = stride.max(1);
    let on_lattice = |k: usize| (k % raster.nx) % stride == stride / 2 && (k / raster.nx) % stride == stride / 2;
    let Some(target) = &scene.target else {
        let cells: Vec<usize> = (0..raster.len()).filter(|&k| on_lattice(k)).collect();
        let n = cells.len();
        return (cells, vec![false; n]);
    };
    let zone = target.aabb().xy().expanded(window);
    let mut cells = Vec::new();
    let mut is_target = Vec::new();
    for k in 0..raster.len() {
        let c = raster.center(k);
        let t = target.silhouette_contains(c);
        if t || (on_lattice(k) && zone.contains(c)) {
            cells.push(k);
            is_target.push(t);
        }
    }
    (cells, is_target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtmSettings {
    /// Pitch of the environment receiver lattice, mm.
    pub cell: f64,
    /// Receiver window around the target footprint, mm.
    pub window: f64,
    pub iterations: usize,
    pub tolerance: f64,
}

impl Default for LtmSettings {
    fn default() -> Self {
        Self { cell: 10.0, window: 300.0, iterations: 2000, tolerance: 1e-6 }
    }
}

/// Transport-matrix pattern on the evaluation `raster`: zero on target
/// receivers, all-on levels on the environment lattice.
pub fn ltm_pattern(
    layout: &LensLayout,
    geom: &SystemGeometry,
    scene: &Scene,
    raster: Raster,
    opts: &RenderOptions,
    settings: &LtmSettings,
) -> Result<(LedPattern, LtmSolution)> {
    let mut o = opts.clone();
    o.diffuse_bounce = false;
    let r = Renderer::new(geom, layout, scene, raster, o)?;
    let stride = (settings.cell / raster.cell).round() as usize;
    let (cells, is_target) = ltm_receivers(&raster, scene, settings.window, stride);
    let t = build_ltm(&r, &cells, geom.pixel_count())?;
    let on = t.mul(&vec![1.0; t.cols]);
    let b: Vec<f64> = on.iter().zip(&is_target).map(|(&v, &tg)| if tg { 0.0 } else { v }).collect();
    let sol = solve_ltm(&t, &b, &SolveParams { iterations: settings.iterations, tolerance: settings.tolerance })?;
    Ok((sol.pattern(geom.led_cols, geom.led_rows)?, sol))
}
