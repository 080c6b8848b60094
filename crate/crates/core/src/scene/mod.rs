//! World model: the three-plane pinhole system, lens layouts and scene content.
//!
//! Coordinates are millimetres. The LED panel lies in the `z = 0` plane with
//! its centre at the origin and `+z` pointing into the scene; the lens plate
//! sits at `z = z_lens` and the floor (evaluation plane) at `z = z_proj`.

mod config;
mod layout;
mod shapes;

pub use config::{
    load_config, Config, EmissionModel, FloorSpec, GeometrySection, LayoutSection, LensSpec, MarkerSection,
    SceneSection, SolverParams,
};
pub use layout::{Lens, LensLayout};
pub use shapes::point_in_triangle_2d;
pub use shapes::{Hit, Mirror, Occluder, Ray, Scene, SceneHit, SurfaceSample, Target};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Rect, Vec2};

/// Height of the LED emitter plane.
pub const Z_SRC: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemGeometry {
    pub z_lens: f64,
    pub z_proj: f64,
    pub led_pitch: f64,
    pub led_cols: usize,
    pub led_rows: usize,
    /// Domain of admissible lens centres on the lens plate.
    pub placement_region: Rect,
    pub grid_pitch: f64,
}

impl SystemGeometry {
    pub fn new(
        z_lens: f64,
        z_proj: f64,
        led_pitch: f64,
        led_cols: usize,
        led_rows: usize,
        placement_region: Rect,
        grid_pitch: f64,
    ) -> Result<Self> {
        let g = Self { z_lens, z_proj, led_pitch, led_cols, led_rows, placement_region, grid_pitch };
        g.validate()?;
        Ok(g)
    }

    /// The physical prototype: 240x135 panel at 2.54 mm pitch, lens plate
    /// 110 mm below the panel, floor 1650 mm below it.
    pub fn prototype() -> Self {
        Self {
            z_lens: 110.0,
            z_proj: 1650.0,
            led_pitch: 2.54,
            led_cols: 240,
            led_rows: 135,
            placement_region: Rect::centered(330.0, 160.0),
            grid_pitch: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.z_lens, self.z_proj, self.led_pitch, self.grid_pitch].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Invariant("geometry values must be finite".into()));
        }
        if !(Z_SRC < self.z_lens) {
            return Err(Error::Invariant(format!("0 = z_src < z_lens required, got z_lens = {}", self.z_lens)));
        }
        if !(self.z_lens < self.z_proj) {
            return Err(Error::Invariant(format!(
                "z_lens < z_proj required, got z_lens = {} >= z_proj = {}",
                self.z_lens, self.z_proj
            )));
        }
        if !(self.led_pitch > 0.0) {
            return Err(Error::Invariant(format!("led_pitch > 0 required, got {}", self.led_pitch)));
        }
        if !(self.grid_pitch > 0.0) {
            return Err(Error::Invariant(format!("grid_pitch > 0 required, got {}", self.grid_pitch)));
        }
        if self.led_cols == 0 || self.led_rows == 0 {
            return Err(Error::Invariant("LED panel must have at least one pixel".into()));
        }
        let r = &self.placement_region;
        if !(r.width() > 0.0 && r.height() > 0.0) {
            return Err(Error::Invariant(format!(
                "placement region must have positive area, got {} x {}",
                r.width(),
                r.height()
            )));
        }
        Ok(())
    }

    /// Lateral magnification from the LED plane to the floor through a pinhole.
    pub fn magnification(&self) -> f64 {
        (self.z_proj - self.z_lens) / (self.z_lens - Z_SRC)
    }

    pub fn pixel_count(&self) -> usize {
        self.led_cols * self.led_rows
    }

    /// Row-major flat index.
    #[inline]
    pub fn pixel_index(&self, col: usize, row: usize) -> usize {
        row * self.led_cols + col
    }

    #[inline]
    pub fn pixel_coords(&self, index: usize) -> (usize, usize) {
        (index % self.led_cols, index / self.led_cols)
    }

    /// Centre of LED pixel `(col, row)` on the `z = 0` plane.
    pub fn led_pixel_center(&self, col: i64, row: i64) -> Result<Vec2> {
        if col < 0 || row < 0 || col as usize >= self.led_cols || row as usize >= self.led_rows {
            return Err(Error::PixelOutOfBounds { col, row, cols: self.led_cols, rows: self.led_rows });
        }
        Ok(self.pixel_center_unchecked(col as usize, row as usize))
    }

    #[inline]
    pub fn pixel_center_unchecked(&self, col: usize, row: usize) -> Vec2 {
        let cx = (self.led_cols as f64 - 1.0) * 0.5;
        let cy = (self.led_rows as f64 - 1.0) * 0.5;
        Vec2::new((col as f64 - cx) * self.led_pitch, (row as f64 - cy) * self.led_pitch)
    }

    /// Fractional pixel coordinates of a panel-plane point.
    #[inline]
    pub fn pixel_coords_f(&self, p: Vec2) -> Vec2 {
        let cx = (self.led_cols as f64 - 1.0) * 0.5;
        let cy = (self.led_rows as f64 - 1.0) * 0.5;
        Vec2::new(p.x / self.led_pitch + cx, p.y / self.led_pitch + cy)
    }

    /// Pixel whose centre is nearest to `p`, or `None` off the panel.
    pub fn nearest_pixel(&self, p: Vec2) -> Option<(usize, usize)> {
        let f = self.pixel_coords_f(p);
        let c = f.x.round();
        let r = f.y.round();
        if c < 0.0
            || r < 0.0
            || c >= self.led_cols as f64
            || r >= self.led_rows as f64
            || !c.is_finite()
            || !r.is_finite()
        {
            return None;
        }
        Some((c as usize, r as usize))
    }

    /// Extent of the emitting panel (pixel edges).
    pub fn panel_rect(&self) -> Rect {
        Rect::centered(self.led_cols as f64 * self.led_pitch * 0.5, self.led_rows as f64 * self.led_pitch * 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn prototype_pixel_centres() {
        let g = SystemGeometry::prototype();
        let p0 = g.led_pixel_center(0, 0).unwrap();
        // independent: accumulate half the span pitch by pitch
        let mut x = 0.0;
        for _ in 0..239 {
            x -= 2.54 / 2.0;
        }
        let mut y = 0.0;
        for _ in 0..134 {
            y -= 2.54 / 2.0;
        }
        assert!(approx(p0.x, x) && approx(p0.y, y), "{p0:?}");
        assert!(approx(p0.x, -303.53) && approx(p0.y, -170.18));
        let a = g.led_pixel_center(120, 67).unwrap();
        let b = g.led_pixel_center(119, 67).unwrap();
        assert!(a.x > 0.0 && b.x < 0.0 && approx(a.x, -b.x));
        assert!(approx(a.y, 0.0));
    }

    #[test]
    fn single_pixel_panel_is_at_origin() {
        let mut g = SystemGeometry::prototype();
        g.led_cols = 1;
        g.led_rows = 1;
        assert_eq!(g.led_pixel_center(0, 0).unwrap(), Vec2::ZERO);
    }

    #[test]
    fn three_by_three() {
        let mut g = SystemGeometry::prototype();
        g.led_cols = 3;
        g.led_rows = 3;
        g.led_pitch = 2.0;
        assert_eq!(g.led_pixel_center(2, 2).unwrap(), Vec2::new(2.0, 2.0));
    }

    #[test]
    fn out_of_bounds_pixel() {
        let g = SystemGeometry::prototype();
        assert!(matches!(g.led_pixel_center(240, 0), Err(Error::PixelOutOfBounds { .. })));
        assert!(g.led_pixel_center(-1, 0).is_err());
    }

    #[test]
    fn ordering_violation_rejected() {
        let mut g = SystemGeometry::prototype();
        g.z_proj = g.z_lens;
        let err = g.validate().unwrap_err();
        assert!(err.to_string().contains("z_lens < z_proj"), "{err}");
    }

    #[test]
    fn nearest_pixel_round_trip_all() {
        let g = SystemGeometry::prototype();
        for row in 0..g.led_rows {
            for col in 0..g.led_cols {
                let c = g.pixel_center_unchecked(col, row);
                assert_eq!(g.nearest_pixel(c), Some((col, row)));
            }
        }
    }
}
