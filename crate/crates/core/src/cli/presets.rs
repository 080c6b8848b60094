use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Rect, Vec2, Vec3};
use crate::scene::{Config, FloorSpec, LensSpec, Mirror, Occluder, Scene, SolverParams, SystemGeometry, Target};

/// Named problem sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Quarter-area plate on a 2 mm grid; everything runs in seconds.
    Desk,
    /// The full 660 x 320 mm plate on a 0.5 mm grid.
    Full,
}

impl Preset {
    pub fn region(self) -> Rect {
        match self {
            Preset::Desk => Rect::centered(165.0, 80.0),
            Preset::Full => Rect::centered(330.0, 160.0),
        }
    }

    pub fn grid_pitch(self) -> f64 {
        match self {
            Preset::Desk => 2.0,
            Preset::Full => 0.5,
        }
    }

    pub fn geometry(self) -> SystemGeometry {
        SystemGeometry { placement_region: self.region(), grid_pitch: self.grid_pitch(), ..SystemGeometry::prototype() }
    }

    /// Preset geometry with the sphere scene and default solver settings.
    pub fn config(self) -> Config {
        Config {
            geometry: self.geometry(),
            lens: LensSpec { radius: 19.0, focal_length: 100.0, margin: 1.0 },
            layout: None,
            scene: sphere_scene(),
            floor: FloorSpec::default(),
            env_margin: 100.0,
            projector_level: 1.0,
            solver: SolverParams::default(),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            _ => Err(Error::Unknown { what: "preset", name: s.into() }),
        }
    }
}

pub const SPHERE_CENTER: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1550.0 };
pub const SPHERE_RADIUS: f64 = 100.0;

/// 18 markers on the sphere: an equatorial ring of 12 and a ring of 6 at
/// 45 degrees towards the lens plate.
pub fn sphere_markers(center: Vec3, radius: f64) -> Vec<Vec3> {
    let mut m = Vec::with_capacity(18);
    for i in 0..12 {
        let a = i as f64 * std::f64::consts::TAU / 12.0;
        m.push(center + Vec3::new(radius * a.cos(), radius * a.sin(), 0.0));
    }
    let h = radius * std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..6 {
        let a = (i as f64 + 0.5) * std::f64::consts::TAU / 6.0;
        m.push(center + Vec3::new(h * a.cos(), h * a.sin(), -h));
    }
    m
}

/// A 200 mm ball resting on the floor below the plate centre.
pub fn sphere_scene() -> Scene {
    Scene {
        target: Some(Target::Sphere { center: SPHERE_CENTER, radius: SPHERE_RADIUS }),
        markers: sphere_markers(SPHERE_CENTER, SPHERE_RADIUS),
        ..Default::default()
    }
}

/// Box-shaped projection target (187 x 229 x 229 mm) standing on the floor,
/// with 18 markers: its 8 corners, the 8 midpoints of its vertical faces'
/// horizontal edges and the centres of its top and bottom faces.
pub fn box_scene(z_floor: f64) -> Scene {
    let (hx, hy, h) = (93.5, 114.5, 229.0);
    let min = Vec3::new(-hx, -hy, z_floor - h);
    let max = Vec3::new(hx, hy, z_floor);
    let mut markers = Vec::with_capacity(18);
    for z in [min.z, max.z] {
        for (x, y) in [(-hx, -hy), (hx, -hy), (-hx, hy), (hx, hy)] {
            markers.push(Vec3::new(x, y, z));
        }
        for (x, y) in [(0.0, -hy), (0.0, hy), (-hx, 0.0), (hx, 0.0)] {
            markers.push(Vec3::new(x, y, z));
        }
        markers.push(Vec3::new(0.0, 0.0, z));
    }
    Scene { target: Some(Target::Box { min, max }), markers, ..Default::default() }
}

/// The sphere scene plus a vertical mirror beside the ball, facing it, that
/// folds part of the array's light back onto the target.
pub fn mirror_scene() -> Scene {
    let mut s = sphere_scene();
    s.mirrors.push(Mirror {
        center: Vec3::new(130.0, 0.0, 1425.0),
        u: Vec3::new(0.0, 0.0, 1.0),
        v: Vec3::new(0.0, 1.0, 0.0),
        half_u: 225.0,
        half_v: 120.0,
        specular: true,
    });
    s
}

/// Opaque disk used for the shadow study.
pub fn shadow_occluder() -> Occluder {
    Occluder::Disk { center: Vec3::new(0.0, 0.0, 1450.0), radius: 100.0 }
}

/// Line across the occluder's shadow edge.
pub fn shadow_line() -> (Vec2, Vec2) {
    (Vec2::new(0.0, 0.0), Vec2::new(300.0, 0.0))
}
