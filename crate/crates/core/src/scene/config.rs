//! TOML configuration: `[geometry]`, optional `[layout]`, `[scene]`, `[solver]`.
//!
//! See `docs/config.md` for the full schema.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LensLayout, Mirror, Occluder, Scene, SystemGeometry, Target};
use crate::error::{Error, Result};
use crate::math::{Rect, Vec2, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub z_lens: f64,
    pub z_proj: f64,
    pub led_pitch: f64,
    pub led_cols: usize,
    pub led_rows: usize,
    pub region: Rect,
    #[serde(default = "d_grid_pitch")]
    pub grid_pitch: f64,
    #[serde(default = "d_lens_radius")]
    pub lens_radius: f64,
    #[serde(default = "d_focal")]
    pub lens_focal_length: f64,
    /// Clearance between lens rims (delta).
    #[serde(default = "d_margin")]
    pub lens_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSection {
    /// Inline lens centres in placement order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lenses: Option<Vec<Vec2>>,
    /// Layout CSV path, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorSpec {
    /// Rasterised extent of the floor.
    pub rect: Rect,
    /// Raster cell size, mm.
    pub cell: f64,
}

impl Default for FloorSpec {
    fn default() -> Self {
        Self { rect: Rect::centered(700.0, 500.0), cell: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec3>,
    /// Draw this many area-weighted surface samples instead of `points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    #[serde(default)]
    pub markers: MarkerSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mirrors: Vec<Mirror>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub occluders: Vec<Occluder>,
    #[serde(default)]
    pub floor: FloorSpec,
    /// Environment region excludes the target silhouette grown by this much.
    #[serde(default = "d_env_margin")]
    pub env_margin: f64,
    /// Projector level relative to the mean all-on irradiance on the target.
    #[serde(default = "d_one")]
    pub projector_level: f64,
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            target: None,
            markers: MarkerSection::default(),
            mirrors: Vec::new(),
            occluders: Vec::new(),
            floor: FloorSpec::default(),
            env_margin: d_env_margin(),
            projector_level: d_one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionModel {
    #[default]
    Lambertian,
    Isotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_sectors")]
    pub sectors: usize,
    /// Candidate search radius around placed lenses; `4 * lens_radius` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub exclusion_point: Vec2,
    #[serde(default)]
    pub naive_dmin: bool,
    #[serde(default = "d_tau")]
    pub tau: f64,
    #[serde(default = "d_dilation")]
    pub dilation: usize,
    #[serde(default = "d_raytrace_samples")]
    pub raytrace_samples: usize,
    #[serde(default = "d_ltm_iterations")]
    pub ltm_iterations: usize,
    #[serde(default = "d_ltm_tolerance")]
    pub ltm_tolerance: f64,
    #[serde(default = "d_ltm_cell")]
    pub ltm_cell: f64,
    #[serde(default = "d_samples_per_lens")]
    pub samples_per_lens: usize,
    #[serde(default)]
    pub emission: EmissionModel,
    #[serde(default)]
    pub diffuse_bounce: bool,
    #[serde(default = "d_albedo")]
    pub bounce_albedo: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            alpha: d_alpha(),
            sectors: d_sectors(),
            r_max: None,
            exclusion_point: Vec2::ZERO,
            naive_dmin: false,
            tau: d_tau(),
            dilation: d_dilation(),
            raytrace_samples: d_raytrace_samples(),
            ltm_iterations: d_ltm_iterations(),
            ltm_tolerance: d_ltm_tolerance(),
            ltm_cell: d_ltm_cell(),
            samples_per_lens: d_samples_per_lens(),
            emission: EmissionModel::default(),
            diffuse_bounce: false,
            bounce_albedo: d_albedo(),
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Invariant(format!("0 <= alpha <= 1 required, got {}", self.alpha)));
        }
        if self.sectors == 0 {
            return Err(Error::Invariant("sectors >= 1 required".into()));
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0) {
                return Err(Error::Invariant(format!("r_max > 0 required, got {r}")));
            }
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::Invariant(format!("0 < tau < 1 required, got {}", self.tau)));
        }
        if self.samples_per_lens == 0 {
            return Err(Error::Invariant("samples_per_lens >= 1 required".into()));
        }
        if !(self.ltm_cell > 0.0) {
            return Err(Error::Invariant("ltm_cell > 0 required".into()));
        }
        Ok(())
    }
}

fn d_grid_pitch() -> f64 {
    0.5
}
fn d_lens_radius() -> f64 {
    19.0
}
fn d_focal() -> f64 {
    100.0
}
fn d_margin() -> f64 {
    1.0
}
fn d_env_margin() -> f64 {
    100.0
}
fn d_one() -> f64 {
    1.0
}
fn d_alpha() -> f64 {
    0.3
}
fn d_sectors() -> usize {
    36
}
fn d_tau() -> f64 {
    0.05
}
fn d_dilation() -> usize {
    1
}
fn d_raytrace_samples() -> usize {
    2000
}
fn d_ltm_iterations() -> usize {
    2000
}
fn d_ltm_tolerance() -> f64 {
    1e-6
}
fn d_ltm_cell() -> f64 {
    10.0
}
fn d_samples_per_lens() -> usize {
    16
}
fn d_albedo() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensSpec {
    pub radius: f64,
    pub focal_length: f64,
    pub margin: f64,
}

impl LensSpec {
    /// Minimum centre-to-centre spacing, `2 r + delta`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.radius + self.margin
    }
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub geometry: SystemGeometry,
    pub lens: LensSpec,
    pub layout: Option<LensLayout>,
    pub scene: Scene,
    pub floor: FloorSpec,
    pub env_margin: f64,
    pub projector_level: f64,
    pub solver: SolverParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    geometry: GeometrySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<LayoutSection>,
    #[serde(default)]
    scene: SceneSection,
    #[serde(default)]
    solver: SolverParams,
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Config::from_toml_str(&text, path.parent())
}

impl Config {
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(file, base_dir)
    }

    fn from_file(f: ConfigFile, base_dir: Option<&Path>) -> Result<Self> {
        let g = &f.geometry;
        let geometry =
            SystemGeometry::new(g.z_lens, g.z_proj, g.led_pitch, g.led_cols, g.led_rows, g.region, g.grid_pitch)?;
        if !(g.lens_radius > 0.0) {
            return Err(Error::Invariant(format!("lens_radius > 0 required, got {}", g.lens_radius)));
        }
        if !(g.lens_margin >= 0.0) {
            return Err(Error::Invariant(format!("lens_margin >= 0 required, got {}", g.lens_margin)));
        }
        let lens = LensSpec { radius: g.lens_radius, focal_length: g.lens_focal_length, margin: g.lens_margin };

        let layout = match &f.layout {
            None => None,
            Some(LayoutSection { lenses: Some(_), csv: Some(_) }) => {
                return Err(Error::schema("layout", "give either `lenses` or `csv`, not both"));
            }
            Some(LayoutSection { lenses: Some(c), .. }) => {
                Some(LensLayout::from_centers(c, lens.radius, lens.focal_length, lens.margin))
            }
            Some(LayoutSection { csv: Some(p), .. }) => {
                let full = match base_dir {
                    Some(d) if p.is_relative() => d.join(p),
                    _ => p.clone(),
                };
                Some(LensLayout::read_csv(&full, lens.focal_length, lens.margin)?)
            }
            Some(_) => None,
        };
        if let Some(l) = &layout {
            l.validate_for(&geometry)?;
        }

        let s = &f.scene;
        let markers = match (s.markers.samples, &s.target) {
            (Some(_), _) if !s.markers.points.is_empty() => {
                return Err(Error::schema("scene.markers", "give either `points` or `samples`, not both"));
            }
            (Some(k), Some(t)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s.markers.seed);
                t.sample_surface(k, &mut rng).into_iter().map(|p| p.point).collect()
            }
            (Some(_), None) => return Err(Error::schema("scene.markers.samples", "requires a target")),
            (None, _) => s.markers.points.clone(),
        };
        let scene =
            Scene { target: s.target.clone(), markers, mirrors: s.mirrors.clone(), occluders: s.occluders.clone() };
        scene.validate()?;
        if !(s.floor.cell > 0.0 && s.floor.rect.area() > 0.0) {
            return Err(Error::schema("scene.floor", "floor needs positive area and cell > 0"));
        }
        f.solver.validate()?;
        Ok(Config {
            geometry,
            lens,
            layout,
            scene,
            floor: s.floor.clone(),
            env_margin: s.env_margin,
            projector_level: s.projector_level,
            solver: f.solver,
        })
    }

    fn to_file(&self) -> ConfigFile {
        let g = &self.geometry;
        ConfigFile {
            geometry: GeometrySection {
                z_lens: g.z_lens,
                z_proj: g.z_proj,
                led_pitch: g.led_pitch,
                led_cols: g.led_cols,
                led_rows: g.led_rows,
                region: g.placement_region,
                grid_pitch: g.grid_pitch,
                lens_radius: self.lens.radius,
                lens_focal_length: self.lens.focal_length,
                lens_margin: self.lens.margin,
            },
            layout: self.layout.as_ref().map(|l| LayoutSection { lenses: Some(l.centers()), csv: None }),
            scene: SceneSection {
                target: self.scene.target.clone(),
                markers: MarkerSection { points: self.scene.markers.clone(), samples: None, seed: 0 },
                mirrors: self.scene.mirrors.clone(),
                occluders: self.scene.occluders.clone(),
                floor: self.floor.clone(),
                env_margin: self.env_margin,
                projector_level: self.projector_level,
            },
            solver: self.solver.clone(),
        }
    }

    /// Serialises with the layout inlined and markers made explicit.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serialises")
    }

    pub fn r_max(&self) -> f64 {
        self.solver.r_max.unwrap_or(4.0 * self.lens.radius)
    }
}
