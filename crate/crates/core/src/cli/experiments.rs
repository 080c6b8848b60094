//! Simulation studies shared by the `reproduce` recipes and the acceptance
//! suite. Every function is a pure function of its inputs.

use serde::Serialize;

use super::presets::{box_scene, mirror_scene, shadow_line, shadow_occluder};
use crate::error::{Error, Result};
use crate::illumination::{
    checkerboard, line_profile, mtf_curve, render_irradiance, rms_contrast, shadow_profile, uniformity, IrradianceMap,
    LedPattern, MtfPoint, Raster, RenderOptions, ShadowProfile,
};
use crate::math::{Rect, Vec2};
use crate::patterns::{geometry_pattern, ltm_pattern, raytrace_pattern, target_leakage, LtmSettings, Method};
use crate::placement::{optimize_layout, periodic_matched, Optimization, OptimizerParams};
use crate::scene::{Config, LensLayout, Scene};

pub fn render_options(cfg: &Config) -> RenderOptions {
    RenderOptions {
        samples_per_lens: cfg.solver.samples_per_lens,
        emission: cfg.solver.emission,
        diffuse_bounce: cfg.solver.diffuse_bounce,
        bounce_albedo: cfg.solver.bounce_albedo,
        seed: cfg.solver.seed,
        ..Default::default()
    }
}

pub fn ltm_settings(cfg: &Config) -> LtmSettings {
    LtmSettings {
        cell: cfg.solver.ltm_cell,
        iterations: cfg.solver.ltm_iterations,
        tolerance: cfg.solver.ltm_tolerance,
        ..Default::default()
    }
}

pub fn floor_raster(cfg: &Config) -> Raster {
    Raster::new(cfg.floor.rect, cfg.floor.cell)
}

/// The configured layout, or a freshly optimised one.
pub fn layout_for(cfg: &Config) -> Result<LensLayout> {
    match &cfg.layout {
        Some(l) => Ok(l.clone()),
        None => Ok(optimize(cfg)?.layout),
    }
}

pub fn optimize(cfg: &Config) -> Result<Optimization> {
    optimize_layout(&cfg.geometry, &OptimizerParams::from_config(cfg))
}

/// Target-excluding pattern for `scene` by the chosen method.
pub fn compute_pattern(method: Method, layout: &LensLayout, cfg: &Config, scene: &Scene) -> Result<LedPattern> {
    let g = &cfg.geometry;
    let s = &cfg.solver;
    match method {
        Method::Geometry => Ok(geometry_pattern(layout, g, &scene.markers, s.dilation)),
        Method::Raytrace => raytrace_pattern(layout, g, scene, s.tau, s.raytrace_samples, s.samples_per_lens, s.seed),
        Method::Ltm => {
            Ok(ltm_pattern(layout, g, scene, floor_raster(cfg), &render_options(cfg), &ltm_settings(cfg))?.0)
        }
    }
}

pub fn render(cfg: &Config, layout: &LensLayout, pattern: &LedPattern, scene: &Scene) -> Result<IrradianceMap> {
    render_irradiance(layout, pattern, &cfg.geometry, scene, floor_raster(cfg), &render_options(cfg), cfg.env_margin)
}

#[derive(Debug, Clone, Serialize)]
pub struct DarkSpots {
    pub aperiodic_lenses: usize,
    pub periodic_lenses: usize,
    pub cv_aperiodic: f64,
    pub cv_periodic: f64,
    /// `cv_aperiodic / cv_periodic`.
    pub ratio: f64,
    #[serde(skip)]
    pub maps: [IrradianceMap; 2],
    #[serde(skip)]
    pub profiles: [Vec<(f64, f64)>; 2],
}

/// Environment uniformity around a dark target for the aperiodic layout and
/// a periodic packing with a matching lens count, both lit by reciprocity
/// ray-traced patterns.
pub fn dark_spots(cfg: &Config, aperiodic: &LensLayout) -> Result<DarkSpots> {
    let (periodic, _) = periodic_matched(&cfg.geometry, &cfg.lens, aperiodic.len(), 0.1)?;
    let run = |layout: &LensLayout| -> Result<(f64, IrradianceMap, Vec<(f64, f64)>)> {
        let p = compute_pattern(Method::Raytrace, layout, cfg, &cfg.scene)?;
        let map = render(cfg, layout, &p, &cfg.scene)?;
        let cv = uniformity(&map, &map.env_mask)?.cv;
        let r = cfg.floor.rect;
        let prof = line_profile(&map, Vec2::new(r.x_min, 0.0), Vec2::new(r.x_max, 0.0), cfg.floor.cell);
        Ok((cv, map, prof))
    };
    let (ca, ma, pa) = run(aperiodic)?;
    let (cp, mp, pp) = run(&periodic)?;
    Ok(DarkSpots {
        aperiodic_lenses: aperiodic.len(),
        periodic_lenses: periodic.len(),
        cv_aperiodic: ca,
        cv_periodic: cp,
        ratio: ca / cp,
        maps: [ma, mp],
        profiles: [pa, pp],
    })
}

/// Checker size of the projected test content, mm.
pub const CHECKER_MM: f64 = 40.0;

#[derive(Debug, Clone, Serialize)]
pub struct Contrast {
    pub dark_room: f64,
    pub all_on: f64,
    /// In [`Method::ALL`] order.
    pub methods: Vec<(Method, f64)>,
}

impl Contrast {
    pub fn get(&self, m: Method) -> f64 {
        self.methods.iter().find(|(k, _)| *k == m).map_or(f64::NAN, |(_, v)| *v)
    }

    /// Largest pairwise relative difference between the methods.
    pub fn spread(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (_, a)) in self.methods.iter().enumerate() {
            for (_, b) in &self.methods[i + 1..] {
                worst = worst.max((a - b).abs() / a.max(*b));
            }
        }
        worst
    }
}

/// Projection contrast on the box target: checkerboard content at
/// `projector_level` times the all-on target mean, over a dark room, the
/// all-on array and each target-excluding pattern.
pub fn contrast(cfg: &Config, layout: &LensLayout) -> Result<(Contrast, Vec<(Method, LedPattern)>)> {
    let scene = box_scene(cfg.geometry.z_proj);
    let raster = floor_raster(cfg);
    let content = checkerboard(&raster, CHECKER_MM);
    let on = render(cfg, layout, &LedPattern::all_on(&cfg.geometry), &scene)?;
    let level = cfg.projector_level * on.target_mean()?;
    let dark = IrradianceMap { data: vec![0.0; on.data.len()], ..on.clone() };
    let dark_room = rms_contrast(&dark, &dark.target_mask, &content, level)?;
    let all_on = rms_contrast(&on, &on.target_mask, &content, level)?;
    let mut methods = Vec::new();
    let mut patterns = Vec::new();
    for m in Method::ALL {
        let p = compute_pattern(m, layout, cfg, &scene)?;
        let map = render(cfg, layout, &p, &scene)?;
        methods.push((m, rms_contrast(&map, &map.target_mask, &content, level)?));
        patterns.push((m, p));
    }
    Ok((Contrast { dark_room, all_on, methods }, patterns))
}

#[derive(Debug, Clone, Serialize)]
pub struct MirrorLeakage {
    pub all_on: f64,
    pub methods: Vec<(Method, f64)>,
}

impl MirrorLeakage {
    pub fn get(&self, m: Method) -> f64 {
        self.methods.iter().find(|(k, _)| *k == m).map_or(f64::NAN, |(_, v)| *v)
    }
}

/// Mean target irradiance under each method's pattern with a mirror folding
/// light onto the target.
pub fn mirror_leakage(cfg: &Config, layout: &LensLayout) -> Result<(MirrorLeakage, Vec<(Method, LedPattern)>)> {
    let scene = mirror_scene();
    let on = render(cfg, layout, &LedPattern::all_on(&cfg.geometry), &scene)?;
    let all_on = target_leakage(&on, &on.target_mask)?;
    let mut methods = Vec::new();
    let mut patterns = Vec::new();
    for m in Method::ALL {
        let p = compute_pattern(m, layout, cfg, &scene)?;
        let map = render(cfg, layout, &p, &scene)?;
        methods.push((m, target_leakage(&map, &map.target_mask)?));
        patterns.push((m, p));
    }
    Ok((MirrorLeakage { all_on, methods }, patterns))
}

#[derive(Debug, Clone, Serialize)]
pub struct Shadows {
    pub single_lens: ShadowProfile,
    pub all_lenses: ShadowProfile,
}

impl Shadows {
    /// All-lens over single-lens penumbra width.
    pub fn softening(&self) -> Option<f64> {
        Some(self.all_lenses.penumbra? / self.single_lens.penumbra?)
    }
}

/// Shadow edge of an opaque disk lit by the lens nearest the plate centre
/// alone and by the whole array.
pub fn shadows(cfg: &Config, layout: &LensLayout) -> Result<Shadows> {
    let centre = layout
        .lenses
        .iter()
        .min_by(|a, b| a.center.norm().total_cmp(&b.center.norm()))
        .ok_or(Error::Empty("lens layout"))?;
    let single = LensLayout { lenses: vec![*centre], ..layout.clone() };
    let (from, to) = shadow_line();
    let occ = shadow_occluder();
    let opts = render_options(cfg);
    let on = LedPattern::all_on(&cfg.geometry);
    let cell = 1.0;
    Ok(Shadows {
        single_lens: shadow_profile(&single, &on, &cfg.geometry, &occ, from, to, cell, &opts)?,
        all_lenses: shadow_profile(layout, &on, &cfg.geometry, &occ, from, to, cell, &opts)?,
    })
}

/// Frequencies sampled by the MTF study, cycles/mm.
pub const MTF_FREQUENCIES: [f64; 6] = [0.0, 0.0025, 0.005, 0.01, 0.015, 0.02];

/// Analysis window for the MTF study.
pub fn mtf_window() -> Rect {
    Rect::centered(300.0, 100.0)
}

pub fn mtf(cfg: &Config, layout: &LensLayout) -> Result<Vec<MtfPoint>> {
    mtf_curve(layout, &cfg.geometry, mtf_window(), &MTF_FREQUENCIES, &render_options(cfg), &ltm_settings(cfg))
}
