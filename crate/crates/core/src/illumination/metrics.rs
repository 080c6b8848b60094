use serde::Serialize;

use super::map::{mean, IrradianceMap, Raster};
use super::pattern::LedPattern;
use super::render::{RenderOptions, Renderer};
use crate::error::{Error, Result};
use crate::math::{Rect, Vec2};
use crate::scene::{LensLayout, Occluder, Scene, SystemGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Uniformity {
    pub mean: f64,
    pub stdev: f64,
    /// Population stdev over mean.
    pub cv: f64,
    pub min_over_mean: f64,
}

/// Population mean and standard deviation.
pub fn mean_stdev(values: impl Iterator<Item = f64> + Clone) -> Option<(f64, f64)> {
    let m = mean(values.clone())?;
    let var = mean(values.map(|v| (v - m) * (v - m)))?;
    Some((m, var.sqrt()))
}

pub fn uniformity(map: &IrradianceMap, mask: &[bool]) -> Result<Uniformity> {
    if mask.len() != map.data.len() {
        return Err(Error::Invariant("mask and raster sizes differ".into()));
    }
    let vals = map.masked(mask);
    let (m, sd) = mean_stdev(vals.clone()).ok_or(Error::Empty("uniformity mask"))?;
    if m == 0.0 {
        return Err(Error::ZeroMean("coefficient of variation"));
    }
    let min = vals.fold(f64::INFINITY, f64::min);
    Ok(Uniformity { mean: m, stdev: sd, cv: sd / m, min_over_mean: min / m })
}

/// Cell values sampled every `step` mm along `from`-`to`. Positions are
/// given along the segment's dominant axis (x for a horizontal line).
pub fn line_profile(map: &IrradianceMap, from: Vec2, to: Vec2, step: f64) -> Vec<(f64, f64)> {
    let len = from.dist(to);
    let n = (len / step).floor() as usize + 1;
    let horizontal = (to.x - from.x).abs() >= (to.y - from.y).abs();
    (0..n)
        .filter_map(|i| {
            let t = if len > 0.0 { (i as f64 * step / len).min(1.0) } else { 0.0 };
            let p = from + (to - from) * t;
            let pos = if horizontal { p.x } else { p.y };
            map.value_at(p).map(|v| (pos, v))
        })
        .collect()
}

pub fn profile_to_csv(profile: &[(f64, f64)]) -> String {
    let mut s = String::from("x_mm,intensity\n");
    for (x, v) in profile {
        s.push_str(&format!("{x},{v}\n"));
    }
    s
}

/// Binary checkerboard content on the raster (`true` = bright square).
pub fn checkerboard(raster: &Raster, square: f64) -> Vec<bool> {
    (0..raster.len())
        .map(|k| {
            let c = raster.center(k);
            ((c.x / square).floor() as i64 + (c.y / square).floor() as i64).rem_euclid(2) == 0
        })
        .collect()
}

/// Population stdev over the target of `(ambient + level * content)` scaled
/// so its maximum is 1. The projector is an ideal additive source confined
/// to the target mask.
pub fn rms_contrast(map: &IrradianceMap, target_mask: &[bool], content: &[bool], level: f64) -> Result<f64> {
    let vals: Vec<f64> = map
        .data
        .iter()
        .zip(target_mask)
        .zip(content)
        .filter(|((_, &m), _)| m)
        .map(|((&v, _), &c)| v + if c { level } else { 0.0 })
        .collect();
    if vals.is_empty() {
        return Err(Error::Empty("target mask"));
    }
    let max = vals.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0.0);
    }
    let (_, sd) = mean_stdev(vals.iter().map(|v| v / max)).expect("non-empty");
    Ok(sd)
}

/// Total lens aperture over plate area.
pub fn fill_factor(layout: &LensLayout, plate: &Rect) -> Result<f64> {
    if !(plate.area() > 0.0) {
        return Err(Error::Invariant(format!("plate area must be > 0, got {}", plate.area())));
    }
    Ok(layout.aperture_area() / plate.area())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShadowProfile {
    /// `(position, occluded / unoccluded)` along the line.
    pub points: Vec<(f64, f64)>,
    /// Distance between the 20% and 80% crossings, if both exist.
    pub penumbra: Option<f64>,
}

/// Renders the pattern with and without the occluder on a thin strip around
/// `from`-`to` and returns the relative profile across the shadow edge.
#[allow(clippy::too_many_arguments)]
pub fn shadow_profile(
    layout: &LensLayout,
    pattern: &LedPattern,
    geom: &SystemGeometry,
    occluder: &Occluder,
    from: Vec2,
    to: Vec2,
    cell: f64,
    opts: &RenderOptions,
) -> Result<ShadowProfile> {
    let z = occluder_z(occluder);
    if !(z > geom.z_lens && z < geom.z_proj) {
        return Err(Error::Invariant(format!("occluder at z = {z} is not between the lens plate and the floor")));
    }
    let rect = Rect::new(from.x.min(to.x), from.x.max(to.x), from.y.min(to.y), from.y.max(to.y)).expanded(cell);
    let raster = Raster::new(rect, cell);
    let bare = Scene::default();
    let shadowed = Scene { occluders: vec![occluder.clone()], ..Default::default() };
    let lit = Renderer::new(geom, layout, &bare, raster, opts.clone())?.render(pattern)?;
    let dark = Renderer::new(geom, layout, &shadowed, raster, opts.clone())?.render(pattern)?;
    let a = line_profile(&lit, from, to, cell);
    let b = line_profile(&dark, from, to, cell);
    let points: Vec<(f64, f64)> = a.iter().zip(&b).filter(|(l, _)| l.1 > 0.0).map(|(l, d)| (l.0, d.1 / l.1)).collect();
    let penumbra = penumbra_width(&points);
    Ok(ShadowProfile { points, penumbra })
}

fn occluder_z(o: &Occluder) -> f64 {
    match o {
        Occluder::Disk { center, .. } => center.z,
        Occluder::Segment { z, .. } => *z,
    }
}

/// Width between the 20% and 80% levels of a relative profile, walking
/// outwards from its darkest sample towards increasing position.
pub fn penumbra_width(points: &[(f64, f64)]) -> Option<f64> {
    let start = points.iter().enumerate().min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?.0;
    let crossing = |level: f64| -> Option<f64> {
        for i in start + 1..points.len() {
            let (x1, v1) = points[i];
            if v1 >= level {
                let (x0, v0) = points[i - 1];
                return Some(if v1 == v0 { x1 } else { x0 + (level - v0) / (v1 - v0) * (x1 - x0) });
            }
        }
        None
    };
    Some((crossing(0.8)? - crossing(0.2)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::scene::Lens;

    fn map_of(values: Vec<f64>) -> IrradianceMap {
        let raster = Raster::new(Rect::new(0.0, values.len() as f64, 0.0, 1.0), 1.0);
        let mut m = IrradianceMap::zeros("floor", raster);
        m.data = values;
        m
    }

    #[test]
    fn cv_hand_values() {
        let m = map_of(vec![3.0; 10]);
        assert_eq!(uniformity(&m, &m.env_mask).unwrap().cv, 0.0);
        let m = map_of(vec![1.0, 2.0, 1.0, 2.0]);
        let u = uniformity(&m, &m.env_mask).unwrap();
        assert!((u.mean - 1.5).abs() < 1e-15);
        assert!((u.stdev - 0.5).abs() < 1e-15);
        assert!((u.cv - 1.0 / 3.0).abs() < 1e-15);
        assert!((u.min_over_mean - 2.0 / 3.0).abs() < 1e-15);
        let z = map_of(vec![0.0; 3]);
        assert!(matches!(uniformity(&z, &z.env_mask), Err(Error::ZeroMean(_))));
        assert!(matches!(uniformity(&z, &[false; 3]), Err(Error::Empty(_))));
    }

    #[test]
    fn contrast_hand_values() {
        let m = map_of(vec![0.0; 4]);
        let mask = [true; 4];
        assert_eq!(rms_contrast(&m, &mask, &[true; 4], 1.0).unwrap(), 0.0);
        assert!((rms_contrast(&m, &mask, &[true, false, true, false], 1.0).unwrap() - 0.5).abs() < 1e-15);
        // ambient light washes the content out
        let lit = map_of(vec![1.0; 4]);
        assert!((rms_contrast(&lit, &mask, &[true, false, true, false], 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(rms_contrast(&m, &[false; 4], &[true; 4], 1.0).is_err());
    }

    #[test]
    fn fill_factor_area_arithmetic() {
        let plate = Rect::centered(365.0, 195.0);
        let l = LensLayout::from_centers(&vec![Vec2::ZERO; 111], 19.0, 100.0, 1.0);
        let want = 111.0 * std::f64::consts::PI * 361.0 / 284_700.0;
        assert!((fill_factor(&l, &plate).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.442).abs() < 5e-4);
        assert_eq!(fill_factor(&LensLayout::new(1.0), &plate).unwrap(), 0.0);
        assert!(fill_factor(&l, &Rect::new(0.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn penumbra_of_ramp() {
        let p: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, (i as f64 / 10.0))).collect();
        assert!((penumbra_width(&p).unwrap() - 6.0).abs() < 1e-12);
        let step = [(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (3.0, 1.0)];
        assert!((penumbra_width(&step).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn more_lenses_soften_the_shadow() {
        let g = SystemGeometry::prototype();
        let occ = Occluder::Disk { center: Vec3::new(0.0, 0.0, 1450.0), radius: 100.0 };
        let opts = RenderOptions::default();
        let on = LedPattern::all_on(&g);
        let width = |xs: &[f64]| {
            let layout = LensLayout {
                lenses: xs
                    .iter()
                    .map(|&x| Lens { center: Vec2::new(x, 0.0), radius: 19.0, focal_length: 100.0 })
                    .collect(),
                margin: 1.0,
            };
            shadow_profile(&layout, &on, &g, &occ, Vec2::new(0.0, 0.0), Vec2::new(250.0, 0.0), 0.5, &opts)
                .unwrap()
                .penumbra
                .unwrap()
        };
        let w1 = width(&[0.0]);
        let w3 = width(&[-80.0, 0.0, 80.0]);
        let w5 = width(&[-240.0, -160.0, -80.0, 0.0, 80.0, 160.0, 240.0]);
        assert!(w1 < w3 && w3 < w5, "{w1} {w3} {w5}");
    }
}
