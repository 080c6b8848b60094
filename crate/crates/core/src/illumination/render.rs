use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounce::apply_diffuse_bounce;
use super::map::{IrradianceMap, Raster};
use super::pattern::LedPattern;
use crate::error::{Error, Result};
use crate::math::{Aabb, Rect, Vec2, Vec3};
use crate::optics::trace_to_scene;
use crate::scene::{EmissionModel, LensLayout, Ray, Scene, SceneHit, SystemGeometry, Z_SRC};

/// How the image of one LED pixel is spread on the floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Footprint {
    /// All flux lands at the image of the pixel centre.
    Point,
    /// Flux is spread uniformly over the magnified square pixel.
    #[default]
    PixelBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub samples_per_lens: usize,
    pub footprint: Footprint,
    pub emission: EmissionModel,
    /// Follow one specular bounce off scene mirrors.
    pub mirrors: bool,
    pub diffuse_bounce: bool,
    pub bounce_albedo: f64,
    pub seed: u64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            samples_per_lens: 16,
            footprint: Footprint::PixelBox,
            emission: EmissionModel::Lambertian,
            mirrors: true,
            diffuse_bounce: false,
            bounce_albedo: 0.5,
            seed: 0,
        }
    }
}

const LENS_CHUNK: usize = 8;

/// Forward renderer for a fixed layout, scene and raster.
///
/// Each lens is an ideal thin lens focused on the floor: all rays a pixel
/// sends through the aperture converge on the pixel's pinhole image, so the
/// bare floor sees exactly the pinhole mapping while anything in between
/// (target, occluders, mirrors) is met by a cone of rays.
#[derive(Debug, Clone)]
pub struct Renderer<'a> {
    geom: &'a SystemGeometry,
    layout: &'a LensLayout,
    scene: &'a Scene,
    raster: Raster,
    opts: RenderOptions,
    /// Aperture sample offsets per lens.
    apertures: Vec<Vec<Vec2>>,
    obstacles: Vec<Aabb>,
    /// Per lens: lit-pixel window `(c0, c1, r0, r1)`, half open; pixels
    /// outside cannot reach the raster.
    windows: Vec<(usize, usize, usize, usize)>,
    half_box: f64,
}

/// Deterministic sunflower points on a disk; sample 0 is the centre.
pub fn aperture_samples(radius: f64, k: usize, rotation: f64) -> Vec<Vec2> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|i| {
            if i == 0 {
                return Vec2::ZERO;
            }
            let r = radius * (i as f64 / k as f64).sqrt();
            let a = rotation + i as f64 * golden;
            Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

impl<'a> Renderer<'a> {
    pub fn new(
        geom: &'a SystemGeometry,
        layout: &'a LensLayout,
        scene: &'a Scene,
        raster: Raster,
        opts: RenderOptions,
    ) -> Result<Self> {
        if opts.samples_per_lens == 0 {
            return Err(Error::Invariant("samples_per_lens >= 1 required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let apertures = layout
            .lenses
            .iter()
            .map(|l| aperture_samples(l.radius, opts.samples_per_lens, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let half_box = match opts.footprint {
            Footprint::Point => 0.0,
            Footprint::PixelBox => 0.5 * geom.led_pitch * geom.magnification(),
        };
        let obstacles: Vec<Aabb> = scene
            .obstacle_boxes()
            .into_iter()
            .filter(|b| b.max.z > geom.z_lens && b.min.z < geom.z_proj + 1e-9)
            .collect();
        let mut r = Self { geom, layout, scene, raster, opts, apertures, obstacles, windows: Vec::new(), half_box };
        r.windows = (0..layout.len()).map(|i| r.pixel_window(i)).collect();
        Ok(r)
    }

    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    pub fn options(&self) -> &RenderOptions {
        &self.opts
    }

    // Pixels whose bundle through lens `i` may reach the raster, directly or
    // by way of an obstacle.
    fn pixel_window(&self, i: usize) -> (usize, usize, usize, usize) {
        let g = self.geom;
        let lens = &self.layout.lenses[i];
        let l = lens.center;
        let mut floor_rects = vec![self.raster.rect.expanded(self.half_box)];
        let span = g.z_proj - g.z_lens;
        for b in &self.obstacles {
            let z_lo = b.min.z.max(g.z_lens + 1e-6);
            let k_max = span / (z_lo - g.z_lens);
            let mut pts = Vec::with_capacity(8);
            for z in [z_lo, b.max.z.min(g.z_proj)] {
                let k = span / (z - g.z_lens);
                for c in b.xy().corners() {
                    pts.push(l + (c - l) * k);
                }
            }
            let rect = bbox(&pts).expanded(lens.radius * (k_max - 1.0) + self.half_box);
            floor_rects.push(rect);
        }
        // F = l + (l - s) m, so s = l - (F - l) / m
        let m = g.magnification();
        let (mut c0, mut c1, mut r0, mut r1) = (usize::MAX, 0usize, usize::MAX, 0usize);
        for f in floor_rects {
            let s_lo = Vec2::new(l.x - (f.x_max - l.x) / m, l.y - (f.y_max - l.y) / m);
            let s_hi = Vec2::new(l.x - (f.x_min - l.x) / m, l.y - (f.y_min - l.y) / m);
            let (a, b) = (g.pixel_coords_f(s_lo), g.pixel_coords_f(s_hi));
            let lo_c = a.x.floor().max(0.0);
            let hi_c = (b.x.ceil() + 1.0).min(g.led_cols as f64);
            let lo_r = a.y.floor().max(0.0);
            let hi_r = (b.y.ceil() + 1.0).min(g.led_rows as f64);
            if !(lo_c < hi_c && lo_r < hi_r) {
                continue;
            }
            c0 = c0.min(lo_c as usize);
            c1 = c1.max(hi_c as usize);
            r0 = r0.min(lo_r as usize);
            r1 = r1.max(hi_r as usize);
        }
        if c0 >= c1 || r0 >= r1 {
            (0, 0, 0, 0)
        } else {
            (c0, c1, r0, r1)
        }
    }

    /// Flux a unit-level pixel at `s` sends into lens `i`.
    #[inline]
    pub fn pair_weight(&self, s: Vec2, i: usize) -> f64 {
        let lens = &self.layout.lenses[i];
        let d = (lens.center - s).extend(self.geom.z_lens - Z_SRC);
        let d2 = d.dot(d);
        let cos = (self.geom.z_lens - Z_SRC) / d2.sqrt();
        let falloff = match self.opts.emission {
            EmissionModel::Lambertian => cos,
            EmissionModel::Isotropic => 1.0,
        };
        falloff * std::f64::consts::PI * lens.radius * lens.radius * cos / d2
    }

    /// Total flux the pattern sends into the lens apertures.
    pub fn emitted(&self, pattern: &LedPattern) -> f64 {
        let mut total = 0.0;
        for (idx, &v) in pattern.values().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let (c, r) = self.geom.pixel_coords(idx);
            let s = self.geom.pixel_center_unchecked(c, r);
            for i in 0..self.layout.len() {
                total += v * self.pair_weight(s, i);
            }
        }
        total
    }

    fn bundle_clear(&self, l: Vec2, radius: f64, foot: &Rect) -> bool {
        let g = self.geom;
        let ap = Rect::new(l.x - radius, l.x + radius, l.y - radius, l.y + radius);
        let span = g.z_proj - g.z_lens;
        self.obstacles.iter().all(|b| {
            let t0 = ((b.min.z - g.z_lens) / span).clamp(0.0, 1.0);
            let t1 = ((b.max.z - g.z_lens) / span).clamp(0.0, 1.0);
            let r = ap.lerp(foot, t0).union(&ap.lerp(foot, t1));
            !r.intersects(&b.xy())
        })
    }

    // Follows one ray to its first diffuse hit and deposits there. Target
    // hits are seen from above: flux landing on a tilted patch is spread over
    // its true area, so the top-down cell receives `|n_z|` of it.
    fn shade(&self, ray: &Ray, w: f64, sink: &mut impl FnMut(usize, f64)) {
        let z = self.geom.z_proj;
        let landing = |hit| match hit {
            Some(SceneHit::Floor(h)) => Some((h.point, 1.0)),
            Some(SceneHit::Target(h)) => Some((h.point, h.normal.z.abs())),
            _ => None,
        };
        let hit = self.scene.trace(ray, z, self.opts.mirrors, None);
        let (p, f) = match hit {
            Some(SceneHit::Mirror(i, h)) => {
                // only the reflective face redirects light
                if ray.dir.dot(h.normal) >= 0.0 {
                    return;
                }
                let out = Ray::new(h.point, ray.dir.reflect(h.normal));
                match landing(self.scene.trace(&out, z, true, Some(i))) {
                    Some(x) => x,
                    None => return,
                }
            }
            other => match landing(other) {
                Some(x) => x,
                None => return,
            },
        };
        if let Some(k) = self.raster.cell_of(p.xy()) {
            sink(k, w * f);
        }
    }

    /// Deposits the flux of pixel `s` at level `v` through lens `i`.
    pub fn deposit(&self, s: Vec2, i: usize, v: f64, sink: &mut impl FnMut(usize, f64)) {
        let lens = &self.layout.lenses[i];
        let l = lens.center;
        let w = v * self.pair_weight(s, i);
        let f = trace_to_scene(s, l, self.geom);
        let h = self.half_box;
        let foot = Rect::new(f.x - h, f.x + h, f.y - h, f.y + h);
        let clear = self.obstacles.is_empty() || self.bundle_clear(l, lens.radius, &foot);
        let rs = &self.raster;
        if h == 0.0 {
            if clear {
                if let Some(k) = rs.cell_of(f) {
                    sink(k, w);
                }
                return;
            }
            let wk = w / self.apertures[i].len() as f64;
            let target = f.extend(self.geom.z_proj);
            for &a in &self.apertures[i] {
                let ray = Ray::through((l + a).extend(self.geom.z_lens), target);
                self.shade(&ray, wk, sink);
            }
            return;
        }
        let inv_area = 1.0 / (4.0 * h * h);
        let (mut wx, mut wy) = (Vec::with_capacity(24), Vec::with_capacity(24));
        let ax = Raster::overlaps(rs.rect.x_min, rs.cell, rs.nx, foot.x_min, foot.x_max, &mut wx);
        let ay = Raster::overlaps(rs.rect.y_min, rs.cell, rs.ny, foot.y_min, foot.y_max, &mut wy);
        if clear {
            for (jy, &fy) in wy.iter().enumerate() {
                let row = (ay + jy) * rs.nx + ax;
                for (jx, &fx) in wx.iter().enumerate() {
                    sink(row + jx, w * fx * fy * inv_area);
                }
            }
            return;
        }
        let k = self.apertures[i].len() as f64;
        for (jy, &fy) in wy.iter().enumerate() {
            let y0 = (rs.rect.y_min + (ay + jy) as f64 * rs.cell).max(foot.y_min);
            let yc = y0 + 0.5 * fy;
            for (jx, &fx) in wx.iter().enumerate() {
                let frac = fx * fy * inv_area;
                if frac == 0.0 {
                    continue;
                }
                let x0 = (rs.rect.x_min + (ax + jx) as f64 * rs.cell).max(foot.x_min);
                let q = Vec3::new(x0 + 0.5 * fx, yc, self.geom.z_proj);
                let wk = w * frac / k;
                for &a in &self.apertures[i] {
                    let ray = Ray::through((l + a).extend(self.geom.z_lens), q);
                    self.shade(&ray, wk, sink);
                }
            }
        }
    }

    fn render_lenses(&self, lenses: std::ops::Range<usize>, pattern: &LedPattern, data: &mut [f64]) {
        let g = self.geom;
        for i in lenses {
            let (c0, c1, r0, r1) = self.windows[i];
            for r in r0..r1 {
                for c in c0..c1 {
                    let v = pattern.get(g.pixel_index(c, r));
                    if v == 0.0 {
                        continue;
                    }
                    let s = g.pixel_center_unchecked(c, r);
                    self.deposit(s, i, v, &mut |k, w| data[k] += w);
                }
            }
        }
    }

    /// Renders the pattern. Lenses are processed in fixed chunks whose partial
    /// rasters are summed in order, so the result does not depend on the
    /// thread count.
    pub fn render(&self, pattern: &LedPattern) -> Result<IrradianceMap> {
        pattern.matches(self.geom)?;
        let n = self.layout.len();
        let chunks: Vec<usize> = (0..n.div_ceil(LENS_CHUNK)).collect();
        let partial: Vec<Vec<f64>> = chunks
            .par_iter()
            .map(|&c| {
                let mut data = vec![0.0; self.raster.len()];
                self.render_lenses(c * LENS_CHUNK..((c + 1) * LENS_CHUNK).min(n), pattern, &mut data);
                data
            })
            .collect();
        let mut map = IrradianceMap::zeros("floor", self.raster);
        for p in &partial {
            for (a, b) in map.data.iter_mut().zip(p) {
                *a += b;
            }
        }
        if self.opts.diffuse_bounce {
            apply_diffuse_bounce(&mut map, self.scene, self.geom, self.opts.bounce_albedo);
        }
        Ok(map)
    }

    /// Sparse render of one unit pixel: `(cell, value)` sorted by cell with
    /// duplicates merged. Excludes the diffuse bounce.
    pub fn render_pixel(&self, index: usize) -> Vec<(usize, f64)> {
        let g = self.geom;
        let (c, r) = g.pixel_coords(index);
        let s = g.pixel_center_unchecked(c, r);
        let mut out: Vec<(usize, f64)> = Vec::new();
        for (i, &(c0, c1, r0, r1)) in self.windows.iter().enumerate() {
            if c < c0 || c >= c1 || r < r0 || r >= r1 {
                continue;
            }
            self.deposit(s, i, 1.0, &mut |k, w| out.push((k, w)));
        }
        merge_sorted(out)
    }
}

pub(crate) fn merge_sorted(mut v: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    // stable sort keeps the deposition order within a cell, so sums are
    // reproducible
    v.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (k, w) in v {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += w,
            _ => out.push((k, w)),
        }
    }
    out
}

fn bbox(pts: &[Vec2]) -> Rect {
    let mut r = Rect::new(f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        r = Rect::new(r.x_min.min(p.x), r.x_max.max(p.x), r.y_min.min(p.y), r.y_max.max(p.y));
    }
    r
}

/// One-shot render onto `raster`, with masks from the scene.
pub fn render_irradiance(
    layout: &LensLayout,
    pattern: &LedPattern,
    geom: &SystemGeometry,
    scene: &Scene,
    raster: Raster,
    opts: &RenderOptions,
    env_margin: f64,
) -> Result<IrradianceMap> {
    let r = Renderer::new(geom, layout, scene, raster, opts.clone())?;
    Ok(r.render(pattern)?.with_masks(scene, env_margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Lens, Mirror, Occluder, Target};

    fn geom() -> SystemGeometry {
        SystemGeometry::prototype()
    }

    fn one_lens(at: Vec2) -> LensLayout {
        LensLayout { lenses: vec![Lens { center: at, radius: 19.0, focal_length: 100.0 }], margin: 1.0 }
    }

    fn floor() -> Raster {
        Raster::new(Rect::centered(2000.0, 1200.0), 2.0)
    }

    fn point_opts(k: usize) -> RenderOptions {
        RenderOptions { samples_per_lens: k, footprint: Footprint::Point, ..Default::default() }
    }

    #[test]
    fn aperture_samples_inside_disk() {
        let s = aperture_samples(19.0, 16, 0.3);
        assert_eq!(s[0], Vec2::ZERO);
        assert!(s.iter().all(|p| p.norm() <= 19.0 + 1e-12));
        assert_eq!(aperture_samples(5.0, 1, 1.0), vec![Vec2::ZERO]);
    }

    #[test]
    fn all_zero_pattern_renders_black() {
        let g = geom();
        let layout = one_lens(Vec2::ZERO);
        let scene = Scene::default();
        let r = Renderer::new(&g, &layout, &scene, floor(), RenderOptions::default()).unwrap();
        let m = r.render(&LedPattern::all_off(&g)).unwrap();
        assert!(m.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_pixel_lands_on_pinhole_image() {
        let mut g = geom();
        // odd panel so that a pixel centre sits at (107.142857, 0)
        g.led_cols = 241;
        g.led_rows = 135;
        g.led_pitch = 750.0 / 7.0 / 60.0;
        let col = 120 + 60;
        let s = g.pixel_center_unchecked(col, 67);
        assert!((s.x - 107.142857).abs() < 1e-6 && s.y.abs() < 1e-12);
        let layout = one_lens(Vec2::ZERO);
        let scene = Scene::default();
        let r = Renderer::new(&g, &layout, &scene, floor(), point_opts(1)).unwrap();
        let m = r.render(&LedPattern::unit(&g, g.pixel_index(col, 67))).unwrap();
        let lit: Vec<usize> = (0..m.data.len()).filter(|&k| m.data[k] > 0.0).collect();
        assert_eq!(lit.len(), 1);
        let c = m.raster.center(lit[0]);
        // independent: similar triangles through the pinhole
        let want = -s.x * (1650.0 - 110.0) / 110.0;
        assert!((c.x - want).abs() <= 1.0 && c.y.abs() <= 1.0, "{c:?} vs {want}");
        assert!((want + 1500.0).abs() < 1e-4);
    }

    #[test]
    fn samples_converge_on_bare_floor() {
        let g = geom();
        let layout = one_lens(Vec2::new(10.0, -20.0));
        let scene = Scene::default();
        let one = Renderer::new(&g, &layout, &scene, floor(), point_opts(1)).unwrap();
        let many = Renderer::new(&g, &layout, &scene, floor(), point_opts(16)).unwrap();
        let p = LedPattern::unit(&g, g.pixel_index(100, 50));
        assert_eq!(one.render(&p).unwrap(), many.render(&p).unwrap());
    }

    #[test]
    fn box_footprint_conserves_flux_on_floor() {
        let g = geom();
        let layout = one_lens(Vec2::ZERO);
        let scene = Scene::default();
        let r = Renderer::new(&g, &layout, &scene, floor(), RenderOptions::default()).unwrap();
        let p = LedPattern::unit(&g, g.pixel_index(118, 66));
        let m = r.render(&p).unwrap();
        let e = r.emitted(&p);
        assert!((m.total() - e).abs() < 1e-12 * e);
        // magnified pixel: 2.54 * 14 = 35.56 mm square
        let lit = m.data.iter().filter(|&&v| v > 0.0).count();
        assert!((18 * 18..=19 * 19).contains(&lit), "{lit}");
    }

    #[test]
    fn occluder_casts_hard_shadow_from_one_sample() {
        let g = geom();
        let layout = one_lens(Vec2::ZERO);
        let scene = Scene {
            occluders: vec![Occluder::Disk { center: Vec3::new(0.0, 0.0, 1000.0), radius: 30.0 }],
            ..Default::default()
        };
        let r = Renderer::new(&g, &layout, &scene, floor(), point_opts(1)).unwrap();
        let m = r.render(&LedPattern::all_on(&g)).unwrap();
        // the disk subtends 30 * 1540 / 890 = 51.9 mm on the floor
        assert_eq!(m.value_at(Vec2::new(1.0, 1.0)), Some(0.0));
        let outside = (0..m.data.len()).filter(|&k| m.data[k] > 0.0).map(|k| m.raster.center(k).norm());
        assert!(outside.fold(f64::INFINITY, f64::min) > 51.0);
    }

    #[test]
    fn mirror_image_oracle() {
        // vertical mirror at x = 200 facing -x; a pixel whose pinhole image
        // lies beyond the mirror lands at the reflection of that image
        let g = geom();
        let layout = one_lens(Vec2::ZERO);
        let mirror = Mirror {
            center: Vec3::new(200.0, 0.0, 1400.0),
            u: Vec3::new(0.0, 0.0, 1.0),
            v: Vec3::new(0.0, 1.0, 0.0),
            half_u: 300.0,
            half_v: 300.0,
            specular: true,
        };
        assert_eq!(mirror.normal(), Vec3::new(-1.0, 0.0, 0.0));
        let scene = Scene { mirrors: vec![mirror.clone()], ..Default::default() };
        let r = Renderer::new(&g, &layout, &scene, floor(), point_opts(1)).unwrap();
        let idx = g.pixel_index(112, 67);
        let s = g.pixel_center_unchecked(112, 67);
        let f = trace_to_scene(s, Vec2::ZERO, &g);
        assert!(f.x > 200.0);
        let m = r.render(&LedPattern::unit(&g, idx)).unwrap();
        let lit: Vec<usize> = (0..m.data.len()).filter(|&k| m.data[k] > 0.0).collect();
        assert_eq!(lit.len(), 1);
        let want = mirror.reflect_point(f.extend(g.z_proj)).xy();
        let got = m.raster.center(lit[0]);
        assert!((got.x - want.x).abs() <= 1.0 && (got.y - want.y).abs() <= 1.0, "{got:?} {want:?}");
    }

    #[test]
    fn target_hits_recorded_top_down() {
        let g = geom();
        let layout = one_lens(Vec2::ZERO);
        let scene = Scene {
            target: Some(Target::Box { min: Vec3::new(-50.0, -50.0, 1500.0), max: Vec3::new(50.0, 50.0, 1650.0) }),
            ..Default::default()
        };
        let r = Renderer::new(&g, &layout, &scene, floor(), RenderOptions::default()).unwrap();
        let m = r.render(&LedPattern::all_on(&g)).unwrap();
        let e = r.emitted(&LedPattern::all_on(&g));
        // flux is conserved up to what leaves the raster
        assert!(m.total() <= e * (1.0 + 1e-12));
        assert!(m.value_at(Vec2::ZERO).unwrap() > 0.0);
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let g = geom();
        let centers: Vec<Vec2> =
            (0..20).map(|i| Vec2::new(-300.0 + 40.0 * i as f64, (i % 3) as f64 * 40.0 - 40.0)).collect();
        let layout = LensLayout::from_centers(&centers, 19.0, 100.0, 1.0);
        let scene = Scene {
            target: Some(Target::Sphere { center: Vec3::new(0.0, 0.0, 1550.0), radius: 100.0 }),
            ..Default::default()
        };
        let raster = Raster::new(Rect::centered(700.0, 500.0), 5.0);
        let r = Renderer::new(&g, &layout, &scene, raster, RenderOptions::default()).unwrap();
        let p = LedPattern::all_on(&g);
        let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| r.render(&p).unwrap());
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| r.render(&p).unwrap());
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn sparse_column_matches_full_render() {
        let g = geom();
        let layout = LensLayout::from_centers(&[Vec2::ZERO, Vec2::new(60.0, 10.0)], 19.0, 100.0, 1.0);
        let scene = Scene {
            target: Some(Target::Sphere { center: Vec3::new(0.0, 0.0, 1550.0), radius: 100.0 }),
            ..Default::default()
        };
        let r = Renderer::new(
            &g,
            &layout,
            &scene,
            Raster::new(Rect::centered(700.0, 500.0), 10.0),
            RenderOptions::default(),
        )
        .unwrap();
        for idx in [g.pixel_index(120, 67), g.pixel_index(130, 70), g.pixel_index(5, 5)] {
            let full = r.render(&LedPattern::unit(&g, idx)).unwrap();
            let mut dense = vec![0.0; full.data.len()];
            for (k, w) in r.render_pixel(idx) {
                dense[k] = w;
            }
            for (a, b) in dense.iter().zip(&full.data) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{a} {b}");
            }
        }
    }
}
