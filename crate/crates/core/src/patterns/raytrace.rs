use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::illumination::{aperture_samples, LedPattern};
use crate::math::{Vec2, Vec3};
use crate::optics::project_to_source;
use crate::scene::{LensLayout, Ray, Scene, SurfaceSample, SystemGeometry, Target};

/// Simulated reciprocity capture: light leaving the lit target traced back
/// through the lens apertures onto the LED plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocityCapture {
    pub cols: usize,
    pub rows: usize,
    pub image: Vec<f64>,
}

impl ReciprocityCapture {
    pub fn max(&self) -> f64 {
        self.image.iter().copied().fold(0.0, f64::max)
    }

    /// Pixels at or above `tau * max` are off, everything else on.
    pub fn threshold(&self, tau: f64) -> Result<LedPattern> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Invariant(format!("0 < tau < 1 required, got {tau}")));
        }
        let max = self.max();
        let off: Vec<bool> = self.image.iter().map(|&v| max > 0.0 && v >= tau * max).collect();
        Ok(LedPattern::with_off(self.cols, self.rows, &off))
    }
}

// Nothing opaque between `a` and `b`; mirrors count as opaque except `skip`.
fn visible(scene: &Scene, a: Vec3, b: Vec3, skip: Option<usize>) -> bool {
    let ray = Ray::through(a, b);
    let lim = 1.0 - 1e-9;
    if let Some(t) = &scene.target {
        if t.intersect(&ray, lim).is_some() {
            return false;
        }
    }
    if scene.occluders.iter().any(|o| o.intersect(&ray, lim).is_some()) {
        return false;
    }
    scene.mirrors.iter().enumerate().all(|(i, m)| Some(i) == skip || !m.specular || m.intersect(&ray, lim).is_none())
}

/// Traces `samples` seeded target-surface points to `aperture` points of
/// every lens (1 = the centre only), directly and by one reflection in each
/// specular mirror. A ray through an aperture point reaches the LED pixel
/// whose in-focus floor image lies on the ray's continuation, so defocused
/// parts of the target spread over neighbouring pixels exactly as in the
/// forward renderer.
pub fn reciprocity_capture(
    layout: &LensLayout,
    geom: &SystemGeometry,
    scene: &Scene,
    samples: usize,
    aperture: usize,
    seed: u64,
) -> Result<ReciprocityCapture> {
    let mut cap = ReciprocityCapture { cols: geom.led_cols, rows: geom.led_rows, image: vec![0.0; geom.pixel_count()] };
    let Some(target) = &scene.target else { return Ok(cap) };
    if aperture == 0 {
        return Err(Error::Invariant("at least one aperture sample per lens required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = surface_samples(target, samples, &mut rng);
    if pts.is_empty() {
        return Err(Error::Empty("target surface sample set"));
    }
    let apertures: Vec<Vec<Vec3>> = layout
        .lenses
        .iter()
        .map(|l| {
            let spin = rng.gen_range(0.0..std::f64::consts::TAU);
            aperture_samples(l.radius, aperture, spin).into_iter().map(|a| (l.center + a).extend(geom.z_lens)).collect()
        })
        .collect();
    let share = 1.0 / aperture as f64;
    // pixel imaged onto the floor where the ray from `a` through `p` lands
    let mut deposit = |a: Vec3, p: Vec3, lens: Vec2, w: f64| {
        let q = a + (p - a) * ((geom.z_proj - a.z) / (p.z - a.z));
        if let Some(s) = project_to_source(q, lens, geom) {
            if let Some((c, r)) = geom.nearest_pixel(s) {
                cap.image[geom.pixel_index(c, r)] += w;
            }
        }
    };
    for smp in &pts {
        // lift off the surface so the start point does not hit itself
        let p = smp.point + smp.normal * 1e-6;
        for (lens, aps) in layout.lenses.iter().zip(&apertures) {
            for &a in aps {
                let d = a - p;
                let cos = smp.normal.dot(d) / d.norm();
                if cos > 0.0 && visible(scene, p, a, None) {
                    // a Lambertian patch's contribution to a pixel is its
                    // solid angle as seen from the lens
                    deposit(a, smp.point, lens.center, share * smp.area * cos / d.dot(d));
                }
                for (mi, m) in scene.mirrors.iter().enumerate() {
                    if !m.specular {
                        continue;
                    }
                    let n = m.normal();
                    // both ends on the reflective side
                    if (p - m.center).dot(n) <= 0.0 || (a - m.center).dot(n) <= 0.0 {
                        continue;
                    }
                    let virt = m.reflect_point(smp.point);
                    let Some(h) = m.intersect(&Ray::through(a, virt), 1.0) else { continue };
                    let leg = h.point - p;
                    let cos = smp.normal.dot(leg) / leg.norm();
                    if cos > 0.0 && visible(scene, p, h.point, Some(mi)) && visible(scene, h.point, a, Some(mi)) {
                        let d = a - virt;
                        deposit(a, virt, lens.center, share * smp.area * cos / d.dot(d));
                    }
                }
            }
        }
    }
    Ok(cap)
}

/// Seeded, deterministic surface samples. Spheres use a randomly rotated
/// Fibonacci lattice and boxes an edge-inclusive grid per face, which keeps
/// the capture far less noisy than independent sampling; meshes are sampled
/// by area.
pub fn surface_samples(target: &Target, k: usize, rng: &mut ChaCha8Rng) -> Vec<SurfaceSample> {
    match target {
        Target::Sphere { center, radius } => {
            let area = target.surface_area() / k.max(1) as f64;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let (spin, offset): (f64, f64) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen());
            (0..k)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + offset) / k as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = spin + i as f64 * golden;
                    let n = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
                    SurfaceSample { point: *center + n * *radius, normal: n, area }
                })
                .collect()
        }
        Target::Box { min, max } => box_grid(*min, *max, k),
        Target::Mesh { .. } => target.sample_surface(k, rng),
    }
}

// Per-face lattice that includes the face edges, with trapezoid weights.
// Thin slivers of a pixel's footprint always run along a silhouette edge,
// so sampling the edges keeps those pixels from being missed.
fn box_grid(min: Vec3, max: Vec3, k: usize) -> Vec<SurfaceSample> {
    let d = max - min;
    let total = 2.0 * (d.x * d.y + d.y * d.z + d.x * d.z);
    let mut out = Vec::with_capacity(k + 64);
    // (origin, u edge, v edge, outward normal)
    let x = Vec3::new(d.x, 0.0, 0.0);
    let y = Vec3::new(0.0, d.y, 0.0);
    let z = Vec3::new(0.0, 0.0, d.z);
    let faces = [
        (min, y, z, Vec3::new(-1.0, 0.0, 0.0)),
        (min + x, y, z, Vec3::new(1.0, 0.0, 0.0)),
        (min, x, z, Vec3::new(0.0, -1.0, 0.0)),
        (min + y, x, z, Vec3::new(0.0, 1.0, 0.0)),
        (min, x, y, Vec3::new(0.0, 0.0, -1.0)),
        (min + z, x, y, Vec3::new(0.0, 0.0, 1.0)),
    ];
    let weights = |n: usize| -> Vec<f64> {
        (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 } else { 1.0 } / (n - 1) as f64).collect()
    };
    for (o, u, v, n) in faces {
        let (a, b) = (u.norm(), v.norm());
        let want = k as f64 * a * b / total;
        let nu = ((want * a / b).sqrt().round() as usize).max(2);
        let nv = ((want / nu as f64).round() as usize).max(2);
        let (wu, wv) = (weights(nu), weights(nv));
        for (j, wj) in wv.iter().enumerate() {
            for (i, wi) in wu.iter().enumerate() {
                let p = o + u * (i as f64 / (nu - 1) as f64) + v * (j as f64 / (nv - 1) as f64);
                out.push(SurfaceSample { point: p, normal: n, area: a * b * wi * wj });
            }
        }
    }
    out
}

/// Binary pattern from a thresholded reciprocity capture; all on when the
/// scene has no target.
pub fn raytrace_pattern(
    layout: &LensLayout,
    geom: &SystemGeometry,
    scene: &Scene,
    tau: f64,
    samples: usize,
    aperture: usize,
    seed: u64,
) -> Result<LedPattern> {
    reciprocity_capture(layout, geom, scene, samples, aperture, seed)?.threshold(tau)
}
