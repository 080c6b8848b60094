use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Aabb, Vec2, Vec3};

const EPS_T: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Self { origin, dir }
    }

    pub fn through(from: Vec3, to: Vec3) -> Self {
        Self { origin: from, dir: to - from }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }

    /// Parameter where the ray crosses the horizontal plane `z`.
    #[inline]
    pub fn t_at_z(&self, z: f64) -> Option<f64> {
        if self.dir.z == 0.0 {
            return None;
        }
        let t = (z - self.origin.z) / self.dir.z;
        (t > EPS_T).then_some(t)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    /// Geometric normal, not necessarily facing the ray.
    pub normal: Vec3,
}

#[derive(Debug, Clone, Copy)]
pub struct SurfaceSample {
    pub point: Vec3,
    /// Outward unit normal.
    pub normal: Vec3,
    pub area: f64,
}

/// The projection target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    /// Axis-aligned box.
    Box {
        min: Vec3,
        max: Vec3,
    },
    /// Indexed triangle list with outward (counter-clockwise) winding.
    Mesh {
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
    },
}

impl Target {
    pub fn validate(&self) -> Result<()> {
        match self {
            Target::Sphere { center, radius } => {
                if !(*radius > 0.0) || !center.is_finite() {
                    return Err(Error::schema("scene.target.radius", "sphere radius must be > 0"));
                }
            }
            Target::Box { min, max } => {
                if !(min.x < max.x && min.y < max.y && min.z < max.z) {
                    return Err(Error::schema("scene.target", "box requires min < max on every axis"));
                }
            }
            Target::Mesh { vertices, triangles } => {
                if triangles.is_empty() {
                    return Err(Error::schema("scene.target.triangles", "mesh has no triangles"));
                }
                for t in triangles {
                    if t.iter().any(|&i| i >= vertices.len()) {
                        return Err(Error::schema("scene.target.triangles", "triangle index out of range"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            Target::Sphere { center, radius } => {
                let r = Vec3::new(*radius, *radius, *radius);
                Aabb { min: *center - r, max: *center + r }
            }
            Target::Box { min, max } => Aabb { min: *min, max: *max },
            Target::Mesh { vertices, .. } => Aabb::from_points(vertices.iter().copied()),
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Target::Mesh { .. })
    }

    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        match self {
            Target::Sphere { center, radius } => intersect_sphere(ray, *center, *radius, t_max),
            Target::Box { min, max } => intersect_box(ray, *min, *max, t_max),
            Target::Mesh { vertices, triangles } => {
                let mut best: Option<Hit> = None;
                for tri in triangles {
                    let lim = best.map_or(t_max, |h| h.t);
                    if let Some(h) = intersect_triangle(ray, vertices[tri[0]], vertices[tri[1]], vertices[tri[2]], lim)
                    {
                        best = Some(h);
                    }
                }
                best
            }
        }
    }

    /// Whether the top-down silhouette covers `p`.
    pub fn silhouette_contains(&self, p: Vec2) -> bool {
        match self {
            Target::Sphere { center, radius } => p.dist(center.xy()) <= *radius,
            Target::Box { min, max } => p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y,
            Target::Mesh { vertices, triangles } => triangles
                .iter()
                .any(|t| point_in_triangle_2d(p, vertices[t[0]].xy(), vertices[t[1]].xy(), vertices[t[2]].xy())),
        }
    }

    pub fn surface_area(&self) -> f64 {
        match self {
            Target::Sphere { radius, .. } => 4.0 * std::f64::consts::PI * radius * radius,
            Target::Box { min, max } => {
                let d = *max - *min;
                2.0 * (d.x * d.y + d.y * d.z + d.x * d.z)
            }
            Target::Mesh { vertices, triangles } => {
                triangles.iter().map(|t| tri_area(vertices[t[0]], vertices[t[1]], vertices[t[2]])).sum()
            }
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance_to_surface(&self, p: Vec3) -> f64 {
        match self {
            Target::Sphere { center, radius } => ((p - *center).norm() - radius).abs(),
            Target::Box { min, max } => {
                let out = Vec3::new(
                    (min.x - p.x).max(0.0).max(p.x - max.x),
                    (min.y - p.y).max(0.0).max(p.y - max.y),
                    (min.z - p.z).max(0.0).max(p.z - max.z),
                );
                let outside = out.norm();
                if outside > 0.0 {
                    outside
                } else {
                    let dx = (p.x - min.x).min(max.x - p.x);
                    let dy = (p.y - min.y).min(max.y - p.y);
                    let dz = (p.z - min.z).min(max.z - p.z);
                    dx.min(dy).min(dz)
                }
            }
            Target::Mesh { vertices, triangles } => triangles
                .iter()
                .map(|t| point_triangle_distance(p, vertices[t[0]], vertices[t[1]], vertices[t[2]]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `k` area-weighted surface samples.
    pub fn sample_surface<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<SurfaceSample> {
        let area = self.surface_area() / k.max(1) as f64;
        let mut out = Vec::with_capacity(k);
        match self {
            Target::Sphere { center, radius } => {
                for _ in 0..k {
                    let z: f64 = rng.gen_range(-1.0..=1.0);
                    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let n = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
                    out.push(SurfaceSample { point: *center + n * *radius, normal: n, area });
                }
            }
            Target::Box { min, max } => {
                let d = *max - *min;
                let faces = [
                    (d.y * d.z, Vec3::new(-1.0, 0.0, 0.0)),
                    (d.y * d.z, Vec3::new(1.0, 0.0, 0.0)),
                    (d.x * d.z, Vec3::new(0.0, -1.0, 0.0)),
                    (d.x * d.z, Vec3::new(0.0, 1.0, 0.0)),
                    (d.x * d.y, Vec3::new(0.0, 0.0, -1.0)),
                    (d.x * d.y, Vec3::new(0.0, 0.0, 1.0)),
                ];
                let total: f64 = faces.iter().map(|f| f.0).sum();
                for _ in 0..k {
                    let mut pick = rng.gen_range(0.0..total);
                    let mut face = 5;
                    for (i, f) in faces.iter().enumerate() {
                        if pick < f.0 {
                            face = i;
                            break;
                        }
                        pick -= f.0;
                    }
                    let n = faces[face].1;
                    let (u, v): (f64, f64) = (rng.gen(), rng.gen());
                    let p = match face {
                        0 | 1 => Vec3::new(if face == 0 { min.x } else { max.x }, min.y + u * d.y, min.z + v * d.z),
                        2 | 3 => Vec3::new(min.x + u * d.x, if face == 2 { min.y } else { max.y }, min.z + v * d.z),
                        _ => Vec3::new(min.x + u * d.x, min.y + v * d.y, if face == 4 { min.z } else { max.z }),
                    };
                    out.push(SurfaceSample { point: p, normal: n, area });
                }
            }
            Target::Mesh { vertices, triangles } => {
                let mut cdf = Vec::with_capacity(triangles.len());
                let mut acc = 0.0;
                for t in triangles {
                    acc += tri_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
                    cdf.push(acc);
                }
                for _ in 0..k {
                    let x = rng.gen_range(0.0..acc);
                    let i = cdf.partition_point(|&c| c <= x).min(triangles.len() - 1);
                    let [a, b, c] = [vertices[triangles[i][0]], vertices[triangles[i][1]], vertices[triangles[i][2]]];
                    let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
                    if u + v > 1.0 {
                        u = 1.0 - u;
                        v = 1.0 - v;
                    }
                    let p = a + (b - a) * u + (c - a) * v;
                    let n = (b - a).cross(c - a).normalized();
                    out.push(SurfaceSample { point: p, normal: n, area });
                }
            }
        }
        out
    }

    pub fn translated(&self, by: Vec3) -> Target {
        self.mapped(|p| p + by)
    }

    /// Applies a rigid point map. Spheres keep their radius, boxes are
    /// re-fitted around the mapped corners.
    pub fn mapped<F: Fn(Vec3) -> Vec3>(&self, f: F) -> Target {
        match self {
            Target::Sphere { center, radius } => Target::Sphere { center: f(*center), radius: *radius },
            Target::Box { min, max } => {
                let corners = box_corners(*min, *max).map(&f);
                let b = Aabb::from_points(corners);
                Target::Box { min: b.min, max: b.max }
            }
            Target::Mesh { vertices, triangles } => {
                Target::Mesh { vertices: vertices.iter().map(|&v| f(v)).collect(), triangles: triangles.clone() }
            }
        }
    }
}

pub(crate) fn box_corners(min: Vec3, max: Vec3) -> [Vec3; 8] {
    [
        Vec3::new(min.x, min.y, min.z),
        Vec3::new(max.x, min.y, min.z),
        Vec3::new(min.x, max.y, min.z),
        Vec3::new(max.x, max.y, min.z),
        Vec3::new(min.x, min.y, max.z),
        Vec3::new(max.x, min.y, max.z),
        Vec3::new(min.x, max.y, max.z),
        Vec3::new(max.x, max.y, max.z),
    ]
}

/// Planar rectangular mirror spanned by orthonormal axes `u`, `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mirror {
    pub center: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub half_u: f64,
    pub half_v: f64,
    #[serde(default = "yes")]
    pub specular: bool,
}

fn yes() -> bool {
    true
}

impl Mirror {
    pub fn normal(&self) -> Vec3 {
        self.u.cross(self.v).normalized()
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |a: Vec3| (a.norm() - 1.0).abs() < 1e-9;
        if !unit(self.u) || !unit(self.v) || self.u.dot(self.v).abs() > 1e-9 {
            return Err(Error::schema("scene.mirrors", "mirror axes u, v must be orthonormal"));
        }
        if !(self.half_u > 0.0 && self.half_v > 0.0) {
            return Err(Error::schema("scene.mirrors", "mirror half extents must be > 0"));
        }
        Ok(())
    }

    pub fn corners(&self) -> [Vec3; 4] {
        let (a, b) = (self.u * self.half_u, self.v * self.half_v);
        [self.center - a - b, self.center + a - b, self.center - a + b, self.center + a + b]
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.corners())
    }

    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        let n = self.normal();
        let denom = ray.dir.dot(n);
        if denom == 0.0 {
            return None;
        }
        let t = (self.center - ray.origin).dot(n) / denom;
        if !(t > EPS_T && t < t_max) {
            return None;
        }
        let p = ray.at(t);
        let d = p - self.center;
        (d.dot(self.u).abs() <= self.half_u && d.dot(self.v).abs() <= self.half_v).then_some(Hit {
            t,
            point: p,
            normal: n,
        })
    }

    /// Mirror image of a point across the mirror plane.
    pub fn reflect_point(&self, p: Vec3) -> Vec3 {
        let n = self.normal();
        p - n * (2.0 * (p - self.center).dot(n))
    }
}

/// An opaque absorber used for shadow studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Occluder {
    /// Horizontal disk.
    Disk { center: Vec3, radius: f64 },
    /// Horizontal bar of half-width `half_width` along segment `a`-`b` at height `z`.
    Segment { a: Vec2, b: Vec2, z: f64, half_width: f64 },
}

impl Occluder {
    fn z(&self) -> f64 {
        match self {
            Occluder::Disk { center, .. } => center.z,
            Occluder::Segment { z, .. } => *z,
        }
    }

    pub fn aabb(&self) -> Aabb {
        match self {
            Occluder::Disk { center, radius } => Aabb {
                min: Vec3::new(center.x - radius, center.y - radius, center.z),
                max: Vec3::new(center.x + radius, center.y + radius, center.z),
            },
            Occluder::Segment { a, b, z, half_width } => {
                let w = *half_width;
                Aabb {
                    min: Vec3::new(a.x.min(b.x) - w, a.y.min(b.y) - w, *z),
                    max: Vec3::new(a.x.max(b.x) + w, a.y.max(b.y) + w, *z),
                }
            }
        }
    }

    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        let t = ray.t_at_z(self.z())?;
        if t >= t_max {
            return None;
        }
        let p = ray.at(t);
        let inside = match self {
            Occluder::Disk { center, radius } => p.xy().dist(center.xy()) <= *radius,
            Occluder::Segment { a, b, half_width, .. } => segment_distance(p.xy(), *a, *b) <= *half_width,
        };
        inside.then_some(Hit { t, point: p, normal: Vec3::new(0.0, 0.0, -1.0) })
    }
}

/// Scene content below the lens plate. The floor is implicit at `z_proj`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub target: Option<Target>,
    pub markers: Vec<Vec3>,
    pub mirrors: Vec<Mirror>,
    pub occluders: Vec<Occluder>,
}

/// What a ray hit first.
#[derive(Debug, Clone, Copy)]
pub enum SceneHit {
    Floor(Hit),
    Target(Hit),
    Mirror(usize, Hit),
    Occluder,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = &self.target {
            t.validate()?;
            for (i, m) in self.markers.iter().enumerate() {
                let d = t.distance_to_surface(*m);
                if d > 1e-6 {
                    return Err(Error::Invariant(format!("marker {i} lies {d} mm off the target surface (> 1e-6)")));
                }
            }
        } else if !self.markers.is_empty() {
            return Err(Error::schema("scene.markers", "markers given without a target"));
        }
        for m in &self.mirrors {
            m.validate()?;
        }
        Ok(())
    }

    /// Bounding boxes of every object that can intercept a ray.
    pub fn obstacle_boxes(&self) -> Vec<Aabb> {
        let mut v: Vec<Aabb> = self.target.iter().map(Target::aabb).collect();
        v.extend(self.mirrors.iter().map(Mirror::aabb));
        v.extend(self.occluders.iter().map(Occluder::aabb));
        v
    }

    pub fn has_obstacles(&self) -> bool {
        self.target.is_some() || !self.mirrors.is_empty() || !self.occluders.is_empty()
    }

    /// First intersection along `ray`, considering mirrors only when
    /// `with_mirrors` is set. Rays that never reach `floor_z` return `None`.
    pub fn trace(&self, ray: &Ray, floor_z: f64, with_mirrors: bool, skip_mirror: Option<usize>) -> Option<SceneHit> {
        let mut t_max = ray.t_at_z(floor_z).unwrap_or(f64::INFINITY);
        let mut best = if t_max.is_finite() {
            Some(SceneHit::Floor(Hit { t: t_max, point: ray.at(t_max), normal: Vec3::new(0.0, 0.0, -1.0) }))
        } else {
            None
        };
        if let Some(t) = &self.target {
            if let Some(h) = t.intersect(ray, t_max) {
                t_max = h.t;
                best = Some(SceneHit::Target(h));
            }
        }
        if with_mirrors {
            for (i, m) in self.mirrors.iter().enumerate() {
                if Some(i) == skip_mirror || !m.specular {
                    continue;
                }
                if let Some(h) = m.intersect(ray, t_max) {
                    t_max = h.t;
                    best = Some(SceneHit::Mirror(i, h));
                }
            }
        }
        for o in &self.occluders {
            if o.intersect(ray, t_max).is_some() {
                return Some(SceneHit::Occluder);
            }
        }
        best
    }

    /// True if nothing blocks the open segment `a`-`b`.
    pub fn segment_clear(&self, a: Vec3, b: Vec3, include_target: bool) -> bool {
        let ray = Ray::through(a, b);
        let lim = 1.0 - 1e-7;
        if include_target {
            if let Some(t) = &self.target {
                if t.intersect(&ray, lim).is_some() {
                    return false;
                }
            }
        }
        if self.occluders.iter().any(|o| o.intersect(&ray, lim).is_some()) {
            return false;
        }
        true
    }
}

fn intersect_sphere(ray: &Ray, c: Vec3, r: f64, t_max: f64) -> Option<Hit> {
    let oc = ray.origin - c;
    let a = ray.dir.dot(ray.dir);
    let b = oc.dot(ray.dir);
    let cc = oc.dot(oc) - r * r;
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    for t in [(-b - sq) / a, (-b + sq) / a] {
        if t > EPS_T && t < t_max {
            let p = ray.at(t);
            return Some(Hit { t, point: p, normal: (p - c) / r });
        }
    }
    None
}

fn intersect_box(ray: &Ray, min: Vec3, max: Vec3, t_max: f64) -> Option<Hit> {
    let o = [ray.origin.x, ray.origin.y, ray.origin.z];
    let d = [ray.dir.x, ray.dir.y, ray.dir.z];
    let lo = [min.x, min.y, min.z];
    let hi = [max.x, max.y, max.z];
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    let mut axis0 = 0;
    let mut axis1 = 0;
    for k in 0..3 {
        if d[k] == 0.0 {
            if o[k] < lo[k] || o[k] > hi[k] {
                return None;
            }
            continue;
        }
        let mut a = (lo[k] - o[k]) / d[k];
        let mut b = (hi[k] - o[k]) / d[k];
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        if a > t0 {
            t0 = a;
            axis0 = k;
        }
        if b < t1 {
            t1 = b;
            axis1 = k;
        }
    }
    if t0 > t1 {
        return None;
    }
    let (t, axis, entering) = if t0 > EPS_T {
        (t0, axis0, true)
    } else if t1 > EPS_T {
        (t1, axis1, false)
    } else {
        return None;
    };
    if t >= t_max {
        return None;
    }
    let mut n = [0.0; 3];
    // entering: normal opposes the ray direction
    n[axis] = if entering { -d[axis].signum() } else { d[axis].signum() };
    Some(Hit { t, point: ray.at(t), normal: Vec3::new(n[0], n[1], n[2]) })
}

fn intersect_triangle(ray: &Ray, a: Vec3, b: Vec3, c: Vec3, t_max: f64) -> Option<Hit> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > EPS_T && t < t_max).then(|| Hit { t, point: ray.at(t), normal: e1.cross(e2).normalized() })
}

fn tri_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * (b - a).cross(c - a).norm()
}

pub fn point_in_triangle_2d(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    let d1 = (b - a).cross(p - a);
    let d2 = (c - b).cross(p - b);
    let d3 = (a - c).cross(p - c);
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) };
    p.dist(a + ab * t)
}

fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    // Closest point by Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (p - a).norm();
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (p - b).norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (p - c).norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (p - (a + ab * v + ac * w)).norm()
}
