use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::illumination::LedPattern;
use crate::math::Vec3;
use crate::patterns::geometry_pattern;
use crate::scene::{LensLayout, SystemGeometry};

/// Frame period at 60 Hz, ms.
pub const FRAME_BUDGET_MS: f64 = 1000.0 / 60.0;

/// Rigid pose: rotation (degrees about x, then y, then z) about a pivot,
/// then translation (mm).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Pose {
    pub translation: Vec3,
    pub rotation_deg: Vec3,
}

impl Pose {
    pub fn is_finite(&self) -> bool {
        self.translation.is_finite() && self.rotation_deg.is_finite()
    }

    pub fn apply(&self, p: Vec3, pivot: Vec3) -> Vec3 {
        let (sx, cx) = self.rotation_deg.x.to_radians().sin_cos();
        let (sy, cy) = self.rotation_deg.y.to_radians().sin_cos();
        let (sz, cz) = self.rotation_deg.z.to_radians().sin_cos();
        let d = p - pivot;
        let d = Vec3::new(d.x, cx * d.y - sx * d.z, sx * d.y + cx * d.z);
        let d = Vec3::new(cy * d.x + sy * d.z, d.y, -sy * d.x + cy * d.z);
        let d = Vec3::new(cz * d.x - sz * d.y, sz * d.x + cz * d.y, d.z);
        pivot + d + self.translation
    }

    fn lerp(&self, o: &Pose, t: f64) -> Pose {
        Pose {
            translation: self.translation + (o.translation - self.translation) * t,
            rotation_deg: self.rotation_deg + (o.rotation_deg - self.rotation_deg) * t,
        }
    }
}

/// Target poses for consecutive 60 Hz frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>) -> Result<Self> {
        let t = Self { poses };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.poses.is_empty() {
            return Err(Error::Invariant("trajectory needs at least one frame".into()));
        }
        if let Some(i) = self.poses.iter().position(|p| !p.is_finite()) {
            return Err(Error::Invariant(format!("trajectory pose {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// `frames` copies of the identity pose.
    pub fn stationary(frames: usize) -> Result<Self> {
        Self::new(vec![Pose::default(); frames])
    }

    /// One lap of a horizontal circle of `radius` mm, turning the target
    /// once about the vertical axis on the way.
    pub fn circle(frames: usize, radius: f64) -> Result<Self> {
        let poses = (0..frames)
            .map(|f| {
                let a = std::f64::consts::TAU * f as f64 / frames.max(1) as f64;
                Pose {
                    translation: Vec3::new(radius * a.cos() - radius, radius * a.sin(), 0.0),
                    rotation_deg: Vec3::new(0.0, 0.0, a.to_degrees()),
                }
            })
            .collect();
        Self::new(poses)
    }

    /// Linear interpolation between keyframes `(frame, pose)` over `frames`
    /// frames; poses are held before the first and after the last key.
    pub fn from_keyframes(keys: &[(usize, Pose)], frames: usize) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::Invariant("trajectory needs at least one keyframe".into()));
        }
        let mut keys = keys.to_vec();
        keys.sort_by_key(|k| k.0);
        let poses = (0..frames)
            .map(|f| {
                let i = keys.partition_point(|k| k.0 <= f);
                match i {
                    0 => keys[0].1,
                    i if i == keys.len() => keys[i - 1].1,
                    i => {
                        let (a, b) = (&keys[i - 1], &keys[i]);
                        a.1.lerp(&b.1, (f - a.0) as f64 / (b.0 - a.0) as f64)
                    }
                }
            })
            .collect();
        Self::new(poses)
    }

    /// Keyframe CSV: `frame,tx,ty,tz,rx_deg,ry_deg,rz_deg`.
    pub fn from_csv(text: &str, frames: usize) -> Result<Self> {
        let mut keys = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (n == 0 && line.starts_with("frame")) {
                continue;
            }
            let bad = |msg: String| Error::Format { what: "trajectory CSV", msg: format!("line {}: {msg}", n + 1) };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 7 {
                return Err(bad(format!("expected 7 fields, got {}", f.len())));
            }
            let frame: usize = f[0].parse().map_err(|e| bad(format!("{e}")))?;
            let mut v = [0.0; 6];
            for (slot, s) in v.iter_mut().zip(&f[1..]) {
                *slot = s.parse().map_err(|e| bad(format!("{e}")))?;
            }
            keys.push((
                frame,
                Pose { translation: Vec3::new(v[0], v[1], v[2]), rotation_deg: Vec3::new(v[3], v[4], v[5]) },
            ));
        }
        Self::from_keyframes(&keys, frames)
    }
}

/// Per-frame pattern computation times with summary percentiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyReport {
    pub times_ms: Vec<f64>,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
    /// Frames slower than [`FRAME_BUDGET_MS`].
    pub missed: usize,
}

impl LatencyReport {
    pub fn from_times(times_ms: Vec<f64>) -> Result<Self> {
        if times_ms.is_empty() {
            return Err(Error::Empty("latency samples"));
        }
        let mut s = times_ms.clone();
        s.sort_by(f64::total_cmp);
        // nearest-rank percentiles
        let pct = |p: f64| s[((p * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
        Ok(Self {
            p50: pct(0.5),
            p95: pct(0.95),
            max: s[s.len() - 1],
            missed: times_ms.iter().filter(|&&t| t > FRAME_BUDGET_MS).count(),
            times_ms,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("frame,ms\n");
        for (i, t) in self.times_ms.iter().enumerate() {
            let _ = writeln!(s, "{i},{t}");
        }
        s
    }
}

/// Output of one benchmark run.
#[derive(Debug, Clone)]
pub struct DynamicRun {
    pub report: LatencyReport,
    pub patterns: Vec<LedPattern>,
}

/// Moves the markers along `trajectory` and recomputes the geometry-based
/// pattern every frame. Timing covers the marker transform and the pattern
/// computation only. Patterns are kept when `keep` is set.
pub fn bench_dynamic(
    layout: &LensLayout,
    geom: &SystemGeometry,
    markers: &[Vec3],
    trajectory: &Trajectory,
    dilation: usize,
    keep: bool,
) -> Result<DynamicRun> {
    trajectory.validate()?;
    if markers.is_empty() {
        return Err(Error::Empty("marker set"));
    }
    let pivot = markers.iter().fold(Vec3::ZERO, |a, &m| a + m) / markers.len() as f64;
    let mut times = Vec::with_capacity(trajectory.len());
    let mut patterns = Vec::new();
    for pose in &trajectory.poses {
        let t0 = Instant::now();
        let moved: Vec<Vec3> = markers.iter().map(|&m| pose.apply(m, pivot)).collect();
        let p = geometry_pattern(layout, geom, &moved, dilation);
        // guard against a zero reading on coarse clocks
        times.push((t0.elapsed().as_secs_f64() * 1e3).max(1e-6));
        if keep {
            patterns.push(p);
        }
    }
    Ok(DynamicRun { report: LatencyReport::from_times(times)?, patterns })
}

/// Deterministic per-frame summary: pose and pattern checksum.
pub fn frames_to_csv(trajectory: &Trajectory, patterns: &[LedPattern]) -> String {
    let mut s = String::from("frame,tx,ty,tz,rx_deg,ry_deg,rz_deg,off_pixels,fnv1a\n");
    for (i, (p, pat)) in trajectory.poses.iter().zip(patterns).enumerate() {
        let (t, r) = (p.translation, p.rotation_deg);
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{},{},{:016x}",
            t.x,
            t.y,
            t.z,
            r.x,
            r.y,
            r.z,
            pat.off_count(),
            fnv1a(&pat.to_pgm())
        );
    }
    s
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Host description printed next to timing results.
pub fn machine_info() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .map(|l| l.split(':').nth(1).unwrap_or("").trim().to_string())
        })
        .unwrap_or_else(|| "unknown CPU".into());
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{cpu}; {threads} hardware threads; {} {}", std::env::consts::OS, std::env::consts::ARCH)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::presets::{sphere_markers, SPHERE_CENTER, SPHERE_RADIUS};
    use crate::math::Vec2;

    #[test]
    fn pose_rotation_is_rigid() {
        let p = Pose { translation: Vec3::new(1.0, 2.0, 3.0), rotation_deg: Vec3::new(30.0, -45.0, 90.0) };
        let pivot = Vec3::new(5.0, 5.0, 5.0);
        let (a, b) = (Vec3::new(0.0, 1.0, 2.0), Vec3::new(-3.0, 4.0, 7.0));
        let d0 = (a - b).norm();
        let d1 = (p.apply(a, pivot) - p.apply(b, pivot)).norm();
        assert!((d0 - d1).abs() < 1e-12);
        let quarter = Pose { rotation_deg: Vec3::new(0.0, 0.0, 90.0), ..Default::default() };
        let r = quarter.apply(Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO);
        assert!((r - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn keyframes_interpolate_and_hold() {
        let k = |f, x| (f, Pose { translation: Vec3::new(x, 0.0, 0.0), ..Default::default() });
        let t = Trajectory::from_keyframes(&[k(2, 0.0), k(6, 8.0)], 9).unwrap();
        let xs: Vec<f64> = t.poses.iter().map(|p| p.translation.x).collect();
        assert_eq!(xs, vec![0.0, 0.0, 0.0, 2.0, 4.0, 6.0, 8.0, 8.0, 8.0]);
        let csv = "frame,tx,ty,tz,rx_deg,ry_deg,rz_deg\n2,0,0,0,0,0,0\n6,8,0,0,0,0,0\n";
        assert_eq!(Trajectory::from_csv(csv, 9).unwrap(), t);
        assert!(Trajectory::from_csv("0,1,2\n", 3).is_err());
        assert!(Trajectory::stationary(0).is_err());
    }

    #[test]
    fn percentiles_are_ordered() {
        let r = LatencyReport::from_times((1..=100).map(|i| i as f64 * 0.2).collect()).unwrap();
        assert_eq!((r.p50, r.p95, r.max), (10.0, 19.0, 20.0));
        assert_eq!(r.missed, 17);
        assert!(r.p50 <= r.p95 && r.p95 <= r.max);
        assert!(LatencyReport::from_times(vec![]).is_err());
    }

    #[test]
    fn stationary_frames_identical() {
        let g = SystemGeometry::prototype();
        let layout =
            LensLayout::from_centers(&[Vec2::ZERO, Vec2::new(60.0, 0.0), Vec2::new(0.0, 60.0)], 19.0, 100.0, 1.0);
        let m = sphere_markers(SPHERE_CENTER, SPHERE_RADIUS);
        let run = bench_dynamic(&layout, &g, &m, &Trajectory::stationary(5).unwrap(), 1, true).unwrap();
        assert_eq!(run.patterns.len(), 5);
        assert!(run.patterns.iter().all(|p| *p == run.patterns[0]));
        assert!(run.report.times_ms.iter().all(|&t| t > 0.0));
    }
}
