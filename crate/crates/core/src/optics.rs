//! Pinhole ray mathematics between the LED plane, the lens plate and the
//! evaluation plane.

use std::fmt::Write as _;

use crate::math::{Vec2, Vec3};
use crate::scene::{LensLayout, SystemGeometry, Z_SRC};

/// LED-plane point that lights `o` (on the evaluation plane) through the
/// pinhole at lens centre `lens`.
#[inline]
pub fn trace_to_source(o: Vec2, lens: Vec2, geom: &SystemGeometry) -> Vec2 {
    lens + (o - lens) * ((Z_SRC - geom.z_lens) / (geom.z_proj - geom.z_lens))
}

/// Evaluation-plane image of LED-plane point `s` through the pinhole at `lens`.
#[inline]
pub fn trace_to_scene(s: Vec2, lens: Vec2, geom: &SystemGeometry) -> Vec2 {
    lens + (lens - s) * ((geom.z_proj - geom.z_lens) / (geom.z_lens - Z_SRC))
}

/// Projects a 3D scene point through the lens centre onto the LED plane.
/// Reduces to [`trace_to_source`] for points on the evaluation plane.
#[inline]
pub fn project_to_source(p: Vec3, lens: Vec2, geom: &SystemGeometry) -> Option<Vec2> {
    let dz = p.z - geom.z_lens;
    if dz <= 0.0 {
        return None;
    }
    Some(lens + (p.xy() - lens) * ((Z_SRC - geom.z_lens) / dz))
}

/// Where one crosstalk image came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrosstalkOrigin {
    /// Lens whose target-lighting pixel is imaged.
    pub source_lens: usize,
    /// Lens the light leaks through.
    pub via_lens: usize,
    pub source: Vec2,
    /// Number of lenses placed when this point first appeared.
    pub generation: usize,
}

/// All `n (n - 1)` crosstalk image positions of a layout, in `(i, j)` order.
#[derive(Debug, Clone, Default)]
pub struct CrosstalkSet {
    pub positions: Vec<Vec2>,
    pub origins: Vec<CrosstalkOrigin>,
}

impl CrosstalkSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Points created when the `generation`-th lens was placed.
    pub fn generation(&self, generation: usize) -> Vec<Vec2> {
        self.positions.iter().zip(&self.origins).filter(|(_, o)| o.generation == generation).map(|(p, _)| *p).collect()
    }

    /// `i,j,s_x,s_y,p_x,p_y` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,s_x,s_y,p_x,p_y\n");
        for (p, o) in self.positions.iter().zip(&self.origins) {
            let _ = writeln!(s, "{},{},{},{},{},{}", o.source_lens, o.via_lens, o.source.x, o.source.y, p.x, p.y);
        }
        s
    }
}

/// Crosstalk images of the target point `o` for every ordered lens pair.
pub fn crosstalk_set(layout: &LensLayout, o: Vec2, geom: &SystemGeometry) -> CrosstalkSet {
    let centers = layout.centers();
    crosstalk_set_of(&centers, o, geom)
}

pub fn crosstalk_set_of(centers: &[Vec2], o: Vec2, geom: &SystemGeometry) -> CrosstalkSet {
    let n = centers.len();
    let sources: Vec<Vec2> = centers.iter().map(|&l| trace_to_source(o, l, geom)).collect();
    let mut set = CrosstalkSet {
        positions: Vec::with_capacity(n * n.saturating_sub(1)),
        origins: Vec::with_capacity(n * n.saturating_sub(1)),
    };
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            set.positions.push(trace_to_scene(sources[i], centers[j], geom));
            set.origins.push(CrosstalkOrigin {
                source_lens: i,
                via_lens: j,
                source: sources[i],
                generation: i.max(j) + 1,
            });
        }
    }
    set
}
