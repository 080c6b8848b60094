use rayon::prelude::*;

use super::hull::{convex_contains, convex_hull};
use crate::illumination::LedPattern;
use crate::math::{Vec2, Vec3};
use crate::optics::project_to_source;
use crate::scene::{LensLayout, SystemGeometry};

/// Pixels under the convex hull of the markers' projections through each
/// lens, dilated by `dilation` pixels (square neighbourhood), are turned off.
pub fn geometry_pattern(layout: &LensLayout, geom: &SystemGeometry, markers: &[Vec3], dilation: usize) -> LedPattern {
    let per_lens: Vec<Vec<usize>> =
        layout.lenses.par_iter().map(|l| lens_off_pixels(l.center, geom, markers)).collect();
    let mut off = vec![false; geom.pixel_count()];
    for idx in per_lens.into_iter().flatten() {
        off[idx] = true;
    }
    let off = if dilation > 0 { dilate(&off, geom.led_cols, geom.led_rows, dilation) } else { off };
    LedPattern::with_off(geom.led_cols, geom.led_rows, &off)
}

/// Off pixels for a single lens, before dilation.
pub fn lens_off_pixels(lens: Vec2, geom: &SystemGeometry, markers: &[Vec3]) -> Vec<usize> {
    // work in fractional pixel coordinates, where pixel centres are integers
    let pts: Vec<Vec2> =
        markers.iter().filter_map(|&m| project_to_source(m, lens, geom)).map(|s| geom.pixel_coords_f(s)).collect();
    let hull = convex_hull(&pts);
    let (cols, rows) = (geom.led_cols as i64, geom.led_rows as i64);
    let mut out = Vec::new();
    let mark = |c: i64, r: i64, out: &mut Vec<usize>| {
        if c >= 0 && r >= 0 && c < cols && r < rows {
            out.push(geom.pixel_index(c as usize, r as usize));
        }
    };
    match hull.len() {
        0 => {}
        1 => mark(hull[0].x.round() as i64, hull[0].y.round() as i64, &mut out),
        2 => {
            // nearest pixels along the segment
            let steps = ((hull[1] - hull[0]).norm() * 4.0).ceil().max(1.0) as usize;
            for i in 0..=steps {
                let p = hull[0] + (hull[1] - hull[0]) * (i as f64 / steps as f64);
                mark(p.x.round() as i64, p.y.round() as i64, &mut out);
            }
            out.sort_unstable();
            out.dedup();
        }
        _ => {
            let (mut lo, mut hi) = (hull[0], hull[0]);
            for p in &hull {
                lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            let c0 = (lo.x.ceil() as i64).max(0);
            let c1 = (hi.x.floor() as i64).min(cols - 1);
            let r0 = (lo.y.ceil() as i64).max(0);
            let r1 = (hi.y.floor() as i64).min(rows - 1);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    if convex_contains(&hull, Vec2::new(c as f64, r as f64)) {
                        mark(c, r, &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Square (Chebyshev) dilation of a row-major mask.
pub fn dilate(mask: &[bool], cols: usize, rows: usize, radius: usize) -> Vec<bool> {
    // separable: rows first, then columns
    let mut tmp = vec![false; mask.len()];
    for r in 0..rows {
        for c in 0..cols {
            if mask[r * cols + c] {
                for cc in c.saturating_sub(radius)..=(c + radius).min(cols - 1) {
                    tmp[r * cols + cc] = true;
                }
            }
        }
    }
    let mut out = vec![false; mask.len()];
    for r in 0..rows {
        for c in 0..cols {
            if tmp[r * cols + c] {
                for rr in r.saturating_sub(radius)..=(r + radius).min(rows - 1) {
                    out[rr * cols + c] = true;
                }
            }
        }
    }
    out
}
