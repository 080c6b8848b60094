use crate::error::{Error, Result};
use crate::math::{Rect, Vec2};
use crate::scene::{LensLayout, LensSpec, SystemGeometry};

/// Hexagonal lattice of centres at `pitch`, anchored at the lower-left corner
/// of `region`, odd rows shifted by half a pitch, clipped to `region`.
pub fn hex_centers(region: &Rect, pitch: f64) -> Vec<Vec2> {
    let dy = pitch * 3f64.sqrt() / 2.0;
    let mut out = Vec::new();
    let mut row = 0usize;
    loop {
        let y = region.y_min + row as f64 * dy;
        if y > region.y_max {
            break;
        }
        let off = if row % 2 == 1 { pitch / 2.0 } else { 0.0 };
        let mut k = 0usize;
        loop {
            let x = region.x_min + off + k as f64 * pitch;
            if x > region.x_max {
                break;
            }
            out.push(Vec2::new(x, y));
            k += 1;
        }
        row += 1;
    }
    out
}

/// Closest packing of disks of radius `r + delta / 2` over the placement
/// region.
pub fn periodic_baseline(geom: &SystemGeometry, lens: &LensSpec) -> LensLayout {
    periodic_in(&geom.placement_region, lens)
}

pub fn periodic_in(region: &Rect, lens: &LensSpec) -> LensLayout {
    LensLayout::from_centers(&hex_centers(region, lens.spacing()), lens.radius, lens.focal_length, lens.margin)
}

/// Periodic packing over a centred sub-region shrunk until its lens count
/// is within `rel_tol` of `target`; returns the layout and the region used.
pub fn periodic_matched(
    geom: &SystemGeometry,
    lens: &LensSpec,
    target: usize,
    rel_tol: f64,
) -> Result<(LensLayout, Rect)> {
    let full = geom.placement_region;
    let c = full.center();
    let mut best: Option<(usize, LensLayout, Rect)> = None;
    for step in 0..=400 {
        let s = 1.0 - step as f64 * 0.0025;
        if s <= 0.0 {
            break;
        }
        let region = Rect::new(
            c.x - full.width() * 0.5 * s,
            c.x + full.width() * 0.5 * s,
            c.y - full.height() * 0.5 * s,
            c.y + full.height() * 0.5 * s,
        );
        let layout = periodic_in(&region, lens);
        let gap = layout.len().abs_diff(target);
        if best.as_ref().is_none_or(|b| gap < b.0) {
            best = Some((gap, layout, region));
        }
        if gap == 0 {
            break;
        }
    }
    let (gap, layout, region) = best.ok_or(Error::Empty("periodic layout"))?;
    if gap as f64 > rel_tol * target as f64 {
        return Err(Error::Consistency(format!(
            "no periodic packing within {}% of {target} lenses (closest {})",
            rel_tol * 100.0,
            layout.len()
        )));
    }
    Ok((layout, region))
}
