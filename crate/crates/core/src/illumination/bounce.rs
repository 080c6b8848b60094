use super::map::{scene_masks, IrradianceMap};
use crate::math::Vec3;
use crate::scene::{Ray, Scene, SystemGeometry};

/// Approximate block size for floor emitters, mm.
const BLOCK_MM: f64 = 10.0;

/// Adds one Lambertian bounce from the lit floor onto the target's top-down
/// visible surface. The floor outside the silhouette is grouped into blocks
/// that re-emit `albedo` of their flux upwards; each target cell receives by
/// the point-to-patch form factor. Occlusion by other objects is ignored.
pub fn apply_diffuse_bounce(map: &mut IrradianceMap, scene: &Scene, geom: &SystemGeometry, albedo: f64) {
    let Some(target) = &scene.target else { return };
    let rs = map.raster;
    let (tmask, _) = scene_masks(&rs, scene, 0.0);
    let b = ((BLOCK_MM / rs.cell).round() as usize).max(1);
    let (bx, by) = (rs.nx.div_ceil(b), rs.ny.div_ceil(b));
    let mut flux = vec![0.0; bx * by];
    let mut moment = vec![(0.0, 0.0); bx * by];
    for k in 0..rs.len() {
        if tmask[k] || map.data[k] == 0.0 {
            continue;
        }
        let (ix, iy) = (k % rs.nx, k / rs.nx);
        let j = (iy / b) * bx + ix / b;
        let c = rs.center(k);
        flux[j] += map.data[k];
        moment[j].0 += map.data[k] * c.x;
        moment[j].1 += map.data[k] * c.y;
    }
    let emitters: Vec<(Vec3, f64)> = flux
        .iter()
        .zip(&moment)
        .filter(|(&f, _)| f > 0.0)
        .map(|(&f, &(mx, my))| (Vec3::new(mx / f, my / f, geom.z_proj), albedo * f))
        .collect();
    let cell_area = rs.cell * rs.cell;
    for k in 0..rs.len() {
        if !tmask[k] {
            continue;
        }
        let c = rs.center(k);
        let ray = Ray::new(c.extend(geom.z_lens), Vec3::new(0.0, 0.0, 1.0));
        let Some(hit) = target.intersect(&ray, f64::INFINITY) else { continue };
        let n = if hit.normal.z > 0.0 { -hit.normal } else { hit.normal };
        let patch = cell_area / n.z.abs().max(1e-3);
        let mut e = 0.0;
        for &(q, phi) in &emitters {
            let d = q - hit.point;
            let d2 = d.dot(d);
            let dl = d2.sqrt();
            let cos_r = n.dot(d) / dl;
            let cos_e = d.z / dl;
            if cos_r > 0.0 && cos_e > 0.0 {
                e += phi * cos_e * cos_r / (std::f64::consts::PI * d2);
            }
        }
        map.data[k] += e * patch;
    }
}
