use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::encode_pgm16;
use crate::math::{Rect, Vec2};
use crate::scene::Scene;

/// Axis-aligned cell grid on a horizontal plane, row-major from `y_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Raster {
    pub rect: Rect,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Raster {
    /// Cells of size `cell` covering `rect`; the rect is grown to a whole
    /// number of cells.
    pub fn new(rect: Rect, cell: f64) -> Self {
        assert!(cell > 0.0);
        let count = |len: f64| ((len / cell - 1e-9).ceil() as usize).max(1);
        let (nx, ny) = (count(rect.width()), count(rect.height()));
        let rect = Rect::new(rect.x_min, rect.x_min + nx as f64 * cell, rect.y_min, rect.y_min + ny as f64 * cell);
        Self { rect, cell, nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn center(&self, k: usize) -> Vec2 {
        let (ix, iy) = (k % self.nx, k / self.nx);
        Vec2::new(self.rect.x_min + (ix as f64 + 0.5) * self.cell, self.rect.y_min + (iy as f64 + 0.5) * self.cell)
    }

    #[inline]
    pub fn cell_of(&self, p: Vec2) -> Option<usize> {
        let fx = (p.x - self.rect.x_min) / self.cell;
        let fy = (p.y - self.rect.y_min) / self.cell;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        (ix < self.nx && iy < self.ny).then_some(iy * self.nx + ix)
    }

    /// Cell-aligned coverage of `[x0, x1]` along one axis: `(first index,
    /// overlap lengths)`.
    pub(crate) fn overlaps(lo: f64, cell: f64, n: usize, x0: f64, x1: f64, out: &mut Vec<f64>) -> usize {
        out.clear();
        let a = ((x0 - lo) / cell).floor().max(0.0) as usize;
        let b = (((x1 - lo) / cell).ceil().max(0.0) as usize).min(n);
        for i in a..b {
            let c0 = lo + i as f64 * cell;
            let w = x1.min(c0 + cell) - x0.max(c0);
            out.push(w.max(0.0));
        }
        a
    }
}

/// Deposited irradiance on a horizontal raster with target and environment
/// masks. Values are linear, arbitrary units.
#[derive(Debug, Clone, PartialEq)]
pub struct IrradianceMap {
    pub plane: String,
    pub raster: Raster,
    pub data: Vec<f64>,
    pub target_mask: Vec<bool>,
    pub env_mask: Vec<bool>,
}

/// Target cells are those whose centre lies inside the target's top-down
/// silhouette; environment cells lie outside its footprint box grown by
/// `env_margin`.
pub fn scene_masks(raster: &Raster, scene: &Scene, env_margin: f64) -> (Vec<bool>, Vec<bool>) {
    let n = raster.len();
    match &scene.target {
        None => (vec![false; n], vec![true; n]),
        Some(t) => {
            let zone = t.aabb().xy().expanded(env_margin);
            let mut tm = vec![false; n];
            let mut em = vec![false; n];
            for k in 0..n {
                let c = raster.center(k);
                tm[k] = t.silhouette_contains(c);
                em[k] = !zone.contains(c);
            }
            (tm, em)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MapSidecar {
    pub plane: String,
    pub width: usize,
    pub height: usize,
    pub cell_mm: f64,
    pub x_min_mm: f64,
    pub y_min_mm: f64,
    /// Irradiance represented by the PGM value 65535.
    pub scale: f64,
    pub max: f64,
    pub mean: f64,
}

impl IrradianceMap {
    pub fn zeros(plane: &str, raster: Raster) -> Self {
        let n = raster.len();
        Self { plane: plane.into(), raster, data: vec![0.0; n], target_mask: vec![false; n], env_mask: vec![true; n] }
    }

    pub fn with_masks(mut self, scene: &Scene, env_margin: f64) -> Self {
        let (t, e) = scene_masks(&self.raster, scene, env_margin);
        self.target_mask = t;
        self.env_mask = e;
        self
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn masked<'a>(&'a self, mask: &'a [bool]) -> impl Iterator<Item = f64> + Clone + 'a {
        self.data.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v)
    }

    /// Mean over the target mask.
    pub fn target_mean(&self) -> Result<f64> {
        mean(self.masked(&self.target_mask)).ok_or(Error::Empty("target mask"))
    }

    pub fn value_at(&self, p: Vec2) -> Option<f64> {
        self.raster.cell_of(p).map(|k| self.data[k])
    }

    /// Cell-wise sum.
    pub fn add(&mut self, other: &IrradianceMap) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// 16-bit PGM with the maximum mapped to 65535, plus its sidecar.
    pub fn to_pgm(&self) -> (Vec<u8>, MapSidecar) {
        let max = self.max();
        let scale = if max > 0.0 { max } else { 1.0 };
        let q: Vec<u16> =
            self.data.iter().map(|&v| ((v / scale) * 65535.0).round().clamp(0.0, 65535.0) as u16).collect();
        let side = MapSidecar {
            plane: self.plane.clone(),
            width: self.raster.nx,
            height: self.raster.ny,
            cell_mm: self.raster.cell,
            x_min_mm: self.raster.rect.x_min,
            y_min_mm: self.raster.rect.y_min,
            scale,
            max,
            mean: self.total() / self.data.len().max(1) as f64,
        };
        (encode_pgm16(self.raster.nx, self.raster.ny, &q), side)
    }
}

pub(crate) fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in it {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}
