use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::Vec2;

/// Equal-angle sector of `p` about `pole`, in `0..n`.
#[inline]
pub fn sector_of(p: Vec2, pole: Vec2, n: usize) -> usize {
    let a = (p.y - pole.y).atan2(p.x - pole.x);
    (((a + PI) / (2.0 * PI / n as f64)) as usize).min(n - 1)
}

pub fn sector_counts(points: &[Vec2], pole: Vec2, n: usize) -> Vec<u32> {
    let mut q = vec![0u32; n];
    for &p in points {
        q[sector_of(p, pole, n)] += 1;
    }
    q
}

/// Negated variance-to-mean ratio of the counts (population variance);
/// 0 is perfectly uniform.
pub fn vmr_from_counts(q: &[u32]) -> f64 {
    let n = q.len() as f64;
    let total: u64 = q.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return 0.0;
    }
    let mean = total as f64 / n;
    let var = q.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    -var / mean
}

/// Score of a point set about an explicit pole.
pub fn vmr_about(points: &[Vec2], pole: Vec2, sectors: usize) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("point set for VMR"));
    }
    if sectors == 0 {
        return Err(Error::Invariant("sector count must be >= 1".into()));
    }
    Ok(vmr_from_counts(&sector_counts(points, pole, sectors)))
}

/// Score with sectors taken about the centroid of `points`.
pub fn vmr_score(points: &[Vec2], sectors: usize) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("point set for VMR"));
    }
    let sum = points.iter().fold(Vec2::ZERO, |a, &p| a + p);
    vmr_about(points, sum / points.len() as f64, sectors)
}
