use serde::Serialize;

use super::map::Raster;
use super::render::{RenderOptions, Renderer};
use crate::error::{Error, Result};
use crate::math::Rect;
use crate::patterns::{build_ltm, solve_ltm, LtmSettings, SolveParams};
use crate::scene::{LensLayout, Scene, SystemGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MtfPoint {
    /// Cycles per mm along x.
    pub frequency: f64,
    pub contrast: f64,
    pub converged: bool,
}

/// Least-squares fit of `c0 + c1 cos(wx) + c2 sin(wx)`.
pub fn fit_sinusoid(xs: &[f64], ys: &[f64], w: f64) -> Option<[f64; 3]> {
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let b = [1.0, (w * x).cos(), (w * x).sin()];
        for i in 0..3 {
            r[i] += b[i] * y;
            for j in 0..3 {
                m[i][j] += b[i] * b[j];
            }
        }
    }
    solve3(m, r)
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        r.swap(c, p);
        for i in 0..3 {
            if i != c {
                let f = m[i][c] / m[c][c];
                for j in c..3 {
                    m[i][j] -= f * m[c][j];
                }
                r[i] -= f * r[c];
            }
        }
    }
    Some([r[0] / m[0][0], r[1] / m[1][1], r[2] / m[2][2]])
}

/// Contrast the system reproduces when asked, through the transport-matrix
/// solver, for a full-modulation sinusoid along x over `window`. Frequency
/// zero reports the gain on a flat request.
pub fn mtf_curve(
    layout: &LensLayout,
    geom: &SystemGeometry,
    window: Rect,
    frequencies: &[f64],
    opts: &RenderOptions,
    settings: &LtmSettings,
) -> Result<Vec<MtfPoint>> {
    let raster = Raster::new(window, settings.cell);
    let scene = Scene::default();
    let mut o = opts.clone();
    o.diffuse_bounce = false;
    let r = Renderer::new(geom, layout, &scene, raster, o)?;
    let cells: Vec<usize> = (0..raster.len()).collect();
    let t = build_ltm(&r, &cells, geom.pixel_count())?;
    let on = t.mul(&vec![1.0; t.cols]);
    let floor_min = on.iter().copied().fold(f64::INFINITY, f64::min);
    if !(floor_min > 0.0) {
        return Err(Error::Invariant("MTF window is not fully lit by the all-on pattern".into()));
    }
    // half the dimmest all-on level leaves headroom for the peaks
    let level = 0.5 * floor_min;
    let xs: Vec<f64> = cells.iter().map(|&k| raster.center(k).x).collect();
    let params = SolveParams { iterations: settings.iterations, tolerance: settings.tolerance };
    let mut out = Vec::with_capacity(frequencies.len());
    for &f in frequencies {
        let w = std::f64::consts::TAU * f;
        let b: Vec<f64> = xs.iter().map(|&x| level * (1.0 + (w * x).cos())).collect();
        let sol = solve_ltm(&t, &b, &params)?;
        let got = t.mul(&sol.values);
        let contrast = if f == 0.0 {
            got.iter().sum::<f64>() / b.iter().sum::<f64>()
        } else {
            let c = fit_sinusoid(&xs, &got, w).ok_or(Error::Consistency("degenerate sinusoid fit".into()))?;
            (c[1] * c[1] + c[2] * c[2]).sqrt() / c[0]
        };
        out.push(MtfPoint { frequency: f, contrast, converged: sol.converged });
    }
    Ok(out)
}

pub fn mtf_to_csv(points: &[MtfPoint]) -> String {
    let mut s = String::from("frequency_cpmm,contrast,converged\n");
    for p in points {
        s.push_str(&format!("{},{},{}\n", p.frequency, p.contrast, p.converged));
    }
    s
}
