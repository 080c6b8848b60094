use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SystemGeometry;
use crate::error::{Error, Result};
use crate::math::{Rect, Vec2};

/// Rounding allowance on the rim clearance check, mm.
pub const CLEARANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lens {
    pub center: Vec2,
    pub radius: f64,
    /// Carried for bookkeeping only; the pinhole model ignores it.
    pub focal_length: f64,
}

/// Placed lenses in placement order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensLayout {
    pub lenses: Vec<Lens>,
    /// Minimum clearance between neighbouring lens rims.
    pub margin: f64,
}

impl LensLayout {
    pub fn new(margin: f64) -> Self {
        Self { lenses: Vec::new(), margin }
    }

    pub fn from_centers(centers: &[Vec2], radius: f64, focal_length: f64, margin: f64) -> Self {
        Self { lenses: centers.iter().map(|&c| Lens { center: c, radius, focal_length }).collect(), margin }
    }

    pub fn len(&self) -> usize {
        self.lenses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lenses.is_empty()
    }

    pub fn centers(&self) -> Vec<Vec2> {
        self.lenses.iter().map(|l| l.center).collect()
    }

    /// Total aperture area of all lenses.
    pub fn aperture_area(&self) -> f64 {
        self.lenses.iter().map(|l| std::f64::consts::PI * l.radius * l.radius).sum()
    }

    /// Checks radii, that every centre lies in `region`, and pairwise clearance
    /// `|c_i - c_j| >= r_i + r_j + margin` (up to rounding, so a closest
    /// packing whose rims are exactly `margin` apart is admissible).
    pub fn validate(&self, region: &Rect) -> Result<()> {
        if !(self.margin >= 0.0) {
            return Err(Error::Invariant(format!("lens margin must be >= 0, got {}", self.margin)));
        }
        for (i, l) in self.lenses.iter().enumerate() {
            if !(l.radius > 0.0) {
                return Err(Error::Invariant(format!("lens {i}: radius > 0 required, got {}", l.radius)));
            }
            if !region.contains(l.center) {
                return Err(Error::Invariant(format!(
                    "lens {i}: centre ({}, {}) outside placement region",
                    l.center.x, l.center.y
                )));
            }
        }
        for i in 0..self.lenses.len() {
            for j in (i + 1)..self.lenses.len() {
                let (a, b) = (&self.lenses[i], &self.lenses[j]);
                let d = a.center.dist(b.center);
                let min = a.radius + b.radius + self.margin;
                if !(d >= min - CLEARANCE_TOL) {
                    return Err(Error::Invariant(format!(
                        "lenses {i} and {j} overlap: centre distance {d} < 2*r_lens + delta = {min}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn validate_for(&self, geom: &SystemGeometry) -> Result<()> {
        self.validate(&geom.placement_region)
    }

    /// `index,x_mm,y_mm,r_mm` with 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,x_mm,y_mm,r_mm\n");
        for (i, l) in self.lenses.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", fmt_sig(l.center.x), fmt_sig(l.center.y), fmt_sig(l.radius));
        }
        s
    }

    pub fn from_csv(text: &str, focal_length: f64, margin: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Format { what: "layout CSV", msg: "empty file".into() })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["index", "x_mm", "y_mm", "r_mm"] {
            return Err(Error::Format { what: "layout CSV", msg: format!("unexpected header `{header}`") });
        }
        let mut lenses = Vec::new();
        for (n, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(Error::Format { what: "layout CSV", msg: format!("row {n}: expected 4 fields") });
            }
            let num = |k: usize| -> Result<f64> {
                f[k].parse::<f64>()
                    .map_err(|e| Error::Format { what: "layout CSV", msg: format!("row {n} field {k}: {e}") })
            };
            let idx: usize =
                f[0].parse().map_err(|e| Error::Format { what: "layout CSV", msg: format!("row {n} index: {e}") })?;
            if idx != n {
                return Err(Error::Format { what: "layout CSV", msg: format!("row {n} has index {idx}") });
            }
            lenses.push(Lens { center: Vec2::new(num(1)?, num(2)?), radius: num(3)?, focal_length });
        }
        Ok(Self { lenses, margin })
    }

    pub fn read_csv(path: &Path, focal_length: f64, margin: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, focal_length, margin)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Shortest decimal that round-trips, which always carries at least the
/// significant digits the value has.
pub(crate) fn fmt_sig(v: f64) -> String {
    let s = format!("{v}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}
