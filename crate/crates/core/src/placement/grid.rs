use crate::math::{Rect, Vec2};

/// Regular lattice of admissible lens centres plus the bookkeeping needed to
/// enumerate `(boundary ∪ near) \ excluded` quickly.
#[derive(Debug, Clone)]
pub struct CandidateGrid {
    pub region: Rect,
    pub pitch: f64,
    pub r_max: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Within the exclusion disk of some placed lens.
    excluded: Vec<bool>,
    /// Within `r_max` of some placed lens.
    near: Vec<bool>,
}

/// Lattice covering `region` inclusively at `pitch`. Boundary points are the
/// extreme rows and columns.
pub fn generate_grid(region: Rect, pitch: f64, r_max: f64) -> CandidateGrid {
    assert!(pitch > 0.0, "grid pitch must be positive");
    // tolerate widths that are a multiple of the pitch up to rounding
    let count = |len: f64| (len / pitch + 1e-9).floor() as usize + 1;
    let xs: Vec<f64> = (0..count(region.width())).map(|i| region.x_min + i as f64 * pitch).collect();
    let ys: Vec<f64> = (0..count(region.height())).map(|i| region.y_min + i as f64 * pitch).collect();
    let n = xs.len() * ys.len();
    CandidateGrid { region, pitch, r_max, xs, ys, excluded: vec![false; n], near: vec![false; n] }
}

impl CandidateGrid {
    pub fn cols(&self) -> usize {
        self.xs.len()
    }

    pub fn rows(&self) -> usize {
        self.ys.len()
    }

    /// `|G_all|`.
    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn point(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(self.xs[ix], self.ys[iy])
    }

    #[inline]
    pub fn is_boundary(&self, ix: usize, iy: usize) -> bool {
        ix == 0 || iy == 0 || ix + 1 == self.xs.len() || iy + 1 == self.ys.len()
    }

    /// The four lattice corners in lexicographic order.
    pub fn corners(&self) -> [Vec2; 4] {
        let (a, b) = (0, self.xs.len() - 1);
        let (c, d) = (0, self.ys.len() - 1);
        [self.point(a, c), self.point(a, d), self.point(b, c), self.point(b, d)]
    }

    /// All boundary points (`G₁`), lexicographic.
    pub fn boundary(&self) -> Vec<Vec2> {
        let mut out = Vec::new();
        for ix in 0..self.cols() {
            for iy in 0..self.rows() {
                if self.is_boundary(ix, iy) {
                    out.push(self.point(ix, iy));
                }
            }
        }
        out
    }

    fn index_range(vals: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
        let a = vals.partition_point(|&v| v < lo);
        let b = vals.partition_point(|&v| v <= hi);
        a..b.max(a)
    }

    /// Records a placed lens: points with `d <= exclusion` join `G₃`, points
    /// with `d <= r_max` join `G₂`.
    pub fn mark_lens(&mut self, c: Vec2, exclusion: f64) {
        let reach = self.r_max.max(exclusion);
        let rows = self.ys.len();
        let xr = Self::index_range(&self.xs, c.x - reach - self.pitch, c.x + reach + self.pitch);
        let yr = Self::index_range(&self.ys, c.y - reach - self.pitch, c.y + reach + self.pitch);
        for ix in xr {
            for iy in yr.clone() {
                let d = c.dist(Vec2::new(self.xs[ix], self.ys[iy]));
                let k = ix * rows + iy;
                if d <= exclusion {
                    self.excluded[k] = true;
                }
                if d <= self.r_max {
                    self.near[k] = true;
                }
            }
        }
    }

    /// `(G₁ ∪ G₂) \ G₃` in lexicographic (x, then y) order.
    pub fn candidates(&self) -> Vec<Vec2> {
        let rows = self.ys.len();
        let mut out = Vec::new();
        for ix in 0..self.xs.len() {
            for iy in 0..rows {
                let k = ix * rows + iy;
                if !self.excluded[k] && (self.near[k] || self.is_boundary(ix, iy)) {
                    out.push(Vec2::new(self.xs[ix], self.ys[iy]));
                }
            }
        }
        out
    }
}

/// Candidate set for an arbitrary list of placed centres, computed from
/// scratch.
pub fn candidate_set(centers: &[Vec2], region: Rect, pitch: f64, r_max: f64, exclusion: f64) -> Vec<Vec2> {
    let mut g = generate_grid(region, pitch, r_max);
    for &c in centers {
        g.mark_lens(c, exclusion);
    }
    g.candidates()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts() {
        assert_eq!(generate_grid(Rect::centered(330.0, 160.0), 0.5, 76.0).len(), 846_761);
        assert_eq!(generate_grid(Rect::centered(0.5, 0.5), 1.0, 76.0).len(), 4);
        assert_eq!(generate_grid(Rect::centered(5.0, 5.0), 0.5, 76.0).len(), 441);
    }

    #[test]
    fn unit_square_is_all_boundary() {
        let g = generate_grid(Rect::centered(0.5, 0.5), 1.0, 4.0);
        assert_eq!(g.candidates().len(), 4);
        assert_eq!(g.boundary().len(), 4);
    }

    #[test]
    fn empty_layout_gives_boundary() {
        let g = generate_grid(Rect::centered(5.0, 5.0), 0.5, 4.0);
        assert_eq!(g.candidates(), g.boundary());
        assert_eq!(g.boundary().len(), 80);
    }

    #[test]
    fn single_lens_matches_membership_oracle() {
        let region = Rect::centered(25.0, 25.0);
        let (r, delta) = (4.0, 1.0);
        let (excl, r_max) = (2.0 * r + delta, 4.0 * r);
        let c = Vec2::ZERO;
        let got = candidate_set(&[c], region, 1.0, r_max, excl);
        let mut want = Vec::new();
        for i in 0..=50 {
            for j in 0..=50 {
                let p = Vec2::new(-25.0 + i as f64, -25.0 + j as f64);
                let on_edge = i == 0 || j == 0 || i == 50 || j == 50;
                let d = ((p.x - c.x).powi(2) + (p.y - c.y).powi(2)).sqrt();
                if (on_edge || d <= r_max) && d > excl {
                    want.push(p);
                }
            }
        }
        assert_eq!(got, want);
        assert!(got.len() > 200);
    }

    #[test]
    fn exclusion_overrides_boundary() {
        let region = Rect::centered(10.0, 10.0);
        let got = candidate_set(&[Vec2::new(-10.0, -10.0)], region, 1.0, 2.0, 3.0);
        assert!(!got.contains(&Vec2::new(-10.0, -10.0)));
        assert!(!got.contains(&Vec2::new(-8.0, -10.0)));
        assert!(got.contains(&Vec2::new(-6.0, -10.0)));
    }
}
