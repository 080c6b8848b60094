use crate::math::Vec2;

/// Smallest pairwise distance, `+inf` for fewer than two points.
pub fn dmin_naive(points: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.min(points[i].dist(points[j]));
        }
    }
    best
}

/// Smallest distance over pairs with at least one member at index `>= from`;
/// pairs entirely inside the prefix are ignored.
pub fn dmin_naive_from(points: &[Vec2], from: usize) -> f64 {
    let mut best = f64::INFINITY;
    for j in from.min(points.len())..points.len() {
        for i in 0..j {
            best = best.min(points[i].dist(points[j]));
        }
    }
    best
}

/// Literal three-term update: `min(D_prev, D_new, D_new-prev)` by brute force.
pub fn dmin_incremental(prev: &[Vec2], d_prev: f64, new: &[Vec2]) -> f64 {
    let mut best = d_prev.min(dmin_naive(new));
    for &p in new {
        for &q in prev {
            best = best.min(p.dist(q));
        }
    }
    best
}

// Slack applied before discarding a pair by a coordinate bound, so rounding
// in the distance can never hide a closer pair.
#[inline]
fn reach(bound: f64) -> f64 {
    bound * (1.0 + 1e-9) + 1e-9
}

/// Bucket grid over a fixed point set for exact bounded nearest-distance
/// queries.
#[derive(Debug, Clone)]
pub struct PointIndex {
    points: Vec<Vec2>,
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    order: Vec<Vec2>,
}

impl PointIndex {
    /// `hint` is the expected query radius; cells are never finer than what
    /// keeps the bucket count proportional to the point count.
    pub fn new(points: &[Vec2], hint: f64) -> Self {
        let n = points.len();
        let (mut lo, mut hi) =
            (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if n == 0 {
            lo = Vec2::ZERO;
            hi = Vec2::ZERO;
        }
        let (w, h) = ((hi.x - lo.x).max(1e-9), (hi.y - lo.y).max(1e-9));
        let floor_cell = (w * h / (2.0 * n.max(1) as f64)).sqrt();
        let mut cell =
            if hint.is_finite() && hint > 0.0 { hint.max(floor_cell) } else { floor_cell.max(w.max(h) / 64.0) };
        if !(cell > 0.0) {
            cell = 1.0;
        }
        let nx = ((w / cell) as usize + 1).min(1 << 15);
        let ny = ((h / cell) as usize + 1).min(1 << 15);
        let mut idx = Self { points: points.to_vec(), origin: lo, cell, nx, ny, starts: Vec::new(), order: Vec::new() };
        let mut counts = vec![0u32; nx * ny + 1];
        let keys: Vec<usize> = points.iter().map(|&p| idx.key(p)).collect();
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..nx * ny {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut order = vec![Vec2::ZERO; n];
        for (p, &k) in points.iter().zip(&keys) {
            order[fill[k] as usize] = *p;
            fill[k] += 1;
        }
        idx.starts = counts;
        idx.order = order;
        idx
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    fn cx(&self, x: f64) -> usize {
        (((x - self.origin.x) / self.cell).max(0.0) as usize).min(self.nx - 1)
    }

    #[inline]
    fn cy(&self, y: f64) -> usize {
        (((y - self.origin.y) / self.cell).max(0.0) as usize).min(self.ny - 1)
    }

    #[inline]
    fn key(&self, p: Vec2) -> usize {
        self.cy(p.y) * self.nx + self.cx(p.x)
    }

    /// `min(bound, min_p |q - p|)`, exact.
    pub fn nearest_within(&self, q: Vec2, bound: f64) -> f64 {
        let mut best = bound;
        if self.points.is_empty() || best == 0.0 {
            return best;
        }
        let r = reach(best);
        let (x0, x1) = (self.cx(q.x - r), self.cx(q.x + r));
        let (y0, y1) = (self.cy(q.y - r), self.cy(q.y + r));
        if !r.is_finite() || (x1 - x0 + 1) * (y1 - y0 + 1) > self.points.len() {
            for &p in &self.points {
                best = best.min(q.dist(p));
            }
            return best;
        }
        for cy in y0..=y1 {
            let row = cy * self.nx;
            let (a, b) = (self.starts[row + x0] as usize, self.starts[row + x1 + 1] as usize);
            for &p in &self.order[a..b] {
                best = best.min(q.dist(p));
            }
        }
        best
    }
}

/// `min(bound, D_min(points))` by an x-sorted sweep, exact.
pub fn dmin_bounded(points: &mut [Vec2], bound: f64) -> f64 {
    let mut best = bound;
    if best == 0.0 {
        return 0.0;
    }
    points.sort_unstable_by(|a, b| a.x.total_cmp(&b.x));
    for i in 0..points.len() {
        let p = points[i];
        for q in &points[i + 1..] {
            if q.x - p.x > reach(best) {
                break;
            }
            best = best.min(p.dist(*q));
        }
    }
    best
}
