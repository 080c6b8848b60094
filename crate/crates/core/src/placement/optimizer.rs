use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use super::dmin::{dmin_bounded, dmin_incremental, dmin_naive_from, PointIndex};
use super::grid::generate_grid;
use super::vmr::{sector_counts, sector_of, vmr_from_counts};
use crate::error::{Error, Result};
use crate::math::Vec2;
use crate::optics::{trace_to_scene, trace_to_source};
use crate::scene::{Config, LensLayout, LensSpec, SystemGeometry};

/// Distances at or below this are treated as coincident crosstalk images;
/// the pinhole maps leave residuals of order 1e-13 mm on exact coincidences.
pub const COINCIDENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerParams {
    /// Weight of the distance term in `E = a*D + (1 - a)*Q`.
    pub alpha: f64,
    pub sectors: usize,
    pub r_max: f64,
    pub lens: LensSpec,
    /// Evaluation-plane point the layout keeps dark.
    pub exclusion_point: Vec2,
    /// Recompute the minimum distance from scratch for every candidate.
    pub naive_dmin: bool,
    /// Stop after this many lenses (seeds included).
    pub max_lenses: Option<usize>,
    /// Record wall time per step in the trace.
    pub timing: bool,
}

impl OptimizerParams {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            alpha: cfg.solver.alpha,
            sectors: cfg.solver.sectors,
            r_max: cfg.r_max(),
            lens: cfg.lens,
            exclusion_point: cfg.solver.exclusion_point,
            naive_dmin: cfg.solver.naive_dmin,
            max_lenses: None,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Invariant(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.sectors == 0 {
            return Err(Error::Invariant("sector count must be >= 1".into()));
        }
        if !(self.r_max > 0.0) {
            return Err(Error::Invariant(format!("r_max must be > 0, got {}", self.r_max)));
        }
        Ok(())
    }
}

/// Greedy state after `n - 1` placements: centres, their LED-plane sources
/// for the exclusion point, and the crosstalk set `P⁽ⁿ⁻¹⁾` in creation order.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub geom: SystemGeometry,
    pub params: OptimizerParams,
    centers: Vec<Vec2>,
    sources: Vec<Vec2>,
    points: Vec<Vec2>,
    counts: Vec<u32>,
    dmin: f64,
    /// Leading crosstalk images whose mutual distances are not scored.
    frozen: usize,
}

/// Scores of one tentative placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub point: Vec2,
    pub dmin: f64,
    pub q_vmr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub point: Vec2,
    pub dmin: f64,
    pub q_vmr: f64,
    pub e: f64,
}

impl OptimizerState {
    pub fn new(geom: &SystemGeometry, params: &OptimizerParams) -> Self {
        Self {
            geom: geom.clone(),
            params: params.clone(),
            centers: Vec::new(),
            sources: Vec::new(),
            points: Vec::new(),
            counts: vec![0; params.sectors],
            dmin: f64::INFINITY,
            frozen: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec2] {
        &self.centers
    }

    pub fn crosstalk(&self) -> &[Vec2] {
        &self.points
    }

    pub fn dmin(&self) -> f64 {
        self.dmin
    }

    /// Restarts the distance recursion at `+inf` for the current set: pairs
    /// among the images present now are no longer scored. Used after the
    /// corner seeds, whose rectangle always yields coincident images.
    pub fn freeze(&mut self) {
        self.frozen = self.points.len();
        self.dmin = f64::INFINITY;
    }

    /// Minimum distance of the stored set from scratch (same pair set as the
    /// recursion).
    pub fn dmin_recomputed(&self) -> f64 {
        dmin_naive_from(&self.points, self.frozen)
    }

    pub fn q_vmr(&self) -> f64 {
        vmr_from_counts(&self.counts)
    }

    /// The `2n - 2` crosstalk images created by adding a lens at `g`.
    pub fn new_points(&self, g: Vec2) -> Vec<Vec2> {
        let o = self.params.exclusion_point;
        let sg = trace_to_source(o, g, &self.geom);
        let mut out = Vec::with_capacity(2 * self.centers.len());
        for &s in &self.sources {
            out.push(trace_to_scene(s, g, &self.geom));
        }
        for &l in &self.centers {
            out.push(trace_to_scene(sg, l, &self.geom));
        }
        out
    }

    /// Three-term update of the minimum distance by brute force.
    pub fn dmin_incremental(&self, new: &[Vec2]) -> Result<f64> {
        let n = self.centers.len() + 1;
        if new.len() != 2 * n - 2 {
            return Err(Error::Consistency(format!(
                "expected {} new crosstalk points at n = {n}, got {}",
                2 * n - 2,
                new.len()
            )));
        }
        Ok(dmin_incremental(&self.points, self.dmin, new))
    }

    fn index(&self) -> PointIndex {
        PointIndex::new(&self.points, self.dmin)
    }

    fn score_with(&self, g: Vec2, index: Option<&PointIndex>) -> Scored {
        let new = self.new_points(g);
        let o = self.params.exclusion_point;
        let n = self.params.sectors;
        match index {
            Some(idx) => {
                let mut scratch = new.clone();
                let mut best = dmin_bounded(&mut scratch, self.dmin);
                for &q in &new {
                    best = idx.nearest_within(q, best);
                }
                let mut counts = self.counts.clone();
                for &p in &new {
                    counts[sector_of(p, o, n)] += 1;
                }
                Scored { point: g, dmin: best, q_vmr: vmr_from_counts(&counts) }
            }
            None => {
                let mut all = self.points.clone();
                all.extend_from_slice(&new);
                Scored {
                    point: g,
                    dmin: dmin_naive_from(&all, self.frozen),
                    q_vmr: vmr_from_counts(&sector_counts(&all, o, n)),
                }
            }
        }
    }

    /// Scores of a tentative lens at `g`.
    pub fn score(&self, g: Vec2) -> Scored {
        if self.params.naive_dmin {
            self.score_with(g, None)
        } else {
            self.score_with(g, Some(&self.index()))
        }
    }

    /// Scores every candidate (in parallel, order preserved).
    pub fn score_all(&self, candidates: &[Vec2]) -> Vec<Scored> {
        if self.params.naive_dmin {
            candidates.par_iter().map(|&g| self.score_with(g, None)).collect()
        } else {
            let idx = self.index();
            candidates.par_iter().map(|&g| self.score_with(g, Some(&idx))).collect()
        }
    }

    /// Commits a lens at `g`.
    pub fn place(&mut self, g: Vec2) {
        let new = self.new_points(g);
        self.dmin = dmin_incremental(&self.points, self.dmin, &new);
        for &p in &new {
            self.counts[sector_of(p, self.params.exclusion_point, self.params.sectors)] += 1;
        }
        self.points.extend_from_slice(&new);
        self.centers.push(g);
        self.sources.push(trace_to_source(self.params.exclusion_point, g, &self.geom));
        debug_assert!(self.points.len() > 3000 || self.dmin.to_bits() == self.dmin_recomputed().to_bits());
    }

    fn commit(&mut self, s: &Selection) {
        let new = self.new_points(s.point);
        for &p in &new {
            self.counts[sector_of(p, self.params.exclusion_point, self.params.sectors)] += 1;
        }
        self.points.extend_from_slice(&new);
        self.centers.push(s.point);
        self.sources.push(trace_to_source(self.params.exclusion_point, s.point, &self.geom));
        self.dmin = s.dmin;
        debug_assert!(self.points.len() > 3000 || self.dmin.to_bits() == self.dmin_recomputed().to_bits());
    }
}

/// Min-max normalization to `[0, 1]`. Infinite entries map to 1, and a
/// constant score maps to 1 everywhere.
pub fn normalize_scores(vals: &[f64]) -> Vec<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in vals.iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    vals.iter().map(|&v| if !v.is_finite() || !(hi > lo) { 1.0 } else { (v - lo) / (hi - lo) }).collect()
}

/// Picks the candidate with the largest `E`; ties go to the earliest
/// candidate, i.e. the lexicographically smallest for a sorted set.
pub fn choose(scored: &[Scored], alpha: f64) -> Option<Selection> {
    let d: Vec<f64> = scored.iter().map(|s| s.dmin).collect();
    let q: Vec<f64> = scored.iter().map(|s| s.q_vmr).collect();
    let (dn, qn) = (normalize_scores(&d), normalize_scores(&q));
    let mut best: Option<Selection> = None;
    for (k, s) in scored.iter().enumerate() {
        let e = alpha * dn[k] + (1.0 - alpha) * qn[k];
        if best.is_none_or(|b| e > b.e) {
            best = Some(Selection { point: s.point, dmin: s.dmin, q_vmr: s.q_vmr, e });
        }
    }
    best
}

/// One greedy step over a lexicographically sorted candidate set.
pub fn select_next(state: &OptimizerState, candidates: &[Vec2]) -> Option<Selection> {
    choose(&state.score_all(candidates), state.params.alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub dmin: f64,
    pub q_vmr: f64,
    /// `None` for the seed row.
    pub e: Option<f64>,
    pub candidates: usize,
    pub elapsed_ms: f64,
}

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from("n,D_min,Q_vmr,E,candidates,elapsed_ms\n");
    for r in rows {
        let e = r.e.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{},{}", r.n, r.dmin, r.q_vmr, e, r.candidates, r.elapsed_ms);
    }
    s
}

#[derive(Debug, Clone)]
pub struct Optimization {
    pub layout: LensLayout,
    pub trace: Vec<TraceRow>,
    pub state: OptimizerState,
}

impl Optimization {
    /// True if some step reached coincident crosstalk images.
    pub fn hit_zero_dmin(&self) -> bool {
        self.trace.iter().any(|r| r.dmin <= COINCIDENT_EPS)
    }
}

/// Greedy aperiodic placement: four corner seeds, then the best-scoring
/// candidate until none remain.
pub fn optimize_layout(geom: &SystemGeometry, params: &OptimizerParams) -> Result<Optimization> {
    optimize_layout_with(geom, params, |_| {})
}

/// As [`optimize_layout`], calling `progress` after every step.
pub fn optimize_layout_with(
    geom: &SystemGeometry,
    params: &OptimizerParams,
    mut progress: impl FnMut(&TraceRow),
) -> Result<Optimization> {
    geom.validate()?;
    params.validate()?;
    let region = geom.placement_region;
    let spacing = params.lens.spacing();
    if !(region.width() > spacing && region.height() > spacing) {
        return Err(Error::RegionTooSmall(format!(
            "{} x {} mm cannot hold four corner lenses {spacing} mm apart",
            region.width(),
            region.height()
        )));
    }
    let mut grid = generate_grid(region, geom.grid_pitch, params.r_max);
    let mut state = OptimizerState::new(geom, params);
    for c in grid.corners() {
        state.place(c);
        grid.mark_lens(c, spacing);
    }
    state.freeze();
    let mut trace =
        vec![TraceRow { n: 4, dmin: state.dmin(), q_vmr: state.q_vmr(), e: None, candidates: 0, elapsed_ms: 0.0 }];
    progress(&trace[0]);
    let cap = params.max_lenses.unwrap_or(usize::MAX);
    while state.len() < cap {
        let t0 = Instant::now();
        let candidates = grid.candidates();
        let Some(sel) = select_next(&state, &candidates) else { break };
        state.commit(&sel);
        grid.mark_lens(sel.point, spacing);
        let elapsed_ms = if params.timing { t0.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        let row = TraceRow {
            n: state.len(),
            dmin: sel.dmin,
            q_vmr: sel.q_vmr,
            e: Some(sel.e),
            candidates: candidates.len(),
            elapsed_ms,
        };
        progress(&row);
        trace.push(row);
    }
    let layout =
        LensLayout::from_centers(state.centers(), params.lens.radius, params.lens.focal_length, params.lens.margin);
    Ok(Optimization { layout, trace, state })
}
