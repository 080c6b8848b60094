use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::illumination::{LedPattern, Renderer};

/// Sparse light transport matrix in compressed-column form. Rows are
/// receiver cells, columns LED pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Raster cell index of every row.
    pub receivers: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    vals: Vec<f64>,
}

impl TransportMatrix {
    /// Builds from per-column `(row, value)` lists sorted by row.
    pub fn from_columns(rows: usize, receivers: Vec<usize>, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for col in &columns {
            for &(r, v) in col {
                if r >= rows {
                    return Err(Error::Invariant(format!("row {r} outside {rows}-row matrix")));
                }
                if !(v >= 0.0) {
                    return Err(Error::Invariant(format!("transport entry {v} is negative")));
                }
                row_idx.push(r as u32);
                vals.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self { rows, cols: columns.len(), receivers, col_ptr, row_idx, vals })
    }

    pub fn dense(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        assert_eq!(data.len(), rows * cols);
        let columns = (0..cols)
            .map(|j| (0..rows).filter(|&i| data[i * cols + j] != 0.0).map(|i| (i, data[i * cols + j])).collect())
            .collect();
        Self::from_columns(rows, (0..rows).collect(), columns)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        self.row_idx[a..b].iter().zip(&self.vals[a..b]).map(|(&r, &v)| (r as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.column(j).find(|&(r, _)| r == i).map_or(0.0, |(_, v)| v)
    }

    /// `T a`.
    pub fn mul(&self, a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (r, v) in self.column(j) {
                out[r] += v * x;
            }
        }
        out
    }

    /// `T^T y`, columns in parallel.
    pub fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        (0..self.cols).into_par_iter().map(|j| self.column(j).map(|(r, v)| v * y[r]).sum()).collect()
    }

    /// Largest eigenvalue of `T^T T` by power iteration.
    pub fn spectral_norm_sq(&self, iterations: usize) -> f64 {
        let mut x = vec![1.0; self.cols];
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let y = self.mul_t(&self.mul(&x));
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            lambda = norm / xn;
            x = y.into_iter().map(|v| v / norm).collect();
        }
        lambda
    }
}

/// Assembles `T` column by column from unit-pixel renders. `receivers`
/// lists the raster cells kept as rows.
pub fn build_ltm(renderer: &Renderer, receivers: &[usize], pixels: usize) -> Result<TransportMatrix> {
    let mut row_of = vec![u32::MAX; renderer.raster().len()];
    for (i, &k) in receivers.iter().enumerate() {
        row_of[k] = i as u32;
    }
    let columns: Vec<Vec<(usize, f64)>> = (0..pixels)
        .into_par_iter()
        .map(|j| {
            let mut col: Vec<(usize, f64)> = renderer
                .render_pixel(j)
                .into_iter()
                .filter(|&(k, _)| row_of[k] != u32::MAX)
                .map(|(k, v)| (row_of[k] as usize, v))
                .collect();
            col.sort_by_key(|e| e.0);
            col
        })
        .collect();
    TransportMatrix::from_columns(receivers.len(), receivers.to_vec(), columns)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveParams {
    pub iterations: usize,
    pub tolerance: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self { iterations: 2000, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtmSolution {
    pub values: Vec<f64>,
    /// Objective after every accepted step, starting with the initial point.
    pub objective: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl LtmSolution {
    pub fn pattern(&self, cols: usize, rows: usize) -> Result<LedPattern> {
        LedPattern::from_values(cols, rows, self.values.clone(), false)
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective.last().expect("initial objective recorded")
    }
}

pub fn objective(t: &TransportMatrix, a: &[f64], b: &[f64]) -> f64 {
    t.mul(a).iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Projected gradient descent on `|T a - b|^2` over the box `[0, 1]`,
/// starting from all on. The step is `1/L` with `L` from power iteration;
/// a step that would raise the objective is rejected and retried at half
/// the size, so the accepted objective never increases.
pub fn solve_ltm(t: &TransportMatrix, b: &[f64], params: &SolveParams) -> Result<LtmSolution> {
    if b.len() != t.rows {
        return Err(Error::Invariant(format!("desired vector has {} entries for {} receivers", b.len(), t.rows)));
    }
    let lip = 2.0 * t.spectral_norm_sq(50);
    let mut a = vec![1.0; t.cols];
    let mut f = objective(t, &a, b);
    let mut history = vec![f];
    if lip == 0.0 {
        return Ok(LtmSolution { values: a, objective: history, converged: true, iterations: 0 });
    }
    let mut step = 1.0 / lip;
    let mut converged = false;
    let mut it = 0;
    while it < params.iterations {
        it += 1;
        let r: Vec<f64> = t.mul(&a).iter().zip(b).map(|(x, y)| x - y).collect();
        let g = t.mul_t(&r);
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = a.iter().zip(&g).map(|(x, d)| (x - step * 2.0 * d).clamp(0.0, 1.0)).collect();
            let fc = objective(t, &cand, b);
            if fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            converged = true;
            break;
        };
        let rel = (f - fc) / f.max(f64::MIN_POSITIVE);
        a = cand;
        f = fc;
        history.push(f);
        if rel < params.tolerance {
            converged = true;
            break;
        }
    }
    Ok(LtmSolution { values: a, objective: history, converged, iterations: it })
}
