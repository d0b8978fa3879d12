//! Dense tableau simplex for `max c·x` subject to `A x ≤ b`, `x ≥ 0`, `b ≥ 0`.
//!
//! With a nonnegative right-hand side the slack basis is feasible, so a single
//! phase suffices. The right-hand side is raised by a tiny deterministic
//! amount (at most `2e-10` relative) to break degeneracy. The final basis is
//! re-read at the true right-hand side when it stays feasible there;
//! otherwise the perturbed point is returned, which may exceed a row bound
//! by the perturbation. Dantzig pricing is used until a run of
//! degenerate pivots, after which Bland's rule takes over until the objective
//! moves again.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Nonnegative multipliers of the inequality rows.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

/// Inequality-form problem with dense rows.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram { objective, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<f64>, rhs: f64) {
        debug_assert_eq!(row.len(), self.objective.len());
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn solve(&self) -> Result<LpSolution> {
        maximize(&self.objective, &self.rows, &self.rhs)
    }
}

pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m {
        return Err(Error::Solver("row and right-hand-side counts differ".into()));
    }
    if let Some(bad) = b.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Solver(format!("right-hand side {bad} is negative")));
    }
    let width = n + m + 1;
    let scale = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut t = vec![0.0; (m + 1) * width];
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Solver("ragged constraint row".into()));
        }
        let r = &mut t[(i + 1) * width..(i + 2) * width];
        r[..n].copy_from_slice(row);
        r[n + i] = 1.0;
        r[width - 1] = b[i] + perturbation(i) * scale;
    }
    for j in 0..n {
        t[j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_pivots = 50 * (n + m) + 1000;
    let mut pivots = 0;
    let mut degenerate_run = 0;
    let mut last_obj = 0.0;
    loop {
        let bland = degenerate_run > 50;
        let mut enter = None;
        let mut best = -COST_TOL;
        for j in 0..n + m {
            let rc = t[j];
            if rc < -COST_TOL {
                if bland {
                    enter = Some(j);
                    break;
                }
                if rc < best {
                    best = rc;
                    enter = Some(j);
                }
            }
        }
        let Some(col) = enter else { break };
        let mut leave = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let aij = t[(i + 1) * width + col];
            if aij > PIVOT_TOL {
                let ratio = t[(i + 1) * width + width - 1] / aij;
                let better = ratio < best_ratio - 1e-14
                    || (ratio <= best_ratio + 1e-14 && leave.map_or(true, |l: usize| basis[i] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Err(Error::Solver("problem is unbounded".into()));
        };
        pivot(&mut t, width, row + 1, col);
        basis[row] = col;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver(format!("no convergence after {pivots} pivots")));
        }
        let obj = t[width - 1];
        if obj > last_obj + 1e-13 {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }
        last_obj = obj;
    }
    // slack columns hold B⁻¹, so the basic values at the true b are B⁻¹b
    let exact: Vec<f64> = (0..m)
        .map(|r| {
            let row = &t[(r + 1) * width..(r + 2) * width];
            (0..m).map(|i| row[n + i] * b[i]).sum()
        })
        .collect();
    let use_exact = exact.iter().all(|v| *v >= -1e-12);
    let mut x = vec![0.0; n];
    for (r, &br) in basis.iter().enumerate() {
        if br < n {
            x[br] = if use_exact { exact[r].max(0.0) } else { t[(r + 1) * width + width - 1] };
        }
    }
    let duals: Vec<f64> = (0..m).map(|i| t[n + i].max(0.0)).collect();
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective, duals, pivots })
}

/// Distinct offsets in `[1e-10, 2e-10)`, a stand-in for lexicographic pivoting.
fn perturbation(i: usize) -> f64 {
    let h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11;
    1e-10 * (1.0 + h as f64 / (1u64 << 53) as f64)
}

fn pivot(t: &mut [f64], width: usize, prow: usize, pcol: usize) {
    let inv = 1.0 / t[prow * width + pcol];
    for v in t[prow * width..(prow + 1) * width].iter_mut() {
        *v *= inv;
    }
    let pivot_row: Vec<(usize, f64)> = t[prow * width..(prow + 1) * width]
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (j, *v))
        .collect();
    let rows = t.len() / width;
    for r in 0..rows {
        if r == prow {
            continue;
        }
        let f = t[r * width + pcol];
        if f == 0.0 {
            continue;
        }
        let base = r * width;
        for &(j, v) in &pivot_row {
            t[base + j] -= f * v;
        }
        t[base + pcol] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → 36 at (2, 6)
        let sol = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
        // strong duality
        let dual_obj: f64 = sol.duals.iter().zip([4.0, 12.0, 18.0]).map(|(y, b)| y * b).sum();
        assert!((dual_obj - 36.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        assert!(maximize(&[1.0, 0.0], &[vec![0.0, 1.0]], &[1.0]).is_err());
    }
}
