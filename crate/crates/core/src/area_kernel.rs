// SPDX-License-Identifier: Apache-2.0

//! Minimum bounding area of a mesh floorplan.
//!
//! Every column `c` has a width `W_c` and every row `r` a height `H_r`; an
//! occupied cell demands `W_c * H_r >= a_rc`. The layer area is
//! `(sum W) * (sum H)`.
//!
//! Two solvers are provided:
//!
//! * [`min_area_lp`]: a linear relaxation. Each hyperbolic cell constraint
//!   is replaced by tangent lines at geometrically spaced widths and the
//!   half-perimeter `sum W + sum H` is minimized. Cell products may fall
//!   short of the demand; [`repair`] restores feasibility.
//! * [`min_area_exact`]: the true optimum. With the heights normalized to
//!   `sum H = 1` the problem is `min sum W` over the convex set
//!   `{W_c H_r >= a_rc}`, solved by an outer approximation that adds a
//!   supporting hyperplane `h0 W + w0 H >= 2a` at the projection of each
//!   violated point. Every iterate yields a lower bound (the LP value) and
//!   an upper bound (the tight completion of its heights), so termination is
//!   certified by the relative gap.

use crate::error::{Error, Result};
use crate::simplex::{minimize_covering, Constraint};

#[derive(Debug, Clone, PartialEq)]
pub struct CellDemand {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, mm²; 0 for an empty cell.
    pub demand: Vec<f64>,
}

impl CellDemand {
    pub fn new(rows: usize, cols: usize, demand: Vec<f64>) -> Self {
        assert_eq!(demand.len(), rows * cols, "demand grid size mismatch");
        assert!(
            demand.iter().all(|a| a.is_finite() && *a >= 0.0),
            "demands must be finite and >= 0"
        );
        CellDemand { rows, cols, demand }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.demand[r * self.cols + c]
    }

    pub fn total(&self) -> f64 {
        self.demand.iter().sum()
    }

    fn occupied_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .filter(|&r| (0..self.cols).any(|c| self.get(r, c) > 0.0))
            .collect()
    }

    fn occupied_cols(&self) -> Vec<usize> {
        (0..self.cols)
            .filter(|&c| (0..self.rows).any(|r| self.get(r, c) > 0.0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSolution {
    pub col_widths: Vec<f64>,
    pub row_heights: Vec<f64>,
    /// `(sum W) * (sum H)`.
    pub area: f64,
}

impl KernelSolution {
    fn zeros(d: &CellDemand) -> Self {
        KernelSolution {
            col_widths: vec![0.0; d.cols],
            row_heights: vec![0.0; d.rows],
            area: 0.0,
        }
    }

    fn from_parts(col_widths: Vec<f64>, row_heights: Vec<f64>) -> Self {
        let area = col_widths.iter().sum::<f64>() * row_heights.iter().sum::<f64>();
        KernelSolution {
            col_widths,
            row_heights,
            area,
        }
    }

    /// Largest relative shortfall `max(0, 1 - W_c H_r / a_rc)` over occupied cells.
    pub fn max_shortfall(&self, d: &CellDemand) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..d.rows {
            for c in 0..d.cols {
                let a = d.get(r, c);
                if a > 0.0 {
                    let have = self.col_widths[c] * self.row_heights[r];
                    worst = worst.max(1.0 - have / a);
                }
            }
        }
        worst
    }

    pub fn is_feasible(&self, d: &CellDemand, tol: f64) -> bool {
        (0..d.rows).all(|r| {
            (0..d.cols).all(|c| {
                let a = d.get(r, c);
                a == 0.0 || self.col_widths[c] * self.row_heights[r] >= a - tol
            })
        })
    }
}

pub const DEFAULT_TANGENTS: usize = 8;

/// Tangent widths for demand `a`: geometric over `[sqrt(a)/4, 4 sqrt(a)]`.
pub fn tangent_points(a: f64, count: usize) -> Vec<f64> {
    let lo = a.sqrt() / 4.0;
    (0..count)
        .map(|k| lo * 16f64.powf(k as f64 / (count - 1) as f64))
        .collect()
}

/// Linear relaxation with `tangent_count` tangents per occupied cell.
pub fn min_area_lp(d: &CellDemand, tangent_count: usize) -> Result<KernelSolution> {
    if tangent_count < 2 {
        return Err(Error::SolverFailure("tangent_count must be >= 2".into()));
    }
    let rows = d.occupied_rows();
    let cols = d.occupied_cols();
    if rows.is_empty() {
        return Ok(KernelSolution::zeros(d));
    }
    let nv = cols.len() + rows.len();
    let mut constraints = Vec::new();
    for (ri, &r) in rows.iter().enumerate() {
        for (ci, &c) in cols.iter().enumerate() {
            let a = d.get(r, c);
            if a <= 0.0 {
                continue;
            }
            for w in tangent_points(a, tangent_count) {
                // H >= a/w - (a/w²)(W - w)
                let mut coeffs = vec![0.0; nv];
                coeffs[ci] = a / (w * w);
                coeffs[cols.len() + ri] = 1.0;
                constraints.push(Constraint {
                    coeffs,
                    rhs: 2.0 * a / w,
                });
            }
        }
    }
    let sol = minimize_covering(&vec![1.0; nv], &constraints)?;
    let mut widths = vec![0.0; d.cols];
    let mut heights = vec![0.0; d.rows];
    for (ci, &c) in cols.iter().enumerate() {
        widths[c] = sol.x[ci];
    }
    for (ri, &r) in rows.iter().enumerate() {
        heights[r] = sol.x[cols.len() + ri];
    }
    Ok(KernelSolution::from_parts(widths, heights))
}

/// One exact-refinement pass: keeps the widths (lifting any zero width of an
/// occupied column) and sets each height to the tightest feasible value.
pub fn repair(d: &CellDemand, sol: &KernelSolution) -> KernelSolution {
    let mut widths = sol.col_widths.clone();
    let heights = &sol.row_heights;
    for c in 0..d.cols {
        let need = (0..d.rows)
            .filter(|&r| d.get(r, c) > 0.0)
            .map(|r| {
                if heights[r] > 0.0 {
                    d.get(r, c) / heights[r]
                } else {
                    d.get(r, c).sqrt()
                }
            })
            .fold(0.0, f64::max);
        if need > 0.0 && widths[c] <= 0.0 {
            widths[c] = need;
        }
        if need == 0.0 {
            widths[c] = 0.0;
        }
    }
    let heights = tight_heights(d, &widths);
    KernelSolution::from_parts(widths, heights)
}

fn tight_heights(d: &CellDemand, widths: &[f64]) -> Vec<f64> {
    (0..d.rows)
        .map(|r| {
            (0..d.cols)
                .filter(|&c| d.get(r, c) > 0.0)
                .map(|c| d.get(r, c) / widths[c])
                .fold(0.0, f64::max)
        })
        .collect()
}

fn tight_widths(d: &CellDemand, heights: &[f64]) -> Vec<f64> {
    (0..d.cols)
        .map(|c| {
            (0..d.rows)
                .filter(|&r| d.get(r, c) > 0.0)
                .map(|r| d.get(r, c) / heights[r])
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub solution: KernelSolution,
    /// Certified lower bound on the optimal area.
    pub lower_bound: f64,
    pub iterations: usize,
    /// False when `max_iters` ran out before the gap closed.
    pub converged: bool,
}

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITERS: usize = 1000;

/// Exact minimum area. `init_widths` (e.g. from [`min_area_lp`]) seeds the
/// first upper bound; the result is never worse than the tight completion of
/// that seed. The returned floorplan is scaled to a square bounding box.
pub fn min_area_exact(
    d: &CellDemand,
    init_widths: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<ExactSolution> {
    let rows = d.occupied_rows();
    let cols = d.occupied_cols();
    if rows.is_empty() {
        return Ok(ExactSolution {
            solution: KernelSolution::zeros(d),
            lower_bound: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    // Seed: tight completion of the given widths, heights normalized to sum 1.
    let mut seed_widths: Vec<f64> = (0..d.cols)
        .map(|c| init_widths.get(c).copied().unwrap_or(0.0))
        .collect();
    for &c in &cols {
        if !(seed_widths[c] > 0.0 && seed_widths[c].is_finite()) {
            seed_widths[c] = (0..d.rows).map(|r| d.get(r, c)).fold(0.0, f64::max).sqrt();
        }
    }
    let mut best_h = normalize(tight_heights(d, &seed_widths));
    let mut best_w = tight_widths(d, &best_h);
    let mut best = best_w.iter().sum::<f64>();
    polish(d, &mut best_w, &mut best_h, &mut best);

    let nc = cols.len();
    let nv = nc + rows.len();
    let mut cost = vec![0.0; nv];
    cost[..nc].iter_mut().for_each(|x| *x = 1.0);
    let mut constraints = vec![Constraint {
        coeffs: {
            let mut v = vec![0.0; nv];
            v[nc..].iter_mut().for_each(|x| *x = -1.0);
            v
        },
        rhs: -1.0,
    }];
    let cells: Vec<(usize, usize, usize, usize, f64)> = rows
        .iter()
        .enumerate()
        .flat_map(|(ri, &r)| cols.iter().enumerate().map(move |(ci, &c)| (ri, ci, r, c)))
        .filter_map(|(ri, ci, r, c)| {
            let a = d.get(r, c);
            (a > 0.0).then_some((ri, ci, r, c, a))
        })
        .collect();
    let add_cut = |constraints: &mut Vec<Constraint>, ri: usize, ci: usize, a: f64, w: f64, h: f64| {
        // project (w, h) onto w*h = a along the ray from the origin
        let (w0, h0) = if w > 0.0 && h > 0.0 {
            let s = (a / (w * h)).sqrt();
            (w * s, h * s)
        } else if w > 0.0 {
            (w, a / w)
        } else {
            (a / h, h)
        };
        let mut coeffs = vec![0.0; nv];
        coeffs[ci] = h0;
        coeffs[nc + ri] = w0;
        constraints.push(Constraint {
            coeffs,
            rhs: 2.0 * a,
        });
    };
    for &(ri, ci, r, c, a) in &cells {
        add_cut(&mut constraints, ri, ci, a, best_w[c], best_h[r]);
        add_cut(&mut constraints, ri, ci, a, a.sqrt(), a.sqrt());
    }

    let mut lower = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let sol = minimize_covering(&cost, &constraints)?;
        lower = f64::max(lower, sol.objective);
        let w_lp: Vec<f64> = {
            let mut v = vec![0.0; d.cols];
            for (ci, &c) in cols.iter().enumerate() {
                v[c] = sol.x[ci];
            }
            v
        };
        let h_lp: Vec<f64> = {
            let mut v = vec![0.0; d.rows];
            for (ri, &r) in rows.iter().enumerate() {
                v[r] = sol.x[nc + ri];
            }
            v
        };

        if rows.iter().all(|&r| h_lp[r] > 0.0) {
            let mut h = normalize(h_lp.clone());
            let mut w = tight_widths(d, &h);
            let mut val = w.iter().sum::<f64>();
            polish(d, &mut w, &mut h, &mut val);
            if val < best {
                best = val;
                best_w = w;
                best_h = h;
            }
        }
        if best - lower <= tol * best {
            converged = true;
            break;
        }

        let mut added = 0;
        for &(ri, ci, r, c, a) in &cells {
            if w_lp[c] * h_lp[r] < a * (1.0 - 1e-12) {
                add_cut(&mut constraints, ri, ci, a, w_lp[c], h_lp[r]);
                added += 1;
            }
        }
        if added == 0 {
            // LP point is feasible, hence optimal
            converged = true;
            break;
        }
    }

    // square bounding box
    let (sw, sh) = (best_w.iter().sum::<f64>(), best_h.iter().sum::<f64>());
    let s = (sh / sw).sqrt();
    let widths: Vec<f64> = best_w.iter().map(|w| w * s).collect();
    let heights: Vec<f64> = best_h.iter().map(|h| h / s).collect();
    Ok(ExactSolution {
        solution: KernelSolution::from_parts(widths, heights),
        lower_bound: lower.min(best),
        iterations,
        converged,
    })
}

fn normalize(mut h: Vec<f64>) -> Vec<f64> {
    let s: f64 = h.iter().sum();
    if s > 0.0 {
        h.iter_mut().for_each(|x| *x /= s);
    }
    h
}

/// Alternating tight completions; never increases the area.
fn polish(d: &CellDemand, w: &mut Vec<f64>, h: &mut Vec<f64>, val: &mut f64) {
    for _ in 0..4 {
        let h2 = normalize(tight_heights(d, w));
        let w2 = tight_widths(d, &h2);
        let v2: f64 = w2.iter().sum();
        if v2 < *val * (1.0 - 1e-15) {
            *h = h2;
            *w = w2;
            *val = v2;
        } else {
            break;
        }
    }
}

/// LP relaxation followed by exact refinement; the default kernel.
pub fn solve(d: &CellDemand) -> Result<KernelSolution> {
    let lp = min_area_lp(d, DEFAULT_TANGENTS)?;
    let exact = min_area_exact(d, &lp.col_widths, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    if !exact.converged {
        log::warn!(
            "area kernel stopped after {} iterations (gap {:.3e})",
            exact.iterations,
            (exact.solution.area - exact.lower_bound) / exact.solution.area
        );
    }
    Ok(exact.solution)
}

/// LP relaxation made feasible; the in-loop kernel of the floorplanner.
pub fn solve_lp(d: &CellDemand) -> Result<KernelSolution> {
    Ok(repair(d, &min_area_lp(d, DEFAULT_TANGENTS)?))
}

/// Memoizes [`solve`] by demand grid.
#[derive(Debug, Default)]
pub struct KernelCache {
    map: std::collections::HashMap<(usize, usize, Vec<u64>), KernelSolution>,
    pub hits: u64,
    pub misses: u64,
}

impl KernelCache {
    pub fn solve(&mut self, d: &CellDemand) -> Result<KernelSolution> {
        let key = (d.rows, d.cols, d.demand.iter().map(|a| a.to_bits()).collect());
        if let Some(k) = self.map.get(&key) {
            self.hits += 1;
            return Ok(k.clone());
        }
        self.misses += 1;
        let k = solve(d)?;
        self.map.insert(key, k.clone());
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn exact(d: &CellDemand) -> ExactSolution {
        let lp = min_area_lp(d, DEFAULT_TANGENTS).unwrap();
        min_area_exact(d, &lp.col_widths, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap()
    }

    #[test]
    fn single_cell_is_square() {
        let d = CellDemand::new(1, 1, vec![35.8]);
        let e = exact(&d);
        assert!(e.converged);
        assert_relative_eq!(e.solution.area, 35.8, max_relative = 1e-9);
        assert_relative_eq!(e.solution.col_widths[0], 35.8f64.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(e.solution.row_heights[0], 5.9833, epsilon = 1e-4);
        // LP relaxation undershoots; its repair is exactly tight for one cell
        let lp = min_area_lp(&d, DEFAULT_TANGENTS).unwrap();
        assert!(lp.area <= 35.8 + 1e-9);
        assert_relative_eq!(repair(&d, &lp).area, 35.8, max_relative = 1e-12);
    }

    #[test]
    fn empty_grid_is_zero() {
        let d = CellDemand::new(2, 3, vec![0.0; 6]);
        assert_eq!(min_area_lp(&d, 8).unwrap().area, 0.0);
        let e = exact(&d);
        assert_eq!(e.solution.area, 0.0);
        assert_eq!(e.solution.col_widths, vec![0.0; 3]);
    }

    #[test]
    fn one_by_two_packs_perfectly() {
        let d = CellDemand::new(1, 2, vec![4.0, 9.0]);
        let e = exact(&d);
        assert_relative_eq!(e.solution.area, 13.0, max_relative = 1e-9);
        assert!(e.solution.is_feasible(&d, 1e-9));
    }

    #[test]
    fn uniform_two_by_two() {
        let d = CellDemand::new(2, 2, vec![4.0; 4]);
        let e = exact(&d);
        assert_relative_eq!(e.solution.area, 16.0, max_relative = 1e-9);
        for v in e.solution.col_widths.iter().chain(&e.solution.row_heights) {
            assert_relative_eq!(*v, 2.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn l_shape_needs_four_cells_of_area() {
        // three equal cells in a 2x2 grid: optimum is 4a (t + 2a + a²/t at t = a)
        let a = 37.1;
        let d = CellDemand::new(2, 2, vec![a, a, a, 0.0]);
        let e = exact(&d);
        assert_relative_eq!(e.solution.area, 4.0 * a, max_relative = 1e-8);
    }

    #[test]
    fn anti_diagonal() {
        // {{1,100},{100,1}}: symmetric optimum W = H = (10, 10), area 400
        let d = CellDemand::new(2, 2, vec![1.0, 100.0, 100.0, 1.0]);
        let e = exact(&d);
        assert_relative_eq!(e.solution.area, 400.0, max_relative = 1e-8);
    }

    #[test]
    fn tangent_lp_rejects_single_tangent() {
        let d = CellDemand::new(1, 1, vec![1.0]);
        assert!(min_area_lp(&d, 1).is_err());
        assert_eq!(tangent_points(16.0, 8).len(), 8);
        let t = tangent_points(16.0, 8);
        assert_relative_eq!(t[0], 1.0);
        assert_relative_eq!(t[7], 16.0, max_relative = 1e-12);
    }
}
