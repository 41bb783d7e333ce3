// SPDX-License-Identifier: Apache-2.0

//! Dense simplex for covering LPs:
//!
//! ```text
//! minimize  c·x   subject to  A x >= b,  x >= 0,   with c >= 0.
//! ```
//!
//! The dual `maximize b·y  s.t.  Aᵀy <= c, y >= 0` starts feasible at the
//! origin because `c >= 0`, so a single-phase tableau method suffices. The
//! primal optimum is read off the reduced costs of the dual slacks.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

/// One row `coeffs · x >= rhs`. Coefficients are dense over all variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

pub fn minimize_covering(cost: &[f64], constraints: &[Constraint]) -> Result<LpSolution> {
    let n = cost.len();
    let m = constraints.len();
    if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::SolverFailure("objective coefficients must be >= 0".into()));
    }
    for (i, row) in constraints.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(Error::SolverFailure(format!(
                "constraint {i} has {} coefficients, expected {n}",
                row.coeffs.len()
            )));
        }
    }
    if m == 0 {
        return Ok(LpSolution {
            x: vec![0.0; n],
            objective: 0.0,
            pivots: 0,
        });
    }

    // Dual tableau: n rows (one per primal variable), m + n columns + rhs.
    let width = m + n + 1;
    let mut t = vec![0.0; n * width];
    for i in 0..n {
        let row = &mut t[i * width..(i + 1) * width];
        for (j, con) in constraints.iter().enumerate() {
            row[j] = con.coeffs[i];
        }
        row[m + i] = 1.0;
        row[width - 1] = cost[i];
    }
    let mut obj = vec![0.0; width];
    for (j, con) in constraints.iter().enumerate() {
        obj[j] = -con.rhs;
    }
    let mut basis: Vec<usize> = (m..m + n).collect();

    let mut pivots = 0;
    let mut degenerate_run = 0;
    loop {
        // Dantzig pricing, Bland's rule after a long degenerate run.
        let bland = degenerate_run > 50;
        let mut enter = None;
        let mut best = -EPS;
        for (j, &v) in obj[..width - 1].iter().enumerate() {
            if v < -EPS {
                if bland {
                    enter = Some(j);
                    break;
                }
                if v < best {
                    best = v;
                    enter = Some(j);
                }
            }
        }
        let Some(e) = enter else { break };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..n {
            let a = t[i * width + e];
            if a > EPS {
                let ratio = t[i * width + width - 1] / a;
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - 1e-13 || (ratio <= lr + 1e-13 && basis[i] < basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(Error::SolverFailure(
                "primal infeasible (dual unbounded)".into(),
            ));
        };
        if ratio.abs() < 1e-13 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }

        let piv = t[r * width + e];
        for k in 0..width {
            t[r * width + k] /= piv;
        }
        let pivot_row: Vec<f64> = t[r * width..(r + 1) * width].to_vec();
        for i in 0..n {
            if i == r {
                continue;
            }
            let f = t[i * width + e];
            if f != 0.0 {
                let row = &mut t[i * width..(i + 1) * width];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
        let f = obj[e];
        for (x, p) in obj.iter_mut().zip(&pivot_row) {
            *x -= f * p;
        }
        basis[r] = e;

        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::SolverFailure("pivot limit exceeded".into()));
        }
    }

    let x: Vec<f64> = (0..n).map(|i| obj[m + i].max(0.0)).collect();
    Ok(LpSolution {
        objective: obj[width - 1],
        x,
        pivots,
    })
}
