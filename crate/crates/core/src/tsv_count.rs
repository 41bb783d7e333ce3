// SPDX-License-Identifier: Apache-2.0

//! Step 3: number of TSV arrays per layer boundary.
//!
//! For a candidate count `i`, arrays are dropped uniformly at random on
//! distinct cell centers of the upper layer of the boundary. Every component
//! with traffic across the boundary joins its nearest array (Manhattan); its
//! bandwidth is the sum of all its crossing flows in either direction, so
//! both endpoints of a flow contribute. The expected wiring term is averaged
//! over `samples` placements and
//! `C3(i) = w_area·i·K + w_util·E[Σ_j b_j d_j]`.

use rand::seq::index::sample;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::anneal::SaRng;
use crate::error::{Error, Result};
use crate::model::{Instance, LayerAssignment, LayerFloorplan, ObjectiveWeights};

pub const DEFAULT_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEstimate {
    /// Mean bandwidth served, Mb/s.
    pub bandwidth: f64,
    /// Bandwidth-weighted mean distance to the array, mm.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsvEstimate {
    pub count: usize,
    /// Arrays ranked by cell index within each sample, averaged per rank.
    pub arrays: Vec<ArrayEstimate>,
    /// Mean Σ b_j d_j over samples, mm·Mb/s.
    pub wiring: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsvPlan {
    pub boundary: usize,
    pub count: usize,
    pub curve: Vec<TsvEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsvParams {
    pub samples: usize,
    pub seed: u64,
    /// K, mm².
    pub koz_area: f64,
    pub weights: ObjectiveWeights,
}

/// A component with traffic across a boundary: planar position and its
/// total crossing bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub component: usize,
    pub x: f64,
    pub y: f64,
    pub bandwidth: f64,
}

/// Components with flows crossing `boundary`, positioned in their own layer.
pub fn boundary_endpoints(
    inst: &Instance,
    assignment: &LayerAssignment,
    fps: &[LayerFloorplan],
    boundary: usize,
) -> Result<Vec<Endpoint>> {
    let mut bw = vec![0.0; inst.num_components()];
    for f in inst.flows() {
        let (a, b) = (assignment.layer_of[f.src], assignment.layer_of[f.dst]);
        if a.min(b) <= boundary && boundary < a.max(b) {
            bw[f.src] += f.bandwidth;
            bw[f.dst] += f.bandwidth;
        }
    }
    let mut out = Vec::new();
    for (c, &b) in bw.iter().enumerate() {
        if b > 0.0 {
            let fp = &fps[assignment.layer_of[c]];
            let cell = fp.cell_of_component(c).ok_or_else(|| {
                Error::IncompleteSolution(format!("component {} is not placed", inst.component_id(c)))
            })?;
            let (x, y) = fp.center(cell);
            out.push(Endpoint {
                component: c,
                x,
                y,
                bandwidth: b,
            });
        }
    }
    Ok(out)
}

fn count_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Assigns each endpoint to its nearest site (ties: lowest site) and
/// returns per-site (bandwidth, Σ bandwidth·distance).
pub fn serve(endpoints: &[Endpoint], sites: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); sites.len()];
    for e in endpoints {
        let mut best = (f64::INFINITY, 0);
        for (j, &(x, y)) in sites.iter().enumerate() {
            let d = (e.x - x).abs() + (e.y - y).abs();
            if d < best.0 {
                best = (d, j);
            }
        }
        out[best.1].0 += e.bandwidth;
        out[best.1].1 += e.bandwidth * best.0;
    }
    out
}

/// Sampled estimate of `i` arrays on the cell centers of `upper`.
pub fn estimate_arrays(
    endpoints: &[Endpoint],
    upper: &LayerFloorplan,
    i: usize,
    p: &TsvParams,
) -> Result<TsvEstimate> {
    let TsvParams {
        samples,
        seed,
        koz_area,
        weights: w,
    } = *p;
    let cells = upper.cells.len();
    if i > cells {
        return Err(Error::TooManyArrays {
            requested: i,
            available: cells,
        });
    }
    if i == 0 {
        if !endpoints.is_empty() {
            return Err(Error::InvalidParams(
                "a boundary with traffic needs at least one TSV array".into(),
            ));
        }
        return Ok(TsvEstimate {
            count: 0,
            arrays: vec![],
            wiring: 0.0,
            c3: 0.0,
        });
    }
    if samples == 0 {
        return Err(Error::InvalidParams("samples must be >= 1".into()));
    }
    let mut rng = SaRng::seed_from_u64(count_seed(seed, i));
    let mut bw_sum = vec![0.0; i];
    let mut bd_sum = vec![0.0; i];
    for _ in 0..samples {
        let mut picked = sample(&mut rng, cells, i).into_vec();
        picked.sort_unstable();
        let sites: Vec<(f64, f64)> = picked.iter().map(|&c| upper.center(c)).collect();
        for (j, (b, bd)) in serve(endpoints, &sites).into_iter().enumerate() {
            bw_sum[j] += b;
            bd_sum[j] += bd;
        }
    }
    let s = samples as f64;
    let arrays: Vec<ArrayEstimate> = (0..i)
        .map(|j| ArrayEstimate {
            bandwidth: bw_sum[j] / s,
            distance: if bw_sum[j] > 0.0 { bd_sum[j] / bw_sum[j] } else { 0.0 },
        })
        .collect();
    let wiring = bd_sum.iter().sum::<f64>() / s;
    Ok(TsvEstimate {
        count: i,
        arrays,
        wiring,
        c3: w.area * i as f64 * koz_area + w.util * wiring,
    })
}

/// Exhaustive search over `i = 1..=max_i` (or `i = 0` for a traffic-free
/// boundary); ties go to the smaller count.
pub fn choose_count(
    endpoints: &[Endpoint],
    upper: &LayerFloorplan,
    boundary: usize,
    max_i: usize,
    p: &TsvParams,
) -> Result<TsvPlan> {
    if endpoints.is_empty() {
        return Ok(TsvPlan {
            boundary,
            count: 0,
            curve: vec![estimate_arrays(endpoints, upper, 0, p)?],
        });
    }
    if max_i == 0 {
        return Err(Error::InsufficientCandidates {
            boundary,
            needed: 1,
            available: 0,
        });
    }
    let mut curve = Vec::with_capacity(max_i);
    for i in 1..=max_i {
        curve.push(estimate_arrays(endpoints, upper, i, p)?);
    }
    let best = curve
        .iter()
        .enumerate()
        .fold(0, |b, (k, e)| if e.c3 < curve[b].c3 { k } else { b });
    Ok(TsvPlan {
        boundary,
        count: curve[best].count,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(rows: usize, cols: usize, w: f64) -> LayerFloorplan {
        let mut fp = LayerFloorplan::new(1, rows, cols, vec![None; rows * cols]);
        fp.col_widths = vec![w; cols];
        fp.row_heights = vec![w; rows];
        fp
    }

    fn params(samples: usize, seed: u64) -> TsvParams {
        TsvParams {
            samples,
            seed,
            koz_area: 2.0,
            weights: ObjectiveWeights::default(),
        }
    }

    fn ep(component: usize, x: f64, y: f64, bandwidth: f64) -> Endpoint {
        Endpoint {
            component,
            x,
            y,
            bandwidth,
        }
    }

    #[test]
    fn traffic_free_boundary_has_no_arrays() {
        let p = choose_count(&[], &layer(2, 2, 1.0), 0, 4, &params(64, 1)).unwrap();
        assert_eq!(p.count, 0);
        assert_eq!(p.curve[0].c3, 0.0);
    }

    #[test]
    fn single_array_formula() {
        // one 1x1 upper grid, site at the die center; endpoints 3 mm away each
        let upper = layer(1, 1, 2.0);
        let eps = [ep(0, 3.0, 0.0, 10.0), ep(1, 0.0, -3.0, 10.0)];
        let e = estimate_arrays(&eps, &upper, 1, &params(8, 0)).unwrap();
        assert!((e.c3 - 62.0).abs() < 1e-12);
        assert!((e.arrays[0].bandwidth - 20.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_arrays() {
        let r = estimate_arrays(&[ep(0, 0.0, 0.0, 1.0)], &layer(1, 2, 1.0), 3, &params(4, 0));
        assert!(matches!(r, Err(Error::TooManyArrays { requested: 3, available: 2 })));
    }

    #[test]
    fn argmin_matches_direct_evaluation() {
        let upper = layer(2, 2, 3.0);
        let eps = [
            ep(0, -1.5, -1.5, 40.0),
            ep(1, 1.5, -1.5, 40.0),
            ep(2, -1.5, 1.5, 40.0),
            ep(3, 1.5, 1.5, 40.0),
        ];
        let plan = choose_count(&eps, &upper, 0, 4, &params(64, 9)).unwrap();
        let direct: Vec<f64> = (1..=4)
            .map(|i| estimate_arrays(&eps, &upper, i, &params(64, 9)).unwrap().c3)
            .collect();
        let mut best = 0;
        for (k, c) in direct.iter().enumerate() {
            if *c < direct[best] {
                best = k;
            }
        }
        assert_eq!(plan.count, best + 1);
        // all four arrays put every endpoint on a site: wiring 0, C3 = 4K
        assert!((direct[3] - 8.0).abs() < 1e-12);
    }
}
