// SPDX-License-Identifier: Apache-2.0

//! Step 2: per-layer mesh floorplanning by simulated annealing, and
//! Step 5: legalization after vertical links are known.
//!
//! The SA state is the cell→component map of one layer. A move swaps the
//! contents of two random cells; moves that split the occupied cells into
//! disconnected groups are rejected, as the layer mesh must stay connected.
//! The in-loop area comes from the repaired LP kernel, the final widths and
//! heights from the exact kernel.
//!
//! In aligned mode all layers are padded to the largest grid of the stack
//! and share column widths and row heights (solved on the cell-wise maximum
//! demand), so routers at the same row and column sit exactly above each
//! other.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{anneal, SaParams, SaRng};
use crate::area_kernel::{self, CellDemand, KernelCache, KernelSolution};
use crate::error::{Error, Result};
use crate::model::{
    IndexedFlow, Instance, LayerAssignment, LayerFloorplan, ObjectiveWeights, RouterKind, VerticalLink,
};
use crate::objective::cell_demands;

pub const STEP2_DEFAULT: SaParams = SaParams {
    initial_temp: 20.0,
    iterations: 120,
    cooling: 0.97,
    seed: 0,
};

/// Near-square grid: `ceil(sqrt(n))` rows by `ceil(n / rows)` columns.
pub fn grid_dims(n: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    let rows = (n as f64).sqrt().ceil() as usize;
    (rows, n.div_ceil(rows))
}

/// Grid for `n` components under a fixed `rows x cols` mesh: extra rows are
/// added when the mesh is too small.
pub fn fixed_dims(n: usize, mesh: (usize, usize)) -> (usize, usize) {
    let (rows, cols) = mesh;
    if n <= rows * cols {
        (rows, cols)
    } else {
        (n.div_ceil(cols), cols)
    }
}

/// Whether the occupied cells form one 4-connected group.
pub fn occupied_connected(rows: usize, cols: usize, cells: &[Option<usize>]) -> bool {
    let Some(start) = cells.iter().position(Option::is_some) else {
        return true;
    };
    let total = cells.iter().filter(|c| c.is_some()).count();
    let mut seen = vec![false; cells.len()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut count = 0;
    while let Some(i) = stack.pop() {
        count += 1;
        let (r, c) = (i / cols, i % cols);
        let mut nbs = Vec::with_capacity(4);
        if c > 0 {
            nbs.push(i - 1);
        }
        if c + 1 < cols {
            nbs.push(i + 1);
        }
        if r > 0 {
            nbs.push(i - cols);
        }
        if r + 1 < rows {
            nbs.push(i + cols);
        }
        for j in nbs {
            if !seen[j] && cells[j].is_some() {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    count == total
}

/// Intralayer traffic cost under XY routing over the full grid.
/// Returns `(bw_times_distance, peak_penalty)`.
pub fn xy_traffic(
    rows: usize,
    cols: usize,
    cells: &[Option<usize>],
    geometry: &KernelSolution,
    flows: &[IndexedFlow],
    capacity: f64,
) -> (f64, f64) {
    if flows.is_empty() {
        return (0.0, 0.0);
    }
    let mut pos = std::collections::HashMap::with_capacity(cells.len());
    for (i, c) in cells.iter().enumerate() {
        if let Some(c) = c {
            pos.insert(*c, (i / cols, i % cols));
        }
    }
    let xs: Vec<f64> = prefix_centers(&geometry.col_widths);
    let ys: Vec<f64> = prefix_centers(&geometry.row_heights);
    // directed links: cell * 4 + {east, west, north, south}
    let mut load = vec![0.0; rows * cols * 4];
    let mut util = 0.0;
    for f in flows {
        let (Some(&(r0, c0)), Some(&(r1, c1))) = (pos.get(&f.src), pos.get(&f.dst)) else {
            continue;
        };
        util += f.bandwidth * ((xs[c0] - xs[c1]).abs() + (ys[r0] - ys[r1]).abs());
        let (mut r, mut c) = (r0, c0);
        while c != c1 {
            let cell = r * cols + c;
            if c < c1 {
                load[cell * 4] += f.bandwidth;
                c += 1;
            } else {
                load[cell * 4 + 1] += f.bandwidth;
                c -= 1;
            }
        }
        while r != r1 {
            let cell = r * cols + c;
            if r < r1 {
                load[cell * 4 + 2] += f.bandwidth;
                r += 1;
            } else {
                load[cell * 4 + 3] += f.bandwidth;
                r -= 1;
            }
        }
    }
    let peak = load.iter().map(|l| (l - capacity).max(0.0)).sum();
    (util, peak)
}

fn prefix_centers(sizes: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    sizes
        .iter()
        .map(|s| {
            let c = acc + s / 2.0;
            acc += s;
            c
        })
        .collect()
}

/// Demands of component + 2D router per cell.
fn step2_demands(inst: &Instance, layer: usize, rows: usize, cols: usize, cells: &[Option<usize>]) -> CellDemand {
    let router = inst.router(layer).area_2d;
    let demand = cells
        .iter()
        .map(|c| match c {
            Some(c) => inst.area(*c, layer).unwrap_or(0.0) + router,
            None => 0.0,
        })
        .collect();
    CellDemand::new(rows, cols, demand)
}

#[derive(Debug, Clone)]
pub struct FloorplanOutcome {
    pub floorplan: LayerFloorplan,
    /// Best SA cost (LP-kernel area based).
    pub sa_cost: f64,
    pub initial_cost: f64,
    pub cost_trace: Vec<f64>,
}

/// Anneals the placement of `members` on one layer.
pub fn floorplan_layer(
    inst: &Instance,
    layer: usize,
    members: &[usize],
    w: &ObjectiveWeights,
    sa: &SaParams,
    dims: Option<(usize, usize)>,
) -> Result<FloorplanOutcome> {
    let n = members.len();
    if n == 0 {
        return Ok(FloorplanOutcome {
            floorplan: LayerFloorplan::empty(layer),
            sa_cost: 0.0,
            initial_cost: 0.0,
            cost_trace: Vec::new(),
        });
    }
    let (rows, cols) = dims.unwrap_or_else(|| grid_dims(n));
    if rows * cols < n {
        return Err(Error::InvalidParams(format!(
            "{rows}x{cols} grid cannot hold {n} components on layer {layer}"
        )));
    }
    let mut initial: Vec<Option<usize>> = members.iter().map(|&c| Some(c)).collect();
    initial.resize(rows * cols, None);

    let flows: Vec<IndexedFlow> = inst
        .flows()
        .iter()
        .filter(|f| members.contains(&f.src) && members.contains(&f.dst))
        .copied()
        .collect();
    let capacity = inst.tech.link_capacity;

    let mut failure = None;
    let mut cost = |cells: &Vec<Option<usize>>| -> f64 {
        let d = step2_demands(inst, layer, rows, cols, cells);
        match area_kernel::solve_lp(&d) {
            Ok(k) => {
                let (util, peak) = if w.util > 0.0 || w.peak > 0.0 {
                    xy_traffic(rows, cols, cells, &k, &flows, capacity)
                } else {
                    (0.0, 0.0)
                };
                w.area * k.area + w.peak * peak + w.util * util
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let total = rows * cols;
    let neighbor = |cells: &Vec<Option<usize>>, rng: &mut SaRng| -> Vec<Option<usize>> {
        if total < 2 {
            return cells.clone();
        }
        let (i, j) = loop {
            let i = rng.random_range(0..total);
            let mut j = rng.random_range(0..total - 1);
            if j >= i {
                j += 1;
            }
            if cells[i].is_some() || cells[j].is_some() {
                break (i, j);
            }
        };
        let mut next = cells.clone();
        next.swap(i, j);
        if occupied_connected(rows, cols, &next) {
            next
        } else {
            cells.clone()
        }
    };

    let initial_cost = cost(&initial);
    let params = sa.with_seed(sa.seed.wrapping_add(layer as u64));
    let result = anneal(initial, neighbor, &mut cost, &params)?;
    if let Some(e) = failure {
        return Err(e);
    }

    let mut fp = LayerFloorplan::new(layer, rows, cols, result.best_state);
    let k = area_kernel::solve(&step2_demands(inst, layer, rows, cols, &fp.cells))?;
    fp.col_widths = k.col_widths;
    fp.row_heights = k.row_heights;
    Ok(FloorplanOutcome {
        floorplan: fp,
        sa_cost: result.best_cost,
        initial_cost,
        cost_trace: result.cost_trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct FloorplanOptions {
    /// Fixed `rows x cols` mesh per layer instead of near-square grids.
    pub fixed_mesh: Option<(usize, usize)>,
    /// Share column widths and row heights across layers.
    pub aligned: bool,
}

/// Floorplans every layer (concurrently) and applies alignment if requested.
pub fn floorplan_all(
    inst: &Instance,
    assignment: &LayerAssignment,
    w: &ObjectiveWeights,
    sa: &SaParams,
    opts: &FloorplanOptions,
) -> Result<Vec<FloorplanOutcome>> {
    let mut outcomes = (0..inst.num_layers())
        .into_par_iter()
        .map(|l| {
            let members = assignment.members(l);
            let dims = opts.fixed_mesh.map(|m| fixed_dims(members.len(), m));
            floorplan_layer(inst, l, &members, w, sa, dims)
        })
        .collect::<Result<Vec<_>>>()?;
    if opts.aligned {
        let mut fps: Vec<LayerFloorplan> = outcomes.iter().map(|o| o.floorplan.clone()).collect();
        pad_grids(&mut fps);
        solve_geometry(inst, &mut fps, true)?;
        for (o, fp) in outcomes.iter_mut().zip(fps) {
            o.floorplan = fp;
        }
    }
    Ok(outcomes)
}

/// Extends `fp` with empty cells to `rows x cols`, keeping every occupied
/// cell at its row and column.
pub fn pad_grid(fp: &LayerFloorplan, rows: usize, cols: usize) -> LayerFloorplan {
    assert!(rows >= fp.rows && cols >= fp.cols);
    let mut out = LayerFloorplan::new(fp.layer, rows, cols, vec![None; rows * cols]);
    for r in 0..fp.rows {
        for c in 0..fp.cols {
            let (from, to) = (r * fp.cols + c, r * cols + c);
            out.cells[to] = fp.cells[from];
            out.router_kinds[to] = fp.router_kinds[from];
            out.koz[to] = fp.koz[from];
        }
        out.row_heights[r] = fp.row_heights[r];
    }
    out.col_widths[..fp.cols].copy_from_slice(&fp.col_widths);
    out
}

/// Pads every non-empty layer to the largest grid of the stack, so that
/// aligned layers have identical outlines.
pub fn pad_grids(fps: &mut [LayerFloorplan]) {
    let rows = fps.iter().map(|f| f.rows).max().unwrap_or(0);
    let cols = fps.iter().map(|f| f.cols).max().unwrap_or(0);
    for fp in fps.iter_mut() {
        if fp.rows > 0 && (fp.rows, fp.cols) != (rows, cols) {
            *fp = pad_grid(fp, rows, cols);
        }
    }
}

/// Recomputes widths and heights of all layers from their current demands
/// (router kinds and KOZs included) with the exact kernel.
pub fn solve_geometry(inst: &Instance, fps: &mut [LayerFloorplan], aligned: bool) -> Result<()> {
    solve_geometry_cached(inst, fps, aligned, &mut KernelCache::default())
}

pub fn solve_geometry_cached(
    inst: &Instance,
    fps: &mut [LayerFloorplan],
    aligned: bool,
    cache: &mut KernelCache,
) -> Result<()> {
    if !aligned {
        for fp in fps.iter_mut() {
            let k = cache.solve(&cell_demands(inst, fp))?;
            fp.col_widths = k.col_widths;
            fp.row_heights = k.row_heights;
        }
        return Ok(());
    }
    let rows = fps.iter().map(|f| f.rows).max().unwrap_or(0);
    let cols = fps.iter().map(|f| f.cols).max().unwrap_or(0);
    let mut joint = vec![0.0f64; rows * cols];
    for fp in fps.iter() {
        let d = cell_demands(inst, fp);
        for r in 0..fp.rows {
            for c in 0..fp.cols {
                let j = &mut joint[r * cols + c];
                *j = j.max(d.get(r, c));
            }
        }
    }
    let k = cache.solve(&CellDemand::new(rows, cols, joint))?;
    for fp in fps.iter_mut() {
        fp.col_widths = k.col_widths[..fp.cols].to_vec();
        fp.row_heights = k.row_heights[..fp.rows].to_vec();
    }
    Ok(())
}

/// Planar Manhattan distance between a lower and an upper router.
pub fn rd_distance(lower: &LayerFloorplan, lower_cell: usize, upper: &LayerFloorplan, upper_cell: usize) -> f64 {
    let (x0, y0) = lower.center(lower_cell);
    let (x1, y1) = upper.center(upper_cell);
    (x0 - x1).abs() + (y0 - y1).abs()
}

/// Recomputes every link's `rd_length` from the given geometry.
pub fn update_rd_lengths(fps: &[LayerFloorplan], vlinks: &mut [VerticalLink]) {
    for v in vlinks.iter_mut() {
        v.rd_length = rd_distance(&fps[v.boundary], v.lower_cell, &fps[v.boundary + 1], v.upper_cell);
    }
}

/// Sets router kinds from the vertical links: the lower router connects up,
/// the upper router connects down.
pub fn mark_routers(fps: &mut [LayerFloorplan], vlinks: &[VerticalLink]) {
    for fp in fps.iter_mut() {
        fp.router_kinds.iter_mut().for_each(|k| *k = RouterKind::TwoD);
    }
    for v in vlinks {
        let lo = &mut fps[v.boundary].router_kinds[v.lower_cell];
        *lo = lo.with_up();
        let up = &mut fps[v.boundary + 1].router_kinds[v.upper_cell];
        *up = up.with_down();
    }
}

/// Step 5. Marks 3D routers, charges one KOZ per vertical link to the upper
/// layer and re-solves the geometry; cell contents are unchanged. The result
/// depends only on the cell contents and the links, not on the incoming
/// widths and heights.
///
/// A link without redistribution (or with `rd_max_length == 0`) charges its
/// KOZ to the downward router's own cell. Otherwise the KOZ goes to the
/// upper-layer cell whose center lies between the two routers (bounding box
/// of the centers in the 2D-router geometry) and that yields the smallest
/// layer area; ties go to the cell nearest the upper router, then to the
/// lowest cell index.
pub fn legalize(
    inst: &Instance,
    fps: &[LayerFloorplan],
    vlinks: &[VerticalLink],
    aligned: bool,
) -> Result<Vec<LayerFloorplan>> {
    legalize_cached(inst, fps, vlinks, aligned, &mut KernelCache::default())
}

pub fn legalize_cached(
    inst: &Instance,
    fps: &[LayerFloorplan],
    vlinks: &[VerticalLink],
    aligned: bool,
    cache: &mut KernelCache,
) -> Result<Vec<LayerFloorplan>> {
    let mut base: Vec<LayerFloorplan> = fps.to_vec();
    for fp in base.iter_mut() {
        fp.koz.iter_mut().for_each(|k| *k = 0);
        fp.router_kinds.iter_mut().for_each(|k| *k = RouterKind::TwoD);
    }
    solve_geometry_cached(inst, &mut base, aligned, cache)?;
    let mut out = base.clone();
    mark_routers(&mut out, vlinks);

    let mut order: Vec<&VerticalLink> = vlinks.iter().collect();
    order.sort_by(|a, b| {
        (a.boundary, a.upper_cell, a.lower_cell).cmp(&(b.boundary, b.upper_cell, b.lower_cell))
    });
    let rd_allowed = inst.tech.rd_max_length > 0.0;
    for v in order {
        let upper_layer = v.boundary + 1;
        let lower = &base[v.boundary];
        let upper = &base[upper_layer];
        let rd = rd_distance(lower, v.lower_cell, upper, v.upper_cell);
        if !rd_allowed || rd <= 1e-9 {
            out[upper_layer].koz[v.upper_cell] += 1;
            continue;
        }
        let (ux, uy) = upper.center(v.upper_cell);
        let (lx, ly) = lower.center(v.lower_cell);
        let (xmin, xmax) = (ux.min(lx) - 1e-9, ux.max(lx) + 1e-9);
        let (ymin, ymax) = (uy.min(ly) - 1e-9, uy.max(ly) + 1e-9);
        let mut best: Option<(f64, f64, usize)> = None;
        for cell in 0..upper.cells.len() {
            let (x, y) = upper.center(cell);
            if x < xmin || x > xmax || y < ymin || y > ymax {
                continue;
            }
            let mut trial = out[upper_layer].clone();
            trial.koz[cell] += 1;
            let area = cache.solve(&cell_demands(inst, &trial))?.area;
            let dist = (x - ux).abs() + (y - uy).abs();
            let better = match best {
                None => true,
                Some((ba, bd, _)) => {
                    let eps = 1e-9 * ba.max(1.0);
                    area < ba - eps || (area <= ba + eps && dist < bd - 1e-12)
                }
            };
            if better {
                best = Some((area, dist, cell));
            }
        }
        let cell = best.map_or(v.upper_cell, |b| b.2);
        out[upper_layer].koz[cell] += 1;
    }
    solve_geometry_cached(inst, &mut out, aligned, cache)?;
    Ok(out)
}
