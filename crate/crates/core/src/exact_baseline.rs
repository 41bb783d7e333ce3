// SPDX-License-Identifier: Apache-2.0

//! Exact joint optimization for tiny instances by exhaustive enumeration.
//!
//! The search space is the one the heuristic explores: every feasible layer
//! assignment (with the same every-layer rule as Step 1), every injective
//! placement of each layer's components on its near-square grid whose
//! occupied cells are connected, and every set of vertical links forming a
//! matching between the routers of adjacent layers. Each configuration is
//! legalized, and kept only if every redistribution length in the legalized
//! geometry is within R; the global cost is evaluated with full routing.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::area_kernel::KernelCache;
use crate::error::{Error, Result};
use crate::floorplan_sa::{grid_dims, legalize_cached, occupied_connected, pad_grids, update_rd_lengths};
use crate::layer_assign::{cover_required, AssignOptions};
use crate::model::{Instance, LayerAssignment, LayerFloorplan, ObjectiveWeights, Solution, VerticalLink};
use crate::objective::{self, Metrics};
use crate::vlink_sa::{matchings, Candidate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExactLimits {
    pub components: usize,
    pub layers: usize,
    /// Cells per layer grid.
    pub grid_cells: usize,
    /// Router pairs across a boundary.
    pub vcands: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            components: 6,
            layers: 2,
            grid_cells: 6,
            vcands: 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    pub solution: Solution,
    pub metrics: Metrics,
    /// Configurations enumerated (before connectivity and RD filtering).
    pub configurations: u64,
    /// Configurations that were evaluated successfully.
    pub feasible: u64,
}

fn falling(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul((n - i) as u64))
}

fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128).min(u64::MAX as u128) as u64
}

/// Number of matchings (of any size, including empty) in `K_{a,b}`.
pub fn matching_count(a: usize, b: usize) -> u64 {
    (0..=a.min(b)).fold(0u64, |acc, k| {
        acc.saturating_add(binom(a, k).saturating_mul(binom(b, k)).saturating_mul(falling(k, k)))
    })
}

fn assignments(inst: &Instance, cover: bool) -> Vec<LayerAssignment> {
    let n = inst.num_components();
    let feas: Vec<Vec<usize>> = (0..n).map(|c| inst.feasible_layers(c)).collect();
    if feas.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let layer_of: Vec<usize> = (0..n).map(|c| feas[c][idx[c]]).collect();
        if !cover || (0..inst.num_layers()).all(|l| layer_of.contains(&l)) {
            out.push(LayerAssignment { layer_of });
        }
        let mut k = n;
        // last component varies fastest
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < feas[k].len() {
                break;
            }
            idx[k] = 0;
        }
        if n == 0 {
            return out;
        }
    }
}

/// Closed-form number of configurations [`solve_exact`] enumerates,
/// saturating at `u64::MAX`.
pub fn enumeration_size(inst: &Instance, require_every_layer: bool) -> u64 {
    let opts = AssignOptions {
        require_every_layer,
        ..AssignOptions::default()
    };
    let cover = cover_required(inst, &opts);
    // assignments counted per vector of layer sizes
    let mut ways: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    ways.insert(vec![0; inst.num_layers()], 1);
    for c in 0..inst.num_components() {
        let mut next = BTreeMap::new();
        for (sizes, w) in &ways {
            for l in inst.feasible_layers(c) {
                let mut s = sizes.clone();
                s[l] += 1;
                let e: &mut u64 = next.entry(s).or_default();
                *e = e.saturating_add(*w);
            }
        }
        ways = next;
    }
    ways.iter()
        .filter(|(sizes, _)| !cover || sizes.iter().all(|&n| n > 0))
        .fold(0u64, |acc, (sizes, &w)| {
            let placements = sizes.iter().fold(1u64, |p, &n| {
                let (r, c) = grid_dims(n);
                p.saturating_mul(falling(r * c, n))
            });
            let links = sizes
                .windows(2)
                .fold(1u64, |p, w| p.saturating_mul(matching_count(w[0], w[1])));
            acc.saturating_add(w.saturating_mul(placements).saturating_mul(links))
        })
}

/// Injective placements of `members` on `cells` grid cells.
fn placements(members: &[usize], cells: usize) -> Vec<Vec<Option<usize>>> {
    fn rec(
        members: &[usize],
        k: usize,
        cells: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        if k == members.len() {
            out.push(cells.clone());
            return;
        }
        for i in 0..cells.len() {
            if cells[i].is_none() {
                cells[i] = Some(members[k]);
                rec(members, k + 1, cells, out);
                cells[i] = None;
            }
        }
    }
    let mut out = Vec::new();
    rec(members, 0, &mut vec![None; cells], &mut out);
    out
}

fn check_limits(inst: &Instance, limits: &ExactLimits, cover: bool) -> Result<()> {
    let size = enumeration_size(inst, cover);
    let too_large = |what: String| {
        Err(Error::InstanceTooLarge(format!(
            "{what}; the enumeration would visit {} configurations",
            if size == u64::MAX { "more than 1.8e19".to_string() } else { format!("about {size}") }
        )))
    };
    if inst.num_components() > limits.components {
        return too_large(format!(
            "{} components exceed the limit of {}",
            inst.num_components(),
            limits.components
        ));
    }
    if inst.num_layers() > limits.layers {
        return too_large(format!(
            "{} layers exceed the limit of {}",
            inst.num_layers(),
            limits.layers
        ));
    }
    for a in assignments(inst, cover) {
        let sizes: Vec<usize> = (0..inst.num_layers()).map(|l| a.members(l).len()).collect();
        for &n in &sizes {
            let (r, c) = grid_dims(n);
            if r * c > limits.grid_cells {
                return too_large(format!(
                    "a {r}x{c} grid exceeds the limit of {} cells",
                    limits.grid_cells
                ));
            }
        }
        for w in sizes.windows(2) {
            if w[0] * w[1] > limits.vcands {
                return too_large(format!(
                    "{} vertical-link candidates exceed the limit of {}",
                    w[0] * w[1],
                    limits.vcands
                ));
            }
        }
    }
    Ok(())
}

struct Best {
    cost: f64,
    solution: Solution,
    metrics: Metrics,
}

/// Enumerates one assignment; returns (best, configurations, feasible).
fn solve_assignment(
    inst: &Instance,
    a: &LayerAssignment,
    w: &ObjectiveWeights,
    aligned: bool,
) -> Result<(Option<Best>, u64, u64)> {
    let layers = inst.num_layers();
    let rd_max = inst.tech.rd_max_length;
    let per_layer: Vec<(usize, usize, Vec<Vec<Option<usize>>>)> = (0..layers)
        .map(|l| {
            let members = a.members(l);
            let (r, c) = grid_dims(members.len());
            (r, c, placements(&members, r * c))
        })
        .collect();
    let mut cache = KernelCache::default();
    let mut best: Option<Best> = None;
    let mut configurations = 0u64;
    let mut feasible = 0u64;

    let mut idx = vec![0usize; layers];
    loop {
        let mut fps: Vec<LayerFloorplan> = (0..layers)
            .map(|l| {
                let (r, c, ref ps) = per_layer[l];
                if ps.is_empty() || r == 0 {
                    LayerFloorplan::empty(l)
                } else {
                    LayerFloorplan::new(l, r, c, ps[idx[l]].clone())
                }
            })
            .collect();
        if aligned {
            pad_grids(&mut fps);
        }
        let link_sets = boundary_link_sets(&fps);
        let count: u64 = link_sets.iter().map(|s| s.len() as u64).product();
        configurations += count;
        if fps.iter().all(|fp| occupied_connected(fp.rows, fp.cols, &fp.cells)) {
            let mut sel = vec![0usize; link_sets.len()];
            loop {
                let vlinks: Vec<VerticalLink> = sel
                    .iter()
                    .enumerate()
                    .flat_map(|(b, &i)| link_sets[b][i].iter().copied())
                    .collect();
                if let Some((cost, sol, metrics)) = evaluate_config(inst, a, &fps, vlinks, w, aligned, rd_max, &mut cache)? {
                    feasible += 1;
                    if best.as_ref().is_none_or(|b| cost < b.cost) {
                        best = Some(Best {
                            cost,
                            solution: sol,
                            metrics,
                        });
                    }
                }
                if !advance(&mut sel, &link_sets.iter().map(Vec::len).collect::<Vec<_>>()) {
                    break;
                }
            }
        }
        let lens: Vec<usize> = per_layer.iter().map(|p| p.2.len().max(1)).collect();
        if !advance(&mut idx, &lens) {
            break;
        }
    }
    Ok((best, configurations, feasible))
}

/// Odometer increment, last position fastest. False once wrapped around.
fn advance(idx: &mut [usize], lens: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < lens[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// All matchings (any size) between the routers of each adjacent pair.
fn boundary_link_sets(fps: &[LayerFloorplan]) -> Vec<Vec<Vec<VerticalLink>>> {
    (0..fps.len().saturating_sub(1))
        .map(|b| {
            let cands: Vec<Candidate> = fps[b]
                .occupied()
                .flat_map(|(lc, _)| {
                    fps[b + 1].occupied().map(move |(uc, _)| Candidate {
                        lower_cell: lc,
                        upper_cell: uc,
                        rd_length: 0.0,
                    })
                })
                .collect();
            let max = fps[b].occupied().count().min(fps[b + 1].occupied().count());
            (0..=max)
                .flat_map(|k| matchings(&cands, k))
                .map(|m| m.iter().map(|&i| cands[i].link(b)).collect())
                .collect()
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn evaluate_config(
    inst: &Instance,
    a: &LayerAssignment,
    fps: &[LayerFloorplan],
    mut vlinks: Vec<VerticalLink>,
    w: &ObjectiveWeights,
    aligned: bool,
    rd_max: f64,
    cache: &mut KernelCache,
) -> Result<Option<(f64, Solution, Metrics)>> {
    let legal = legalize_cached(inst, fps, &vlinks, aligned, cache)?;
    update_rd_lengths(&legal, &mut vlinks);
    if vlinks.iter().any(|v| v.rd_length > rd_max + 1e-9) {
        return Ok(None);
    }
    let sol = Solution {
        assignment: a.clone(),
        floorplans: legal,
        vlinks,
    };
    match objective::evaluate(inst, &sol, w) {
        Ok(e) => Ok(Some((e.metrics.cost.total, sol, e.metrics))),
        Err(Error::Unreachable { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Minimum global cost over the whole search space. Ties go to the first
/// configuration in enumeration order.
pub fn solve_exact(
    inst: &Instance,
    w: &ObjectiveWeights,
    limits: &ExactLimits,
    require_every_layer: bool,
) -> Result<ExactResult> {
    w.validate()?;
    let opts = AssignOptions {
        require_every_layer,
        ..AssignOptions::default()
    };
    for c in 0..inst.num_components() {
        if inst.feasible_layers(c).is_empty() {
            return Err(Error::NoFeasibleLayer(inst.component_id(c).to_string()));
        }
    }
    let cover = cover_required(inst, &opts);
    check_limits(inst, limits, cover)?;
    let aligned = inst.tech.rd_max_length == 0.0;
    let all = assignments(inst, cover);
    let results: Vec<(Option<Best>, u64, u64)> = all
        .par_iter()
        .map(|a| solve_assignment(inst, a, w, aligned))
        .collect::<Result<_>>()?;
    let mut best: Option<Best> = None;
    let mut configurations = 0;
    let mut feasible = 0;
    for (b, n, f) in results {
        configurations += n;
        feasible += f;
        if let Some(b) = b {
            if best.as_ref().is_none_or(|cur| b.cost < cur.cost) {
                best = Some(b);
            }
        }
    }
    let best = best.ok_or_else(|| {
        Error::SolverFailure("no configuration satisfies the redistribution limit".into())
    })?;
    Ok(ExactResult {
        solution: best.solution,
        metrics: best.metrics,
        configurations,
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{case_study_ppa, tech};
    use crate::model::{validate_instance, Component, CoreGraph, Flow};

    fn inst(n: usize, layers: &[&str], flows: &[(usize, usize)]) -> Instance {
        let components = (0..n)
            .map(|i| Component {
                id: format!("c{i}"),
                kind: "CPU".into(),
            })
            .collect();
        let flows = flows
            .iter()
            .map(|&(s, d)| Flow {
                src: format!("c{s}"),
                dst: format!("c{d}"),
                bandwidth: 1.0,
            })
            .collect();
        validate_instance(CoreGraph { components, flows }, case_study_ppa(), tech(layers)).unwrap()
    }

    #[test]
    fn matching_counts() {
        assert_eq!(matching_count(0, 3), 1);
        assert_eq!(matching_count(1, 1), 2);
        // K_{2,2}: empty, 4 singles, 2 perfect
        assert_eq!(matching_count(2, 2), 7);
        assert_eq!(matching_count(3, 2), 1 + 6 + 6);
    }

    #[test]
    fn single_component() {
        let i = inst(1, &["28nm"], &[]);
        let r = solve_exact(&i, &ObjectiveWeights::default(), &ExactLimits::default(), true).unwrap();
        // area (35.8 + 1.3) + power 2 + perf 2
        assert!((r.metrics.cost.total - 41.1).abs() < 1e-6, "{}", r.metrics.cost.total);
        assert_eq!(r.configurations, 1);
    }

    #[test]
    fn two_components_two_layers() {
        let i = inst(2, &["28nm", "28nm"], &[(0, 1)]);
        let w = ObjectiveWeights::default();
        let r = solve_exact(&i, &w, &ExactLimits::default(), true).unwrap();
        // one component per layer joined by one link; lower 35.8 + 1.8,
        // upper 35.8 + 1.8 + 2 (KOZ), power and perf 4 each. Both routers
        // sit on the stack axis, so the link has no planar length.
        let (lo, up) = (37.6f64, 39.6f64);
        assert!((r.metrics.cost.total - (lo + up + 8.0)).abs() < 1e-6, "{:?}", r.metrics.cost);
        assert!(r.metrics.bw_times_distance.abs() < 1e-9);
        // 2 assignments x 1 placement each x 2 link sets
        assert_eq!(r.configurations, 4);
        assert_eq!(r.configurations, enumeration_size(&i, true));
    }

    #[test]
    fn too_large_reports_size() {
        let i = inst(7, &["28nm", "28nm"], &[]);
        match solve_exact(&i, &ObjectiveWeights::default(), &ExactLimits::default(), true) {
            Err(Error::InstanceTooLarge(msg)) => assert!(msg.contains("configurations")),
            other => panic!("{:?}", other.map(|r| r.configurations)),
        }
    }
}
