// SPDX-License-Identifier: Apache-2.0

//! Five-term cost and reported metrics.
//!
//! The global area term sums the bounding areas of all layers; the Step 1
//! area term ([`step1_cost`]) takes the maximum over layers instead.

use serde::Serialize;

use crate::area_kernel::CellDemand;
use crate::error::{Error, Result};
use crate::model::{Instance, LayerAssignment, LayerFloorplan, ObjectiveWeights, Solution};
use crate::net_route::{build_network, route_all, TrafficEval};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CostBreakdown {
    pub area: f64,
    pub power: f64,
    pub perf: f64,
    pub peak: f64,
    pub util: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(area: f64, power: f64, perf: f64, peak: f64, util: f64, w: &ObjectiveWeights) -> Self {
        CostBreakdown {
            area,
            power,
            perf,
            peak,
            util,
            total: w.area * area + w.power * power + w.perf * perf + w.peak * peak + w.util * util,
        }
    }
}

/// Σ power and Σ perf of components and their routers in the assigned layers.
pub fn power_perf(inst: &Instance, assignment: &LayerAssignment) -> Result<(f64, f64)> {
    let mut power = 0.0;
    let mut perf = 0.0;
    for (c, &l) in assignment.layer_of.iter().enumerate() {
        let p = inst.ppa(c, l).ok_or_else(|| {
            Error::IncompleteSolution(format!(
                "component {} assigned to infeasible layer {l}",
                inst.component_id(c)
            ))
        })?;
        let r = inst.router(l);
        power += p.power + r.power;
        perf += p.perf + r.perf;
    }
    Ok((power, perf))
}

/// C1 = w1·max_l Σ area + w2·Σ power + w3·Σ perf over components only.
pub fn step1_cost(inst: &Instance, layer_of: &[usize], area_w: f64, power_w: f64, perf_w: f64) -> f64 {
    let mut areas = vec![0.0; inst.num_layers()];
    let mut power = 0.0;
    let mut perf = 0.0;
    for (c, &l) in layer_of.iter().enumerate() {
        let p = inst.ppa(c, l).expect("feasible assignment");
        areas[l] += p.area;
        power += p.power;
        perf += p.perf;
    }
    let max_area = areas.iter().copied().fold(0.0, f64::max);
    area_w * max_area + power_w * power + perf_w * perf
}

/// Area demand of every cell: component + router (2D/3D) + charged KOZs.
pub fn cell_demands(inst: &Instance, fp: &LayerFloorplan) -> CellDemand {
    let router = inst.router(fp.layer);
    let demand = (0..fp.cells.len())
        .map(|cell| {
            let koz = fp.koz[cell] as f64 * inst.tech.koz_area;
            match fp.cells[cell] {
                Some(c) => {
                    inst.area(c, fp.layer).unwrap_or(0.0) + router.area(fp.router_kinds[cell]) + koz
                }
                None => koz,
            }
        })
        .collect();
    CellDemand::new(fp.rows, fp.cols, demand)
}

/// Bounding area minus the area of components, routers and KOZs.
pub fn whitespace(inst: &Instance, fp: &LayerFloorplan) -> f64 {
    (fp.area() - cell_demands(inst, fp).total()).max(0.0)
}

/// Checks that the solution places every component exactly once in a
/// feasible layer.
pub fn check_complete(inst: &Instance, sol: &Solution) -> Result<()> {
    let n = inst.num_components();
    if sol.assignment.layer_of.len() != n {
        return Err(Error::IncompleteSolution(format!(
            "assignment covers {} of {n} components",
            sol.assignment.layer_of.len()
        )));
    }
    if sol.floorplans.len() != inst.num_layers() {
        return Err(Error::IncompleteSolution(format!(
            "{} floorplans for {} layers",
            sol.floorplans.len(),
            inst.num_layers()
        )));
    }
    let mut seen = vec![0usize; n];
    for (l, fp) in sol.floorplans.iter().enumerate() {
        if fp.layer != l
            || fp.cells.len() != fp.rows * fp.cols
            || fp.col_widths.len() != fp.cols
            || fp.row_heights.len() != fp.rows
            || fp.router_kinds.len() != fp.cells.len()
            || fp.koz.len() != fp.cells.len()
        {
            return Err(Error::IncompleteSolution(format!("malformed floorplan for layer {l}")));
        }
        for (_, c) in fp.occupied() {
            if c >= n || sol.assignment.layer_of[c] != l {
                return Err(Error::IncompleteSolution(format!(
                    "cell content {c} does not match the assignment on layer {l}"
                )));
            }
            seen[c] += 1;
        }
    }
    if let Some(c) = seen.iter().position(|&k| k != 1) {
        return Err(Error::IncompleteSolution(format!(
            "component {} placed {} times",
            inst.component_id(c),
            seen[c]
        )));
    }
    for v in &sol.vlinks {
        let ok = v.boundary + 1 < sol.floorplans.len()
            && sol.floorplans[v.boundary].cells.get(v.lower_cell).copied().flatten().is_some()
            && sol.floorplans[v.boundary + 1].cells.get(v.upper_cell).copied().flatten().is_some();
        if !ok {
            return Err(Error::IncompleteSolution(format!(
                "vertical link {v:?} does not join two routers"
            )));
        }
    }
    Ok(())
}

/// Global cost from already computed traffic.
pub fn total_cost(
    inst: &Instance,
    sol: &Solution,
    traffic: &TrafficEval,
    w: &ObjectiveWeights,
) -> Result<CostBreakdown> {
    check_complete(inst, sol)?;
    let area: f64 = sol.floorplans.iter().map(LayerFloorplan::area).sum();
    let (power, perf) = power_perf(inst, &sol.assignment)?;
    Ok(CostBreakdown::new(
        area,
        power,
        perf,
        traffic.peak_penalty,
        traffic.bw_times_distance,
        w,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub area_per_layer: Vec<f64>,
    pub total_area: f64,
    pub whitespace_per_layer: Vec<f64>,
    pub total_whitespace: f64,
    pub bw_times_distance: f64,
    pub bw_times_hops: f64,
    pub max_link_load: f64,
    pub peak_penalty: f64,
    pub power: f64,
    pub perf: f64,
    pub vertical_links: usize,
    pub cost: CostBreakdown,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub traffic: TrafficEval,
    pub metrics: Metrics,
}

/// Builds the network of `sol`, routes all flows and computes every metric.
pub fn evaluate(inst: &Instance, sol: &Solution, w: &ObjectiveWeights) -> Result<Evaluation> {
    check_complete(inst, sol)?;
    let net = build_network(&sol.floorplans, &sol.vlinks);
    let traffic = route_all(&net, inst)?;
    let cost = total_cost(inst, sol, &traffic, w)?;
    let area_per_layer: Vec<f64> = sol.floorplans.iter().map(LayerFloorplan::area).collect();
    let whitespace_per_layer: Vec<f64> = sol.floorplans.iter().map(|fp| whitespace(inst, fp)).collect();
    let metrics = Metrics {
        total_area: area_per_layer.iter().sum(),
        area_per_layer,
        total_whitespace: whitespace_per_layer.iter().sum(),
        whitespace_per_layer,
        bw_times_distance: traffic.bw_times_distance,
        bw_times_hops: traffic.bw_times_hops,
        max_link_load: traffic.max_link_load,
        peak_penalty: traffic.peak_penalty,
        power: cost.power,
        perf: cost.perf,
        vertical_links: sol.vlinks.len(),
        cost,
    };
    Ok(Evaluation { traffic, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{case_study_ppa, tech};
    use crate::model::{validate_instance, Component, CoreGraph, Flow, RouterKind};

    fn cpu_instance(n: usize, flows: Vec<Flow>) -> Instance {
        let graph = CoreGraph {
            components: (0..n)
                .map(|i| Component {
                    id: format!("cpu{i}"),
                    kind: "CPU".into(),
                })
                .collect(),
            flows,
        };
        validate_instance(graph, case_study_ppa(), tech(&["28nm"])).unwrap()
    }

    fn single_cell(inst: &Instance) -> Solution {
        let mut fp = LayerFloorplan::new(0, 1, 1, vec![Some(0)]);
        let a = cell_demands(inst, &fp).total().sqrt();
        fp.col_widths = vec![a];
        fp.row_heights = vec![a];
        Solution {
            assignment: LayerAssignment { layer_of: vec![0] },
            floorplans: vec![fp],
            vlinks: vec![],
        }
    }

    #[test]
    fn zero_weights_zero_cost() {
        let inst = cpu_instance(1, vec![]);
        let sol = single_cell(&inst);
        let w = ObjectiveWeights {
            area: 0.0,
            power: 0.0,
            perf: 0.0,
            peak: 0.0,
            util: 0.0,
        };
        let e = evaluate(&inst, &sol, &ObjectiveWeights::default()).unwrap();
        assert_eq!(total_cost(&inst, &sol, &e.traffic, &w).unwrap().total, 0.0);
    }

    #[test]
    fn single_component_area_only() {
        let inst = cpu_instance(1, vec![]);
        let sol = single_cell(&inst);
        let w = ObjectiveWeights {
            area: 1.0,
            power: 0.0,
            perf: 0.0,
            peak: 0.0,
            util: 0.0,
        };
        let e = evaluate(&inst, &sol, &w).unwrap();
        // component 35.8 plus its 2D router 1.3
        assert!((e.metrics.cost.total - 37.1).abs() < 1e-9);
        assert!(e.metrics.total_whitespace.abs() < 1e-9);
    }

    #[test]
    fn downward_router_demand() {
        let inst = cpu_instance(1, vec![]);
        let mut fp = LayerFloorplan::new(0, 1, 1, vec![Some(0)]);
        fp.router_kinds[0] = RouterKind::Down;
        fp.koz[0] = 1;
        assert!((cell_demands(&inst, &fp).total() - 39.6).abs() < 1e-12);
    }

    #[test]
    fn util_matches_routing() {
        let flows = vec![Flow {
            src: "cpu0".into(),
            dst: "cpu1".into(),
            bandwidth: 10.0,
        }];
        let inst = cpu_instance(2, flows);
        let mut fp = LayerFloorplan::new(0, 1, 2, vec![Some(0), Some(1)]);
        fp.col_widths = vec![6.0, 6.0];
        fp.row_heights = vec![6.2];
        let sol = Solution {
            assignment: LayerAssignment { layer_of: vec![0, 0] },
            floorplans: vec![fp],
            vlinks: vec![],
        };
        let e = evaluate(&inst, &sol, &ObjectiveWeights::default()).unwrap();
        assert!((e.metrics.cost.util - 60.0).abs() < 1e-12);
        assert_eq!(e.metrics.cost.util, e.traffic.bw_times_distance);
        // 2 × (1 + 1) relative power
        assert!((e.metrics.power - 4.0).abs() < 1e-12);
    }

    #[test]
    fn incomplete_solution_rejected() {
        let inst = cpu_instance(2, vec![]);
        let sol = single_cell(&inst);
        assert!(matches!(
            evaluate(&inst, &sol, &ObjectiveWeights::default()),
            Err(Error::IncompleteSolution(_))
        ));
    }
}
