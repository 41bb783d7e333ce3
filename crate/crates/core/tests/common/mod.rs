// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use noc3d::corpus::{case_study_ppa, case_study_tech};
use noc3d::floorplan_sa::{grid_dims, solve_geometry};
use noc3d::model::{
    validate_instance, Component, CoreGraph, Flow, Instance, LayerAssignment, LayerFloorplan, VerticalLink,
};
use noc3d::vlink_sa::candidate_links;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

/// Random instance over the case-study PPA table. ADCs only appear when a
/// 45nm layer exists.
pub fn random_instance(rng: &mut impl RngCore, max_components: usize, max_layers: usize, max_flows: usize) -> Instance {
    let layers = rng.random_range(1..=max_layers);
    let nodes: Vec<&str> = (0..layers)
        .map(|_| if rng.random_bool(0.5) { "28nm" } else { "45nm" })
        .collect();
    let has45 = nodes.contains(&"45nm");
    let n = rng.random_range(1..=max_components);
    let components: Vec<Component> = (0..n)
        .map(|i| {
            let kinds: &[&str] = if has45 { &["CPU", "SIMD", "ADC"] } else { &["CPU", "SIMD"] };
            Component {
                id: format!("c{i}"),
                kind: kinds[rng.random_range(0..kinds.len())].into(),
            }
        })
        .collect();
    let mut flows = Vec::new();
    if n > 1 {
        for _ in 0..rng.random_range(0..=max_flows) {
            let s = rng.random_range(0..n);
            let mut d = rng.random_range(0..n - 1);
            if d >= s {
                d += 1;
            }
            flows.push(Flow {
                src: components[s].id.clone(),
                dst: components[d].id.clone(),
                bandwidth: rng.random_range(1..=60) as f64,
            });
        }
    }
    validate_instance(CoreGraph { components, flows }, case_study_ppa(), case_study_tech(&nodes))
        .expect("random instance validates")
}

/// `n` 28nm CPUs on `layers` layers with random flows.
pub fn random_cpu_instance(rng: &mut impl RngCore, n: usize, layers: usize, flows: usize) -> Instance {
    let components: Vec<Component> = (0..n)
        .map(|i| Component {
            id: format!("c{i}"),
            kind: "CPU".into(),
        })
        .collect();
    let mut fl = Vec::new();
    for _ in 0..flows {
        let s = rng.random_range(0..n);
        let mut d = rng.random_range(0..n - 1);
        if d >= s {
            d += 1;
        }
        fl.push(Flow {
            src: components[s].id.clone(),
            dst: components[d].id.clone(),
            bandwidth: rng.random_range(1..=50) as f64,
        });
    }
    let nodes = vec!["28nm"; layers];
    validate_instance(
        CoreGraph {
            components,
            flows: fl,
        },
        case_study_ppa(),
        case_study_tech(&nodes),
    )
    .expect("cpu instance validates")
}

/// A complete random solution: every layer non-empty, components packed
/// row-major (so each layer is connected), geometry from the exact kernel,
/// and a random non-empty matching per boundary.
pub struct RandomSolution {
    pub assignment: LayerAssignment,
    pub floorplans: Vec<LayerFloorplan>,
    pub vlinks: Vec<VerticalLink>,
}

pub fn random_solution(rng: &mut impl RngCore, inst: &Instance) -> RandomSolution {
    let n = inst.num_components();
    let layers = inst.num_layers();
    assert!(n >= layers);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut layer_of = vec![0; n];
    for (i, &c) in order.iter().enumerate() {
        layer_of[c] = if i < layers { i } else { rng.random_range(0..layers) };
    }
    let assignment = LayerAssignment { layer_of };
    let mut fps: Vec<LayerFloorplan> = (0..layers)
        .map(|l| {
            let mut members = assignment.members(l);
            members.shuffle(rng);
            let (r, c) = grid_dims(members.len());
            let mut cells: Vec<Option<usize>> = members.into_iter().map(Some).collect();
            cells.resize(r * c, None);
            LayerFloorplan::new(l, r, c, cells)
        })
        .collect();
    solve_geometry(inst, &mut fps, false).expect("geometry");
    let mut vlinks = Vec::new();
    for b in 0..layers.saturating_sub(1) {
        let mut cands = candidate_links(&fps, b, 1e9).expect("candidates");
        cands.shuffle(rng);
        let want = rng.random_range(1..=cands.len().min(3));
        let mut used_lo = Vec::new();
        let mut used_up = Vec::new();
        for c in cands {
            if used_lo.len() == want {
                break;
            }
            if !used_lo.contains(&c.lower_cell) && !used_up.contains(&c.upper_cell) {
                used_lo.push(c.lower_cell);
                used_up.push(c.upper_cell);
                vlinks.push(c.link(b));
            }
        }
    }
    RandomSolution {
        assignment,
        floorplans: fps,
        vlinks,
    }
}
