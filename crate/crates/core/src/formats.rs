// SPDX-License-Identifier: Apache-2.0

//! JSON documents exchanged between the pipeline steps and the CLI.
//! Components are referred to by id; grid rows count from the bottom.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, LayerAssignment, LayerFloorplan, RouterKind, Solution, VerticalLink};
use crate::net_route::{NetworkGraph, TrafficEval};
use crate::objective::Metrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentFile {
    /// Component id → layer index.
    pub assignment: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorplanLayerFile {
    pub layer: usize,
    #[serde(default)]
    pub node: String,
    pub rows: usize,
    pub cols: usize,
    /// `cells[row][col]`, component id or null.
    pub cells: Vec<Vec<Option<String>>>,
    pub col_widths: Vec<f64>,
    pub row_heights: Vec<f64>,
    pub router_kinds: Vec<Vec<RouterKind>>,
    /// KOZs charged per cell.
    pub koz: Vec<Vec<u32>>,
    #[serde(default)]
    pub width: f64,
    #[serde(default)]
    pub height: f64,
    #[serde(default)]
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorplanFile {
    pub floorplans: Vec<FloorplanLayerFile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRef {
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlinkFile {
    pub boundary: usize,
    pub lower: CellRef,
    pub upper: CellRef,
    #[serde(default)]
    pub lower_component: String,
    #[serde(default)]
    pub upper_component: String,
    pub rd_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlinksFile {
    pub vlinks: Vec<VlinkFile>,
}

/// The solution part of `report.json` and `exact_solution.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub assignment: BTreeMap<String, usize>,
    pub floorplans: Vec<FloorplanLayerFile>,
    pub vlinks: Vec<VlinkFile>,
}

fn grid<T: Clone>(fp: &LayerFloorplan, f: impl Fn(usize) -> T) -> Vec<Vec<T>> {
    (0..fp.rows)
        .map(|r| (0..fp.cols).map(|c| f(r * fp.cols + c)).collect())
        .collect()
}

pub fn assignment_to_file(inst: &Instance, a: &LayerAssignment) -> AssignmentFile {
    AssignmentFile {
        assignment: a
            .layer_of
            .iter()
            .enumerate()
            .map(|(c, &l)| (inst.component_id(c).to_string(), l))
            .collect(),
    }
}

pub fn assignment_from_file(inst: &Instance, map: &BTreeMap<String, usize>) -> Result<LayerAssignment> {
    let mut layer_of = vec![usize::MAX; inst.num_components()];
    for (id, &l) in map {
        let c = inst
            .component_index(id)
            .ok_or_else(|| Error::IncompleteSolution(format!("unknown component `{id}`")))?;
        if l >= inst.num_layers() {
            return Err(Error::IncompleteSolution(format!("component `{id}` on missing layer {l}")));
        }
        layer_of[c] = l;
    }
    if let Some(c) = layer_of.iter().position(|&l| l == usize::MAX) {
        return Err(Error::IncompleteSolution(format!(
            "component `{}` is not assigned",
            inst.component_id(c)
        )));
    }
    Ok(LayerAssignment { layer_of })
}

pub fn floorplan_to_file(inst: &Instance, fp: &LayerFloorplan) -> FloorplanLayerFile {
    FloorplanLayerFile {
        layer: fp.layer,
        node: inst.tech.layers[fp.layer].node.clone(),
        rows: fp.rows,
        cols: fp.cols,
        cells: grid(fp, |i| fp.cells[i].map(|c| inst.component_id(c).to_string())),
        col_widths: fp.col_widths.clone(),
        row_heights: fp.row_heights.clone(),
        router_kinds: grid(fp, |i| fp.router_kinds[i]),
        koz: grid(fp, |i| fp.koz[i]),
        width: fp.width(),
        height: fp.height(),
        area: fp.area(),
    }
}

pub fn floorplan_from_file(inst: &Instance, f: &FloorplanLayerFile) -> Result<LayerFloorplan> {
    let bad = |what: &str| Error::IncompleteSolution(format!("layer {} floorplan: {what}", f.layer));
    let shape_ok = |rows: usize, row_len: &dyn Fn(usize) -> usize| {
        rows == f.rows && (0..rows).all(|r| row_len(r) == f.cols)
    };
    if !shape_ok(f.cells.len(), &|r| f.cells[r].len())
        || !shape_ok(f.router_kinds.len(), &|r| f.router_kinds[r].len())
        || !shape_ok(f.koz.len(), &|r| f.koz[r].len())
        || f.col_widths.len() != f.cols
        || f.row_heights.len() != f.rows
    {
        return Err(bad("grid shape mismatch"));
    }
    let mut cells = Vec::with_capacity(f.rows * f.cols);
    for row in &f.cells {
        for id in row {
            cells.push(match id {
                None => None,
                Some(id) => Some(
                    inst.component_index(id)
                        .ok_or_else(|| bad(&format!("unknown component `{id}`")))?,
                ),
            });
        }
    }
    let mut fp = LayerFloorplan::new(f.layer, f.rows, f.cols, cells);
    fp.col_widths = f.col_widths.clone();
    fp.row_heights = f.row_heights.clone();
    fp.router_kinds = f.router_kinds.iter().flatten().copied().collect();
    fp.koz = f.koz.iter().flatten().copied().collect();
    Ok(fp)
}

pub fn vlink_to_file(inst: &Instance, fps: &[LayerFloorplan], v: &VerticalLink) -> VlinkFile {
    let (lo, up) = (&fps[v.boundary], &fps[v.boundary + 1]);
    let (lr, lc) = lo.row_col(v.lower_cell);
    let (ur, uc) = up.row_col(v.upper_cell);
    let name = |fp: &LayerFloorplan, cell: usize| {
        fp.cells[cell].map_or(String::new(), |c| inst.component_id(c).to_string())
    };
    VlinkFile {
        boundary: v.boundary,
        lower: CellRef { row: lr, col: lc },
        upper: CellRef { row: ur, col: uc },
        lower_component: name(lo, v.lower_cell),
        upper_component: name(up, v.upper_cell),
        rd_length: v.rd_length,
    }
}

pub fn vlink_from_file(fps: &[LayerFloorplan], v: &VlinkFile) -> Result<VerticalLink> {
    let bad = || Error::IncompleteSolution(format!("vertical link on boundary {} is out of range", v.boundary));
    let lo = fps.get(v.boundary).ok_or_else(bad)?;
    let up = fps.get(v.boundary + 1).ok_or_else(bad)?;
    if v.lower.row >= lo.rows || v.lower.col >= lo.cols || v.upper.row >= up.rows || v.upper.col >= up.cols {
        return Err(bad());
    }
    Ok(VerticalLink {
        boundary: v.boundary,
        lower_cell: v.lower.row * lo.cols + v.lower.col,
        upper_cell: v.upper.row * up.cols + v.upper.col,
        rd_length: v.rd_length,
    })
}

pub fn solution_to_file(inst: &Instance, sol: &Solution) -> SolutionFile {
    SolutionFile {
        assignment: assignment_to_file(inst, &sol.assignment).assignment,
        floorplans: sol.floorplans.iter().map(|fp| floorplan_to_file(inst, fp)).collect(),
        vlinks: sol
            .vlinks
            .iter()
            .map(|v| vlink_to_file(inst, &sol.floorplans, v))
            .collect(),
    }
}

pub fn solution_from_file(inst: &Instance, f: &SolutionFile) -> Result<Solution> {
    let assignment = assignment_from_file(inst, &f.assignment)?;
    let floorplans = f
        .floorplans
        .iter()
        .map(|fp| floorplan_from_file(inst, fp))
        .collect::<Result<Vec<_>>>()?;
    let vlinks = f
        .vlinks
        .iter()
        .map(|v| vlink_from_file(&floorplans, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(Solution {
        assignment,
        floorplans,
        vlinks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterRef {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub component: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkLoad {
    pub from: RouterRef,
    pub to: RouterRef,
    pub length: f64,
    pub vertical: bool,
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRoute {
    pub src: String,
    pub dst: String,
    pub bandwidth: f64,
    pub path_length: f64,
    pub hops: usize,
    /// Component ids of the routers along the path.
    pub path: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficFile {
    pub links: Vec<LinkLoad>,
    pub flows: Vec<FlowRoute>,
    pub metrics: Metrics,
}

pub fn traffic_to_file(inst: &Instance, net: &NetworkGraph, t: &TrafficEval, metrics: &Metrics) -> TrafficFile {
    let router = |i: usize| {
        let r = &net.routers[i];
        RouterRef {
            layer: r.layer,
            row: r.row,
            col: r.col,
            component: inst.component_id(r.component).to_string(),
        }
    };
    TrafficFile {
        links: net
            .links
            .iter()
            .zip(&t.link_loads)
            .map(|(l, &load)| LinkLoad {
                from: router(l.from),
                to: router(l.to),
                length: l.length,
                vertical: l.vertical,
                load,
            })
            .collect(),
        flows: inst
            .flows()
            .iter()
            .enumerate()
            .map(|(i, f)| FlowRoute {
                src: inst.component_id(f.src).to_string(),
                dst: inst.component_id(f.dst).to_string(),
                bandwidth: f.bandwidth,
                path_length: t.path_lengths[i],
                hops: t.paths[i].len().saturating_sub(1),
                path: t.paths[i]
                    .iter()
                    .map(|&r| inst.component_id(net.routers[r].component).to_string())
                    .collect(),
            })
            .collect(),
        metrics: metrics.clone(),
    }
}
