// SPDX-License-Identifier: Apache-2.0

//! 3D network construction and shortest-path traffic evaluation.
//!
//! Routers sit at the centers of occupied cells. Mesh-adjacent routers of a
//! layer are joined by a pair of directed links whose length is the
//! Manhattan distance between the centers; each vertical link contributes a
//! directed pair of length `rd_length`. Every flow follows a single
//! shortest path by length (mm), ties broken by fewer hops and then by the
//! lexicographically smallest router sequence, routers being ordered by
//! (layer, row, col).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{IndexedFlow, Instance, LayerFloorplan, VerticalLink};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouterNode {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub cell: usize,
    pub component: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub vertical: bool,
}

#[derive(Debug, Clone)]
pub struct NetworkGraph {
    pub routers: Vec<RouterNode>,
    pub links: Vec<Link>,
    out_links: Vec<Vec<usize>>,
    in_links: Vec<Vec<usize>>,
    router_of_component: Vec<Option<usize>>,
}

fn manhattan(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

impl NetworkGraph {
    pub fn router_of(&self, component: usize) -> Option<usize> {
        self.router_of_component.get(component).copied().flatten()
    }

    pub fn out_links(&self, router: usize) -> &[usize] {
        &self.out_links[router]
    }

    /// Router index of `(layer, cell)`.
    pub fn router_at(&self, layer: usize, cell: usize) -> Option<usize> {
        self.routers
            .binary_search_by(|r| (r.layer, r.cell).cmp(&(layer, cell)))
            .ok()
    }

    fn push_link(&mut self, from: usize, to: usize, length: f64, vertical: bool) {
        let id = self.links.len();
        self.links.push(Link {
            from,
            to,
            length,
            vertical,
        });
        self.out_links[from].push(id);
        self.in_links[to].push(id);
    }
}

pub fn build_network(floorplans: &[LayerFloorplan], vlinks: &[VerticalLink]) -> NetworkGraph {
    let num_components = floorplans
        .iter()
        .flat_map(|fp| fp.cells.iter().flatten())
        .map(|c| c + 1)
        .max()
        .unwrap_or(0);
    let mut routers = Vec::new();
    let mut router_of_component = vec![None; num_components];
    let mut cell_router: Vec<Vec<Option<usize>>> = Vec::with_capacity(floorplans.len());
    for fp in floorplans {
        let mut map = vec![None; fp.cells.len()];
        for (cell, component) in fp.occupied() {
            let (row, col) = fp.row_col(cell);
            let (x, y) = fp.center(cell);
            map[cell] = Some(routers.len());
            router_of_component[component] = Some(routers.len());
            routers.push(RouterNode {
                layer: fp.layer,
                row,
                col,
                cell,
                component,
                x,
                y,
            });
        }
        cell_router.push(map);
    }

    let n = routers.len();
    let mut net = NetworkGraph {
        routers,
        links: Vec::new(),
        out_links: vec![Vec::new(); n],
        in_links: vec![Vec::new(); n],
        router_of_component,
    };

    for (li, fp) in floorplans.iter().enumerate() {
        for (cell, _) in fp.occupied() {
            let (r, c) = fp.row_col(cell);
            let here = cell_router[li][cell].unwrap();
            let mut neighbors = Vec::with_capacity(2);
            if c + 1 < fp.cols {
                neighbors.push(cell + 1);
            }
            if r + 1 < fp.rows {
                neighbors.push(cell + fp.cols);
            }
            for nb in neighbors {
                if let Some(there) = cell_router[li][nb] {
                    let len = manhattan(fp.center(cell), fp.center(nb));
                    net.push_link(here, there, len, false);
                    net.push_link(there, here, len, false);
                }
            }
        }
    }
    for v in vlinks {
        let lower = cell_router
            .get(v.boundary)
            .and_then(|m| m.get(v.lower_cell).copied().flatten());
        let upper = cell_router
            .get(v.boundary + 1)
            .and_then(|m| m.get(v.upper_cell).copied().flatten());
        if let (Some(lo), Some(up)) = (lower, upper) {
            net.push_link(lo, up, v.rd_length, true);
            net.push_link(up, lo, v.rd_length, true);
        }
    }
    net
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficEval {
    /// Load per directed link (indexed like `NetworkGraph::links`), Mb/s.
    pub link_loads: Vec<f64>,
    /// Router sequence of each flow.
    pub paths: Vec<Vec<usize>>,
    /// Path length of each flow, mm.
    pub path_lengths: Vec<f64>,
    /// Σ bandwidth × path length, mm·Mb/s.
    pub bw_times_distance: f64,
    /// Σ bandwidth × hop count, Mb/s·hops.
    pub bw_times_hops: f64,
    pub max_link_load: f64,
    /// Σ over links of max(0, load − capacity), Mb/s.
    pub peak_penalty: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest path lengths.
pub fn dijkstra(net: &NetworkGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.routers.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &l in &net.out_links[node] {
            let link = &net.links[l];
            let nd = d + link.length;
            if nd < dist[link.to] {
                dist[link.to] = nd;
                heap.push(HeapItem {
                    dist: nd,
                    node: link.to,
                });
            }
        }
    }
    dist
}

fn tight(dist: &[f64], link: &Link) -> bool {
    let target = dist[link.to];
    dist[link.from] + link.length <= target + 1e-9 * target.max(1.0)
}

/// Canonical shortest path from `source` to `target` given the distances
/// from `source`. Returns the link ids along the path.
fn canonical_path(net: &NetworkGraph, dist: &[f64], source: usize, target: usize) -> Option<Vec<usize>> {
    if !dist[target].is_finite() {
        return None;
    }
    // hops to target along tight links
    let mut hops = vec![usize::MAX; net.routers.len()];
    hops[target] = 0;
    let mut queue = VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        for &l in &net.in_links[v] {
            let link = &net.links[l];
            if hops[link.from] == usize::MAX && dist[link.from].is_finite() && tight(dist, link) {
                hops[link.from] = hops[v] + 1;
                queue.push_back(link.from);
            }
        }
    }
    if hops[source] == usize::MAX {
        return None;
    }
    let mut path = Vec::with_capacity(hops[source]);
    let mut at = source;
    while at != target {
        let next = net.out_links[at]
            .iter()
            .copied()
            .filter(|&l| {
                let link = &net.links[l];
                hops[link.to] != usize::MAX && hops[link.to] + 1 == hops[at] && tight(dist, link)
            })
            .min_by_key(|&l| net.links[l].to)?;
        path.push(next);
        at = net.links[next].to;
    }
    Some(path)
}

/// Routes every flow of `flows` and accumulates loads and metrics.
pub fn route_flows(
    net: &NetworkGraph,
    flows: &[IndexedFlow],
    link_capacity: f64,
    name: impl Fn(usize) -> String,
) -> Result<TrafficEval> {
    let mut loads = vec![0.0; net.links.len()];
    let mut paths = vec![Vec::new(); flows.len()];
    let mut lengths = vec![0.0; flows.len()];
    let mut bwd = 0.0;
    let mut bwh = 0.0;

    // group by source router so each Dijkstra is reused
    let mut order: Vec<usize> = (0..flows.len()).collect();
    let src_router = |f: &IndexedFlow| net.router_of(f.src);
    for f in flows {
        if src_router(f).is_none() || net.router_of(f.dst).is_none() {
            return Err(Error::IncompleteSolution(format!(
                "flow {} -> {} has an unplaced endpoint",
                name(f.src),
                name(f.dst)
            )));
        }
    }
    order.sort_by_key(|&i| (src_router(&flows[i]), i));

    let mut cached: Option<(usize, Vec<f64>)> = None;
    for i in order {
        let f = flows[i];
        let s = net.router_of(f.src).unwrap();
        let t = net.router_of(f.dst).unwrap();
        if cached.as_ref().map(|(c, _)| *c) != Some(s) {
            cached = Some((s, dijkstra(net, s)));
        }
        let dist = &cached.as_ref().unwrap().1;
        let links = canonical_path(net, dist, s, t).ok_or_else(|| Error::Unreachable {
            src: name(f.src),
            dst: name(f.dst),
        })?;
        let mut len = 0.0;
        let mut seq = Vec::with_capacity(links.len() + 1);
        seq.push(s);
        for &l in &links {
            loads[l] += f.bandwidth;
            len += net.links[l].length;
            seq.push(net.links[l].to);
        }
        bwd += f.bandwidth * len;
        bwh += f.bandwidth * links.len() as f64;
        lengths[i] = len;
        paths[i] = seq;
    }

    let max_link_load = loads.iter().copied().fold(0.0, f64::max);
    let peak_penalty = loads.iter().map(|l| (l - link_capacity).max(0.0)).sum();
    Ok(TrafficEval {
        link_loads: loads,
        paths,
        path_lengths: lengths,
        bw_times_distance: bwd,
        bw_times_hops: bwh,
        max_link_load,
        peak_penalty,
    })
}

/// Routes all flows of the instance.
pub fn route_all(net: &NetworkGraph, inst: &Instance) -> Result<TrafficEval> {
    route_flows(net, inst.flows(), inst.tech.link_capacity, |c| {
        inst.component_id(c).to_string()
    })
}
