// SPDX-License-Identifier: Apache-2.0

//! Domain types and instance validation.
//!
//! An instance is three JSON documents: the application core graph
//! (`coregraph.json`), the per-node PPA tables (`ppa.json`) and the
//! technology stack (`tech.json`). [`validate_instance`] checks them and
//! produces an [`Instance`] with dense index-based lookup tables that the
//! optimization steps work on.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    pub kind: String,
}

/// Directed communication requirement between two components, in Mb/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub src: String,
    pub dst: String,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoreGraph {
    #[serde(default)]
    pub components: Vec<Component>,
    #[serde(default)]
    pub flows: Vec<Flow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub index: usize,
    pub node: String,
}

/// A PPA table entry; `None` marks a kind that cannot be built in a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpaValue(pub Option<f64>);

impl PpaValue {
    pub const NA: PpaValue = PpaValue(None);
}

impl Serialize for PpaValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("n.a."),
        }
    }
}

impl<'de> Deserialize<'de> for PpaValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
            Null(()),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(PpaValue(Some(v))),
            Raw::Null(()) => Ok(PpaValue(None)),
            Raw::Text(t) if t.eq_ignore_ascii_case("n.a.") || t.eq_ignore_ascii_case("na") => {
                Ok(PpaValue(None))
            }
            Raw::Text(t) => Err(de::Error::custom(format!(
                "expected a number, null or \"n.a.\", got \"{t}\""
            ))),
        }
    }
}

/// Per-node values of one metric.
pub type NodeTable = BTreeMap<String, PpaValue>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KindPpa {
    pub area: NodeTable,
    pub perf: NodeTable,
    pub power: NodeTable,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RouterTable {
    pub area_2d: NodeTable,
    pub area_3d: NodeTable,
    pub perf: NodeTable,
    pub power: NodeTable,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PpaTable {
    pub components: BTreeMap<String, KindPpa>,
    pub routers: RouterTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechParams {
    /// Bottom to top.
    pub layers: Vec<Layer>,
    /// KOZ area per downward vertical link, mm².
    pub koz_area: f64,
    /// Maximum redistribution length, mm.
    pub rd_max_length: f64,
    /// Capacity of each directed link, Mb/s.
    pub link_capacity: f64,
}

/// Weights of the five cost terms. The step-local objectives reuse the same
/// fields (`area` for w1, `power` for w2, `peak` for w4, `util` for w5).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub area: f64,
    pub power: f64,
    pub perf: f64,
    pub peak: f64,
    pub util: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            area: 1.0,
            power: 1.0,
            perf: 1.0,
            peak: 1.0,
            util: 1.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.area, self.power, self.perf, self.peak, self.util];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("weights must be finite and >= 0".into()));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::Config("at least one weight must be positive".into()));
        }
        Ok(())
    }
}

impl std::str::FromStr for ObjectiveWeights {
    type Err = Error;

    /// Parses `area,power,perf,peak,util`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad --weights `{s}`: {e}")))?;
        if parts.len() != 5 {
            return Err(Error::Config(format!(
                "--weights needs 5 comma-separated values, got {}",
                parts.len()
            )));
        }
        let w = ObjectiveWeights {
            area: parts[0],
            power: parts[1],
            perf: parts[2],
            peak: parts[3],
            util: parts[4],
        };
        w.validate()?;
        Ok(w)
    }
}

/// Layer index per component index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerAssignment {
    pub layer_of: Vec<usize>,
}

impl LayerAssignment {
    pub fn members(&self, layer: usize) -> Vec<usize> {
        self.layer_of
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == layer)
            .map(|(c, _)| c)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum RouterKind {
    #[default]
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d-up")]
    Up,
    #[serde(rename = "3d-down")]
    Down,
    #[serde(rename = "3d-both")]
    Both,
}

impl RouterKind {
    pub fn is_3d(self) -> bool {
        self != RouterKind::TwoD
    }

    pub fn connects_down(self) -> bool {
        matches!(self, RouterKind::Down | RouterKind::Both)
    }

    pub fn connects_up(self) -> bool {
        matches!(self, RouterKind::Up | RouterKind::Both)
    }

    pub fn with_up(self) -> RouterKind {
        match self {
            RouterKind::TwoD | RouterKind::Up => RouterKind::Up,
            RouterKind::Down | RouterKind::Both => RouterKind::Both,
        }
    }

    pub fn with_down(self) -> RouterKind {
        match self {
            RouterKind::TwoD | RouterKind::Down => RouterKind::Down,
            RouterKind::Up | RouterKind::Both => RouterKind::Both,
        }
    }
}

/// Mesh floorplan of one layer. Cells are stored row-major; column `c` has
/// width `col_widths[c]` and row `r` height `row_heights[r]`, shared by all
/// cells of that column/row.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerFloorplan {
    pub layer: usize,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Option<usize>>,
    pub col_widths: Vec<f64>,
    pub row_heights: Vec<f64>,
    pub router_kinds: Vec<RouterKind>,
    /// Number of KOZs charged to each cell.
    pub koz: Vec<u32>,
}

impl LayerFloorplan {
    pub fn empty(layer: usize) -> Self {
        LayerFloorplan {
            layer,
            rows: 0,
            cols: 0,
            cells: Vec::new(),
            col_widths: Vec::new(),
            row_heights: Vec::new(),
            router_kinds: Vec::new(),
            koz: Vec::new(),
        }
    }

    pub fn new(layer: usize, rows: usize, cols: usize, cells: Vec<Option<usize>>) -> Self {
        assert_eq!(cells.len(), rows * cols);
        LayerFloorplan {
            layer,
            rows,
            cols,
            cells,
            col_widths: vec![0.0; cols],
            row_heights: vec![0.0; rows],
            router_kinds: vec![RouterKind::TwoD; rows * cols],
            koz: vec![0; rows * cols],
        }
    }

    #[inline]
    pub fn row_col(&self, cell: usize) -> (usize, usize) {
        (cell / self.cols, cell % self.cols)
    }

    pub fn width(&self) -> f64 {
        self.col_widths.iter().sum()
    }

    pub fn height(&self) -> f64 {
        self.row_heights.iter().sum()
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Planar center of a cell relative to the die center. Layers are
    /// stacked with their die centers on a common vertical axis.
    pub fn center(&self, cell: usize) -> (f64, f64) {
        let (x, y) = self.corner_center(cell);
        (x - self.width() / 2.0, y - self.height() / 2.0)
    }

    /// Planar center of a cell, origin at the layer's lower-left corner.
    pub fn corner_center(&self, cell: usize) -> (f64, f64) {
        let (r, c) = self.row_col(cell);
        let x: f64 = self.col_widths[..c].iter().sum::<f64>() + self.col_widths[c] / 2.0;
        let y: f64 = self.row_heights[..r].iter().sum::<f64>() + self.row_heights[r] / 2.0;
        (x, y)
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(cell, c)| c.map(|c| (cell, c)))
    }

    pub fn cell_of_component(&self, component: usize) -> Option<usize> {
        self.cells.iter().position(|c| *c == Some(component))
    }
}

/// A vertical link across boundary `boundary` (between layers `boundary`
/// and `boundary + 1`), joining two routers identified by their cells.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct VerticalLink {
    pub boundary: usize,
    pub lower_cell: usize,
    pub upper_cell: usize,
    pub rd_length: f64,
}

/// A complete design: assignment, per-layer floorplans and vertical links.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub assignment: LayerAssignment,
    pub floorplans: Vec<LayerFloorplan>,
    pub vlinks: Vec<VerticalLink>,
}

/// A flow resolved to component indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexedFlow {
    pub src: usize,
    pub dst: usize,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouterPpa {
    pub area_2d: f64,
    pub area_3d: f64,
    pub perf: f64,
    pub power: f64,
}

impl RouterPpa {
    pub fn area(&self, kind: RouterKind) -> f64 {
        if kind.is_3d() {
            self.area_3d
        } else {
            self.area_2d
        }
    }
}

/// Per-component, per-layer lookup values (`None` = infeasible).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPpa {
    pub area: f64,
    pub perf: f64,
    pub power: f64,
}

/// A validated instance. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: CoreGraph,
    pub ppa: PpaTable,
    pub tech: TechParams,
    flows: Vec<IndexedFlow>,
    /// `[component][layer]`
    table: Vec<Vec<Option<CellPpa>>>,
    routers: Vec<RouterPpa>,
}

impl Instance {
    pub fn num_components(&self) -> usize {
        self.graph.components.len()
    }

    pub fn num_layers(&self) -> usize {
        self.tech.layers.len()
    }

    pub fn flows(&self) -> &[IndexedFlow] {
        &self.flows
    }

    pub fn component_id(&self, c: usize) -> &str {
        &self.graph.components[c].id
    }

    pub fn component_index(&self, id: &str) -> Option<usize> {
        self.graph.components.iter().position(|c| c.id == id)
    }

    pub fn ppa(&self, component: usize, layer: usize) -> Option<CellPpa> {
        self.table[component][layer]
    }

    pub fn area(&self, component: usize, layer: usize) -> Option<f64> {
        self.table[component][layer].map(|p| p.area)
    }

    pub fn feasible_layers(&self, component: usize) -> Vec<usize> {
        (0..self.num_layers())
            .filter(|&l| self.table[component][l].is_some())
            .collect()
    }

    pub fn router(&self, layer: usize) -> RouterPpa {
        self.routers[layer]
    }

    /// Same components and technology, different traffic.
    pub fn with_flows(&self, flows: Vec<Flow>) -> Result<Instance> {
        let graph = CoreGraph {
            components: self.graph.components.clone(),
            flows,
        };
        validate_instance(graph, self.ppa.clone(), self.tech.clone())
    }

    /// Same instance with a different maximum redistribution length.
    pub fn with_rd_max(&self, rd_max: f64) -> Instance {
        let mut out = self.clone();
        out.tech.rd_max_length = rd_max;
        out
    }

    pub fn load_dir(dir: &Path) -> Result<Instance> {
        let graph: CoreGraph = read_json(&dir.join("coregraph.json"))?;
        let ppa: PpaTable = read_json(&dir.join("ppa.json"))?;
        let tech: TechParams = read_json(&dir.join("tech.json"))?;
        validate_instance(graph, ppa, tech)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        write_json(&dir.join("coregraph.json"), &self.graph)?;
        write_json(&dir.join("ppa.json"), &self.ppa)?;
        write_json(&dir.join("tech.json"), &self.tech)?;
        Ok(())
    }
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn lookup(
    table: &NodeTable,
    node: &str,
    what: &str,
    violations: &mut Vec<Violation>,
) -> Option<Option<f64>> {
    match table.get(node) {
        None => {
            violations.push(Violation::MalformedTable(format!(
                "{what} has no entry for node `{node}`"
            )));
            None
        }
        Some(PpaValue(None)) => Some(None),
        Some(PpaValue(Some(v))) if positive(*v) => Some(Some(*v)),
        Some(PpaValue(Some(v))) => {
            violations.push(Violation::MalformedTable(format!(
                "{what} for node `{node}` must be > 0, got {v}"
            )));
            None
        }
    }
}

/// Checks every type invariant and builds the dense lookup tables.
pub fn validate_instance(graph: CoreGraph, ppa: PpaTable, tech: TechParams) -> Result<Instance> {
    let mut violations = Vec::new();

    // layers
    if tech.layers.is_empty() {
        violations.push(Violation::InvalidLayers("no layers".into()));
    }
    for (pos, layer) in tech.layers.iter().enumerate() {
        if layer.index != pos {
            violations.push(Violation::InvalidLayers(format!(
                "layer at position {pos} has index {}, indices must be contiguous from 0",
                layer.index
            )));
        }
    }

    // tech scalars
    if !(tech.koz_area.is_finite() && tech.koz_area >= 0.0) {
        violations.push(Violation::InvalidTech(format!(
            "koz_area must be >= 0, got {}",
            tech.koz_area
        )));
    }
    if !(tech.rd_max_length.is_finite() && tech.rd_max_length >= 0.0) {
        violations.push(Violation::InvalidTech(format!(
            "rd_max_length must be >= 0, got {}",
            tech.rd_max_length
        )));
    }
    if !positive(tech.link_capacity) {
        violations.push(Violation::InvalidTech(format!(
            "link_capacity must be > 0, got {}",
            tech.link_capacity
        )));
    }

    // routers: n.a. is not allowed
    let mut routers = Vec::with_capacity(tech.layers.len());
    for layer in &tech.layers {
        let mut get = |t: &NodeTable, what: &str| -> f64 {
            match lookup(t, &layer.node, what, &mut violations) {
                Some(Some(v)) => v,
                Some(None) => {
                    violations.push(Violation::MalformedTable(format!(
                        "{what} cannot be n.a. (node `{}`)",
                        layer.node
                    )));
                    f64::NAN
                }
                None => f64::NAN,
            }
        };
        routers.push(RouterPpa {
            area_2d: get(&ppa.routers.area_2d, "router area_2d"),
            area_3d: get(&ppa.routers.area_3d, "router area_3d"),
            perf: get(&ppa.routers.perf, "router perf"),
            power: get(&ppa.routers.power, "router power"),
        });
    }

    // components
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut table = Vec::with_capacity(graph.components.len());
    for (ci, comp) in graph.components.iter().enumerate() {
        if index.insert(comp.id.as_str(), ci).is_some() {
            violations.push(Violation::DuplicateComponent(comp.id.clone()));
        }
        let Some(kind) = ppa.components.get(&comp.kind) else {
            violations.push(Violation::MalformedTable(format!(
                "no PPA entry for kind `{}` (component `{}`)",
                comp.kind, comp.id
            )));
            table.push(vec![None; tech.layers.len()]);
            continue;
        };
        let mut row = Vec::with_capacity(tech.layers.len());
        for layer in &tech.layers {
            let what = |m: &str| format!("{} {m}", comp.kind);
            let area = lookup(&kind.area, &layer.node, &what("area"), &mut violations);
            let perf = lookup(&kind.perf, &layer.node, &what("perf"), &mut violations);
            let power = lookup(&kind.power, &layer.node, &what("power"), &mut violations);
            let cell = match (area, perf, power) {
                (Some(Some(area)), Some(Some(perf)), Some(Some(power))) => {
                    Some(CellPpa { area, perf, power })
                }
                (Some(None), Some(None), Some(None)) => None,
                (Some(_), Some(_), Some(_)) => {
                    violations.push(Violation::MalformedTable(format!(
                        "{} in node `{}`: area/perf/power must be all present or all n.a.",
                        comp.kind, layer.node
                    )));
                    None
                }
                _ => None,
            };
            row.push(cell);
        }
        if !tech.layers.is_empty() && row.iter().all(Option::is_none) {
            violations.push(Violation::NoFeasibleLayer {
                component: comp.id.clone(),
            });
        }
        table.push(row);
    }

    // flows
    let mut flows = Vec::with_capacity(graph.flows.len());
    for (fi, flow) in graph.flows.iter().enumerate() {
        let src = index.get(flow.src.as_str()).copied();
        let dst = index.get(flow.dst.as_str()).copied();
        if src.is_none() {
            violations.push(Violation::UnknownComponent {
                flow: fi,
                id: flow.src.clone(),
            });
        }
        if dst.is_none() {
            violations.push(Violation::UnknownComponent {
                flow: fi,
                id: flow.dst.clone(),
            });
        }
        if !positive(flow.bandwidth) {
            violations.push(Violation::NegativeBandwidth {
                flow: fi,
                bandwidth: flow.bandwidth,
            });
        }
        if flow.src == flow.dst {
            violations.push(Violation::SelfLoop {
                flow: fi,
                id: flow.src.clone(),
            });
        }
        if let (Some(src), Some(dst)) = (src, dst) {
            flows.push(IndexedFlow {
                src,
                dst,
                bandwidth: flow.bandwidth,
            });
        }
    }

    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(Instance {
        graph,
        ppa,
        tech,
        flows,
        table,
        routers,
    })
}

impl fmt::Display for LayerAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.layer_of)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn case_study_ppa() -> PpaTable {
        crate::corpus::case_study_ppa()
    }

    pub fn tech(nodes: &[&str]) -> TechParams {
        TechParams {
            layers: nodes
                .iter()
                .enumerate()
                .map(|(index, n)| Layer {
                    index,
                    node: n.to_string(),
                })
                .collect(),
            koz_area: 2.0,
            rd_max_length: 5.0,
            link_capacity: 100.0,
        }
    }

    /// Two CPUs on a 28nm/28nm stack with one 1 Mb/s flow.
    pub fn two_cpu_instance() -> Instance {
        let graph = CoreGraph {
            components: vec![comp("a", "CPU"), comp("b", "CPU")],
            flows: vec![Flow {
                src: "a".into(),
                dst: "b".into(),
                bandwidth: 1.0,
            }],
        };
        validate_instance(graph, case_study_ppa(), tech(&["28nm", "28nm"])).unwrap()
    }

    fn comp(id: &str, kind: &str) -> Component {
        Component {
            id: id.into(),
            kind: kind.into(),
        }
    }

    #[test]
    fn adc_feasible_only_in_mixed_signal_layer() {
        let graph = CoreGraph {
            components: vec![comp("adc", "ADC")],
            flows: vec![],
        };
        let inst = validate_instance(graph, case_study_ppa(), tech(&["28nm", "45nm"])).unwrap();
        assert_eq!(inst.feasible_layers(0), vec![1]);
        assert_eq!(inst.area(0, 1), Some(53.0));
        assert_eq!(inst.area(0, 0), None);
    }

    #[test]
    fn zero_bandwidth_is_rejected() {
        let graph = CoreGraph {
            components: vec![comp("a", "CPU"), comp("b", "CPU")],
            flows: vec![Flow {
                src: "a".into(),
                dst: "b".into(),
                bandwidth: 0.0,
            }],
        };
        let err = validate_instance(graph, case_study_ppa(), tech(&["28nm"])).unwrap_err();
        match err {
            Error::Validation(v) => {
                assert!(matches!(v[..], [Violation::NegativeBandwidth { flow: 0, .. }]))
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_core_graph_is_valid() {
        let inst =
            validate_instance(CoreGraph::default(), case_study_ppa(), tech(&["28nm"])).unwrap();
        assert_eq!(inst.num_components(), 0);
        assert!(inst.flows().is_empty());
    }

    #[test]
    fn adc_alone_in_digital_stack_has_no_feasible_layer() {
        let graph = CoreGraph {
            components: vec![comp("adc0", "ADC")],
            flows: vec![],
        };
        let err = validate_instance(graph, case_study_ppa(), tech(&["28nm", "28nm"])).unwrap_err();
        let Error::Validation(v) = err else { panic!() };
        assert_eq!(
            v,
            vec![Violation::NoFeasibleLayer {
                component: "adc0".into()
            }]
        );
    }

    #[test]
    fn unknown_endpoint_and_self_loop() {
        let graph = CoreGraph {
            components: vec![comp("a", "CPU")],
            flows: vec![
                Flow {
                    src: "a".into(),
                    dst: "ghost".into(),
                    bandwidth: 1.0,
                },
                Flow {
                    src: "a".into(),
                    dst: "a".into(),
                    bandwidth: 1.0,
                },
            ],
        };
        let Error::Validation(v) =
            validate_instance(graph, case_study_ppa(), tech(&["28nm"])).unwrap_err()
        else {
            panic!()
        };
        assert!(v.contains(&Violation::UnknownComponent {
            flow: 0,
            id: "ghost".into()
        }));
        assert!(v.contains(&Violation::SelfLoop {
            flow: 1,
            id: "a".into()
        }));
    }

    #[test]
    fn router_na_is_malformed() {
        let mut ppa = case_study_ppa();
        ppa.routers
            .area_3d
            .insert("28nm".into(), PpaValue::NA);
        let Error::Validation(v) =
            validate_instance(CoreGraph::default(), ppa, tech(&["28nm"])).unwrap_err()
        else {
            panic!()
        };
        assert!(matches!(v[..], [Violation::MalformedTable(_)]));
    }

    #[test]
    fn ppa_value_accepts_na_spellings() {
        let t: NodeTable = serde_json::from_str(r#"{"a": 1.5, "b": null, "c": "n.a."}"#).unwrap();
        assert_eq!(t["a"], PpaValue(Some(1.5)));
        assert_eq!(t["b"], PpaValue::NA);
        assert_eq!(t["c"], PpaValue::NA);
        assert!(serde_json::from_str::<NodeTable>(r#"{"a": "big"}"#).is_err());
    }

    #[test]
    fn weights_parse() {
        let w: ObjectiveWeights = "1,0,0,2,3".parse().unwrap();
        assert_eq!(w.peak, 2.0);
        assert!("1,2".parse::<ObjectiveWeights>().is_err());
        assert!("0,0,0,0,0".parse::<ObjectiveWeights>().is_err());
        assert!("1,-1,0,0,0".parse::<ObjectiveWeights>().is_err());
    }

    #[test]
    fn floorplan_centers() {
        let mut fp = LayerFloorplan::new(0, 2, 2, vec![Some(0), Some(1), None, Some(2)]);
        fp.col_widths = vec![2.0, 4.0];
        fp.row_heights = vec![1.0, 3.0];
        assert_eq!(fp.corner_center(0), (1.0, 0.5));
        assert_eq!(fp.corner_center(3), (4.0, 2.5));
        assert_eq!(fp.center(0), (-2.0, -1.5));
        assert_eq!(fp.area(), 24.0);
    }
}
