// SPDX-License-Identifier: Apache-2.0

//! Traffic generators and the benchmark instances shipped under `corpus/`.
//!
//! Flow tables of the VSoC-like and VOPD-style instances are synthetic.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::{
    validate_instance, Component, CoreGraph, Flow, Instance, KindPpa, Layer, PpaTable, PpaValue,
    RouterTable, TechParams,
};

/// Default link capacity of the shipped instances, Mb/s.
pub const LINK_CAPACITY: f64 = 100.0;

fn flow(src: &str, dst: &str, bandwidth: f64) -> Flow {
    Flow {
        src: src.into(),
        dst: dst.into(),
        bandwidth,
    }
}

fn component(id: String, kind: &str) -> Component {
    Component {
        id,
        kind: kind.into(),
    }
}

/// `c[0] → c[1] → … → c[n-1]`, each at `bandwidth`.
pub fn chain(components: &[Component], bandwidth: f64) -> Vec<Flow> {
    components
        .windows(2)
        .map(|w| flow(&w[0].id, &w[1].id, bandwidth))
        .collect()
}

/// Every ordered pair of distinct components, sharing `total` Mb/s equally.
pub fn uniform(components: &[Component], total: f64) -> Vec<Flow> {
    let n = components.len();
    if n < 2 {
        return Vec::new();
    }
    let each = total / (n * (n - 1)) as f64;
    let mut out = Vec::with_capacity(n * (n - 1));
    for a in components {
        for b in components {
            if a.id != b.id {
                out.push(flow(&a.id, &b.id, each));
            }
        }
    }
    out
}

/// Uniform traffic with the same total bandwidth as `inst`.
pub fn uniform_like(inst: &Instance) -> Result<Instance> {
    let total: f64 = inst.graph.flows.iter().map(|f| f.bandwidth).sum();
    inst.with_flows(uniform(&inst.graph.components, total))
}

fn node_table(entries: &[(&str, Option<f64>)]) -> BTreeMap<String, PpaValue> {
    entries
        .iter()
        .map(|(n, v)| (n.to_string(), PpaValue(*v)))
        .collect()
}

/// Case-study PPA table for 28nm (digital only) and 45nm (mixed-signal):
/// areas in mm², power and performance as costs relative to 28nm.
pub fn case_study_ppa() -> PpaTable {
    let kind = |a28: Option<f64>, a45: f64, p28: Option<f64>, p45: f64| KindPpa {
        area: node_table(&[("28nm", a28), ("45nm", Some(a45))]),
        perf: node_table(&[("28nm", p28), ("45nm", Some(p45))]),
        power: node_table(&[("28nm", p28), ("45nm", Some(p45))]),
    };
    let mut components = BTreeMap::new();
    components.insert("CPU".into(), kind(Some(35.8), 62.2, Some(1.0), 1.34));
    components.insert("ADC".into(), kind(None, 53.0, None, 1.0));
    components.insert("SIMD".into(), kind(Some(71.0), 125.0, Some(1.0), 1.34));
    PpaTable {
        components,
        routers: RouterTable {
            area_2d: node_table(&[("28nm", Some(1.3)), ("45nm", Some(2.25))]),
            area_3d: node_table(&[("28nm", Some(1.8)), ("45nm", Some(3.15))]),
            perf: node_table(&[("28nm", Some(1.0)), ("45nm", Some(1.34))]),
            power: node_table(&[("28nm", Some(1.0)), ("45nm", Some(1.34))]),
        },
    }
}

/// Stack of `nodes`, bottom first, K = 2 mm², R = 5 mm.
pub fn case_study_tech(nodes: &[&str]) -> TechParams {
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
        link_capacity: LINK_CAPACITY,
    }
}

fn numbered(prefix: &str, kind: &str, n: usize) -> Vec<Component> {
    (0..n).map(|i| component(format!("{prefix}{i}"), kind)).collect()
}

/// Five CPUs on two 28nm layers, 1 Mb/s chain.
pub fn tiny_soc() -> Result<Instance> {
    let components = numbered("cpu", "CPU", 5);
    let flows = chain(&components, 1.0);
    validate_instance(
        CoreGraph { components, flows },
        case_study_ppa(),
        case_study_tech(&["28nm", "28nm"]),
    )
}

/// Nine ADCs and nine CPUs on a 28nm layer under a 45nm mixed-signal layer.
/// Each ADC streams to its own CPU; the CPUs form a ring that also reduces
/// into cpu0.
pub fn small_vsoc() -> Result<Instance> {
    let adcs = numbered("adc", "ADC", 9);
    let cpus = numbered("cpu", "CPU", 9);
    let mut flows = Vec::new();
    for i in 0..9 {
        flows.push(flow(&adcs[i].id, &cpus[i].id, 40.0));
        flows.push(flow(&cpus[i].id, &cpus[(i + 1) % 9].id, 10.0));
        if i != 0 {
            flows.push(flow(&cpus[i].id, &cpus[0].id, 5.0));
        }
    }
    let components = adcs.into_iter().chain(cpus).collect();
    validate_instance(
        CoreGraph { components, flows },
        case_study_ppa(),
        case_study_tech(&["28nm", "45nm"]),
    )
}

/// Nine ADCs, eighteen CPUs and three SIMD engines on 28nm/28nm/45nm.
/// ADC i feeds front-end cpu i, which feeds back-end cpu (9 + i); back ends
/// are served by SIMD (i mod 3), and the SIMDs exchange partial results.
pub fn large_vsoc() -> Result<Instance> {
    let adcs = numbered("adc", "ADC", 9);
    let cpus = numbered("cpu", "CPU", 18);
    let simds = numbered("simd", "SIMD", 3);
    let mut flows = Vec::new();
    for i in 0..9 {
        flows.push(flow(&adcs[i].id, &cpus[i].id, 40.0));
        flows.push(flow(&cpus[i].id, &cpus[9 + i].id, 20.0));
        flows.push(flow(&cpus[9 + i].id, &simds[i % 3].id, 15.0));
        flows.push(flow(&simds[i % 3].id, &cpus[9 + i].id, 5.0));
    }
    for j in 0..3 {
        flows.push(flow(&simds[j].id, &simds[(j + 1) % 3].id, 10.0));
    }
    let components = adcs.into_iter().chain(cpus).chain(simds).collect();
    validate_instance(
        CoreGraph { components, flows },
        case_study_ppa(),
        case_study_tech(&["28nm", "28nm", "45nm"]),
    )
}

/// Twelve-core video object plane decoder graph on two 28nm layers.
/// Bandwidths follow the usual VOPD ratios scaled down by 10.
pub fn vopd() -> Result<Instance> {
    let cores: [(&str, &str); 12] = [
        ("vld", "CPU"),
        ("run_le_dec", "CPU"),
        ("inv_scan", "CPU"),
        ("acdc_pred", "CPU"),
        ("iquan", "SIMD"),
        ("idct", "SIMD"),
        ("up_samp", "SIMD"),
        ("vop_rec", "CPU"),
        ("pad", "CPU"),
        ("vop_mem", "CPU"),
        ("stripe_mem", "CPU"),
        ("arm", "CPU"),
    ];
    let components = cores.iter().map(|(id, k)| component(id.to_string(), k)).collect();
    let edges: [(&str, &str, f64); 15] = [
        ("vld", "run_le_dec", 70.0),
        ("run_le_dec", "inv_scan", 362.0),
        ("inv_scan", "acdc_pred", 362.0),
        ("acdc_pred", "iquan", 362.0),
        ("acdc_pred", "stripe_mem", 49.0),
        ("stripe_mem", "iquan", 27.0),
        ("iquan", "idct", 357.0),
        ("idct", "up_samp", 353.0),
        ("up_samp", "vop_rec", 300.0),
        ("vop_rec", "pad", 313.0),
        ("pad", "vop_mem", 313.0),
        ("vop_mem", "up_samp", 500.0),
        ("arm", "idct", 16.0),
        ("arm", "pad", 16.0),
        ("vop_mem", "arm", 94.0),
    ];
    let flows = edges.iter().map(|&(s, d, b)| flow(s, d, b / 10.0)).collect();
    validate_instance(
        CoreGraph { components, flows },
        case_study_ppa(),
        case_study_tech(&["28nm", "28nm"]),
    )
}

/// Shipped instances by directory name.
pub fn builtin(name: &str) -> Option<Result<Instance>> {
    Some(match name {
        "tiny_soc" => tiny_soc(),
        "small_vsoc" => small_vsoc(),
        "large_vsoc" => large_vsoc(),
        "vopd" => vopd(),
        _ => return None,
    })
}

pub const BUILTIN: [&str; 4] = ["tiny_soc", "small_vsoc", "large_vsoc", "vopd"];
