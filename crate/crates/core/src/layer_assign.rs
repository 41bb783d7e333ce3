// SPDX-License-Identifier: Apache-2.0

//! Step 1: component-to-layer assignment minimizing
//! `C1 = w1·max_l Σ area + w2·Σ power + w3·Σ perf`.
//!
//! When there are at least as many components as layers (and a covering
//! exists) every layer must receive at least one component.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::matching_size;
use crate::model::{Instance, LayerAssignment};
use crate::objective::step1_cost;

pub const DEFAULT_MAX_COMPONENTS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step1Weights {
    pub area: f64,
    pub power: f64,
    pub perf: f64,
}

impl Default for Step1Weights {
    fn default() -> Self {
        Step1Weights {
            area: 1.0,
            power: 1.0,
            perf: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignOptions {
    pub weights: Step1Weights,
    /// Branch-and-bound refuses larger instances.
    pub max_components: usize,
    pub require_every_layer: bool,
}

impl Default for AssignOptions {
    fn default() -> Self {
        AssignOptions {
            weights: Step1Weights::default(),
            max_components: DEFAULT_MAX_COMPONENTS,
            require_every_layer: true,
        }
    }
}

fn check_feasible(inst: &Instance) -> Result<()> {
    for c in 0..inst.num_components() {
        if inst.feasible_layers(c).is_empty() {
            return Err(Error::NoFeasibleLayer(inst.component_id(c).to_string()));
        }
    }
    Ok(())
}

/// Whether every layer must be non-empty: requested, at least as many
/// components as layers, and some assignment covers all layers.
pub fn cover_required(inst: &Instance, opts: &AssignOptions) -> bool {
    let n = inst.num_components();
    let layers = inst.num_layers();
    if !opts.require_every_layer || n < layers || layers <= 1 {
        return false;
    }
    let adj: Vec<Vec<usize>> = (0..layers)
        .map(|l| (0..n).filter(|&c| inst.ppa(c, l).is_some()).collect())
        .collect();
    matching_size(&adj, n) == layers
}

fn tie_eps(best: f64) -> f64 {
    1e-9 * best.abs().max(1.0)
}

struct Search {
    w: Step1Weights,
    order: Vec<usize>,
    /// Per position in `order`: feasible (layer, area, power, perf).
    options: Vec<Vec<(usize, f64, f64, f64)>>,
    /// Suffix sums of per-component minima from position k on.
    rest_area: Vec<f64>,
    rest_power: Vec<f64>,
    rest_perf: Vec<f64>,
    /// Position k holds a component interchangeable with position k - 1.
    same_as_prev: Vec<bool>,
    /// Lowest layer with the same PPA column as each layer.
    layer_class: Vec<usize>,
    cover: bool,
    layer_area: Vec<f64>,
    layer_count: Vec<usize>,
    current: Vec<usize>,
    best_cost: f64,
    best: Option<Vec<usize>>,
    nodes: u64,
}

impl Search {
    fn dfs(&mut self, k: usize, power: f64, perf: f64) {
        self.nodes += 1;
        let layers = self.layer_area.len();
        let n = self.order.len();
        if self.cover {
            let empty = self.layer_count.iter().filter(|&&c| c == 0).count();
            if n - k < empty {
                return;
            }
        }
        if k == n {
            let max_area = self.layer_area.iter().copied().fold(0.0, f64::max);
            let cost = self.w.area * max_area + self.w.power * power + self.w.perf * perf;
            let improves = match self.best {
                Some(_) => cost < self.best_cost - tie_eps(self.best_cost),
                None => cost <= self.best_cost,
            };
            if improves {
                self.best_cost = cost;
                let mut layer_of = vec![0; n];
                for (pos, &c) in self.order.iter().enumerate() {
                    layer_of[c] = self.current[pos];
                }
                self.best = Some(layer_of);
            }
            return;
        }
        let max_area = self.layer_area.iter().copied().fold(0.0, f64::max);
        let sum_area: f64 = self.layer_area.iter().sum();
        let area_lb = max_area.max((sum_area + self.rest_area[k]) / layers as f64);
        let lb = self.w.area * area_lb
            + self.w.power * (power + self.rest_power[k])
            + self.w.perf * (perf + self.rest_perf[k]);
        let bound = match self.best {
            Some(_) => self.best_cost - tie_eps(self.best_cost),
            None => self.best_cost,
        };
        if lb > bound {
            return;
        }
        for i in 0..self.options[k].len() {
            let (l, a, p, f) = self.options[k][i];
            // symmetric subtrees: identical components take non-decreasing
            // layers, and of identical layers in identical states only the
            // lowest is tried
            if self.same_as_prev[k] && l < self.current[k - 1] {
                continue;
            }
            if self.symmetric_lower(l) {
                continue;
            }
            self.layer_area[l] += a;
            self.layer_count[l] += 1;
            self.current.push(l);
            self.dfs(k + 1, power + p, perf + f);
            self.current.pop();
            self.layer_count[l] -= 1;
            self.layer_area[l] -= a;
        }
    }
}

impl Search {
    fn symmetric_lower(&self, l: usize) -> bool {
        (self.layer_class[l]..l).any(|m| {
            self.layer_class[m] == self.layer_class[l]
                && self.layer_count[m] == self.layer_count[l]
                && self.layer_area[m] == self.layer_area[l]
        })
    }
}

/// Components by decreasing maximum feasible area, ties by index.
fn area_order(inst: &Instance) -> Vec<usize> {
    let max_area = |c: usize| {
        inst.feasible_layers(c)
            .iter()
            .map(|&l| inst.area(c, l).unwrap())
            .fold(0.0, f64::max)
    };
    let mut order: Vec<usize> = (0..inst.num_components()).collect();
    order.sort_by(|&a, &b| max_area(b).total_cmp(&max_area(a)).then(a.cmp(&b)));
    order
}

/// Exact branch-and-bound. Among optimal assignments the one found first
/// in lowest-layer-first search order is returned.
pub fn assign_layers(inst: &Instance, opts: &AssignOptions) -> Result<LayerAssignment> {
    check_feasible(inst)?;
    let n = inst.num_components();
    if n > opts.max_components {
        return Err(Error::InstanceTooLarge(format!(
            "{n} components exceed the branch-and-bound cap of {}; use the greedy assignment",
            opts.max_components
        )));
    }
    let cover = cover_required(inst, opts);
    let order = area_order(inst);
    let options: Vec<Vec<(usize, f64, f64, f64)>> = order
        .iter()
        .map(|&c| {
            inst.feasible_layers(c)
                .into_iter()
                .map(|l| {
                    let p = inst.ppa(c, l).unwrap();
                    (l, p.area, p.power, p.perf)
                })
                .collect()
        })
        .collect();
    let suffix = |f: &dyn Fn(&(usize, f64, f64, f64)) -> f64| {
        let mut out = vec![0.0; n + 1];
        for k in (0..n).rev() {
            let m = options[k].iter().map(f).fold(f64::INFINITY, f64::min);
            out[k] = out[k + 1] + m;
        }
        out
    };
    let rest_area = suffix(&|o| o.1);
    let rest_power = suffix(&|o| o.2);
    let rest_perf = suffix(&|o| o.3);
    let same_as_prev = (0..n).map(|k| k > 0 && options[k] == options[k - 1]).collect();
    let layers = inst.num_layers();
    let column = |l: usize| (0..n).map(|c| inst.ppa(c, l)).collect::<Vec<_>>();
    let layer_class = (0..layers)
        .map(|l| (0..l).find(|&m| column(m) == column(l)).unwrap_or(l))
        .collect();

    // the greedy result bounds the search from above
    let w = opts.weights;
    let upper = match assign_layers_greedy(inst, opts) {
        Ok(g) if !cover || (0..inst.num_layers()).all(|l| g.layer_of.contains(&l)) => {
            step1_cost(inst, &g.layer_of, w.area, w.power, w.perf)
        }
        _ => f64::INFINITY,
    };

    let mut search = Search {
        w: opts.weights,
        order,
        options,
        rest_area,
        rest_power,
        rest_perf,
        same_as_prev,
        layer_class,
        cover,
        layer_area: vec![0.0; inst.num_layers()],
        layer_count: vec![0; inst.num_layers()],
        current: Vec::with_capacity(n),
        best_cost: upper + 2.0 * tie_eps(upper),
        best: None,
        nodes: 0,
    };
    search.dfs(0, 0.0, 0.0);
    log::debug!("layer assignment explored {} nodes", search.nodes);
    search
        .best
        .map(|layer_of| LayerAssignment { layer_of })
        .ok_or_else(|| Error::SolverFailure("branch-and-bound found no assignment".into()))
}

/// Places components in decreasing-area order on the layer with the
/// smallest incremental C1.
pub fn assign_layers_greedy(inst: &Instance, opts: &AssignOptions) -> Result<LayerAssignment> {
    check_feasible(inst)?;
    let n = inst.num_components();
    let layers = inst.num_layers();
    let cover = cover_required(inst, opts);
    let w = opts.weights;
    let order = area_order(inst);
    let mut layer_of = vec![usize::MAX; n];
    let mut area = vec![0.0; layers];
    let mut count = vec![0usize; layers];
    for (pos, &c) in order.iter().enumerate() {
        let remaining = n - pos;
        let empty = count.iter().filter(|&&k| k == 0).count();
        let must_fill = cover && remaining <= empty;
        let mut best: Option<(f64, usize)> = None;
        for l in inst.feasible_layers(c) {
            if must_fill && count[l] > 0 {
                continue;
            }
            let p = inst.ppa(c, l).unwrap();
            let new_max = area
                .iter()
                .enumerate()
                .map(|(k, &a)| if k == l { a + p.area } else { a })
                .fold(0.0, f64::max);
            let cost = w.area * new_max + w.power * p.power + w.perf * p.perf;
            if best.is_none_or(|(b, _)| cost < b - tie_eps(b)) {
                best = Some((cost, l));
            }
        }
        let l = match best {
            Some((_, l)) => l,
            // the forced empty layers are infeasible for this component
            None => inst.feasible_layers(c)[0],
        };
        layer_of[c] = l;
        area[l] += inst.area(c, l).unwrap();
        count[l] += 1;
    }
    Ok(LayerAssignment { layer_of })
}

/// Exhaustive enumeration over all feasible assignments (test oracle and
/// reference for tiny instances).
pub fn assign_layers_exhaustive(inst: &Instance, opts: &AssignOptions) -> Result<LayerAssignment> {
    check_feasible(inst)?;
    let n = inst.num_components();
    let cover = cover_required(inst, opts);
    let feas: Vec<Vec<usize>> = (0..n).map(|c| inst.feasible_layers(c)).collect();
    let mut idx = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let layer_of: Vec<usize> = (0..n).map(|c| feas[c][idx[c]]).collect();
        let covers = !cover || (0..inst.num_layers()).all(|l| layer_of.contains(&l));
        if covers {
            let w = opts.weights;
            let cost = step1_cost(inst, &layer_of, w.area, w.power, w.perf);
            if best.as_ref().is_none_or(|(b, _)| cost < b - tie_eps(*b)) {
                best = Some((cost, layer_of));
            }
        }
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < feas[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    best.map(|(_, layer_of)| LayerAssignment { layer_of })
        .ok_or_else(|| Error::SolverFailure("no assignment enumerated".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{case_study_ppa, tech};
    use crate::model::{validate_instance, Component, CoreGraph};

    fn instance(kinds: &[&str], nodes: &[&str]) -> Instance {
        let graph = CoreGraph {
            components: kinds
                .iter()
                .enumerate()
                .map(|(i, k)| Component {
                    id: format!("c{i}"),
                    kind: k.to_string(),
                })
                .collect(),
            flows: vec![],
        };
        validate_instance(graph, case_study_ppa(), tech(nodes)).unwrap()
    }

    fn area_only() -> AssignOptions {
        AssignOptions {
            weights: Step1Weights {
                area: 1.0,
                power: 0.0,
                perf: 0.0,
            },
            ..AssignOptions::default()
        }
    }

    #[test]
    fn adc_forced_cpu_on_28nm() {
        let inst = instance(&["ADC", "CPU"], &["28nm", "45nm"]);
        for a in [
            assign_layers(&inst, &area_only()).unwrap(),
            assign_layers_greedy(&inst, &area_only()).unwrap(),
        ] {
            assert_eq!(a.layer_of, vec![1, 0]);
        }
    }

    #[test]
    fn single_component_single_layer() {
        let inst = instance(&["CPU"], &["28nm"]);
        assert_eq!(assign_layers(&inst, &AssignOptions::default()).unwrap().layer_of, vec![0]);
    }

    #[test]
    fn five_cpus_split_three_two() {
        let inst = instance(&["CPU"; 5], &["28nm", "28nm"]);
        let a = assign_layers(&inst, &area_only()).unwrap();
        let on0 = a.members(0).len();
        assert!(on0 == 3 || on0 == 2);
        let cost = step1_cost(&inst, &a.layer_of, 1.0, 0.0, 0.0);
        assert!((cost - 107.4).abs() < 1e-9);
        // all 32 assignments
        let mut best = f64::INFINITY;
        for mask in 0u32..32 {
            let layer_of: Vec<usize> = (0..5).map(|i| (mask >> i & 1) as usize).collect();
            best = best.min(step1_cost(&inst, &layer_of, 1.0, 0.0, 0.0));
        }
        assert!((cost - best).abs() < 1e-9);
    }

    #[test]
    fn too_large() {
        let inst = instance(&["CPU"; 4], &["28nm"]);
        let opts = AssignOptions {
            max_components: 3,
            ..AssignOptions::default()
        };
        assert!(matches!(assign_layers(&inst, &opts), Err(Error::InstanceTooLarge(_))));
        assert!(assign_layers_greedy(&inst, &opts).is_ok());
    }

    #[test]
    fn every_layer_filled_when_required() {
        // with heavy power weight, 45nm is avoided unless forced
        let inst = instance(&["CPU", "CPU"], &["28nm", "45nm"]);
        let mut opts = AssignOptions {
            weights: Step1Weights {
                area: 0.0,
                power: 1.0,
                perf: 0.0,
            },
            ..AssignOptions::default()
        };
        assert_eq!(assign_layers(&inst, &opts).unwrap().members(1).len(), 1);
        opts.require_every_layer = false;
        assert_eq!(assign_layers(&inst, &opts).unwrap().layer_of, vec![0, 0]);
    }
}
