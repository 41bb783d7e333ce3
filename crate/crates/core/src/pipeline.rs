// SPDX-License-Identifier: Apache-2.0

//! The five-step flow: layer assignment, per-layer floorplanning, TSV array
//! counts, vertical-link placement and legalization, followed by the final
//! evaluation.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::anneal::SaParams;
use crate::error::{Error, Result};
use crate::floorplan_sa::{self, FloorplanOptions, FloorplanOutcome};
use crate::formats::{self, FloorplanLayerFile, SolutionFile, VlinkFile};
use crate::layer_assign::{self, AssignOptions, Step1Weights};
use crate::model::{Instance, LayerAssignment, LayerFloorplan, ObjectiveWeights, Solution, VerticalLink};
use crate::objective::{self, CostBreakdown, Metrics};
use crate::tsv_count::{self, TsvParams, TsvPlan};
use crate::vlink_sa::{self, Candidate, PlacementResult};

/// Annealing schedule without a seed (seeds derive from the run seed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub initial_temp: f64,
    pub iterations: usize,
    pub cooling: f64,
}

impl Schedule {
    pub fn with_seed(&self, seed: u64) -> SaParams {
        SaParams::new(self.initial_temp, self.iterations, self.cooling, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub weights: ObjectiveWeights,
    /// Weight of Σ perf in the Step 1 objective.
    pub step1_perf_weight: f64,
    pub step2: Schedule,
    pub step4: Schedule,
    pub tsv_samples: usize,
    /// Upper bound on arrays per boundary (also bounded by the grid and the
    /// candidate matching).
    pub max_tsv_arrays: Option<usize>,
    /// Use these counts per boundary instead of the Step 3 search.
    pub tsv_counts: Option<Vec<usize>>,
    pub max_components_exact: usize,
    pub require_every_layer: bool,
    /// Fixed `[rows, cols]` mesh per layer with aligned layers.
    pub fixed_mesh: Option<(usize, usize)>,
    /// Disable redistribution (R = 0).
    pub no_rd: bool,
    /// Override of the instance's maximum RD length, mm.
    pub rd_max: Option<f64>,
    pub rd_repair_rounds: usize,
    /// Last step to run, 1..=5.
    pub steps: u8,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            weights: ObjectiveWeights::default(),
            step1_perf_weight: 0.0,
            step2: Schedule {
                initial_temp: 20.0,
                iterations: 120,
                cooling: 0.97,
            },
            step4: Schedule {
                initial_temp: 100.0,
                iterations: 50,
                cooling: 0.97,
            },
            tsv_samples: tsv_count::DEFAULT_SAMPLES,
            max_tsv_arrays: None,
            tsv_counts: None,
            max_components_exact: layer_assign::DEFAULT_MAX_COMPONENTS,
            require_every_layer: true,
            fixed_mesh: None,
            no_rd: false,
            rd_max: None,
            rd_repair_rounds: 3,
            steps: 5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.step1_perf_weight.is_finite() && self.step1_perf_weight >= 0.0) {
            return Err(Error::Config("step1_perf_weight must be >= 0".into()));
        }
        self.step2.with_seed(0).validate()?;
        self.step4.with_seed(0).validate()?;
        if self.tsv_samples == 0 {
            return Err(Error::Config("tsv_samples must be >= 1".into()));
        }
        if !(1..=5).contains(&self.steps) {
            return Err(Error::Config(format!("steps must lie in 1..=5, got {}", self.steps)));
        }
        if let Some((r, c)) = self.fixed_mesh {
            if r == 0 || c == 0 {
                return Err(Error::Config("fixed mesh dimensions must be positive".into()));
            }
        }
        if let Some(r) = self.rd_max {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Config(format!("rd_max must be >= 0, got {r}")));
            }
        }
        Ok(())
    }

    pub fn assign_options(&self) -> AssignOptions {
        AssignOptions {
            weights: Step1Weights {
                area: self.weights.area,
                power: self.weights.power,
                perf: self.step1_perf_weight,
            },
            max_components: self.max_components_exact,
            require_every_layer: self.require_every_layer,
        }
    }

    pub fn step2_seed(&self) -> u64 {
        self.seed
    }

    pub fn step3_seed(&self) -> u64 {
        self.seed.wrapping_add(0x1000)
    }

    pub fn step4_seed(&self) -> u64 {
        self.seed.wrapping_add(0x2000)
    }
}

/// Parses `RxC`.
pub fn parse_mesh(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("mesh must look like 3x3, got `{s}`"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let r: usize = r.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    if r == 0 || c == 0 {
        return Err(bad());
    }
    Ok((r, c))
}

#[derive(Debug, Clone)]
pub struct LegalOutcome {
    pub floorplans: Vec<LayerFloorplan>,
    pub vlinks: Vec<VerticalLink>,
    pub rd_violation: bool,
    pub repair_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCosts {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step2: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step3: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step5: Option<CostBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub step2: u64,
    pub step3: u64,
    pub step4: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub components: usize,
    pub flows: usize,
    pub layers: Vec<String>,
    pub config: PipelineConfig,
    pub seeds: Seeds,
    pub rd_max_length: f64,
    pub aligned_layers: bool,
    pub steps_run: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment_method: Option<String>,
    pub step_costs: StepCosts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<BTreeMap<String, usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floorplans: Option<Vec<FloorplanLayerFile>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tsv_plans: Option<Vec<TsvPlan>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vlinks: Option<Vec<VlinkFile>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rd_violation: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rd_repair_rounds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    /// Wall-clock milliseconds per step; the only nondeterministic field.
    pub timing_ms: BTreeMap<String, f64>,
    #[serde(skip)]
    pub solution: Option<Solution>,
}

impl Report {
    pub fn solution_file(&self) -> Option<SolutionFile> {
        Some(SolutionFile {
            assignment: self.assignment.clone()?,
            floorplans: self.floorplans.clone()?,
            vlinks: self.vlinks.clone()?,
        })
    }

    /// JSON with the timing field removed.
    pub fn deterministic_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("timing_ms");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

pub struct Pipeline {
    pub inst: Instance,
    pub cfg: PipelineConfig,
    pub aligned: bool,
}

fn finish(mut report: Report, costs: StepCosts, timing: BTreeMap<String, f64>) -> Result<Report> {
    report.step_costs = costs;
    report.timing_ms = timing;
    Ok(report)
}

fn violates_rd(vlinks: &[VerticalLink], rd_max: f64) -> bool {
    vlinks.iter().any(|v| v.rd_length > rd_max + 1e-9)
}

impl Pipeline {
    /// Applies the RD overrides of `cfg` to the instance.
    pub fn new(inst: &Instance, cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let inst = if cfg.no_rd {
            inst.with_rd_max(0.0)
        } else if let Some(r) = cfg.rd_max {
            inst.with_rd_max(r)
        } else {
            inst.clone()
        };
        let aligned = cfg.fixed_mesh.is_some() || inst.tech.rd_max_length == 0.0;
        Ok(Pipeline { inst, cfg, aligned })
    }

    pub fn rd_max(&self) -> f64 {
        self.inst.tech.rd_max_length
    }

    /// Step 1; falls back to the greedy assignment above the exact cap.
    pub fn assign(&self) -> Result<(LayerAssignment, &'static str)> {
        let opts = self.cfg.assign_options();
        match layer_assign::assign_layers(&self.inst, &opts) {
            Ok(a) => Ok((a, "branch-and-bound")),
            Err(Error::InstanceTooLarge(msg)) => {
                log::warn!("{msg}");
                Ok((layer_assign::assign_layers_greedy(&self.inst, &opts)?, "greedy"))
            }
            Err(e) => Err(e),
        }
    }

    pub fn floorplan(&self, a: &LayerAssignment) -> Result<Vec<FloorplanOutcome>> {
        let opts = FloorplanOptions {
            fixed_mesh: self.cfg.fixed_mesh,
            aligned: self.aligned,
        };
        let sa = self.cfg.step2.with_seed(self.cfg.step2_seed());
        floorplan_sa::floorplan_all(&self.inst, a, &self.cfg.weights, &sa, &opts)
    }

    fn candidates(&self, fps: &[LayerFloorplan], b: usize) -> Result<Vec<Candidate>> {
        vlink_sa::candidate_links(fps, b, self.rd_max())
    }

    /// Step 3, or the configured fixed counts.
    pub fn plan_tsvs(&self, a: &LayerAssignment, fps: &[LayerFloorplan]) -> Result<Vec<TsvPlan>> {
        let params = TsvParams {
            samples: self.cfg.tsv_samples,
            seed: self.cfg.step3_seed(),
            koz_area: self.inst.tech.koz_area,
            weights: self.cfg.weights,
        };
        let boundaries = fps.len().saturating_sub(1);
        if let Some(counts) = &self.cfg.tsv_counts {
            if counts.len() != boundaries {
                return Err(Error::Config(format!(
                    "tsv_counts has {} entries for {boundaries} boundaries",
                    counts.len()
                )));
            }
        }
        let mut plans = Vec::with_capacity(boundaries);
        for b in 0..boundaries {
            let endpoints = tsv_count::boundary_endpoints(&self.inst, a, fps, b)?;
            let upper = &fps[b + 1];
            if let Some(counts) = &self.cfg.tsv_counts {
                let count = counts[b];
                let curve = if count == 0 && !endpoints.is_empty() {
                    vec![]
                } else {
                    vec![tsv_count::estimate_arrays(&endpoints, upper, count, &params)?]
                };
                plans.push(TsvPlan {
                    boundary: b,
                    count,
                    curve,
                });
                continue;
            }
            if endpoints.is_empty() {
                plans.push(tsv_count::choose_count(&endpoints, upper, b, 0, &params)?);
                continue;
            }
            let cands = self.candidates(fps, b)?;
            let max_i = upper
                .cells
                .len()
                .min(vlink_sa::max_links(&cands))
                .min(self.cfg.max_tsv_arrays.unwrap_or(usize::MAX));
            plans.push(tsv_count::choose_count(&endpoints, upper, b, max_i, &params)?);
        }
        Ok(plans)
    }

    /// Step 4 on the given geometry.
    pub fn place(
        &self,
        a: &LayerAssignment,
        fps: &[LayerFloorplan],
        counts: &[usize],
        seed: u64,
    ) -> Result<PlacementResult> {
        let mut cands = Vec::with_capacity(counts.len());
        for (b, &k) in counts.iter().enumerate() {
            cands.push(if k == 0 { Vec::new() } else { self.candidates(fps, b)? });
        }
        let sa = self.cfg.step4.with_seed(seed);
        vlink_sa::place_vlinks(&self.inst, a, fps, &cands, counts, &self.cfg.weights, &sa)
    }

    /// Step 5 with the RD repair loop: if a link's redistribution exceeds R
    /// in the legalized geometry, Step 4 is rerun on that geometry.
    pub fn legalize(
        &self,
        a: &LayerAssignment,
        fps: &[LayerFloorplan],
        vlinks: &[VerticalLink],
        counts: &[usize],
    ) -> Result<LegalOutcome> {
        let rd_max = self.rd_max();
        let mut vlinks = vlinks.to_vec();
        let mut legal = floorplan_sa::legalize(&self.inst, fps, &vlinks, self.aligned)?;
        floorplan_sa::update_rd_lengths(&legal, &mut vlinks);
        let mut rounds = 0;
        while violates_rd(&vlinks, rd_max) && rounds < self.cfg.rd_repair_rounds {
            rounds += 1;
            let mut cands = Vec::with_capacity(counts.len());
            let mut new_counts = Vec::with_capacity(counts.len());
            for (b, &k) in counts.iter().enumerate() {
                let c = if k == 0 {
                    Vec::new()
                } else {
                    match self.candidates(&legal, b) {
                        Ok(c) => c,
                        Err(Error::NoCandidates { .. }) => Vec::new(),
                        Err(e) => return Err(e),
                    }
                };
                new_counts.push(k.min(vlink_sa::max_links(&c)));
                cands.push(c);
            }
            if counts.iter().zip(&new_counts).any(|(&k, &n)| k > 0 && n == 0) {
                break;
            }
            let sa = self.cfg.step4.with_seed(self.cfg.step4_seed().wrapping_add(rounds as u64));
            let placed = vlink_sa::place_vlinks(&self.inst, a, &legal, &cands, &new_counts, &self.cfg.weights, &sa)?;
            let next = floorplan_sa::legalize(&self.inst, &legal, &placed.vlinks, self.aligned)?;
            vlinks = placed.vlinks;
            floorplan_sa::update_rd_lengths(&next, &mut vlinks);
            legal = next;
        }
        let rd_violation = violates_rd(&vlinks, rd_max);
        if rd_violation {
            log::warn!("redistribution exceeds {rd_max} mm after {rounds} repair rounds");
        }
        Ok(LegalOutcome {
            floorplans: legal,
            vlinks,
            rd_violation,
            repair_rounds: rounds,
        })
    }

    pub fn run(&self) -> Result<Report> {
        let inst = &self.inst;
        let cfg = &self.cfg;
        let mut timing = BTreeMap::new();
        let mut costs = StepCosts {
            step1: None,
            step2: None,
            step3: None,
            step4: None,
            step5: None,
        };
        let mut report = Report {
            components: inst.num_components(),
            flows: inst.flows().len(),
            layers: inst.tech.layers.iter().map(|l| l.node.clone()).collect(),
            config: cfg.clone(),
            seeds: Seeds {
                step2: cfg.step2_seed(),
                step3: cfg.step3_seed(),
                step4: cfg.step4_seed(),
            },
            rd_max_length: self.rd_max(),
            aligned_layers: self.aligned,
            steps_run: 0,
            assignment_method: None,
            step_costs: costs.clone(),
            assignment: None,
            floorplans: None,
            tsv_plans: None,
            vlinks: None,
            rd_violation: None,
            rd_repair_rounds: None,
            metrics: None,
            timing_ms: BTreeMap::new(),
            solution: None,
        };
        let mut clock = Instant::now();
        let mut lap = |name: &str, timing: &mut BTreeMap<String, f64>| {
            timing.insert(name.to_string(), clock.elapsed().as_secs_f64() * 1e3);
            clock = Instant::now();
        };

        let (assignment, method) = self.assign().map_err(|e| e.at_step(1))?;
        let w = cfg.assign_options().weights;
        costs.step1 = Some(objective::step1_cost(inst, &assignment.layer_of, w.area, w.power, w.perf));
        report.assignment_method = Some(method.to_string());
        report.assignment = Some(formats::assignment_to_file(inst, &assignment).assignment);
        report.steps_run = 1;
        lap("step1", &mut timing);

        if cfg.steps < 2 {
            return finish(report, costs, timing);
        }

        let outcomes = self.floorplan(&assignment).map_err(|e| e.at_step(2))?;
        let fps: Vec<LayerFloorplan> = outcomes.iter().map(|o| o.floorplan.clone()).collect();
        costs.step2 = Some(outcomes.iter().map(|o| o.sa_cost).collect());
        report.floorplans = Some(fps.iter().map(|fp| formats::floorplan_to_file(inst, fp)).collect());
        report.steps_run = 2;
        lap("step2", &mut timing);
        if cfg.steps < 3 {
            return finish(report, costs, timing);
        }

        let plans = self.plan_tsvs(&assignment, &fps).map_err(|e| e.at_step(3))?;
        let counts: Vec<usize> = plans.iter().map(|p| p.count).collect();
        costs.step3 = Some(
            plans
                .iter()
                .map(|p| p.curve.iter().find(|e| e.count == p.count).map_or(0.0, |e| e.c3))
                .collect(),
        );
        report.tsv_plans = Some(plans);
        report.steps_run = 3;
        lap("step3", &mut timing);
        if cfg.steps < 4 {
            return finish(report, costs, timing);
        }

        let placed = self
            .place(&assignment, &fps, &counts, cfg.step4_seed())
            .map_err(|e| e.at_step(4))?;
        costs.step4 = Some(placed.cost);
        report.vlinks = Some(
            placed
                .vlinks
                .iter()
                .map(|v| formats::vlink_to_file(inst, &fps, v))
                .collect(),
        );
        report.steps_run = 4;
        lap("step4", &mut timing);
        if cfg.steps < 5 {
            return finish(report, costs, timing);
        }

        let legal = self
            .legalize(&assignment, &fps, &placed.vlinks, &counts)
            .map_err(|e| e.at_step(5))?;
        let solution = Solution {
            assignment,
            floorplans: legal.floorplans,
            vlinks: legal.vlinks,
        };
        lap("step5", &mut timing);
        let eval = objective::evaluate(inst, &solution, &cfg.weights).map_err(|e| e.at_step(5))?;
        lap("evaluation", &mut timing);
        costs.step5 = Some(eval.metrics.cost);
        let file = formats::solution_to_file(inst, &solution);
        report.floorplans = Some(file.floorplans);
        report.vlinks = Some(file.vlinks);
        report.rd_violation = Some(legal.rd_violation);
        report.rd_repair_rounds = Some(legal.repair_rounds);
        report.metrics = Some(eval.metrics);
        report.solution = Some(solution);
        report.steps_run = 5;
        finish(report, costs, timing)
    }
}

/// Evaluates an embedded solution (report or exact solution file). RD
/// lengths are recomputed from the stored geometry.
pub fn evaluate_file(inst: &Instance, file: &SolutionFile, w: &ObjectiveWeights) -> Result<(Solution, objective::Evaluation)> {
    let mut sol = formats::solution_from_file(inst, file)?;
    floorplan_sa::update_rd_lengths(&sol.floorplans, &mut sol.vlinks);
    if violates_rd(&sol.vlinks, inst.tech.rd_max_length) {
        log::warn!("solution has redistribution longer than {} mm", inst.tech.rd_max_length);
    }
    let e = objective::evaluate(inst, &sol, w)?;
    Ok((sol, e))
}
