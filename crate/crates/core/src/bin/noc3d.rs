// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use noc3d::exact_baseline::{self, ExactLimits};
use noc3d::formats::{self, AssignmentFile, FloorplanFile, SolutionFile, VlinksFile};
use noc3d::model::{read_json, write_json, Instance, LayerFloorplan, ObjectiveWeights, Solution};
use noc3d::net_route;
use noc3d::objective::Metrics;
use noc3d::pipeline::{self, Pipeline, PipelineConfig};
use noc3d::tsv_count::TsvPlan;
use noc3d::{corpus, render, Error, Result};

#[derive(Parser)]
#[command(name = "noc3d", version, about = "Partially vertically connected 3D mesh NoC synthesis")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Instance directory with coregraph.json, ppa.json and tech.json.
    instance: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Pipeline configuration (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Objective weights area,power,perf,peak,util.
    #[arg(long)]
    weights: Option<ObjectiveWeights>,
    /// Fixed RxC mesh on every layer, layers aligned.
    #[arg(long, value_name = "RxC")]
    fixed_mesh: Option<String>,
    /// Co-located routers only (R = 0).
    #[arg(long)]
    no_rd: bool,
    /// Override the maximum redistribution length, mm.
    #[arg(long, value_name = "MM")]
    rd_max: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check an instance and print a summary.
    Validate { instance: PathBuf },
    /// Step 1: layer assignment → assignment.json.
    Assign(Common),
    /// Step 2: per-layer floorplans → floorplan.json and layer SVGs.
    Floorplan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        assignment: Option<PathBuf>,
        #[arg(long)]
        no_svg: bool,
    },
    /// Step 3: TSV array counts → tsv_plan.json.
    Tsv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        assignment: Option<PathBuf>,
        #[arg(long)]
        floorplan: Option<PathBuf>,
    },
    /// Step 4: vertical-link placement → vlinks.json.
    Place3d {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        assignment: Option<PathBuf>,
        #[arg(long)]
        floorplan: Option<PathBuf>,
        #[arg(long)]
        tsv_plan: Option<PathBuf>,
    },
    /// Step 5: legalization → solution.json and layer SVGs.
    Legalize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        assignment: Option<PathBuf>,
        #[arg(long)]
        floorplan: Option<PathBuf>,
        #[arg(long)]
        vlinks: Option<PathBuf>,
        #[arg(long)]
        no_svg: bool,
    },
    /// Evaluate a solution (solution.json, report.json or
    /// exact_solution.json) → traffic.json.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Steps 1 to 5 and final evaluation → report.json and layer SVGs.
    Run {
        #[command(flatten)]
        common: Common,
        /// Last step to run (1..=5).
        #[arg(long)]
        steps: Option<u8>,
        #[arg(long)]
        no_svg: bool,
    },
    /// Exact optimum of a tiny instance → exact_solution.json.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = ExactLimits::default().components)]
        max_components: usize,
        #[arg(long, default_value_t = ExactLimits::default().grid_cells)]
        max_grid_cells: usize,
        #[arg(long, default_value_t = ExactLimits::default().vcands)]
        max_vcands: usize,
    },
    /// Draw the layers of a solution as SVG files.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Write the built-in corpus instances (or one of them) as instance
    /// directories under `out`.
    Generate {
        /// tiny_soc, small_vsoc, large_vsoc, vopd or all.
        #[arg(default_value = "all")]
        name: String,
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
        /// Replace the flows by uniform traffic of the same total bandwidth.
        #[arg(long)]
        uniform: bool,
    },
}

#[derive(Serialize, Deserialize)]
struct TsvPlanFile {
    plans: Vec<TsvPlan>,
}

#[derive(Serialize)]
struct ExactSolutionFile<'a> {
    #[serde(flatten)]
    solution: SolutionFile,
    metrics: &'a Metrics,
    configurations: u64,
    feasible_configurations: u64,
}

fn config(c: &Common) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = match &c.config {
        Some(p) => read_json(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(w) = c.weights {
        cfg.weights = w;
    }
    if let Some(m) = &c.fixed_mesh {
        cfg.fixed_mesh = Some(pipeline::parse_mesh(m)?);
    }
    if c.no_rd {
        cfg.no_rd = true;
    }
    if c.rd_max.is_some() {
        cfg.rd_max = c.rd_max;
    }
    Ok(cfg)
}

fn pipeline_for(c: &Common) -> Result<Pipeline> {
    let inst = Instance::load_dir(&c.instance)?;
    Pipeline::new(&inst, config(c)?)
}

fn out_file(c: &Common, given: &Option<PathBuf>, name: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| c.out.join(name))
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn write_out<T: Serialize>(c: &Common, name: &str, value: &T) -> Result<()> {
    create_out(&c.out)?;
    let path = c.out.join(name);
    write_json(&path, value)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_svgs(inst: &Instance, sol: &Solution, out: &Path) -> Result<()> {
    create_out(out)?;
    for l in 0..sol.floorplans.len() {
        let path = out.join(format!("layer{l}.svg"));
        std::fs::write(&path, render::render_layer(inst, sol, l)).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

fn load_floorplans(inst: &Instance, path: &Path) -> Result<Vec<LayerFloorplan>> {
    let f: FloorplanFile = read_json(path)?;
    f.floorplans
        .iter()
        .map(|fp| formats::floorplan_from_file(inst, fp))
        .collect()
}

fn execute(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Validate { instance } => {
            let inst = Instance::load_dir(&instance)?;
            println!(
                "ok: {} components, {} flows, {} layers ({})",
                inst.num_components(),
                inst.flows().len(),
                inst.num_layers(),
                inst.tech
                    .layers
                    .iter()
                    .map(|l| l.node.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
        Cmd::Assign(c) => {
            let p = pipeline_for(&c)?;
            let (a, method) = p.assign().map_err(|e| e.at_step(1))?;
            log::info!("assignment by {method}");
            write_out(&c, "assignment.json", &formats::assignment_to_file(&p.inst, &a))?;
        }
        Cmd::Floorplan {
            common: c,
            assignment,
            no_svg,
        } => {
            let p = pipeline_for(&c)?;
            let af: AssignmentFile = read_json(&out_file(&c, &assignment, "assignment.json"))?;
            let a = formats::assignment_from_file(&p.inst, &af.assignment)?;
            let outcomes = p.floorplan(&a).map_err(|e| e.at_step(2))?;
            let fps: Vec<LayerFloorplan> = outcomes.into_iter().map(|o| o.floorplan).collect();
            let file = FloorplanFile {
                floorplans: fps.iter().map(|fp| formats::floorplan_to_file(&p.inst, fp)).collect(),
            };
            write_out(&c, "floorplan.json", &file)?;
            if !no_svg {
                let sol = Solution {
                    assignment: a,
                    floorplans: fps,
                    vlinks: vec![],
                };
                write_svgs(&p.inst, &sol, &c.out)?;
            }
        }
        Cmd::Tsv {
            common: c,
            assignment,
            floorplan,
        } => {
            let p = pipeline_for(&c)?;
            let af: AssignmentFile = read_json(&out_file(&c, &assignment, "assignment.json"))?;
            let a = formats::assignment_from_file(&p.inst, &af.assignment)?;
            let fps = load_floorplans(&p.inst, &out_file(&c, &floorplan, "floorplan.json"))?;
            let plans = p.plan_tsvs(&a, &fps).map_err(|e| e.at_step(3))?;
            write_out(&c, "tsv_plan.json", &TsvPlanFile { plans })?;
        }
        Cmd::Place3d {
            common: c,
            assignment,
            floorplan,
            tsv_plan,
        } => {
            let p = pipeline_for(&c)?;
            let af: AssignmentFile = read_json(&out_file(&c, &assignment, "assignment.json"))?;
            let a = formats::assignment_from_file(&p.inst, &af.assignment)?;
            let fps = load_floorplans(&p.inst, &out_file(&c, &floorplan, "floorplan.json"))?;
            let plan: TsvPlanFile = read_json(&out_file(&c, &tsv_plan, "tsv_plan.json"))?;
            let counts: Vec<usize> = plan.plans.iter().map(|t| t.count).collect();
            let placed = p
                .place(&a, &fps, &counts, p.cfg.step4_seed())
                .map_err(|e| e.at_step(4))?;
            let file = VlinksFile {
                vlinks: placed
                    .vlinks
                    .iter()
                    .map(|v| formats::vlink_to_file(&p.inst, &fps, v))
                    .collect(),
            };
            write_out(&c, "vlinks.json", &file)?;
        }
        Cmd::Legalize {
            common: c,
            assignment,
            floorplan,
            vlinks,
            no_svg,
        } => {
            let p = pipeline_for(&c)?;
            let af: AssignmentFile = read_json(&out_file(&c, &assignment, "assignment.json"))?;
            let a = formats::assignment_from_file(&p.inst, &af.assignment)?;
            let fps = load_floorplans(&p.inst, &out_file(&c, &floorplan, "floorplan.json"))?;
            let vf: VlinksFile = read_json(&out_file(&c, &vlinks, "vlinks.json"))?;
            let links = vf
                .vlinks
                .iter()
                .map(|v| formats::vlink_from_file(&fps, v))
                .collect::<Result<Vec<_>>>()?;
            let mut counts = vec![0; fps.len().saturating_sub(1)];
            for v in &links {
                counts[v.boundary] += 1;
            }
            let legal = p.legalize(&a, &fps, &links, &counts).map_err(|e| e.at_step(5))?;
            let sol = Solution {
                assignment: a,
                floorplans: legal.floorplans,
                vlinks: legal.vlinks,
            };
            write_out(&c, "solution.json", &formats::solution_to_file(&p.inst, &sol))?;
            if !no_svg {
                write_svgs(&p.inst, &sol, &c.out)?;
            }
        }
        Cmd::Eval { common: c, solution } => {
            let p = pipeline_for(&c)?;
            let file: SolutionFile = read_json(&solution)?;
            let (sol, e) = pipeline::evaluate_file(&p.inst, &file, &p.cfg.weights)?;
            let net = net_route::build_network(&sol.floorplans, &sol.vlinks);
            let traffic = formats::traffic_to_file(&p.inst, &net, &e.traffic, &e.metrics);
            write_out(&c, "traffic.json", &traffic)?;
            println!("total cost {:.6}", e.metrics.cost.total);
        }
        Cmd::Run {
            common: c,
            steps,
            no_svg,
        } => {
            let inst = Instance::load_dir(&c.instance)?;
            let mut cfg = config(&c)?;
            if let Some(s) = steps {
                cfg.steps = s;
            }
            let p = Pipeline::new(&inst, cfg)?;
            let report = p.run()?;
            write_out(&c, "report.json", &report)?;
            if let (Some(sol), false) = (&report.solution, no_svg) {
                write_svgs(&p.inst, sol, &c.out)?;
            }
            if let Some(m) = &report.metrics {
                println!(
                    "total cost {:.6}  area {:.3} mm2  bw x distance {:.3}",
                    m.cost.total, m.total_area, m.bw_times_distance
                );
            }
        }
        Cmd::Baseline {
            common: c,
            max_components,
            max_grid_cells,
            max_vcands,
        } => {
            let p = pipeline_for(&c)?;
            let limits = ExactLimits {
                components: max_components,
                grid_cells: max_grid_cells,
                vcands: max_vcands,
                ..ExactLimits::default()
            };
            let r = exact_baseline::solve_exact(&p.inst, &p.cfg.weights, &limits, p.cfg.require_every_layer)?;
            let file = ExactSolutionFile {
                solution: formats::solution_to_file(&p.inst, &r.solution),
                metrics: &r.metrics,
                configurations: r.configurations,
                feasible_configurations: r.feasible,
            };
            write_out(&c, "exact_solution.json", &file)?;
            println!(
                "optimum {:.6} over {} configurations",
                r.metrics.cost.total, r.configurations
            );
        }
        Cmd::Render { common: c, solution } => {
            let p = pipeline_for(&c)?;
            let file: SolutionFile = read_json(&solution)?;
            let sol = formats::solution_from_file(&p.inst, &file)?;
            write_svgs(&p.inst, &sol, &c.out)?;
            println!("wrote {} SVG files to {}", sol.floorplans.len(), c.out.display());
        }
        Cmd::Generate { name, out, uniform } => {
            let names: Vec<&str> = if name == "all" {
                corpus::BUILTIN.to_vec()
            } else {
                vec![name.as_str()]
            };
            for n in names {
                let inst = corpus::builtin(n)
                    .ok_or_else(|| Error::Config(format!("unknown corpus instance `{n}`")))??;
                let inst = if uniform { corpus::uniform_like(&inst)? } else { inst };
                let dir = out.join(n);
                inst.write_dir(&dir)?;
                println!("wrote {}", dir.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
