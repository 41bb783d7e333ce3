// SPDX-License-Identifier: Apache-2.0

use noc3d::corpus;
use noc3d::model::ObjectiveWeights;
use noc3d::pipeline::{evaluate_file, Pipeline, PipelineConfig};
use noc3d::Error;

fn cfg(seed: u64) -> PipelineConfig {
    PipelineConfig {
        seed,
        ..PipelineConfig::default()
    }
}

#[test]
fn report_reevaluates_exactly() {
    for inst in [corpus::tiny_soc().unwrap(), corpus::small_vsoc().unwrap(), corpus::vopd().unwrap()] {
        let report = Pipeline::new(&inst, cfg(3)).unwrap().run().unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: noc3d::formats::SolutionFile = serde_json::from_str(&json).unwrap();
        let (_, e) = evaluate_file(&inst, &back, &ObjectiveWeights::default()).unwrap();
        assert_eq!(Some(e.metrics), report.metrics);
    }
}

#[test]
fn reports_are_deterministic() {
    let inst = corpus::small_vsoc().unwrap();
    let a = Pipeline::new(&inst, cfg(9)).unwrap().run().unwrap();
    let b = Pipeline::new(&inst, cfg(9)).unwrap().run().unwrap();
    assert_eq!(a.deterministic_json(), b.deterministic_json());
    assert!(!a.deterministic_json().contains("timing_ms"));
}

#[test]
fn partial_runs_stop_early() {
    let inst = corpus::tiny_soc().unwrap();
    let r = Pipeline::new(
        &inst,
        PipelineConfig {
            steps: 2,
            ..cfg(1)
        },
    )
    .unwrap()
    .run()
    .unwrap();
    assert_eq!(r.steps_run, 2);
    assert!(r.floorplans.is_some());
    assert!(r.vlinks.is_none() && r.metrics.is_none());
}

#[test]
fn every_layer_used_and_links_within_rd() {
    let inst = corpus::large_vsoc().unwrap();
    let r = Pipeline::new(&inst, cfg(2)).unwrap().run().unwrap();
    let sol = r.solution.unwrap();
    for l in 0..inst.num_layers() {
        assert!(!sol.assignment.members(l).is_empty());
    }
    assert_eq!(r.rd_violation, Some(false));
    for v in &sol.vlinks {
        assert!(v.rd_length <= inst.tech.rd_max_length + 1e-9);
    }
    let adc = inst.component_index("adc0").unwrap();
    assert_eq!(inst.tech.layers[sol.assignment.layer_of[adc]].node, "45nm");
}

#[test]
fn fixed_mesh_aligns_layers() {
    let inst = corpus::small_vsoc().unwrap();
    let r = Pipeline::new(
        &inst,
        PipelineConfig {
            fixed_mesh: Some((3, 3)),
            no_rd: true,
            ..cfg(1)
        },
    )
    .unwrap()
    .run()
    .unwrap();
    assert!(r.aligned_layers);
    let sol = r.solution.unwrap();
    assert_eq!(sol.floorplans[0].col_widths, sol.floorplans[1].col_widths);
    assert_eq!(sol.floorplans[0].row_heights, sol.floorplans[1].row_heights);
    assert!(sol.vlinks.iter().all(|v| v.rd_length == 0.0 && v.lower_cell == v.upper_cell));
}

#[test]
fn too_many_fixed_links_is_infeasible() {
    let inst = corpus::small_vsoc().unwrap();
    let err = Pipeline::new(
        &inst,
        PipelineConfig {
            tsv_counts: Some(vec![10]),
            ..cfg(1)
        },
    )
    .unwrap()
    .run()
    .unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
}

#[test]
fn bad_config_rejected() {
    let inst = corpus::tiny_soc().unwrap();
    let bad = PipelineConfig {
        steps: 7,
        ..cfg(1)
    };
    assert!(matches!(Pipeline::new(&inst, bad), Err(Error::Config(_))));
}
