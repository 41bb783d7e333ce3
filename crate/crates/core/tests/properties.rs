// SPDX-License-Identifier: Apache-2.0

mod common;

use noc3d::anneal::{anneal, SaParams};
use noc3d::area_kernel::{self, CellDemand};
use noc3d::error::Violation;
use noc3d::exact_baseline::{enumeration_size, solve_exact, ExactLimits};
use noc3d::floorplan_sa::{floorplan_layer, legalize, rd_distance, STEP2_DEFAULT};
use noc3d::formats::{solution_from_file, solution_to_file};
use noc3d::layer_assign::{assign_layers, assign_layers_exhaustive, AssignOptions};
use noc3d::model::{read_json, validate_instance, Flow, Instance, ObjectiveWeights, RouterKind, Solution};
use noc3d::net_route::{build_network, route_all};
use noc3d::objective::{evaluate, step1_cost};
use noc3d::vlink_sa::{candidate_links, place_vlinks, place_vlinks_exhaustive, STEP4_DEFAULT};
use noc3d::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn demand_strategy() -> impl Strategy<Value = CellDemand> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.5f64..150.0], r * c).prop_map(move |mut d| {
            if d.iter().all(|&a| a == 0.0) {
                d[0] = 1.0;
            }
            CellDemand::new(r, c, d)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernel_covers_demand(d in demand_strategy()) {
        let lp = area_kernel::repair(&d, &area_kernel::min_area_lp(&d, area_kernel::DEFAULT_TANGENTS).unwrap());
        let ex = area_kernel::solve(&d).unwrap();
        let tol = 1e-7 * d.total();
        prop_assert!(lp.is_feasible(&d, tol));
        prop_assert!(ex.is_feasible(&d, tol));
        prop_assert!(ex.area >= d.total() * (1.0 - 1e-9));
        prop_assert!(ex.area <= lp.area * (1.0 + 1e-6));
        let empty_cols = (0..d.cols).filter(|&c| (0..d.rows).all(|r| d.get(r, c) == 0.0));
        for c in empty_cols {
            prop_assert_eq!(ex.col_widths[c], 0.0);
        }
    }

    #[test]
    fn anneal_returns_best_visited(seed in any::<u64>(), start in -50i64..50) {
        let p = SaParams::new(5.0, 300, 0.95, seed);
        let f = |x: &i64| ((x - 7) * (x - 7)) as f64;
        let step = |x: &i64, r: &mut noc3d::anneal::SaRng| x + if r.random_bool(0.5) { 1 } else { -1 };
        let a = anneal(start, step, f, &p).unwrap();
        let b = anneal(start, step, f, &p).unwrap();
        prop_assert_eq!(a.best_state, b.best_state);
        prop_assert!(a.best_cost <= f(&start));
        prop_assert_eq!(a.best_cost, f(&a.best_state));
        prop_assert!(a.cost_trace.iter().all(|&c| c >= a.best_cost));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn assignment_matches_enumeration(seed in any::<u64>()) {
        let inst = common::random_instance(&mut rng(seed), 9, 3, 0);
        let opts = AssignOptions::default();
        let a = assign_layers(&inst, &opts).unwrap();
        let e = assign_layers_exhaustive(&inst, &opts).unwrap();
        let w = opts.weights;
        let ca = step1_cost(&inst, &a.layer_of, w.area, w.power, w.perf);
        let ce = step1_cost(&inst, &e.layer_of, w.area, w.power, w.perf);
        prop_assert!((ca - ce).abs() <= 1e-9 * ce.max(1.0));
        for c in 0..inst.num_components() {
            prop_assert!(inst.ppa(c, a.layer_of[c]).is_some());
        }
    }

    #[test]
    fn step2_is_a_permutation(seed in any::<u64>(), n in 1usize..9) {
        let inst = common::random_cpu_instance(&mut rng(seed), n.max(2), 1, 6);
        let members: Vec<usize> = (0..inst.num_components()).collect();
        let sa = STEP2_DEFAULT.with_seed(seed);
        let out = floorplan_layer(&inst, 0, &members, &ObjectiveWeights::default(), &sa, None).unwrap();
        let mut placed: Vec<usize> = out.floorplan.cells.iter().flatten().copied().collect();
        placed.sort_unstable();
        prop_assert_eq!(placed, members);
        prop_assert!(out.sa_cost <= out.initial_cost);
    }

    #[test]
    fn legalize_only_grows_area(seed in any::<u64>()) {
        let mut r = rng(seed);
        let layers = r.random_range(2..=3);
        let n = r.random_range(layers..=9);
        let inst = common::random_cpu_instance(&mut r, n, layers, 8);
        let s = common::random_solution(&mut r, &inst);
        let legal = legalize(&inst, &s.floorplans, &s.vlinks, false).unwrap();
        for (before, after) in s.floorplans.iter().zip(&legal) {
            prop_assert_eq!(&before.cells, &after.cells);
            prop_assert!(after.area() >= before.area() * (1.0 - 1e-9));
        }
        for v in &s.vlinks {
            prop_assert!(legal[v.boundary].router_kinds[v.lower_cell].connects_up());
            prop_assert!(legal[v.boundary + 1].router_kinds[v.upper_cell].connects_down());
        }
        let koz: u32 = legal.iter().flat_map(|f| f.koz.iter()).sum();
        prop_assert_eq!(koz as usize, s.vlinks.len());
        let again = legalize(&inst, &legal, &s.vlinks, false).unwrap();
        prop_assert_eq!(again, legal);
    }

    #[test]
    fn routing_accounts_every_flow(seed in any::<u64>()) {
        let mut r = rng(seed);
        let layers = r.random_range(1..=3);
        let n = r.random_range(layers.max(2)..=10);
        let inst = common::random_cpu_instance(&mut r, n, layers, 10);
        let s = common::random_solution(&mut r, &inst);
        let net = build_network(&s.floorplans, &s.vlinks);
        let t = route_all(&net, &inst).unwrap();
        let hops: f64 = inst.flows().iter().zip(&t.paths).map(|(f, p)| f.bandwidth * (p.len() - 1) as f64).sum();
        prop_assert!((hops - t.bw_times_hops).abs() <= 1e-9 * hops.max(1.0));
        prop_assert!((t.link_loads.iter().sum::<f64>() - hops).abs() <= 1e-9 * hops.max(1.0));
        prop_assert!(t.link_loads.iter().all(|&l| l >= 0.0));
        let over: f64 = t.link_loads.iter().map(|&l| (l - inst.tech.link_capacity).max(0.0)).sum();
        prop_assert!((over - t.peak_penalty).abs() <= 1e-9 * over.max(1.0));
    }

    #[test]
    fn solution_file_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let layers = r.random_range(1..=3);
        let n = r.random_range(layers.max(2)..=8);
        let inst = common::random_cpu_instance(&mut r, n, layers, 6);
        let s = common::random_solution(&mut r, &inst);
        let legal = legalize(&inst, &s.floorplans, &s.vlinks, false).unwrap();
        let sol = Solution { assignment: s.assignment, floorplans: legal, vlinks: s.vlinks };
        let file = solution_to_file(&inst, &sol);
        let json = serde_json::to_string(&file).unwrap();
        let back = solution_from_file(&inst, &serde_json::from_str(&json).unwrap()).unwrap();
        prop_assert_eq!(&back, &sol);
        let w = ObjectiveWeights::default();
        prop_assert_eq!(evaluate(&inst, &back, &w).unwrap().metrics, evaluate(&inst, &sol, &w).unwrap().metrics);
    }

    #[test]
    fn instance_round_trip(seed in any::<u64>()) {
        let inst = common::random_instance(&mut rng(seed), 8, 3, 10);
        let dir = tempfile::tempdir().unwrap();
        inst.write_dir(dir.path()).unwrap();
        let back = Instance::load_dir(dir.path()).unwrap();
        prop_assert_eq!(&back.graph, &inst.graph);
        prop_assert_eq!(&back.ppa, &inst.ppa);
        prop_assert_eq!(&back.tech, &inst.tech);
        let raw: serde_json::Value = read_json(&dir.path().join("coregraph.json")).unwrap();
        prop_assert_eq!(raw, serde_json::to_value(&inst.graph).unwrap());
    }

    #[test]
    fn validation_rejects_mutations(seed in any::<u64>(), which in 0usize..4) {
        let inst = common::random_cpu_instance(&mut rng(seed), 4, 2, 3);
        let mut g = inst.graph.clone();
        let first = g.components[0].id.clone();
        match which {
            0 => g.flows.push(Flow { src: first.clone(), dst: "ghost".into(), bandwidth: 1.0 }),
            1 => g.flows.push(Flow { src: first.clone(), dst: g.components[1].id.clone(), bandwidth: 0.0 }),
            2 => g.flows.push(Flow { src: first.clone(), dst: first.clone(), bandwidth: 1.0 }),
            _ => g.components.push(g.components[0].clone()),
        }
        match validate_instance(g, inst.ppa.clone(), inst.tech.clone()) {
            Err(Error::Validation(v)) => {
                let expected = match which {
                    0 => matches!(v[0], Violation::UnknownComponent { .. }),
                    1 => matches!(v[0], Violation::NegativeBandwidth { .. }),
                    2 => matches!(v[0], Violation::SelfLoop { .. }),
                    _ => matches!(v[0], Violation::DuplicateComponent(_)),
                };
                prop_assert!(expected, "{:?}", v);
            }
            other => prop_assert!(false, "accepted mutation {which}: {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn vlink_sets_respect_rd_and_counts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=7);
        let inst = common::random_cpu_instance(&mut r, n, 2, 6);
        let s = common::random_solution(&mut r, &inst);
        let rd = r.random_range(2.0..15.0);
        let Ok(cands) = candidate_links(&s.floorplans, 0, rd) else { return Ok(()) };
        for c in &cands {
            prop_assert!(c.rd_length <= rd + 1e-9);
            prop_assert!((c.rd_length - rd_distance(&s.floorplans[0], c.lower_cell, &s.floorplans[1], c.upper_cell)).abs() < 1e-12);
        }
        let k = r.random_range(1..=noc3d::vlink_sa::max_links(&cands).min(2));
        let w = ObjectiveWeights::default();
        let sa = STEP4_DEFAULT.with_seed(seed);
        let placed = place_vlinks(&inst, &s.assignment, &s.floorplans, std::slice::from_ref(&cands), &[k], &w, &sa).unwrap();
        prop_assert_eq!(placed.vlinks.len(), k);
        let (_, best) = place_vlinks_exhaustive(&inst, &s.floorplans, std::slice::from_ref(&cands), &[k], &w).unwrap();
        prop_assert!(best <= placed.cost + 1e-9);
        // nested candidate sets: more RD never hurts the optimum
        let wide = candidate_links(&s.floorplans, 0, rd + 5.0).unwrap();
        let (_, wide_best) = place_vlinks_exhaustive(&inst, &s.floorplans, &[wide], &[k], &w).unwrap();
        prop_assert!(wide_best <= best + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_counts_match_closed_form(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=4);
        let layers = r.random_range(1..=2);
        let inst = common::random_cpu_instance(&mut r, n.max(2), layers, 3);
        let res = solve_exact(&inst, &ObjectiveWeights::default(), &ExactLimits::default(), true).unwrap();
        prop_assert_eq!(res.configurations, enumeration_size(&inst, true));
        prop_assert!(res.feasible >= 1 && res.feasible <= res.configurations);
        for v in &res.solution.vlinks {
            prop_assert!(v.rd_length <= inst.tech.rd_max_length + 1e-9);
        }
        let again = evaluate(&inst, &res.solution, &ObjectiveWeights::default()).unwrap();
        prop_assert_eq!(again.metrics, res.metrics);
    }
}

#[test]
fn upward_router_carries_no_koz() {
    let inst = common::random_cpu_instance(&mut rng(5), 2, 2, 1);
    let s = common::random_solution(&mut rng(6), &inst);
    let legal = legalize(&inst, &s.floorplans, &s.vlinks, false).unwrap();
    let v = s.vlinks[0];
    assert_eq!(legal[0].router_kinds[v.lower_cell], RouterKind::Up);
    assert_eq!(legal[0].koz.iter().sum::<u32>(), 0);
    assert_eq!(legal[1].koz.iter().sum::<u32>(), 1);
}
