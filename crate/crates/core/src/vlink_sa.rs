// SPDX-License-Identifier: Apache-2.0

//! Step 4: choice of the router pairs that receive vertical links.
//!
//! Candidates of a boundary are all (lower router, upper router) pairs whose
//! planar Manhattan distance is within the maximum redistribution length.
//! A router has one up and one down port, so the links chosen on a boundary
//! form a matching. The SA state holds one such matching per boundary with
//! the size fixed by Step 3; a move replaces one link of a random boundary
//! by a compatible unselected candidate. The cost routes all flows over the
//! full 3D network.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::anneal::{anneal, SaParams, SaRng};
use crate::error::{Error, Result};
use crate::floorplan_sa::rd_distance;
use crate::matching::max_matching;
use crate::model::{Instance, LayerAssignment, LayerFloorplan, ObjectiveWeights, VerticalLink};
use crate::net_route::{build_network, route_all};
use crate::tsv_count::boundary_endpoints;

pub const STEP4_DEFAULT: SaParams = SaParams {
    initial_temp: 100.0,
    iterations: 50,
    cooling: 0.97,
    seed: 0,
};

const RD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub lower_cell: usize,
    pub upper_cell: usize,
    pub rd_length: f64,
}

impl Candidate {
    pub fn link(&self, boundary: usize) -> VerticalLink {
        VerticalLink {
            boundary,
            lower_cell: self.lower_cell,
            upper_cell: self.upper_cell,
            rd_length: self.rd_length,
        }
    }

    fn conflicts(&self, other: &Candidate) -> bool {
        self.lower_cell == other.lower_cell || self.upper_cell == other.upper_cell
    }
}

/// Distances of all router pairs across `boundary`, ascending.
fn pair_distances(fps: &[LayerFloorplan], boundary: usize) -> Vec<Candidate> {
    let (lo, up) = (&fps[boundary], &fps[boundary + 1]);
    let mut out = Vec::new();
    for (lc, _) in lo.occupied() {
        for (uc, _) in up.occupied() {
            out.push(Candidate {
                lower_cell: lc,
                upper_cell: uc,
                rd_length: rd_distance(lo, lc, up, uc),
            });
        }
    }
    out
}

/// All router pairs across `boundary` with distance ≤ `rd_max`, ordered by
/// (lower cell, upper cell).
pub fn candidate_links(fps: &[LayerFloorplan], boundary: usize, rd_max: f64) -> Result<Vec<Candidate>> {
    let all = pair_distances(fps, boundary);
    let out: Vec<Candidate> = all
        .iter()
        .filter(|c| c.rd_length <= rd_max + RD_EPS)
        .copied()
        .collect();
    if out.is_empty() {
        let hint = match min_rd_for(fps, boundary, 1) {
            Some(r) => format!("maximum RD length {rd_max} mm is too small, at least {r:.4} mm is needed"),
            None => "one of the adjacent layers has no routers".to_string(),
        };
        return Err(Error::NoCandidates { boundary, hint });
    }
    Ok(out)
}

/// Smallest RD length under which `count` vertical links fit on `boundary`.
pub fn min_rd_for(fps: &[LayerFloorplan], boundary: usize, count: usize) -> Option<f64> {
    let mut all = pair_distances(fps, boundary);
    all.sort_by(|a, b| a.rd_length.total_cmp(&b.rd_length));
    let mut lengths: Vec<f64> = all.iter().map(|c| c.rd_length).collect();
    lengths.dedup();
    lengths
        .into_iter()
        .find(|&r| max_links(&all.iter().filter(|c| c.rd_length <= r).copied().collect::<Vec<_>>()) >= count)
}

/// Size of a maximum matching among `cands`.
pub fn max_links(cands: &[Candidate]) -> usize {
    max_matching_of(cands).len()
}

/// Indices of a maximum matching among `cands`.
fn max_matching_of(cands: &[Candidate]) -> Vec<usize> {
    let lowers = dedup_sorted(cands.iter().map(|c| c.lower_cell));
    let uppers = dedup_sorted(cands.iter().map(|c| c.upper_cell));
    let adj: Vec<Vec<usize>> = lowers
        .iter()
        .map(|&l| {
            cands
                .iter()
                .filter(|c| c.lower_cell == l)
                .map(|c| uppers.binary_search(&c.upper_cell).unwrap())
                .collect()
        })
        .collect();
    let m = max_matching(&adj, uppers.len());
    let mut out: Vec<usize> = m
        .iter()
        .enumerate()
        .filter_map(|(li, u)| {
            u.map(|u| {
                cands
                    .iter()
                    .position(|c| c.lower_cell == lowers[li] && c.upper_cell == uppers[u])
                    .unwrap()
            })
        })
        .collect();
    out.sort_unstable();
    out
}

fn dedup_sorted(it: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = it.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Greedy start: candidates nearest the bandwidth-weighted centroid of the
/// crossing traffic, skipping conflicts; completed from a maximum matching
/// if the greedy pass falls short.
fn initial_selection(
    cands: &[Candidate],
    count: usize,
    centroid: Option<(f64, f64)>,
    lower: &LayerFloorplan,
    upper: &LayerFloorplan,
) -> Vec<usize> {
    let (cx, cy) = centroid.unwrap_or((0.0, 0.0));
    let dist = |c: &Candidate| {
        let (x0, y0) = lower.center(c.lower_cell);
        let (x1, y1) = upper.center(c.upper_cell);
        ((x0 + x1) / 2.0 - cx).abs() + ((y0 + y1) / 2.0 - cy).abs()
    };
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| dist(&cands[a]).total_cmp(&dist(&cands[b])).then(a.cmp(&b)));
    let mut picked: Vec<usize> = Vec::with_capacity(count);
    for i in order {
        if picked.len() == count {
            break;
        }
        if picked.iter().all(|&p| !cands[p].conflicts(&cands[i])) {
            picked.push(i);
        }
    }
    if picked.len() < count {
        picked = max_matching_of(cands);
        picked.truncate(count);
    }
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone)]
pub struct PlacementResult {
    pub vlinks: Vec<VerticalLink>,
    pub cost: f64,
    pub initial_cost: f64,
    pub cost_trace: Vec<f64>,
}

/// Communication cost `w_util·bw×distance + w_peak·peak` of a link set.
pub fn link_cost(inst: &Instance, fps: &[LayerFloorplan], vlinks: &[VerticalLink], w: &ObjectiveWeights) -> Result<f64> {
    let net = build_network(fps, vlinks);
    let t = route_all(&net, inst)?;
    Ok(w.util * t.bw_times_distance + w.peak * t.peak_penalty)
}

fn to_links(cands: &[Vec<Candidate>], state: &[Vec<usize>]) -> Vec<VerticalLink> {
    state
        .iter()
        .enumerate()
        .flat_map(|(b, sel)| sel.iter().map(move |&i| cands[b][i].link(b)))
        .collect()
}

/// Anneals the vertical-link selection. `cands[b]` are the candidates of
/// boundary `b` and `counts[b]` the number of links to place there.
pub fn place_vlinks(
    inst: &Instance,
    assignment: &LayerAssignment,
    fps: &[LayerFloorplan],
    cands: &[Vec<Candidate>],
    counts: &[usize],
    w: &ObjectiveWeights,
    sa: &SaParams,
) -> Result<PlacementResult> {
    let boundaries = fps.len().saturating_sub(1);
    if cands.len() != boundaries || counts.len() != boundaries {
        return Err(Error::InvalidParams(format!(
            "{boundaries} boundaries but {} candidate sets and {} counts",
            cands.len(),
            counts.len()
        )));
    }
    let mut initial = Vec::with_capacity(boundaries);
    for b in 0..boundaries {
        let available = max_links(&cands[b]);
        if counts[b] > available {
            return Err(Error::InsufficientCandidates {
                boundary: b,
                needed: counts[b],
                available,
            });
        }
        let eps = boundary_endpoints(inst, assignment, fps, b)?;
        let total: f64 = eps.iter().map(|e| e.bandwidth).sum();
        let centroid = (total > 0.0).then(|| {
            (
                eps.iter().map(|e| e.bandwidth * e.x).sum::<f64>() / total,
                eps.iter().map(|e| e.bandwidth * e.y).sum::<f64>() / total,
            )
        });
        initial.push(initial_selection(&cands[b], counts[b], centroid, &fps[b], &fps[b + 1]));
    }

    let mut failure = None;
    let mut cost = |state: &Vec<Vec<usize>>| -> f64 {
        match link_cost(inst, fps, &to_links(cands, state), w) {
            Ok(c) => c,
            Err(Error::Unreachable { .. }) => f64::INFINITY,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let movable: Vec<usize> = (0..boundaries)
        .filter(|&b| counts[b] > 0 && counts[b] < cands[b].len())
        .collect();
    let neighbor = |state: &Vec<Vec<usize>>, rng: &mut SaRng| -> Vec<Vec<usize>> {
        if movable.is_empty() {
            return state.clone();
        }
        let b = movable[rng.random_range(0..movable.len())];
        let sel = &state[b];
        let out = rng.random_range(0..sel.len());
        let keep: Vec<usize> = sel.iter().enumerate().filter(|&(k, _)| k != out).map(|(_, &i)| i).collect();
        let options: Vec<usize> = (0..cands[b].len())
            .filter(|i| !sel.contains(i))
            .filter(|&i| keep.iter().all(|&k| !cands[b][k].conflicts(&cands[b][i])))
            .collect();
        if options.is_empty() {
            return state.clone();
        }
        let mut next = state.clone();
        let mut new_sel = keep;
        new_sel.push(options[rng.random_range(0..options.len())]);
        new_sel.sort_unstable();
        next[b] = new_sel;
        next
    };

    let initial_cost = cost(&initial);
    let result = anneal(initial, neighbor, &mut cost, sa)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let vlinks = to_links(cands, &result.best_state);
    if !result.best_cost.is_finite() {
        // surface the routing error of the best state
        link_cost(inst, fps, &vlinks, w)?;
    }
    Ok(PlacementResult {
        vlinks,
        cost: result.best_cost,
        initial_cost,
        cost_trace: result.cost_trace,
    })
}

/// All matchings of exactly `k` candidates, as sorted index lists.
pub fn matchings(cands: &[Candidate], k: usize) -> Vec<Vec<usize>> {
    fn rec(cands: &[Candidate], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..cands.len() {
            if cur.iter().all(|&j| !cands[j].conflicts(&cands[i])) {
                cur.push(i);
                rec(cands, k, i + 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(cands, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Minimum link cost over every admissible selection (test oracle for
/// small instances). Ties go to the first selection in enumeration order.
pub fn place_vlinks_exhaustive(
    inst: &Instance,
    fps: &[LayerFloorplan],
    cands: &[Vec<Candidate>],
    counts: &[usize],
    w: &ObjectiveWeights,
) -> Result<(Vec<VerticalLink>, f64)> {
    let per_boundary: Vec<Vec<Vec<usize>>> = cands
        .iter()
        .zip(counts)
        .map(|(c, &k)| matchings(c, k))
        .collect();
    if per_boundary.iter().any(Vec::is_empty) {
        return Err(Error::InsufficientCandidates {
            boundary: per_boundary.iter().position(Vec::is_empty).unwrap(),
            needed: 0,
            available: 0,
        });
    }
    let mut idx = vec![0usize; per_boundary.len()];
    let mut best: Option<(Vec<VerticalLink>, f64)> = None;
    loop {
        let state: Vec<Vec<usize>> = idx.iter().enumerate().map(|(b, &i)| per_boundary[b][i].clone()).collect();
        let links = to_links(cands, &state);
        let c = match link_cost(inst, fps, &links, w) {
            Ok(c) => c,
            Err(Error::Unreachable { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(_, b)| c < *b) {
            best = Some((links, c));
        }
        let mut b = 0;
        while b < idx.len() {
            idx[b] += 1;
            if idx[b] < per_boundary[b].len() {
                break;
            }
            idx[b] = 0;
            b += 1;
        }
        if b == idx.len() {
            break;
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{case_study_ppa, tech};
    use crate::model::{validate_instance, Component, CoreGraph, Flow};

    fn row_layer(layer: usize, comps: &[Option<usize>], w: f64) -> LayerFloorplan {
        let mut fp = LayerFloorplan::new(layer, 1, comps.len(), comps.to_vec());
        fp.col_widths = vec![w; comps.len()];
        fp.row_heights = vec![w];
        fp
    }

    fn inst(n: usize, flows: &[(usize, usize, f64)]) -> Instance {
        let components = (0..n)
            .map(|i| Component {
                id: format!("c{i}"),
                kind: "CPU".into(),
            })
            .collect();
        let flows = flows
            .iter()
            .map(|&(s, d, b)| Flow {
                src: format!("c{s}"),
                dst: format!("c{d}"),
                bandwidth: b,
            })
            .collect();
        validate_instance(CoreGraph { components, flows }, case_study_ppa(), tech(&["28nm", "28nm"])).unwrap()
    }

    #[test]
    fn candidates_respect_rd_max() {
        let fps = [row_layer(0, &[Some(0), Some(1)], 2.0), row_layer(1, &[Some(2), Some(3)], 2.0)];
        let c0 = candidate_links(&fps, 0, 0.0).unwrap();
        assert_eq!(c0.len(), 2);
        let c2 = candidate_links(&fps, 0, 2.0).unwrap();
        assert_eq!(c2.len(), 4);
        assert!(c2.iter().all(|c| c.rd_length <= 2.0));
        let offset = [row_layer(0, &[Some(0), None], 2.0), row_layer(1, &[None, Some(1)], 2.0)];
        match candidate_links(&offset, 0, 1.0) {
            Err(Error::NoCandidates { hint, .. }) => assert!(hint.contains("2.0000"), "{hint}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forced_selection_unchanged() {
        let i = inst(4, &[(0, 2, 1.0), (1, 3, 1.0)]);
        let a = LayerAssignment {
            layer_of: vec![0, 0, 1, 1],
        };
        let fps = [row_layer(0, &[Some(0), Some(1)], 2.0), row_layer(1, &[Some(2), Some(3)], 2.0)];
        let cands = vec![candidate_links(&fps, 0, 0.0).unwrap()];
        let r = place_vlinks(&i, &a, &fps, &cands, &[2], &ObjectiveWeights::default(), &STEP4_DEFAULT).unwrap();
        assert_eq!(r.vlinks.len(), 2);
        assert_eq!(r.cost, r.initial_cost);
    }

    #[test]
    fn nearer_candidate_wins() {
        // source at lower cell 0; upper routers at cells 0 and 2
        let i = inst(4, &[(0, 2, 10.0)]);
        let a = LayerAssignment {
            layer_of: vec![0, 0, 1, 1],
        };
        let fps = [
            row_layer(0, &[Some(0), Some(1), None], 2.0),
            row_layer(1, &[Some(2), Some(3), None], 2.0),
        ];
        let cands = vec![vec![
            Candidate {
                lower_cell: 0,
                upper_cell: 0,
                rd_length: 0.0,
            },
            Candidate {
                lower_cell: 1,
                upper_cell: 1,
                rd_length: 0.0,
            },
        ]];
        let w = ObjectiveWeights::default();
        let sa = SaParams::new(100.0, 50, 0.97, 4);
        let r = place_vlinks(&i, &a, &fps, &cands, &[1], &w, &sa).unwrap();
        let (best, cost) = place_vlinks_exhaustive(&i, &fps, &cands, &[1], &w).unwrap();
        assert_eq!(r.vlinks, best);
        assert_eq!(r.vlinks[0].lower_cell, 0);
        assert_eq!(r.cost, cost);
    }

    #[test]
    fn matching_enumeration() {
        let c = |l, u| Candidate {
            lower_cell: l,
            upper_cell: u,
            rd_length: 0.0,
        };
        let cands = [c(0, 0), c(0, 1), c(1, 0), c(1, 1)];
        assert_eq!(matchings(&cands, 2), vec![vec![0, 3], vec![1, 2]]);
        assert_eq!(matchings(&cands, 1).len(), 4);
        assert_eq!(max_links(&cands), 2);
    }
}
