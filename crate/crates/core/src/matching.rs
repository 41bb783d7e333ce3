// SPDX-License-Identifier: Apache-2.0

//! Maximum bipartite matching (Kuhn's augmenting paths).

/// `adj[u]` lists the right vertices adjacent to left vertex `u`.
/// Returns `match_of_left`, exploring neighbors in the given order.
pub fn max_matching(adj: &[Vec<usize>], right_count: usize) -> Vec<Option<usize>> {
    let mut match_left = vec![None; adj.len()];
    let mut match_right: Vec<Option<usize>> = vec![None; right_count];
    for u in 0..adj.len() {
        let mut seen = vec![false; right_count];
        augment(u, adj, &mut seen, &mut match_left, &mut match_right);
    }
    match_left
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    match_left: &mut [Option<usize>],
    match_right: &mut [Option<usize>],
) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        let free = match match_right[v] {
            None => true,
            Some(w) => augment(w, adj, seen, match_left, match_right),
        };
        if free {
            match_left[u] = Some(v);
            match_right[v] = Some(u);
            return true;
        }
    }
    false
}

pub fn matching_size(adj: &[Vec<usize>], right_count: usize) -> usize {
    max_matching(adj, right_count).iter().flatten().count()
}
