//! Clustering of virtual sheep into batches and batch-to-robot assignment.
//!
//! Sheep within `linkage_distance` of each other chain into one batch
//! (single-linkage connected components), so a batch is a spatially
//! contiguous blob of frontier mass. Robots then pick the batch maximising
//! a weighted trade-off between batch gain and travel distance:
//!
//! ```text
//! score(b) = gain_weight * weight(b) / max_weight
//!          - distance_weight * dist(robot, centroid(b)) / max_dist(robot)
//! ```
//!
//! Both terms are normalised per decision, which makes the argmax invariant
//! under any uniform rescaling of weights or distances. Ties break toward
//! the first batch in the canonical ordering (heaviest first, then
//! row-major centroid), so assignment is deterministic.

use crate::geometry::{WorldPoint, WorldVec};
use crate::swarm::SwarmState;
use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A cluster of virtual sheep.
#[derive(Clone, PartialEq, Debug)]
pub struct SwarmBatch {
    /// Unweighted arithmetic mean of member positions.
    pub centroid: WorldPoint,
    /// Sum of member weights.
    pub total_weight: u64,
    /// Indices into the swarm's sheep list, ascending.
    pub members: Vec<usize>,
}

/// Tuning of the batch-to-robot assignment rule.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignmentParams {
    /// Weight of the normalised batch-gain term.
    pub gain_weight: f64,
    /// Weight of the normalised travel-distance term.
    pub distance_weight: f64,
    /// When enabled and there are at least as many batches as robots, a
    /// chosen batch is removed from the menus of later robots, forcing
    /// distinct targets. Disabled, every robot scores the full menu
    /// independently. Defaults on: with a shared menu the weight term
    /// dominates the distance penalty, so whole teams converge on one
    /// batch and explore in lockstep.
    pub exclusive: bool,
}

impl Default for AssignmentParams {
    fn default() -> Self {
        AssignmentParams {
            gain_weight: 1.0,
            distance_weight: 0.3,
            exclusive: true,
        }
    }
}

#[derive(Error, Debug, PartialEq)]
pub enum AssignError {
    #[error("cannot assign batches: the batch list is empty")]
    NoBatches,
}

/// How sheep are grouped into batches.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchingMethod {
    /// Single-linkage connected components at the linkage distance.
    Linkage,
    /// Lloyd iterations from deterministic seeds; for comparison runs.
    KMeans,
}

/// Group sheep into single-linkage clusters: two sheep share a batch when
/// they are connected by a chain of pairwise distances of at most
/// `linkage_distance`. Batches come back heaviest-first, ties broken by
/// row-major centroid order.
pub fn batch_swarm(state: &SwarmState, linkage_distance: f64) -> Vec<SwarmBatch> {
    let n = state.sheep.len();
    // Connected components by breadth-first traversal over the threshold
    // graph; the union-find formulation is kept to the tests as an oracle.
    let mut component = vec![usize::MAX; n];
    let mut components = 0usize;
    let mut queue = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = components;
        components += 1;
        component[start] = id;
        queue.push(start);
        while let Some(i) = queue.pop() {
            for j in 0..n {
                if component[j] == usize::MAX
                    && (state.sheep[i].position - state.sheep[j].position).norm()
                        <= linkage_distance
                {
                    component[j] = id;
                    queue.push(j);
                }
            }
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); components];
    for (i, c) in component.iter().enumerate() {
        members[*c].push(i);
    }
    finish_batches(state, members)
}

/// Group sheep by Lloyd's algorithm with `k` deterministic seeds (evenly
/// strided over the sheep list). Empty clusters are dropped. Provided as a
/// configuration switch for comparing against linkage batching.
pub fn batch_swarm_kmeans(state: &SwarmState, k: usize, max_iterations: usize) -> Vec<SwarmBatch> {
    let n = state.sheep.len();
    if n == 0 {
        return Vec::new();
    }
    let k = k.clamp(1, n);
    let mut centers: Vec<WorldPoint> = (0..k)
        .map(|i| state.sheep[i * n / k].position)
        .collect();
    let mut assignment = vec![0usize; n];
    for _ in 0..max_iterations {
        let mut changed = false;
        for (i, sheep) in state.sheep.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = (sheep.position - center).norm();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        let mut sums: Vec<(WorldVec, usize)> = vec![(Vector2::zeros(), 0); k];
        for (i, sheep) in state.sheep.iter().enumerate() {
            sums[assignment[i]].0 += sheep.position.coords;
            sums[assignment[i]].1 += 1;
        }
        for (c, (sum, count)) in sums.iter().enumerate() {
            if *count > 0 {
                centers[c] = Point2::from(sum / *count as f64);
            }
        }
        if !changed {
            break;
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, c) in assignment.iter().enumerate() {
        members[*c].push(i);
    }
    members.retain(|m| !m.is_empty());
    finish_batches(state, members)
}

/// Build batch records from member lists and sort them into the canonical
/// order: heaviest first, then row-major centroid (y before x).
fn finish_batches(state: &SwarmState, member_lists: Vec<Vec<usize>>) -> Vec<SwarmBatch> {
    let mut batches: Vec<SwarmBatch> = member_lists
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|members| {
            let mut sum = Vector2::zeros();
            let mut total_weight = 0u64;
            for &i in &members {
                sum += state.sheep[i].position.coords;
                total_weight += state.sheep[i].weight as u64;
            }
            SwarmBatch {
                centroid: Point2::from(sum / members.len() as f64),
                total_weight,
                members,
            }
        })
        .collect();
    batches.sort_by(|a, b| {
        b.total_weight
            .cmp(&a.total_weight)
            .then(a.centroid.y.total_cmp(&b.centroid.y))
            .then(a.centroid.x.total_cmp(&b.centroid.x))
    });
    batches
}

/// Pick a batch for every robot. Returns one batch index per robot, in
/// robot order.
///
/// Each robot maximises the normalised gain/distance trade-off described
/// at the module level; `max_dist` normalisation is per robot. With
/// `exclusive` enabled and at least as many batches as robots, robots pick
/// in index order and remove their choice from the shared menu.
pub fn assign_batches(
    batches: &[SwarmBatch],
    robot_poses: &[WorldPoint],
    params: &AssignmentParams,
) -> Result<Vec<usize>, AssignError> {
    if batches.is_empty() {
        return Err(AssignError::NoBatches);
    }
    let max_weight = batches.iter().map(|b| b.total_weight).max().unwrap_or(0);
    let exclusive = params.exclusive && batches.len() >= robot_poses.len();
    let mut taken = vec![false; batches.len()];
    let mut out = Vec::with_capacity(robot_poses.len());
    for robot in robot_poses {
        let menu: Vec<usize> = (0..batches.len()).filter(|b| !taken[*b]).collect();
        let max_dist = menu
            .iter()
            .map(|&b| (batches[b].centroid - robot).norm())
            .fold(0.0_f64, f64::max);
        let mut best: Option<(usize, f64)> = None;
        for &b in &menu {
            let gain = if max_weight == 0 {
                0.0
            } else {
                batches[b].total_weight as f64 / max_weight as f64
            };
            let dist = (batches[b].centroid - robot).norm();
            let dist_term = if max_dist > 0.0 { dist / max_dist } else { 0.0 };
            let score = params.gain_weight * gain - params.distance_weight * dist_term;
            // Strictly-greater keeps the earliest batch on ties, and the
            // canonical batch order makes that tie-break deterministic.
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((b, score));
            }
        }
        let (choice, _) = best.expect("menu is non-empty");
        if exclusive {
            taken[choice] = true;
        }
        out.push(choice);
    }
    Ok(out)
}
