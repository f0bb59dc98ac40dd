//! Virtual sheep: the frontier condensed into a weighted swarm.
//!
//! Frontier cells are spatially downsampled into "sheep" spaced at least
//! `spacing` metres apart, each weighted by the unknown area around it.
//! Between frontier refreshes the sheep drift under three forces, evaluated
//! per step with the step itself acting as velocity (no inertia):
//!
//! * a small erroneous force in a random direction, modelling estimation
//!   error;
//! * a clustering force pushing a sheep away from the centroid of its
//!   flock-mates, active only while a robot is close enough to disturb it;
//! * a predatory repulsion from every robot within detection range, with
//!   magnitude inversely proportional to distance.
//!
//! Each frontier refresh discards the estimated swarm and re-allocates from
//! scratch, so estimation error can never accumulate across refreshes.

use crate::geometry::{Cell, WorldPoint, WorldVec};
use crate::mapping::{ExplorationMap, FrontierSet, MapCell};
use nalgebra::{Point2, Vector2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Distance below which the predatory force saturates instead of blowing up.
pub const PREDATOR_EPSILON: f64 = 0.1;

/// Fallback direction for exactly coincident points, where a unit vector
/// is undefined; fixed so the degenerate case stays deterministic.
const DEGENERATE_DIRECTION: WorldVec = Vector2::new(1.0, 0.0);

/// One frontier sample: a position and the unknown-cell count it stands for.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct VirtualSheep {
    pub position: WorldPoint,
    /// Number of unknown cells in the allocation square around the sheep.
    pub weight: u32,
}

/// Tuning of sheep allocation and the force model.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmParams {
    /// Minimum distance between sheep, and the edge length of the square
    /// each sheep's weight is counted over, in metres.
    pub spacing: f64,
    /// Magnitude of the erroneous force.
    pub noise: f64,
    /// Magnitude of the clustering force.
    pub cluster_gain: f64,
    /// Numerator of the predatory force magnitude.
    pub predator_gain: f64,
    /// Range within which robots disturb sheep, in metres. Mirrors the
    /// sensor range so the swarm reacts exactly where robots perceive.
    pub detection_range: f64,
    /// Swarm estimation rate in Hz; steps advance by `1 / rate_hz`.
    pub rate_hz: u32,
}

impl Default for SwarmParams {
    fn default() -> Self {
        SwarmParams {
            spacing: 2.5,
            noise: 0.05,
            cluster_gain: 0.2,
            predator_gain: 1.0,
            detection_range: 10.0,
            rate_hz: 10,
        }
    }
}

impl SwarmParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.spacing > 0.0) {
            return Err("spacing must be positive".into());
        }
        if self.noise < 0.0 || self.cluster_gain < 0.0 || self.predator_gain < 0.0 {
            return Err("force gains must be non-negative".into());
        }
        if !(self.detection_range > 0.0) {
            return Err("detection_range must be positive".into());
        }
        if self.rate_hz == 0 {
            return Err("rate_hz must be positive".into());
        }
        Ok(())
    }
}

/// The swarm between two frontier refreshes.
#[derive(Clone, PartialEq, Debug)]
pub struct SwarmState {
    pub sheep: Vec<VirtualSheep>,
    pub params: SwarmParams,
    /// Version of the map snapshot the sheep were allocated from.
    pub source_version: u64,
    /// World extent (width, height) positions are clamped to.
    extent: (f64, f64),
    /// Half a cell, kept so clamping leaves positions strictly interior.
    margin: f64,
}

impl SwarmState {
    /// Assemble a swarm directly from sheep. Intended for harnesses and
    /// tests that need configurations unreachable through allocation;
    /// positions are clamped to `extent` during estimation steps.
    pub fn from_parts(sheep: Vec<VirtualSheep>, params: SwarmParams, extent: (f64, f64)) -> Self {
        SwarmState {
            sheep,
            params,
            source_version: 0,
            extent,
            margin: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sheep.is_empty()
    }

    pub fn positions(&self) -> Vec<WorldPoint> {
        self.sheep.iter().map(|s| s.position).collect()
    }

    fn clamp(&self, p: WorldPoint) -> WorldPoint {
        Point2::new(
            p.x.clamp(self.margin, self.extent.0 - self.margin),
            p.y.clamp(self.margin, self.extent.1 - self.margin),
        )
    }
}

/// Downsample a frontier snapshot into a fresh swarm.
///
/// Frontier cells are visited in their row-major order; a cell becomes a
/// sheep exactly when it lies at least `spacing` from every sheep accepted
/// before it (greedy thinning, deterministic by construction). Each sheep
/// is weighted by the number of unknown map cells whose centres fall in
/// the axis-aligned square of side `spacing` centred on it.
pub fn allocate_virtual_sheep(
    frontiers: &FrontierSet,
    map: &ExplorationMap,
    params: SwarmParams,
) -> SwarmState {
    let dims = map.dims();
    let res = dims.resolution;
    let mut sheep: Vec<VirtualSheep> = Vec::new();
    'cells: for cell in &frontiers.cells {
        let position = cell.center(res);
        for accepted in &sheep {
            if (position - accepted.position).norm() < params.spacing {
                continue 'cells;
            }
        }
        sheep.push(VirtualSheep {
            position,
            weight: unknown_cells_in_square(map, cell, params.spacing),
        });
    }
    SwarmState {
        sheep,
        params,
        source_version: frontiers.map_version,
        extent: dims.extent(),
        margin: res / 2.0,
    }
}

/// Unknown cells whose centres lie within the axis-aligned square of side
/// `side` centred on `cell`'s centre.
fn unknown_cells_in_square(map: &ExplorationMap, cell: &Cell, side: f64) -> u32 {
    let res = map.dims().resolution;
    let half_cells = (side / 2.0 / res).floor() as i32;
    let half = side / 2.0;
    let center = cell.center(res);
    let mut count = 0;
    for dy in -half_cells..=half_cells {
        for dx in -half_cells..=half_cells {
            let other = Cell::new(cell.x + dx, cell.y + dy);
            let c = other.center(res);
            if (c.x - center.x).abs() <= half
                && (c.y - center.y).abs() <= half
                && map.state(&other) == MapCell::Unknown
            {
                count += 1;
            }
        }
    }
    count
}

/// Advance the swarm one estimation step of length `dt` seconds.
///
/// Pure with respect to the state: returns the successor swarm, leaving
/// weights and allocation metadata untouched. Erroneous-force directions
/// are drawn from `rng` (one draw per sheep, in index order) only when the
/// noise magnitude is positive, so a noise-free configuration consumes no
/// randomness.
pub fn estimate_step(
    state: &SwarmState,
    robot_poses: &[WorldPoint],
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> SwarmState {
    debug_assert!(dt > 0.0);
    let p = state.params;
    let n = state.sheep.len();

    // Centroid of all sheep; the per-sheep flock-mate centroid is recovered
    // from it in O(1) instead of re-averaging n-1 points per sheep.
    let mut position_sum = Vector2::zeros();
    for s in &state.sheep {
        position_sum += s.position.coords;
    }

    let mut next = state.clone();
    for (i, sheep) in state.sheep.iter().enumerate() {
        let mut force = Vector2::zeros();

        // Erroneous force: fixed magnitude, random direction.
        if p.noise > 0.0 {
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            force += p.noise * Vector2::new(theta.cos(), theta.sin());
        }

        // A sheep is disturbed only while some robot is within detection
        // range; the clustering force is inactive otherwise.
        let disturbed = robot_poses
            .iter()
            .any(|r| (sheep.position - r).norm() <= p.detection_range);

        if disturbed && n > 1 {
            let others = Point2::from((position_sum - sheep.position.coords) / (n as f64 - 1.0));
            if let Some(away) = (sheep.position - others).try_normalize(1e-12) {
                force += p.cluster_gain * away;
            }
        }

        // Predatory repulsion from every robot in range, saturating near
        // contact so a coincident robot cannot produce an infinite force.
        for robot in robot_poses {
            let offset = sheep.position - robot;
            let dist = offset.norm();
            if dist > p.detection_range {
                continue;
            }
            let magnitude = p.predator_gain / dist.max(PREDATOR_EPSILON);
            let direction = offset.try_normalize(1e-12).unwrap_or(DEGENERATE_DIRECTION);
            force += magnitude * direction;
        }

        next.sheep[i].position = state.clamp(sheep.position + dt * force);
    }
    next
}
