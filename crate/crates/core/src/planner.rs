//! Grid path planning and kinematic waypoint following.
//!
//! Paths are planned over the shared exploration map with 8-connected A*.
//! Edge weights are integers in millionths of a cell step (`1_000_000`
//! straight, `1_414_214` diagonal), so path costs compare exactly — no
//! float summation order can reorder two routes. The heuristic is the
//! octile distance in the same units, which is consistent, so A* returns
//! Dijkstra-optimal costs with deterministic `(f, h, y, x)` tie-breaking.
//!
//! Rules shared by planning and the cost flood:
//!
//! * Occupied cells are never traversable. Unknown cells are traversable
//!   at `unknown_cost_factor` times the base step cost (exploration goals
//!   routinely sit in unexplored space).
//! * A diagonal move must not squeeze between blockers: both orthogonal
//!   side cells have to be traversable as well.
//! * Cells whose centre lies within `inflation_radius` of another robot
//!   are treated as blocked, except cells equally close to the planning
//!   robot itself (a robot overlapping a peer's disc must still be able
//!   to plan its way out).
//! * If the goal cell is blocked or unreachable, the plan is redirected to
//!   the nearest reachable cell within `goal_tolerance` of the goal point
//!   (ties: lower cost, then row-major).
//!
//! Waypoint following integrates a trapezoidal speed profile exactly:
//! each tick is split at the analytic phase boundaries (reach cruise
//! speed, reach the braking point, reach a waypoint), so the trajectory
//! is the closed-form profile sampled at tick ends and refining the tick
//! size does not change it. Heading changes are instantaneous; the
//! braking distance is measured along the remaining polyline.

use crate::geometry::{Cell, GridDims, WorldPoint};
use crate::mapping::{ExplorationMap, MapCell};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Cost of a straight step, in millionths of a cell step.
pub const STRAIGHT_COST: u64 = 1_000_000;
/// Cost of a diagonal step, in the same units (≈ √2 · straight).
pub const DIAGONAL_COST: u64 = 1_414_214;

const UNREACHED: u64 = u64::MAX;
const NO_PARENT: usize = usize::MAX;

/// Tuning of the path planner.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Multiplier on the cost of entering an Unknown cell (≥ 1.0).
    pub unknown_cost_factor: f64,
    /// Radius around other robots treated as blocked, in metres.
    pub inflation_radius: f64,
    /// How far from an untenable goal the substitute cell may sit, metres.
    pub goal_tolerance: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            unknown_cost_factor: 1.0,
            inflation_radius: 1.0,
            goal_tolerance: 5.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.unknown_cost_factor >= 1.0) {
            return Err(PlanError::InvalidConfig(
                "unknown_cost_factor must be at least 1.0",
            ));
        }
        if !(self.inflation_radius >= 0.0) || !(self.goal_tolerance >= 0.0) {
            return Err(PlanError::InvalidConfig(
                "inflation_radius and goal_tolerance must be non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Error, Debug, PartialEq)]
pub enum PlanError {
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("start position is on a blocked cell")]
    BlockedStart,
    #[error("no reachable cell within tolerance of the goal")]
    NoRoute,
}

/// A planned route: the cell sequence from start to goal inclusive, and
/// its exact integer cost.
#[derive(Clone, PartialEq, Debug)]
pub struct PlannedPath {
    /// Consecutive 8-adjacent cells, start first.
    pub cells: Vec<Cell>,
    /// Total cost in millionths of a cell step.
    pub cost: u64,
}

impl PlannedPath {
    /// Cell-centre polyline for the waypoint follower.
    pub fn waypoints(&self, resolution: f64) -> Vec<WorldPoint> {
        self.cells.iter().map(|c| c.center(resolution)).collect()
    }

    /// The final cell of the route.
    pub fn goal(&self) -> Cell {
        *self.cells.last().expect("a path has at least one cell")
    }
}

/// Exact step cost entering `to`-state cells: base weight, scaled (and
/// rounded to the nearest unit) when the destination is Unknown.
fn step_cost(base: u64, destination: MapCell, unknown_cost_factor: f64) -> u64 {
    if destination == MapCell::Unknown && unknown_cost_factor != 1.0 {
        (base as f64 * unknown_cost_factor).round() as u64
    } else {
        base
    }
}

/// Octile distance between cell centres in cost units; a consistent lower
/// bound because every step costs at least its base weight.
fn octile(a: &Cell, b: &Cell) -> u64 {
    let dx = (a.x - b.x).unsigned_abs() as u64;
    let dy = (a.y - b.y).unsigned_abs() as u64;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    STRAIGHT_COST * (hi - lo) + DIAGONAL_COST * lo
}

/// Occupied-or-inflated mask. Cells within the inflation radius of the
/// planning robot's own position are exempt from peer inflation so that
/// overlapping discs never wall the robot in where it stands.
fn blocked_mask(
    map: &ExplorationMap,
    config: &PlannerConfig,
    other_robots: &[WorldPoint],
    own_position: &WorldPoint,
) -> Vec<bool> {
    let dims = map.dims();
    let res = dims.resolution;
    let mut blocked: Vec<bool> = (0..dims.cell_count())
        .map(|i| map.state(&dims.cell_at(i)) == MapCell::Occupied)
        .collect();
    let r = config.inflation_radius;
    if r > 0.0 {
        for robot in other_robots {
            let x_lo = ((robot.x - r) / res).floor() as i32;
            let x_hi = ((robot.x + r) / res).floor() as i32;
            let y_lo = ((robot.y - r) / res).floor() as i32;
            let y_hi = ((robot.y + r) / res).floor() as i32;
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    let cell = Cell::new(x, y);
                    if let Some(i) = dims.index(&cell) {
                        let center = cell.center(res);
                        if (center - robot).norm() <= r && (center - own_position).norm() > r {
                            blocked[i] = true;
                        }
                    }
                }
            }
        }
    }
    blocked
}

/// Settled shortest-path state out of one search.
struct SearchState {
    g: Vec<u64>,
    parent: Vec<usize>,
    settled: Vec<bool>,
}

/// Uniform-cost / A* core. With `goal` set the octile heuristic steers
/// the search and it stops when the goal is settled; without a goal it
/// floods the whole reachable component (exact Dijkstra costs).
fn run_search(
    map: &ExplorationMap,
    config: &PlannerConfig,
    blocked: &[bool],
    start: Cell,
    goal: Option<Cell>,
) -> SearchState {
    let dims = map.dims();
    let n = dims.cell_count();
    let mut state = SearchState {
        g: vec![UNREACHED; n],
        parent: vec![NO_PARENT; n],
        settled: vec![false; n],
    };
    let is_blocked = |cell: &Cell| match dims.index(cell) {
        Some(i) => blocked[i],
        None => true,
    };
    let h = |cell: &Cell| goal.as_ref().map_or(0, |g| octile(cell, g));

    let start_index = dims.index(&start).expect("start in bounds");
    state.g[start_index] = 0;
    // Keyed (f, h, y, x): lowest estimate first, goal-closer preferred on
    // ties, then row-major — a total order, so the expansion sequence is
    // deterministic.
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((h(&start), h(&start), start.y, start.x)));
    while let Some(Reverse((f, _, y, x))) = heap.pop() {
        let cell = Cell::new(x, y);
        let index = dims.index(&cell).expect("queued cells are in bounds");
        if state.settled[index] || f > state.g[index].saturating_add(h(&cell)) {
            continue;
        }
        state.settled[index] = true;
        if goal == Some(cell) {
            break;
        }
        for neighbor in cell.neighbors8() {
            if is_blocked(&neighbor) {
                continue;
            }
            let dx = neighbor.x - cell.x;
            let dy = neighbor.y - cell.y;
            let diagonal = dx != 0 && dy != 0;
            if diagonal
                && (is_blocked(&Cell::new(cell.x + dx, cell.y))
                    || is_blocked(&Cell::new(cell.x, cell.y + dy)))
            {
                continue;
            }
            let base = if diagonal { DIAGONAL_COST } else { STRAIGHT_COST };
            let step = step_cost(base, map.state(&neighbor), config.unknown_cost_factor);
            let neighbor_index = dims.index(&neighbor).expect("unblocked implies in bounds");
            let candidate = state.g[index] + step;
            if candidate < state.g[neighbor_index] {
                state.g[neighbor_index] = candidate;
                state.parent[neighbor_index] = index;
                heap.push(Reverse((
                    candidate + h(&neighbor),
                    h(&neighbor),
                    neighbor.y,
                    neighbor.x,
                )));
            }
        }
    }
    state
}

fn reconstruct(dims: &GridDims, state: &SearchState, goal_index: usize) -> Vec<Cell> {
    let mut cells = vec![dims.cell_at(goal_index)];
    let mut index = goal_index;
    while state.parent[index] != NO_PARENT {
        index = state.parent[index];
        cells.push(dims.cell_at(index));
    }
    cells.reverse();
    cells
}

/// Plan a route from `from` to (a clamped) `to`. Other robots' poses are
/// inflated as temporary obstacles. When the goal cell is blocked or
/// unreachable, the nearest settled cell within `goal_tolerance` of the
/// goal point is substituted.
pub fn plan_path(
    map: &ExplorationMap,
    from: &WorldPoint,
    to: &WorldPoint,
    config: &PlannerConfig,
    other_robots: &[WorldPoint],
) -> Result<PlannedPath, PlanError> {
    config.validate()?;
    let dims = map.dims();
    let start = Cell::containing(from, dims.resolution);
    if dims.index(&start).is_none() || map.state(&start) == MapCell::Occupied {
        return Err(PlanError::BlockedStart);
    }
    let target_point = dims.clamp_point(to);
    let goal = Cell::containing(&target_point, dims.resolution);

    let blocked = blocked_mask(map, config, other_robots, from);
    let state = run_search(map, config, &blocked, start, Some(goal));

    let goal_index = match dims.index(&goal) {
        Some(i) if state.settled[i] => i,
        _ => {
            // Substitute the nearest settled cell within tolerance of the
            // goal point; ties by cost, then row-major.
            let mut best: Option<(f64, u64, i32, i32, usize)> = None;
            for (i, &settled) in state.settled.iter().enumerate() {
                if !settled {
                    continue;
                }
                let cell = dims.cell_at(i);
                let d2 = (cell.center(dims.resolution) - target_point).norm_squared();
                if d2 > config.goal_tolerance * config.goal_tolerance {
                    continue;
                }
                let key = (d2, state.g[i], cell.y, cell.x, i);
                let better = match &best {
                    None => true,
                    Some((bd2, bg, by, bx, _)) => {
                        (d2.total_cmp(bd2), state.g[i], cell.y, cell.x)
                            < (std::cmp::Ordering::Equal, *bg, *by, *bx)
                    }
                };
                if better {
                    best = Some(key);
                }
            }
            best.ok_or(PlanError::NoRoute)?.4
        }
    };
    Ok(PlannedPath {
        cells: reconstruct(&dims, &state, goal_index),
        cost: state.g[goal_index],
    })
}

/// Exact shortest-path cost from `from` to every reachable cell, under
/// the same traversability rules as [`plan_path`].
#[derive(Clone, Debug)]
pub struct CostField {
    dims: GridDims,
    cost: Vec<u64>,
}

impl CostField {
    /// Cost to reach `cell`, or `None` if unreachable (or out of bounds).
    pub fn get(&self, cell: &Cell) -> Option<u64> {
        let i = self.dims.index(cell)?;
        (self.cost[i] != UNREACHED).then_some(self.cost[i])
    }
}

/// Flood the whole map from `from`, returning the per-cell cost field the
/// baseline strategies rank frontiers with.
pub fn dijkstra_costs(
    map: &ExplorationMap,
    from: &WorldPoint,
    config: &PlannerConfig,
    other_robots: &[WorldPoint],
) -> Result<CostField, PlanError> {
    config.validate()?;
    let dims = map.dims();
    let start = Cell::containing(from, dims.resolution);
    if dims.index(&start).is_none() || map.state(&start) == MapCell::Occupied {
        return Err(PlanError::BlockedStart);
    }
    let blocked = blocked_mask(map, config, other_robots, from);
    let state = run_search(map, config, &blocked, start, None);
    Ok(CostField {
        dims,
        cost: state.g,
    })
}

/// Speed and acceleration limits of one robot.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Kinematics {
    /// Maximum speed, m/s.
    pub max_speed: f64,
    /// Maximum acceleration (and deceleration), m/s².
    pub max_accel: f64,
}

impl Default for Kinematics {
    fn default() -> Self {
        Kinematics {
            max_speed: 4.0,
            max_accel: 2.0,
        }
    }
}

/// One robot's continuous state: pose, speed, and the waypoint polyline
/// it is following.
#[derive(Clone, Debug)]
pub struct RobotState {
    pub pose: WorldPoint,
    pub kinematics: Kinematics,
    speed: f64,
    waypoints: Vec<WorldPoint>,
    next_waypoint: usize,
    distance_traveled: f64,
}

/// Snap distance for final-waypoint arrival, metres.
const ARRIVAL_EPSILON: f64 = 1e-9;
/// Smallest time slice the integrator advances, seconds.
const TIME_EPSILON: f64 = 1e-12;

impl RobotState {
    pub fn new(pose: WorldPoint, kinematics: Kinematics) -> Self {
        RobotState {
            pose,
            kinematics,
            speed: 0.0,
            waypoints: Vec::new(),
            next_waypoint: 0,
            distance_traveled: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn distance_traveled(&self) -> f64 {
        self.distance_traveled
    }

    /// Replace the followed polyline. The current speed is kept; the
    /// profile re-plans deceleration against the new remaining length.
    pub fn set_waypoints(&mut self, waypoints: Vec<WorldPoint>) {
        self.waypoints = waypoints;
        self.next_waypoint = 0;
    }

    pub fn clear_waypoints(&mut self) {
        self.waypoints.clear();
        self.next_waypoint = 0;
        self.speed = 0.0;
    }

    /// True when no waypoint is pending.
    pub fn is_idle(&self) -> bool {
        self.next_waypoint >= self.waypoints.len()
    }

    /// The final waypoint of the current polyline, if any.
    pub fn destination(&self) -> Option<WorldPoint> {
        if self.is_idle() {
            None
        } else {
            self.waypoints.last().copied()
        }
    }

    /// The waypoints not yet consumed, in travel order.
    pub fn remaining_waypoints(&self) -> &[WorldPoint] {
        &self.waypoints[self.next_waypoint.min(self.waypoints.len())..]
    }

    /// Remaining polyline length from the current pose, metres.
    fn remaining_distance(&self) -> f64 {
        let Some(first) = self.waypoints.get(self.next_waypoint) else {
            return 0.0;
        };
        let mut total = (first - self.pose).norm();
        for w in self.next_waypoint + 1..self.waypoints.len() {
            total += (self.waypoints[w] - self.waypoints[w - 1]).norm();
        }
        total
    }

    /// Advance `dt` seconds along the polyline under a trapezoidal speed
    /// profile. An intermediate waypoint counts as reached once the robot
    /// is within `consume_tolerance` of it (the follower then turns
    /// toward the next one, cutting the corner); the final waypoint is
    /// hit exactly — the pose snaps onto it and the robot stops. Every
    /// transition (cruise-speed cap, braking point, waypoint reach) is an
    /// analytic event the tick is split at, so the trajectory is the
    /// closed-form profile and refining `dt` does not change it.
    pub fn step_motion(&mut self, dt: f64, consume_tolerance: f64) {
        let accel = self.kinematics.max_accel;
        let vmax = self.kinematics.max_speed;
        let mut t_left = dt;
        while t_left > TIME_EPSILON {
            // Consume intermediate waypoints we are already close to.
            while self.next_waypoint + 1 < self.waypoints.len()
                && (self.waypoints[self.next_waypoint] - self.pose).norm() <= consume_tolerance
            {
                self.next_waypoint += 1;
            }
            if self.is_idle() {
                self.speed = 0.0;
                break;
            }
            let d_rem = self.remaining_distance();
            if d_rem <= ARRIVAL_EPSILON {
                self.pose = *self.waypoints.last().expect("non-idle");
                self.clear_waypoints();
                break;
            }
            let target = self.waypoints[self.next_waypoint];
            let to_wp = (target - self.pose).norm();
            if to_wp <= ARRIVAL_EPSILON {
                self.next_waypoint += 1;
                continue;
            }
            let direction = (target - self.pose) / to_wp;
            let final_leg = self.next_waypoint + 1 == self.waypoints.len();
            // Where this leg ends: on the final waypoint exactly, or on
            // the rim of an intermediate waypoint's consumption circle.
            let leg_end = if final_leg {
                to_wp
            } else {
                to_wp - consume_tolerance
            };

            // Phase: brake when the stopping distance exhausts the rest
            // of the polyline, otherwise speed up (or cruise at the cap).
            let stop_dist = self.speed * self.speed / (2.0 * accel);
            let (a, t_phase) = if stop_dist >= d_rem - ARRIVAL_EPSILON {
                (-accel, self.speed / accel)
            } else if self.speed < vmax {
                let t_cap = (vmax - self.speed) / accel;
                // Braking point: accel·t² + 2·speed·t = d_rem − stop_dist.
                let t_brake = (-self.speed
                    + (self.speed * self.speed / 2.0 + accel * d_rem).sqrt())
                    / accel;
                (accel, t_cap.min(t_brake))
            } else {
                (0.0, (d_rem - vmax * vmax / (2.0 * accel)) / vmax)
            };
            let t_leg = time_to_cover(leg_end, self.speed, a);
            let t_step = t_left.min(t_leg).min(if t_phase > TIME_EPSILON {
                t_phase
            } else {
                t_left
            });

            let ds = (self.speed * t_step + 0.5 * a * t_step * t_step).min(leg_end);
            self.pose += direction * ds;
            self.distance_traveled += ds;
            self.speed = (self.speed + a * t_step).clamp(0.0, vmax);
            t_left -= t_step;

            if leg_end - ds <= ARRIVAL_EPSILON {
                if final_leg {
                    self.pose = target;
                    self.clear_waypoints();
                    break;
                }
                self.next_waypoint += 1;
            }
        }
    }
}

/// Time to travel `distance` starting at `speed` under constant
/// acceleration `a`; infinity when the motion stops short.
fn time_to_cover(distance: f64, speed: f64, a: f64) -> f64 {
    if a.abs() < 1e-15 {
        if speed <= 0.0 {
            return f64::INFINITY;
        }
        return distance / speed;
    }
    let disc = speed * speed + 2.0 * a * distance;
    if disc < 0.0 {
        return f64::INFINITY; // braking ends before the waypoint
    }
    let root = disc.sqrt();
    if a > 0.0 {
        (-speed + root) / a
    } else {
        // Braking: the earlier root is the first pass over the waypoint.
        let t = (speed - root) / a.abs();
        if t >= 0.0 {
            t
        } else {
            f64::INFINITY
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::TerrainCell;
    use nalgebra::Point2;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const RES: f64 = 0.5;

    /// Fully-known map with the listed cells Occupied, the rest Free.
    /// Built in a single integration pass: map cells never change state
    /// once observed, so walls must be present from the start.
    fn map_with_walls(width: u32, height: u32, occupied: &[(i32, i32)]) -> ExplorationMap {
        let dims = GridDims::new(width, height, RES);
        let mut map = ExplorationMap::unknown(dims);
        let obs: Vec<(Cell, TerrainCell)> = (0..dims.cell_count())
            .map(|i| dims.cell_at(i))
            .map(|c| {
                let state = if occupied.contains(&(c.x, c.y)) {
                    TerrainCell::Occupied
                } else {
                    TerrainCell::Free
                };
                (c, state)
            })
            .collect();
        map.integrate_observations(&obs);
        map
    }

    fn known_free_map(width: u32, height: u32) -> ExplorationMap {
        map_with_walls(width, height, &[])
    }

    fn center(x: i32, y: i32) -> WorldPoint {
        Cell::new(x, y).center(RES)
    }

    fn plan(
        map: &ExplorationMap,
        from: (i32, i32),
        to: (i32, i32),
        config: &PlannerConfig,
    ) -> Result<PlannedPath, PlanError> {
        plan_path(map, &center(from.0, from.1), &center(to.0, to.1), config, &[])
    }

    /// Structural checks every returned path must satisfy: adjacency,
    /// no Occupied cells, no squeezed diagonals, and the reported cost
    /// re-derived from the documented step weights.
    fn assert_path_well_formed(map: &ExplorationMap, path: &PlannedPath, factor: f64) {
        let mut total = 0u64;
        for pair in path.cells.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let dx = b.x - a.x;
            let dy = b.y - a.y;
            assert!(dx.abs() <= 1 && dy.abs() <= 1 && (dx, dy) != (0, 0));
            assert_ne!(map.state(&b), MapCell::Occupied);
            let base = if dx != 0 && dy != 0 {
                assert_ne!(map.state(&Cell::new(a.x + dx, a.y)), MapCell::Occupied);
                assert_ne!(map.state(&Cell::new(a.x, a.y + dy)), MapCell::Occupied);
                DIAGONAL_COST
            } else {
                STRAIGHT_COST
            };
            total += if map.state(&b) == MapCell::Unknown && factor != 1.0 {
                (base as f64 * factor).round() as u64
            } else {
                base
            };
        }
        assert_eq!(total, path.cost);
    }

    #[test]
    fn straight_and_diagonal_corridors_cost_their_octile_length() {
        let map = known_free_map(20, 20);
        let cfg = PlannerConfig::default();

        let path = plan(&map, (2, 5), (12, 5), &cfg).unwrap();
        assert_eq!(path.cells.len(), 11);
        assert_eq!(path.cost, 10 * STRAIGHT_COST);

        let path = plan(&map, (2, 2), (7, 7), &cfg).unwrap();
        assert_eq!(path.cells.len(), 6);
        assert_eq!(path.cost, 5 * DIAGONAL_COST);

        let path = plan(&map, (3, 3), (3, 3), &cfg).unwrap();
        assert_eq!(path.cells, vec![Cell::new(3, 3)]);
        assert_eq!(path.cost, 0);
    }

    #[test]
    fn diagonal_moves_never_squeeze_between_blockers() {
        let map = map_with_walls(6, 6, &[(2, 1), (1, 2)]);
        let cfg = PlannerConfig::default();
        let path = plan(&map, (1, 1), (3, 3), &cfg).unwrap();
        assert_path_well_formed(&map, &path, cfg.unknown_cost_factor);
        // The direct two-diagonal route is fenced off; the detour is
        // strictly more expensive than an unobstructed diagonal run.
        assert!(path.cost > 2 * DIAGONAL_COST);
    }

    #[test]
    fn walled_off_goals_substitute_the_nearest_reachable_cell() {
        let mut ring = Vec::new();
        for x in 4..=6 {
            for y in 4..=6 {
                if x != 5 || y != 5 {
                    ring.push((x, y));
                }
            }
        }
        let map = map_with_walls(12, 12, &ring);
        let cfg = PlannerConfig::default();

        let path = plan(&map, (1, 1), (5, 5), &cfg).unwrap();
        assert_path_well_formed(&map, &path, cfg.unknown_cost_factor);
        // Nearest settled cells sit one ring outside the wall, 1 m from
        // the goal centre; the row-major tie-break picks (5, 3).
        assert_eq!(path.goal(), Cell::new(5, 3));

        let tight = PlannerConfig {
            goal_tolerance: 0.4,
            ..cfg
        };
        assert_eq!(plan(&map, (1, 1), (5, 5), &tight), Err(PlanError::NoRoute));
    }

    #[test]
    fn an_occupied_goal_cell_redirects_to_a_neighbor() {
        let map = map_with_walls(10, 10, &[(5, 5)]);
        let path = plan(&map, (1, 5), (5, 5), &PlannerConfig::default()).unwrap();
        let goal = path.goal();
        assert_ne!(goal, Cell::new(5, 5));
        assert!(goal.distance_cells(&Cell::new(5, 5)) <= 2.0_f64.sqrt() + 1e-9);
    }

    #[test]
    fn inflation_detours_around_other_robots_but_not_the_start() {
        let map = known_free_map(24, 12);
        let cfg = PlannerConfig::default();
        let from = center(2, 5);
        let to = center(20, 5);
        let clear = plan_path(&map, &from, &to, &cfg, &[]).unwrap();
        assert_eq!(clear.cost, 18 * STRAIGHT_COST);

        let peer = center(11, 5);
        let detour = plan_path(&map, &from, &to, &cfg, &[peer]).unwrap();
        assert!(detour.cost > clear.cost);
        for cell in &detour.cells {
            if *cell == detour.cells[0] {
                continue;
            }
            assert!(
                (cell.center(RES) - peer).norm() > cfg.inflation_radius,
                "path enters the inflated disc at {cell:?}"
            );
        }

        // A peer parked on the start pose must not trap the robot: its
        // whole disc overlaps the robot's own and is exempt.
        let trapped = plan_path(&map, &from, &to, &cfg, &[from]).unwrap();
        assert_eq!(trapped.cells[0], Cell::new(2, 5));
        assert_eq!(trapped.cost, clear.cost);
    }

    #[test]
    fn unknown_cells_cost_more_only_when_the_factor_says_so() {
        // Row 3 is unexplored between the endpoints; rows above and
        // below are known Free.
        let dims = GridDims::new(16, 7, RES);
        let mut map = ExplorationMap::unknown(dims);
        let mut obs = Vec::new();
        for i in 0..dims.cell_count() {
            let cell = dims.cell_at(i);
            if cell.y == 3 && (3..=12).contains(&cell.x) {
                continue;
            }
            obs.push((cell, TerrainCell::Free));
        }
        map.integrate_observations(&obs);

        let neutral = PlannerConfig::default();
        let through = plan(&map, (1, 3), (14, 3), &neutral).unwrap();
        assert_eq!(through.cost, 13 * STRAIGHT_COST);
        assert!(through
            .cells
            .iter()
            .any(|c| map.state(c) == MapCell::Unknown));

        let wary = PlannerConfig {
            unknown_cost_factor: 5.0,
            ..neutral
        };
        let around = plan(&map, (1, 3), (14, 3), &wary).unwrap();
        assert_path_well_formed(&map, &around, wary.unknown_cost_factor);
        assert!(around.cells.iter().all(|c| map.state(c) == MapCell::Free));
    }

    #[test]
    fn blocked_start_is_reported() {
        let map = map_with_walls(8, 8, &[(2, 2)]);
        assert_eq!(
            plan(&map, (2, 2), (6, 6), &PlannerConfig::default()),
            Err(PlanError::BlockedStart)
        );
        let bad = PlannerConfig {
            unknown_cost_factor: 0.5,
            ..PlannerConfig::default()
        };
        assert!(matches!(
            plan(&map, (1, 1), (6, 6), &bad),
            Err(PlanError::InvalidConfig(_))
        ));
    }

    /// Independent Dijkstra over the same documented rules, written
    /// against the definition rather than the planner internals.
    fn oracle_costs(map: &ExplorationMap, start: Cell, factor: f64) -> Vec<u64> {
        let dims = map.dims();
        let open = |c: &Cell| dims.contains(c) && map.state(c) != MapCell::Occupied;
        let mut dist = vec![u64::MAX; dims.cell_count()];
        let mut heap = BinaryHeap::new();
        dist[dims.index(&start).unwrap()] = 0;
        heap.push(Reverse((0u64, start.y, start.x)));
        while let Some(Reverse((d, y, x))) = heap.pop() {
            let cell = Cell::new(x, y);
            let i = dims.index(&cell).unwrap();
            if d > dist[i] {
                continue;
            }
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let next = Cell::new(x + dx, y + dy);
                    if !open(&next) {
                        continue;
                    }
                    if dx != 0
                        && dy != 0
                        && (!open(&Cell::new(x + dx, y)) || !open(&Cell::new(x, y + dy)))
                    {
                        continue;
                    }
                    let base = if dx != 0 && dy != 0 { 1_414_214u64 } else { 1_000_000 };
                    let w = if map.state(&next) == MapCell::Unknown && factor != 1.0 {
                        (base as f64 * factor).round() as u64
                    } else {
                        base
                    };
                    let j = dims.index(&next).unwrap();
                    if d + w < dist[j] {
                        dist[j] = d + w;
                        heap.push(Reverse((d + w, next.y, next.x)));
                    }
                }
            }
        }
        dist
    }

    fn random_map(rng: &mut ChaCha8Rng, width: u32, height: u32) -> ExplorationMap {
        let dims = GridDims::new(width, height, RES);
        let mut map = ExplorationMap::unknown(dims);
        let mut obs = Vec::new();
        for i in 0..dims.cell_count() {
            let roll: f64 = rng.gen();
            let state = if roll < 0.2 {
                continue; // stays Unknown
            } else if roll < 0.4 {
                TerrainCell::Occupied
            } else {
                TerrainCell::Free
            };
            obs.push((dims.cell_at(i), state));
        }
        map.integrate_observations(&obs);
        map
    }

    #[test]
    fn path_costs_match_an_independent_dijkstra_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        for round in 0..100 {
            let map = random_map(&mut rng, 25, 25);
            let dims = map.dims();
            let factor = [1.0, 1.0, 2.5][round % 3];
            let cfg = PlannerConfig {
                unknown_cost_factor: factor,
                inflation_radius: 0.0,
                ..PlannerConfig::default()
            };
            let free: Vec<Cell> = (0..dims.cell_count())
                .map(|i| dims.cell_at(i))
                .filter(|c| map.state(c) == MapCell::Free)
                .collect();
            if free.len() < 2 {
                continue;
            }
            let start = free[rng.gen_range(0..free.len())];
            let oracle = oracle_costs(&map, start, factor);
            let reachable: Vec<Cell> = free
                .iter()
                .copied()
                .filter(|c| oracle[dims.index(c).unwrap()] != u64::MAX)
                .collect();
            for _ in 0..5 {
                let goal = reachable[rng.gen_range(0..reachable.len())];
                let path = plan_path(
                    &map,
                    &start.center(RES),
                    &goal.center(RES),
                    &cfg,
                    &[],
                )
                .unwrap();
                assert_eq!(path.goal(), goal);
                assert_eq!(path.cost, oracle[dims.index(&goal).unwrap()]);
                assert_path_well_formed(&map, &path, factor);
                checked += 1;
            }
            // The flood agrees with the oracle on every cell.
            let field = dijkstra_costs(&map, &start.center(RES), &cfg, &[]).unwrap();
            for i in 0..dims.cell_count() {
                let cell = dims.cell_at(i);
                let expected = (oracle[i] != u64::MAX).then_some(oracle[i]);
                assert_eq!(field.get(&cell), expected);
            }
        }
        assert!(checked >= 400, "too few planner/oracle comparisons: {checked}");
    }

    fn robot_at(x: f64, y: f64) -> RobotState {
        RobotState::new(Point2::new(x, y), Kinematics::default())
    }

    /// Closed-form traversal time of a rest-to-rest trapezoid profile.
    fn trapezoid_time(distance: f64, vmax: f64, accel: f64) -> f64 {
        let ramp = vmax * vmax / accel; // accelerate + brake distance
        if distance >= ramp {
            2.0 * vmax / accel + (distance - ramp) / vmax
        } else {
            2.0 * (distance / accel).sqrt()
        }
    }

    fn run_until_idle(robot: &mut RobotState, dt: f64) -> (f64, f64) {
        let mut elapsed = 0.0;
        let mut peak = 0.0_f64;
        for _ in 0..100_000 {
            if robot.is_idle() {
                return (elapsed, peak);
            }
            robot.step_motion(dt, 0.25);
            elapsed += dt;
            peak = peak.max(robot.speed());
            assert!(
                robot.speed() <= robot.kinematics.max_speed + 1e-9,
                "speed cap violated"
            );
        }
        panic!("robot never became idle");
    }

    #[test]
    fn straight_run_matches_the_trapezoid_profile_oracle() {
        let dt = 0.1;

        // Long leg: accelerate to the cap, cruise, brake.
        let mut robot = robot_at(0.5, 0.5);
        robot.set_waypoints(vec![Point2::new(10.5, 0.5)]);
        let (elapsed, peak) = run_until_idle(&mut robot, dt);
        let oracle = trapezoid_time(10.0, 4.0, 2.0);
        assert!((elapsed - oracle).abs() <= dt + 1e-9, "{elapsed} vs {oracle}");
        assert!(elapsed >= oracle - 1e-9, "beat the kinematic bound");
        assert!((peak - 4.0).abs() <= 1e-9);
        assert_eq!(robot.pose, Point2::new(10.5, 0.5));
        assert!((robot.distance_traveled() - 10.0).abs() <= 1e-9);

        // Short leg: triangular profile, cap never reached.
        let mut robot = robot_at(0.5, 0.5);
        robot.set_waypoints(vec![Point2::new(3.5, 0.5)]);
        let (elapsed, peak) = run_until_idle(&mut robot, dt);
        let oracle = trapezoid_time(3.0, 4.0, 2.0);
        assert!((elapsed - oracle).abs() <= dt + 1e-9);
        let ideal_peak = (2.0_f64 * 3.0).sqrt(); // √(a·d)
        assert!(peak <= ideal_peak + 1e-9);
        assert!(peak >= ideal_peak - 2.0 * dt);
    }

    #[test]
    fn halving_the_tick_does_not_change_the_trajectory() {
        let path = vec![
            Point2::new(0.5, 0.5),
            Point2::new(5.5, 0.5),
            Point2::new(5.5, 4.5),
        ];
        let mut coarse = robot_at(0.25, 0.25);
        coarse.set_waypoints(path.clone());
        for _ in 0..20 {
            coarse.step_motion(0.1, 0.25);
        }
        let mut fine = robot_at(0.25, 0.25);
        fine.set_waypoints(path);
        for _ in 0..40 {
            fine.step_motion(0.05, 0.25);
        }
        assert!((coarse.pose - fine.pose).norm() <= 1e-6);
        assert!((coarse.distance_traveled() - fine.distance_traveled()).abs() <= 1e-6);
        assert!((coarse.speed() - fine.speed()).abs() <= 1e-6);
    }

    #[test]
    fn an_empty_path_leaves_the_pose_unchanged() {
        let mut robot = robot_at(2.0, 3.0);
        robot.step_motion(0.1, 0.25);
        assert_eq!(robot.pose, Point2::new(2.0, 3.0));
        assert!(robot.is_idle());

        // A path ending where we stand is consumed without motion.
        robot.set_waypoints(vec![Point2::new(2.0, 3.0)]);
        robot.step_motion(0.1, 0.25);
        assert_eq!(robot.pose, Point2::new(2.0, 3.0));
        assert!(robot.is_idle());
        assert_eq!(robot.distance_traveled(), 0.0);
    }

    #[test]
    fn nearby_intermediate_waypoints_are_consumed_not_chased() {
        let mut robot = robot_at(0.35, 0.65);
        robot.set_waypoints(vec![Point2::new(0.5, 0.5), Point2::new(6.5, 0.5)]);
        let start = robot.pose;
        let (_, _) = run_until_idle(&mut robot, 0.1);
        // First waypoint sits within the 0.25 m consumption radius of the
        // start, so the robot drives straight at the second and still
        // finishes exactly on it.
        assert_eq!(robot.pose, Point2::new(6.5, 0.5));
        // Straight-line run: no detour through the consumed waypoint.
        let direct = (Point2::new(6.5, 0.5) - start).norm();
        assert!((robot.distance_traveled() - direct).abs() <= 1e-9);
    }

    #[test]
    fn replanning_onto_a_short_path_still_stops_at_the_goal() {
        let mut robot = robot_at(0.5, 0.5);
        robot.set_waypoints(vec![Point2::new(20.5, 0.5)]);
        for _ in 0..25 {
            robot.step_motion(0.1, 0.25); // reach full speed mid-leg
        }
        assert!((robot.speed() - 4.0).abs() < 1e-9);
        // New goal closer than the stopping distance; the follower must
        // still terminate exactly on it.
        let goal = Point2::new(robot.pose.x + 1.0, 0.5);
        robot.set_waypoints(vec![goal]);
        let (_, _) = run_until_idle(&mut robot, 0.1);
        assert_eq!(robot.pose, goal);
        assert_eq!(robot.speed(), 0.0);
    }
}
