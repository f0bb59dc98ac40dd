//! Pluggable exploration strategies behind one decision interface.
//!
//! Three strategies drive the robots:
//!
//! * **Shepherding** ([`FrosheStrategy`]): frontiers become weighted
//!   virtual sheep, sheep are batched, every robot picks a batch and
//!   steers it — collecting scattered members or herding the batch toward
//!   a merge target — with a per-robot rate monitor adapting the
//!   compactness threshold. A robot commits to each two-leg steering
//!   sequence until the swarm resets on new map content, the sequence
//!   completes, or its plan fails; only then is it re-decided.
//! * **Greedy** ([`GreedyStrategy`]): every robot independently drives to
//!   its path-cost-nearest frontier and re-decides when that target stops
//!   being a frontier (or it arrives, or the plan fails).
//! * **Utility-coordinated** ([`UtilityStrategy`]): frontiers carry a
//!   utility, initially uniform; robots are assigned sequentially in
//!   index order, each maximising `utility_weight · utility − normalised
//!   path cost`, and every assignment linearly discounts the utility of
//!   frontiers within the discount range of the chosen target. This is a
//!   reconstruction from the published description of the method, not a
//!   port of any reference code, so comparisons against it are
//!   directional rather than exact.
//!
//! Target selection for the baselines floods path costs over the shared
//! map alone (no peer inflation), so a robot standing beside a frontier
//! does not hide it from the others; actually driving there still avoids
//! peers because navigation is planned separately.

use crate::batching::{
    assign_batches, batch_swarm, batch_swarm_kmeans, AssignmentParams, BatchingMethod,
};
use crate::config::{SimConfig, StrategyKind};
use crate::geometry::{Cell, WorldPoint};
use crate::mapping::{ExplorationMap, FrontierSet};
use crate::monitor::RateMonitor;
use crate::planner::{dijkstra_costs, PlannerConfig, STRAIGHT_COST};
use crate::rng::{stream_rng, Stream};
use crate::shepherd::{
    collecting_decision, herding_decision, is_compact, Mode, ShepherdConfig,
};
use crate::swarm::{allocate_virtual_sheep, estimate_step, SwarmParams, SwarmState};
use rand_chacha::ChaCha8Rng;

/// Immutable view of the world a strategy decides on: the shared map, the
/// latest frontier snapshot, and per-robot motion status maintained by
/// the engine.
pub struct DecisionInput<'a> {
    pub map: &'a ExplorationMap,
    pub frontiers: &'a FrontierSet,
    /// True on the step right after the engine published a frontier
    /// snapshot; between publications the snapshot is carried unchanged.
    pub snapshot_fresh: bool,
    pub robot_poses: &'a [WorldPoint],
    /// Whether each robot has finished (or abandoned) its whole committed
    /// goal sequence and is waiting for new orders.
    pub robot_idle: &'a [bool],
    /// Whether the last attempt to plan a path for each robot failed.
    pub plan_failed: &'a [bool],
    /// Simulated seconds since the previous strategy step.
    pub dt: f64,
}

/// One strategy step: per-robot goal sequences and status labels.
#[derive(Clone, PartialEq, Debug)]
pub struct StrategyStep {
    /// The strategy considers exploration finished.
    pub complete: bool,
    /// Per robot: a fresh goal sequence replacing the current plan, or
    /// `None` to keep driving the existing one.
    pub commands: Vec<Option<Vec<WorldPoint>>>,
    /// Per robot: a stable label of its current behaviour, for metrics.
    pub labels: Vec<&'static str>,
}

impl StrategyStep {
    fn idle(robot_count: usize, complete: bool, label: &'static str) -> Self {
        StrategyStep {
            complete,
            commands: vec![None; robot_count],
            labels: vec![label; robot_count],
        }
    }
}

/// A deterministic decision state machine driven by the engine.
pub trait Strategy {
    fn name(&self) -> &'static str;

    fn step(&mut self, input: &DecisionInput) -> StrategyStep;

    /// Current swarm estimate, for debug traces; baselines have none.
    fn swarm(&self) -> Option<&SwarmState> {
        None
    }

    /// Per-robot rate monitor, for debug traces; baselines have none.
    fn monitor(&self, _robot: usize) -> Option<&RateMonitor> {
        None
    }
}

/// Instantiate the strategy selected by a resolved config.
pub fn build_strategy(config: &SimConfig, initial_explored: u64) -> Box<dyn Strategy> {
    match config.strategy_kind() {
        StrategyKind::Froshe => Box::new(FrosheStrategy::new(config, initial_explored)),
        StrategyKind::Greedy => Box::new(GreedyStrategy::new(config)),
        StrategyKind::Utility => Box::new(UtilityStrategy::new(config)),
    }
}

/// Planner view used for frontier *selection*: same traversability as
/// navigation but without peer inflation (see module docs).
fn selection_config(config: &SimConfig) -> PlannerConfig {
    PlannerConfig {
        inflation_radius: 0.0,
        ..config.planner_config()
    }
}

// Some frontier cells can never be cleared: an unknown cell whose every
// line of sight is blocked (a concave obstacle corner) keeps its free
// diagonal neighbour a frontier forever. A robot that reaches its target
// and still finds it listed as a frontier therefore blacklists it so the
// team moves on to clearable ones; coverage-based termination handles
// whatever remains. The list is a sorted Vec keyed by the cell order.

fn is_blacklisted(blacklist: &[Cell], cell: &Cell) -> bool {
    blacklist.binary_search(cell).is_ok()
}

fn blacklist_insert(blacklist: &mut Vec<Cell>, cell: Cell) {
    if let Err(i) = blacklist.binary_search(&cell) {
        blacklist.insert(i, cell);
    }
}

/// Blacklist every target its robot has finished driving toward while the
/// snapshot still lists it as a frontier, and drop such targets.
fn blacklist_stuck_targets(
    blacklist: &mut Vec<Cell>,
    targets: &mut [Option<Cell>],
    input: &DecisionInput,
) {
    for i in 0..input.robot_poses.len().min(targets.len()) {
        if input.robot_idle[i] && !input.plan_failed[i] {
            if let Some(cell) = targets[i] {
                if input.frontiers.contains(&cell) {
                    blacklist_insert(blacklist, cell);
                    targets[i] = None;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------
// Shepherding
// ---------------------------------------------------------------------

pub struct FrosheStrategy {
    swarm_params: SwarmParams,
    assignment: AssignmentParams,
    shepherd: ShepherdConfig,
    batching: BatchingMethod,
    linkage_distance: f64,
    kmeans_clusters: usize,
    kmeans_iterations: usize,
    monitors: Vec<RateMonitor>,
    modes: Vec<Mode>,
    swarm: Option<SwarmState>,
    rng: ChaCha8Rng,
}

impl FrosheStrategy {
    pub fn new(config: &SimConfig, initial_explored: u64) -> Self {
        let robots = config.scenario.robot_count;
        let monitor_params = config.monitor_params();
        let initial_threshold = config
            .monitor
            .threshold_initial
            .expect("config resolved");
        FrosheStrategy {
            swarm_params: config.swarm_params(),
            assignment: config.assignment_params(),
            shepherd: config.shepherd_config(),
            batching: config.batching.method,
            linkage_distance: config.batching.linkage_distance.expect("config resolved"),
            kmeans_clusters: config.batching.kmeans_clusters.expect("config resolved"),
            kmeans_iterations: config.batching.kmeans_iterations,
            monitors: (0..robots)
                .map(|_| RateMonitor::new(monitor_params, initial_explored, initial_threshold))
                .collect(),
            modes: vec![Mode::Collecting; robots],
            swarm: None,
            rng: stream_rng(config.engine.master_seed, Stream::Strategy),
        }
    }

    fn labels(&self) -> Vec<&'static str> {
        self.modes.iter().map(Mode::label).collect()
    }
}

impl Strategy for FrosheStrategy {
    fn name(&self) -> &'static str {
        "froshe"
    }

    fn step(&mut self, input: &DecisionInput) -> StrategyStep {
        let robots = input.robot_poses.len();
        let explored = input.map.explored_cells();
        for (i, monitor) in self.monitors.iter_mut().enumerate() {
            monitor.record(explored);
            // Dominance tracks the mode the robot is actually in at each
            // tick, so a stalled push is recognized within the fast
            // window rather than after fifty sparse re-decisions.
            monitor.push_mode(self.modes[i]);
            // The threshold adapts every monitor tick while the fast mean
            // trails the slow one; decisions consume the adapted value at
            // their next epoch.
            let dominant = monitor.dominant_mode();
            monitor.maybe_switch(dominant);
        }

        if input.frontiers.is_empty() {
            return StrategyStep {
                complete: true,
                commands: vec![None; robots],
                labels: self.labels(),
            };
        }

        // Every published snapshot re-syncs the sheep to the current map,
        // so the estimate never trails reality by more than one snapshot
        // interval; estimation steps fill the ticks in between.
        // Re-allocating from an unchanged map reproduces the previous
        // layout, so only a snapshot that carries new map content starts a
        // new decision epoch.
        let prev_version = self.swarm.as_ref().map(|state| state.source_version);
        let swarm = if input.snapshot_fresh || self.swarm.is_none() {
            allocate_virtual_sheep(input.frontiers, input.map, self.swarm_params)
        } else {
            let state = self.swarm.take().expect("estimate present between snapshots");
            estimate_step(&state, input.robot_poses, input.dt, &mut self.rng)
        };
        let reset = prev_version != Some(swarm.source_version);
        if swarm.is_empty() {
            self.swarm = Some(swarm);
            return StrategyStep {
                complete: true,
                commands: vec![None; robots],
                labels: self.labels(),
            };
        }

        // Decision epochs: a robot re-decides when the swarm resets on new
        // map content, when its committed goal sequence has completed, or
        // when its plan failed. Between epochs it keeps driving; steering
        // it anew every step would thrash around the stand-off pose and
        // never reach the push destination.
        let decide: Vec<bool> = (0..robots)
            .map(|i| reset || input.robot_idle[i] || input.plan_failed[i])
            .collect();
        if !decide.contains(&true) {
            self.swarm = Some(swarm);
            return StrategyStep {
                complete: false,
                commands: vec![None; robots],
                labels: self.labels(),
            };
        }

        let batches = match self.batching {
            BatchingMethod::Linkage => batch_swarm(&swarm, self.linkage_distance),
            BatchingMethod::KMeans => {
                batch_swarm_kmeans(&swarm, self.kmeans_clusters, self.kmeans_iterations)
            }
        };
        let choice = assign_batches(&batches, input.robot_poses, &self.assignment)
            .expect("a non-empty swarm yields at least one batch");

        let mut commands = Vec::with_capacity(robots);
        let mut labels = Vec::with_capacity(robots);
        for i in 0..robots {
            if !decide[i] {
                commands.push(None);
                labels.push(self.modes[i].label());
                continue;
            }
            let own = choice[i];
            let batch = &batches[own];
            let compact = is_compact(batch, &swarm.sheep, self.monitors[i].threshold());
            let pose = &input.robot_poses[i];
            // Preferred mode by compactness; a degenerate geometry falls
            // back to the other mode before giving up.
            let decision = if compact {
                herding_decision(own, &batches, pose, &self.shepherd)
                    .or_else(|_| collecting_decision(batch, &swarm.sheep, &self.shepherd))
            } else {
                collecting_decision(batch, &swarm.sheep, &self.shepherd)
                    .or_else(|_| herding_decision(own, &batches, pose, &self.shepherd))
            };
            let (mode, waypoints) = match decision {
                Ok(d) => (d.mode, d.waypoints.to_vec()),
                // Both poses degenerate (a lone sheep exactly under the
                // robot): park on the batch centroid and let the next
                // estimation step separate them.
                Err(_) => (self.modes[i], vec![batch.centroid]),
            };
            self.modes[i] = mode;
            commands.push(Some(waypoints));
            labels.push(mode.label());
        }

        self.swarm = Some(swarm);
        StrategyStep {
            complete: false,
            commands,
            labels,
        }
    }

    fn swarm(&self) -> Option<&SwarmState> {
        self.swarm.as_ref()
    }

    fn monitor(&self, robot: usize) -> Option<&RateMonitor> {
        self.monitors.get(robot)
    }
}

// ---------------------------------------------------------------------
// Greedy nearest-frontier
// ---------------------------------------------------------------------

pub struct GreedyStrategy {
    selection: PlannerConfig,
    targets: Vec<Option<Cell>>,
    blacklist: Vec<Cell>,
}

impl GreedyStrategy {
    pub fn new(config: &SimConfig) -> Self {
        GreedyStrategy {
            selection: selection_config(config),
            targets: vec![None; config.scenario.robot_count],
            blacklist: Vec::new(),
        }
    }
}

/// The path-cost-nearest frontier: minimum cost, ties resolved by the
/// row-major order frontier snapshots are already sorted in.
fn nearest_frontier(
    map: &ExplorationMap,
    frontiers: &FrontierSet,
    pose: &WorldPoint,
    selection: &PlannerConfig,
    blacklist: &[Cell],
) -> Option<Cell> {
    let field = dijkstra_costs(map, pose, selection, &[]).ok()?;
    let mut best: Option<(u64, Cell)> = None;
    for cell in &frontiers.cells {
        if is_blacklisted(blacklist, cell) {
            continue;
        }
        if let Some(cost) = field.get(cell) {
            if best.map_or(true, |(b, _)| cost < b) {
                best = Some((cost, *cell));
            }
        }
    }
    best.map(|(_, cell)| cell)
}

impl Strategy for GreedyStrategy {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn step(&mut self, input: &DecisionInput) -> StrategyStep {
        let robots = input.robot_poses.len();
        if input.frontiers.is_empty() {
            return StrategyStep::idle(robots, true, "idle");
        }
        blacklist_stuck_targets(&mut self.blacklist, &mut self.targets, input);
        let resolution = input.map.dims().resolution;
        let mut commands = Vec::with_capacity(robots);
        let mut labels = Vec::with_capacity(robots);
        for i in 0..robots {
            let stale = self.targets[i]
                .map_or(true, |c| !input.frontiers.contains(&c) || is_blacklisted(&self.blacklist, &c));
            if !(stale || input.robot_idle[i] || input.plan_failed[i]) {
                commands.push(None);
                labels.push("seeking");
                continue;
            }
            match nearest_frontier(
                input.map,
                input.frontiers,
                &input.robot_poses[i],
                &self.selection,
                &self.blacklist,
            ) {
                Some(cell) => {
                    self.targets[i] = Some(cell);
                    commands.push(Some(vec![cell.center(resolution)]));
                    labels.push("seeking");
                }
                None => {
                    self.targets[i] = None;
                    commands.push(None);
                    labels.push("idle");
                }
            }
        }
        StrategyStep {
            complete: false,
            commands,
            labels,
        }
    }
}

// ---------------------------------------------------------------------
// Utility-coordinated
// ---------------------------------------------------------------------

pub struct UtilityStrategy {
    selection: PlannerConfig,
    utility_weight: f64,
    discount_range: f64,
    targets: Vec<Option<Cell>>,
    blacklist: Vec<Cell>,
}

impl UtilityStrategy {
    pub fn new(config: &SimConfig) -> Self {
        UtilityStrategy {
            selection: selection_config(config),
            utility_weight: config.utility.utility_weight,
            discount_range: config.utility.discount_range.expect("config resolved"),
            targets: vec![None; config.scenario.robot_count],
            blacklist: Vec::new(),
        }
    }
}

impl Strategy for UtilityStrategy {
    fn name(&self) -> &'static str {
        "utility"
    }

    fn step(&mut self, input: &DecisionInput) -> StrategyStep {
        let robots = input.robot_poses.len();
        if input.frontiers.is_empty() {
            return StrategyStep::idle(robots, true, "idle");
        }
        blacklist_stuck_targets(&mut self.blacklist, &mut self.targets, input);
        // Re-assign the whole team together whenever any robot needs a
        // target, so the discounts always reflect every live assignment.
        let needs_round = (0..robots).any(|i| {
            input.robot_idle[i]
                || input.plan_failed[i]
                || self.targets[i].map_or(true, |c| {
                    !input.frontiers.contains(&c) || is_blacklisted(&self.blacklist, &c)
                })
        });
        if !needs_round {
            return StrategyStep::idle(robots, false, "seeking");
        }

        let dims = input.map.dims();
        let resolution = dims.resolution;
        // Path costs enter the score normalised by the grid diagonal so
        // utilities (order one) can actually steer the assignment.
        let metres_per_cost = resolution / STRAIGHT_COST as f64;
        let diagonal = dims.diagonal();
        let cells = &input.frontiers.cells;
        let mut utilities = vec![1.0_f64; cells.len()];

        let mut commands = Vec::with_capacity(robots);
        let mut labels = Vec::with_capacity(robots);
        for i in 0..robots {
            let field = dijkstra_costs(input.map, &input.robot_poses[i], &self.selection, &[]);
            let mut best: Option<(f64, usize)> = None;
            if let Ok(field) = &field {
                for (f, cell) in cells.iter().enumerate() {
                    if is_blacklisted(&self.blacklist, cell) {
                        continue;
                    }
                    let Some(cost) = field.get(cell) else { continue };
                    let score = self.utility_weight * utilities[f]
                        - cost as f64 * metres_per_cost / diagonal;
                    if best.map_or(true, |(b, _)| score > b) {
                        best = Some((score, f));
                    }
                }
            }
            match best {
                Some((_, f)) => {
                    let chosen = cells[f];
                    self.targets[i] = Some(chosen);
                    commands.push(Some(vec![chosen.center(resolution)]));
                    labels.push("seeking");
                    // Discount everything the chosen target's perception
                    // sweep will likely cover, linearly down to zero at
                    // the target itself.
                    let center = chosen.center(resolution);
                    for (g, cell) in cells.iter().enumerate() {
                        let d = (cell.center(resolution) - center).norm();
                        if d < self.discount_range {
                            utilities[g] *= d / self.discount_range;
                        }
                    }
                }
                None => {
                    self.targets[i] = None;
                    commands.push(None);
                    labels.push("idle");
                }
            }
        }
        StrategyStep {
            complete: false,
            commands,
            labels,
        }
    }
}
