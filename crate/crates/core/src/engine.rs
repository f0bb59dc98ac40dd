//! Discrete-time simulation loop: sensing, mapping, strategy decisions,
//! motion, termination, and metrics.
//!
//! One run is a synchronous lock-step loop at `tick_hz`. Tick `k` covers
//! the simulated interval `[k·dt, (k+1)·dt)`:
//!
//! 1. every robot (in index order) senses and integrates observations;
//! 2. on `frontier_hz` boundaries a fresh frontier snapshot is published;
//! 3. on `swarm_hz` boundaries stale paths are invalidated, the strategy
//!    steps, and goal sequences are driven one leg at a time — a command
//!    that keeps the running manoeuvre's behaviour and shape merely steers
//!    it (the active leg is re-planned only when its goal moves to another
//!    cell), while a changed command restarts from the first leg;
//! 4. a metrics row is recorded for the instant `k·dt`;
//! 5. termination is evaluated — coverage of the reachable cells, an
//!    empty frontier snapshot, a strategy completion signal, or the time
//!    cap (a DNF);
//! 6. every robot advances `dt` seconds of motion.
//!
//! Coverage is measured against the cells actually reachable from the
//! spawn area (flood fill over the ground truth with the planner's
//! traversal rule), so enclosed pockets the robots can never open do not
//! stall termination.
//!
//! Runs are single-threaded and deterministic: an identical resolved
//! config produces bit-identical metrics. [`run_suite`] executes
//! `repeat_count` independent runs — seeded `master_seed + k`, with the
//! world seed re-derived per run — in parallel when the `parallel`
//! feature is enabled, and aggregates completion statistics with type-7
//! quantiles.

use crate::config::{ConfigError, SimConfig};
use crate::environment::{
    generate, sense_into, GenerationError, SenseBuffer, SenseError, WorldGrid,
};
use crate::geometry::{Cell, WorldPoint};
use crate::mapping::{ExplorationMap, FrontierSet, MapCell};
use crate::parallel;
use crate::planner::{plan_path, RobotState};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::strategies::{build_strategy, DecisionInput, Strategy, StrategyStep};
use crate::trace::{DecisionRow, MonitorRow, SwarmRow, TraceLog};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error("sensing failed: {0}")]
    Sense(#[from] SenseError),
    #[error("run {index} failed: {source}")]
    Run {
        index: usize,
        #[source]
        source: Box<EngineError>,
    },
}

/// State of one robot at a recorded instant.
#[derive(Clone, PartialEq, Debug)]
pub struct RobotSample {
    pub x: f64,
    pub y: f64,
    pub mode: &'static str,
}

/// One metrics row: the world state at the instant `time_s`, after that
/// tick's sensing but before its motion.
#[derive(Clone, PartialEq, Debug)]
pub struct TickRecord {
    pub tick: u64,
    pub time_s: f64,
    pub explored_cells: u64,
    /// Fraction of the reachable cells already explored.
    pub explored_fraction: f64,
    pub robots: Vec<RobotSample>,
}

/// Whole-run summary, serialisable as the JSON run report.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: String,
    pub completed: bool,
    /// Simulated completion time; absent on a DNF.
    pub completion_time_s: Option<f64>,
    /// Simulated time when the run ended (equals the time cap on a DNF).
    pub duration_s: f64,
    pub ticks: u64,
    pub explored_cells: u64,
    pub explored_fraction: f64,
    pub reachable_cells: u64,
    pub robot_count: usize,
    pub distance_traveled_m: Vec<f64>,
    pub mode_switches: Vec<u64>,
}

/// Full per-run output: every tick row plus the summary.
#[derive(Clone, PartialEq, Debug)]
pub struct RunMetrics {
    pub ticks: Vec<TickRecord>,
    pub summary: RunSummary,
}

impl RunMetrics {
    /// Render the per-tick rows as CSV with a stable column order:
    /// `tick,time_s,explored_cells,explored_fraction` followed by
    /// `r{i}_x,r{i}_y,r{i}_mode` per robot.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tick,time_s,explored_cells,explored_fraction");
        for i in 0..self.summary.robot_count {
            out.push_str(&format!(",r{i}_x,r{i}_y,r{i}_mode"));
        }
        out.push('\n');
        for row in &self.ticks {
            out.push_str(&format!(
                "{},{},{},{}",
                row.tick, row.time_s, row.explored_cells, row.explored_fraction
            ));
            for robot in &row.robots {
                out.push_str(&format!(",{},{},{}", robot.x, robot.y, robot.mode));
            }
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serialises")
    }
}

/// Flood fill over the ground truth from the spawn cells, using the same
/// traversal rule as the planner (8-connected, no corner cutting).
/// Returns the reachable mask and the reachable cell count.
fn reachable_cells(world: &WorldGrid, seeds: &[Cell]) -> (Vec<bool>, u64) {
    let dims = world.dims();
    let mut mask = vec![false; dims.cell_count()];
    let mut queue = std::collections::VecDeque::new();
    for seed in seeds {
        if let Some(i) = dims.index(seed) {
            if world.is_free(seed) && !mask[i] {
                mask[i] = true;
                queue.push_back(*seed);
            }
        }
    }
    let mut count = queue.len() as u64;
    while let Some(cell) = queue.pop_front() {
        for next in cell.neighbors8() {
            let Some(i) = dims.index(&next) else { continue };
            if mask[i] || !world.is_free(&next) {
                continue;
            }
            let dx = next.x - cell.x;
            let dy = next.y - cell.y;
            if dx != 0
                && dy != 0
                && !(world.is_free(&Cell::new(cell.x + dx, cell.y))
                    && world.is_free(&Cell::new(cell.x, cell.y + dy)))
            {
                continue;
            }
            mask[i] = true;
            count += 1;
            queue.push_back(next);
        }
    }
    (mask, count)
}

/// True when any not-yet-consumed waypoint sits on a cell now known to be
/// occupied; the plan was made before that cell was observed.
fn path_blocked(map: &ExplorationMap, robot: &RobotState, resolution: f64) -> bool {
    robot
        .remaining_waypoints()
        .iter()
        .any(|w| map.state(&Cell::containing(w, resolution)) == MapCell::Occupied)
}

/// Per-robot progress through a committed goal sequence. The robot drives
/// the sequence one leg at a time; only the active leg has a planned path
/// at any moment, so later goals may move freely until their turn comes.
struct Maneuver {
    /// The goal sequence last commanded by the strategy.
    goals: Vec<WorldPoint>,
    /// Index of the goal currently being driven toward.
    leg: usize,
    /// The active leg's path must be (re)planned this tick.
    replan: bool,
}

impl Maneuver {
    fn new() -> Self {
        Maneuver {
            goals: Vec::new(),
            leg: 0,
            replan: false,
        }
    }

    /// The final leg has been reached (or no sequence is committed), so an
    /// idle robot is genuinely out of orders rather than between legs.
    fn on_last_leg(&self) -> bool {
        self.leg + 1 >= self.goals.len()
    }
}

/// Append one strategy step's internal state to the trace log.
fn record_trace(
    log: &mut TraceLog,
    tick: u64,
    strategy: &dyn Strategy,
    step: &StrategyStep,
    explored_pct: f64,
    robot_count: usize,
) {
    if let Some(swarm) = strategy.swarm() {
        for (sheep_id, sheep) in swarm.sheep.iter().enumerate() {
            log.swarm.push(SwarmRow {
                tick,
                sheep_id,
                x: sheep.position.x,
                y: sheep.position.y,
                weight: sheep.weight,
            });
        }
    }
    for robot_id in 0..robot_count {
        if let Some(waypoints) = &step.commands[robot_id] {
            log.decisions.push(DecisionRow {
                tick,
                robot_id,
                mode: step.labels[robot_id],
                waypoints: waypoints.clone(),
            });
        }
        if let Some(monitor) = strategy.monitor(robot_id) {
            log.monitors.push(MonitorRow {
                tick,
                robot_id,
                explored_pct,
                delta_e: monitor.last_delta(),
                fast_average: monitor.fast_average(),
                slow_average: monitor.slow_average(),
                threshold: monitor.threshold(),
                event: monitor.last_event(),
            });
        }
    }
}

/// Execute one simulation run. The config may be unresolved; resolution
/// is applied (and validated) before tick 0.
pub fn run(config: &SimConfig) -> Result<RunMetrics, EngineError> {
    run_impl(config, None)
}

/// Execute one run while recording debug traces of the strategy's
/// internal state (swarm estimate, decisions, rate monitors).
pub fn run_traced(config: &SimConfig) -> Result<(RunMetrics, TraceLog), EngineError> {
    let mut trace = TraceLog::default();
    let metrics = run_impl(config, Some(&mut trace))?;
    Ok((metrics, trace))
}

fn run_impl(config: &SimConfig, mut trace: Option<&mut TraceLog>) -> Result<RunMetrics, EngineError> {
    let config = config.resolve()?;
    let scenario = generate(&config.scenario_spec())?;
    let world = &scenario.world;
    let dims = world.dims();
    let resolution = dims.resolution;
    let consume_tolerance = 0.5 * resolution;

    let sensor = config.sensor.clone();
    let kinematics = config.kinematics_params();
    let planner_config = config.planner_config();
    let tick_hz = config.rates.tick_hz;
    let dt = 1.0 / tick_hz as f64;
    let frontier_every = (tick_hz / config.rates.frontier_hz) as u64;
    let strategy_every = (tick_hz / config.rates.swarm_hz) as u64;
    let strategy_dt = 1.0 / config.rates.swarm_hz as f64;
    let time_cap = config.engine.time_cap;
    let coverage_target = config.engine.coverage_target;

    let spawn_cells: Vec<Cell> = scenario
        .spawn_points
        .iter()
        .map(|p| Cell::containing(p, resolution))
        .collect();
    let (reach_mask, reachable) = reachable_cells(world, &spawn_cells);
    // Guard against float drift pushing an exactly-attainable threshold
    // one cell out of reach.
    let needed = ((coverage_target * reachable as f64) - 1e-9).ceil().max(0.0) as u64;

    let mut robots: Vec<RobotState> = scenario
        .spawn_points
        .iter()
        .map(|p| RobotState::new(*p, kinematics))
        .collect();
    let robot_count = robots.len();

    let mut map = ExplorationMap::unknown(dims);
    let mut explored_reachable = 0u64;
    let mut sensor_rng = stream_rng(config.engine.master_seed, Stream::Sensor);
    let mut sense_buffer = SenseBuffer::default();

    // Built lazily at the first strategy boundary so the monitors start
    // from the initially sensed coverage rather than zero.
    let mut strategy: Option<Box<dyn Strategy>> = None;
    let mut snapshot = FrontierSet {
        cells: Vec::new(),
        map_version: u64::MAX,
    };
    let mut labels: Vec<&'static str> = vec!["idle"; robot_count];
    let mut plan_failed = vec![false; robot_count];
    let mut maneuvers: Vec<Maneuver> = (0..robot_count).map(|_| Maneuver::new()).collect();
    let mut mode_switches = vec![0u64; robot_count];

    let mut rows: Vec<TickRecord> = Vec::new();
    let mut completed = false;
    let mut completion_time = None;
    let mut now = 0.0;

    for tick in 0.. {
        now = tick as f64 / tick_hz as f64;

        for robot in &robots {
            sense_into(
                world,
                &robot.pose,
                &sensor,
                Some(&mut sensor_rng),
                &mut sense_buffer,
            )?;
            for cell in map.integrate_observations(&sense_buffer.observations) {
                if reach_mask[dims.index(&cell).expect("observed cells are in bounds")] {
                    explored_reachable += 1;
                }
            }
        }

        let snapshot_fresh = tick % frontier_every == 0;
        if snapshot_fresh {
            snapshot = map.detect_frontiers();
        }

        let mut done = explored_reachable >= needed || snapshot.is_empty();

        if !done && tick % strategy_every == 0 {
            // Invalidate plans that a newly observed obstacle cut; the
            // active leg is re-routed below without restarting the
            // manoeuvre.
            for (robot, man) in robots.iter_mut().zip(&mut maneuvers) {
                if path_blocked(&map, robot, resolution) {
                    robot.clear_waypoints();
                    man.replan = true;
                }
            }
            let poses: Vec<WorldPoint> = robots.iter().map(|r| r.pose).collect();
            let idle: Vec<bool> = robots
                .iter()
                .zip(&maneuvers)
                .map(|(r, m)| r.is_idle() && !m.replan && m.on_last_leg())
                .collect();
            let strategy = strategy
                .get_or_insert_with(|| build_strategy(&config, map.explored_cells()));
            let step = strategy.step(&DecisionInput {
                map: &map,
                frontiers: &snapshot,
                snapshot_fresh,
                robot_poses: &poses,
                robot_idle: &idle,
                plan_failed: &plan_failed,
                dt: strategy_dt,
            });
            if let Some(log) = trace.as_deref_mut() {
                record_trace(
                    log,
                    tick,
                    strategy.as_ref(),
                    &step,
                    explored_reachable as f64 / reachable as f64,
                    robot_count,
                );
            }
            if step.complete {
                done = true;
            } else {
                for i in 0..robot_count {
                    let prev_label = labels[i];
                    if labels[i] != step.labels[i] && !rows.is_empty() {
                        mode_switches[i] += 1;
                    }
                    labels[i] = step.labels[i];
                    let man = &mut maneuvers[i];
                    if let Some(goals) = &step.commands[i] {
                        if !goals.is_empty() {
                            // A command with the same behaviour and shape as
                            // the running manoeuvre steers it (the goals
                            // track a moving estimate) rather than starting
                            // over; anything else is a fresh manoeuvre.
                            let continuation = step.labels[i] == prev_label
                                && goals.len() == man.goals.len()
                                && !idle[i]
                                && !plan_failed[i];
                            if continuation {
                                let active = Cell::containing(&goals[man.leg], resolution);
                                let planned =
                                    Cell::containing(&man.goals[man.leg], resolution);
                                if active != planned {
                                    man.replan = true;
                                }
                            } else {
                                man.leg = 0;
                                man.replan = true;
                            }
                            man.goals = goals.clone();
                        }
                    }
                    // The active leg is done: move on to the next one.
                    if robots[i].is_idle() && !man.replan && !man.on_last_leg() {
                        man.leg += 1;
                        man.replan = true;
                    }
                    if !man.replan {
                        continue;
                    }
                    man.replan = false;
                    let Some(goal) = man.goals.get(man.leg) else { continue };
                    let others: Vec<WorldPoint> = poses
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, p)| *p)
                        .collect();
                    match plan_path(&map, &poses[i], goal, &planner_config, &others) {
                        Ok(plan) => {
                            let waypoints = plan.waypoints(resolution);
                            if waypoints.len() >= 2 {
                                // The first waypoint is the centre of the
                                // cell the robot already stands in.
                                robots[i].set_waypoints(waypoints[1..].to_vec());
                            } else {
                                robots[i].clear_waypoints();
                            }
                            plan_failed[i] = false;
                        }
                        Err(_) => {
                            robots[i].clear_waypoints();
                            plan_failed[i] = true;
                        }
                    }
                }
            }
        }

        rows.push(TickRecord {
            tick,
            time_s: now,
            explored_cells: map.explored_cells(),
            explored_fraction: explored_reachable as f64 / reachable as f64,
            robots: robots
                .iter()
                .zip(&labels)
                .map(|(r, mode)| RobotSample {
                    x: r.pose.x,
                    y: r.pose.y,
                    mode,
                })
                .collect(),
        });

        if done {
            completed = true;
            completion_time = Some(now);
            break;
        }
        if now >= time_cap {
            break;
        }

        for robot in &mut robots {
            robot.step_motion(dt, consume_tolerance);
        }
    }

    let last = rows.last().expect("at least one tick is recorded");
    let summary = RunSummary {
        strategy: config.strategy_kind().name().to_string(),
        completed,
        completion_time_s: completion_time,
        duration_s: now,
        ticks: rows.len() as u64,
        explored_cells: last.explored_cells,
        explored_fraction: last.explored_fraction,
        reachable_cells: reachable,
        robot_count,
        distance_traveled_m: robots.iter().map(RobotState::distance_traveled).collect(),
        mode_switches,
    };
    Ok(RunMetrics {
        ticks: rows,
        summary,
    })
}

/// Completion-time statistics over the completed runs of a suite,
/// using type-7 (linear interpolation) quantiles.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct CompletionStats {
    pub median_s: f64,
    pub mean_s: f64,
    pub q1_s: f64,
    pub q3_s: f64,
    pub iqr_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

/// Aggregate over one suite of runs.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SuiteAggregate {
    pub run_count: usize,
    pub completed_count: usize,
    pub dnf_count: usize,
    /// Absent when no run completed.
    pub completion: Option<CompletionStats>,
    /// Mean of the per-run total distance (summed over robots), over all
    /// runs including DNFs.
    pub mean_total_distance_m: f64,
}

/// A suite: the per-run metrics in seed order plus the aggregate.
pub struct SuiteResult {
    pub runs: Vec<RunMetrics>,
    pub aggregate: SuiteAggregate,
}

/// Type-7 quantile (the default of most statistics environments) of an
/// ascending-sorted non-empty slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Aggregate summaries into suite statistics.
pub fn aggregate_runs(summaries: &[RunSummary]) -> SuiteAggregate {
    let mut times: Vec<f64> = summaries
        .iter()
        .filter_map(|s| s.completion_time_s)
        .collect();
    times.sort_by(f64::total_cmp);
    let completion = (!times.is_empty()).then(|| {
        let q1 = quantile(&times, 0.25);
        let q3 = quantile(&times, 0.75);
        CompletionStats {
            median_s: quantile(&times, 0.5),
            mean_s: times.iter().sum::<f64>() / times.len() as f64,
            q1_s: q1,
            q3_s: q3,
            iqr_s: q3 - q1,
            min_s: times[0],
            max_s: times[times.len() - 1],
        }
    });
    let total_distance: f64 = summaries
        .iter()
        .map(|s| s.distance_traveled_m.iter().sum::<f64>())
        .sum();
    SuiteAggregate {
        run_count: summaries.len(),
        completed_count: times.len(),
        dnf_count: summaries.len() - times.len(),
        completion,
        mean_total_distance_m: if summaries.is_empty() {
            0.0
        } else {
            total_distance / summaries.len() as f64
        },
    }
}

fn run_suite_impl(config: &SimConfig, parallel: bool) -> Result<SuiteResult, EngineError> {
    let base = config.resolve()?;
    let master = base.engine.master_seed;
    let repeats = base.engine.repeat_count as usize;
    let job = |k: usize| -> Result<RunMetrics, EngineError> {
        let mut cfg = base.clone();
        // Per-run seed schedule: master_seed + k, with the world seed
        // re-derived so every repeat explores an independent world.
        cfg.engine.master_seed = master.wrapping_add(k as u64);
        cfg.scenario.rng_seed = Some(derive_seed(cfg.engine.master_seed, Stream::World));
        run(&cfg)
    };
    let results = if parallel {
        parallel::map_indexed(repeats, job)
    } else {
        parallel::map_indexed_seq(repeats, job)
    };
    let mut runs = Vec::with_capacity(repeats);
    for (index, result) in results.into_iter().enumerate() {
        runs.push(result.map_err(|source| EngineError::Run {
            index,
            source: Box::new(source),
        })?);
    }
    let aggregate = aggregate_runs(
        &runs
            .iter()
            .map(|r| r.summary.clone())
            .collect::<Vec<RunSummary>>(),
    );
    Ok(SuiteResult { runs, aggregate })
}

/// Run `repeat_count` independent runs (seeds `master_seed + k`) on the
/// worker pool when the `parallel` feature is enabled.
pub fn run_suite(config: &SimConfig) -> Result<SuiteResult, EngineError> {
    run_suite_impl(config, true)
}

/// [`run_suite`] forced onto the sequential path, for comparison
/// benchmarks; the results are identical.
pub fn run_suite_sequential(config: &SimConfig) -> Result<SuiteResult, EngineError> {
    run_suite_impl(config, false)
}
