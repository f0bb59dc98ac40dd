//! Run configuration: the TOML schema, defaulting, and resolution.
//!
//! A [`SimConfig`] covers every tunable in the simulator. All fields are
//! optional in the file; unset scalars take the documented defaults and a
//! handful of derived fields (`Option` in the schema) are filled in by
//! [`SimConfig::resolve`]:
//!
//! * `scenario.rng_seed` ← derived from `engine.master_seed`
//! * `swarm.detection_range`, `shepherd.perception_range`,
//!   `utility.discount_range` ← `sensor.range`
//! * `batching.linkage_distance` ← 3 × `swarm.spacing`
//! * `batching.kmeans_clusters` ← `scenario.robot_count`
//! * `planner.goal_tolerance` ← 2 × `swarm.spacing`
//! * `monitor.threshold_min` ← `swarm.spacing`,
//!   `monitor.threshold_max` ← grid diagonal,
//!   `monitor.threshold_initial` ← perception range
//! * `kinematics` ← environment defaults (grass 4 m/s, 2 m/s²;
//!   forest 1 m/s, 1 m/s²)
//!
//! Resolution is idempotent and validates everything, so serialising a
//! resolved config yields a manifest that reloads and re-resolves to the
//! exact same bytes — the reproduction guarantee the benchmark harness
//! relies on.

use crate::batching::{AssignmentParams, BatchingMethod};
use crate::environment::{EnvironmentKind, ScenarioSpec, SensorModel};
use crate::monitor::MonitorParams;
use crate::planner::{Kinematics, PlannerConfig};
use crate::rng::{derive_seed, Stream};
use crate::shepherd::ShepherdConfig;
use crate::swarm::SwarmParams;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

/// Which exploration strategy drives the robots.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Shepherding: virtual-sheep swarm, batching, collect/herd steering.
    Froshe,
    /// Each robot drives to its path-cost-nearest frontier.
    Greedy,
    /// Utility-discounted frontier assignment across robots.
    Utility,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Froshe,
        StrategyKind::Greedy,
        StrategyKind::Utility,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Froshe => "froshe",
            StrategyKind::Greedy => "greedy",
            StrategyKind::Utility => "utility",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                ConfigError::Invalid(format!(
                    "unknown strategy {s:?}; expected froshe, greedy, or utility"
                ))
            })
    }
}

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("could not read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("could not parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// `[scenario]` — the world to generate. Mirrors the generator's spec
/// except that the seed may be left for derivation from the master seed.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: EnvironmentKind,
    pub side_length: f64,
    pub resolution: f64,
    pub tree_density: f64,
    pub tree_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    pub robot_count: usize,
    pub spawn_radius: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let s = ScenarioSpec::default();
        ScenarioSection {
            kind: s.kind,
            side_length: s.side_length,
            resolution: s.resolution,
            tree_density: s.tree_density,
            tree_radius: s.tree_radius,
            rng_seed: None,
            robot_count: s.robot_count,
            spawn_radius: s.spawn_radius,
        }
    }
}

/// `[rates]` — all in simulated-time Hz. The tick rate drives sensing and
/// motion; frontier snapshots publish at `frontier_hz`; strategies (and
/// the swarm estimator) step at `swarm_hz`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    pub tick_hz: u32,
    pub frontier_hz: u32,
    pub swarm_hz: u32,
}

impl Default for Rates {
    fn default() -> Self {
        Rates {
            tick_hz: 10,
            frontier_hz: 1,
            swarm_hz: 10,
        }
    }
}

/// `[swarm]` — allocation spacing and force gains.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmSection {
    pub spacing: f64,
    pub noise: f64,
    pub cluster_gain: f64,
    pub predator_gain: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_range: Option<f64>,
}

impl Default for SwarmSection {
    fn default() -> Self {
        let p = SwarmParams::default();
        SwarmSection {
            spacing: p.spacing,
            noise: p.noise,
            cluster_gain: p.cluster_gain,
            predator_gain: p.predator_gain,
            detection_range: None,
        }
    }
}

/// `[batching]` — clustering method and assignment scoring.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchingSection {
    pub method: BatchingMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linkage_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmeans_clusters: Option<usize>,
    pub kmeans_iterations: usize,
    pub gain_weight: f64,
    pub distance_weight: f64,
    pub exclusive: bool,
}

impl Default for BatchingSection {
    fn default() -> Self {
        let a = AssignmentParams::default();
        BatchingSection {
            method: BatchingMethod::Linkage,
            linkage_distance: None,
            kmeans_clusters: None,
            kmeans_iterations: 20,
            gain_weight: a.gain_weight,
            distance_weight: a.distance_weight,
            exclusive: a.exclusive,
        }
    }
}

/// `[shepherd]` — steering stand-off tuning.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShepherdSection {
    pub approach_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perception_range: Option<f64>,
}

impl Default for ShepherdSection {
    fn default() -> Self {
        ShepherdSection {
            approach_scale: ShepherdConfig::default().approach_scale,
            perception_range: None,
        }
    }
}

/// `[monitor]` — exploration-rate windows and threshold adaptation.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorSection {
    pub fast_window: usize,
    pub slow_window: usize,
    pub adjust_factor: f64,
    pub dominant_window: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_initial: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_max: Option<f64>,
}

impl Default for MonitorSection {
    fn default() -> Self {
        let m = MonitorParams::default();
        MonitorSection {
            fast_window: m.fast_window,
            slow_window: m.slow_window,
            adjust_factor: m.adjust_factor,
            dominant_window: m.dominant_window,
            threshold_initial: None,
            threshold_min: None,
            threshold_max: None,
        }
    }
}

/// `[planner]` — traversability tuning.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub unknown_cost_factor: f64,
    pub inflation_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal_tolerance: Option<f64>,
}

impl Default for PlannerSection {
    fn default() -> Self {
        let p = PlannerConfig::default();
        PlannerSection {
            unknown_cost_factor: p.unknown_cost_factor,
            inflation_radius: p.inflation_radius,
            goal_tolerance: None,
        }
    }
}

/// `[utility]` — the utility-coordinated baseline.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilitySection {
    /// Weight of a frontier's utility against its path cost (in cell
    /// steps) in the assignment score.
    pub utility_weight: f64,
    /// Frontiers within this range of an assigned target lose utility
    /// linearly with distance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discount_range: Option<f64>,
}

impl Default for UtilitySection {
    fn default() -> Self {
        UtilitySection {
            utility_weight: 1.0,
            discount_range: None,
        }
    }
}

/// `[kinematics]` — speed limits; unset fields take the environment
/// defaults.
#[derive(Clone, Copy, PartialEq, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_accel: Option<f64>,
}

/// `[engine]` — run protocol.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    /// Simulated-time cap in seconds; a run still going is a DNF.
    pub time_cap: f64,
    /// Fraction of reachable cells that counts as full coverage.
    pub coverage_target: f64,
    /// Master seed all per-subsystem streams derive from.
    pub master_seed: u64,
    /// Independent repetitions in a suite, seeded `master_seed + k`.
    pub repeat_count: u32,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            time_cap: 3600.0,
            coverage_target: 0.99,
            master_seed: 0,
            repeat_count: 1,
        }
    }
}

/// A complete run configuration. See the module docs for the derivation
/// rules applied by [`SimConfig::resolve`].
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub strategy: Option<StrategyKind>,
    pub scenario: ScenarioSection,
    pub sensor: SensorModel,
    pub rates: Rates,
    pub swarm: SwarmSection,
    pub batching: BatchingSection,
    pub shepherd: ShepherdSection,
    pub monitor: MonitorSection,
    pub planner: PlannerSection,
    pub utility: UtilitySection,
    pub kinematics: KinematicsSection,
    pub engine: EngineSection,
}

impl SimConfig {
    /// Parse and resolve a config from TOML text.
    pub fn from_toml_str(text: &str) -> Result<SimConfig, ConfigError> {
        let raw: SimConfig = toml::from_str(text)?;
        raw.resolve()
    }

    /// Parse and resolve a config file.
    pub fn from_path(path: &Path) -> Result<SimConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        SimConfig::from_toml_str(&text)
    }

    /// Serialise the config; a resolved config round-trips byte-exactly.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Fill every derived field and validate the result. Idempotent:
    /// resolving a resolved config changes nothing.
    pub fn resolve(&self) -> Result<SimConfig, ConfigError> {
        let mut cfg = self.clone();
        cfg.strategy.get_or_insert(StrategyKind::Froshe);
        cfg.scenario
            .rng_seed
            .get_or_insert_with(|| derive_seed(cfg.engine.master_seed, Stream::World));

        let range = cfg.sensor.range;
        cfg.swarm.detection_range.get_or_insert(range);
        cfg.shepherd.perception_range.get_or_insert(range);
        cfg.utility.discount_range.get_or_insert(range);

        let spacing = cfg.swarm.spacing;
        cfg.batching.linkage_distance.get_or_insert(3.0 * spacing);
        cfg.batching
            .kmeans_clusters
            .get_or_insert(cfg.scenario.robot_count);
        cfg.planner.goal_tolerance.get_or_insert(2.0 * spacing);

        cfg.monitor.threshold_min.get_or_insert(spacing);
        let diagonal = cfg.scenario_spec().grid_dims().diagonal();
        cfg.monitor.threshold_max.get_or_insert(diagonal);
        let perception = cfg
            .shepherd
            .perception_range
            .expect("perception range filled above");
        cfg.monitor.threshold_initial.get_or_insert(perception);

        let (speed, accel) = match cfg.scenario.kind {
            EnvironmentKind::GrassPlane => (4.0, 2.0),
            EnvironmentKind::Forest => (1.0, 1.0),
        };
        cfg.kinematics.max_speed.get_or_insert(speed);
        cfg.kinematics.max_accel.get_or_insert(accel);

        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));

        self.scenario_spec()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.sensor
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let r = &self.rates;
        if r.tick_hz == 0 || r.frontier_hz == 0 || r.swarm_hz == 0 {
            return bad("all rates must be positive".into());
        }
        if r.tick_hz % r.swarm_hz != 0 || r.tick_hz % r.frontier_hz != 0 {
            return bad(format!(
                "tick_hz ({}) must be a multiple of swarm_hz ({}) and frontier_hz ({})",
                r.tick_hz, r.swarm_hz, r.frontier_hz
            ));
        }
        if r.swarm_hz < r.frontier_hz {
            return bad("swarm_hz must be at least frontier_hz".into());
        }

        self.swarm_params().validate().map_err(ConfigError::Invalid)?;
        self.monitor_params()
            .validate()
            .map_err(ConfigError::Invalid)?;
        let initial = self.monitor.threshold_initial.expect("resolved");
        if !(initial > 0.0) || !initial.is_finite() {
            return bad("monitor.threshold_initial must be positive".into());
        }
        self.planner_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let b = &self.batching;
        if !(b.linkage_distance.expect("resolved") > 0.0) {
            return bad("batching.linkage_distance must be positive".into());
        }
        if b.kmeans_clusters.expect("resolved") == 0 || b.kmeans_iterations == 0 {
            return bad("batching.kmeans_clusters and kmeans_iterations must be positive".into());
        }
        if b.gain_weight < 0.0 || b.distance_weight < 0.0 {
            return bad("batching weights must be non-negative".into());
        }

        let s = &self.shepherd;
        if !(s.approach_scale > 0.0) || !(s.perception_range.expect("resolved") > 0.0) {
            return bad("shepherd approach_scale and perception_range must be positive".into());
        }

        let u = &self.utility;
        if u.utility_weight < 0.0 || !(u.discount_range.expect("resolved") >= 0.0) {
            return bad("utility weights must be non-negative".into());
        }

        let k = self.kinematics_params();
        if !(k.max_speed > 0.0) || !(k.max_accel > 0.0) {
            return bad("kinematics limits must be positive".into());
        }

        let e = &self.engine;
        if !(e.time_cap >= 0.0) {
            return bad("engine.time_cap must be non-negative".into());
        }
        if !(e.coverage_target > 0.0 && e.coverage_target <= 1.0) {
            return bad("engine.coverage_target must lie in (0, 1]".into());
        }
        if e.repeat_count == 0 {
            return bad("engine.repeat_count must be positive".into());
        }
        Ok(())
    }

    // --- domain-struct views (require a resolved config) ----------------

    pub fn strategy_kind(&self) -> StrategyKind {
        self.strategy.expect("config resolved")
    }

    pub fn scenario_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            kind: self.scenario.kind,
            side_length: self.scenario.side_length,
            resolution: self.scenario.resolution,
            tree_density: self.scenario.tree_density,
            tree_radius: self.scenario.tree_radius,
            rng_seed: self.scenario.rng_seed.unwrap_or(0),
            robot_count: self.scenario.robot_count,
            spawn_radius: self.scenario.spawn_radius,
        }
    }

    pub fn swarm_params(&self) -> SwarmParams {
        SwarmParams {
            spacing: self.swarm.spacing,
            noise: self.swarm.noise,
            cluster_gain: self.swarm.cluster_gain,
            predator_gain: self.swarm.predator_gain,
            detection_range: self.swarm.detection_range.expect("config resolved"),
            rate_hz: self.rates.swarm_hz,
        }
    }

    pub fn assignment_params(&self) -> AssignmentParams {
        AssignmentParams {
            gain_weight: self.batching.gain_weight,
            distance_weight: self.batching.distance_weight,
            exclusive: self.batching.exclusive,
        }
    }

    pub fn shepherd_config(&self) -> ShepherdConfig {
        ShepherdConfig {
            approach_scale: self.shepherd.approach_scale,
            perception_range: self.shepherd.perception_range.expect("config resolved"),
        }
    }

    pub fn monitor_params(&self) -> MonitorParams {
        MonitorParams {
            fast_window: self.monitor.fast_window,
            slow_window: self.monitor.slow_window,
            adjust_factor: self.monitor.adjust_factor,
            dominant_window: self.monitor.dominant_window,
            threshold_min: self.monitor.threshold_min.expect("config resolved"),
            threshold_max: self.monitor.threshold_max.expect("config resolved"),
        }
    }

    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            unknown_cost_factor: self.planner.unknown_cost_factor,
            inflation_radius: self.planner.inflation_radius,
            goal_tolerance: self.planner.goal_tolerance.expect("config resolved"),
        }
    }

    pub fn kinematics_params(&self) -> Kinematics {
        Kinematics {
            max_speed: self.kinematics.max_speed.expect("config resolved"),
            max_accel: self.kinematics.max_accel.expect("config resolved"),
        }
    }
}

/// `[matrix]` — the cartesian experiment grid.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixSpec {
    pub environments: Vec<EnvironmentKind>,
    pub side_lengths: Vec<f64>,
    pub robot_counts: Vec<usize>,
    pub strategies: Vec<StrategyKind>,
    pub repeat_count: u32,
    pub master_seed: u64,
}

impl Default for MatrixSpec {
    fn default() -> Self {
        MatrixSpec {
            environments: vec![EnvironmentKind::GrassPlane],
            side_lengths: vec![40.0],
            robot_counts: vec![1],
            strategies: vec![StrategyKind::Froshe],
            repeat_count: 1,
            master_seed: 0,
        }
    }
}

/// A matrix file: the grid plus a base config every cell starts from.
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentMatrix {
    pub matrix: MatrixSpec,
    pub base: SimConfig,
}

/// One expanded matrix cell: a directory-safe name and a resolved config.
#[derive(Clone, PartialEq, Debug)]
pub struct MatrixCell {
    pub name: String,
    pub config: SimConfig,
}

fn format_metres(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn environment_tag(kind: EnvironmentKind) -> &'static str {
    match kind {
        EnvironmentKind::GrassPlane => "grass",
        EnvironmentKind::Forest => "forest",
    }
}

impl ExperimentMatrix {
    pub fn from_toml_str(text: &str) -> Result<ExperimentMatrix, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<ExperimentMatrix, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ExperimentMatrix::from_toml_str(&text)
    }

    /// Expand the grid into named, resolved cell configs (row-major over
    /// environments × side lengths × robot counts × strategies).
    pub fn expand(&self) -> Result<Vec<MatrixCell>, ConfigError> {
        let m = &self.matrix;
        if m.environments.is_empty()
            || m.side_lengths.is_empty()
            || m.robot_counts.is_empty()
            || m.strategies.is_empty()
        {
            return Err(ConfigError::Invalid(
                "matrix axes must all be non-empty".into(),
            ));
        }
        let mut cells = Vec::new();
        for &kind in &m.environments {
            for &side in &m.side_lengths {
                for &robots in &m.robot_counts {
                    for &strategy in &m.strategies {
                        let mut cfg = self.base.clone();
                        cfg.strategy = Some(strategy);
                        cfg.scenario.kind = kind;
                        cfg.scenario.side_length = side;
                        cfg.scenario.robot_count = robots;
                        cfg.engine.master_seed = m.master_seed;
                        cfg.engine.repeat_count = m.repeat_count;
                        // Per-environment kinematics and seeds re-derive.
                        cfg.kinematics = self.base.kinematics;
                        cfg.scenario.rng_seed = self.base.scenario.rng_seed;
                        let name = format!(
                            "{}_{}m_{}r_{}",
                            environment_tag(kind),
                            format_metres(side),
                            robots,
                            strategy
                        );
                        cells.push(MatrixCell {
                            name,
                            config: cfg.resolve()?,
                        });
                    }
                }
            }
        }
        Ok(cells)
    }
}
