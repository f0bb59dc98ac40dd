//! Deterministic 2D grid-world simulator and benchmark harness for
//! multi-robot frontier exploration.
//!
//! The crate models exploration as a shepherding problem: frontier cells of
//! a shared occupancy map are condensed into weighted "virtual sheep",
//! clustered into batches, and robots herd the batch assigned to them by
//! steering to poses computed behind or beyond the batch centroid. Two
//! classic baselines (nearest-frontier and coordinated utility assignment)
//! run against the same engine so strategies can be compared run-for-run.
//!
//! Everything is deterministic: a run is fully described by its resolved
//! configuration, and repeating a run with the same configuration produces
//! bit-identical metrics. All randomness flows from per-run seeds through
//! named [`rng`] streams.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] — grid/world frame conversions shared by everything else
//! * [`environment`] — ground-truth world generation and ray-cast sensing
//! * [`mapping`] — shared exploration map and frontier detection
//! * [`swarm`] — virtual-sheep allocation and force-based motion estimation
//! * [`batching`] — clustering of sheep into batches and robot assignment
//! * [`shepherd`] — collecting/herding steering pose computation
//! * [`monitor`] — exploration-rate moving averages and threshold adaptation
//! * [`planner`] — grid A* path planning and robot kinematics
//! * [`strategies`] — the shepherding strategy plus both baselines
//! * [`engine`] — lock-step simulation loop, metrics, suites and aggregates
//! * [`config`] — resolved run configuration, file schema and manifests

pub mod batching;
pub mod config;
pub mod engine;
pub mod environment;
pub mod geometry;
pub mod mapping;
pub mod monitor;
pub mod parallel;
pub mod planner;
pub mod rng;
pub mod shepherd;
pub mod strategies;
pub mod swarm;
pub mod trace;
