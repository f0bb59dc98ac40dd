//! Steering pose computation for the shepherding strategy.
//!
//! A robot works its assigned batch in one of two modes:
//!
//! * **Collecting** — the batch is scattered (some member farther than the
//!   compactness threshold from the centroid). The robot moves to a pose
//!   beyond the outlying member, on the line from it through the batch
//!   centroid, then pushes toward the centroid:
//!   `collect = outlier + reach * unit(centroid - outlier)`.
//! * **Herding** — the batch is compact. The robot takes a pose displaced
//!   from its own batch centroid toward the merge target (the heaviest
//!   other batch) and then drives on to that target, sweeping through the
//!   batch mass:
//!   `drive = centroid + reach * unit(target - centroid)`.
//!
//! In both modes `reach = approach_scale * perception_range`, so the
//! steering pose always sits at a fixed stand-off distance. Each decision
//! yields a two-leg waypoint sequence: the steering pose first, then the
//! push destination.

use crate::batching::SwarmBatch;
use crate::geometry::{WorldPoint, WorldVec};
use crate::swarm::VirtualSheep;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Behavioural mode of one robot.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Collecting,
    Herding,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Collecting => "collecting",
            Mode::Herding => "herding",
        }
    }
}

/// Tuning of steering pose computation.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShepherdConfig {
    /// Stand-off distance as a fraction of the perception range.
    pub approach_scale: f64,
    /// Perception range in metres (mirrors the sensor range).
    pub perception_range: f64,
}

impl Default for ShepherdConfig {
    fn default() -> Self {
        ShepherdConfig {
            approach_scale: 0.7,
            perception_range: 10.0,
        }
    }
}

impl ShepherdConfig {
    /// The stand-off distance `approach_scale * perception_range`.
    pub fn reach(&self) -> f64 {
        self.approach_scale * self.perception_range
    }
}

/// One steering decision: a mode and the two-leg waypoint sequence that
/// realises it.
#[derive(Clone, PartialEq, Debug)]
pub struct ShepherdDecision {
    pub mode: Mode,
    /// Steering pose first, push destination second.
    pub waypoints: [WorldPoint; 2],
}

#[derive(Error, Debug, PartialEq)]
pub enum DecisionError {
    #[error("batch has no members")]
    EmptyBatch,
    #[error("geometry is degenerate: {0}")]
    Degenerate(&'static str),
}

/// Whether every member of the batch lies within `threshold` of the batch
/// centroid.
pub fn is_compact(batch: &SwarmBatch, sheep: &[VirtualSheep], threshold: f64) -> bool {
    batch
        .members
        .iter()
        .all(|&i| (sheep[i].position - batch.centroid).norm() <= threshold)
}

/// Collecting: steer beyond the member farthest from the batch centroid
/// (ties broken by lowest sheep index), then push it toward the centroid.
pub fn collecting_decision(
    batch: &SwarmBatch,
    sheep: &[VirtualSheep],
    config: &ShepherdConfig,
) -> Result<ShepherdDecision, DecisionError> {
    if batch.members.is_empty() {
        return Err(DecisionError::EmptyBatch);
    }
    let mut outlier = sheep[batch.members[0]].position;
    let mut best = -1.0_f64;
    for &i in &batch.members {
        let d = (sheep[i].position - batch.centroid).norm();
        if d > best {
            best = d;
            outlier = sheep[i].position;
        }
    }
    let toward_centroid = (batch.centroid - outlier)
        .try_normalize(1e-12)
        .ok_or(DecisionError::Degenerate(
            "outlying member coincides with the batch centroid",
        ))?;
    let collect = outlier + config.reach() * toward_centroid;
    Ok(ShepherdDecision {
        mode: Mode::Collecting,
        waypoints: [collect, batch.centroid],
    })
}

/// Herding: steer to the pose displaced from the own-batch centroid
/// toward the merge target — the heaviest other batch, or, when no other
/// batch exists, the own centroid reflected about the robot so the batch
/// is pushed outward — then drive on to that target. The drive pose lies
/// between the centroid and the target, so the two legs never reverse.
pub fn herding_decision(
    own_index: usize,
    batches: &[SwarmBatch],
    robot_pose: &WorldPoint,
    config: &ShepherdConfig,
) -> Result<ShepherdDecision, DecisionError> {
    let own = batches.get(own_index).ok_or(DecisionError::EmptyBatch)?;
    if own.members.is_empty() {
        return Err(DecisionError::EmptyBatch);
    }
    let centroid = own.centroid;

    // Heaviest other batch; the canonical batch ordering (heaviest first)
    // makes "first other batch" exactly that, deterministically.
    let target = match (0..batches.len()).find(|&b| b != own_index) {
        Some(b) => batches[b].centroid,
        None => {
            // Single batch: reflect its centroid about the robot's
            // position so the drive direction points away from the robot.
            let outward: WorldVec = centroid - robot_pose;
            if outward.norm() < 1e-12 {
                return Err(DecisionError::Degenerate(
                    "robot sits exactly on the only batch centroid",
                ));
            }
            centroid + outward
        }
    };

    let toward_target = (target - centroid).try_normalize(1e-12).ok_or(
        DecisionError::Degenerate("merge target coincides with the batch centroid"),
    )?;
    let drive = centroid + config.reach() * toward_target;
    Ok(ShepherdDecision {
        mode: Mode::Herding,
        waypoints: [drive, target],
    })
}
