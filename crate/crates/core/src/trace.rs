//! Debug traces of a run's internal decision state, exported as CSV.
//!
//! Traces are opt-in: the engine records them only when handed a
//! [`TraceLog`], so ordinary runs pay nothing. Three streams cover the
//! shepherding pipeline end to end:
//!
//! * **swarm** — every virtual sheep's position and weight, per strategy
//!   step, for offline visualisation of the drifting estimate;
//! * **decisions** — each newly issued goal sequence with its mode label,
//!   one row per robot decision (not per step: robots committed to a
//!   sequence produce no rows);
//! * **monitors** — the per-robot exploration-rate monitor state per
//!   strategy step: the last explored-area delta, both moving averages,
//!   the compactness threshold and whether it just changed.
//!
//! Baseline strategies have no swarm or monitors; their traces contain
//! decision rows only.

use crate::geometry::WorldPoint;

/// One virtual sheep at one strategy step.
#[derive(Clone, PartialEq, Debug)]
pub struct SwarmRow {
    pub tick: u64,
    pub sheep_id: usize,
    pub x: f64,
    pub y: f64,
    pub weight: u32,
}

/// One issued goal sequence.
#[derive(Clone, PartialEq, Debug)]
pub struct DecisionRow {
    pub tick: u64,
    pub robot_id: usize,
    pub mode: &'static str,
    pub waypoints: Vec<WorldPoint>,
}

/// One rate-monitor sample.
#[derive(Clone, PartialEq, Debug)]
pub struct MonitorRow {
    pub tick: u64,
    pub robot_id: usize,
    /// Fraction of reachable free cells explored so far.
    pub explored_pct: f64,
    /// Newest explored-area delta, in cells per strategy step.
    pub delta_e: f64,
    pub fast_average: f64,
    pub slow_average: f64,
    /// Current compactness threshold, in metres.
    pub threshold: f64,
    /// Whether the threshold changed this step.
    pub event: bool,
}

/// All trace rows of one run, in recording order.
#[derive(Default, Clone, PartialEq, Debug)]
pub struct TraceLog {
    pub swarm: Vec<SwarmRow>,
    pub decisions: Vec<DecisionRow>,
    pub monitors: Vec<MonitorRow>,
}

impl TraceLog {
    /// Swarm stream as CSV: `tick,sheep_id,x,y,weight`.
    pub fn swarm_csv(&self) -> String {
        let mut out = String::from("tick,sheep_id,x,y,weight\n");
        for row in &self.swarm {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.tick, row.sheep_id, row.x, row.y, row.weight
            ));
        }
        out
    }

    /// Decision stream as CSV: `tick,robot_id,mode,waypoints`, waypoints
    /// as a semicolon-separated `x y` list so the row stays one field.
    pub fn decisions_csv(&self) -> String {
        let mut out = String::from("tick,robot_id,mode,waypoints\n");
        for row in &self.decisions {
            let waypoints: Vec<String> = row
                .waypoints
                .iter()
                .map(|p| format!("{} {}", p.x, p.y))
                .collect();
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.tick,
                row.robot_id,
                row.mode,
                waypoints.join(";")
            ));
        }
        out
    }

    /// Monitor stream as CSV:
    /// `tick,robot_id,explored_pct,delta_e,fma,sma,d_t,event_flag`.
    pub fn monitors_csv(&self) -> String {
        let mut out = String::from("tick,robot_id,explored_pct,delta_e,fma,sma,d_t,event_flag\n");
        for row in &self.monitors {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.tick,
                row.robot_id,
                row.explored_pct,
                row.delta_e,
                row.fast_average,
                row.slow_average,
                row.threshold,
                row.event as u8
            ));
        }
        out
    }
}
