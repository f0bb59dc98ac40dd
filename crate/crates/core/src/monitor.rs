//! Exploration-rate monitoring and compactness-threshold adaptation.
//!
//! Each robot owns a monitor that records the per-step change in explored
//! cells and tracks two moving averages over it: a fast one reacting to
//! the recent past and a slow one capturing the long-term trend. When the
//! fast average drops below the slow one the robot's current behaviour is
//! under-performing its own history, and the compactness threshold is
//! nudged to flip the behaviour selected at the next decision:
//!
//! * dominant mode collecting → raise the threshold (batches qualify as
//!   compact sooner, pushing the robot toward herding);
//! * dominant mode herding → lower the threshold (batches qualify as
//!   scattered sooner, pushing the robot back toward collecting).
//!
//! Adjustments are multiplicative by `adjust_factor` and clamped to the
//! configured bounds. The dominant mode is the majority over the most
//! recent decisions.

use crate::shepherd::Mode;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Tuning of the rate monitor.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorParams {
    /// Window of the fast moving average, in recorded steps.
    pub fast_window: usize,
    /// Window of the slow moving average, in recorded steps.
    pub slow_window: usize,
    /// Multiplicative threshold adjustment per triggered switch.
    pub adjust_factor: f64,
    /// Number of recent decisions considered for the dominant mode.
    pub dominant_window: usize,
    /// Lower bound of the compactness threshold, in metres.
    pub threshold_min: f64,
    /// Upper bound of the compactness threshold, in metres.
    pub threshold_max: f64,
}

impl Default for MonitorParams {
    fn default() -> Self {
        MonitorParams {
            fast_window: 50,
            slow_window: 200,
            adjust_factor: 0.2,
            dominant_window: 50,
            threshold_min: 2.5,
            threshold_max: 120.0,
        }
    }
}

impl MonitorParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.fast_window == 0 || self.slow_window == 0 || self.dominant_window == 0 {
            return Err("moving-average windows must be positive".into());
        }
        if self.fast_window >= self.slow_window {
            return Err("fast_window must be shorter than slow_window".into());
        }
        if !(self.adjust_factor > 0.0) || self.adjust_factor >= 1.0 {
            return Err("adjust_factor must lie in (0, 1)".into());
        }
        if !(self.threshold_min > 0.0) || self.threshold_min > self.threshold_max {
            return Err("threshold bounds must satisfy 0 < min <= max".into());
        }
        Ok(())
    }
}

/// Per-robot exploration-rate monitor and adaptive compactness threshold.
#[derive(Clone, Debug)]
pub struct RateMonitor {
    params: MonitorParams,
    /// Most recent per-step exploration deltas, newest at the back,
    /// bounded by the slow window.
    deltas: VecDeque<f64>,
    previous_explored: u64,
    /// Most recent decision modes, newest at the back.
    modes: VecDeque<Mode>,
    threshold: f64,
    /// Whether the latest `maybe_switch` call changed the threshold.
    last_event: bool,
}

impl RateMonitor {
    /// Create a monitor with the given starting explored-cell count and
    /// initial compactness threshold (clamped to the configured bounds).
    pub fn new(params: MonitorParams, initial_explored: u64, initial_threshold: f64) -> Self {
        RateMonitor {
            params,
            deltas: VecDeque::with_capacity(params.slow_window),
            previous_explored: initial_explored,
            modes: VecDeque::with_capacity(params.dominant_window),
            threshold: initial_threshold.clamp(params.threshold_min, params.threshold_max),
            last_event: false,
        }
    }

    /// Record one step: appends the change in explored cells since the
    /// previous call and evicts history beyond the slow window.
    pub fn record(&mut self, explored_now: u64) {
        let delta = explored_now as f64 - self.previous_explored as f64;
        self.previous_explored = explored_now;
        self.push_delta(delta);
    }

    /// Record a raw delta directly; exposed so the averaging can be driven
    /// by arbitrary streams in harnesses.
    pub fn push_delta(&mut self, delta: f64) {
        if self.deltas.len() == self.params.slow_window {
            self.deltas.pop_front();
        }
        self.deltas.push_back(delta);
    }

    /// Record the mode of one steering decision.
    pub fn push_mode(&mut self, mode: Mode) {
        if self.modes.len() == self.params.dominant_window {
            self.modes.pop_front();
        }
        self.modes.push_back(mode);
    }

    /// Majority mode over the recent decisions; collecting on ties and
    /// before any decision was recorded (a fresh robot's first useful act
    /// is gathering its batch).
    pub fn dominant_mode(&self) -> Mode {
        let herding = self.modes.iter().filter(|m| **m == Mode::Herding).count();
        if herding * 2 > self.modes.len() {
            Mode::Herding
        } else {
            Mode::Collecting
        }
    }

    /// Fast moving average: mean over the newest `fast_window` deltas
    /// (all of them while fewer have been recorded).
    pub fn fast_average(&self) -> f64 {
        self.window_mean(self.params.fast_window)
    }

    /// Slow moving average: mean over the newest `slow_window` deltas.
    pub fn slow_average(&self) -> f64 {
        self.window_mean(self.params.slow_window)
    }

    fn window_mean(&self, window: usize) -> f64 {
        let n = self.deltas.len().min(window);
        if n == 0 {
            return 0.0;
        }
        let start = self.deltas.len() - n;
        let sum: f64 = self.deltas.iter().skip(start).sum();
        sum / n as f64
    }

    /// Current compactness threshold in metres; always within bounds.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// The delta recorded by the most recent `record`/`push_delta` call.
    pub fn last_delta(&self) -> f64 {
        self.deltas.back().copied().unwrap_or(0.0)
    }

    /// Whether the most recent `maybe_switch` call changed the threshold.
    pub fn last_event(&self) -> bool {
        self.last_event
    }

    /// Adjust the threshold when the fast average has fallen below the
    /// slow one. Returns `true` when the threshold actually changed (the
    /// switch events plotted over a run). No history: each call judges
    /// the averages as they stand, so a persisting shortfall keeps
    /// compounding the adjustment until the threshold flips the selected
    /// behaviour or hits a bound.
    pub fn maybe_switch(&mut self, dominant: Mode) -> bool {
        if self.deltas.is_empty() || self.fast_average() >= self.slow_average() {
            self.last_event = false;
            return false;
        }
        let factor = match dominant {
            Mode::Collecting => 1.0 + self.params.adjust_factor,
            Mode::Herding => 1.0 - self.params.adjust_factor,
        };
        let next =
            (self.threshold * factor).clamp(self.params.threshold_min, self.params.threshold_max);
        let changed = next != self.threshold;
        self.threshold = next;
        self.last_event = changed;
        changed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> MonitorParams {
        MonitorParams::default()
    }

    fn monitor() -> RateMonitor {
        RateMonitor::new(params(), 0, 10.0)
    }

    /// Direct-summation oracle over an independently kept full history.
    fn window_mean_oracle(history: &[f64], window: usize) -> f64 {
        let n = history.len().min(window);
        if n == 0 {
            return 0.0;
        }
        history[history.len() - n..].iter().sum::<f64>() / n as f64
    }

    #[test]
    fn single_sample_makes_both_averages_equal_it() {
        let mut m = monitor();
        m.record(5);
        assert_eq!(m.fast_average(), 5.0);
        assert_eq!(m.slow_average(), 5.0);
    }

    #[test]
    fn deltas_are_differences_of_successive_counts() {
        let mut m = monitor();
        m.record(5);
        m.record(12);
        m.record(12);
        assert_eq!(m.deltas, vec![5.0, 7.0, 0.0]);
    }

    #[test]
    fn averages_match_direct_summation_on_random_streams() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let p = params();
        let mut m = monitor();
        let mut history = Vec::new();
        for _ in 0..1000 {
            let delta = rng.gen_range(0.0..50.0);
            m.push_delta(delta);
            history.push(delta);
            let fast = window_mean_oracle(&history, p.fast_window);
            let slow = window_mean_oracle(&history, p.slow_window);
            assert!((m.fast_average() - fast).abs() <= 1e-12);
            assert!((m.slow_average() - slow).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_rate_means_equal_averages_and_no_switch() {
        let mut m = monitor();
        for step in 1..=400_u64 {
            m.record(step * 3);
        }
        assert_eq!(m.fast_average(), 3.0);
        assert_eq!(m.slow_average(), 3.0);
        assert!(!m.maybe_switch(Mode::Collecting));
        assert_eq!(m.threshold(), 10.0);
    }

    #[test]
    fn stalling_exploration_drops_the_fast_average_first() {
        let mut m = monitor();
        // Healthy progress, then a stall.
        for step in 1..=300_u64 {
            m.record(step * 10);
        }
        for _ in 0..60 {
            m.record(3000);
        }
        assert!(m.fast_average() < m.slow_average());
    }

    #[test]
    fn switch_table_is_exhaustive_over_trend_and_mode() {
        // (fast < slow?, dominant mode) -> threshold change.
        let cases = [
            (true, Mode::Collecting, 1.2),
            (true, Mode::Herding, 0.8),
            (false, Mode::Collecting, 1.0),
            (false, Mode::Herding, 1.0),
        ];
        for (under, mode, factor) in cases {
            let mut m = monitor();
            if under {
                // Strong history, weak present.
                for _ in 0..200 {
                    m.push_delta(10.0);
                }
                for _ in 0..50 {
                    m.push_delta(1.0);
                }
                assert!(m.fast_average() < m.slow_average());
            } else {
                for _ in 0..200 {
                    m.push_delta(10.0);
                }
                assert!(m.fast_average() >= m.slow_average());
            }
            let before = m.threshold();
            let changed = m.maybe_switch(mode);
            assert!(
                (m.threshold() - before * factor).abs() <= 1e-12 * before,
                "case {under} {mode:?}: got {}, want {}",
                m.threshold(),
                before * factor
            );
            assert_eq!(changed, factor != 1.0);
        }
    }

    #[test]
    fn threshold_stays_within_bounds_under_random_driving() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let p = params();
        let mut m = RateMonitor::new(p, 0, 10.0);
        for _ in 0..100_000 {
            m.push_delta(rng.gen_range(0.0..20.0));
            let mode = if rng.gen::<bool>() {
                Mode::Collecting
            } else {
                Mode::Herding
            };
            m.maybe_switch(mode);
            assert!(
                m.threshold() >= p.threshold_min && m.threshold() <= p.threshold_max,
                "threshold {} escaped bounds",
                m.threshold()
            );
        }
    }

    #[test]
    fn saturated_threshold_reports_no_event() {
        let p = params();
        let mut m = RateMonitor::new(p, 0, p.threshold_max);
        // Force the under-performing trend.
        for _ in 0..200 {
            m.push_delta(10.0);
        }
        for _ in 0..50 {
            m.push_delta(0.0);
        }
        assert!(m.fast_average() < m.slow_average());
        // Collecting raises, but the threshold is already at the ceiling.
        assert!(!m.maybe_switch(Mode::Collecting));
        assert!(!m.last_event());
        assert_eq!(m.threshold(), p.threshold_max);
        // Herding lowers: a real event.
        assert!(m.maybe_switch(Mode::Herding));
        assert!(m.last_event());
    }

    #[test]
    fn a_sustained_shortfall_compounds_until_a_bound() {
        let p = params();
        let mut m = RateMonitor::new(p, 0, 10.0);
        for _ in 0..200 {
            m.push_delta(10.0);
        }
        for _ in 0..50 {
            m.push_delta(0.0);
        }
        // The shortfall holds from here on (zero deltas keep the fast
        // average at zero while the slow one drains), so every call
        // compounds the factor until the floor stops it.
        let mut expected = 10.0_f64;
        for _ in 0..40 {
            m.push_delta(0.0);
            let before = m.threshold();
            let changed = m.maybe_switch(Mode::Herding);
            expected = (expected * 0.8).max(p.threshold_min);
            assert!((m.threshold() - expected).abs() <= 1e-12);
            assert_eq!(changed, m.threshold() != before);
        }
        assert_eq!(m.threshold(), p.threshold_min);
    }

    #[test]
    fn dominant_mode_is_the_recent_majority_with_collecting_tiebreak() {
        let mut m = monitor();
        assert_eq!(m.dominant_mode(), Mode::Collecting, "empty history");
        m.push_mode(Mode::Herding);
        assert_eq!(m.dominant_mode(), Mode::Herding);
        m.push_mode(Mode::Collecting);
        assert_eq!(m.dominant_mode(), Mode::Collecting, "tie");
        for _ in 0..3 {
            m.push_mode(Mode::Herding);
        }
        assert_eq!(m.dominant_mode(), Mode::Herding);
    }

    #[test]
    fn mode_history_is_bounded_by_the_dominant_window() {
        let p = MonitorParams {
            dominant_window: 4,
            ..params()
        };
        let mut m = RateMonitor::new(p, 0, 10.0);
        for _ in 0..10 {
            m.push_mode(Mode::Herding);
        }
        // Four recent collecting decisions fully displace the herding past.
        for _ in 0..4 {
            m.push_mode(Mode::Collecting);
        }
        assert_eq!(m.dominant_mode(), Mode::Collecting);
    }

    #[test]
    fn initial_threshold_is_clamped_into_bounds() {
        let p = params();
        let m = RateMonitor::new(p, 0, 1e9);
        assert_eq!(m.threshold(), p.threshold_max);
    }
}
