//! Per-cluster-head adaptive sampling state machine.
//!
//! Every round the head buffers its own sensed value and everything its
//! children delivered. While the cycle counter has not reached the current
//! period the round is a pure buffering round. On a decision round the head
//! computes the variance of the buffered window: quiet data (variance at or
//! below the threshold) lets the period grow by one, up to the cycle limit;
//! anything else flushes the window, delivering a fresh aggregate upward.
//!
//! Each state is owned by exactly one cluster-head; steps for distinct heads
//! within a round are independent.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::field::{variance, Reading, VarianceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuietTransmit {
    /// Quiet rounds re-send the last aggregate (the default).
    Stale,
    /// Quiet rounds transmit nothing, saving the transmit energy at the
    /// cost of thinner windows upstream.
    Suppress,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdhsParams {
    /// Variance threshold: windows with variance <= t_threshold are quiet.
    pub t_threshold: f64,
    /// Cycle expansion limit, >= 1.
    pub l_limit: u32,
    /// `true` applies the period guard `period <= l_limit` verbatim, letting
    /// the period overshoot to `l_limit + 1` before a forced flush resets it
    /// to 1 (sawtooth). `false` (default) saturates the period at `l_limit`
    /// and keeps it there, flushing once per period.
    #[serde(default)]
    pub literal_mode: bool,
    #[serde(default = "default_quiet_transmit")]
    pub quiet_transmit: QuietTransmit,
    #[serde(default = "default_variance_kind")]
    pub variance_kind: VarianceKind,
}

fn default_quiet_transmit() -> QuietTransmit {
    QuietTransmit::Stale
}

fn default_variance_kind() -> VarianceKind {
    VarianceKind::Population
}

impl AdhsParams {
    // `!(x > 0)` deliberately rejects NaN along with out-of-range values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.t_threshold >= 0.0) {
            return Err(SimError::Config(format!(
                "adhs.t_threshold must be >= 0, got {}",
                self.t_threshold
            )));
        }
        if self.l_limit < 1 {
            return Err(SimError::Config("adhs.l_limit must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for AdhsParams {
    fn default() -> Self {
        Self {
            t_threshold: 15.0,
            l_limit: 4,
            literal_mode: false,
            quiet_transmit: QuietTransmit::Stale,
            variance_kind: VarianceKind::Population,
        }
    }
}

/// What a cluster-head did this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChAction {
    /// Mid-window round: buffer only (plus the stale re-send unless
    /// suppressed).
    BufferOnly,
    /// Quiet decision round: period grew, the stale aggregate was re-sent.
    TransmitLast,
    /// The window was flushed: aggregated, delivered, buffer cleared.
    ProcessAndTransmit { flushed_units: usize },
}

impl ChAction {
    pub fn label(&self) -> String {
        match self {
            ChAction::BufferOnly => "buffer_only".into(),
            ChAction::TransmitLast => "transmit_last".into(),
            ChAction::ProcessAndTransmit { flushed_units } => {
                format!("process_and_transmit:{flushed_units}")
            }
        }
    }
}

/// Mutable controller state for one cluster-head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChState {
    /// Current sampling period (the paper-level measurement rate), >= 1.
    pub period_c: u32,
    /// Position within the current period, in [1, period_c] at round start.
    pub cycle_counter: u32,
    /// All readings (own and children) since the last flush.
    pub window_buffer: Vec<Reading>,
    /// Rounds spanned by the buffer; equals the count of own samples in it.
    pub window_rounds: usize,
    /// Aggregate delivered at the last flush, re-sent on quiet rounds.
    pub last_aggregate: Option<f64>,
    /// Variance computed at the most recent decision round (initially 1).
    pub last_variance: f64,
}

/// Everything the engine needs to price and route one controller step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub action: ChAction,
    /// Window variance, present on decision rounds only.
    pub variance: Option<f64>,
    /// Value transmitted upward this round, if any.
    pub outgoing: Option<f64>,
    /// Child units whose processing is charged this round. Zero on quiet
    /// rounds; the fresh arrivals on a scheduled flush of quiet data; the
    /// entire buffered child backlog on a variance-triggered flush.
    pub processed_child_units: usize,
}

/// Fresh state: period 1, counter 1, empty window, variance 1.
pub fn adhs_init(params: &AdhsParams) -> ChState {
    debug_assert!(params.validate().is_ok());
    ChState {
        period_c: 1,
        cycle_counter: 1,
        window_buffer: Vec::new(),
        window_rounds: 0,
        last_aggregate: None,
        last_variance: 1.0,
    }
}

/// Arithmetic mean of a nonempty value list; the aggregation function.
pub fn aggregate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(SimError::EmptyInput("aggregate"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Advances one cluster-head by one round. `child_readings` are the messages
/// actually received this round; all readings are buffered regardless of the
/// branch taken.
pub fn adhs_step(
    state: &mut ChState,
    own_reading: Reading,
    child_readings: &[Reading],
    params: &AdhsParams,
) -> StepOutcome {
    state.window_buffer.push(own_reading);
    state.window_buffer.extend_from_slice(child_readings);
    state.window_rounds += 1;

    let stale = |state: &ChState| match params.quiet_transmit {
        QuietTransmit::Stale => state.last_aggregate,
        QuietTransmit::Suppress => None,
    };

    if state.cycle_counter < state.period_c {
        state.cycle_counter += 1;
        return StepOutcome {
            action: ChAction::BufferOnly,
            variance: None,
            outgoing: stale(state),
            processed_child_units: 0,
        };
    }

    // Decision round.
    let values: Vec<f64> = state.window_buffer.iter().map(|r| r.value).collect();
    let v = variance(&values, params.variance_kind).expect("window holds at least the own sample");
    state.last_variance = v;
    state.cycle_counter = 1;

    let quiet = v <= params.t_threshold;
    let growth_allowed = if params.literal_mode {
        state.period_c <= params.l_limit
    } else {
        state.period_c < params.l_limit
    };

    if quiet && growth_allowed && state.last_aggregate.is_some() {
        state.period_c += 1;
        return StepOutcome {
            action: ChAction::TransmitLast,
            variance: Some(v),
            outgoing: stale(state),
            processed_child_units: 0,
        };
    }

    // Flush. Quiet flushes (the scheduled one at the period cap, the literal
    // mode overshoot, and the very first decision, which has no aggregate to
    // re-send yet) price only the fresh round: the backlog is redundant by
    // the variance test. A variance-triggered flush processes the entire
    // buffered child backlog.
    let flushed_units = state.window_buffer.len();
    let buffered_child_units = flushed_units - state.window_rounds;
    let processed_child_units = if quiet {
        child_readings.len()
    } else {
        buffered_child_units
    };
    let agg = aggregate(&values).expect("nonempty window");
    state.last_aggregate = Some(agg);
    state.window_buffer.clear();
    state.window_rounds = 0;
    state.period_c = if quiet {
        if growth_allowed {
            // First decision: the refinement still happens.
            state.period_c + 1
        } else if params.literal_mode {
            1
        } else {
            // Capped mode holds the period at the limit, flushing once per
            // period (duty cycle 1 / l_limit).
            state.period_c
        }
    } else {
        1
    };

    StepOutcome {
        action: ChAction::ProcessAndTransmit { flushed_units },
        variance: Some(v),
        outgoing: Some(agg),
        processed_child_units,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t: f64, l: u32) -> AdhsParams {
        AdhsParams {
            t_threshold: t,
            l_limit: l,
            ..AdhsParams::default()
        }
    }

    fn reading(source: usize, round: u64, value: f64) -> Reading {
        Reading {
            source,
            round,
            value,
        }
    }

    fn children(round: u64, values: &[f64]) -> Vec<Reading> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| reading(100 + i, round, v))
            .collect()
    }

    #[test]
    fn init_state() {
        let st = adhs_init(&params(15.0, 4));
        assert_eq!(st.period_c, 1);
        assert_eq!(st.cycle_counter, 1);
        assert!(st.window_buffer.is_empty());
        assert_eq!(st.last_aggregate, None);
        assert_eq!(st.last_variance, 1.0);
        assert_eq!(st, adhs_init(&params(15.0, 4)));
    }

    #[test]
    fn first_quiet_decision_flushes_fresh_and_grows_period() {
        // A fresh head has nothing to re-send, so the first decision always
        // delivers a fresh aggregate; the quiet refinement still applies.
        let p = params(15.0, 4);
        let mut st = adhs_init(&p);
        let out = adhs_step(
            &mut st,
            reading(0, 0, 10.0),
            &children(0, &[10.0, 10.0, 10.0]),
            &p,
        );
        assert_eq!(out.variance, Some(0.0));
        assert_eq!(
            out.action,
            ChAction::ProcessAndTransmit { flushed_units: 4 }
        );
        assert_eq!(out.outgoing, Some(10.0));
        assert_eq!(out.processed_child_units, 3);
        assert_eq!(st.period_c, 2);
        assert_eq!(st.last_aggregate, Some(10.0));
    }

    #[test]
    fn second_quiet_decision_is_transmit_last() {
        let p = params(15.0, 4);
        let mut st = adhs_init(&p);
        adhs_step(
            &mut st,
            reading(0, 0, 10.0),
            &children(0, &[10.0, 10.0, 10.0]),
            &p,
        );
        // period is now 2: one buffering round, then the decision.
        let out = adhs_step(
            &mut st,
            reading(0, 1, 10.0),
            &children(1, &[10.0, 10.0, 10.0]),
            &p,
        );
        assert_eq!(out.action, ChAction::BufferOnly);
        assert_eq!(out.outgoing, Some(10.0));
        assert_eq!(out.processed_child_units, 0);
        let out = adhs_step(
            &mut st,
            reading(0, 2, 10.0),
            &children(2, &[10.0, 10.0, 10.0]),
            &p,
        );
        assert_eq!(out.action, ChAction::TransmitLast);
        assert_eq!(out.outgoing, Some(10.0));
        assert_eq!(st.period_c, 3);
        assert!(!st.window_buffer.is_empty(), "quiet rounds keep the buffer");
    }

    #[test]
    fn loud_window_flushes_and_pins_period() {
        // Window {10,20,30,20}: population variance 50 > 15.
        let p = params(15.0, 4);
        let mut st = adhs_init(&p);
        let out = adhs_step(
            &mut st,
            reading(0, 0, 20.0),
            &children(0, &[10.0, 20.0, 30.0]),
            &p,
        );
        let v = out.variance.unwrap();
        assert!((v - 50.0).abs() < 1e-12);
        assert!(v > 15.0);
        assert_eq!(
            out.action,
            ChAction::ProcessAndTransmit { flushed_units: 4 }
        );
        assert_eq!(st.period_c, 1);
        assert_eq!(out.outgoing, Some(20.0));
    }

    #[test]
    fn buffering_rounds_before_decision() {
        let p = params(15.0, 8);
        let mut st = adhs_init(&p);
        st.period_c = 3;
        st.cycle_counter = 1;
        st.last_aggregate = Some(5.0);
        for round in 0..2 {
            let out = adhs_step(
                &mut st,
                reading(0, round, 5.0),
                &children(round, &[5.0]),
                &p,
            );
            assert_eq!(out.action, ChAction::BufferOnly, "round {round}");
        }
        let out = adhs_step(&mut st, reading(0, 2, 5.0), &children(2, &[5.0]), &p);
        assert_ne!(out.action, ChAction::BufferOnly);
    }

    #[test]
    fn capped_mode_holds_period_and_flushes_each_period() {
        let p = params(15.0, 3);
        let mut st = adhs_init(&p);
        let mut flush_rounds = Vec::new();
        let mut periods = Vec::new();
        for round in 0..40 {
            let out = adhs_step(
                &mut st,
                reading(0, round, 7.0),
                &children(round, &[7.0, 7.0]),
                &p,
            );
            if matches!(out.action, ChAction::ProcessAndTransmit { .. }) {
                flush_rounds.push(round);
            }
            periods.push(st.period_c);
            assert!(st.period_c <= 3, "capped mode never exceeds the limit");
        }
        // Period climbs 2, 3 then stays.
        assert_eq!(periods[0], 2);
        assert!(periods[4..].iter().all(|&c| c == 3));
        // Steady state: one flush every l_limit rounds.
        let steady: Vec<u64> = flush_rounds.iter().copied().filter(|&r| r > 5).collect();
        for w in steady.windows(2) {
            assert_eq!(w[1] - w[0], 3);
        }
    }

    #[test]
    fn literal_mode_saws_through_limit_plus_one() {
        let p = AdhsParams {
            literal_mode: true,
            ..params(15.0, 2)
        };
        let mut st = adhs_init(&p);
        let mut max_period = 0;
        let mut saw_reset = false;
        for round in 0..30 {
            adhs_step(
                &mut st,
                reading(0, round, 7.0),
                &children(round, &[7.0]),
                &p,
            );
            max_period = max_period.max(st.period_c);
            if st.period_c == 1 {
                saw_reset = true;
            }
            assert!(st.period_c <= 3, "literal mode may reach l_limit + 1");
        }
        assert_eq!(max_period, 3);
        assert!(saw_reset, "overshoot must force a reset to 1");
    }

    #[test]
    fn infinite_threshold_capped_reaches_limit_and_stays() {
        let p = params(f64::INFINITY, 5);
        let mut st = adhs_init(&p);
        for round in 0..100 {
            adhs_step(
                &mut st,
                reading(0, round, round as f64),
                &children(round, &[1.0, 9.0]),
                &p,
            );
        }
        assert_eq!(st.period_c, 5);
    }

    #[test]
    fn zero_threshold_with_varying_data_never_adapts() {
        let p = params(0.0, 8);
        let mut st = adhs_init(&p);
        for round in 0..50 {
            let out = adhs_step(
                &mut st,
                reading(0, round, round as f64),
                &children(round, &[0.0, 3.0]),
                &p,
            );
            assert!(matches!(
                out.action,
                ChAction::ProcessAndTransmit { flushed_units: 3 }
            ));
            assert_eq!(st.period_c, 1);
            assert_eq!(out.processed_child_units, 2);
        }
    }

    #[test]
    fn suppress_mode_sends_nothing_on_quiet_rounds() {
        let p = AdhsParams {
            quiet_transmit: QuietTransmit::Suppress,
            ..params(15.0, 4)
        };
        let mut st = adhs_init(&p);
        let out = adhs_step(&mut st, reading(0, 0, 1.0), &children(0, &[1.0]), &p);
        // First decision still flushes (fresh aggregate).
        assert!(out.outgoing.is_some());
        let out = adhs_step(&mut st, reading(0, 1, 1.0), &children(1, &[1.0]), &p);
        assert_eq!(out.action, ChAction::BufferOnly);
        assert_eq!(out.outgoing, None);
        let out = adhs_step(&mut st, reading(0, 2, 1.0), &children(2, &[1.0]), &p);
        assert_eq!(out.action, ChAction::TransmitLast);
        assert_eq!(out.outgoing, None);
    }

    #[test]
    fn triggered_flush_charges_whole_child_backlog() {
        let p = params(15.0, 8);
        let mut st = adhs_init(&p);
        // Round 0: quiet first decision (2 children), period -> 2.
        adhs_step(
            &mut st,
            reading(0, 0, 10.0),
            &children(0, &[10.0, 10.0]),
            &p,
        );
        // Round 1: buffer (2 children).
        adhs_step(
            &mut st,
            reading(0, 1, 10.0),
            &children(1, &[10.0, 10.0]),
            &p,
        );
        // Round 2: decision; a step in the data trips the threshold.
        let out = adhs_step(
            &mut st,
            reading(0, 2, 40.0),
            &children(2, &[40.0, 40.0]),
            &p,
        );
        assert!(out.variance.unwrap() > 15.0);
        // Rounds 1 and 2 are in the window (round 0 flushed), 3 readings each.
        assert_eq!(
            out.action,
            ChAction::ProcessAndTransmit { flushed_units: 6 }
        );
        // Child units across the window: 2 per round * 2 rounds.
        assert_eq!(out.processed_child_units, 4);
        assert_eq!(st.period_c, 1);
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[10.0, 10.0, 10.0]).unwrap(), 10.0);
        assert_eq!(aggregate(&[10.0, 20.0, 30.0]).unwrap(), 20.0);
        assert_eq!(aggregate(&[7.0]).unwrap(), 7.0);
        assert!(matches!(aggregate(&[]), Err(SimError::EmptyInput(_))));
    }
}
