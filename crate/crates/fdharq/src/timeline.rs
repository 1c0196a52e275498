//! TTI-level timing: HARQ round-trip arithmetic, latency budgets, and the
//! consecutive multi-process schedule.
//!
//! The feedback loop costs four TTIs end to end — transmission, destination
//! processing, feedback, retransmitter processing — and the retransmission
//! itself lands in the slot right after, so a cycle with `k` retransmission
//! rounds completes `2 + 4k` TTIs after it started (decode completion at the
//! end of the destination's processing TTI is the latency endpoint;
//! propagation delays are folded into the processing slots).
//!
//! While one block's feedback loop is in flight, the loop hardware is idle
//! for other blocks: up to `rtt` blocks can run staggered by one TTI each.
//! The retransmission slot of every block is reserved *even when nothing
//! needs retransmitting*, which keeps the schedule static; the price is that
//! more than `rtt` concurrent processes double-book a transmission slot.

use serde::Serialize;
use thiserror::Error;

use crate::analytic::{self, AnalyticError, Procedure};
use crate::config::SystemParams;
use crate::montecarlo::Scheme;
use crate::quad::QuadratureSpec;

/// Per-step TTI costs of the HARQ feedback loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RttModel {
    /// Block (or retransmission) transmission.
    pub tx_ttis: u32,
    /// Destination decode/processing.
    pub rx_proc_ttis: u32,
    /// ACK/NACK feedback slot.
    pub feedback_ttis: u32,
    /// Retransmitter-side NACK processing.
    pub nack_proc_ttis: u32,
}

impl Default for RttModel {
    /// One TTI per step: the 4-TTI loop.
    fn default() -> Self {
        RttModel {
            tx_ttis: 1,
            rx_proc_ttis: 1,
            feedback_ttis: 1,
            nack_proc_ttis: 1,
        }
    }
}

impl RttModel {
    /// Full feedback round trip.
    pub fn rtt_ttis(&self) -> u32 {
        self.tx_ttis + self.rx_proc_ttis + self.feedback_ttis + self.nack_proc_ttis
    }
}

/// Single-round latency of the decode-and-forward reference scheme: the
/// relay must receive the whole block before re-encoding it, so the
/// destination finishes one TTI later than with direct transmission.
pub const SDF_SINGLE_ROUND_TTIS: u32 = 3;

/// TTIs until decode completion with `k` retransmission rounds:
/// `tx + rx_proc + k·rtt` (`2 + 4k` under the default model).
pub fn latency_ttis(model: &RttModel, k: u32) -> u32 {
    model.tx_ttis + model.rx_proc_ttis + k * model.rtt_ttis()
}

/// [`latency_ttis`] in milliseconds.
pub fn latency_ms(model: &RttModel, k: u32, tti_us: f64) -> f64 {
    latency_ttis(model, k) as f64 * tti_us / 1000.0
}

/// Most retransmission rounds that still meet `budget_ms`, or `None` when
/// even the initial transmission cannot finish in time.
pub fn max_rounds(model: &RttModel, budget_ms: f64, tti_us: f64) -> Option<u32> {
    let budget_ttis = (budget_ms * 1000.0 / tti_us + 1e-9).floor() as i64;
    let base = latency_ttis(model, 0) as i64;
    if budget_ttis < base {
        return None;
    }
    Some(((budget_ttis - base) / model.rtt_ttis() as i64) as u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Source,
    Destination,
    /// Relay or source, decided per cycle by the decode outcome.
    Retransmitter,
}

impl NodeRole {
    fn name(self) -> &'static str {
        match self {
            NodeRole::Source => "source",
            NodeRole::Destination => "destination",
            NodeRole::Retransmitter => "retransmitter",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TtiAction {
    Transmit,
    Process,
    Feedback,
    Retransmit,
}

impl TtiAction {
    fn name(self) -> &'static str {
        match self {
            TtiAction::Transmit => "transmit",
            TtiAction::Process => "process",
            TtiAction::Feedback => "feedback",
            TtiAction::Retransmit => "retransmit",
        }
    }
    /// Does this action occupy the shared transmission medium?
    fn occupies_channel(self) -> bool {
        matches!(self, TtiAction::Transmit | TtiAction::Retransmit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScheduleEntry {
    pub tti: u32,
    pub node: NodeRole,
    pub action: TtiAction,
    pub block: u32,
}

/// Static consecutive-assignment schedule over a TTI horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    /// Entries sorted by `(tti, block)`.
    pub entries: Vec<ScheduleEntry>,
    pub horizon_ttis: u32,
    pub n_processes: u32,
}

impl Schedule {
    /// Initial (first-round) transmissions inside the horizon — the
    /// throughput of the schedule in blocks per horizon.
    pub fn transmissions(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.action == TtiAction::Transmit)
            .count()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TimelineError {
    #[error("transmission slots collide at TTI {tti} (blocks {first} and {second})")]
    ScheduleConflict { tti: u32, first: u32, second: u32 },
    #[error("{0} must be positive")]
    InvalidArg(&'static str),
    #[error("no analytic latency model for scheme {0}")]
    UnsupportedScheme(&'static str),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

/// Build the consecutive multi-process schedule: batch `i` starts its
/// `n_processes` blocks on consecutive TTIs from `2·rtt·i`, and every block
/// keeps its reserved retransmission slot one RTT after its start.
///
/// Fails with the first TTI where two channel-occupying slots collide, which
/// happens exactly when `n_processes` exceeds the RTT.
pub fn multiprocess_schedule(
    model: &RttModel,
    n_processes: u32,
    horizon_ttis: u32,
) -> Result<Schedule, TimelineError> {
    if n_processes == 0 {
        return Err(TimelineError::InvalidArg("n_processes"));
    }
    if horizon_ttis == 0 {
        return Err(TimelineError::InvalidArg("horizon_ttis"));
    }
    let rtt = model.rtt_ttis();
    let cycle = 2 * rtt;
    let mut entries = Vec::new();
    let mut batch = 0u32;
    while batch * cycle < horizon_ttis {
        for j in 0..n_processes {
            let t0 = batch * cycle + j;
            let block = batch * n_processes + j;
            let steps = [
                (0, NodeRole::Source, TtiAction::Transmit),
                (model.tx_ttis, NodeRole::Destination, TtiAction::Process),
                (
                    model.tx_ttis + model.rx_proc_ttis,
                    NodeRole::Destination,
                    TtiAction::Feedback,
                ),
                (
                    model.tx_ttis + model.rx_proc_ttis + model.feedback_ttis,
                    NodeRole::Retransmitter,
                    TtiAction::Process,
                ),
                (rtt, NodeRole::Retransmitter, TtiAction::Retransmit),
            ];
            for (off, node, action) in steps {
                let tti = t0 + off;
                if tti < horizon_ttis {
                    entries.push(ScheduleEntry {
                        tti,
                        node,
                        action,
                        block,
                    });
                }
            }
        }
        batch += 1;
    }
    entries.sort_by_key(|e| (e.tti, e.block));

    let mut last_channel_use: Option<&ScheduleEntry> = None;
    for e in &entries {
        if !e.action.occupies_channel() {
            continue;
        }
        if let Some(prev) = last_channel_use {
            if prev.tti == e.tti {
                return Err(TimelineError::ScheduleConflict {
                    tti: e.tti,
                    first: prev.block,
                    second: e.block,
                });
            }
        }
        last_channel_use = Some(e);
    }

    Ok(Schedule {
        entries,
        horizon_ttis,
        n_processes,
    })
}

/// Render a schedule as CSV.
pub fn schedule_csv(s: &Schedule) -> String {
    let mut out = String::from("tti_index,node,action,block_id\n");
    for e in &s.entries {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.tti,
            e.node.name(),
            e.action.name(),
            e.block
        ));
    }
    out
}

/// Latency achieved at one SNR point: the fewest retransmission rounds that
/// reach the target outage within the budget, if any do.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatencyPoint {
    pub snr_db: f64,
    /// Rounds needed, `None` when the target is out of reach in budget.
    pub rounds: Option<u32>,
    pub latency_ms: Option<f64>,
}

fn scheme_outage(
    params: &SystemParams,
    spec: &QuadratureSpec,
    scheme: Scheme,
    k: u32,
) -> Result<Option<f64>, TimelineError> {
    // `None` marks round counts the scheme simply does not have (single-shot
    // schemes past k = 0), as opposed to analytic failures.
    let p = match (scheme, k) {
        (Scheme::S2d1, 0) => Some(analytic::baseline_s2d(params, analytic::S2dRounds::One)),
        (Scheme::S2d1, _) | (Scheme::Af, 1..) | (Scheme::Sdf, 1..) => None,
        (Scheme::S2d2, _) => Some(analytic::s2d_multi_round_outage(params, k)?),
        (Scheme::Af, 0) => Some(analytic::baseline_af(params, spec)?),
        (Scheme::Sdf, 0) => return Err(TimelineError::UnsupportedScheme("sdf")),
        (Scheme::Conventional, 0) | (Scheme::Enhanced, 0) => {
            Some(analytic::outage_phase1(params, spec)?)
        }
        (Scheme::Conventional, _) => Some(analytic::multi_round_system_outage(
            params,
            spec,
            Procedure::Conventional,
            k,
        )?),
        (Scheme::Enhanced, _) => Some(analytic::multi_round_system_outage(
            params,
            spec,
            Procedure::Enhanced,
            k,
        )?),
    };
    Ok(p)
}

/// For each SNR on the grid, the smallest number of retransmission rounds
/// (hence latency) at which `scheme` reaches `target_outage`, subject to
/// `budget_ms`.
///
/// `snr_db` sets both transmit powers; the direct-baseline schemes get the
/// combined power budget (`2P`), matching the equal-total-power comparison
/// convention. Round counts are capped at
/// [`analytic::MAX_MODELLED_ROUNDS`] — the validated range of the
/// multi-round formulas — on top of the budget cap.
pub fn latency_at_reliability(
    params: &SystemParams,
    spec: &QuadratureSpec,
    model: &RttModel,
    scheme: Scheme,
    target_outage: f64,
    budget_ms: f64,
    snr_grid_db: &[f64],
) -> Result<Vec<LatencyPoint>, TimelineError> {
    if !(target_outage > 0.0) {
        return Err(TimelineError::InvalidArg("target_outage"));
    }
    let k_budget = max_rounds(model, budget_ms, params.tti_us);
    let mut out = Vec::with_capacity(snr_grid_db.len());
    for &snr_db in snr_grid_db {
        let mut point = *params;
        point.p_s = crate::config::db_to_lin(snr_db);
        point.p_r = point.p_s;
        if !scheme.uses_relay() {
            point.p_s *= 2.0;
        }
        let mut found = None;
        if let Some(k_budget) = k_budget {
            for k in 0..=k_budget.min(analytic::MAX_MODELLED_ROUNDS) {
                match scheme_outage(&point, spec, scheme, k)? {
                    Some(p) if p <= target_outage => {
                        found = Some(k);
                        break;
                    }
                    _ => {}
                }
            }
        }
        out.push(LatencyPoint {
            snr_db,
            rounds: found,
            latency_ms: found.map(|k| latency_ms(model, k, params.tti_us)),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_loop_arithmetic() {
        let m = RttModel::default();
        assert_eq!(m.rtt_ttis(), 4);
        assert_eq!(latency_ttis(&m, 0), 2);
        assert_eq!(latency_ttis(&m, 1), 6);
        assert_eq!(latency_ttis(&m, 2), 10);
        assert_eq!(latency_ms(&m, 0, 125.0), 0.25);
        assert_eq!(latency_ms(&m, 1, 125.0), 0.75);
        assert_eq!(latency_ms(&m, 2, 125.0), 1.25);
    }

    #[test]
    fn round_budgets() {
        let m = RttModel::default();
        assert_eq!(max_rounds(&m, 1.0, 125.0), Some(1));
        assert_eq!(max_rounds(&m, 1.5, 125.0), Some(2));
        assert_eq!(max_rounds(&m, 0.75, 125.0), Some(1));
        assert_eq!(max_rounds(&m, 0.25, 125.0), Some(0));
        assert_eq!(max_rounds(&m, 0.2, 125.0), None);
    }

    #[test]
    fn four_processes_fill_the_loop_without_conflict() {
        let m = RttModel::default();
        let s = multiprocess_schedule(&m, 4, 8).unwrap();
        assert_eq!(s.transmissions(), 4);
        // Retransmission slots occupy TTIs 4..8, one per block, in order.
        let retx: Vec<_> = s
            .entries
            .iter()
            .filter(|e| e.action == TtiAction::Retransmit)
            .map(|e| (e.tti, e.block))
            .collect();
        assert_eq!(retx, [(4, 0), (5, 1), (6, 2), (7, 3)]);
    }

    #[test]
    fn single_process_degenerates_to_the_basic_cycle() {
        let m = RttModel::default();
        let s = multiprocess_schedule(&m, 1, 5).unwrap();
        let pattern: Vec<_> = s
            .entries
            .iter()
            .map(|e| (e.tti, e.node, e.action))
            .collect();
        assert_eq!(
            pattern,
            [
                (0, NodeRole::Source, TtiAction::Transmit),
                (1, NodeRole::Destination, TtiAction::Process),
                (2, NodeRole::Destination, TtiAction::Feedback),
                (3, NodeRole::Retransmitter, TtiAction::Process),
                (4, NodeRole::Retransmitter, TtiAction::Retransmit),
            ]
        );
    }

    #[test]
    fn consecutive_assignment_quadruples_throughput() {
        let m = RttModel::default();
        let consecutive = multiprocess_schedule(&m, 4, 8).unwrap();
        let one_at_a_time = multiprocess_schedule(&m, 1, 8).unwrap();
        assert_eq!(
            consecutive.transmissions(),
            4 * one_at_a_time.transmissions()
        );
    }

    #[test]
    fn fifth_process_collides_with_reserved_retransmission_slot() {
        let m = RttModel::default();
        let err = multiprocess_schedule(&m, 5, 16).unwrap_err();
        assert_eq!(
            err,
            TimelineError::ScheduleConflict {
                tti: 4,
                first: 0,
                second: 4
            }
        );
    }

    #[test]
    fn csv_shape() {
        let m = RttModel::default();
        let s = multiprocess_schedule(&m, 2, 6).unwrap();
        let csv = schedule_csv(&s);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("tti_index,node,action,block_id"));
        assert_eq!(csv.lines().count(), s.entries.len() + 1);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,source,transmit,0"));
    }

    #[test]
    fn reliability_search_picks_fewest_rounds() {
        let mut p = SystemParams::default();
        p.var_sr = 10.0;
        p.var_rd = 10.0;
        p.var_rr = 0.1;
        let spec = QuadratureSpec::default();
        let m = RttModel::default();
        // Generous target at high SNR: one round must be enough well before
        // the two the budget would allow.
        let pts = latency_at_reliability(&p, &spec, &m, Scheme::Enhanced, 1e-3, 1.5, &[20.0])
            .unwrap();
        assert_eq!(pts.len(), 1);
        let k = pts[0].rounds.expect("20 dB must be feasible at 1e-3");
        assert!(k <= 1, "got {k} rounds");
        assert_eq!(pts[0].latency_ms, Some(latency_ms(&m, k, 125.0)));

        // Same point under a budget that cannot even fit the first round.
        let none = latency_at_reliability(&p, &spec, &m, Scheme::Enhanced, 1e-3, 0.2, &[20.0])
            .unwrap();
        assert_eq!(none[0].rounds, None);
        assert_eq!(none[0].latency_ms, None);
    }

    #[test]
    fn reliability_search_rejects_unmodelled_scheme() {
        let p = SystemParams::default();
        let err = latency_at_reliability(
            &p,
            &QuadratureSpec::default(),
            &RttModel::default(),
            Scheme::Sdf,
            1e-3,
            1.0,
            &[10.0],
        )
        .unwrap_err();
        assert_eq!(err, TimelineError::UnsupportedScheme("sdf"));
    }
}
