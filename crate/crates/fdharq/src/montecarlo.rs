//! Monte-Carlo estimation of the outage probabilities.
//!
//! A trial draws one fading block set, runs the selected scheme's decoding
//! logic, and reports what happened. Trials are indexed, and each index maps
//! to its own counter-mode RNG stream ([`crate::channel::trial_rng`]), so an
//! estimate is a pure function of `(params, scheme, n_trials, seed, policy,
//! criterion)` — how the index range gets chopped across rayon workers (or
//! whether the `parallel` feature is enabled at all) cannot change a single
//! draw.
//!
//! The per-trial decision logic lives in [`trial`], which is exercised
//! path-by-path in tests; the estimators are thin counting loops on top.

use serde::{Deserialize, Serialize};

use crate::analytic::Procedure;
use crate::channel::{self, ChannelDraw, RedrawPolicy};
use crate::config::{SystemParams, Thresholds};
use crate::sinr::{self, Retransmitter};

/// Transmission scheme simulated by [`trial`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Direct link, single shot.
    S2d1,
    /// Direct link with one chase-combined HARQ retransmission over a fresh
    /// block.
    S2d2,
    /// Relay-combined first transmission only, no retransmission.
    Af,
    /// Selective decode-and-forward reference: the relay forwards only if it
    /// decodes, single round.
    Sdf,
    /// Relay-combined first transmission; only a decoding relay may
    /// retransmit.
    Conventional,
    /// Relay-combined first transmission; the source retransmits when the
    /// relay cannot.
    Enhanced,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::S2d1,
        Scheme::S2d2,
        Scheme::Af,
        Scheme::Sdf,
        Scheme::Conventional,
        Scheme::Enhanced,
    ];

    /// Stable lower-case name used in CSV output and CLI arguments.
    pub fn name(self) -> &'static str {
        match self {
            Scheme::S2d1 => "s2d1",
            Scheme::S2d2 => "s2d2",
            Scheme::Af => "af",
            Scheme::Sdf => "sdf",
            Scheme::Conventional => "conventional",
            Scheme::Enhanced => "enhanced",
        }
    }

    /// Whether the scheme rides on the relay-combined first transmission.
    pub fn uses_relay(self) -> bool {
        !matches!(self, Scheme::S2d1 | Scheme::S2d2)
    }
}

/// First-transmission decoding test used by the relay-combined schemes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeCriterion {
    /// Compare the block SINR `ρ` against the prefix-adjusted threshold
    /// (default; this is what the analytic route models).
    #[default]
    BlockSinr,
    /// Sum the exact per-tone mutual information and compare against the
    /// target rate. Slower; quantifies the flat-ripple approximation.
    ExactMi,
}

/// What happened in one simulated HARQ cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    /// First transmission decoded.
    pub phase1_ok: bool,
    /// Relay decoded the source block (meaningful for relay schemes).
    pub sr_ok: bool,
    /// Who sent a retransmission, if anyone.
    pub retransmitter: Retransmitter,
    /// Block delivered by the end of the cycle.
    pub final_ok: bool,
}

fn phase1_decodes(
    params: &SystemParams,
    th: &Thresholds,
    draw: &ChannelDraw,
    rho: f64,
    criterion: DecodeCriterion,
) -> bool {
    match criterion {
        DecodeCriterion::BlockSinr => rho >= th.eta_i,
        DecodeCriterion::ExactMi => sinr::mutual_info_exact(params, draw) >= params.rate,
    }
}

/// Run one scheme over one channel draw.
pub fn trial(
    params: &SystemParams,
    th: &Thresholds,
    scheme: Scheme,
    draw: &ChannelDraw,
    policy: RedrawPolicy,
    criterion: DecodeCriterion,
) -> TrialOutcome {
    let snrs = channel::link_snrs(params, draw);
    match scheme {
        Scheme::S2d1 => {
            let ok = snrs.g_sd >= th.eta;
            TrialOutcome {
                phase1_ok: ok,
                sr_ok: false,
                retransmitter: Retransmitter::None,
                final_ok: ok,
            }
        }
        Scheme::S2d2 => {
            let first = snrs.g_sd >= th.eta;
            if first {
                return TrialOutcome {
                    phase1_ok: true,
                    sr_ok: false,
                    retransmitter: Retransmitter::None,
                    final_ok: true,
                };
            }
            // The retransmission lands in a later coherence block: always a
            // fresh draw, chase-combined at the two-round threshold.
            let g_retx = params.p_s * draw.h_sd_iii.abs2() / params.n_d;
            TrialOutcome {
                phase1_ok: false,
                sr_ok: false,
                retransmitter: Retransmitter::Source,
                final_ok: snrs.g_sd + g_retx >= th.eta_iii,
            }
        }
        Scheme::Sdf => {
            let sr_ok = snrs.g_sr >= th.eta;
            let ok = if sr_ok {
                snrs.g_sd + snrs.g_rd >= th.eta
            } else {
                snrs.g_sd >= th.eta
            };
            TrialOutcome {
                phase1_ok: ok,
                sr_ok,
                retransmitter: Retransmitter::None,
                final_ok: ok,
            }
        }
        Scheme::Af => {
            let rho = sinr::rho_i_from_links(&snrs);
            let ok = phase1_decodes(params, th, draw, rho, criterion);
            TrialOutcome {
                phase1_ok: ok,
                sr_ok: snrs.g_sr >= th.eta,
                retransmitter: Retransmitter::None,
                final_ok: ok,
            }
        }
        Scheme::Conventional | Scheme::Enhanced => {
            let rho = sinr::rho_i_from_links(&snrs);
            let sr_ok = snrs.g_sr >= th.eta;
            if phase1_decodes(params, th, draw, rho, criterion) {
                return TrialOutcome {
                    phase1_ok: true,
                    sr_ok,
                    retransmitter: Retransmitter::None,
                    final_ok: true,
                };
            }
            let who = if sr_ok {
                Retransmitter::Relay
            } else if scheme == Scheme::Enhanced {
                Retransmitter::Source
            } else {
                Retransmitter::None
            };
            let final_ok = match who {
                Retransmitter::None => false,
                _ => {
                    let combined = sinr::phase3_sinr(params, draw, &snrs, who, policy);
                    combined.rho_iii >= th.eta_iii
                }
            };
            TrialOutcome {
                phase1_ok: false,
                sr_ok,
                retransmitter: who,
                final_ok,
            }
        }
    }
}

/// Outage estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: f64,
    /// `sqrt(p_hat (1 - p_hat) / n)`.
    pub stderr: f64,
    pub n_trials: u64,
    pub n_failures: u64,
    /// Fewer than 100 failures observed: the relative error is poorly
    /// controlled and the estimate should not anchor a comparison.
    pub low_confidence: bool,
}

#[derive(Clone, Copy, Default)]
struct Counts {
    failures: u64,
    relay_retx: u64,
    source_retx: u64,
}

impl Counts {
    fn add(self, other: Counts) -> Counts {
        Counts {
            failures: self.failures + other.failures,
            relay_retx: self.relay_retx + other.relay_retx,
            source_retx: self.source_retx + other.source_retx,
        }
    }
}

fn run_range(
    params: &SystemParams,
    th: &Thresholds,
    scheme: Scheme,
    trials: std::ops::Range<u64>,
    seed: u64,
    policy: RedrawPolicy,
    criterion: DecodeCriterion,
) -> Counts {
    let mut c = Counts::default();
    for t in trials {
        let mut rng = channel::trial_rng(seed, t);
        let draw = channel::draw(params, &mut rng);
        let out = trial(params, th, scheme, &draw, policy, criterion);
        c.failures += u64::from(!out.final_ok);
        c.relay_retx += u64::from(out.retransmitter == Retransmitter::Relay);
        c.source_retx += u64::from(out.retransmitter == Retransmitter::Source);
    }
    c
}

const CHUNK: u64 = 1 << 16;

#[cfg(feature = "parallel")]
fn run_counts(
    params: &SystemParams,
    scheme: Scheme,
    n_trials: u64,
    seed: u64,
    policy: RedrawPolicy,
    criterion: DecodeCriterion,
) -> Counts {
    use rayon::prelude::*;
    let th = params.thresholds();
    let n_chunks = n_trials.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|i| {
            let lo = i * CHUNK;
            let hi = (lo + CHUNK).min(n_trials);
            run_range(params, &th, scheme, lo..hi, seed, policy, criterion)
        })
        .reduce(Counts::default, Counts::add)
}

#[cfg(not(feature = "parallel"))]
fn run_counts(
    params: &SystemParams,
    scheme: Scheme,
    n_trials: u64,
    seed: u64,
    policy: RedrawPolicy,
    criterion: DecodeCriterion,
) -> Counts {
    run_counts_serial(params, scheme, n_trials, seed, policy, criterion)
}

fn run_counts_serial(
    params: &SystemParams,
    scheme: Scheme,
    n_trials: u64,
    seed: u64,
    policy: RedrawPolicy,
    criterion: DecodeCriterion,
) -> Counts {
    let th = params.thresholds();
    // Same chunk walk as the parallel version, purely for clarity of
    // equivalence; the fold order cannot affect integer counts.
    let mut total = Counts::default();
    let mut lo = 0;
    while lo < n_trials {
        let hi = (lo + CHUNK).min(n_trials);
        total = total.add(run_range(
            params, &th, scheme, lo..hi, seed, policy, criterion,
        ));
        lo = hi;
    }
    total
}

fn estimate_from(c: Counts, n_trials: u64) -> Estimate {
    let n = n_trials.max(1) as f64;
    let p = c.failures as f64 / n;
    Estimate {
        p_hat: p,
        stderr: (p * (1.0 - p) / n).sqrt(),
        n_trials,
        n_failures: c.failures,
        low_confidence: c.failures < 100,
    }
}

/// Estimate the end-to-end outage of `scheme` over `n_trials` draws.
///
/// Runs on the rayon pool when the `parallel` feature is enabled; the result
/// is identical either way.
pub fn estimate_outage(
    params: &SystemParams,
    scheme: Scheme,
    n_trials: u64,
    seed: u64,
    policy: RedrawPolicy,
    criterion: DecodeCriterion,
) -> Estimate {
    estimate_from(
        run_counts(params, scheme, n_trials, seed, policy, criterion),
        n_trials,
    )
}

/// Single-threaded twin of [`estimate_outage`], always compiled; the
/// benchmark suite compares the two.
pub fn estimate_outage_serial(
    params: &SystemParams,
    scheme: Scheme,
    n_trials: u64,
    seed: u64,
    policy: RedrawPolicy,
    criterion: DecodeCriterion,
) -> Estimate {
    estimate_from(
        run_counts_serial(params, scheme, n_trials, seed, policy, criterion),
        n_trials,
    )
}

/// Observed retransmission activity, in percent of all cycles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CooperationEstimate {
    pub relay_pct: f64,
    pub source_pct: f64,
    pub relay_stderr_pct: f64,
    pub source_stderr_pct: f64,
    pub n_trials: u64,
}

/// Count who actually retransmits under the given procedure.
pub fn estimate_cooperation(
    params: &SystemParams,
    procedure: Procedure,
    n_trials: u64,
    seed: u64,
    policy: RedrawPolicy,
    criterion: DecodeCriterion,
) -> CooperationEstimate {
    let scheme = match procedure {
        Procedure::Conventional => Scheme::Conventional,
        Procedure::Enhanced => Scheme::Enhanced,
    };
    let c = run_counts(params, scheme, n_trials, seed, policy, criterion);
    let n = n_trials.max(1) as f64;
    let pct = |k: u64| k as f64 / n * 100.0;
    let se = |k: u64| {
        let p = k as f64 / n;
        (p * (1.0 - p) / n).sqrt() * 100.0
    };
    CooperationEstimate {
        relay_pct: pct(c.relay_retx),
        source_pct: pct(c.source_retx),
        relay_stderr_pct: se(c.relay_retx),
        source_stderr_pct: se(c.source_retx),
        n_trials,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::db_to_lin;

    fn fig_params() -> SystemParams {
        let mut p = SystemParams::default();
        p.p_s = db_to_lin(5.0);
        p.p_r = p.p_s;
        p.var_sd = db_to_lin(5.0);
        p.var_sr = db_to_lin(10.0);
        p.var_rd = db_to_lin(10.0);
        p.var_rr = db_to_lin(-10.0);
        p
    }

    fn run_trial(p: &SystemParams, scheme: Scheme, t: u64) -> TrialOutcome {
        let th = p.thresholds();
        let draw = channel::draw(p, &mut channel::trial_rng(5, t));
        trial(
            p,
            &th,
            scheme,
            &draw,
            RedrawPolicy::Reuse,
            DecodeCriterion::BlockSinr,
        )
    }

    #[test]
    fn serial_and_parallel_estimates_are_identical() {
        let p = fig_params();
        let a = estimate_outage(
            &p,
            Scheme::Enhanced,
            40_000,
            123,
            RedrawPolicy::Reuse,
            DecodeCriterion::BlockSinr,
        );
        let b = estimate_outage_serial(
            &p,
            Scheme::Enhanced,
            40_000,
            123,
            RedrawPolicy::Reuse,
            DecodeCriterion::BlockSinr,
        );
        assert_eq!(a, b);
    }

    #[test]
    fn enhanced_dominates_conventional_path_by_path() {
        let p = fig_params();
        for t in 0..30_000 {
            let conv = run_trial(&p, Scheme::Conventional, t);
            let enh = run_trial(&p, Scheme::Enhanced, t);
            assert!(
                !(conv.final_ok && !enh.final_ok),
                "trial {t}: conventional delivered but enhanced lost the block"
            );
            // They only diverge on the dead-relay branch.
            if conv.retransmitter != Retransmitter::None {
                assert_eq!(conv.final_ok, enh.final_ok);
            }
        }
    }

    #[test]
    fn harq_round_dominates_single_shot_path_by_path() {
        let p = fig_params();
        for t in 0..30_000 {
            let one = run_trial(&p, Scheme::S2d1, t);
            let two = run_trial(&p, Scheme::S2d2, t);
            assert!(!(one.final_ok && !two.final_ok));
            let af = run_trial(&p, Scheme::Af, t);
            let conv = run_trial(&p, Scheme::Conventional, t);
            assert!(!(af.final_ok && !conv.final_ok));
        }
    }

    #[test]
    fn conventional_dead_relay_loses_the_block() {
        let p = fig_params();
        let th = p.thresholds();
        let mut seen = false;
        for t in 0..200_000 {
            let draw = channel::draw(&p, &mut channel::trial_rng(6, t));
            let out = trial(
                &p,
                &th,
                Scheme::Conventional,
                &draw,
                RedrawPolicy::Reuse,
                DecodeCriterion::BlockSinr,
            );
            if !out.phase1_ok && !out.sr_ok {
                assert_eq!(out.retransmitter, Retransmitter::None);
                assert!(!out.final_ok);
                seen = true;
            }
        }
        assert!(seen, "expected at least one dead-relay cycle");
    }

    #[test]
    fn estimate_matches_direct_baseline_closed_form() {
        let p = fig_params();
        let est = estimate_outage(
            &p,
            Scheme::S2d1,
            200_000,
            7,
            RedrawPolicy::Reuse,
            DecodeCriterion::BlockSinr,
        );
        let want = crate::analytic::baseline_s2d(&p, crate::analytic::S2dRounds::One);
        assert!(
            (est.p_hat - want).abs() < 4.0 * est.stderr,
            "{} vs {want} (se {})",
            est.p_hat,
            est.stderr
        );
        assert!(!est.low_confidence);
    }

    #[test]
    fn low_confidence_flag_trips_on_rare_events() {
        let mut p = fig_params();
        p.p_s = db_to_lin(30.0);
        p.p_r = p.p_s;
        let est = estimate_outage(
            &p,
            Scheme::Enhanced,
            10_000,
            1,
            RedrawPolicy::Reuse,
            DecodeCriterion::BlockSinr,
        );
        assert!(est.low_confidence);
        assert!(est.n_failures < 100);
    }

    #[test]
    fn scheme_names_are_stable() {
        let names: Vec<_> = Scheme::ALL.iter().map(|s| s.name()).collect();
        assert_eq!(
            names,
            ["s2d1", "s2d2", "af", "sdf", "conventional", "enhanced"]
        );
    }
}
