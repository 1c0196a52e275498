//! Instantaneous SINR of the combined first transmission and of the
//! retransmission round.
//!
//! During the first transmission the relay amplifies and forwards each
//! received tone with a one-tone lag, which the cyclic prefix turns into a
//! pure per-tone phase ramp. The destination therefore sees, on tone `i`,
//! the two-path effective channel
//!
//! ```text
//! λ_i = √p_s · ( h_sd + β h_sr h_rd e^{-j 2π i/(T+τ)} )
//! ```
//!
//! plus the forwarded relay noise. The per-tone SINR then ripples around a
//! block-level value `ρ` with amplitude `2|μ|`:
//! `γ_i = ρ + 2|μ| cos(θ + 2π i/(T+τ))`. [`per_tone_sinr`] evaluates `γ_i`
//! from `λ_i` directly; [`phase1_sinr`] produces `(ρ, |μ|, θ)`; the two are
//! tied together by a unit test at 1e-12 rather than by construction, so a
//! modelling slip in either route cannot hide.
//!
//! `ρ` also has a symmetric form in the three per-link SNRs
//! ([`rho_i_from_links`]) which the outage analysis integrates over, and the
//! tone-averaged mutual information is well approximated by pretending every
//! tone sits at `ρ` ([`mutual_info_approx`] vs [`mutual_info_exact`]).
//!
//! A retransmission adds one more maximum-ratio-combined observation of the
//! same codeword through whichever link the retransmitter owns
//! ([`phase3_sinr`]).

use crate::channel::{link_snrs, ChannelDraw, LinkSnrs, RedrawPolicy};
use crate::config::SystemParams;

/// Block-level description of the combined first transmission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseISinr {
    /// Tone-averaged SINR `ρ`.
    pub rho_i: f64,
    /// Ripple amplitude `|μ|`; the AM–GM inequality guarantees `ρ ≥ 2|μ|`.
    pub mu_abs: f64,
    /// Ripple phase.
    pub theta: f64,
}

/// Who sends the retransmission round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Retransmitter {
    Relay,
    Source,
    /// Nobody: the round is skipped and the combiner output stays at `ρ`.
    None,
}

/// Combined SINR after the retransmission round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseIIISinr {
    pub rho_iii: f64,
    pub retransmitter: Retransmitter,
}

fn forwarded_noise(params: &SystemParams, draw: &ChannelDraw, beta: f64) -> f64 {
    let rsi_floor = params.p_r * params.var_rr + params.n_r;
    params.n_d + beta * beta * draw.h_rd.abs2() * rsi_floor
}

/// SINR of tone `i` of the combined first transmission, from the effective
/// two-path channel.
pub fn per_tone_sinr(params: &SystemParams, draw: &ChannelDraw, i: u32) -> f64 {
    let beta = params.amplification_factor(draw.h_sr.abs2());
    let phase = -std::f64::consts::TAU * i as f64 / (params.t_codewords + params.tau) as f64;
    let ramp = crate::channel::C64::from_polar(beta, phase);
    let lambda = draw.h_sd + draw.h_sr * draw.h_rd * ramp;
    params.p_s * lambda.abs2() / forwarded_noise(params, draw, beta)
}

/// Block-level `(ρ, |μ|, θ)` of the combined first transmission.
pub fn phase1_sinr(params: &SystemParams, draw: &ChannelDraw) -> PhaseISinr {
    let beta = params.amplification_factor(draw.h_sr.abs2());
    let noise = forwarded_noise(params, draw, beta);
    let relayed = beta * beta * draw.h_sr.abs2() * draw.h_rd.abs2();
    let rho_i = params.p_s * (draw.h_sd.abs2() + relayed) / noise;
    let mu_abs = params.p_s * beta * (draw.h_sd.abs2() * draw.h_sr.abs2() * draw.h_rd.abs2()).sqrt()
        / noise;
    PhaseISinr {
        rho_i,
        mu_abs,
        theta: link_snrs(params, draw).theta,
    }
}

/// `ρ` expressed in the three per-link SNRs:
/// `(g_sr g_rd + g_sd g_sr + g_sd) / (1 + g_sr + g_rd)`.
///
/// Algebraically identical to [`phase1_sinr`]'s `rho_i`; this is the form
/// the outage integrals are written in.
pub fn rho_i_from_links(s: &LinkSnrs) -> f64 {
    (s.g_sr * s.g_rd + s.g_sd * s.g_sr + s.g_sd) / (1.0 + s.g_sr + s.g_rd)
}

/// Exact mutual information of the first transmission in bit/s/Hz: the
/// destination decodes over the `T` payload tones while the air time also
/// pays for the prefix, hence the `T+τ` normalisation.
pub fn mutual_info_exact(params: &SystemParams, draw: &ChannelDraw) -> f64 {
    let span = (params.t_codewords + params.tau) as f64;
    let mut bits = 0.0;
    for i in 0..params.t_codewords {
        bits += (1.0 + per_tone_sinr(params, draw, i)).log2();
    }
    bits / span
}

/// Flat-ripple approximation of [`mutual_info_exact`]:
/// `(T/(T+τ)) log2(1 + ρ)`.
pub fn mutual_info_approx(params: &SystemParams, draw: &ChannelDraw) -> f64 {
    let rho = phase1_sinr(params, draw).rho_i;
    params.t_codewords as f64 / (params.t_codewords + params.tau) as f64 * (1.0 + rho).log2()
}

/// Combined SINR after the retransmission round: the first-round `ρ` plus
/// the MRC contribution of the retransmitter's link in that round's fading
/// block.
pub fn phase3_sinr(
    params: &SystemParams,
    draw: &ChannelDraw,
    snrs: &LinkSnrs,
    who: Retransmitter,
    policy: RedrawPolicy,
) -> PhaseIIISinr {
    let rho = rho_i_from_links(snrs);
    let (h_sd_iii, h_rd_iii) = draw.retransmission_gains(policy);
    let extra = match who {
        Retransmitter::Relay => params.p_r * h_rd_iii.abs2() / params.n_d,
        Retransmitter::Source => params.p_s * h_sd_iii.abs2() / params.n_d,
        Retransmitter::None => 0.0,
    };
    PhaseIIISinr {
        rho_iii: rho + extra,
        retransmitter: who,
    }
}
