//! Rayleigh block-fading channel draws and per-link SNRs.
//!
//! One [`ChannelDraw`] covers a complete HARQ cycle: the three first-round
//! links plus pre-drawn retransmission-round variants of the two links into
//! the destination. All five gains are sampled on every draw — even when a
//! trial ends up not using the retransmission pair — so a trial always
//! consumes exactly ten uniforms. That fixed budget is what makes estimates
//! under the two [`RedrawPolicy`] options, and under any worker count,
//! sample-for-sample comparable at the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemParams;

/// Minimal complex scalar for channel gains.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        C64 { re, im }
    }

    pub fn from_polar(r: f64, phase: f64) -> Self {
        C64 {
            re: r * phase.cos(),
            im: r * phase.sin(),
        }
    }

    /// Squared magnitude.
    pub fn abs2(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.abs2().sqrt()
    }

    /// Principal argument in `(-pi, pi]`.
    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn conj(self) -> Self {
        C64 {
            re: self.re,
            im: -self.im,
        }
    }
}

impl std::ops::Mul for C64 {
    type Output = C64;
    fn mul(self, rhs: C64) -> C64 {
        C64 {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl std::ops::Add for C64 {
    type Output = C64;
    fn add(self, rhs: C64) -> C64 {
        C64 {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

/// Whether the retransmission round sees the same fading block as the first
/// round or an independently drawn one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedrawPolicy {
    /// Retransmission happens a few TTIs later, inside the same coherence
    /// block: reuse the first-round gains (default).
    #[default]
    Reuse,
    /// Independent fading in the retransmission round.
    Fresh,
}

/// One complete set of fading gains for a HARQ cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelDraw {
    pub h_sd: C64,
    pub h_sr: C64,
    pub h_rd: C64,
    /// Retransmission-round source→destination gain (used under
    /// [`RedrawPolicy::Fresh`]).
    pub h_sd_iii: C64,
    /// Retransmission-round relay→destination gain.
    pub h_rd_iii: C64,
}

impl ChannelDraw {
    /// Gains seen by the retransmission round: `(h_sd, h_rd)` of that round.
    pub fn retransmission_gains(&self, policy: RedrawPolicy) -> (C64, C64) {
        match policy {
            RedrawPolicy::Reuse => (self.h_sd, self.h_rd),
            RedrawPolicy::Fresh => (self.h_sd_iii, self.h_rd_iii),
        }
    }
}

/// Instantaneous per-link SNRs derived from one draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkSnrs {
    /// Source→destination SNR `p_s |h_sd|² / n_d`.
    pub g_sd: f64,
    /// Source→relay SINR with the self-interference floor,
    /// `p_s |h_sr|² / (p_r var_rr + n_r)`.
    pub g_sr: f64,
    /// Relay→destination SNR `p_r |h_rd|² / n_d`.
    pub g_rd: f64,
    /// Phase of the direct-path × relayed-path cross term,
    /// `arg(h_sd · conj(h_sr h_rd))`; it sets where the per-tone SINR ripple
    /// peaks across the block.
    pub theta: f64,
}

/// Circularly symmetric complex Gaussian with mean square gain `var`.
fn complex_gaussian(var: f64, rng: &mut impl Rng) -> C64 {
    // Two uniforms are always consumed, even for a zero-variance link.
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    if var <= 0.0 {
        return C64::ZERO;
    }
    // 1 - u1 ∈ (0, 1] keeps the log finite.
    let r = (-var * (1.0 - u1).ln()).sqrt();
    C64::from_polar(r, std::f64::consts::TAU * u2)
}

/// Draw all five gains for one HARQ cycle.
///
/// Deterministic given the RNG state; consumes exactly ten uniforms.
pub fn draw(params: &SystemParams, rng: &mut impl Rng) -> ChannelDraw {
    ChannelDraw {
        h_sd: complex_gaussian(params.var_sd, rng),
        h_sr: complex_gaussian(params.var_sr, rng),
        h_rd: complex_gaussian(params.var_rd, rng),
        h_sd_iii: complex_gaussian(params.var_sd, rng),
        h_rd_iii: complex_gaussian(params.var_rd, rng),
    }
}

/// Per-link SNRs (first round) for one draw.
pub fn link_snrs(params: &SystemParams, draw: &ChannelDraw) -> LinkSnrs {
    let sr_floor = params.p_r * params.var_rr + params.n_r;
    LinkSnrs {
        g_sd: params.p_s * draw.h_sd.abs2() / params.n_d,
        g_sr: params.p_s * draw.h_sr.abs2() / sr_floor,
        g_rd: params.p_r * draw.h_rd.abs2() / params.n_d,
        theta: (draw.h_sd * (draw.h_sr * draw.h_rd).conj()).arg(),
    }
}

/// RNG positioned at the start of trial `trial` of run `seed`.
///
/// Each trial gets its own counter-mode stream, so any partitioning of the
/// trial index range across workers replays the identical sample set.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
