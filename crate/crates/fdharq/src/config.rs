//! System parameters, derived decoding thresholds, and link rate parameters.
//!
//! Everything in [`SystemParams`] is linear-scale; convert decibel inputs at
//! the boundary with [`db_to_lin`]. Variances of the Rayleigh links are the
//! mean square channel gains, so a link budget of e.g. 10 dB enters as
//! `var_sr = db_to_lin(10.0)` with unit noise power.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Convert a decibel value to linear scale.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear value to decibels.
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Full parameter set for one operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Source transmit power.
    pub p_s: f64,
    /// Relay transmit power.
    pub p_r: f64,
    /// Mean square gain of the source→destination link.
    pub var_sd: f64,
    /// Mean square gain of the source→relay link.
    pub var_sr: f64,
    /// Mean square gain of the relay→destination link.
    pub var_rd: f64,
    /// Residual self-interference power gain at the relay input after
    /// cancellation; zero models perfect isolation.
    pub var_rr: f64,
    /// Noise power at the relay.
    pub n_r: f64,
    /// Noise power at the destination.
    pub n_d: f64,
    /// Target spectral efficiency in bit/s/Hz.
    pub rate: f64,
    /// Codeword length in tones of one OFDM block.
    pub t_codewords: u32,
    /// Cyclic-prefix overhead in tones; the relay's one-tone forwarding lag
    /// must fit inside it.
    pub tau: u32,
    /// TTI duration in microseconds.
    pub tti_us: f64,
}

impl Default for SystemParams {
    /// Unit baseline: all powers, gains and noises 1, rate 1, 64-tone blocks
    /// with a 4-tone prefix, 125 µs TTIs.
    fn default() -> Self {
        SystemParams {
            p_s: 1.0,
            p_r: 1.0,
            var_sd: 1.0,
            var_sr: 1.0,
            var_rd: 1.0,
            var_rr: 1.0,
            n_r: 1.0,
            n_d: 1.0,
            rate: 1.0,
            t_codewords: 64,
            tau: 4,
            tti_us: 125.0,
        }
    }
}

/// Validation failure; the message names the first violated invariant.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("{0} must not be negative")]
    Negative(&'static str),
    #[error("{0} must be finite")]
    NotFinite(&'static str),
    #[error("tau >= t_codewords (prefix must be shorter than the block)")]
    PrefixTooLong,
}

/// Decoding thresholds implied by the target rate.
///
/// With spectral efficiency `R` over blocks of `T` tones plus a `tau`-tone
/// prefix, a single unaided round must clear `eta`, the combined
/// relay-assisted first transmission (which also spends the prefix tones)
/// must clear `eta_i`, and a second identical-length round at the same total
/// payload must clear `eta_iii`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// `2^R - 1`: single-round SNR threshold.
    pub eta: f64,
    /// `2^(R (T + tau) / T) - 1`: first-round threshold with prefix overhead.
    pub eta_i: f64,
    /// `2^(2R) - 1`: threshold after a second round halves the effective rate.
    pub eta_iii: f64,
}

/// Which interference terms enter the source→relay rate parameter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaSrVariant {
    /// Residual self-interference adds to the relay noise floor (default).
    #[default]
    RsiAware,
    /// Thermal noise only; useful to quantify how much the self-interference
    /// term actually matters at a given operating point.
    NoiseOnly,
}

/// Exponential rate parameters of the three link SNRs.
///
/// Each per-link SNR is exponentially distributed; `alpha_xy` is the rate of
/// the corresponding exponential, i.e. `P(snr_xy > x) = exp(-alpha_xy x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub alpha_sd: f64,
    pub alpha_sr: f64,
    pub alpha_rd: f64,
}

impl SystemParams {
    /// Check all parameter invariants, returning the first violated one.
    pub fn validate(&self) -> Result<&Self, ConfigError> {
        let positives = [
            (self.p_s, "p_s"),
            (self.p_r, "p_r"),
            (self.n_r, "n_r"),
            (self.n_d, "n_d"),
            (self.rate, "rate"),
            (self.tti_us, "tti_us"),
        ];
        for (v, name) in positives {
            if !v.is_finite() {
                return Err(ConfigError::NotFinite(name));
            }
            if v <= 0.0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        let gains = [
            (self.var_sd, "var_sd"),
            (self.var_sr, "var_sr"),
            (self.var_rd, "var_rd"),
            (self.var_rr, "var_rr"),
        ];
        for (v, name) in gains {
            if !v.is_finite() {
                return Err(ConfigError::NotFinite(name));
            }
            if v < 0.0 {
                return Err(ConfigError::Negative(name));
            }
        }
        if self.t_codewords == 0 {
            return Err(ConfigError::NotPositive("t_codewords"));
        }
        if self.tau >= self.t_codewords {
            return Err(ConfigError::PrefixTooLong);
        }
        Ok(self)
    }

    /// Decoding thresholds for the configured rate and block shape.
    pub fn thresholds(&self) -> Thresholds {
        let r = self.rate;
        let stretch = (self.t_codewords + self.tau) as f64 / self.t_codewords as f64;
        Thresholds {
            eta: (r).exp2() - 1.0,
            eta_i: (stretch * r).exp2() - 1.0,
            eta_iii: (2.0 * r).exp2() - 1.0,
        }
    }

    /// Exponential rate parameters with the default self-interference-aware
    /// source→relay model.
    pub fn rate_params(&self) -> RateParams {
        self.rate_params_with(AlphaSrVariant::RsiAware)
    }

    /// Exponential rate parameters with an explicit source→relay variant.
    pub fn rate_params_with(&self, variant: AlphaSrVariant) -> RateParams {
        let sr_floor = match variant {
            AlphaSrVariant::RsiAware => self.p_r * self.var_rr + self.n_r,
            AlphaSrVariant::NoiseOnly => self.n_r,
        };
        RateParams {
            alpha_sd: self.n_d / (self.p_s * self.var_sd),
            alpha_sr: sr_floor / (self.p_s * self.var_sr),
            alpha_rd: self.n_d / (self.p_r * self.var_rd),
        }
    }

    /// Relay amplification gain for a given instantaneous `|h_sr|^2`,
    /// normalising the forwarded signal to the relay transmit power:
    /// `sqrt(p_r / (p_s |h_sr|^2 + p_r var_rr + n_r))`.
    pub fn amplification_factor(&self, h_sr_sq: f64) -> f64 {
        (self.p_r / (self.p_s * h_sr_sq + self.p_r * self.var_rr + self.n_r)).sqrt()
    }
}
