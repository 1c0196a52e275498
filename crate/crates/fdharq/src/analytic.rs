//! Semi-analytic outage probabilities.
//!
//! Every outage event in the system is a probability over the three
//! independent exponential link SNRs `(g_sd, g_sr, g_rd)` with rate
//! parameters `(alpha_sd, alpha_sr, alpha_rd)`. Each event is evaluated
//! along **two independent routes**:
//!
//! 1. a *reduced* form — one outer quadrature over a closed-form integrand
//!    built from K₁ and Dawson functions, obtained by integrating two of the
//!    three variables analytically;
//! 2. a *region* form — direct quadrature of the probability region over
//!    `(g_sr, g_rd)` with the `g_sd` dimension integrated exactly.
//!
//! The two routes share no code beyond the quadrature engine. The public
//! `outage_*` entry points evaluate both and insist they agree within
//! [`AGREEMENT_TOL`]; on disagreement the region value wins, since it has no
//! special-function machinery to get wrong.
//!
//! The reduced form of the combined-first-transmission CDF has a removable
//! interior singularity when `alpha_sd > alpha_rd`: a factor in its
//! denominator crosses zero at a point `y*` where the paired numerator also
//! vanishes. [`SingularityPolicy`] selects between splitting the integration
//! range exactly at `y*` (interior-node rules never evaluate there) and
//! abandoning the reduced form for the region integral.

use std::cell::Cell;

use thiserror::Error;

use crate::config::{RateParams, SystemParams};
use crate::quad::{self, QuadOutcome, QuadratureSpec, SingularityPolicy};
use crate::special;

/// Maximum allowed |reduced − region| before the region value is preferred.
pub const AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticError {
    /// An outer quadrature failed to reach its tolerance; `residual` is the
    /// summed panel error estimate at the point it gave up.
    #[error("quadrature for {context} did not converge (residual {residual:.3e})")]
    NonConvergence { context: &'static str, residual: f64 },
    /// Multi-round evaluation was asked for more rounds than the model
    /// supports.
    #[error("outage model supports at most {max} retransmission rounds, got {got}")]
    UnsupportedRounds { got: u32, max: u32 },
}

type Result<T> = std::result::Result<T, AnalyticError>;

fn converged(out: QuadOutcome, context: &'static str) -> Result<f64> {
    if out.converged {
        Ok(out.value)
    } else {
        Err(AnalyticError::NonConvergence {
            context,
            residual: out.residual,
        })
    }
}

/// Tolerances for an inner quadrature nested inside an outer one: tight
/// enough that inner noise stays below the outer error gauge.
fn inner_tols(spec: &QuadratureSpec) -> (f64, f64) {
    (spec.abs_tol * 1e-2, spec.rel_tol * 0.1)
}

// ---------------------------------------------------------------------------
// Combined first transmission: CDF of the block SINR ρ.
// ---------------------------------------------------------------------------

/// Reduced (single outer quadrature) form of `P(ρ < x)`.
///
/// With `A = alpha_sr·alpha_rd·x(1+x)`:
///
/// ```text
/// P(ρ < x) = 1 - 2 e^{-(alpha_sr+alpha_rd) x} √A K₁(2√A)
///            - alpha_sr·alpha_rd [ e^{-alpha_sd x} J₁ + J₂ ]
/// J₁ = ∫₀ˣ e^{-alpha_sr y} / c(y) dy
/// J₂ = ∫ₓ^∞ e^{-alpha_sr y} (e^{-alpha_sd x} - e^{-w(y)}) / c(y) dy
/// c(y) = alpha_rd + alpha_sd (x-y)/(1+y)
/// w(y) = alpha_rd x (1+y)/(y-x)
/// ```
///
/// `c` crosses zero at `y* = (x alpha_sd + alpha_rd)/(alpha_sd - alpha_rd)`
/// when `alpha_sd > alpha_rd`; there `w(y*) = alpha_sd x` exactly, so the
/// `J₂` numerator vanishes with it and the ratio stays finite. Under
/// [`SingularityPolicy::SplitAtPole`] the `J₂` range is split at `y*`; under
/// the default fallback policy this function delegates to
/// [`phase1_cdf_region`] whenever the crossing exists.
pub fn phase1_cdf_reduced(a: &RateParams, spec: &QuadratureSpec, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let RateParams {
        alpha_sd: asd,
        alpha_sr: asr,
        alpha_rd: ard,
    } = *a;
    let pole = asd > ard;
    if pole && spec.singularity_policy == SingularityPolicy::FallbackTo2D {
        return phase1_cdf_region(a, spec, x);
    }

    let big_a = asr * ard * x * (1.0 + x);
    let t1 = 2.0 * (-(asr + ard) * x).exp() * big_a.sqrt() * special::k1(2.0 * big_a.sqrt());

    let c = move |y: f64| ard + asd * (x - y) / (1.0 + y);
    let (in_abs, in_rel) = inner_tols(spec);

    let j1 = quad::integrate(|y| (-asr * y).exp() / c(y), 0.0, x, in_abs, in_rel);

    // Paired integrand of J₂, written with expm1 so the cancellation at the
    // removable point is carried out in the exponent, not between two
    // nearly equal exponentials.
    let scale = (-asd * x).exp();
    let f2 = move |y: f64| {
        let w = ard * x * (1.0 + y) / (y - x);
        -(-(w - asd * x)).exp_m1() * scale * (-asr * y).exp() / c(y)
    };
    let upper = quad::tail_upper_limit(x, asr);
    let j2 = if pole {
        let y_star = (x * asd + ard) / (asd - ard);
        if y_star < upper {
            let left = quad::integrate_multiscale(f2, x, y_star, x, in_abs, in_rel);
            let right = quad::integrate_multiscale(f2, y_star, upper, x, in_abs, in_rel);
            QuadOutcome {
                value: left.value + right.value,
                residual: left.residual + right.residual,
                converged: left.converged && right.converged,
            }
        } else {
            quad::integrate_multiscale(f2, x, upper, x, in_abs, in_rel)
        }
    } else {
        quad::integrate_multiscale(f2, x, upper, x, in_abs, in_rel)
    };

    let j1 = converged(j1, "combined-transmission CDF, reduced form (0, x)")?;
    let j2 = converged(j2, "combined-transmission CDF, reduced form (x, ∞)")?;
    Ok(1.0 - t1 - asr * ard * (scale * j1 + j2))
}

/// Largest `g_rd` for which the `g_sd` event region is non-empty at a given
/// `g_sr = y`: unbounded for `y ≤ x`, else `x(1+y)/(y-x)`.
fn phase1_z_limit(x: f64, y: f64, z_tail: f64) -> f64 {
    if y <= x {
        z_tail
    } else {
        (x * (1.0 + y) / (y - x)).min(z_tail)
    }
}

/// Region form of `P(ρ < x)`: quadrature over `(g_sr, g_rd) = (y, z)` of the
/// exact `g_sd` probability,
///
/// ```text
/// P = ∬ alpha_sr e^{-alpha_sr y} alpha_rd e^{-alpha_rd z}
///        (1 - e^{-alpha_sd Ψ(x,y,z)}) dz dy ,
/// Ψ = (x(1+y+z) - yz) / (1+y)      (over the region where Ψ > 0)
/// ```
pub fn phase1_cdf_region(a: &RateParams, spec: &QuadratureSpec, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let RateParams {
        alpha_sd: asd,
        alpha_sr: asr,
        alpha_rd: ard,
    } = *a;
    let (in_abs, in_rel) = inner_tols(spec);
    let z_tail = quad::tail_upper_limit(0.0, ard);
    let inner = move |y: f64| {
        let z_max = phase1_z_limit(x, y, z_tail);
        quad::integrate_multiscale(
            |z| {
                let psi = ((x * (1.0 + y + z) - y * z) / (1.0 + y)).max(0.0);
                ard * (-ard * z).exp() * -(-asd * psi).exp_m1()
            },
            0.0,
            z_max,
            x,
            in_abs,
            in_rel,
        )
        .value
    };
    let out = quad::integrate_multiscale(
        |y| asr * (-asr * y).exp() * inner(y),
        0.0,
        quad::tail_upper_limit(0.0, asr),
        x,
        spec.abs_tol,
        spec.rel_tol,
    );
    converged(out, "combined-transmission CDF, region form")
}

/// `P(ρ < x)` with the two routes cross-checked.
pub fn phase1_cdf(a: &RateParams, spec: &QuadratureSpec, x: f64) -> Result<f64> {
    let reduced = phase1_cdf_reduced(a, spec, x)?;
    let region = phase1_cdf_region(a, spec, x)?;
    Ok(if (reduced - region).abs() <= AGREEMENT_TOL {
        reduced
    } else {
        region
    })
}

/// Outage of the combined first transmission at the prefix-adjusted
/// threshold.
pub fn outage_phase1(params: &SystemParams, spec: &QuadratureSpec) -> Result<f64> {
    phase1_cdf(&params.rate_params(), spec, params.thresholds().eta_i)
}

// ---------------------------------------------------------------------------
// Relay decode and relay retransmission.
// ---------------------------------------------------------------------------

/// Probability that the relay fails to decode the source block:
/// `1 - e^{-alpha_sr η}`.
pub fn outage_sr(params: &SystemParams) -> f64 {
    -(-params.rate_params().alpha_sr * params.thresholds().eta).exp_m1()
}

/// Upper root of the relay-retransmission region boundary in `z = g_rd`,
/// evaluated in the cancellation-free form `2x(1+y)/(√D + b)`.
fn srd_z_upper(x: f64, y: f64) -> f64 {
    let b = 2.0 * y + 1.0 - x;
    let d = b * b + 4.0 * x * (1.0 + y);
    2.0 * x * (1.0 + y) / (d.sqrt() + b)
}

/// Reduced form of `P(ρ + g_rd < x)` — the relay retransmission reuses the
/// same `g_rd` block the forwarding path already went through, so this is
/// *not* a convolution of independent terms.
///
/// Two pieces, both single quadratures over `y = g_sr`:
///
/// ```text
/// TermA = 1 - alpha_sr e^{-alpha_rd (x-1)/2}
///             ∫₀^∞ e^{-(alpha_sr-alpha_rd) y - (alpha_rd/2)√D(y)} dy
/// TermB = -alpha_sr alpha_rd ∫₀^∞ e^{-alpha_sr y} √((1+y)/alpha_sd)
///             [ e^{-alpha_rd z₊} D(x₁) - e^{-alpha_sd x} D(x₂) ] dy
/// ```
///
/// with `D(y) = (2y+1)² + x(x+2)`, `z₊` the region's upper `g_rd` root,
/// `D(·)` Dawson's integral, and
/// `x₁ = √a (z₊ + g/2)`, `x₂ = √a g/2`, `a = alpha_sd/(1+y)`,
/// `g = (2y+1-x) - alpha_rd/a`. The exponents multiplying the Dawson
/// factors are the analytically simplified values of `x₁² - s` and
/// `x₂² - s` (with `s = a g²/4 + alpha_sd x`); forming them from those
/// squares in floating point would cancel catastrophically for large `y`.
pub fn srd_cdf_reduced(a: &RateParams, spec: &QuadratureSpec, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let RateParams {
        alpha_sd: asd,
        alpha_sr: asr,
        alpha_rd: ard,
    } = *a;
    let upper = quad::tail_upper_limit(0.0, asr);
    let (in_abs, in_rel) = inner_tols(spec);

    let term_a_int = quad::integrate_multiscale(
        |y| {
            let b = 2.0 * y + 1.0 - x;
            let d = b * b + 4.0 * x * (1.0 + y);
            (-(asr - ard) * y - 0.5 * ard * d.sqrt()).exp()
        },
        0.0,
        upper,
        x,
        in_abs,
        in_rel,
    );
    let term_a = 1.0
        - asr
            * (-0.5 * ard * (x - 1.0)).exp()
            * converged(term_a_int, "relay-retransmission CDF, exponential piece")?;

    let term_b_int = quad::integrate_multiscale(
        |y| {
            let b = 2.0 * y + 1.0 - x;
            let z_up = srd_z_upper(x, y);
            let aa = asd / (1.0 + y);
            let g = b - ard / aa;
            let sq = aa.sqrt();
            let x1 = sq * (z_up + 0.5 * g);
            let x2 = sq * 0.5 * g;
            let bracket =
                (-ard * z_up).exp() * special::dawson(x1) - (-asd * x).exp() * special::dawson(x2);
            (-asr * y).exp() * ((1.0 + y) / asd).sqrt() * bracket
        },
        0.0,
        upper,
        x,
        in_abs,
        in_rel,
    );
    let term_b =
        -asr * ard * converged(term_b_int, "relay-retransmission CDF, Dawson piece")?;

    Ok(term_a + term_b)
}

/// Region form of `P(ρ + g_rd < x)`: the shared `g_rd` caps the inner range
/// at the boundary root `z₊`, and the `g_sd` dimension integrates exactly:
///
/// ```text
/// P = ∬_{z<z₊} alpha_sr e^{-alpha_sr y} alpha_rd e^{-alpha_rd z}
///       (1 - e^{-alpha_sd Ψ₃}) dz dy ,
/// Ψ₃ = ((x-z)(1+y+z) - yz)/(1+y)
/// ```
pub fn srd_cdf_region(a: &RateParams, spec: &QuadratureSpec, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let RateParams {
        alpha_sd: asd,
        alpha_sr: asr,
        alpha_rd: ard,
    } = *a;
    let (in_abs, in_rel) = inner_tols(spec);
    let inner = move |y: f64| {
        quad::integrate(
            |z| {
                let psi = (((x - z) * (1.0 + y + z) - y * z) / (1.0 + y)).max(0.0);
                ard * (-ard * z).exp() * -(-asd * psi).exp_m1()
            },
            0.0,
            srd_z_upper(x, y),
            in_abs,
            in_rel,
        )
        .value
    };
    let out = quad::integrate_multiscale(
        |y| asr * (-asr * y).exp() * inner(y),
        0.0,
        quad::tail_upper_limit(0.0, asr),
        x,
        spec.abs_tol,
        spec.rel_tol,
    );
    converged(out, "relay-retransmission CDF, region form")
}

/// `P(ρ + g_rd < x)` with the two routes cross-checked.
pub fn srd_cdf(a: &RateParams, spec: &QuadratureSpec, x: f64) -> Result<f64> {
    let reduced = srd_cdf_reduced(a, spec, x)?;
    let region = srd_cdf_region(a, spec, x)?;
    Ok(if (reduced - region).abs() <= AGREEMENT_TOL {
        reduced
    } else {
        region
    })
}

/// Relay-retransmission outage at the two-round threshold.
pub fn outage_srd(params: &SystemParams, spec: &QuadratureSpec) -> Result<f64> {
    srd_cdf(&params.rate_params(), spec, params.thresholds().eta_iii)
}

// ---------------------------------------------------------------------------
// Source retransmission.
// ---------------------------------------------------------------------------

/// Reduced form of the source-retransmission outage
/// `P(ρ + g'_sd < x)` with `g'_sd` an independent source→destination draw:
/// the convolution `∫₀ˣ P(ρ < x-u) alpha_sd e^{-alpha_sd u} du` over the
/// reduced combined-transmission CDF.
pub fn ssd_cdf_reduced(a: &RateParams, spec: &QuadratureSpec, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let asd = a.alpha_sd;
    let failure: Cell<Option<AnalyticError>> = Cell::new(None);
    let out = quad::integrate(
        |u| match phase1_cdf_reduced(a, spec, x - u) {
            Ok(v) => v * asd * (-asd * u).exp(),
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        },
        0.0,
        x,
        spec.abs_tol,
        spec.rel_tol,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    converged(out, "source-retransmission CDF, convolution form")
}

/// Region form of `P(ρ + g'_sd < x)`: over `(g_sr, g_rd) = (y, z)` the event
/// is `k·g_sd + g'_sd < β₀` with `k = (1+y)/(1+y+z)` and
/// `β₀ = x - yz/(1+y+z)`, a sum of two independent exponentials whose CDF is
/// closed-form, leaving the same two-dimensional kernel as the
/// combined-transmission region integral.
pub fn ssd_cdf_region(a: &RateParams, spec: &QuadratureSpec, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let RateParams {
        alpha_sd: asd,
        alpha_sr: asr,
        alpha_rd: ard,
    } = *a;
    let (in_abs, in_rel) = inner_tols(spec);
    let z_tail = quad::tail_upper_limit(0.0, ard);
    let inner = move |y: f64| {
        let z_max = phase1_z_limit(x, y, z_tail);
        quad::integrate_multiscale(
            |z| {
                let beta0 = x - y * z / (1.0 + y + z);
                if beta0 <= 0.0 {
                    return 0.0;
                }
                // Rates asd/k and asd; delta is their gap, kept symbolic so
                // the z → 0 (equal-rate) limit stays finite.
                let delta = asd * z / (1.0 + y);
                let two_exp_cdf = 1.0
                    - (-asd * beta0).exp() * (1.0 - asd * (-delta * beta0).exp_m1() / delta);
                ard * (-ard * z).exp() * two_exp_cdf
            },
            0.0,
            z_max,
            x,
            in_abs,
            in_rel,
        )
        .value
    };
    let out = quad::integrate_multiscale(
        |y| asr * (-asr * y).exp() * inner(y),
        0.0,
        quad::tail_upper_limit(0.0, asr),
        x,
        spec.abs_tol,
        spec.rel_tol,
    );
    converged(out, "source-retransmission CDF, region form")
}

/// `P(ρ + g'_sd < x)` with the two routes cross-checked.
pub fn ssd_cdf(a: &RateParams, spec: &QuadratureSpec, x: f64) -> Result<f64> {
    let reduced = ssd_cdf_reduced(a, spec, x)?;
    let region = ssd_cdf_region(a, spec, x)?;
    Ok(if (reduced - region).abs() <= AGREEMENT_TOL {
        reduced
    } else {
        region
    })
}

/// Source-retransmission outage at the two-round threshold.
pub fn outage_ssd(params: &SystemParams, spec: &QuadratureSpec) -> Result<f64> {
    ssd_cdf(&params.rate_params(), spec, params.thresholds().eta_iii)
}

/// Variant of the source-retransmission event in which the retransmission
/// round sees the *same* `g_sd` as the first round:
/// `P(ρ + g_sd < x)` with shared `g_sd`, i.e.
/// `g_sd (2+2y+z)/(1+y+z) < x - yz/(1+y+z)`.
///
/// Region form only; there is no reduced counterpart. Useful to bound how
/// much block reuse changes the source branch relative to [`outage_ssd`].
pub fn outage_ssd_shared(params: &SystemParams, spec: &QuadratureSpec) -> Result<f64> {
    let RateParams {
        alpha_sd: asd,
        alpha_sr: asr,
        alpha_rd: ard,
    } = params.rate_params();
    let x = params.thresholds().eta_iii;
    let (in_abs, in_rel) = inner_tols(spec);
    let z_tail = quad::tail_upper_limit(0.0, ard);
    let inner = move |y: f64| {
        let z_max = phase1_z_limit(x, y, z_tail);
        quad::integrate_multiscale(
            |z| {
                let psi = ((x * (1.0 + y + z) - y * z) / (2.0 + 2.0 * y + z)).max(0.0);
                ard * (-ard * z).exp() * -(-asd * psi).exp_m1()
            },
            0.0,
            z_max,
            x,
            in_abs,
            in_rel,
        )
        .value
    };
    let out = quad::integrate_multiscale(
        |y| asr * (-asr * y).exp() * inner(y),
        0.0,
        quad::tail_upper_limit(0.0, asr),
        x,
        spec.abs_tol,
        spec.rel_tol,
    );
    converged(out, "shared-block source-retransmission outage")
}

// ---------------------------------------------------------------------------
// System composition and baselines.
// ---------------------------------------------------------------------------

/// Retransmission policy after a failed first transmission.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Procedure {
    /// Only a decoding relay retransmits; otherwise the round is lost.
    Conventional,
    /// The source itself retransmits whenever the relay failed to decode.
    Enhanced,
}

/// Ingredients and final value of the two-phase outage composition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutageBreakdown {
    /// Combined first transmission fails at the prefix-adjusted threshold.
    pub p_out_phase1: f64,
    /// Relay fails to decode the source block.
    pub p_out_sr: f64,
    /// Relay retransmission round fails (shared relay→destination block).
    pub p_out_srd: f64,
    /// Source retransmission round fails (independent source draw); pinned
    /// to 1 for [`Procedure::Conventional`], where no source round exists.
    pub p_out_ssd: f64,
    /// End-to-end outage after at most one retransmission.
    pub p_out_system: f64,
}

/// End-to-end outage of the relay-assisted HARQ cycle, composed from the
/// phase ingredients:
///
/// ```text
/// P_retx = P_sr · P_src + (1 - P_sr) · P_srd
/// P_sys  = P_phase1 · P_retx
/// ```
///
/// with `P_src = 1` (conventional) or the source-retransmission outage
/// (enhanced). The phases are composed as independent factors.
pub fn system_outage(
    params: &SystemParams,
    spec: &QuadratureSpec,
    procedure: Procedure,
) -> Result<OutageBreakdown> {
    let p1 = outage_phase1(params, spec)?;
    let p_sr = outage_sr(params);
    let p_srd = outage_srd(params, spec)?;
    let p_ssd = match procedure {
        Procedure::Conventional => 1.0,
        Procedure::Enhanced => outage_ssd(params, spec)?,
    };
    let p_retx = p_sr * p_ssd + (1.0 - p_sr) * p_srd;
    Ok(OutageBreakdown {
        p_out_phase1: p1,
        p_out_sr: p_sr,
        p_out_srd: p_srd,
        p_out_ssd: p_ssd,
        p_out_system: p1 * p_retx,
    })
}

/// How many retransmission rounds the non-relayed baseline gets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum S2dRounds {
    One,
    Two,
}

/// Outage of the direct source→destination baseline.
///
/// One round: `1 - e^{-alpha_sd η}`. Two rounds is the joint event that the
/// first round fails *and* chase combining over a fresh block still misses
/// the half-rate threshold:
/// `(1 - e^{-alpha_sd η}) - alpha_sd η e^{-alpha_sd η₃}`.
///
/// Power conventions (e.g. granting the baseline the relay's power budget)
/// are the caller's business: the formula uses `params` as given.
pub fn baseline_s2d(params: &SystemParams, rounds: S2dRounds) -> f64 {
    let a = params.rate_params().alpha_sd;
    let th = params.thresholds();
    let one = -(-a * th.eta).exp_m1();
    match rounds {
        S2dRounds::One => one,
        S2dRounds::Two => one - a * th.eta * (-a * th.eta_iii).exp(),
    }
}

/// Outage of the amplify-and-forward system without HARQ: exactly the
/// combined-first-transmission outage.
pub fn baseline_af(params: &SystemParams, spec: &QuadratureSpec) -> Result<f64> {
    outage_phase1(params, spec)
}

/// Long-run percentage of HARQ cycles in which each node retransmits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CooperationSplit {
    /// Percent of cycles with a relay retransmission.
    pub relay_pct: f64,
    /// Percent of cycles with a source retransmission (zero under
    /// [`Procedure::Conventional`]).
    pub source_pct: f64,
}

/// Retransmission activity split between relay and source: a retransmission
/// happens when the first transmission fails, and its sender is decided by
/// the relay's decode outcome.
pub fn cooperation_percentages(
    params: &SystemParams,
    spec: &QuadratureSpec,
    procedure: Procedure,
) -> Result<CooperationSplit> {
    let p1 = outage_phase1(params, spec)?;
    let p_sr = outage_sr(params);
    let relay_pct = (1.0 - p_sr) * p1 * 100.0;
    let source_pct = match procedure {
        Procedure::Conventional => 0.0,
        Procedure::Enhanced => p_sr * p1 * 100.0,
    };
    Ok(CooperationSplit {
        relay_pct,
        source_pct,
    })
}

/// Retransmission activity of the direct baseline with one HARQ round: the
/// source retransmits whenever the first round fails.
pub fn s2d_source_pct(params: &SystemParams) -> f64 {
    baseline_s2d(params, S2dRounds::One) * 100.0
}

// ---------------------------------------------------------------------------
// Multi-round extensions (latency studies).
// ---------------------------------------------------------------------------

/// Threshold after `k` retransmission rounds: `2^{(k+1)R} - 1`.
fn multi_round_threshold(rate: f64, k: u32) -> f64 {
    (((k + 1) as f64) * rate).exp2() - 1.0
}

fn erlang_pdf(m: u32, a: f64, s: f64) -> f64 {
    let mut v = a * (-a * s).exp();
    for j in 1..m {
        v *= a * s / j as f64;
    }
    v
}

/// Validated upper bound on retransmission rounds for the multi-round
/// formulas.
pub const MAX_MODELLED_ROUNDS: u32 = 2;

fn check_rounds(k: u32) -> Result<()> {
    if k == 0 || k > MAX_MODELLED_ROUNDS {
        Err(AnalyticError::UnsupportedRounds {
            got: k,
            max: MAX_MODELLED_ROUNDS,
        })
    } else {
        Ok(())
    }
}

/// Outage of `k` relay retransmission rounds: the first reuses the shared
/// relay→destination block (the [`srd_cdf`] kernel), each further round adds
/// an independent draw, so rounds 2..k convolve an Erlang density onto it.
pub fn multi_round_relay_outage(
    params: &SystemParams,
    spec: &QuadratureSpec,
    k: u32,
) -> Result<f64> {
    check_rounds(k)?;
    let a = params.rate_params();
    let x = multi_round_threshold(params.rate, k);
    if k == 1 {
        return srd_cdf_reduced(&a, spec, x);
    }
    let failure: Cell<Option<AnalyticError>> = Cell::new(None);
    let out = quad::integrate(
        |s| match srd_cdf_reduced(&a, spec, x - s) {
            Ok(v) => v * erlang_pdf(k - 1, a.alpha_rd, s),
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        },
        0.0,
        x,
        spec.abs_tol,
        spec.rel_tol,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    converged(out, "multi-round relay retransmission outage")
}

/// Outage of `k` source retransmission rounds, each an independent
/// source→destination draw: `k` fresh exponentials sum to an Erlang-`k`
/// variable, so the whole chain is one convolution over the
/// combined-transmission CDF. `k = 1` coincides with [`ssd_cdf`].
pub fn multi_round_source_outage(
    params: &SystemParams,
    spec: &QuadratureSpec,
    k: u32,
) -> Result<f64> {
    check_rounds(k)?;
    let a = params.rate_params();
    let x = multi_round_threshold(params.rate, k);
    let failure: Cell<Option<AnalyticError>> = Cell::new(None);
    let out = quad::integrate(
        |s| match phase1_cdf_reduced(&a, spec, x - s) {
            Ok(v) => v * erlang_pdf(k, a.alpha_sd, s),
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        },
        0.0,
        x,
        spec.abs_tol,
        spec.rel_tol,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    converged(out, "multi-round source retransmission outage")
}

/// End-to-end outage with up to `k ≥ 1` retransmission rounds, same
/// composition as [`system_outage`] (which it equals at `k = 1`).
pub fn multi_round_system_outage(
    params: &SystemParams,
    spec: &QuadratureSpec,
    procedure: Procedure,
    k: u32,
) -> Result<f64> {
    check_rounds(k)?;
    let p1 = outage_phase1(params, spec)?;
    let p_sr = outage_sr(params);
    let q_rel = multi_round_relay_outage(params, spec, k)?;
    let q_src = match procedure {
        Procedure::Conventional => 1.0,
        Procedure::Enhanced => multi_round_source_outage(params, spec, k)?,
    };
    Ok(p1 * (p_sr * q_src + (1.0 - p_sr) * q_rel))
}

/// Direct-baseline outage with `k ∈ {0, 1, 2}` chase-combined
/// retransmissions, as the joint event that every prefix of rounds misses
/// its threshold. `k ≤ 1` is closed-form ([`baseline_s2d`]); `k = 2` needs
/// one quadrature.
pub fn s2d_multi_round_outage(params: &SystemParams, k: u32) -> Result<f64> {
    let a = params.rate_params().alpha_sd;
    let th = params.thresholds();
    match k {
        0 => Ok(baseline_s2d(params, S2dRounds::One)),
        1 => Ok(baseline_s2d(params, S2dRounds::Two)),
        2 => {
            let eta7 = multi_round_threshold(params.rate, 2);
            let out = quad::integrate(
                |u| {
                    let inner = -(-a * (th.eta_iii - u)).exp_m1()
                        - a * (th.eta_iii - u) * (-a * (eta7 - u)).exp();
                    a * (-a * u).exp() * inner
                },
                0.0,
                th.eta,
                1e-14,
                1e-12,
            );
            converged(out, "direct-baseline three-round outage")
        }
        _ => Err(AnalyticError::UnsupportedRounds {
            got: k,
            max: MAX_MODELLED_ROUNDS,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::db_to_lin;

    fn no_pole_params() -> SystemParams {
        // alpha_sd < alpha_rd keeps the reduced form singularity-free.
        let mut p = SystemParams::default();
        p.p_s = db_to_lin(5.0);
        p.p_r = p.p_s;
        p.var_sd = db_to_lin(10.0);
        p.var_sr = db_to_lin(10.0);
        p.var_rd = db_to_lin(5.0);
        p.var_rr = db_to_lin(-10.0);
        p
    }

    #[test]
    fn cdfs_vanish_at_nonpositive_threshold() {
        let a = no_pole_params().rate_params();
        let spec = QuadratureSpec::default();
        for x in [0.0, -1.0] {
            assert_eq!(phase1_cdf_reduced(&a, &spec, x).unwrap(), 0.0);
            assert_eq!(phase1_cdf_region(&a, &spec, x).unwrap(), 0.0);
            assert_eq!(srd_cdf_reduced(&a, &spec, x).unwrap(), 0.0);
            assert_eq!(ssd_cdf_region(&a, &spec, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn phase1_cdf_is_monotone_in_threshold() {
        let a = no_pole_params().rate_params();
        let spec = QuadratureSpec::default();
        let mut prev = 0.0;
        for i in 1..=8 {
            let x = 0.5 * i as f64;
            let v = phase1_cdf_reduced(&a, &spec, x).unwrap();
            assert!(v > prev && v < 1.0, "x={x}: {v} vs {prev}");
            prev = v;
        }
    }

    #[test]
    fn relay_decode_outage_closed_form() {
        let p = no_pole_params();
        let a = p.rate_params();
        let want = 1.0 - (-a.alpha_sr * p.thresholds().eta).exp();
        assert!((outage_sr(&p) - want).abs() < 1e-15);
    }

    #[test]
    fn direct_baseline_hand_values() {
        // alpha_sd = 0.05, R = 1: eta = 1, eta_iii = 3.
        let mut p = SystemParams::default();
        p.p_s = 20.0;
        let r1 = baseline_s2d(&p, S2dRounds::One);
        let r2 = baseline_s2d(&p, S2dRounds::Two);
        assert!((r1 - (1.0 - (-0.05f64).exp())).abs() < 1e-15);
        assert!((r2 - (r1 - 0.05 * (-0.15f64).exp())).abs() < 1e-15);
        assert!(r2 < r1);
    }

    #[test]
    fn s2d_multi_round_matches_closed_forms_and_caps() {
        let mut p = SystemParams::default();
        p.p_s = 20.0;
        assert_eq!(
            s2d_multi_round_outage(&p, 0).unwrap(),
            baseline_s2d(&p, S2dRounds::One)
        );
        assert_eq!(
            s2d_multi_round_outage(&p, 1).unwrap(),
            baseline_s2d(&p, S2dRounds::Two)
        );
        let k2 = s2d_multi_round_outage(&p, 2).unwrap();
        assert!(k2 > 0.0 && k2 < baseline_s2d(&p, S2dRounds::Two));
        assert!(matches!(
            s2d_multi_round_outage(&p, 3),
            Err(AnalyticError::UnsupportedRounds { got: 3, max: 2 })
        ));
    }

    #[test]
    fn multi_round_reduces_to_single_round() {
        let p = no_pole_params();
        let spec = QuadratureSpec::default();
        let single = srd_cdf_reduced(&p.rate_params(), &spec, p.thresholds().eta_iii).unwrap();
        let via_multi = multi_round_relay_outage(&p, &spec, 1).unwrap();
        assert_eq!(single, via_multi);
        assert!(matches!(
            multi_round_relay_outage(&p, &spec, 0),
            Err(AnalyticError::UnsupportedRounds { .. })
        ));
    }

    #[test]
    fn erlang_kernel_normalises() {
        for m in 1..=3u32 {
            let a = 0.7;
            let mass = quad::integrate(
                |s| erlang_pdf(m, a, s),
                0.0,
                quad::tail_upper_limit(0.0, a) * 2.0,
                1e-12,
                1e-10,
            );
            assert!(
                (mass.value - 1.0).abs() < 1e-9,
                "Erlang-{m} mass {}",
                mass.value
            );
        }
    }

    #[test]
    fn composition_identities() {
        let p = no_pole_params();
        let spec = QuadratureSpec::default();
        let conv = system_outage(&p, &spec, Procedure::Conventional).unwrap();
        let enh = system_outage(&p, &spec, Procedure::Enhanced).unwrap();
        // Shared ingredients agree; the source branch only helps.
        assert_eq!(conv.p_out_phase1, enh.p_out_phase1);
        assert_eq!(conv.p_out_ssd, 1.0);
        assert!(enh.p_out_ssd < 1.0);
        assert!(enh.p_out_system < conv.p_out_system);
        let want_conv =
            conv.p_out_phase1 * (conv.p_out_sr + (1.0 - conv.p_out_sr) * conv.p_out_srd);
        assert!((conv.p_out_system - want_conv).abs() < 1e-15);

        let split = cooperation_percentages(&p, &spec, Procedure::Enhanced).unwrap();
        assert!(
            (split.relay_pct + split.source_pct - conv.p_out_phase1 * 100.0).abs() < 1e-12,
            "retransmission shares must partition the first-round failures"
        );
        let conv_split = cooperation_percentages(&p, &spec, Procedure::Conventional).unwrap();
        assert_eq!(conv_split.source_pct, 0.0);
    }
}
