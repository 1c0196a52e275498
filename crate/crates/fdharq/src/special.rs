//! Special functions needed by the closed-form outage terms: the modified
//! Bessel function K₁, Dawson's integral, and a scaled imaginary error
//! function built on the latter.
//!
//! These show up inside quadrature integrands, so they must be accurate
//! (~1e-13 relative), branch-free over their whole argument range, and cheap.
//! Naive formulas fail on both ends: `erfi(x)` overflows for moderate `x`
//! and K₁'s series/asymptotic split introduces matching seams. The
//! implementations here avoid both problems.
//!
//! # K₁
//!
//! Evaluated through an integral representation that is smooth in the
//! argument,
//!
//! ```text
//! K₁(z) = (2 e^{-z} / z) ∫₀^∞ e^{-v²} v² √(v² + 2z) dv ,
//! ```
//!
//! truncated at `v = 8` where the Gaussian factor has decayed to ~1e-28 of
//! its peak. A single adaptive quadrature covers twelve decades of `z`
//! without regime switching, and the exponentially scaled variant
//! [`k1_scaled`] falls out of the same integral.
//!
//! # Dawson's integral
//!
//! `D(x) = e^{-x²} ∫₀^x e^{t²} dt`, computed by a Maclaurin series for
//! `|x| ≤ 1`, Rybicki's sampling-theorem expansion for `1 < |x| < 8`
//! (`h = 1/4` puts its intrinsic error near 7e-18), and the asymptotic
//! series beyond.
//!
//! # Scaled erfi
//!
//! The retransmission outage terms need differences of `e^{-s} erfi(x)`
//! where `x² ≈ s` can reach thousands; [`erfi_scaled`] keeps the pair fused
//! so only the *difference* of exponents is ever exponentiated.

use crate::quad;

const FRAC_2_SQRT_PI: f64 = 1.128_379_167_095_512_6; // 2/sqrt(pi)

fn k1_integral(z: f64) -> f64 {
    // Gaussian factor is ~1e-28 at v = 8; the neglected tail is far below
    // the 1e-13 relative target at every z.
    quad::integrate(
        |v| (-v * v).exp() * v * v * (v * v + 2.0 * z).sqrt(),
        0.0,
        8.0,
        f64::MIN_POSITIVE,
        1e-13,
    )
    .value
}

/// Modified Bessel function of the second kind, order one.
///
/// Defined for `x > 0`; other inputs return NaN. Underflows to zero above
/// `x ≈ 709` where `e^{-x}` leaves the double range — use [`k1_scaled`]
/// there.
pub fn k1(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    2.0 * (-x).exp() / x * k1_integral(x)
}

/// `e^x K₁(x)`, stable for arbitrarily large `x > 0`.
pub fn k1_scaled(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    2.0 / x * k1_integral(x)
}

fn dawson_series(x: f64) -> f64 {
    // D(x) = sum_{n>=0} (-2)^n x^{2n+1} / (2n+1)!!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= -2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            return sum;
        }
    }
}

fn dawson_rybicki(x: f64) -> f64 {
    // Sampling-theorem form: D(x) ≈ (1/sqrt(pi)) Σ_{n odd} e^{-(x - n h)²}/n
    // with h = 1/4; terms beyond |x - n h| = 7.5 are below 1e-24.
    const H: f64 = 0.25;
    let x0 = x / H;
    let mut n = {
        // nearest odd integer to x0
        let r = x0.round() as i64;
        if r % 2 == 0 {
            if x0 > r as f64 {
                r + 1
            } else {
                r - 1
            }
        } else {
            r
        }
    };
    n -= 30;
    let mut sum = 0.0;
    while (n as f64) <= x0 + 30.0 {
        let d = x - n as f64 * H;
        sum += (-d * d).exp() / n as f64;
        n += 2;
    }
    sum * 0.5 * FRAC_2_SQRT_PI
}

fn dawson_asymptotic(x: f64) -> f64 {
    // D(x) ~ 1/(2x) Σ_k (2k-1)!!/(2x²)^k; truncate at the smallest term.
    let inv2x2 = 1.0 / (2.0 * x * x);
    let mut term = 1.0 / (2.0 * x);
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        let next = term * (2 * k - 1) as f64 * inv2x2;
        if next.abs() >= term.abs() || next.abs() <= 1e-18 * sum.abs() {
            return sum + next;
        }
        sum += next;
        term = next;
    }
}

/// Dawson's integral `D(x) = e^{-x²} ∫₀^x e^{t²} dt`.
///
/// Odd in `x`, peaks at ~0.541 near `x = 0.924`, decays like `1/(2x)`.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    let d = if ax <= 1.0 {
        dawson_series(ax)
    } else if ax < 8.0 {
        dawson_rybicki(ax)
    } else {
        dawson_asymptotic(ax)
    };
    if x < 0.0 {
        -d
    } else {
        d
    }
}

/// `e^{-s} erfi(x)` without forming either factor on its own.
///
/// `erfi(x) = (2/√π) e^{x²} D(x)` overflows near `x ≈ 27`; in the outage
/// terms it always appears multiplied by an `e^{-s}` with `s ≈ x²`, so this
/// computes `(2/√π) e^{x² - s} D(x)` and stays finite whenever the exponent
/// difference does.
pub fn erfi_scaled(x: f64, s: f64) -> f64 {
    FRAC_2_SQRT_PI * (x * x - s).exp() * dawson(x)
}
