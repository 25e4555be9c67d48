//! Jacobi theta function of the third kind on the real line.
//!
//! `theta3(u, q) = sum_n q^{n^2} exp(2 i n u) = 1 + 2 sum_{n>=1} q^{n^2} cos(2 n u)`.
//!
//! Internally the nome is carried as `s = -ln q`, which keeps full precision
//! when `q` is within a few ulps of one. For `s >= pi` the cosine series is
//! summed directly; below that the Poisson-resummed (wrapped Gaussian) form
//!
//! `theta3(u, e^{-s}) = sqrt(pi / s) * sum_k exp(-(u - k pi)^2 / s)`
//!
//! is used instead. Both converge geometrically away from their slow regime.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nome-log threshold `s = -ln q` at which evaluation switches representation.
pub const THETA_REGIME_SWITCH: f64 = PI;

const TERM_RTOL: f64 = 1e-16;
const MAX_TERMS: usize = 1_000_000;

fn check_nome(q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) || q.is_nan() {
        return Err(Error::domain(format!("theta3 nome must lie in [0, 1), got {q}")));
    }
    Ok(if q == 0.0 { f64::INFINITY } else { -q.ln() })
}

/// `theta3(u, q)` for a real argument and nome `0 <= q < 1`.
pub fn theta3(u: f64, q: f64) -> Result<f64> {
    let s = check_nome(q)?;
    Ok(theta3_nome_log(u, s))
}

/// Direct cosine-series evaluation regardless of the nome.
pub fn theta3_series(u: f64, q: f64) -> Result<f64> {
    let s = check_nome(q)?;
    Ok(series(u, s).0)
}

/// Wrapped-Gaussian (modular) evaluation regardless of the nome. Requires `q > 0`.
pub fn theta3_wrapped_gaussian(u: f64, q: f64) -> Result<f64> {
    let s = check_nome(q)?;
    if !s.is_finite() {
        return Err(Error::domain("wrapped-Gaussian form needs a positive nome"));
    }
    let (ln, _) = modular_ln(u, s);
    Ok(ln.exp())
}

/// `theta3(u, e^{-s})` for `s > 0` (`s = inf` gives 1).
pub fn theta3_nome_log(u: f64, s: f64) -> f64 {
    debug_assert!(s > 0.0);
    if s >= THETA_REGIME_SWITCH {
        series(u, s).0
    } else {
        modular_ln(u, s).0.exp()
    }
}

/// `ln theta3(u, e^{-s})`, finite even when the value underflows.
pub fn ln_theta3_nome_log(u: f64, s: f64) -> f64 {
    theta3_ln_and_dlog_ds(u, s).0
}

/// Returns `(ln theta3, d ln theta3 / ds)` at nome `e^{-s}`.
pub fn theta3_ln_and_dlog_ds(u: f64, s: f64) -> (f64, f64) {
    if s >= THETA_REGIME_SWITCH {
        let (value, ds) = series(u, s);
        (value.ln(), ds / value)
    } else {
        modular_ln(u, s)
    }
}

/// Cosine series. Returns the value and its `s`-derivative.
fn series(u: f64, s: f64) -> (f64, f64) {
    if s.is_infinite() {
        return (1.0, 0.0);
    }
    let mut sum = 1.0;
    let mut abs_sum = 1.0;
    let mut dsum = 0.0;
    for n in 1..MAX_TERMS {
        let nf = n as f64;
        let mag = 2.0 * (-s * nf * nf).exp();
        if mag < TERM_RTOL * abs_sum {
            break;
        }
        let c = (2.0 * nf * u).cos();
        sum += mag * c;
        abs_sum += mag;
        dsum -= nf * nf * mag * c;
    }
    (sum, dsum)
}

/// Wrapped-Gaussian representation in log space.
///
/// With `r` the argument reduced into `[-pi/2, pi/2]` the `k = 0` image
/// dominates, so the log is split as
/// `0.5 ln(pi/s) - r^2/s + ln(sum_k exp(-((r - k pi)^2 - r^2)/s))`.
fn modular_ln(u: f64, s: f64) -> (f64, f64) {
    let r = u - PI * (u / PI).round();
    let base = r * r;
    let mut acc = 1.0;
    let mut weighted = base;
    for dir in [1.0f64, -1.0] {
        let mut k = 1.0;
        loop {
            let d = r - dir * k * PI;
            let a = d * d;
            let w = (-(a - base) / s).exp();
            if w < TERM_RTOL * acc * 1e-2 {
                break;
            }
            acc += w;
            weighted += w * a;
            k += 1.0;
        }
    }
    let ln = 0.5 * (PI / s).ln() - base / s + acc.ln();
    let dlog = -0.5 / s + (weighted / acc) / (s * s);
    (ln, dlog)
}
