//! Single-atom Mach-Zehnder interferometry with a Gaussian count model.

use std::f64::consts::PI;

use log::warn;

use crate::error::{Error, Result};
use crate::mmm::{ArmGeometry, MmmParams};
use crate::quadrature::gl16;

/// Cosines below this magnitude are treated as exact zeros, so that bins at
/// odd multiples of pi/2 carry no information about `tau_e`.
const COS_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseBin {
    pub k: i64,
    pub n_total: u64,
    pub n_a: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleAtomConfig {
    /// Angular frequency of the phase ramp, rad/s.
    pub omega: f64,
    /// Interference time, s.
    pub t: f64,
    /// Time increment per phase step, s.
    pub delta_t: f64,
    pub sigma_dark: f64,
    pub mass: f64,
    pub delta_x: f64,
    pub w_x: f64,
    pub w_y: f64,
    pub extend_plateau: bool,
    pub bins: Vec<PhaseBin>,
}

impl SingleAtomConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() || !(self.t >= 0.0) || !self.delta_t.is_finite() {
            return Err(Error::domain("omega, t and delta_t must be finite with t >= 0"));
        }
        if !(self.sigma_dark >= 0.0) || !self.sigma_dark.is_finite() {
            return Err(Error::domain("sigma_dark must be non-negative"));
        }
        self.geometry().validate()?;
        for b in &self.bins {
            if b.n_a > b.n_total {
                return Err(Error::domain(format!("bin {}: n_a = {} exceeds N_k = {}", b.k, b.n_a, b.n_total)));
            }
        }
        if let Some(b) = self.bins.iter().find(|b| b.n_total < 1000) {
            warn!("bin {} has N_k = {} < 1000; the Gaussian approximation is rough", b.k, b.n_total);
        }
        Ok(())
    }

    pub fn geometry(&self) -> ArmGeometry {
        ArmGeometry {
            mass: self.mass,
            delta_x: self.delta_x,
            w_x: self.w_x,
            w_y: self.w_y,
            extend_plateau: self.extend_plateau,
        }
    }

    /// `phi_k = omega (t + k delta_t)`.
    pub fn phase(&self, k: i64) -> f64 {
        self.omega * (self.t + k as f64 * self.delta_t)
    }

    fn cos_phase(&self, k: i64) -> f64 {
        let c = self.phase(k).cos();
        if c.abs() < COS_ZERO {
            0.0
        } else {
            c
        }
    }

    /// Port-a probability of bin `k`.
    pub fn port_prob(&self, k: i64, gamma_p: f64) -> f64 {
        0.5 - 0.25 * self.cos_phase(k) * (-0.5 * gamma_p * self.t).exp()
    }

    pub fn total_counts(&self) -> u64 {
        self.bins.iter().map(|b| b.n_total).sum()
    }
}

fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * var).ln() - 0.5 * d * d / var
}

/// Mean, variance and their `tau_e` derivatives for one bin.
fn moments(config: &SingleAtomConfig, bin: &PhaseBin, coef: f64, tau: f64) -> (f64, f64, f64, f64) {
    let n = bin.n_total as f64;
    let c = config.cos_phase(bin.k);
    let e = (-0.5 * coef * config.t / tau).exp();
    let p = 0.5 - 0.25 * c * e;
    let dp = -0.25 * c * e * 0.5 * coef * config.t / (tau * tau);
    let mean = n * p;
    let var = n * p * (1.0 - p) + config.sigma_dark * config.sigma_dark;
    (mean, var, n * dp, n * dp * (1.0 - 2.0 * p))
}

pub fn loglik_single_atom(config: &SingleAtomConfig, params: &MmmParams) -> Result<f64> {
    let coef = config.geometry().dephasing_coefficient(params.sigma_q());
    let tau = params.tau_e();
    let mut total = 0.0;
    for bin in &config.bins {
        if bin.n_total == 0 {
            continue;
        }
        let (mean, var, _, _) = moments(config, bin, coef, tau);
        total += ln_normal(bin.n_a as f64, mean, var);
    }
    Ok(total)
}

/// Fisher information by quadrature of the score over each bin's Gaussian.
///
/// In the standardised variable `z` the score is `a z + b (z^2 - 1)` with
/// `a = mu' / sqrt(v)` and `b = v' / (2 v)`.
pub fn fisher_single_atom_quadrature(config: &SingleAtomConfig, params: &MmmParams) -> Result<f64> {
    let coef = config.geometry().dephasing_coefficient(params.sigma_q());
    let tau = params.tau_e();
    let norm = 1.0 / (2.0 * PI).sqrt();
    let mut total = 0.0;
    for bin in &config.bins {
        if bin.n_total == 0 {
            continue;
        }
        let (_, var, dmean, dvar) = moments(config, bin, coef, tau);
        if dmean == 0.0 && dvar == 0.0 {
            continue;
        }
        let a = dmean / var.sqrt();
        let b = dvar / (2.0 * var);
        // integrate the score in units of its larger coefficient so that
        // squaring tiny coefficients cannot underflow
        let scale = a.abs().max(b.abs());
        let (a, b) = (a / scale, b / scale);
        total += scale
            * scale
            * gl16().integrate(
                |z| {
                    let score = a * z + b * (z * z - 1.0);
                    norm * (-0.5 * z * z).exp() * score * score
                },
                -12.0,
                12.0,
                24,
            );
    }
    if !total.is_finite() {
        return Err(Error::numeric("single-atom Fisher information is not finite"));
    }
    Ok(total)
}

/// Closed-form Fisher information of the Gaussian count model,
/// `N^2 G^2 t^2 c^2 (D + 2 c^2) / (4 tau^4 D^2)` per bin with
/// `D = 4 (N + 4 sigma_dark^2) e^{G t / tau} - N c^2` and `c = cos phi_k`,
/// where `Gamma_P = G / tau`.
pub fn fisher_single_atom_closed_form(config: &SingleAtomConfig, params: &MmmParams) -> f64 {
    let g = config.geometry().dephasing_coefficient(params.sigma_q());
    let tau = params.tau_e();
    let sd2 = config.sigma_dark * config.sigma_dark;
    let x = g * config.t / tau;
    let mut total = 0.0;
    for bin in &config.bins {
        let n = bin.n_total as f64;
        let c = config.cos_phase(bin.k);
        if n == 0.0 || c == 0.0 || x == 0.0 {
            continue;
        }
        let c2 = c * c;
        // D = e^x D', written with e^{-x}; the product is taken in logs so
        // that the small e^{-x} and the large prefactor do not underflow early
        let e = (-x).exp();
        let d = 4.0 * (n + 4.0 * sd2) - n * c2 * e;
        let ln_pre = (n * g * config.t).ln() - 2.0 * tau.ln();
        total += (2.0 * ln_pre + c2.ln() - x + ((d + 2.0 * c2 * e) / (4.0 * d * d)).ln()).exp();
    }
    total
}
