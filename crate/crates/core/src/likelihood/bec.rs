//! Two-mode BEC Mach-Zehnder interferometer in the continuum limit.
//!
//! With `delta = arcsin(2 n_a / N - 1)` the count density is the image of the
//! phase-space density
//! `q(delta) = [theta3((delta - phi)/2, g) + theta3((pi - delta - phi)/2, g)] / 2pi`
//! on `(-pi/2, pi/2)`, where `g = exp(-1/2N - Gamma_P t/2)`. All sums over
//! counts are carried out on a midpoint grid in `delta`, which removes the
//! inverse-square-root singularities at `n_a = 0, N`.

use std::f64::consts::{FRAC_PI_2, PI};

use log::warn;

use super::{ln_add, merge_windows};
use crate::error::{Error, Result};
use crate::mmm::{arm_separation, ArmGeometry, MmmParams};
use crate::quadrature::gl16;
use crate::specfun::theta3_ln_and_dlog_ds;

/// Number of grid cells used for normalisation and sampling.
pub const COUNT_GRID: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct BecMziConfig {
    pub n_atoms: u64,
    pub mass: f64,
    /// Momentum splitting, kg m/s.
    pub delta_p: f64,
    /// Time entering the average arm separation, s.
    pub separation_time: f64,
    /// Interference time, s.
    pub t: f64,
    pub w_x: f64,
    pub w_y: f64,
    /// Fixed unknown interferometer phase.
    pub phi: f64,
    pub extend_plateau: bool,
    /// Atom counts in port a, one per shot.
    pub shots: Vec<f64>,
}

impl BecMziConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms < 2 {
            return Err(Error::domain("BEC atom number must be at least 2"));
        }
        if self.n_atoms < 100 {
            warn!("N = {} is small for the continuum approximation", self.n_atoms);
        }
        if !(self.t >= 0.0) || !self.phi.is_finite() {
            return Err(Error::domain("interference time and phase must be finite, t >= 0"));
        }
        self.geometry().and_then(|g| g.validate())?;
        let n = self.n_atoms as f64;
        if let Some(bad) = self.shots.iter().find(|x| !(**x >= 0.0 && **x <= n)) {
            return Err(Error::domain(format!("shot count {bad} outside [0, {n}]")));
        }
        Ok(())
    }

    pub fn arm_separation(&self) -> Result<f64> {
        arm_separation(self.delta_p, self.separation_time, self.mass)
    }

    pub fn geometry(&self) -> Result<ArmGeometry> {
        Ok(ArmGeometry {
            mass: self.mass,
            delta_x: self.arm_separation()?,
            w_x: self.w_x,
            w_y: self.w_y,
            extend_plateau: self.extend_plateau,
        })
    }

    /// Dephasing rate at `params`.
    pub fn dephasing_rate(&self, params: &MmmParams) -> Result<f64> {
        Ok(self.geometry()?.dephasing_rate(params))
    }
}

/// `-ln g_N(t) = 1/(2N) + Gamma_P t / 2`.
pub fn bec_nome_log(n: f64, gamma_p: f64, t: f64) -> f64 {
    0.5 / n + 0.5 * gamma_p * t
}

/// `(ln q, d ln q / ds)` of the analytically normalised phase density.
fn ln_phase_density(delta: f64, phi: f64, s: f64) -> (f64, f64) {
    let (la, da) = theta3_ln_and_dlog_ds(0.5 * (delta - phi), s);
    let (lb, db) = theta3_ln_and_dlog_ds(0.5 * (PI - delta - phi), s);
    let ln = ln_add(la, lb);
    let wa = (la - ln).exp();
    let wb = (lb - ln).exp();
    (ln - (2.0 * PI).ln(), wa * da + wb * db)
}

/// Count density of one shot for fixed `(N, phi, s)`, renormalised on the grid.
#[derive(Debug, Clone)]
pub struct BecCountDensity {
    n: f64,
    phi: f64,
    s: f64,
    ln_norm: f64,
}

impl BecCountDensity {
    pub fn new(n_atoms: u64, phi: f64, s: f64) -> Self {
        let n = n_atoms as f64;
        let h = PI / COUNT_GRID as f64;
        // integral over n_a of q/|cos delta| equals (N/2) * integral of q over delta
        let mass = if (2.0 * s).sqrt() >= 2.0 * h {
            let mut acc = 0.0;
            for i in 0..COUNT_GRID {
                let d = -FRAC_PI_2 + (i as f64 + 0.5) * h;
                acc += ln_phase_density(d, phi, s).0.exp();
            }
            acc * h
        } else {
            // peak narrower than a cell: the grid cannot resolve it, use the exact mass
            1.0
        };
        BecCountDensity { n, phi, s, ln_norm: (0.5 * n * mass).ln() }
    }

    pub fn for_params(config: &BecMziConfig, params: &MmmParams) -> Result<Self> {
        let gamma = config.dephasing_rate(params)?;
        let s = bec_nome_log(config.n_atoms as f64, gamma, config.t);
        Ok(Self::new(config.n_atoms, config.phi, s))
    }

    pub fn nome_log(&self) -> f64 {
        self.s
    }

    /// Log density at a count strictly inside `(0, N)`.
    pub fn ln_pdf(&self, n_a: f64) -> Result<f64> {
        if !(n_a > 0.0 && n_a < self.n) {
            return Err(Error::domain(format!(
                "count density is singular at the boundary; n_a = {n_a} not in (0, {})",
                self.n
            )));
        }
        let x = 2.0 * n_a / self.n - 1.0;
        let delta = x.asin();
        let cos = (1.0 - x * x).sqrt();
        Ok(ln_phase_density(delta, self.phi, self.s).0 - cos.ln() - self.ln_norm)
    }

    pub fn pdf(&self, n_a: f64) -> Result<f64> {
        self.ln_pdf(n_a).map(f64::exp)
    }

    /// Grid nodes in `delta` with the cell probabilities, summing to one.
    pub fn cell_masses(&self) -> (Vec<f64>, Vec<f64>) {
        let h = PI / COUNT_GRID as f64;
        let nodes: Vec<f64> = (0..COUNT_GRID).map(|i| -FRAC_PI_2 + (i as f64 + 0.5) * h).collect();
        let raw: Vec<f64> = nodes.iter().map(|d| ln_phase_density(*d, self.phi, self.s).0.exp() * h).collect();
        let total: f64 = raw.iter().sum();
        (nodes, raw.into_iter().map(|m| m / total).collect())
    }

    /// Map a grid angle to a count.
    pub fn count_of(&self, delta: f64) -> f64 {
        0.5 * self.n * (1.0 + delta.sin())
    }
}

/// Normalised density of `n_a` atoms in port a.
pub fn bec_count_pdf(n_a: f64, config: &BecMziConfig, params: &MmmParams) -> Result<f64> {
    BecCountDensity::for_params(config, params)?.pdf(n_a)
}

fn clip_count(n_a: f64, n: f64) -> f64 {
    let cell = n / COUNT_GRID as f64;
    if n_a <= 0.0 {
        warn!("shot at n_a = {n_a} clipped to {cell}");
        cell
    } else if n_a >= n {
        warn!("shot at n_a = {n_a} clipped to {}", n - cell);
        n - cell
    } else {
        n_a
    }
}

pub fn loglik_bec(config: &BecMziConfig, params: &MmmParams) -> Result<f64> {
    if config.shots.is_empty() {
        return Err(Error::domain("BEC likelihood needs at least one shot"));
    }
    let density = BecCountDensity::for_params(config, params)?;
    let n = config.n_atoms as f64;
    config.shots.iter().map(|x| density.ln_pdf(clip_count(*x, n))).sum()
}

/// Fisher information about `tau_e` carried by a single shot.
pub fn fisher_bec_per_shot(config: &BecMziConfig, params: &MmmParams) -> Result<f64> {
    let geo = config.geometry()?;
    let c = geo.dephasing_coefficient(params.sigma_q());
    let tau = params.tau_e();
    let ds_dtau = -0.5 * config.t * c / (tau * tau);
    if ds_dtau == 0.0 {
        return Ok(0.0);
    }
    let s = bec_nome_log(config.n_atoms as f64, c / tau, config.t);
    let width = 15.0 * (2.0 * s).sqrt();
    let phi = config.phi;
    let centres = [phi, PI - phi];
    let mut windows = Vec::new();
    if width >= FRAC_PI_2 {
        windows.push((-FRAC_PI_2, FRAC_PI_2));
    } else {
        for c0 in centres {
            let r = c0 - 2.0 * PI * (c0 / (2.0 * PI)).round();
            for shift in [-2.0 * PI, 0.0, 2.0 * PI] {
                let lo = (r + shift - width).max(-FRAC_PI_2);
                let hi = (r + shift + width).min(FRAC_PI_2);
                if lo < hi {
                    windows.push((lo, hi));
                }
            }
        }
    }
    let rule = gl16();
    let mut info = 0.0;
    for (lo, hi) in merge_windows(windows) {
        info += rule.integrate(
            |d| {
                let (lq, dl) = ln_phase_density(d, phi, s);
                lq.exp() * dl * dl
            },
            lo,
            hi,
            64,
        );
    }
    let f = info * ds_dtau * ds_dtau;
    if !f.is_finite() {
        return Err(Error::numeric("BEC Fisher information is not finite"));
    }
    Ok(f)
}
