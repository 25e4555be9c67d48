//! Talbot-Lau fringe scans with molecules counted behind the third grating.

use crate::error::{Error, Result};
use crate::mmm::{visibility_coefficient, MmmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    /// Continuous beam; blocked counts follow from the fair-sampling hypothesis.
    Stationary,
    /// Pulsed source with a reference count per pulse taken without grating.
    Pulsed,
}

/// One class of the time-of-flight distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityBin {
    pub weight: f64,
    /// Grating separation time, s.
    pub time: f64,
    /// Ideal quantum contrast.
    pub v0: f64,
}

/// Counts recorded at one position of the third grating.
#[derive(Debug, Clone, PartialEq)]
pub struct CountBin {
    pub x_s: f64,
    pub n_plus: u64,
    /// Reference count, pulsed mode only.
    pub n_zero: Option<u64>,
    /// Molecules blocked by the third grating, once inferred.
    pub n_minus: Option<f64>,
}

impl CountBin {
    pub fn new(x_s: f64, n_plus: u64) -> Self {
        CountBin { x_s, n_plus, n_zero: None, n_minus: None }
    }

    pub fn pulsed(x_s: f64, n_plus: u64, n_zero: u64) -> Self {
        CountBin { x_s, n_plus, n_zero: Some(n_zero), n_minus: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TalbotLauRun {
    pub mode: ScanMode,
    pub d_g: f64,
    pub f1: f64,
    pub f3: f64,
    /// Number of equidistant positions in one full scan.
    pub steps: usize,
    /// Fringe offset, m.
    pub delta_x_offset: f64,
    /// Laser power label, W.
    pub laser_power: f64,
    pub mass: f64,
    pub velocity_bins: Vec<VelocityBin>,
    pub bins: Vec<CountBin>,
}

fn check_fraction(name: &str, f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1), got {f}")))
    }
}

/// Blocked counts of a stationary scan, `N_tot / (M f3) - n_plus` per bin.
pub fn infer_blocked_stationary(bins: &[CountBin], steps: usize, f3: f64) -> Result<Vec<CountBin>> {
    if f3 <= 0.0 || f3 > 1.0 {
        return Err(Error::domain(format!("f3 must lie in (0, 1], got {f3}")));
    }
    if steps == 0 || bins.len() != steps {
        return Err(Error::domain(format!(
            "stationary scan needs one bin per step: {} bins for {steps} steps",
            bins.len()
        )));
    }
    let total: f64 = bins.iter().map(|b| b.n_plus as f64).sum();
    let per_position = total / (steps as f64 * f3);
    bins.iter()
        .map(|b| {
            let n_minus = per_position - b.n_plus as f64;
            if n_minus < 0.0 {
                return Err(Error::Inconsistent(format!(
                    "fair sampling violated at x_s = {:e}: {} detected of {per_position} expected",
                    b.x_s, b.n_plus
                )));
            }
            Ok(CountBin { n_minus: Some(n_minus), ..b.clone() })
        })
        .collect()
}

/// Blocked count of one pulse, `n_zero / f3 - n_plus`.
pub fn infer_blocked_pulsed(n_plus: u64, n_zero: u64, f3: f64) -> Result<f64> {
    if f3 <= 0.0 || f3 > 1.0 {
        return Err(Error::domain(format!("f3 must lie in (0, 1], got {f3}")));
    }
    let n_minus = n_zero as f64 / f3 - n_plus as f64;
    if n_minus < 0.0 {
        return Err(Error::Inconsistent(format!(
            "reference count {n_zero} implies fewer molecules than the {n_plus} detected"
        )));
    }
    Ok(n_minus)
}

impl TalbotLauRun {
    pub fn validate(&self) -> Result<()> {
        check_fraction("f1", self.f1)?;
        check_fraction("f3", self.f3)?;
        if !(self.d_g > 0.0) || !(self.mass > 0.0) {
            return Err(Error::domain("grating period and mass must be positive"));
        }
        if self.velocity_bins.is_empty() {
            return Err(Error::domain("at least one velocity class is required"));
        }
        let total: f64 = self.velocity_bins.iter().map(|v| v.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("velocity weights sum to {total}, expected 1")));
        }
        for v in &self.velocity_bins {
            if !(v.weight >= 0.0) || !(v.time > 0.0) || !(v.v0 >= 0.0 && v.v0 <= 1.0) {
                return Err(Error::domain(format!("invalid velocity class {v:?}")));
            }
        }
        if self.mode == ScanMode::Pulsed && self.bins.iter().any(|b| b.n_zero.is_none()) {
            return Err(Error::domain("pulsed scans need a reference count in every bin"));
        }
        Ok(())
    }

    /// Copy of the run with blocked counts filled in according to the scan mode.
    pub fn with_inferred_blocked(&self) -> Result<TalbotLauRun> {
        self.validate()?;
        let bins = match self.mode {
            ScanMode::Stationary if self.bins.is_empty() => Vec::new(),
            ScanMode::Stationary => infer_blocked_stationary(&self.bins, self.steps, self.f3)?,
            ScanMode::Pulsed => self
                .bins
                .iter()
                .map(|b| {
                    let n_zero = b.n_zero.unwrap_or(0);
                    let n_minus = infer_blocked_pulsed(b.n_plus, n_zero, self.f3)?;
                    Ok(CountBin { n_minus: Some(n_minus), ..b.clone() })
                })
                .collect::<Result<_>>()?,
        };
        Ok(TalbotLauRun { bins, ..self.clone() })
    }

    fn fringe_phase(&self, x_s: f64) -> f64 {
        2.0 * std::f64::consts::PI * (x_s + self.delta_x_offset) / self.d_g
    }

    /// Per velocity class, `c` in `V / V0 = exp(-c / tau_e)`.
    fn coefficients(&self, sigma_q: f64) -> Result<Vec<f64>> {
        self.velocity_bins.iter().map(|v| visibility_coefficient(sigma_q, self.mass, v.time, self.d_g)).collect()
    }

    /// Effective contrasts `V0 exp(-c / tau_e)` per velocity class.
    fn contrasts(&self, params: &MmmParams) -> Result<Vec<f64>> {
        let coef = self.coefficients(params.sigma_q())?;
        let out: Vec<f64> =
            self.velocity_bins.iter().zip(coef).map(|(v, c)| v.v0 * (-c / params.tau_e()).exp()).collect();
        if let Some(v) = out.iter().find(|v| **v > 1.0) {
            return Err(Error::Model(format!("effective contrast {v} exceeds 1")));
        }
        Ok(out)
    }

    /// Largest critical length for which the molecule picture applies,
    /// `d_g T / T_T` over the velocity classes.
    pub fn max_critical_length(&self) -> Result<f64> {
        let tt = crate::mmm::talbot_time(self.mass, self.d_g)?;
        Ok(self.velocity_bins.iter().map(|v| self.d_g * v.time / tt).fold(f64::INFINITY, f64::min))
    }
}

/// Velocity-averaged detection signal
/// `sum_v w f1 f3 [1 + V0 R sin(2 pi (x_s + dx) / d_g)]`.
pub fn tl_signal(x_s: f64, params: &MmmParams, run: &TalbotLauRun) -> Result<f64> {
    let contrasts = run.contrasts(params)?;
    let s = run.fringe_phase(x_s).sin();
    Ok(run.velocity_bins.iter().zip(&contrasts).map(|(v, c)| v.weight * run.f1 * run.f3 * (1.0 + c * s)).sum())
}

fn blocked(bin: &CountBin) -> Result<f64> {
    bin.n_minus.ok_or_else(|| Error::domain("blocked counts must be inferred before evaluating the likelihood"))
}

/// `sum_bins [n_plus ln(S/f1) + n_minus ln(1 - S/f1)]`.
pub fn loglik_talbot_lau(run: &TalbotLauRun, params: &MmmParams) -> Result<f64> {
    let contrasts = run.contrasts(params)?;
    let mut total = 0.0;
    for bin in &run.bins {
        let n_minus = blocked(bin)?;
        let s = run.fringe_phase(bin.x_s).sin();
        let p: f64 = run.velocity_bins.iter().zip(&contrasts).map(|(v, c)| v.weight * run.f3 * (1.0 + c * s)).sum();
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::numeric(format!("pass probability {p} outside (0, 1) at x_s = {:e}", bin.x_s)));
        }
        if bin.n_plus > 0 {
            total += bin.n_plus as f64 * p.ln();
        }
        if n_minus > 0.0 {
            total += n_minus * (-p).ln_1p();
        }
    }
    Ok(total)
}

/// Bernoulli Fisher information `sum_bins N (dp/dtau)^2 / (p (1 - p))`.
pub fn fisher_talbot_lau(run: &TalbotLauRun, params: &MmmParams) -> Result<f64> {
    let coef = run.coefficients(params.sigma_q())?;
    let tau = params.tau_e();
    let mut total = 0.0;
    for bin in &run.bins {
        let n = bin.n_plus as f64 + blocked(bin)?;
        if n == 0.0 {
            continue;
        }
        let s = run.fringe_phase(bin.x_s).sin();
        let mut p = 0.0;
        let mut dp = 0.0;
        for (v, c) in run.velocity_bins.iter().zip(&coef) {
            let r = (-c / tau).exp();
            p += v.weight * run.f3 * (1.0 + v.v0 * r * s);
            dp += v.weight * run.f3 * v.v0 * s * r * c / (tau * tau);
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::numeric(format!("pass probability {p} outside (0, 1)")));
        }
        total += n * dp * dp / (p * (1.0 - p));
    }
    Ok(total)
}
