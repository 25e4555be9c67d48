//! Nested Mach-Zehnder BEC interferometry with a phase-difference readout.

use std::f64::consts::PI;

use super::merge_windows;
use crate::error::{Error, Result};
use crate::mmm::{arm_separation, ArmGeometry, MmmParams};
use crate::quadrature::gl16;
use crate::specfun::theta3_ln_and_dlog_ds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestedShot {
    /// Measured phase difference in `[-pi, pi]`.
    pub delta_phi: f64,
    /// Expected phase difference of this shot.
    pub delta_phi_true: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedMziConfig {
    pub n_atoms: u64,
    pub mass: f64,
    /// Interference time; also sets the inner arm separation.
    pub t: f64,
    /// Momentum splitting of the inner interferometers, kg m/s.
    pub delta_p_inner: f64,
    pub w_x: f64,
    pub w_y: f64,
    pub extend_plateau: bool,
    pub shots: Vec<NestedShot>,
}

impl NestedMziConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::domain("atom number must be positive"));
        }
        if !(self.t > 0.0) {
            return Err(Error::domain("interference time must be positive"));
        }
        self.geometry()?.validate()?;
        for s in &self.shots {
            check_phase(s.delta_phi)?;
            if !s.delta_phi_true.is_finite() {
                return Err(Error::domain("expected phase difference must be finite"));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArmGeometry> {
        Ok(ArmGeometry {
            mass: self.mass,
            delta_x: arm_separation(self.delta_p_inner, self.t, self.mass)?,
            w_x: self.w_x,
            w_y: self.w_y,
            extend_plateau: self.extend_plateau,
        })
    }

    pub fn dephasing_rate(&self, params: &MmmParams) -> Result<f64> {
        Ok(self.geometry()?.dephasing_rate(params))
    }
}

fn check_phase(x: f64) -> Result<()> {
    if (-PI..=PI).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(format!("phase {x} outside [-pi, pi]")))
    }
}

/// Nome-log of one branch, chosen so that the branch density is a wrapped
/// Gaussian of variance `1/N + Gamma_P t / 2` (the variance is twice the
/// nome-log).
pub fn branch_nome_log(n: f64, gamma_p: f64, t: f64) -> f64 {
    0.5 / n + 0.25 * gamma_p * t
}

fn ln_wrapped(x: f64, s: f64) -> (f64, f64) {
    let (ln, d) = theta3_ln_and_dlog_ds(0.5 * x, s);
    (ln - (2.0 * PI).ln(), d)
}

/// Phase density of one branch, `theta3((phi - phi_true)/2, g_{N/2}) / 2pi`.
pub fn branch_phase_pdf(phi_meas: f64, phi_true: f64, n: u64, gamma_p: f64, t: f64) -> Result<f64> {
    check_phase(phi_meas)?;
    let s = branch_nome_log(n as f64, gamma_p, t);
    Ok(ln_wrapped(phi_meas - phi_true, s).0.exp())
}

/// Density of the phase difference: the branch nome squared.
pub fn phase_diff_pdf(dphi_meas: f64, dphi_true: f64, n: u64, gamma_p: f64, t: f64) -> Result<f64> {
    check_phase(dphi_meas)?;
    let s = 2.0 * branch_nome_log(n as f64, gamma_p, t);
    Ok(ln_wrapped(dphi_meas - dphi_true, s).0.exp())
}

pub fn loglik_nested(config: &NestedMziConfig, params: &MmmParams) -> Result<f64> {
    let gamma = config.dephasing_rate(params)?;
    let s = 2.0 * branch_nome_log(config.n_atoms as f64, gamma, config.t);
    let mut total = 0.0;
    for shot in &config.shots {
        check_phase(shot.delta_phi)?;
        total += ln_wrapped(shot.delta_phi - shot.delta_phi_true, s).0;
    }
    Ok(total)
}

/// Per-shot Fisher information about `tau_e`; it does not depend on the
/// expected phase since the density is periodic.
pub fn fisher_nested_per_shot(config: &NestedMziConfig, params: &MmmParams) -> Result<f64> {
    let c = config.geometry()?.dephasing_coefficient(params.sigma_q());
    let tau = params.tau_e();
    // s = 1/N + c t / (2 tau)
    let ds_dtau = -0.5 * config.t * c / (tau * tau);
    if ds_dtau == 0.0 {
        return Ok(0.0);
    }
    let s = 2.0 * branch_nome_log(config.n_atoms as f64, c / tau, config.t);
    let width = 15.0 * (2.0 * s).sqrt();
    let window = if width < PI { vec![(-width, width)] } else { vec![(-PI, PI)] };
    let info: f64 = merge_windows(window)
        .into_iter()
        .map(|(lo, hi)| {
            gl16().integrate(
                |x| {
                    let (lp, d) = ln_wrapped(x, s);
                    lp.exp() * d * d
                },
                lo,
                hi,
                64,
            )
        })
        .sum();
    let f = info * ds_dtau * ds_dtau;
    if !f.is_finite() {
        return Err(Error::numeric("nested Fisher information is not finite"));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_range_rejected() {
        assert!(branch_phase_pdf(3.2, 0.0, 100, 0.0, 1.0).is_err());
        assert!(phase_diff_pdf(-3.2, 0.0, 100, 0.0, 1.0).is_err());
    }

    #[test]
    fn unique_mode_at_expected_value() {
        let at = phase_diff_pdf(0.4, 0.4, 1000, 0.1, 1.0).unwrap();
        for x in [-3.0, -1.0, 0.3, 0.39, 0.41, 2.0] {
            assert!(phase_diff_pdf(x, 0.4, 1000, 0.1, 1.0).unwrap() < at);
        }
    }
}
