//! Observable consequences of minimal macrorealist modifications: contrast
//! loss in Talbot-Lau interferometers, the dephasing rate between two
//! Mach-Zehnder arms, and single-atom port probabilities.
//!
//! All quantities are SI. The modification strength enters only through
//! `1 / tau_e`, so most rates are exposed both directly and as a coefficient
//! `c` with `rate = c / tau_e`.

use crate::constants::{ELECTRON_MASS, HBAR, MIN_CRITICAL_LENGTH, PLANCK};
use crate::error::{Error, Result};
use crate::specfun::erf;

/// A hypothesis point `(tau_e, sigma_q)` in the CSL limit (`sigma_s = 0`).
///
/// `tau_e = +inf` is accepted and switches the modification off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmmParams {
    tau_e: f64,
    sigma_q: f64,
}

impl MmmParams {
    pub fn new(tau_e: f64, sigma_q: f64) -> Result<Self> {
        if !(tau_e > 0.0) {
            return Err(Error::domain(format!("tau_e must be positive, got {tau_e}")));
        }
        if !(sigma_q > 0.0) || !sigma_q.is_finite() {
            return Err(Error::domain(format!("sigma_q must be positive, got {sigma_q}")));
        }
        let length = HBAR / sigma_q;
        if length < MIN_CRITICAL_LENGTH * (1.0 - 1e-12) {
            return Err(Error::domain(format!("critical length hbar/sigma_q = {length:e} m is below the 10 fm bound")));
        }
        Ok(MmmParams { tau_e, sigma_q })
    }

    /// Build from the critical length `hbar / sigma_q` in metres.
    pub fn from_critical_length(tau_e: f64, length: f64) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::domain(format!("critical length must be positive, got {length}")));
        }
        Self::new(tau_e, HBAR / length)
    }

    pub fn tau_e(&self) -> f64 {
        self.tau_e
    }

    pub fn sigma_q(&self) -> f64 {
        self.sigma_q
    }

    pub fn critical_length(&self) -> f64 {
        HBAR / self.sigma_q
    }

    /// Position width of the modification; pinned to the CSL limit.
    pub fn sigma_s(&self) -> f64 {
        0.0
    }

    pub fn with_tau(&self, tau_e: f64) -> Result<Self> {
        Self::new(tau_e, self.sigma_q)
    }
}

/// Particle species entering the mass scaling `(m / m_e)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSpec {
    pub mass: f64,
}

impl ParticleSpec {
    pub fn new(mass: f64) -> Result<Self> {
        positive("mass", mass)?;
        Ok(ParticleSpec { mass })
    }

    pub fn mass_ratio_sq(&self) -> f64 {
        let r = self.mass / ELECTRON_MASS;
        r * r
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be non-negative and finite, got {v}")))
    }
}

/// Talbot time `m d_g^2 / h`.
pub fn talbot_time(mass: f64, d_g: f64) -> Result<f64> {
    positive("mass", mass)?;
    positive("grating period", d_g)?;
    Ok(mass * d_g * d_g / PLANCK)
}

/// `1 - sqrt(pi) erf(a) / (2a)`, with a series for small `a` where the
/// difference cancels.
pub fn visibility_bracket(a: f64) -> f64 {
    if a < 0.1 {
        // sum_{n>=1} (-1)^{n+1} a^{2n} / (n! (2n+1))
        let a2 = a * a;
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 1..12 {
            let nf = n as f64;
            term *= -a2 / nf;
            sum -= term / (2.0 * nf + 1.0);
        }
        sum
    } else {
        1.0 - std::f64::consts::PI.sqrt() * erf(a) / (2.0 * a)
    }
}

/// Argument of the error function in the contrast reduction,
/// `d_g sigma_q T / (sqrt(2) hbar T_T)`.
pub fn visibility_argument(sigma_q: f64, mass: f64, time: f64, d_g: f64) -> Result<f64> {
    let tt = talbot_time(mass, d_g)?;
    Ok(d_g * sigma_q * time / (std::f64::consts::SQRT_2 * HBAR * tt))
}

/// Coefficient `c` (seconds) with `V / V0 = exp(-c / tau_e)`.
pub fn visibility_coefficient(sigma_q: f64, mass: f64, time: f64, d_g: f64) -> Result<f64> {
    positive("sigma_q", sigma_q)?;
    positive("time of flight", time)?;
    let a = visibility_argument(sigma_q, mass, time, d_g)?;
    let ratio = mass / ELECTRON_MASS;
    Ok(2.0 * time * ratio * ratio * visibility_bracket(a))
}

/// Contrast reduction `V / V0` of a Talbot-Lau interferometer.
pub fn visibility_ratio(params: &MmmParams, mass: f64, time: f64, d_g: f64) -> Result<f64> {
    let c = visibility_coefficient(params.sigma_q(), mass, time, d_g)?;
    Ok((-c / params.tau_e()).exp())
}

/// Geometric factor of the dephasing rate, between 0 and 1:
/// `[1 - exp(-dx^2 / (4 w_x^2 + 2 l^2))] / sqrt((1 + 2 w_x^2/l^2)(1 + 2 w_y^2/l^2))`
/// with `l = hbar / sigma_q`.
pub fn dephasing_geometry(sigma_q: f64, delta_x: f64, w_x: f64, w_y: f64) -> f64 {
    let l = HBAR / sigma_q;
    let l2 = l * l;
    let arg = delta_x * delta_x / (4.0 * w_x * w_x + 2.0 * l2);
    let num = -(-arg).exp_m1();
    let den = ((1.0 + 2.0 * w_x * w_x / l2) * (1.0 + 2.0 * w_y * w_y / l2)).sqrt();
    num / den
}

/// MMM dephasing rate between two arms separated by `delta_x`, for a
/// Gaussian transverse mode with waists `w_x`, `w_y`.
pub fn dephasing_rate(params: &MmmParams, mass: f64, delta_x: f64, w_x: f64, w_y: f64) -> Result<f64> {
    positive("mass", mass)?;
    non_negative("delta_x", delta_x)?;
    non_negative("w_x", w_x)?;
    non_negative("w_y", w_y)?;
    let r = mass / ELECTRON_MASS;
    Ok(2.0 * r * r / params.tau_e() * dephasing_geometry(params.sigma_q(), delta_x, w_x, w_y))
}

/// Effective average arm separation `delta_p T / (2 sqrt(3) m)`.
pub fn arm_separation(delta_p: f64, time: f64, mass: f64) -> Result<f64> {
    positive("momentum splitting", delta_p)?;
    positive("time", time)?;
    positive("mass", mass)?;
    Ok(delta_p * time / (2.0 * 3f64.sqrt() * mass))
}

/// Probability to find a single atom in port `a`:
/// `1/2 - cos(phi) exp(-gamma_p t / 2) / 4`.
pub fn single_atom_port_prob(phi: f64, gamma_p: f64, t: f64) -> f64 {
    0.5 - phi.cos() * (-0.5 * gamma_p * t).exp() / 4.0
}

/// Arm geometry of a Mach-Zehnder experiment, used to turn `sigma_q` into a
/// dephasing coefficient.
///
/// With `extend_plateau` set, the geometric factor for critical lengths
/// below its maximum is held at the maximum, i.e. the drop of the dephasing
/// rate in the depletion regime is ignored (atom loss assumed monitored).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmGeometry {
    pub mass: f64,
    pub delta_x: f64,
    pub w_x: f64,
    pub w_y: f64,
    pub extend_plateau: bool,
}

impl ArmGeometry {
    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        non_negative("delta_x", self.delta_x)?;
        non_negative("w_x", self.w_x)?;
        non_negative("w_y", self.w_y)
    }

    /// Geometric factor, plateau extension applied when requested.
    pub fn factor(&self, sigma_q: f64) -> f64 {
        let raw = dephasing_geometry(sigma_q, self.delta_x, self.w_x, self.w_y);
        if !self.extend_plateau || (self.w_x == 0.0 && self.w_y == 0.0) {
            return raw;
        }
        let l_star = self.plateau_length();
        if HBAR / sigma_q < l_star {
            dephasing_geometry(HBAR / l_star, self.delta_x, self.w_x, self.w_y)
        } else {
            raw
        }
    }

    /// Critical length maximising the raw geometric factor.
    pub fn plateau_length(&self) -> f64 {
        let g = |ln_l: f64| dephasing_geometry(HBAR / ln_l.exp(), self.delta_x, self.w_x, self.w_y);
        let scale = self.delta_x.max(self.w_x).max(self.w_y).max(MIN_CRITICAL_LENGTH);
        let (mut a, mut b) = ((MIN_CRITICAL_LENGTH * 1e-3).ln(), (scale * 1e3).ln());
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        while (b - a).abs() > 1e-10 {
            if gc > gd {
                b = d;
                d = c;
                gd = gc;
                c = b - inv_phi * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + inv_phi * (b - a);
                gd = g(d);
            }
        }
        (0.5 * (a + b)).exp()
    }

    /// `c` in `Gamma_P = c / tau_e`.
    pub fn dephasing_coefficient(&self, sigma_q: f64) -> f64 {
        let r = self.mass / ELECTRON_MASS;
        2.0 * r * r * self.factor(sigma_q)
    }

    pub fn dephasing_rate(&self, params: &MmmParams) -> f64 {
        self.dephasing_coefficient(params.sigma_q()) / params.tau_e()
    }
}
