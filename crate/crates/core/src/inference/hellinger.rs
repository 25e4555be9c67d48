//! Distance between a grid posterior and its asymptotic Gaussian.

use std::f64::consts::PI;

use log::warn;

use super::posterior::Posterior;
use crate::error::{Error, Result};
use crate::likelihood::LikelihoodModel;
use crate::mmm::MmmParams;
use crate::quadrature::gl16;
use crate::specfun::erfc;

const MAX_SUBPANELS: usize = 4096;

/// Hellinger distance between the posterior and `N(tau0, 1/fisher0)` on
/// `[0, inf)`. The Gaussian is not renormalised to the half line.
pub fn hellinger(post: &Posterior, tau0: f64, fisher0: f64) -> Result<f64> {
    if !(fisher0 > 0.0) || !fisher0.is_finite() {
        return Err(Error::domain(format!("Fisher information must be positive, got {fisher0}")));
    }
    let sigma = 1.0 / fisher0.sqrt();
    let gauss_mass = 0.5 * erfc(-tau0 / (sigma * std::f64::consts::SQRT_2));
    let ln_norm = -0.5 * (2.0 * PI).ln() - sigma.ln();
    let ln_gauss = |t: f64| ln_norm - 0.5 * ((t - tau0) / sigma).powi(2);

    let t = post.grid().points();
    let p = post.density();
    let rule = gl16();
    let mut overlap = 0.0;
    for i in 0..t.len() - 1 {
        let (a, b) = (t[i], t[i + 1]);
        let nearest = tau0.clamp(a, b);
        if (nearest - tau0).abs() > 40.0 * sigma || (p[i] == 0.0 && p[i + 1] == 0.0) {
            continue;
        }
        let panels = (((b - a) / (0.25 * sigma)).ceil() as usize).clamp(1, MAX_SUBPANELS);
        let (pa, pb) = (p[i], p[i + 1]);
        overlap += rule.integrate(
            |x| {
                let lin = pa + (pb - pa) * (x - a) / (b - a);
                (0.5 * ln_gauss(x)).exp() * lin.max(0.0).sqrt()
            },
            a,
            b,
            panels,
        );
    }
    let h2 = 0.5 * (gauss_mass + 1.0 - 2.0 * overlap);
    Ok(h2.clamp(0.0, 1.0).sqrt())
}

/// Hellinger distance between two densities tabulated on the same nodes,
/// both taken piecewise linear between nodes.
pub fn hellinger_between(points: &[f64], p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != points.len() || q.len() != points.len() {
        return Err(Error::AxisMismatch("densities and nodes differ in length".into()));
    }
    let rule = gl16();
    let mut h2 = 0.0;
    for i in 0..points.len() - 1 {
        let (a, b) = (points[i], points[i + 1]);
        let lin = |v: &[f64], x: f64| (v[i] + (v[i + 1] - v[i]) * (x - a) / (b - a)).max(0.0);
        h2 += rule.integrate(|x| (lin(p, x).sqrt() - lin(q, x).sqrt()).powi(2), a, b, 1);
    }
    Ok((0.5 * h2).clamp(0.0, 1.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HellingerMin {
    pub h_min: f64,
    pub tau0: f64,
    pub fisher0: f64,
    /// Set when the minimum sits at the edge of the grid.
    pub at_boundary: bool,
}

impl HellingerMin {
    /// Turn a boundary minimum into an error.
    pub fn require_interior(self) -> Result<Self> {
        if self.at_boundary {
            Err(Error::Optimization(format!(
                "no interior Hellinger minimum; boundary value {} at tau0 = {:e}",
                self.h_min, self.tau0
            )))
        } else {
            Ok(self)
        }
    }
}

/// Minimise [`hellinger`] over the Gaussian centre, with the Fisher
/// information recomputed at every candidate centre.
pub fn min_hellinger<M: LikelihoodModel + ?Sized>(post: &Posterior, model: &M, sigma_q: f64) -> Result<HellingerMin> {
    let eval = |tau0: f64| -> Result<(f64, f64)> {
        let f = model.fisher(&MmmParams::new(tau0, sigma_q)?)?;
        if !(f > 0.0) || !f.is_finite() {
            return Ok((1.0, f));
        }
        Ok((hellinger(post, tau0, f)?, f))
    };
    let t = post.grid().points();
    let rel = post.relative_to_max();
    let candidates: Vec<usize> = (0..t.len()).filter(|i| rel[*i] >= 1e-4).collect();
    let mut best = (f64::INFINITY, 0usize, 0.0);
    for &i in &candidates {
        let (h, f) = eval(t[i])?;
        if h < best.0 {
            best = (h, i, f);
        }
    }
    let (mut h_best, idx, mut f_best) = best;
    if !h_best.is_finite() {
        return Err(Error::Optimization("Hellinger distance could not be evaluated".into()));
    }
    let mut tau_best = t[idx];
    let at_boundary = idx == 0 || idx == t.len() - 1;
    if at_boundary {
        warn!("Hellinger minimum at the grid boundary, tau0 = {tau_best:e}");
    } else {
        // golden section on ln tau0 inside the neighbouring cells
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (t[idx - 1].ln(), t[idx + 1].ln());
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = eval(c.exp())?;
        let mut fd = eval(d.exp())?;
        while b - a > 1e-4 {
            if fc.0 < fd.0 {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c.exp())?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = eval(d.exp())?;
            }
        }
        for (x, r) in [(c, fc), (d, fd)] {
            if r.0 < h_best {
                h_best = r.0;
                f_best = r.1;
                tau_best = x.exp();
            }
        }
    }
    Ok(HellingerMin { h_min: h_best, tau0: tau_best, fisher0: f_best, at_boundary })
}
