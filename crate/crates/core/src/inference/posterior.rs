use super::grid::TauGrid;
use crate::error::{Error, Result};

/// Normalised density over a [`TauGrid`], stored as log values.
///
/// The density is piecewise linear in `tau` between nodes for integration
/// (trapezoid rule) and its CDF is interpolated linearly inside each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    grid: TauGrid,
    log_density: Vec<f64>,
}

fn trapezoid(points: &[f64], values: &[f64]) -> f64 {
    points.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0])).sum()
}

impl Posterior {
    /// Normalise unnormalised log values by max subtraction and trapezoid.
    pub fn from_log_unnormalized(grid: TauGrid, log_values: Vec<f64>) -> Result<Self> {
        if log_values.len() != grid.len() {
            return Err(Error::AxisMismatch(format!(
                "{} values for a grid of {} points",
                log_values.len(),
                grid.len()
            )));
        }
        if log_values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::numeric("log density contains NaN or +inf"));
        }
        let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::numeric("density vanishes on the whole grid"));
        }
        let w: Vec<f64> = log_values.iter().map(|v| (v - max).exp()).collect();
        let z = trapezoid(grid.points(), &w);
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::numeric("density cannot be normalised on the grid"));
        }
        let shift = max + z.ln();
        let log_density = log_values.into_iter().map(|v| v - shift).collect();
        Ok(Posterior { grid, log_density })
    }

    pub fn grid(&self) -> &TauGrid {
        &self.grid
    }

    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    pub fn density(&self) -> Vec<f64> {
        self.log_density.iter().map(|v| v.exp()).collect()
    }

    /// Density divided by its maximum.
    pub fn relative_to_max(&self) -> Vec<f64> {
        let max = self.log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_density.iter().map(|v| (v - max).exp()).collect()
    }

    pub fn integral(&self) -> f64 {
        trapezoid(self.grid.points(), &self.density())
    }

    /// Cumulative trapezoid sums at the nodes.
    pub fn cdf(&self) -> Vec<f64> {
        let t = self.grid.points();
        let p = self.density();
        let mut out = Vec::with_capacity(t.len());
        let mut acc = 0.0;
        out.push(0.0);
        for i in 1..t.len() {
            acc += 0.5 * (p[i - 1] + p[i]) * (t[i] - t[i - 1]);
            out.push(acc);
        }
        out
    }

    /// CDF at `tau`, linear inside the enclosing cell.
    pub fn cdf_at(&self, tau: f64) -> Result<f64> {
        let i = self.grid.cell_of(tau).ok_or_else(|| Error::domain(format!("tau = {tau:e} outside the grid")))?;
        let t = self.grid.points();
        let c = self.cdf();
        let f = (tau - t[i]) / (t[i + 1] - t[i]);
        Ok(c[i] + f * (c[i + 1] - c[i]))
    }

    /// `tau` at which the CDF reaches `alpha`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0, 1), got {alpha}")));
        }
        let c = self.cdf();
        let t = self.grid.points();
        let j = c.partition_point(|v| *v < alpha).clamp(1, t.len() - 1);
        let i = j - 1;
        let span = c[j] - c[i];
        let f = if span > 0.0 { ((alpha - c[i]) / span).clamp(0.0, 1.0) } else { 0.0 };
        Ok(t[i] + f * (t[j] - t[i]))
    }

    /// Posterior odds `P(tau < tau*) / P(tau > tau*)`.
    pub fn odds_ratio(&self, tau_star: f64) -> Result<f64> {
        let f = self.cdf_at(tau_star)?;
        Ok(f / (1.0 - f))
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.log_density.iter().enumerate() {
            if *v > self.log_density[best] {
                best = i;
            }
        }
        best
    }

    pub fn mode(&self) -> f64 {
        self.grid.points()[self.argmax()]
    }

    /// Full width at half maximum between the outermost half-maximum
    /// crossings, linearly interpolated.
    pub fn fwhm(&self) -> Result<f64> {
        let p = self.relative_to_max();
        let t = self.grid.points();
        let n = p.len();
        let top = self.argmax();
        if top == 0 || top == n - 1 {
            return Err(Error::domain("density is maximal at a grid boundary"));
        }
        if p[0] >= 0.5 || p[n - 1] >= 0.5 {
            return Err(Error::domain("density does not fall below half maximum inside the grid"));
        }
        let first = p.iter().position(|v| *v >= 0.5).expect("maximum is 1");
        let last = p.iter().rposition(|v| *v >= 0.5).expect("maximum is 1");
        let cross = |a: usize, b: usize| t[a] + (0.5 - p[a]) / (p[b] - p[a]) * (t[b] - t[a]);
        Ok(cross(last, last + 1) - cross(first - 1, first))
    }
}

pub fn quantile(post: &Posterior, alpha: f64) -> Result<f64> {
    post.quantile(alpha)
}

pub fn odds_ratio(post: &Posterior, tau_star: f64) -> Result<f64> {
    post.odds_ratio(tau_star)
}

pub fn fwhm(post: &Posterior) -> Result<f64> {
    post.fwhm()
}
