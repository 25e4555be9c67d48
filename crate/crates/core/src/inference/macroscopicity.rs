//! Prior-to-posterior analysis at fixed `sigma_q` and the maximisation that
//! defines the empirical macroscopicity.

use std::f64::consts::PI;

use log::{info, warn};

use super::fisher::jeffreys_prior;
use super::grid::TauGrid;
use super::hellinger::{min_hellinger, HellingerMin};
use super::posterior::Posterior;
use crate::error::{Error, Result};
use crate::likelihood::{ExperimentModel, LikelihoodModel};
use crate::mmm::MmmParams;

/// Log-density drop below the maximum that delimits the refined window.
const REFINE_DEPTH: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Quantile level defining the excluded region.
    pub alpha: f64,
    /// Re-grid the posterior on the region carrying its mass.
    pub refine: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { alpha: 0.05, refine: true }
    }
}

/// Prior and posterior of one experiment at fixed `sigma_q`.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub sigma_q: f64,
    pub prior: Posterior,
    pub posterior: Posterior,
    /// `alpha`-quantile of the posterior, s.
    pub tau_m: f64,
    /// False when the record held no data and the posterior is the prior.
    pub updated: bool,
}

fn log_posterior_values<M: LikelihoodModel + ?Sized>(model: &M, grid: &TauGrid, sigma_q: f64) -> Result<Vec<f64>> {
    let prior = jeffreys_prior(model, grid, sigma_q)?;
    let ll = grid.map(|tau| model.loglik(&MmmParams::new(tau, sigma_q)?))?;
    Ok(prior.log_density().iter().zip(ll).map(|(a, b)| a + b).collect())
}

/// Grid with the same number of nodes spanning the nodes whose value lies
/// within `REFINE_DEPTH` of the maximum, padded by one node. Returns `None`
/// when that region already covers most of the grid.
pub fn refine_grid(grid: &TauGrid, log_values: &[f64]) -> Result<Option<TauGrid>> {
    let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Ok(None);
    }
    let keep = |v: &f64| *v > max - REFINE_DEPTH;
    let first = log_values.iter().position(keep).expect("maximum is kept");
    let last = log_values.iter().rposition(keep).expect("maximum is kept");
    let lo = first.saturating_sub(1);
    let hi = (last + 1).min(grid.len() - 1);
    if (hi - lo) * 2 > grid.len() {
        return Ok(None);
    }
    let t = grid.points();
    Ok(Some(TauGrid::new(t[lo], t[hi], grid.len())?))
}

/// Jeffreys prior on `grid`, posterior (optionally refined) and quantile.
pub fn analyze<M: LikelihoodModel + ?Sized>(
    model: &M,
    grid: &TauGrid,
    sigma_q: f64,
    options: &AnalysisOptions,
) -> Result<Analysis> {
    let prior = jeffreys_prior(model, grid, sigma_q)?;
    if model.is_empty() {
        let tau_m = prior.quantile(options.alpha)?;
        return Ok(Analysis { sigma_q, posterior: prior.clone(), prior, tau_m, updated: false });
    }
    let ll = grid.map(|tau| model.loglik(&MmmParams::new(tau, sigma_q)?))?;
    let coarse: Vec<f64> = prior.log_density().iter().zip(&ll).map(|(a, b)| a + b).collect();
    let refined = if options.refine { refine_grid(grid, &coarse)? } else { None };
    let posterior = match refined {
        Some(fine) => Posterior::from_log_unnormalized(fine.clone(), log_posterior_values(model, &fine, sigma_q)?)?,
        None => Posterior::from_log_unnormalized(grid.clone(), coarse)?,
    };
    let tau_m = posterior.quantile(options.alpha)?;
    Ok(Analysis { sigma_q, prior, posterior, tau_m, updated: true })
}

/// Relative shift of the quantile when the log-range of the grid is doubled
/// about its centre.
pub fn quantile_bounds_shift<M: LikelihoodModel + ?Sized>(
    model: &M,
    grid: &TauGrid,
    sigma_q: f64,
    options: &AnalysisOptions,
) -> Result<f64> {
    let base = analyze(model, grid, sigma_q, options)?;
    let (a, b) = (grid.min().log10(), grid.max().log10());
    let half = b - a;
    let wide = TauGrid::new(10f64.powf(a - 0.5 * half), 10f64.powf(b + 0.5 * half), 2 * grid.len())?;
    let other = analyze(model, &wide, sigma_q, options)?;
    Ok((other.tau_m / base.tau_m - 1.0).abs())
}

/// Uniform grid of `n` phases on `[0, 2 pi)`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

pub const DEFAULT_PHASE_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub sigma_q: f64,
    pub phi: Option<f64>,
    /// `None` when the point was skipped.
    pub tau_m: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Macroscopicity {
    /// `log10(tau_m / 1 s)` at the maximiser.
    pub mu_m: f64,
    pub sigma_q_star: f64,
    pub phi_star: Option<f64>,
    pub tau_m: f64,
    pub best: Analysis,
    pub scan: Vec<ScanPoint>,
}

/// Maximise the excluded classicalization time over `sigma_q` and, for
/// models with a free phase, over `phases` (defaults to 256 points).
pub fn macroscopicity(
    model: &ExperimentModel,
    sigma_q_grid: &[f64],
    tau_grid: &TauGrid,
    phases: Option<&[f64]>,
    options: &AnalysisOptions,
) -> Result<Macroscopicity> {
    if sigma_q_grid.is_empty() {
        return Err(Error::domain("sigma_q grid is empty"));
    }
    let default_phases;
    let phase_list: Vec<Option<f64>> = if model.has_phase_nuisance() {
        let p = match phases {
            Some(p) => p,
            None => {
                default_phases = phase_grid(DEFAULT_PHASE_POINTS);
                &default_phases
            }
        };
        p.iter().map(|x| Some(*x)).collect()
    } else {
        vec![None]
    };
    let mut scan = Vec::new();
    let mut best: Option<(Analysis, Option<f64>)> = None;
    let mut last_err = None;
    for &sigma_q in sigma_q_grid {
        for phi in &phase_list {
            let m = match phi {
                Some(p) => model.with_phase(*p),
                None => model.clone(),
            };
            match analyze(&m, tau_grid, sigma_q, options) {
                Ok(a) => {
                    scan.push(ScanPoint { sigma_q, phi: *phi, tau_m: Some(a.tau_m) });
                    if best.as_ref().is_none_or(|(b, _)| a.tau_m > b.tau_m) {
                        best = Some((a, *phi));
                    }
                }
                Err(e) => {
                    warn!("skipping sigma_q = {sigma_q:e}, phi = {phi:?}: {e}");
                    scan.push(ScanPoint { sigma_q, phi: *phi, tau_m: None });
                    last_err = Some(e);
                }
            }
        }
    }
    let (best, phi_star) = match best {
        Some(b) => b,
        None => return Err(last_err.expect("at least one point was attempted")),
    };
    let mu_m = best.tau_m.log10();
    info!("mu_m = {mu_m:.3} at sigma_q = {:e}", best.sigma_q);
    Ok(Macroscopicity { mu_m, sigma_q_star: best.sigma_q, phi_star, tau_m: best.tau_m, best, scan })
}

/// Convergence diagnostics in the layout of a results table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub fwhm: f64,
    pub gauss_fwhm: f64,
    pub h_min: f64,
    pub mu_m: f64,
}

impl TableRow {
    pub const HEADER: &'static str = "FWHM, Gaus. FWHM, min. HD, μ_m";

    pub fn line(&self) -> String {
        format!("{:.3e}, {:.3e}, {:.5}, {:.1}", self.fwhm, self.gauss_fwhm, self.h_min, self.mu_m)
    }
}

/// FWHM of the posterior, FWHM of the best-fitting Gaussian, minimal
/// Hellinger distance and `mu_m`.
pub fn table_row<M: LikelihoodModel + ?Sized>(
    analysis: &Analysis,
    model: &M,
    mu_m: f64,
) -> Result<(TableRow, HellingerMin)> {
    let fwhm = analysis.posterior.fwhm()?;
    let hm = min_hellinger(&analysis.posterior, model, analysis.sigma_q)?;
    let gauss_fwhm = 2.0 * (2.0 * 2f64.ln()).sqrt() / hm.fisher0.sqrt();
    Ok((TableRow { fwhm, gauss_fwhm, h_min: hm.h_min, mu_m }, hm))
}
