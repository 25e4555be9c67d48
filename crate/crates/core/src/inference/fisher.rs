use super::grid::TauGrid;
use super::posterior::Posterior;
use crate::error::{Error, Result};
use crate::likelihood::single_atom::fisher_single_atom_closed_form;
use crate::likelihood::{LikelihoodModel, SingleAtomConfig};
use crate::mmm::MmmParams;

/// Fisher information about `tau_e` at `params`, checked to be finite and
/// non-negative.
pub fn fisher_information<M: LikelihoodModel + ?Sized>(model: &M, params: &MmmParams) -> Result<f64> {
    checked(model.fisher(params)?)
}

fn checked(f: f64) -> Result<f64> {
    if f.is_finite() && f >= 0.0 {
        Ok(f)
    } else {
        Err(Error::numeric(format!("Fisher information {f} is not a finite non-negative number")))
    }
}

/// Fisher information along a tau grid at fixed `sigma_q`.
#[derive(Debug, Clone)]
pub struct FisherProfile {
    pub grid: TauGrid,
    pub fisher: Vec<f64>,
}

impl FisherProfile {
    pub fn compute<M: LikelihoodModel + ?Sized>(model: &M, grid: &TauGrid, sigma_q: f64) -> Result<Self> {
        let fisher = grid.map(|tau| fisher_information(model, &MmmParams::new(tau, sigma_q)?))?;
        Ok(FisherProfile { grid: grid.clone(), fisher })
    }
}

fn prior_from_fisher(grid: &TauGrid, fisher: Vec<f64>) -> Result<Posterior> {
    let mut log_values = Vec::with_capacity(fisher.len());
    for f in fisher {
        log_values.push(0.5 * checked(f)?.ln());
    }
    if log_values.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::DegeneratePrior("Fisher information vanishes on the whole grid".into()));
    }
    Posterior::from_log_unnormalized(grid.clone(), log_values)
}

/// Jeffreys prior, proportional to the square root of the Fisher information.
pub fn jeffreys_prior<M: LikelihoodModel + ?Sized>(model: &M, grid: &TauGrid, sigma_q: f64) -> Result<Posterior> {
    let fisher = grid.map(|tau| model.design_fisher(&MmmParams::new(tau, sigma_q)?))?;
    prior_from_fisher(grid, fisher)
}

/// Jeffreys prior of the single-atom model from its closed-form Fisher information.
pub fn jeffreys_single_atom(config: &SingleAtomConfig, grid: &TauGrid, sigma_q: f64) -> Result<Posterior> {
    let fisher = grid.map(|tau| Ok(fisher_single_atom_closed_form(config, &MmmParams::new(tau, sigma_q)?)))?;
    prior_from_fisher(grid, fisher)
}

/// Multiply the prior by the likelihood of `model` at every grid node.
pub fn posterior_update<M: LikelihoodModel + ?Sized>(prior: &Posterior, model: &M, sigma_q: f64) -> Result<Posterior> {
    if model.is_empty() {
        return Ok(prior.clone());
    }
    let grid = prior.grid();
    let ll = grid.map(|tau| model.loglik(&MmmParams::new(tau, sigma_q)?))?;
    let log_values: Vec<f64> = prior.log_density().iter().zip(&ll).map(|(a, b)| a + b).collect();
    if log_values.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::numeric("posterior underflows on the whole grid"));
    }
    Posterior::from_log_unnormalized(grid.clone(), log_values)
}
