//! Likelihoods of recorded counts given a hypothesis point `(tau_e, sigma_q)`.
//!
//! Four experiment families are supported. Each exposes a log-likelihood and
//! the Fisher information about `tau_e`; [`ExperimentModel`] dispatches over
//! them and implements [`LikelihoodModel`], the interface used by the
//! inference and map code.

pub mod bec;
pub mod counts;
pub mod nested;
pub mod single_atom;
pub mod talbot_lau;

pub use bec::{bec_count_pdf, loglik_bec, BecCountDensity, BecMziConfig, COUNT_GRID};
pub use counts::{binomial_count_pmf, dephased_count_pmf, ln_binomial_count_pmf, ln_dephased_count_pmf};
pub use nested::{branch_phase_pdf, loglik_nested, phase_diff_pdf, NestedMziConfig, NestedShot};
pub use single_atom::{loglik_single_atom, PhaseBin, SingleAtomConfig};
pub use talbot_lau::{
    infer_blocked_pulsed, infer_blocked_stationary, loglik_talbot_lau, tl_signal, CountBin, ScanMode, TalbotLauRun,
    VelocityBin,
};

use crate::constants::MIN_CRITICAL_LENGTH;
use crate::error::Result;
use crate::mmm::MmmParams;

/// Anything that assigns a log-likelihood and a Fisher information to a
/// hypothesis point.
pub trait LikelihoodModel: Sync {
    fn loglik(&self, params: &MmmParams) -> Result<f64>;

    /// Fisher information about `tau_e` of the whole recorded dataset.
    fn fisher(&self, params: &MmmParams) -> Result<f64>;

    /// Fisher information defining the prior shape. Differs from
    /// [`fisher`](Self::fisher) only by a constant factor, and stays
    /// positive for records without data.
    fn design_fisher(&self, params: &MmmParams) -> Result<f64> {
        self.fisher(params)
    }

    /// True when the record holds no data, i.e. the likelihood is constant.
    fn is_empty(&self) -> bool;
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentModel {
    TalbotLau(TalbotLauRun),
    Bec(BecMziConfig),
    Nested(NestedMziConfig),
    SingleAtom(SingleAtomConfig),
}

impl ExperimentModel {
    /// Validate the configuration and prepare derived data (blocked counts).
    pub fn prepared(self) -> Result<Self> {
        match self {
            ExperimentModel::TalbotLau(run) => Ok(ExperimentModel::TalbotLau(run.with_inferred_blocked()?)),
            ExperimentModel::Bec(c) => c.validate().map(|_| ExperimentModel::Bec(c)),
            ExperimentModel::Nested(c) => c.validate().map(|_| ExperimentModel::Nested(c)),
            ExperimentModel::SingleAtom(c) => c.validate().map(|_| ExperimentModel::SingleAtom(c)),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentModel::TalbotLau(_) => "talbot_lau",
            ExperimentModel::Bec(_) => "bec",
            ExperimentModel::Nested(_) => "nested",
            ExperimentModel::SingleAtom(_) => "single_atom",
        }
    }

    /// Whether the model carries a free interferometer phase to be scanned.
    pub fn has_phase_nuisance(&self) -> bool {
        matches!(self, ExperimentModel::Bec(_))
    }

    /// Copy with the nuisance phase replaced (no-op for other families).
    pub fn with_phase(&self, phi: f64) -> Self {
        match self {
            ExperimentModel::Bec(c) => ExperimentModel::Bec(BecMziConfig { phi, ..c.clone() }),
            other => other.clone(),
        }
    }

    /// Range of critical lengths `hbar / sigma_q` where the model applies.
    pub fn validity_window(&self) -> Result<(f64, f64)> {
        match self {
            ExperimentModel::TalbotLau(run) => Ok((MIN_CRITICAL_LENGTH, run.max_critical_length()?)),
            ExperimentModel::Bec(c) => {
                let g = c.geometry()?;
                Ok((g.w_x.max(g.w_y).max(MIN_CRITICAL_LENGTH), g.delta_x))
            }
            ExperimentModel::Nested(c) => {
                let g = c.geometry()?;
                Ok((g.w_x.max(g.w_y).max(MIN_CRITICAL_LENGTH), g.delta_x))
            }
            ExperimentModel::SingleAtom(c) => {
                let g = c.geometry();
                Ok((g.w_x.max(g.w_y).max(MIN_CRITICAL_LENGTH), g.delta_x))
            }
        }
    }

    // `is_empty` is provided by `LikelihoodModel`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        match self {
            ExperimentModel::TalbotLau(r) => r.bins.len(),
            ExperimentModel::Bec(c) => c.shots.len(),
            ExperimentModel::Nested(c) => c.shots.len(),
            ExperimentModel::SingleAtom(c) => c.bins.len(),
        }
    }
}

impl LikelihoodModel for ExperimentModel {
    fn loglik(&self, params: &MmmParams) -> Result<f64> {
        match self {
            ExperimentModel::TalbotLau(r) => loglik_talbot_lau(r, params),
            ExperimentModel::Bec(c) => loglik_bec(c, params),
            ExperimentModel::Nested(c) => loglik_nested(c, params),
            ExperimentModel::SingleAtom(c) => loglik_single_atom(c, params),
        }
    }

    fn fisher(&self, params: &MmmParams) -> Result<f64> {
        match self {
            ExperimentModel::TalbotLau(r) => talbot_lau::fisher_talbot_lau(r, params),
            ExperimentModel::Bec(c) => Ok(c.shots.len() as f64 * bec::fisher_bec_per_shot(c, params)?),
            ExperimentModel::Nested(c) => Ok(c.shots.len() as f64 * nested::fisher_nested_per_shot(c, params)?),
            ExperimentModel::SingleAtom(c) => single_atom::fisher_single_atom_quadrature(c, params),
        }
    }

    fn design_fisher(&self, params: &MmmParams) -> Result<f64> {
        match self {
            ExperimentModel::Bec(c) => bec::fisher_bec_per_shot(c, params),
            ExperimentModel::Nested(c) => nested::fisher_nested_per_shot(c, params),
            _ => self.fisher(params),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            ExperimentModel::TalbotLau(r) => r.bins.is_empty(),
            ExperimentModel::Bec(c) => c.shots.is_empty(),
            ExperimentModel::Nested(c) => c.shots.is_empty(),
            ExperimentModel::SingleAtom(c) => c.bins.is_empty(),
        }
    }
}

/// `ln(e^a + e^b)` without overflow.
pub(crate) fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Sort and merge overlapping intervals.
pub(crate) fn merge_windows(mut w: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    w.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(w.len());
    for (lo, hi) in w {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}
