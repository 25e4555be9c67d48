//! Grid-based Bayesian inference over the classicalization time `tau_e`.
//!
//! Densities live on a log-spaced [`TauGrid`] and are kept in log space.
//! Integrals use the trapezoid rule in linear `tau`.

mod fisher;
mod grid;
mod hellinger;
mod macroscopicity;
mod posterior;

pub use fisher::{fisher_information, jeffreys_prior, jeffreys_single_atom, posterior_update, FisherProfile};
pub use grid::TauGrid;
pub use hellinger::{hellinger, hellinger_between, min_hellinger, HellingerMin};
pub use macroscopicity::{
    analyze, macroscopicity, phase_grid, quantile_bounds_shift, refine_grid, table_row, Analysis, AnalysisOptions,
    Macroscopicity, ScanPoint, TableRow, DEFAULT_PHASE_POINTS,
};
pub use posterior::{fwhm, odds_ratio, quantile, Posterior};
