//! Special functions used by the likelihood formulas.
//!
//! Everything here is a pure function of its arguments.

mod erf;
mod gamma;
mod theta;

pub use erf::{erf, erfc};
pub use gamma::{ln_gamma, log_gamma};
pub use theta::{
    ln_theta3_nome_log, theta3, theta3_ln_and_dlog_ds, theta3_nome_log, theta3_series, theta3_wrapped_gaussian,
    THETA_REGIME_SWITCH,
};
