//! Discrete atom-count distributions of a two-port interferometer.

use crate::error::{Error, Result};
use crate::specfun::ln_gamma;

fn check_counts(n_a: u64, n: u64) -> Result<()> {
    if n_a > n {
        return Err(Error::domain(format!("count {n_a} exceeds atom number {n}")));
    }
    Ok(())
}

// x ln y with the convention 0 ln 0 = 0
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `ln C(n, k)` through log-gamma.
pub fn ln_binomial_coefficient(n: u64, k: u64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Log of the phase-stable count distribution
/// `C(N, n_a) cos^{2 n_a}(phi/2) sin^{2(N - n_a)}(phi/2)`.
pub fn ln_binomial_count_pmf(n_a: u64, n: u64, phi: f64) -> Result<f64> {
    check_counts(n_a, n)?;
    let c2 = (0.5 * phi).cos().powi(2);
    let s2 = (0.5 * phi).sin().powi(2);
    Ok(ln_binomial_coefficient(n, n_a) + xlny(n_a as f64, c2) + xlny((n - n_a) as f64, s2))
}

pub fn binomial_count_pmf(n_a: u64, n: u64, phi: f64) -> Result<f64> {
    ln_binomial_count_pmf(n_a, n, phi).map(f64::exp)
}

/// Log of the uniformly phase-averaged count distribution
/// `Gamma(n_a + 1/2) Gamma(N - n_a + 1/2) / (pi Gamma(n_a + 1) Gamma(N - n_a + 1))`.
pub fn ln_dephased_count_pmf(n_a: u64, n: u64) -> Result<f64> {
    check_counts(n_a, n)?;
    let a = n_a as f64;
    let b = (n - n_a) as f64;
    Ok(ln_gamma(a + 0.5) + ln_gamma(b + 0.5) - std::f64::consts::PI.ln() - ln_gamma(a + 1.0) - ln_gamma(b + 1.0))
}

pub fn dephased_count_pmf(n_a: u64, n: u64) -> Result<f64> {
    ln_dephased_count_pmf(n_a, n).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn binomial_special_phases() {
        for k in 0..=6u64 {
            let fair = binomial_count_pmf(k, 6, PI / 2.0).unwrap();
            let c = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0][k as usize];
            assert!((fair - c / 64.0).abs() < 1e-15);
        }
        assert_eq!(binomial_count_pmf(9, 9, 0.0).unwrap(), 1.0);
        assert_eq!(binomial_count_pmf(4, 9, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn binomial_small_case_by_hand() {
        let phi = PI / 3.0;
        let c2 = (phi / 2.0).cos().powi(2);
        let s2 = 1.0 - c2;
        let by_hand = [s2 * s2 * s2, 3.0 * c2 * s2 * s2, 3.0 * c2 * c2 * s2, c2 * c2 * c2];
        for (k, v) in by_hand.iter().enumerate() {
            let p = binomial_count_pmf(k as u64, 3, phi).unwrap();
            assert!((p - v).abs() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn dephased_single_atom_and_symmetry() {
        assert!((dephased_count_pmf(0, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((dephased_count_pmf(1, 1).unwrap() - 0.5).abs() < 1e-15);
        for k in 0..=7 {
            let a = dephased_count_pmf(k, 7).unwrap();
            let b = dephased_count_pmf(7 - k, 7).unwrap();
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn rejects_excess_counts() {
        assert!(binomial_count_pmf(4, 3, 0.1).is_err());
        assert!(dephased_count_pmf(4, 3).is_err());
    }
}
