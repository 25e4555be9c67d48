use rayon::prelude::*;

use crate::error::{Error, Result};

/// Log-uniform grid of classicalization times.
#[derive(Debug, Clone, PartialEq)]
pub struct TauGrid {
    points: Vec<f64>,
}

impl TauGrid {
    pub const MIN_POINTS: usize = 200;
    pub const DEFAULT_POINTS: usize = 1200;
    pub const DEFAULT_MIN: f64 = 1e2;
    pub const DEFAULT_MAX: f64 = 1e22;

    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min > 0.0) || !(max > min) || !max.is_finite() {
            return Err(Error::domain(format!("invalid tau range [{min:e}, {max:e}]")));
        }
        if n < Self::MIN_POINTS {
            return Err(Error::domain(format!("tau grid needs at least {} points, got {n}", Self::MIN_POINTS)));
        }
        let (a, b) = (min.log10(), max.log10());
        let step = (b - a) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| 10f64.powf(a + step * i as f64)).collect();
        points[0] = min;
        points[n - 1] = max;
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("tau grid is too fine to be strictly increasing"));
        }
        Ok(TauGrid { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Spacing in `log10 tau`.
    pub fn log_step(&self) -> f64 {
        (self.max().log10() - self.min().log10()) / (self.len() - 1) as f64
    }

    /// Index `i` with `points[i] <= tau <= points[i + 1]`.
    pub fn cell_of(&self, tau: f64) -> Option<usize> {
        if !(tau >= self.min() && tau <= self.max()) {
            return None;
        }
        let j = self.points.partition_point(|p| *p <= tau);
        Some(j.saturating_sub(1).min(self.len() - 2))
    }

    /// Evaluate `f` at every node, in parallel, keeping node order.
    pub fn map<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        self.points.par_iter().map(|t| f(*t)).collect()
    }
}

impl Default for TauGrid {
    fn default() -> Self {
        TauGrid::new(Self::DEFAULT_MIN, Self::DEFAULT_MAX, Self::DEFAULT_POINTS).expect("default grid is valid")
    }
}
