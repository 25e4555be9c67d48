//! Two-dimensional likelihood maps over `(tau_e, hbar / sigma_q)`.
//!
//! Log-likelihoods are stored as fixed-point integers with a resolution of
//! `2^-64`, so that combining maps is exactly associative and commutative
//! whatever the order. Rows run along the length axis, columns along tau.

use std::io::{Read, Write};

use log::warn;
use rayon::prelude::*;

use crate::constants::{ELECTRON_MASS, HBAR, MIN_CRITICAL_LENGTH, NEUTRON_MASS};
use crate::error::{Error, Result};
use crate::inference::TauGrid;
use crate::likelihood::LikelihoodModel;
use crate::mmm::MmmParams;

const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64
const NEG_INF: i128 = i128::MIN;
const MAGIC: &[u8; 8] = b"MMMAP2D\0";
const FORMAT_VERSION: u8 = 1;

/// Maximum fraction of the 2D posterior mass allowed in the outermost cells.
pub const BOUNDARY_MASS_LIMIT: f64 = 0.2;

fn to_fixed(x: f64) -> Result<i128> {
    if x == f64::NEG_INFINITY {
        return Ok(NEG_INF);
    }
    if !x.is_finite() {
        return Err(Error::numeric(format!("log-likelihood {x} cannot be stored")));
    }
    let v = (x * SCALE).round();
    if v.abs() >= 1.0e38 {
        return Err(Error::numeric(format!("log-likelihood {x} out of range")));
    }
    Ok(v as i128)
}

fn from_fixed(v: i128) -> f64 {
    if v == NEG_INF {
        f64::NEG_INFINITY
    } else {
        v as f64 / SCALE
    }
}

/// Log-spaced critical lengths `hbar / sigma_q`, m.
pub fn length_axis(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min >= MIN_CRITICAL_LENGTH * (1.0 - 1e-12)) || !(max > min) || n < 2 {
        return Err(Error::domain(format!("invalid length axis [{min:e}, {max:e}] x {n}")));
    }
    let (a, b) = (min.log10(), max.log10());
    let mut v: Vec<f64> = (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect();
    v[0] = min;
    v[n - 1] = max;
    Ok(v)
}

pub const DEFAULT_TAU_NODES: usize = 300;
pub const DEFAULT_LENGTH_NODES: usize = 200;
pub const DEFAULT_LENGTH_MIN: f64 = 10e-15;
pub const DEFAULT_LENGTH_MAX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Map2D {
    tau_axis: TauGrid,
    length_axis: Vec<f64>,
    /// Row-major, `length_axis.len()` rows of `tau_axis.len()` entries.
    cells: Vec<i128>,
    pub label: String,
}

impl Map2D {
    pub fn from_values(tau_axis: TauGrid, length_axis: Vec<f64>, values: &[f64], label: &str) -> Result<Self> {
        if values.len() != tau_axis.len() * length_axis.len() {
            return Err(Error::AxisMismatch(format!(
                "{} values for a {} x {} map",
                values.len(),
                length_axis.len(),
                tau_axis.len()
            )));
        }
        let cells = values.iter().map(|v| to_fixed(*v)).collect::<Result<_>>()?;
        Ok(Map2D { tau_axis, length_axis, cells, label: label.to_string() })
    }

    /// The multiplicative unit: a map of zeros.
    pub fn zeros(tau_axis: TauGrid, length_axis: Vec<f64>, label: &str) -> Self {
        let cells = vec![0; tau_axis.len() * length_axis.len()];
        Map2D { tau_axis, length_axis, cells, label: label.to_string() }
    }

    pub fn tau_axis(&self) -> &TauGrid {
        &self.tau_axis
    }

    pub fn length_axis(&self) -> &[f64] {
        &self.length_axis
    }

    pub fn rows(&self) -> usize {
        self.length_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.tau_axis.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        from_fixed(self.cells[row * self.cols() + col])
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.cols()).map(|c| self.get(row, c)).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.cells.iter().map(|v| from_fixed(*v)).collect()
    }

    /// `(row, col)` of the largest entry; ties resolve to the first.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.cells.iter().enumerate() {
            if *v > self.cells[best] {
                best = i;
            }
        }
        (best / self.cols(), best % self.cols())
    }

    fn same_axes(&self, other: &Map2D) -> bool {
        self.tau_axis == other.tau_axis && self.length_axis == other.length_axis
    }

    /// Long-format CSV: `tau_e,hbar_over_sigma_q,log_lik`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tau_e,hbar_over_sigma_q,log_lik")?;
        for (r, l) in self.length_axis.iter().enumerate() {
            for (c, t) in self.tau_axis.points().iter().enumerate() {
                writeln!(w, "{t:e},{l:e},{:e}", self.get(r, c))?;
            }
        }
        Ok(())
    }

    /// Compact binary cache: magic, version, axis sizes and bounds, label,
    /// then the fixed-point entries in little-endian order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[FORMAT_VERSION])?;
        w.write_all(&(self.cols() as u64).to_le_bytes())?;
        w.write_all(&self.tau_axis.min().to_le_bytes())?;
        w.write_all(&self.tau_axis.max().to_le_bytes())?;
        w.write_all(&(self.rows() as u64).to_le_bytes())?;
        w.write_all(&self.length_axis[0].to_le_bytes())?;
        w.write_all(&self.length_axis[self.rows() - 1].to_le_bytes())?;
        let label = self.label.as_bytes();
        w.write_all(&(label.len() as u32).to_le_bytes())?;
        w.write_all(label)?;
        for v in &self.cells {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Config(format!("map cache: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::Config("not a map cache file".into()));
        }
        let mut version = [0u8; 1];
        r.read_exact(&mut version).map_err(io)?;
        if version[0] != FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported map cache version {}", version[0])));
        }
        let mut b8 = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b8).map_err(io)?;
            Ok(b8)
        };
        let cols = u64::from_le_bytes(next_u64(&mut r)?) as usize;
        let tmin = f64::from_le_bytes(next_u64(&mut r)?);
        let tmax = f64::from_le_bytes(next_u64(&mut r)?);
        let rows = u64::from_le_bytes(next_u64(&mut r)?) as usize;
        let lmin = f64::from_le_bytes(next_u64(&mut r)?);
        let lmax = f64::from_le_bytes(next_u64(&mut r)?);
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(io)?;
        let mut label = vec![0u8; u32::from_le_bytes(b4) as usize];
        r.read_exact(&mut label).map_err(io)?;
        let label = String::from_utf8(label).map_err(|e| Error::Config(format!("map label: {e}")))?;
        let tau_axis = TauGrid::new(tmin, tmax, cols)?;
        let length_axis = length_axis(lmin, lmax, rows)?;
        let mut cells = Vec::with_capacity(rows * cols);
        let mut b16 = [0u8; 16];
        for _ in 0..rows * cols {
            r.read_exact(&mut b16).map_err(io)?;
            cells.push(i128::from_le_bytes(b16));
        }
        Ok(Map2D { tau_axis, length_axis, cells, label })
    }
}

/// Evaluate the log-likelihood of `model` at every node. Nodes where the
/// likelihood fails are stored as `-inf`.
pub fn loglik_map<M: LikelihoodModel + ?Sized>(
    model: &M,
    tau_axis: &TauGrid,
    length_axis: &[f64],
    label: &str,
) -> Result<Map2D> {
    if length_axis.iter().any(|l| *l < MIN_CRITICAL_LENGTH * (1.0 - 1e-12)) {
        return Err(Error::domain("critical lengths below 10 fm are excluded"));
    }
    let rows: Vec<(Vec<f64>, usize)> = length_axis
        .par_iter()
        .map(|l| {
            let mut failed = 0;
            let row = tau_axis
                .points()
                .iter()
                .map(|t| match MmmParams::from_critical_length(*t, *l).and_then(|p| model.loglik(&p)) {
                    Ok(v) if !v.is_nan() && v != f64::INFINITY => v,
                    _ => {
                        failed += 1;
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            (row, failed)
        })
        .collect();
    let failed: usize = rows.iter().map(|r| r.1).sum();
    if failed > 0 {
        warn!("{failed} map nodes failed and were set to -inf");
    }
    let values: Vec<f64> = rows.into_iter().flat_map(|r| r.0).collect();
    Map2D::from_values(tau_axis.clone(), length_axis.to_vec(), &values, label)
}

/// Entrywise sum of log-likelihood maps over identical axes.
pub fn combine_maps(maps: &[Map2D]) -> Result<Map2D> {
    let first = maps.first().ok_or_else(|| Error::domain("no maps to combine"))?;
    if let Some(m) = maps.iter().find(|m| !first.same_axes(m)) {
        return Err(Error::AxisMismatch(format!("map '{}' has different axes from '{}'", m.label, first.label)));
    }
    let mut cells = first.cells.clone();
    for m in &maps[1..] {
        for (acc, v) in cells.iter_mut().zip(&m.cells) {
            *acc = if *acc == NEG_INF || *v == NEG_INF {
                NEG_INF
            } else {
                acc.checked_add(*v).ok_or_else(|| Error::numeric("combined log-likelihood overflows"))?
            };
        }
    }
    let label = maps.iter().map(|m| m.label.as_str()).collect::<Vec<_>>().join(" + ");
    Ok(Map2D { tau_axis: first.tau_axis.clone(), length_axis: first.length_axis.clone(), cells, label })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CslPoint {
    /// Collapse rate, 1/s.
    pub lambda_csl: f64,
    /// Localization length, m.
    pub r_csl: f64,
}

/// `lambda = m_n^2 / (m_e^2 tau_e)`, `r = hbar / (sqrt(2) sigma_q)`.
pub fn csl_params(params: &MmmParams) -> CslPoint {
    let ratio = NEUTRON_MASS / ELECTRON_MASS;
    CslPoint { lambda_csl: ratio * ratio / params.tau_e(), r_csl: HBAR / (std::f64::consts::SQRT_2 * params.sigma_q()) }
}

/// Inverse of [`csl_params`].
pub fn from_csl(point: &CslPoint) -> Result<MmmParams> {
    let ratio = NEUTRON_MASS / ELECTRON_MASS;
    MmmParams::new(ratio * ratio / point.lambda_csl, HBAR / (std::f64::consts::SQRT_2 * point.r_csl))
}

/// Flat-prior posterior of a map with its marginals.
///
/// The density is taken with respect to `d tau d(log10 l)`, so each row
/// normalises like a one-dimensional posterior in `tau`.
#[derive(Debug, Clone)]
pub struct MapPosterior {
    /// Log density, same layout as the map.
    pub map: Map2D,
    /// Marginal density over `tau`, per unit `tau`.
    pub tau_marginal: Vec<f64>,
    /// Marginal density over `log10(hbar / sigma_q)`.
    pub length_marginal: Vec<f64>,
    /// Fraction of the mass in the outermost cells.
    pub boundary_mass: f64,
}

fn trapz_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (x[i + 1] - x[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

pub fn map_posterior(map: &Map2D) -> Result<MapPosterior> {
    let values = map.values();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::numeric("map is -inf everywhere"));
    }
    let (rows, cols) = (map.rows(), map.cols());
    let tau = map.tau_axis.points();
    let logl: Vec<f64> = map.length_axis.iter().map(|l| l.log10()).collect();
    let wt = trapz_weights(tau);
    let wl = trapz_weights(&logl);
    let rel: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let mut z = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            z += wl[r] * wt[c] * rel[r * cols + c];
        }
    }
    if !(z > 0.0) {
        return Err(Error::numeric("map cannot be normalised"));
    }
    let dens: Vec<f64> = rel.iter().map(|v| v / z).collect();
    // mass per cell from the four corner values
    let mut boundary = 0.0;
    for r in 0..rows - 1 {
        for c in 0..cols - 1 {
            if r == 0 || c == 0 || r == rows - 2 || c == cols - 2 {
                let avg = 0.25
                    * (dens[r * cols + c]
                        + dens[r * cols + c + 1]
                        + dens[(r + 1) * cols + c]
                        + dens[(r + 1) * cols + c + 1]);
                boundary += avg * (tau[c + 1] - tau[c]) * (logl[r + 1] - logl[r]);
            }
        }
    }
    if boundary > BOUNDARY_MASS_LIMIT {
        return Err(Error::Numeric(format!(
            "posterior is not normalisable on this grid: {:.1}% of the mass lies in the outermost cells",
            100.0 * boundary
        )));
    }
    let tau_marginal: Vec<f64> = (0..cols).map(|c| (0..rows).map(|r| wl[r] * dens[r * cols + c]).sum()).collect();
    let length_marginal: Vec<f64> = (0..rows).map(|r| (0..cols).map(|c| wt[c] * dens[r * cols + c]).sum()).collect();
    let shift = max + z.ln();
    let log_dens: Vec<f64> = values.iter().map(|v| v - shift).collect();
    let out = Map2D::from_values(map.tau_axis.clone(), map.length_axis.clone(), &log_dens, &map.label)?;
    Ok(MapPosterior { map: out, tau_marginal, length_marginal, boundary_mass: boundary })
}
