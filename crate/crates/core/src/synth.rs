//! Seeded synthetic data drawn from the likelihood models.
//!
//! Every dataset comes from a ChaCha20 stream seeded with a 64-bit seed.
//! Independent datasets generated from one seed use distinct stream
//! numbers of the same key (see [`rng_for`]), which is the splitting rule
//! recorded in dataset headers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::error::{Error, Result};
use crate::likelihood::{
    tl_signal, BecCountDensity, BecMziConfig, CountBin, NestedMziConfig, NestedShot, PhaseBin, ScanMode,
    SingleAtomConfig, TalbotLauRun,
};
use crate::mmm::MmmParams;
use crate::specfun::theta3_nome_log;

/// Generator name written to provenance headers.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha 0.9), seed_from_u64 + set_stream";

/// Number of grid cells used for inverse-CDF sampling of continuous phases.
pub const PHASE_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub true_params: MmmParams,
    pub seed: u64,
    /// Stream number within the seed; distinct datasets use distinct streams.
    pub stream: u64,
}

impl SynthSpec {
    pub fn new(true_params: MmmParams, seed: u64) -> Self {
        SynthSpec { true_params, seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        SynthSpec { stream, ..self }
    }

    fn rng(&self) -> ChaCha20Rng {
        rng_for(self.seed, self.stream)
    }
}

/// Random stream `stream` of the key derived from `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn binomial(rng: &mut ChaCha20Rng, n: u64, p: f64) -> Result<u64> {
    Ok(Binomial::new(n, p.clamp(0.0, 1.0)).map_err(|e| Error::domain(format!("binomial parameters: {e}")))?.sample(rng))
}

/// Fringe scan at the positions of `template`, with `molecules` molecules
/// reaching the third grating at every position.
pub fn sample_talbot_lau(spec: &SynthSpec, template: &TalbotLauRun, molecules: u64) -> Result<TalbotLauRun> {
    template.validate()?;
    let mut rng = spec.rng();
    let mut bins = Vec::with_capacity(template.bins.len());
    for b in &template.bins {
        let p = tl_signal(b.x_s, &spec.true_params, template)? / template.f1;
        let n_plus = binomial(&mut rng, molecules, p)?;
        bins.push(match template.mode {
            ScanMode::Stationary => CountBin::new(b.x_s, n_plus),
            ScanMode::Pulsed => {
                let n_zero = binomial(&mut rng, molecules, template.f3)?;
                CountBin::pulsed(b.x_s, n_plus, n_zero)
            }
        });
    }
    Ok(TalbotLauRun { bins, ..template.clone() })
}

/// Index of the cell holding `u` in a cumulative table, and the fraction
/// of the way through it.
fn invert_cdf(cdf: &[f64], u: f64) -> (usize, f64) {
    let j = cdf.partition_point(|c| *c < u).clamp(1, cdf.len() - 1);
    let (lo, hi) = (cdf[j - 1], cdf[j]);
    let f = if hi > lo { ((u - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    (j - 1, f)
}

fn cumulative(masses: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(masses.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for m in masses {
        acc += m;
        out.push(acc);
    }
    let total = acc;
    out.iter_mut().for_each(|c| *c /= total);
    out
}

/// Shots of a BEC interferometer, drawn on the normalisation grid.
pub fn sample_bec(spec: &SynthSpec, config: &BecMziConfig, n_shots: usize) -> Result<BecMziConfig> {
    config.validate()?;
    let density = BecCountDensity::for_params(config, &spec.true_params)?;
    let (nodes, masses) = density.cell_masses();
    let h = nodes[1] - nodes[0];
    let cdf = cumulative(&masses);
    let mut rng = spec.rng();
    let shots = (0..n_shots)
        .map(|_| {
            let (i, f) = invert_cdf(&cdf, rng.random::<f64>());
            density.count_of(nodes[i] - 0.5 * h + f * h)
        })
        .collect();
    Ok(BecMziConfig { shots, ..config.clone() })
}

/// Tabulated density of a wrapped Gaussian with nome-log `s` on `[-pi, pi]`,
/// restricted to `+-15` standard deviations when that is narrower.
fn wrapped_table(s: f64) -> (f64, f64, Vec<f64>) {
    use std::f64::consts::PI;
    let half = (15.0 * (2.0 * s).sqrt()).min(PI);
    let h = 2.0 * half / PHASE_GRID as f64;
    let masses = (0..PHASE_GRID).map(|i| theta3_nome_log(0.5 * (-half + (i as f64 + 0.5) * h), s) * h).collect();
    (half, h, masses)
}

/// Phase differences of the nested interferometer, one per expected value in
/// `truths`.
pub fn sample_nested(spec: &SynthSpec, config: &NestedMziConfig, truths: &[f64]) -> Result<NestedMziConfig> {
    use std::f64::consts::PI;
    let gamma = config.dephasing_rate(&spec.true_params)?;
    let s = 2.0 * crate::likelihood::nested::branch_nome_log(config.n_atoms as f64, gamma, config.t);
    let (half, h, masses) = wrapped_table(s);
    let cdf = cumulative(&masses);
    let mut rng = spec.rng();
    let shots = truths
        .iter()
        .map(|truth| {
            let (i, f) = invert_cdf(&cdf, rng.random::<f64>());
            let offset = -half + (i as f64 + f) * h;
            let x = truth + offset;
            let wrapped = x - 2.0 * PI * (x / (2.0 * PI)).round();
            NestedShot { delta_phi: wrapped.clamp(-PI, PI), delta_phi_true: *truth }
        })
        .collect();
    Ok(NestedMziConfig { shots, ..config.clone() })
}

/// Port-a counts for every bin of `config`, with the `N_k` of the template
/// bins. Dark counts of width `sigma_dark` are added before rounding.
pub fn sample_single_atom(spec: &SynthSpec, config: &SingleAtomConfig) -> Result<SingleAtomConfig> {
    config.validate()?;
    let gamma = config.geometry().dephasing_rate(&spec.true_params);
    let mut rng = spec.rng();
    let mut bins = Vec::with_capacity(config.bins.len());
    for b in &config.bins {
        let n = b.n_total as f64;
        let p = config.port_prob(b.k, gamma);
        let sd = (n * p * (1.0 - p)).sqrt();
        let mut x = n * p + sd * Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng);
        if config.sigma_dark > 0.0 {
            x += Normal::new(0.0, config.sigma_dark)
                .map_err(|e| Error::domain(format!("dark-count width: {e}")))?
                .sample(&mut rng);
        }
        let n_a = x.round().clamp(0.0, n) as u64;
        bins.push(PhaseBin { n_a, ..*b });
    }
    Ok(SingleAtomConfig { bins, ..config.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = rng_for(7, 0).random();
        let b: u64 = rng_for(7, 1).random();
        let c: u64 = rng_for(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn inverse_cdf_cells() {
        let cdf = cumulative(&[1.0, 0.0, 3.0]);
        assert_eq!(cdf, vec![0.0, 0.25, 0.25, 1.0]);
        assert_eq!(invert_cdf(&cdf, 0.125), (0, 0.5));
        let (i, f) = invert_cdf(&cdf, 0.625);
        assert_eq!(i, 2);
        assert!((f - 0.5).abs() < 1e-15);
    }
}
