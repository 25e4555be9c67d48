//! Run configuration: a TOML file with one experiment section plus optional
//! analysis and simulation settings. Unknown keys are rejected.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use macrotest::constants::HBAR;
use macrotest::inference::DEFAULT_PHASE_POINTS;
use macrotest::likelihood::{
    BecMziConfig, CountBin, NestedMziConfig, PhaseBin, ScanMode, SingleAtomConfig, TalbotLauRun, VelocityBin,
};
use macrotest::{ExperimentModel, TauGrid};

use crate::units::{Dim, Quantity};
use crate::InputError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    TalbotLau,
    Bec,
    Nested,
    SingleAtom,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    experiment: Kind,
    label: Option<String>,
    talbot_lau: Option<RawTalbotLau>,
    bec: Option<RawBec>,
    nested: Option<RawNested>,
    single_atom: Option<RawSingleAtom>,
    #[serde(default)]
    analysis: RawAnalysis,
    simulate: Option<RawSimulate>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum RawMode {
    Stationary,
    Pulsed,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVelocity {
    weight: f64,
    time: Quantity,
    v0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTalbotLau {
    mode: RawMode,
    d_g: Quantity,
    f1: f64,
    f3: f64,
    steps: usize,
    delta_x_offset: Option<Quantity>,
    laser_power: Option<Quantity>,
    mass: Quantity,
    /// Molecules per position for the prior design and for simulation.
    molecules: Option<u64>,
    velocity: Vec<RawVelocity>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBec {
    n_atoms: u64,
    mass: Quantity,
    wavelength: Option<Quantity>,
    delta_p: Quantity,
    separation_time: Quantity,
    t: Quantity,
    w_x: Quantity,
    w_y: Quantity,
    phi: Option<Quantity>,
    #[serde(default = "yes")]
    extend_plateau: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNested {
    n_atoms: u64,
    mass: Quantity,
    wavelength: Option<Quantity>,
    delta_p_inner: Quantity,
    t: Quantity,
    w_x: Quantity,
    w_y: Quantity,
    #[serde(default = "yes")]
    extend_plateau: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSingleAtom {
    omega: Quantity,
    t: Quantity,
    delta_t: Quantity,
    #[serde(default)]
    sigma_dark: f64,
    mass: Quantity,
    delta_x: Quantity,
    w_x: Quantity,
    w_y: Quantity,
    #[serde(default = "yes")]
    extend_plateau: bool,
    /// Phase-bin template for the prior design and for simulation.
    bins: Option<usize>,
    counts_per_bin: Option<u64>,
    #[serde(default)]
    first_k: i64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    quantile: Option<f64>,
    critical_length: Option<Quantity>,
    tau_min: Option<Quantity>,
    tau_max: Option<Quantity>,
    tau_points: Option<usize>,
    length_min: Option<Quantity>,
    length_max: Option<Quantity>,
    length_points: Option<usize>,
    phase_points: Option<usize>,
    refine: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    tau_e: Quantity,
    critical_length: Quantity,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    stream: u64,
    shots: Option<usize>,
    delta_phi_true: Option<Quantity>,
}

/// Analysis settings; unset values fall back to command-line flags and
/// built-in defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub quantile: Option<f64>,
    pub critical_length: Option<f64>,
    pub tau: (Option<f64>, Option<f64>, Option<usize>),
    pub length: (Option<f64>, Option<f64>, Option<usize>),
    pub phase_points: usize,
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSettings {
    pub tau_e: f64,
    pub critical_length: f64,
    pub seed: u64,
    pub stream: u64,
    pub shots: Option<usize>,
    pub delta_phi_true: f64,
}

/// A validated configuration. `model` carries no data; `template` is the
/// same experiment with the design records used for priors and simulation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: Kind,
    pub label: String,
    pub model: ExperimentModel,
    pub template: Option<ExperimentModel>,
    pub analysis: AnalysisSettings,
    pub simulate: Option<SimulateSettings>,
    /// SHA-256 of the configuration file, hex.
    pub sha256: String,
}

fn get(q: &Quantity, dim: Dim, key: &str) -> Result<f64> {
    q.si(dim).map_err(|e| InputError(format!("{key}: {e}")).into())
}

fn get_with(q: &Quantity, dim: Dim, wavelength: Option<f64>, key: &str) -> Result<f64> {
    q.si_with(dim, wavelength).map_err(|e| InputError(format!("{key}: {e}")).into())
}

fn opt(q: &Option<Quantity>, dim: Dim, key: &str) -> Result<Option<f64>> {
    q.as_ref().map(|q| get(q, dim, key)).transpose()
}

fn section<T>(s: Option<T>, name: &str) -> Result<T> {
    s.ok_or_else(|| InputError(format!("experiment '{name}' needs a [{name}] section")).into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in config {}", path.display()))?;
        if cfg.label.is_empty() {
            cfg.label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).map_err(|e| InputError(e.to_string()))?;
        let sections = [
            (Kind::TalbotLau, raw.talbot_lau.is_some()),
            (Kind::Bec, raw.bec.is_some()),
            (Kind::Nested, raw.nested.is_some()),
            (Kind::SingleAtom, raw.single_atom.is_some()),
        ];
        if let Some((k, _)) = sections.iter().find(|(k, present)| *present && *k != raw.experiment) {
            bail!(InputError(format!("section for {k:?} given but experiment is {:?}", raw.experiment)));
        }
        let (model, template) = match raw.experiment {
            Kind::TalbotLau => talbot_lau(section(raw.talbot_lau, "talbot_lau")?)?,
            Kind::Bec => {
                let m = ExperimentModel::Bec(bec(section(raw.bec, "bec")?)?);
                (m.clone(), Some(m))
            }
            Kind::Nested => {
                let m = ExperimentModel::Nested(nested(section(raw.nested, "nested")?)?);
                (m.clone(), Some(m))
            }
            Kind::SingleAtom => single_atom(section(raw.single_atom, "single_atom")?)?,
        };
        let a = raw.analysis;
        if let Some(q) = a.quantile {
            if !(q > 0.0 && q < 1.0) {
                bail!(InputError(format!("quantile must lie in (0, 1), got {q}")));
            }
        }
        let analysis = AnalysisSettings {
            quantile: a.quantile,
            critical_length: opt(&a.critical_length, Dim::Length, "analysis.critical_length")?,
            tau: (
                opt(&a.tau_min, Dim::Time, "analysis.tau_min")?,
                opt(&a.tau_max, Dim::Time, "analysis.tau_max")?,
                a.tau_points,
            ),
            length: (
                opt(&a.length_min, Dim::Length, "analysis.length_min")?,
                opt(&a.length_max, Dim::Length, "analysis.length_max")?,
                a.length_points,
            ),
            phase_points: a.phase_points.unwrap_or(DEFAULT_PHASE_POINTS),
            refine: a.refine.unwrap_or(true),
        };
        if analysis.phase_points == 0 {
            bail!(InputError("analysis.phase_points must be positive".into()));
        }
        let simulate = raw
            .simulate
            .map(|s| -> Result<SimulateSettings> {
                Ok(SimulateSettings {
                    tau_e: get(&s.tau_e, Dim::Time, "simulate.tau_e")?,
                    critical_length: get(&s.critical_length, Dim::Length, "simulate.critical_length")?,
                    seed: s.seed,
                    stream: s.stream,
                    shots: s.shots,
                    delta_phi_true: opt(&s.delta_phi_true, Dim::Angle, "simulate.delta_phi_true")?.unwrap_or(0.0),
                })
            })
            .transpose()?;
        Ok(RunConfig {
            kind: raw.experiment,
            label: raw.label.unwrap_or_default(),
            model,
            template,
            analysis,
            simulate,
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        })
    }

    /// Tau grid from config, overridden by `flag` (`MIN:MAX:N` in seconds).
    pub fn tau_grid(&self, flag: Option<(f64, f64, usize)>) -> Result<TauGrid> {
        let (min, max, n) = self.analysis.tau;
        let (min, max, n) = match flag {
            Some(f) => f,
            None => (
                min.unwrap_or(TauGrid::DEFAULT_MIN),
                max.unwrap_or(TauGrid::DEFAULT_MAX),
                n.unwrap_or(TauGrid::DEFAULT_POINTS),
            ),
        };
        TauGrid::new(min, max, n).map_err(|e| InputError(format!("tau grid: {e}")).into())
    }

    /// Critical length for fixed-`sigma_q` commands.
    pub fn sigma_q(&self) -> Result<f64> {
        match self.analysis.critical_length {
            Some(l) if l > 0.0 => Ok(HBAR / l),
            Some(l) => bail!(InputError(format!("analysis.critical_length must be positive, got {l}"))),
            None => bail!(InputError("analysis.critical_length is required for this command".into())),
        }
    }

    pub fn quantile(&self, flag: Option<f64>) -> f64 {
        flag.or(self.analysis.quantile).unwrap_or(0.05)
    }
}

fn talbot_lau(s: RawTalbotLau) -> Result<(ExperimentModel, Option<ExperimentModel>)> {
    let velocity_bins = s
        .velocity
        .iter()
        .enumerate()
        .map(|(i, v)| {
            Ok(VelocityBin {
                weight: v.weight,
                time: get(&v.time, Dim::Time, &format!("velocity[{i}].time"))?,
                v0: v.v0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let run = TalbotLauRun {
        mode: match s.mode {
            RawMode::Stationary => ScanMode::Stationary,
            RawMode::Pulsed => ScanMode::Pulsed,
        },
        d_g: get(&s.d_g, Dim::Length, "d_g")?,
        f1: s.f1,
        f3: s.f3,
        steps: s.steps,
        delta_x_offset: opt(&s.delta_x_offset, Dim::Length, "delta_x_offset")?.unwrap_or(0.0),
        laser_power: opt(&s.laser_power, Dim::Power, "laser_power")?.unwrap_or(0.0),
        mass: get(&s.mass, Dim::Mass, "mass")?,
        velocity_bins,
        bins: Vec::new(),
    };
    run.validate().map_err(|e| InputError(e.to_string()))?;
    if run.steps == 0 {
        bail!(InputError("talbot_lau.steps must be positive".into()));
    }
    let template = s.molecules.map(|m| {
        let bins = (0..run.steps)
            .map(|i| {
                let x = i as f64 * run.d_g / run.steps as f64;
                let mut b = match run.mode {
                    ScanMode::Stationary => CountBin::new(x, 0),
                    ScanMode::Pulsed => CountBin::pulsed(x, 0, m),
                };
                b.n_minus = Some(m as f64);
                b
            })
            .collect();
        ExperimentModel::TalbotLau(TalbotLauRun { bins, ..run.clone() })
    });
    Ok((ExperimentModel::TalbotLau(run), template))
}

fn bec(s: RawBec) -> Result<BecMziConfig> {
    let wavelength = opt(&s.wavelength, Dim::Length, "wavelength")?;
    let c = BecMziConfig {
        n_atoms: s.n_atoms,
        mass: get(&s.mass, Dim::Mass, "mass")?,
        delta_p: get_with(&s.delta_p, Dim::Momentum, wavelength, "delta_p")?,
        separation_time: get(&s.separation_time, Dim::Time, "separation_time")?,
        t: get(&s.t, Dim::Time, "t")?,
        w_x: get(&s.w_x, Dim::Length, "w_x")?,
        w_y: get(&s.w_y, Dim::Length, "w_y")?,
        phi: opt(&s.phi, Dim::Angle, "phi")?.unwrap_or(0.0),
        extend_plateau: s.extend_plateau,
        shots: Vec::new(),
    };
    c.validate().map_err(|e| InputError(e.to_string()))?;
    Ok(c)
}

fn nested(s: RawNested) -> Result<NestedMziConfig> {
    let wavelength = opt(&s.wavelength, Dim::Length, "wavelength")?;
    let c = NestedMziConfig {
        n_atoms: s.n_atoms,
        mass: get(&s.mass, Dim::Mass, "mass")?,
        t: get(&s.t, Dim::Time, "t")?,
        delta_p_inner: get_with(&s.delta_p_inner, Dim::Momentum, wavelength, "delta_p_inner")?,
        w_x: get(&s.w_x, Dim::Length, "w_x")?,
        w_y: get(&s.w_y, Dim::Length, "w_y")?,
        extend_plateau: s.extend_plateau,
        shots: Vec::new(),
    };
    c.validate().map_err(|e| InputError(e.to_string()))?;
    Ok(c)
}

fn single_atom(s: RawSingleAtom) -> Result<(ExperimentModel, Option<ExperimentModel>)> {
    let c = SingleAtomConfig {
        omega: get(&s.omega, Dim::AngularFrequency, "omega")?,
        t: get(&s.t, Dim::Time, "t")?,
        delta_t: get(&s.delta_t, Dim::Time, "delta_t")?,
        sigma_dark: s.sigma_dark,
        mass: get(&s.mass, Dim::Mass, "mass")?,
        delta_x: get(&s.delta_x, Dim::Length, "delta_x")?,
        w_x: get(&s.w_x, Dim::Length, "w_x")?,
        w_y: get(&s.w_y, Dim::Length, "w_y")?,
        extend_plateau: s.extend_plateau,
        bins: Vec::new(),
    };
    c.validate().map_err(|e| InputError(e.to_string()))?;
    let template = match (s.bins, s.counts_per_bin) {
        (Some(n), Some(counts)) => {
            let bins = (0..n as i64).map(|i| PhaseBin { k: s.first_k + i, n_total: counts, n_a: 0 }).collect();
            Some(ExperimentModel::SingleAtom(SingleAtomConfig { bins, ..c.clone() }))
        }
        (None, None) => None,
        _ => bail!(InputError("single_atom.bins and counts_per_bin must be given together".into())),
    };
    Ok((ExperimentModel::SingleAtom(c), template))
}
