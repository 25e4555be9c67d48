//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};

use macrotest::combine::{
    combine_maps, csl_params, length_axis, loglik_map, map_posterior, Map2D, DEFAULT_LENGTH_MAX, DEFAULT_LENGTH_MIN,
    DEFAULT_LENGTH_NODES, DEFAULT_TAU_NODES,
};
use macrotest::constants::HBAR;
use macrotest::inference::{
    analyze, jeffreys_prior, macroscopicity, phase_grid, table_row, Analysis, AnalysisOptions, ScanPoint, TableRow,
};
use macrotest::synth::{self, SynthSpec, RNG_NAME};
use macrotest::{ExperimentModel, LikelihoodModel, MmmParams, Posterior, TauGrid};

use crate::config::{Kind, RunConfig};
use crate::io::{read_data, write_atomic, write_data, Data};
use crate::InputError;

/// Options shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub configs: Vec<PathBuf>,
    pub data: Vec<PathBuf>,
    pub out: PathBuf,
    pub grid_tau: Option<(f64, f64, usize)>,
    pub grid_length: Option<(f64, f64, usize)>,
    pub seed: Option<u64>,
    pub quantile: Option<f64>,
}

impl Options {
    fn single_config(&self) -> Result<RunConfig> {
        match self.configs.as_slice() {
            [one] => RunConfig::load(one),
            [] => bail!(InputError("--config is required".into())),
            _ => bail!(InputError("this command takes a single --config".into())),
        }
    }

    fn analysis_options(&self, cfg: &RunConfig) -> Result<AnalysisOptions> {
        let alpha = cfg.quantile(self.quantile);
        if !(alpha > 0.0 && alpha < 1.0) {
            bail!(InputError(format!("quantile must lie in (0, 1), got {alpha}")));
        }
        Ok(AnalysisOptions { alpha, refine: cfg.analysis.refine })
    }
}

/// Prior-only view of a model: the likelihood is flat and the Fisher
/// information comes from the design records.
struct PriorOnly<'a>(&'a ExperimentModel);

impl LikelihoodModel for PriorOnly<'_> {
    fn loglik(&self, _: &MmmParams) -> macrotest::Result<f64> {
        Ok(0.0)
    }

    fn fisher(&self, params: &MmmParams) -> macrotest::Result<f64> {
        self.0.fisher(params)
    }

    fn design_fisher(&self, params: &MmmParams) -> macrotest::Result<f64> {
        self.0.design_fisher(params)
    }

    fn is_empty(&self) -> bool {
        true
    }
}

/// Config model with the data files attached and blocked counts inferred.
fn load_model(cfg: &RunConfig, data: &[PathBuf]) -> Result<ExperimentModel> {
    let records = read_data(cfg.kind, data)?;
    Ok(records.attach(&cfg.model).prepared()?)
}

/// Model whose Fisher information shapes the prior.
fn design_model(cfg: &RunConfig, model: &ExperimentModel) -> Result<ExperimentModel> {
    if !model.is_empty() {
        return Ok(model.clone());
    }
    cfg.template.clone().ok_or_else(|| {
        let hint = match cfg.kind {
            Kind::TalbotLau => "talbot_lau.molecules",
            _ => "single_atom.bins and counts_per_bin",
        };
        InputError(format!("no data given; the prior needs --data or a design template ({hint})")).into()
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:e}"))
}

fn write_density(out: &Path, name: &str, post: &Posterior) -> Result<PathBuf> {
    let t = post.grid().points();
    let d = post.density();
    let rel = post.relative_to_max();
    write_atomic(out, name, |w| {
        writeln!(w, "tau_e_s,density_per_s,p_over_pmax")?;
        for i in 0..t.len() {
            writeln!(w, "{:e},{:e},{:e}", t[i], d[i], rel[i])?;
        }
        Ok(())
    })
}

fn write_summary(out: &Path, lines: &[String]) -> Result<PathBuf> {
    for l in lines {
        println!("{l}");
    }
    write_atomic(out, "summary.txt", |w| {
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

fn header_lines(cfg: &RunConfig) -> Vec<String> {
    vec![
        format!("experiment = {}", cfg.model.kind()),
        format!("label = {}", cfg.label),
        format!("config_sha256 = {}", cfg.sha256),
    ]
}

fn status(updated: bool) -> String {
    format!("status = {}", if updated { "updated" } else { "no update" })
}

pub fn prior(opts: &Options) -> Result<()> {
    let cfg = opts.single_config()?;
    let grid = cfg.tau_grid(opts.grid_tau)?;
    let sigma_q = cfg.sigma_q()?;
    let model = load_model(&cfg, &opts.data)?;
    let design = design_model(&cfg, &model)?;
    let prior = jeffreys_prior(&design, &grid, sigma_q)?;
    let path = write_density(&opts.out, "prior.csv", &prior)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn run_analysis(
    cfg: &RunConfig,
    model: &ExperimentModel,
    grid: &TauGrid,
    sigma_q: f64,
    o: &AnalysisOptions,
) -> Result<Analysis> {
    if model.is_empty() {
        let design = design_model(cfg, model)?;
        Ok(analyze(&PriorOnly(&design), grid, sigma_q, o)?)
    } else {
        Ok(analyze(model, grid, sigma_q, o)?)
    }
}

pub fn posterior(opts: &Options) -> Result<()> {
    let cfg = opts.single_config()?;
    let grid = cfg.tau_grid(opts.grid_tau)?;
    let sigma_q = cfg.sigma_q()?;
    let o = opts.analysis_options(&cfg)?;
    let model = load_model(&cfg, &opts.data)?;
    let a = run_analysis(&cfg, &model, &grid, sigma_q, &o)?;
    write_density(&opts.out, "prior.csv", &a.prior)?;
    write_density(&opts.out, "posterior.csv", &a.posterior)?;
    let fwhm = a.posterior.fwhm().map_err(|e| warn!("FWHM: {e}")).ok();
    let mut lines = header_lines(&cfg);
    lines.extend([
        format!("records = {}", model.len()),
        format!("critical_length_m = {:e}", HBAR / sigma_q),
        format!("sigma_q = {sigma_q:e}"),
        format!("quantile = {}", o.alpha),
        format!("tau_m_s = {:e}", a.tau_m),
        format!("mu_m_candidate = {:.4}", a.tau_m.log10()),
        format!("mode_s = {:e}", a.posterior.mode()),
        format!("fwhm_s = {}", fmt_opt(fwhm)),
        status(a.updated),
    ]);
    write_summary(&opts.out, &lines)?;
    Ok(())
}

/// Critical lengths of the `sigma_q` scan: flag, then config, then the
/// validity window of the experiment.
fn scan_lengths(cfg: &RunConfig, model: &ExperimentModel, flag: Option<(f64, f64, usize)>) -> Result<Vec<f64>> {
    const DEFAULT_POINTS: usize = 13;
    let (min, max, n) = match flag {
        Some(f) => f,
        None => {
            let (lo, hi, n) = cfg.analysis.length;
            let (wlo, whi) = if lo.is_none() || hi.is_none() { model.validity_window()? } else { (0.0, 0.0) };
            (lo.unwrap_or(wlo), hi.unwrap_or(whi), n.unwrap_or(DEFAULT_POINTS))
        }
    };
    match n {
        0 => bail!(InputError("length window needs at least one point".into())),
        1 => Ok(vec![min]),
        _ if max.partial_cmp(&min) != Some(std::cmp::Ordering::Greater) => bail!(InputError(format!(
            "empty length window [{min:e}, {max:e}] m; set analysis.length_min/length_max or --grid-length"
        ))),
        _ => length_axis(min, max, n).map_err(|e| InputError(e.to_string()).into()),
    }
}

struct Best {
    analysis: Analysis,
    phi: Option<f64>,
    scan: Vec<ScanPoint>,
}

/// Maximisation of the prior quantile when there is no data to update on.
fn prior_scan(
    design: &ExperimentModel,
    sigma_qs: &[f64],
    grid: &TauGrid,
    phases: &[f64],
    o: &AnalysisOptions,
) -> Result<Best> {
    let phase_list: Vec<Option<f64>> =
        if design.has_phase_nuisance() { phases.iter().map(|p| Some(*p)).collect() } else { vec![None] };
    let mut best: Option<(Analysis, Option<f64>)> = None;
    let mut scan = Vec::new();
    let mut last_err = None;
    for &sq in sigma_qs {
        for phi in &phase_list {
            let m = phi.map_or_else(|| design.clone(), |p| design.with_phase(p));
            match analyze(&PriorOnly(&m), grid, sq, o) {
                Ok(a) => {
                    scan.push(ScanPoint { sigma_q: sq, phi: *phi, tau_m: Some(a.tau_m) });
                    if best.as_ref().is_none_or(|(b, _)| a.tau_m > b.tau_m) {
                        best = Some((a, *phi));
                    }
                }
                Err(e) => {
                    warn!("skipping sigma_q = {sq:e}: {e}");
                    scan.push(ScanPoint { sigma_q: sq, phi: *phi, tau_m: None });
                    last_err = Some(e);
                }
            }
        }
    }
    match best {
        Some((analysis, phi)) => Ok(Best { analysis, phi, scan }),
        None => Err(last_err.expect("at least one point was attempted").into()),
    }
}

pub fn macroscopicity_cmd(opts: &Options) -> Result<()> {
    let cfg = opts.single_config()?;
    let grid = cfg.tau_grid(opts.grid_tau)?;
    let o = opts.analysis_options(&cfg)?;
    let model = load_model(&cfg, &opts.data)?;
    let lengths = scan_lengths(&cfg, &model, opts.grid_length)?;
    let sigma_qs: Vec<f64> = lengths.iter().map(|l| HBAR / l).collect();
    let phases = phase_grid(cfg.analysis.phase_points);
    let updated = !model.is_empty();
    let best = if updated {
        let m = macroscopicity(&model, &sigma_qs, &grid, Some(&phases), &o)?;
        Best { analysis: m.best, phi: m.phi_star, scan: m.scan }
    } else {
        prior_scan(&design_model(&cfg, &model)?, &sigma_qs, &grid, &phases, &o)?
    };
    let a = &best.analysis;
    let mu_m = a.tau_m.log10();
    let at_phi = best.phi.map_or_else(|| model.clone(), |p| model.with_phase(p));

    let row = if updated {
        table_row(a, &at_phi, mu_m).map_err(|e| warn!("convergence diagnostics: {e}")).ok()
    } else {
        None
    };
    let fwhm = row.map(|(r, _)| r.fwhm).or_else(|| a.posterior.fwhm().ok());
    let table_line = match row {
        Some((r, _)) => r.line(),
        None => format!("{}, n/a, n/a, {mu_m:.1}", fwhm.map_or("n/a".to_string(), |f| format!("{f:.3e}"))),
    };

    write_density(&opts.out, "prior.csv", &a.prior)?;
    write_density(&opts.out, "posterior.csv", &a.posterior)?;
    write_atomic(&opts.out, "scan.csv", |w| {
        writeln!(w, "critical_length_m,sigma_q,phi_rad,tau_m_s")?;
        for p in &best.scan {
            let phi = p.phi.map_or(String::new(), |x| format!("{x:e}"));
            let tau = p.tau_m.map_or(String::new(), |x| format!("{x:e}"));
            writeln!(w, "{:e},{:e},{phi},{tau}", HBAR / p.sigma_q, p.sigma_q)?;
        }
        Ok(())
    })?;

    let mut lines = header_lines(&cfg);
    lines.extend([
        format!("records = {}", model.len()),
        format!("quantile = {}", o.alpha),
        format!("mu_m = {mu_m:.4}"),
        format!("sigma_q_star = {:e}", a.sigma_q),
        format!("critical_length_star_m = {:e}", HBAR / a.sigma_q),
        format!("phi_star_rad = {}", fmt_opt(best.phi)),
        format!("tau_m_s = {:e}", a.tau_m),
        format!("h_min = {}", fmt_opt(row.map(|(r, _)| r.h_min))),
        format!("fwhm_s = {}", fmt_opt(fwhm)),
        format!("gauss_fwhm_s = {}", fmt_opt(row.map(|(r, _)| r.gauss_fwhm))),
        status(updated),
        TableRow::HEADER.to_string(),
        table_line,
    ]);
    write_summary(&opts.out, &lines)?;
    Ok(())
}

fn write_map(out: &Path, name: &str, map: &Map2D, csl: bool, column: &str) -> Result<PathBuf> {
    let tau = map.tau_axis().points().to_vec();
    let lengths = map.length_axis().to_vec();
    write_atomic(out, name, |w| {
        if csl {
            writeln!(w, "tau_e_s,critical_length_m,lambda_csl_per_s,r_csl_m,{column}")?;
        } else {
            writeln!(w, "tau_e_s,critical_length_m,{column}")?;
        }
        for (r, l) in lengths.iter().enumerate() {
            for (c, t) in tau.iter().enumerate() {
                let v = map.get(r, c);
                if csl {
                    let p = csl_params(&MmmParams::from_critical_length(*t, *l).map_err(std::io::Error::other)?);
                    writeln!(w, "{t:e},{l:e},{:e},{:e},{v:e}", p.lambda_csl, p.r_csl)?;
                } else {
                    writeln!(w, "{t:e},{l:e},{v:e}")?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

pub fn map2d(opts: &Options) -> Result<()> {
    if opts.configs.is_empty() {
        bail!(InputError("map2d needs at least one --config".into()));
    }
    if opts.data.len() != opts.configs.len() {
        bail!(InputError(format!(
            "map2d pairs configs with data files: {} configs, {} data files",
            opts.configs.len(),
            opts.data.len()
        )));
    }
    let (tmin, tmax, tn) = opts.grid_tau.unwrap_or((TauGrid::DEFAULT_MIN, TauGrid::DEFAULT_MAX, DEFAULT_TAU_NODES));
    let tau = TauGrid::new(tmin, tmax, tn).map_err(|e| InputError(format!("tau grid: {e}")))?;
    let (lmin, lmax, ln) = opts.grid_length.unwrap_or((DEFAULT_LENGTH_MIN, DEFAULT_LENGTH_MAX, DEFAULT_LENGTH_NODES));
    let lengths = length_axis(lmin, lmax, ln).map_err(|e| InputError(format!("length grid: {e}")))?;

    let mut maps = Vec::new();
    for (i, (c, d)) in opts.configs.iter().zip(&opts.data).enumerate() {
        let cfg = RunConfig::load(c)?;
        let model = load_model(&cfg, std::slice::from_ref(d))?;
        if model.is_empty() {
            warn!("{}: no records, the map is flat", d.display());
        }
        let map = loglik_map(&model, &tau, &lengths, &cfg.label)?;
        write_map(&opts.out, &format!("map_{}.csv", i + 1), &map, false, "log_lik")?;
        maps.push(map);
        let combined = combine_maps(&maps)?;
        write_map(&opts.out, &format!("combined_{}.csv", i + 1), &combined, true, "log_lik")?;
        info!("combined {} of {} maps", i + 1, opts.configs.len());
    }
    let combined = combine_maps(&maps)?;
    write_atomic(&opts.out, "combined.bin", |w| combined.write_binary(w))?;
    let post = map_posterior(&combined)
        .with_context(|| format!("flat-prior posterior of '{}' (maps were written)", combined.label))?;
    write_map(&opts.out, "posterior_map.csv", &post.map, true, "log_density")?;
    write_atomic(&opts.out, "marginal_tau.csv", |w| {
        writeln!(w, "tau_e_s,density_per_s")?;
        for (t, p) in tau.points().iter().zip(&post.tau_marginal) {
            writeln!(w, "{t:e},{p:e}")?;
        }
        Ok(())
    })?;
    write_atomic(&opts.out, "marginal_length.csv", |w| {
        writeln!(w, "critical_length_m,density_per_log10_m")?;
        for (l, p) in lengths.iter().zip(&post.length_marginal) {
            writeln!(w, "{l:e},{p:e}")?;
        }
        Ok(())
    })?;
    let (r, c) = post.map.argmax();
    let peak = MmmParams::from_critical_length(tau.points()[c], lengths[r])?;
    let csl = csl_params(&peak);
    write_summary(
        &opts.out,
        &[
            format!("maps = {}", maps.len()),
            format!("label = {}", combined.label),
            "prior = flat in (tau_e, log10 critical length)".to_string(),
            format!("peak_tau_e_s = {:e}", peak.tau_e()),
            format!("peak_critical_length_m = {:e}", peak.critical_length()),
            format!("peak_lambda_csl_per_s = {:e}", csl.lambda_csl),
            format!("peak_r_csl_m = {:e}", csl.r_csl),
            format!("boundary_mass = {:.4}", post.boundary_mass),
        ],
    )?;
    Ok(())
}

pub fn simulate(opts: &Options) -> Result<()> {
    let cfg = opts.single_config()?;
    let s = cfg.simulate.clone().ok_or_else(|| InputError("simulate needs a [simulate] section".into()))?;
    let seed = opts.seed.unwrap_or(s.seed);
    let params = MmmParams::from_critical_length(s.tau_e, s.critical_length)?;
    let spec = SynthSpec::new(params, seed).with_stream(s.stream);
    let shots = || s.shots.ok_or_else(|| InputError("simulate.shots is required for this experiment".into()));
    let sampled = match &cfg.model {
        ExperimentModel::TalbotLau(_) => {
            let Some(ExperimentModel::TalbotLau(template)) = &cfg.template else {
                bail!(InputError("simulating a Talbot-Lau scan needs talbot_lau.molecules".into()));
            };
            let molecules = template.bins.first().and_then(|b| b.n_minus).unwrap_or(0.0) as u64;
            ExperimentModel::TalbotLau(synth::sample_talbot_lau(&spec, template, molecules)?)
        }
        ExperimentModel::Bec(c) => ExperimentModel::Bec(synth::sample_bec(&spec, c, shots()?)?),
        ExperimentModel::Nested(c) => {
            let truths = vec![s.delta_phi_true; shots()?];
            ExperimentModel::Nested(synth::sample_nested(&spec, c, &truths)?)
        }
        ExperimentModel::SingleAtom(_) => {
            let Some(ExperimentModel::SingleAtom(template)) = &cfg.template else {
                bail!(InputError("simulating single-atom data needs single_atom.bins and counts_per_bin".into()));
            };
            ExperimentModel::SingleAtom(synth::sample_single_atom(&spec, template)?)
        }
    };
    let comments = vec![
        "generator = macrotest simulate".to_string(),
        format!("experiment = {}", cfg.model.kind()),
        format!("label = {}", cfg.label),
        format!("seed = {seed}"),
        format!("stream = {}", s.stream),
        format!("rng = {RNG_NAME}"),
        format!("tau_e_s = {:e}", s.tau_e),
        format!("critical_length_m = {:e}", s.critical_length),
        format!("sigma_q = {:e}", params.sigma_q()),
        format!("config_sha256 = {}", cfg.sha256),
    ];
    let path = write_atomic(&opts.out, "data.csv", |w| write_data(w, &Data::of(&sampled), &comments))?;
    println!("{}", path.display());
    Ok(())
}

/// Plot commands for the tables found in the output directory.
pub fn gnuplot(opts: &Options) -> Result<()> {
    let has = |name: &str| opts.out.join(name).is_file();
    let mut script = vec![
        "# gnuplot script for macrotest output; run from the output directory".to_string(),
        "set datafile separator ','".to_string(),
        "set key autotitle columnhead".to_string(),
        "set terminal pngcairo size 900,600".to_string(),
    ];
    let mut any = false;
    let density = ["prior.csv", "posterior.csv"].into_iter().filter(|f| has(f)).collect::<Vec<_>>();
    if !density.is_empty() {
        any = true;
        script.push("set output 'posterior.png'".into());
        script.push("set logscale x".into());
        script.push("set xlabel 'tau_e (s)'".into());
        script.push("set ylabel 'p / p_max'".into());
        let plots: Vec<String> = density.iter().map(|f| format!("'{f}' using 1:3 with lines title '{f}'")).collect();
        script.push(format!("plot {}", plots.join(", ")));
        script.push("unset logscale".into());
    }
    if has("scan.csv") {
        any = true;
        script.push("set output 'scan.png'".into());
        script.push("set logscale xy".into());
        script.push("set xlabel 'hbar / sigma_q (m)'".into());
        script.push("set ylabel 'tau_m (s)'".into());
        script.push("plot 'scan.csv' using 1:4 with points title 'tau_m'".into());
        script.push("unset logscale".into());
    }
    if has("posterior_map.csv") {
        any = true;
        script.push("set output 'map.png'".into());
        script.push("set view map".into());
        script.push("set xlabel 'log10 tau_e (s)'".into());
        script.push("set ylabel 'log10 hbar / sigma_q (m)'".into());
        script.push("set cbrange [-30:0]".into());
        script.push("splot 'posterior_map.csv' using (log10($1)):(log10($2)):5 with pm3d title 'log density'".into());
    }
    if has("marginal_tau.csv") {
        any = true;
        script.push("set output 'marginal_tau.png'".into());
        script.push("set logscale x".into());
        script.push("plot 'marginal_tau.csv' using 1:2 with lines".into());
        script.push("unset logscale".into());
    }
    if !any {
        bail!(InputError(format!("no plottable tables in {}", opts.out.display())));
    }
    let path = write_atomic(&opts.out, "plot.gp", |w| {
        for l in &script {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })?;
    println!("{}", path.display());
    Ok(())
}
