use std::f64::consts::{FRAC_PI_2, PI};

use macrotest::constants::{AMU, CS133_MASS, HBAR, RB87_MASS, RB_D2_WAVELENGTH};
use macrotest::inference::*;
use macrotest::likelihood::*;
use macrotest::mmm::visibility_coefficient;
use macrotest::synth::{rng_for, sample_nested, sample_single_atom, sample_talbot_lau, SynthSpec};
use macrotest::{Error, ExperimentModel, LikelihoodModel, MmmParams};
use rand_distr::{Distribution, LogNormal};

fn params(tau: f64, length: f64) -> MmmParams {
    MmmParams::from_critical_length(tau, length).unwrap()
}

fn gaussian_posterior(grid: &TauGrid, mean: f64, sd: f64) -> Posterior {
    let lv = grid.points().iter().map(|t| -0.5 * ((t - mean) / sd).powi(2)).collect();
    Posterior::from_log_unnormalized(grid.clone(), lv).unwrap()
}

fn single_atom(bins: usize, nk: u64, sigma_dark: f64) -> SingleAtomConfig {
    let f = 12.7e3;
    SingleAtomConfig {
        omega: 2.0 * PI * f,
        t: 20.0,
        delta_t: 1.003 / (bins as f64 * f),
        sigma_dark,
        mass: CS133_MASS,
        delta_x: 3.7e-6,
        w_x: 1e-7,
        w_y: 1e-7,
        extend_plateau: false,
        bins: (0..bins as i64).map(|k| PhaseBin { k, n_total: nk, n_a: 0 }).collect(),
    }
}

fn quadrature_only(c: &SingleAtomConfig) -> SingleAtomConfig {
    let mut c = c.clone();
    c.omega = FRAC_PI_2;
    c.t = 1.0;
    c.delta_t = 2.0;
    c
}

// ---- posterior bookkeeping -------------------------------------------------

#[test]
fn odds_at_median_and_quantiles() {
    let grid = TauGrid::new(1e8, 1e14, 600).unwrap();
    let post = gaussian_posterior(&grid, 3e11, 8e10);
    assert!((post.integral() - 1.0).abs() < 1e-9);
    for alpha in [0.05, 0.25, 0.5] {
        let q = quantile(&post, alpha).unwrap();
        assert!((odds_ratio(&post, q).unwrap() - alpha / (1.0 - alpha)).abs() < 1e-6);
    }
    assert!((odds_ratio(&post, post.quantile(0.5).unwrap()).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn odds_of_uniform_density() {
    let (a, b) = (1e3, 1e9);
    let grid = TauGrid::new(a, b, 300).unwrap();
    let post = Posterior::from_log_unnormalized(grid, vec![0.0; 300]).unwrap();
    let g = (a * b).sqrt();
    let want = (g - a) / (b - g);
    assert!((post.odds_ratio(g).unwrap() / want - 1.0).abs() < 1e-9);
}

#[test]
fn median_of_log_symmetric_density_is_geometric_centre() {
    let grid = TauGrid::new(1e4, 1e16, 1201).unwrap();
    // density in ln tau is Gaussian about 1e10, i.e. p(tau) ~ exp(-(ln tau - c)^2 / 2 s^2) / tau
    let c = 1e10f64.ln();
    let lv = grid.points().iter().map(|t| -0.5 * ((t.ln() - c) / 2.0).powi(2) - t.ln()).collect();
    let post = Posterior::from_log_unnormalized(grid.clone(), lv).unwrap();
    let med = post.quantile(0.5).unwrap();
    assert!((med.log10() - 10.0).abs() <= grid.log_step());
}

#[test]
fn quantile_matches_monte_carlo() {
    let (mu, s) = (25.0f64, 0.6);
    let grid = TauGrid::new(1e9, 1e13, 2000).unwrap();
    let lv = grid.points().iter().map(|t| -0.5 * ((t.ln() - mu) / s).powi(2) - t.ln()).collect();
    let post = Posterior::from_log_unnormalized(grid.clone(), lv).unwrap();
    let dist = LogNormal::new(mu, s).unwrap();
    let mut rng = rng_for(1, 0);
    let mut draws: Vec<f64> = (0..1_000_000).map(|_| dist.sample(&mut rng)).collect();
    draws.sort_by(f64::total_cmp);
    for alpha in [0.05, 0.5, 0.9] {
        let emp = draws[(alpha * draws.len() as f64) as usize];
        let q = post.quantile(alpha).unwrap();
        assert!((q.log10() - emp.log10()).abs() <= grid.log_step(), "alpha={alpha}: {q:e} vs {emp:e}");
    }
}

#[test]
fn fwhm_conventions() {
    let grid = TauGrid::new(1e9, 1e13, 2000).unwrap();
    let s = 5e10;
    let post = gaussian_posterior(&grid, 1e12, s);
    let want = 2.0 * (2.0 * 2f64.ln()).sqrt() * s;
    assert!((post.fwhm().unwrap() / want - 1.0).abs() < 0.01);

    // two separated bumps: outermost crossings of the global half maximum
    let lv = grid
        .points()
        .iter()
        .map(|t| {
            let a = (-0.5 * ((t - 1e12) / s).powi(2)).exp();
            let b = 0.8 * (-0.5 * ((t - 2e12) / s).powi(2)).exp();
            (a + b).ln()
        })
        .collect();
    let bimodal = Posterior::from_log_unnormalized(grid.clone(), lv).unwrap();
    let half = 0.5 * want;
    // right edge of the second bump: 0.8 exp(-x^2/2s^2) = 0.5
    let right = 2e12 + s * (2.0 * (0.8f64 / 0.5).ln()).sqrt();
    let expected = right - (1e12 - half);
    assert!((bimodal.fwhm().unwrap() / expected - 1.0).abs() < 0.01);

    let monotone =
        Posterior::from_log_unnormalized(grid.clone(), grid.points().iter().map(|t| -t / 1e12).collect()).unwrap();
    assert!(monotone.fwhm().is_err());
}

// ---- Fisher information and priors -------------------------------------

fn crest_run(n: u64, v0: f64) -> TalbotLauRun {
    let d_g = 266e-9;
    let mut bin = CountBin::new(d_g / 4.0, n / 2);
    bin.n_minus = Some((n - n / 2) as f64);
    TalbotLauRun {
        mode: ScanMode::Stationary,
        d_g,
        f1: 0.42,
        f3: 0.42,
        steps: 1,
        delta_x_offset: 0.0,
        laser_power: 1.0,
        mass: 1000.0 * AMU,
        velocity_bins: vec![VelocityBin { weight: 1.0, time: 1e-3, v0 }],
        bins: vec![bin],
    }
}

#[test]
fn bernoulli_fisher_by_hand() {
    // at the fringe crest the pass probability is f3 (1 + V0 e^{-c/tau})
    let (n, v0, length) = (1000u64, 0.5, 1e-8);
    let run = crest_run(n, v0);
    let model = ExperimentModel::TalbotLau(run.clone());
    let c = visibility_coefficient(HBAR / length, run.mass, 1e-3, run.d_g).unwrap();
    let grid = TauGrid::new(1e-3 * c, 1e3 * c, 400).unwrap();
    for &tau in grid.points() {
        let r = (-c / tau).exp();
        let p = run.f3 * (1.0 + v0 * r);
        let dp = run.f3 * v0 * r * c / (tau * tau);
        let want = n as f64 * dp * dp / (p * (1.0 - p));
        let got = fisher_information(&model, &params(tau, length)).unwrap();
        assert!((got - want).abs() <= 1e-10 * want.max(1e-300), "tau={tau:e}: {got} vs {want}");
    }
    let prior = jeffreys_prior(&model, &grid, HBAR / length).unwrap();
    assert!((prior.integral() - 1.0).abs() < 1e-9);
    // prior / sqrt(F) is constant wherever the information is positive
    let k: Vec<f64> = grid
        .points()
        .iter()
        .zip(prior.log_density())
        .filter_map(|(t, lp)| {
            let f = fisher_information(&model, &params(*t, length)).unwrap();
            (f > 0.0).then(|| lp - 0.5 * f.ln())
        })
        .collect();
    assert!(k.len() > grid.len() / 2);
    assert!(k.iter().all(|v| (v - k[0]).abs() < 1e-9));
}

#[test]
fn jeffreys_prior_is_reparametrisation_invariant() {
    // prior built on a grid in lambda = 1/tau, mapped back to tau
    let cfg = single_atom(40, 10_000, 0.0);
    let model = ExperimentModel::SingleAtom(cfg);
    let sq = HBAR / 1e-6;
    let tau_grid = TauGrid::new(1e9, 1e15, 3000).unwrap();
    let prior = jeffreys_prior(&model, &tau_grid, sq).unwrap();
    let lam_grid = TauGrid::new(1e-15, 1e-9, 3000).unwrap();
    let lv = lam_grid
        .points()
        .iter()
        .map(|l| {
            let tau = 1.0 / l;
            let f_tau = model.fisher(&MmmParams::new(tau, sq).unwrap()).unwrap();
            0.5 * (f_tau * tau.powi(4)).ln()
        })
        .collect();
    let lam_prior = Posterior::from_log_unnormalized(lam_grid.clone(), lv).unwrap();
    let p_tau = prior.density();
    let top = p_tau.iter().copied().fold(0.0, f64::max);
    let n = tau_grid.len();
    for (i, l) in lam_grid.points().iter().enumerate() {
        let tau = 1.0 / l;
        let back = lam_prior.density()[i] * l * l;
        let j = n - 1 - i;
        assert!((tau / tau_grid.points()[j] - 1.0).abs() < 1e-9);
        assert!((back - p_tau[j]).abs() <= 1e-3 * top, "tau={tau:e}");
    }
}

#[test]
fn information_free_phases() {
    let cfg = quadrature_only(&single_atom(10, 10_000, 0.0));
    let model = ExperimentModel::SingleAtom(cfg.clone());
    assert_eq!(fisher_information(&model, &params(1e12, 1e-6)).unwrap(), 0.0);
    let grid = TauGrid::default();
    assert!(matches!(jeffreys_prior(&model, &grid, HBAR / 1e-6), Err(Error::DegeneratePrior(_))));
    assert!(matches!(jeffreys_single_atom(&cfg, &grid, HBAR / 1e-6), Err(Error::DegeneratePrior(_))));
}

#[test]
fn closed_form_prior_without_dark_counts() {
    // with sigma_dark = 0 the compact formula is N^2 G^2 t^2 c^2 (D + 2 c^2) / (4 tau^4 D^2),
    // D = 4 N e^{Gt/tau} - N c^2
    let cfg = single_atom(20, 5_000, 0.0);
    let sq = HBAR / 1e-6;
    let grid = TauGrid::new(1e10, 1e14, 400).unwrap();
    let prior = jeffreys_single_atom(&cfg, &grid, sq).unwrap();
    let g = cfg.geometry().dephasing_coefficient(sq);
    let lv: Vec<f64> = grid
        .points()
        .iter()
        .map(|tau| {
            let f: f64 = cfg
                .bins
                .iter()
                .map(|b| {
                    let n = b.n_total as f64;
                    let c = cfg.phase(b.k).cos();
                    let d = 4.0 * n * (g * cfg.t / tau).exp() - n * c * c;
                    n * n * g * g * cfg.t * cfg.t * c * c * (d + 2.0 * c * c) / (4.0 * tau.powi(4) * d * d)
                })
                .sum();
            0.5 * f.ln()
        })
        .collect();
    let direct = Posterior::from_log_unnormalized(grid, lv).unwrap();
    for (a, b) in prior.log_density().iter().zip(direct.log_density()) {
        assert!((a - b).abs() < 1e-9);
    }
}

// ---- updating ------------------------------------------------------------------

#[test]
fn sequential_updates_compose() {
    let truth = params(1e12, 1e-6);
    let data = sample_single_atom(&SynthSpec::new(truth, 8), &single_atom(60, 10_000, 0.0)).unwrap();
    let (a, b) = data.bins.split_at(25);
    let part =
        |bins: &[PhaseBin]| ExperimentModel::SingleAtom(SingleAtomConfig { bins: bins.to_vec(), ..data.clone() });
    let sq = truth.sigma_q();
    let grid = TauGrid::new(1e10, 1e14, 500).unwrap();
    let prior = jeffreys_prior(&ExperimentModel::SingleAtom(data.clone()), &grid, sq).unwrap();
    let seq = posterior_update(&posterior_update(&prior, &part(a), sq).unwrap(), &part(b), sq).unwrap();
    let once = posterior_update(&prior, &ExperimentModel::SingleAtom(data.clone()), sq).unwrap();
    for (x, y) in seq.log_density().iter().zip(once.log_density()) {
        if x.is_finite() || y.is_finite() {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
    }
    // no data leaves the prior untouched
    let empty = ExperimentModel::SingleAtom(SingleAtomConfig { bins: vec![], ..data });
    assert_eq!(posterior_update(&prior, &empty, sq).unwrap(), prior);
}

#[test]
fn posterior_mode_matches_brute_force_scan() {
    let truth = params(1e12, 1e-6);
    let data = sample_single_atom(&SynthSpec::new(truth, 2), &single_atom(400, 10_000, 0.0)).unwrap();
    let model = ExperimentModel::SingleAtom(data.clone());
    let grid = TauGrid::default();
    let sq = truth.sigma_q();
    let post = posterior_update(&jeffreys_prior(&model, &grid, sq).unwrap(), &model, sq).unwrap();
    let g = data.geometry().dephasing_coefficient(sq);
    let scan: Vec<f64> = grid
        .points()
        .iter()
        .map(|tau| {
            // log prior from the compact formula, log likelihood summed by hand
            let mut f = 0.0;
            let mut ll = 0.0;
            for b in &data.bins {
                let n = b.n_total as f64;
                let c = data.phase(b.k).cos();
                let e = (-g * data.t / tau).exp();
                let d = 4.0 * n - n * c * c * e;
                f += (n * g * data.t / (tau * tau)).powi(2) * c * c * e * (d + 2.0 * c * c * e) / (4.0 * d * d);
                let p = 0.5 - 0.25 * c * (-0.5 * g * data.t / tau).exp();
                let var = n * p * (1.0 - p);
                ll += -0.5 * (b.n_a as f64 - n * p).powi(2) / var - 0.5 * var.ln();
            }
            0.5 * f.ln() + ll
        })
        .collect();
    let best = scan.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!((post.argmax() as i64 - best as i64).abs() <= 1);
}

#[test]
fn nested_posterior_recovers_truth() {
    let hk = 2.0 * PI * HBAR / RB_D2_WAVELENGTH;
    let cfg = NestedMziConfig {
        n_atoms: 1_000_000,
        mass: RB87_MASS,
        t: 1.2,
        delta_p_inner: 2.0 * hk,
        w_x: 1e-6,
        w_y: 1e-6,
        extend_plateau: false,
        shots: vec![],
    };
    let truth = params(6e12, 1e-4);
    let truths: Vec<f64> = (0..138).map(|i| (i % 7) as f64 * 0.3 - 0.9).collect();
    let data = sample_nested(&SynthSpec::new(truth, 17), &cfg, &truths).unwrap();
    let model = ExperimentModel::Nested(data);
    let grid = TauGrid::new(1e2, 1e22, TauGrid::MIN_POINTS).unwrap();
    let a = analyze(&model, &grid, truth.sigma_q(), &AnalysisOptions { refine: false, ..Default::default() }).unwrap();
    assert!((a.posterior.mode().log10() - truth.tau_e().log10()).abs() <= grid.log_step());
}

#[test]
fn consistency_over_seeds() {
    // 90% credible intervals shrink with the sample size and cover the truth
    let truth = params(1e12, 1e-6);
    let grid = TauGrid::new(1e8, 1e16, 400).unwrap();
    let opts = AnalysisOptions::default();
    let mut widths = Vec::new();
    for total in [1_000u64, 10_000, 100_000] {
        let template = single_atom(10, total / 10, 0.0);
        let mut covered = 0;
        let mut width = 0.0;
        for seed in 0..50 {
            let data = sample_single_atom(&SynthSpec::new(truth, 1000 + seed), &template).unwrap();
            let a = analyze(&ExperimentModel::SingleAtom(data), &grid, truth.sigma_q(), &opts).unwrap();
            let (lo, hi) = (a.posterior.quantile(0.05).unwrap(), a.posterior.quantile(0.95).unwrap());
            covered += (lo <= truth.tau_e() && truth.tau_e() <= hi) as usize;
            width += (hi / lo).ln();
        }
        assert!(covered >= 45, "n = {total}: {covered}/50 intervals cover the truth");
        widths.push(width);
    }
    assert!(widths.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn grid_bounds_barely_move_the_quantile() {
    let truth = params(1e12, 1e-6);
    let data = sample_single_atom(&SynthSpec::new(truth, 5), &single_atom(100, 10_000, 0.0)).unwrap();
    let shift = quantile_bounds_shift(
        &ExperimentModel::SingleAtom(data),
        &TauGrid::default(),
        truth.sigma_q(),
        &AnalysisOptions::default(),
    )
    .unwrap();
    assert!(shift < 5e-3, "{shift}");
}

// ---- Hellinger ---------------------------------------------------------------------

#[test]
fn hellinger_identical_and_disjoint() {
    let grid = TauGrid::new(1e10, 1e13, 2000).unwrap();
    let (m, s) = (1e12, 1e11);
    let post = gaussian_posterior(&grid, m, s);
    assert!(hellinger(&post, m, 1.0 / (s * s)).unwrap() < 1e-4);
    assert!((hellinger(&post, 1e15, 1e-24).unwrap() - 1.0).abs() < 1e-3);
}

#[test]
fn hellinger_against_refined_quadrature() {
    let grid = TauGrid::new(1e10, 1e12, 400).unwrap();
    let post = gaussian_posterior(&grid, 3e11, 5e10);
    let (tau0, sd) = (4e11, 5e10);
    let h = hellinger(&post, tau0, 1.0 / (sd * sd)).unwrap();

    let gauss = |x: f64| (-0.5 * ((x - tau0) / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt());
    let t = grid.points();
    let p = post.density();
    let mut h2 = 0.0;
    for i in 0..t.len() - 1 {
        // Simpson on 10 sub-intervals per cell
        let m = 10;
        let dx = (t[i + 1] - t[i]) / m as f64;
        let f = |x: f64| {
            let lin = p[i] + (p[i + 1] - p[i]) * (x - t[i]) / (t[i + 1] - t[i]);
            (gauss(x).sqrt() - lin.sqrt()).powi(2)
        };
        for k in 0..m {
            let a = t[i] + k as f64 * dx;
            h2 += dx / 6.0 * (f(a) + 4.0 * f(a + 0.5 * dx) + f(a + dx));
        }
    }
    // Gaussian mass on [0, inf) outside the grid
    let cdf = |x: f64| 0.5 * macrotest::specfun::erfc(-(x - tau0) / (sd * 2f64.sqrt()));
    h2 += (cdf(t[0]) - cdf(0.0)) + (1.0 - cdf(t[t.len() - 1]));
    let oracle = (0.5 * h2).sqrt();
    assert!((h - oracle).abs() < 1e-4, "{h} vs {oracle}");
    assert!(h > 0.3 && h < 0.9);
}

#[test]
fn hellinger_between_is_symmetric_and_bounded() {
    let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
    let p: Vec<f64> = x.iter().map(|v| (-0.5 * (v - 4.0).powi(2)).exp() / (2.0 * PI).sqrt()).collect();
    let q: Vec<f64> = x.iter().map(|v| (-0.5 * ((v - 5.0) / 1.5).powi(2)).exp() / (1.5 * (2.0 * PI).sqrt())).collect();
    let a = hellinger_between(&x, &p, &q).unwrap();
    let b = hellinger_between(&x, &q, &p).unwrap();
    assert_eq!(a, b);
    assert!(a > 0.0 && a < 1.0);
    assert!(hellinger_between(&x, &p, &p).unwrap() < 1e-12);
}

#[test]
fn min_hellinger_recovers_gaussian_centre() {
    let cfg = single_atom(100, 10_000, 0.0);
    let model = ExperimentModel::SingleAtom(cfg);
    let sq = HBAR / 1e-6;
    let tau0 = 1e12;
    let f0 = model.fisher(&MmmParams::new(tau0, sq).unwrap()).unwrap();
    let sd = 1.0 / f0.sqrt();
    let grid = TauGrid::new(tau0 - 12.0 * sd, tau0 + 12.0 * sd, 2000).unwrap();
    let post = gaussian_posterior(&grid, tau0, sd);
    let hm = min_hellinger(&post, &model, sq).unwrap().require_interior().unwrap();
    assert!((hm.tau0 / tau0 - 1.0).abs() < 5e-3);
    assert!(hm.h_min < 1e-3);
}

#[test]
fn prior_shaped_posterior_is_far_from_gaussian() {
    let model = ExperimentModel::SingleAtom(single_atom(100, 10_000, 0.0));
    let sq = HBAR / 1e-6;
    let prior = jeffreys_prior(&model, &TauGrid::default(), sq).unwrap();
    let hm = min_hellinger(&prior, &model, sq).unwrap();
    assert!(hm.h_min > 0.3, "{}", hm.h_min);
}

// ---- macroscopicity ---------------------------------------------------------------

#[test]
fn table_header_and_log_scale() {
    assert_eq!(TableRow::HEADER, "FWHM, Gaus. FWHM, min. HD, μ_m");
    let row = TableRow { fwhm: 7.85e10, gauss_fwhm: 7.1e10, h_min: 0.0123, mu_m: 1e14f64.log10() };
    assert!(row.line().ends_with(", 14.0"));
}

#[test]
fn empty_record_leaves_prior() {
    let hk = 2.0 * PI * HBAR / RB_D2_WAVELENGTH;
    let cfg = BecMziConfig {
        n_atoms: 10_000,
        mass: RB87_MASS,
        delta_p: 90.0 * hk,
        separation_time: 2.08,
        t: 1.0,
        w_x: 1e-6,
        w_y: 1e-6,
        phi: 0.3,
        extend_plateau: false,
        shots: vec![],
    };
    let grid = TauGrid::new(1e2, 1e22, 300).unwrap();
    let a = analyze(&ExperimentModel::Bec(cfg), &grid, HBAR / 1e-3, &AnalysisOptions::default()).unwrap();
    assert!(!a.updated);
    assert_eq!(a.prior, a.posterior);
}

#[test]
fn more_high_visibility_data_never_lowers_mu() {
    let vb = vec![VelocityBin { weight: 1.0, time: 2e-3, v0: 0.4 }];
    let d_g = 266e-9;
    let template = TalbotLauRun {
        mode: ScanMode::Pulsed,
        d_g,
        f1: 0.42,
        f3: 0.42,
        steps: 20,
        delta_x_offset: 0.0,
        laser_power: 1.0,
        mass: 5000.0 * AMU,
        velocity_bins: vb,
        bins: (0..20).map(|i| CountBin::pulsed(i as f64 * d_g / 20.0, 0, 0)).collect(),
    };
    let high = MmmParams::new(1e20, HBAR / 1e-8).unwrap();
    let first = sample_talbot_lau(&SynthSpec::new(high, 3), &template, 5_000).unwrap();
    let second = sample_talbot_lau(&SynthSpec::new(high, 3).with_stream(1), &template, 5_000).unwrap();
    let mut both = first.clone();
    both.bins.extend(second.bins);
    let sq: Vec<f64> = [1e-9, 1e-8, 1e-7].iter().map(|l| HBAR / l).collect();
    let grid = TauGrid::default();
    let opts = AnalysisOptions::default();
    let mu = |run: TalbotLauRun| {
        let model = ExperimentModel::TalbotLau(run).prepared().unwrap();
        macroscopicity(&model, &sq, &grid, None, &opts).unwrap().mu_m
    };
    let (a, b) = (mu(first), mu(both));
    assert!(b >= a - grid.log_step(), "{b} < {a}");
}
