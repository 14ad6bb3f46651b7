//! Monte Carlo orchestration: expands scenario specs into scheme runs,
//! fans trials out over a thread pool with deterministic aggregation,
//! and emits the results table. Also hosts the analytical verification
//! suite behind the `verify` CLI subcommand.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::beamforming;
use crate::channel::{sample_channels, GroupProfile};
use crate::error::{JsdmError, Result};
use crate::fairness::{self, FairnessState, PfParams, RrParams};
use crate::linalg::CMat;
use crate::metrics::{self, SchemeId};
use crate::rng;
use crate::scenario::{ScenarioSpec, SchemeConfig};
use crate::scheduling::{self, SusCriterion};
use crate::theory;

/// CLI-level overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

/// One output row. Column order is part of the external interface.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scenario: String,
    pub scheme: String,
    pub k: usize,
    pub param_alpha: Option<f64>,
    pub param_gamma: Option<f64>,
    pub mean_sum_rate_bits: f64,
    pub stderr: f64,
    pub mean_feedback_units: f64,
    pub trials: u64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "scenario,scheme,K,param_alpha,param_gamma,mean_sum_rate_bits,stderr,mean_feedback_units,trials,seed";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{:.9},{:.9},{:.3},{},{}",
            self.scenario,
            self.scheme,
            self.k,
            fmt_opt(self.param_alpha),
            fmt_opt(self.param_gamma),
            self.mean_sum_rate_bits,
            self.stderr,
            self.mean_feedback_units,
            self.trials,
            self.seed
        )
    }
}

/// Writes rows with the fixed header/column order.
pub fn write_csv(rows: &[CsvRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(f, "{}", r.to_line())?;
    }
    Ok(())
}

/// A single (scheme, parameter) evaluation unit.
#[derive(Debug, Clone, PartialEq)]
enum SchemeRun {
    Redos { alpha: f64 },
    Rbf,
    Sus { criterion: SusCriterion, gamma: f64 },
    Dpc,
}

impl SchemeRun {
    fn label(&self) -> String {
        match self {
            SchemeRun::Redos { .. } => SchemeId::Redos.label().to_string(),
            SchemeRun::Rbf => SchemeId::Rbf.label().to_string(),
            SchemeRun::Sus {
                criterion: SusCriterion::Norm,
                ..
            } => SchemeId::SusNorm.label().to_string(),
            SchemeRun::Sus { .. } => SchemeId::SusQuasiSinr.label().to_string(),
            SchemeRun::Dpc => SchemeId::GreedyDpc.label().to_string(),
        }
    }

    fn params(&self) -> (Option<f64>, Option<f64>) {
        match self {
            SchemeRun::Redos { alpha } => (Some(*alpha), None),
            SchemeRun::Sus { gamma, .. } => (None, Some(*gamma)),
            _ => (None, None),
        }
    }
}

fn expand_schemes(spec: &ScenarioSpec) -> Result<Vec<SchemeRun>> {
    let mut runs = Vec::new();
    for s in &spec.schemes {
        match s {
            SchemeConfig::RedosPbr { alpha, alpha_grid } => {
                let grid: Vec<f64> = match (alpha, alpha_grid) {
                    (Some(a), None) => vec![*a],
                    (None, Some(g)) if !g.is_empty() => g.clone(),
                    _ => {
                        return Err(JsdmError::Config(
                            "redos-pbr needs exactly one of alpha / alpha_grid".into(),
                        ))
                    }
                };
                for a in grid {
                    if !(0.0 < a && a < 1.0) {
                        return Err(JsdmError::Config(format!("alpha {a} outside (0, 1)")));
                    }
                    runs.push(SchemeRun::Redos { alpha: a });
                }
            }
            SchemeConfig::Rbf {} => runs.push(SchemeRun::Rbf),
            SchemeConfig::SusNorm { gamma_grid } => {
                for &g in gamma_grid {
                    runs.push(SchemeRun::Sus {
                        criterion: SusCriterion::Norm,
                        gamma: g,
                    });
                }
            }
            SchemeConfig::SusQsinr { gamma_grid } => {
                for &g in gamma_grid {
                    runs.push(SchemeRun::Sus {
                        criterion: SusCriterion::QuasiSinr,
                        gamma: g,
                    });
                }
            }
            SchemeConfig::GreedyDpc {} => runs.push(SchemeRun::Dpc),
        }
    }
    Ok(runs)
}

/// Evaluates one scheme run on one sampled batch. Returns
/// (sum rate bits, feedback units).
fn eval_scheme(
    run: &SchemeRun,
    profiles: &[GroupProfile],
    batch: &crate::channel::ChannelBatch,
    rho: f64,
) -> Result<(f64, f64)> {
    Ok(match run {
        SchemeRun::Redos { alpha } => {
            let outcome = scheduling::redos_select(profiles, batch, *alpha, rho);
            let rates = metrics::zf_water_filling_rates(profiles, batch, &outcome, rho)?;
            let fb = metrics::tally_feedback(&outcome, SchemeId::Redos, profiles);
            (rates.sum_bits(), fb.units(1.0))
        }
        SchemeRun::Rbf => {
            let outcome = scheduling::rbf_select(profiles, batch, rho);
            let rates = metrics::zf_equal_power_rates(profiles, batch, &outcome, rho)?;
            let fb = metrics::tally_feedback(&outcome, SchemeId::Rbf, profiles);
            (rates.sum_bits(), fb.units(1.0))
        }
        SchemeRun::Sus { criterion, gamma } => {
            let outcome = scheduling::sus_select(profiles, batch, *gamma, rho, *criterion);
            let rates = metrics::zf_water_filling_rates(profiles, batch, &outcome, rho)?;
            let id = if *criterion == SusCriterion::Norm {
                SchemeId::SusNorm
            } else {
                SchemeId::SusQuasiSinr
            };
            let fb = metrics::tally_feedback(&outcome, id, profiles);
            (rates.sum_bits(), fb.units(1.0))
        }
        SchemeRun::Dpc => {
            let out = scheduling::greedy_dpc_select(profiles, batch, rho);
            let fb: f64 = profiles
                .iter()
                .map(|p| 2.0 * p.m as f64 * p.k_users as f64)
                .sum();
            (out.rate_nats / std::f64::consts::LN_2, fb)
        }
    })
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Enforces the BD gate for a variant (unless waived).
fn bd_gate(spec: &ScenarioSpec, profiles: &[GroupProfile]) -> Result<()> {
    if spec.waive_bd_check || profiles.len() < 2 {
        return Ok(());
    }
    let reports = beamforming::check_approx_bd(profiles, spec.bd_tol);
    if let Some(worst) = reports
        .iter()
        .filter(|r| !r.pass)
        .max_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap())
    {
        return Err(JsdmError::BdCheckFailed {
            group: worst.group,
            residual: worst.residual,
            tol: spec.bd_tol,
        });
    }
    Ok(())
}

/// Runs every (K, scheme, parameter) cell of a scenario. Deterministic
/// in (spec, seed) no matter how many worker threads are used: trials
/// draw from per-trial derived streams and the reduction runs in trial
/// order.
pub fn run_scenario(spec: &ScenarioSpec, overrides: &RunOverrides) -> Result<Vec<CsvRow>> {
    let seed = overrides.seed.unwrap_or(spec.seed);
    let trials = overrides.trials.unwrap_or(spec.trials);
    let mut rows = Vec::new();
    for variant in spec.variants() {
        let runs = expand_schemes(&variant)?;
        for &k in &variant.k_grid {
            let profiles = variant.build_profiles(k)?;
            bd_gate(&variant, &profiles)?;
            let rho = variant.rho(&profiles);
            if !runs.is_empty() {
                // One shared batch per trial across all schemes (paired
                // comparisons cut the variance of ordering checks).
                let per_trial: Vec<Result<Vec<(f64, f64)>>> = with_pool(overrides.threads, || {
                    (0..trials)
                        .into_par_iter()
                        .map(|t| {
                            let batch = sample_channels(&profiles, seed, t);
                            runs.iter()
                                .map(|r| eval_scheme(r, &profiles, &batch, rho))
                                .collect()
                        })
                        .collect()
                });
                let mut columns: Vec<(Vec<f64>, Vec<f64>)> =
                    vec![(Vec::new(), Vec::new()); runs.len()];
                for trial in per_trial {
                    let trial = trial?;
                    for (i, (rate, fb)) in trial.into_iter().enumerate() {
                        columns[i].0.push(rate);
                        columns[i].1.push(fb);
                    }
                }
                for (run, (rates, fbs)) in runs.iter().zip(&columns) {
                    let (mean, se) = mean_stderr(rates);
                    let (fb_mean, _) = mean_stderr(fbs);
                    let (pa, pg) = run.params();
                    rows.push(CsvRow {
                        scenario: variant.name.clone(),
                        scheme: run.label(),
                        k,
                        param_alpha: pa,
                        param_gamma: pg,
                        mean_sum_rate_bits: mean,
                        stderr: se,
                        mean_feedback_units: fb_mean,
                        trials,
                        seed,
                    });
                }
            }
            if let Some(f) = &variant.fairness {
                rows.extend(run_fairness(&variant, f, &profiles, rho, k, seed, trials)?);
            }
        }
    }
    Ok(rows)
}

fn run_fairness(
    variant: &ScenarioSpec,
    f: &crate::scenario::FairnessConfig,
    profiles: &[GroupProfile],
    rho: f64,
    k: usize,
    seed: u64,
    trials: u64,
) -> Result<Vec<CsvRow>> {
    let mut rows = Vec::new();
    match f.mode.as_str() {
        "rr" => {
            // One round per trial; report per-interval averages.
            let mut rates = Vec::new();
            let mut fbs = Vec::new();
            for round in 0..trials {
                let params = RrParams {
                    alpha_init: f.alpha_init,
                    delta_alpha: f.delta_alpha,
                    rho,
                };
                let round_seed = rng::mix_seed(&[seed, round, 0x5252]);
                let mut source = |t: u64| sample_channels(profiles, round_seed, t);
                let out = fairness::rr_round(profiles, params, &mut source)?;
                let total: f64 = out
                    .served
                    .iter()
                    .flat_map(|g| g.iter().map(|&(_, _, r)| r))
                    .sum();
                rates.push(total / out.intervals as f64 / std::f64::consts::LN_2);
                fbs.push(
                    (out.cqi_reports_total + out.index_reports_total) as f64
                        / out.intervals as f64,
                );
            }
            let (mean, se) = mean_stderr(&rates);
            let (fb, _) = mean_stderr(&fbs);
            rows.push(CsvRow {
                scenario: variant.name.clone(),
                scheme: SchemeId::RedosRr.label().to_string(),
                k,
                param_alpha: Some(f.alpha_init),
                param_gamma: None,
                mean_sum_rate_bits: mean,
                stderr: se,
                mean_feedback_units: fb,
                trials,
                seed,
            });
        }
        "pf" => {
            for v in &f.variants {
                let params = PfParams {
                    delta: f.delta,
                    delta_alpha_up: v.delta_alpha_up,
                    delta_alpha_down: v.delta_alpha_down,
                    mu_init: f.mu_init,
                    alpha_init: v.alpha_init.unwrap_or(f.alpha_init),
                };
                let mut state = FairnessState::new(profiles, params)?;
                let mut per_interval = Vec::with_capacity(f.intervals as usize);
                for t in 0..f.intervals {
                    let batch = sample_channels(profiles, seed, t);
                    let out = fairness::pf_interval(profiles, &mut state, &batch, rho)?;
                    per_interval.push(out.sum_rate_nats / std::f64::consts::LN_2);
                }
                let (mean, se) = mean_stderr(&per_interval);
                rows.push(CsvRow {
                    scenario: variant.name.clone(),
                    scheme: format!("{}[{}]", SchemeId::RedosPf.label(), v.label),
                    k,
                    param_alpha: Some(params.alpha_init),
                    param_gamma: None,
                    mean_sum_rate_bits: mean,
                    stderr: se,
                    mean_feedback_units: state.cqi_reports_total as f64 / f.intervals as f64,
                    trials: f.intervals,
                    seed,
                });
            }
        }
        other => {
            return Err(JsdmError::Config(format!("unknown fairness mode {other}")));
        }
    }
    Ok(rows)
}

/// Sweeps the cone parameter for the cone-based scheme over a grid,
/// returning the full surface and the per-K argmax (ties to the lowest
/// alpha).
pub fn alpha_sweep(
    spec: &ScenarioSpec,
    alpha_grid: &[f64],
    overrides: &RunOverrides,
) -> Result<(Vec<CsvRow>, Vec<(usize, f64)>)> {
    if alpha_grid.is_empty() || alpha_grid.iter().any(|&a| !(0.0 < a && a < 1.0)) {
        return Err(JsdmError::Config("alpha grid must lie in (0, 1)".into()));
    }
    let mut sweep_spec = spec.clone();
    sweep_spec.schemes = vec![SchemeConfig::RedosPbr {
        alpha: None,
        alpha_grid: Some(alpha_grid.to_vec()),
    }];
    sweep_spec.fairness = None;
    let rows = run_scenario(&sweep_spec, overrides)?;
    let mut best: Vec<(usize, f64)> = Vec::new();
    for &k in &spec.k_grid {
        let mut arg = None;
        let mut top = f64::NEG_INFINITY;
        for r in rows.iter().filter(|r| r.k == k) {
            if r.mean_sum_rate_bits > top + 1e-12 {
                top = r.mean_sum_rate_bits;
                arg = r.param_alpha;
            }
        }
        if let Some(a) = arg {
            best.push((k, a));
        }
    }
    Ok((rows, best))
}

/// One named check in the verification suite.
#[derive(Debug, Clone)]
pub struct VerifyItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Runs the analytical verification suite (cone nonemptiness and
/// disjointness, inner-product bound, effective-gain bound, extreme-value
/// tail, admissible-range arithmetic, CCDF sandwich).
pub fn verify_suite(seed: u64) -> Vec<VerifyItem> {
    let mut items = Vec::new();

    // Cone nonemptiness at the floor, with counterexamples just above it.
    {
        let mut all_pass = true;
        let mut detail = String::new();
        for &r_star in &[2usize, 3, 4, 8] {
            let floor = 1.0 / (r_star as f64).sqrt();
            let mut r = rng::stream(&[seed, 1, r_star as u64]);
            let mut empty_at_floor = 0usize;
            let mut empty_above = 0usize;
            for _ in 0..100_000 {
                let v = rng::complex_normal_vector(&mut r, r_star);
                if scheduling::candidate_set(&v, floor).is_empty() {
                    empty_at_floor += 1;
                }
                if scheduling::candidate_set(&v, floor + 0.05).is_empty() {
                    empty_above += 1;
                }
            }
            let ok = empty_at_floor == 0 && empty_above > 0;
            all_pass &= ok;
            detail.push_str(&format!(
                "r*={r_star}: empty@floor={empty_at_floor}, empty@floor+0.05={empty_above}; "
            ));
        }
        items.push(VerifyItem {
            name: "cone-floor-nonempty".into(),
            pass: all_pass,
            detail,
        });
    }

    // Cone disjointness above 1/sqrt(2).
    {
        let mut r = rng::stream(&[seed, 2]);
        let alpha = 0.72;
        let mut overlaps = 0usize;
        for _ in 0..100_000 {
            let v = rng::complex_normal_vector(&mut r, 4);
            if scheduling::candidate_set(&v, alpha).len() > 1 {
                overlaps += 1;
            }
        }
        items.push(VerifyItem {
            name: "cone-disjointness".into(),
            pass: overlaps == 0,
            detail: format!("alpha=0.72: {overlaps} multi-cone memberships in 1e5 draws"),
        });
    }

    // Inner-product bound with sharpness.
    {
        let mut all_pass = true;
        let mut detail = String::new();
        for &(alpha, r_star) in &[(0.75, 2usize), (0.9, 4), (0.96, 4)] {
            match theory::cone_pair_bound_check(alpha, r_star, 100_000, seed ^ 3) {
                Ok(rep) => {
                    let ok = rep.pass && rep.max_observed >= 0.95 * rep.bound;
                    all_pass &= ok;
                    detail.push_str(&format!(
                        "a={alpha} r*={r_star}: max={:.4}/bound={:.4}; ",
                        rep.max_observed, rep.bound
                    ));
                }
                Err(e) => {
                    all_pass = false;
                    detail.push_str(&format!("a={alpha}: {e}; "));
                }
            }
        }
        items.push(VerifyItem {
            name: "cone-pair-bound".into(),
            pass: all_pass,
            detail,
        });
    }

    // Effective-gain lower bound at r*=2 in the admissible range.
    {
        let r_star = 2usize;
        let alpha = 0.5 * (theory::alpha_bar_lower(r_star).unwrap() + 1.0);
        let factor = beamforming::gershgorin_gain_bound(alpha, r_star).unwrap();
        let mut r = rng::stream(&[seed, 4]);
        let mut worst = f64::INFINITY;
        let mut pass = true;
        for _ in 0..10_000 {
            // Two unit users in distinct cones, random norms.
            let mut g = CMat::zeros(2, 2);
            for (row, pin) in [(0usize, 0usize), (1, 1)] {
                let v = theory::sample_cone_unit_vector(&mut r, r_star, pin, alpha);
                let scale = 0.2 + 3.0 * rng::uniform_open01(&mut r);
                for c in 0..2 {
                    g[(row, c)] = v[c] * num_complex::Complex64::new(scale, 0.0);
                }
            }
            let Ok(p) = beamforming::zf_precoder(&g) else { continue };
            for i in 0..2 {
                let norm2 = g.row(i).norm_squared();
                let slack = p.gammas[i] - norm2 * factor;
                worst = worst.min(slack);
                if slack < -1e-9 {
                    pass = false;
                }
            }
        }
        items.push(VerifyItem {
            name: "effective-gain-bound".into(),
            pass,
            detail: format!("alpha={alpha:.4}, factor={factor:.4}, worst slack={worst:.3e}"),
        });
    }

    // Extreme-value tail.
    {
        let mut pass = true;
        let mut detail = String::new();
        for &k in &[100usize, 1000, 10_000] {
            let spec = theory::TailBoundSpec::new(vec![1.0], 1.0, 0.0, k).unwrap();
            let rep = theory::evt_tail_check(&spec, 10_000, seed ^ 5);
            let kf = k as f64;
            let closed = 1.0 - (1.0 - kf.ln() / kf).powi(k as i32);
            let sigma = (closed * (1.0 - closed) / rep.trials as f64).sqrt();
            let ok = rep.conclusive && (rep.exceed_freq - closed).abs() <= 3.0 * sigma + 1e-9;
            pass &= ok;
            detail.push_str(&format!("K={k}: {:.4} vs {:.4}; ", rep.exceed_freq, closed));
        }
        let gen = theory::TailBoundSpec::new(vec![1.0, 0.7], 0.5, 0.5, 10_000).unwrap();
        let rep = theory::evt_tail_check(&gen, 10_000, seed ^ 6);
        let ok = rep.conclusive && rep.exceed_freq >= 0.995;
        pass &= ok;
        detail.push_str(&format!("gen K=1e4: {:.4}", rep.exceed_freq));
        items.push(VerifyItem {
            name: "evt-tail".into(),
            pass,
            detail,
        });
    }

    // Admissible-range arithmetic.
    {
        let pass = (2..=16).all(|r| {
            theory::alpha_bar_lower(r)
                .map(|lo| (std::f64::consts::FRAC_1_SQRT_2 - 1e-15..1.0).contains(&lo))
                .unwrap_or(false)
        });
        items.push(VerifyItem {
            name: "admissible-range".into(),
            pass,
            detail: "lower endpoint in [1/sqrt(2), 1) for r* in 2..=16".into(),
        });
    }

    // Quasi-SINR CCDF sandwich on a two-group setup.
    {
        let g1 = GroupProfile::from_covariance(
            0,
            &crate::channel::CovarianceSpec::DftColumns {
                m: 4,
                start: 0,
                end: 3,
                eigenvalues: vec![1.0, 0.7, 0.49],
            },
            2,
            20,
        )
        .unwrap();
        let g2 = GroupProfile::from_covariance(
            1,
            &crate::channel::CovarianceSpec::DftColumns {
                m: 4,
                start: 2,
                end: 4,
                eigenvalues: vec![1.0, 0.7],
            },
            2,
            20,
        )
        .unwrap();
        match theory::ccdf_sandwich_check(&[g1, g2], 0, 0.75, 3.0, 500, seed ^ 7) {
            Ok(rep) => items.push(VerifyItem {
                name: "ccdf-sandwich".into(),
                pass: rep.pass && rep.conditional_pass,
                detail: format!("eps={:.4}, zeta={:.4}", rep.eps, rep.zeta_hat),
            }),
            Err(e) => items.push(VerifyItem {
                name: "ccdf-sandwich".into(),
                pass: false,
                detail: format!("{e}"),
            }),
        }
    }

    items
}
