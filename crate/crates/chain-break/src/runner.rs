//! Parallel Monte Carlo orchestration: run one experiment, sweep a
//! parameter axis, and classify the pulling regime.
//!
//! Paths are embarrassingly parallel; each derives its own random stream
//! from `(master_seed, path_index)`, so the aggregate is byte-identical for
//! any worker count or scheduling order.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{suffix_path, ExperimentConfig, SweepAxis, SystemKind};
use crate::engine::{
    effective_horizon, run_coupled, run_nonlinear, LinearPlan, Schedule, SimGrid,
};
use crate::error::{Error, Result};
use crate::model::{
    gumbel_cdf, normalize_break_time, position_limit_probs, BreakEvent, ChainParams,
    LimitLawParams, Potential, ValidatedPotential,
};
use crate::report::{
    CouplingSummary, EcdfPoint, EscapeRow, ExperimentReport, PathRow, RegimeDiagnostics,
    ReportSummary,
};
use crate::stats::{ks_distance, position_chisq, seed_stream, Sample};

/// Regime classification of an `(eps, sigma)` pair.
///
/// The three vanishing quantities correspond to the hypotheses under which
/// the limit law is known for the nonlinear chain (`sigma^2 |ln eps|^3`),
/// the time-varying linear chain (`sigma^2 |ln eps|^{3/2}`), and the
/// constant-coefficient linear chain (`sigma^2 |ln eps|`). Classification
/// is advisory; values below 0.1 are flagged comfortably small.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub ratio: f64,
    pub vanish3: f64,
    pub vanish15: f64,
    pub vanish1: f64,
    pub intermediate: bool,
    pub classification: Vec<String>,
}

/// Classify the pulling regime. Requires `eps` in `(0, 1)` and `sigma > 0`.
pub fn check_regime(params: &ChainParams) -> Result<RegimeReport> {
    if !(params.eps > 0.0 && params.eps < 1.0) {
        return Err(Error::Domain(format!(
            "regime check needs eps in (0, 1), got {}",
            params.eps
        )));
    }
    if !(params.sigma > 0.0) {
        return Err(Error::Domain(format!(
            "regime check needs sigma > 0, got {}",
            params.sigma
        )));
    }
    let ratio = params.sigma / params.eps;
    let log_eps = params.eps.ln().abs();
    let s2 = params.sigma * params.sigma;
    let vanish3 = s2 * log_eps.powi(3);
    let vanish15 = s2 * log_eps.powf(1.5);
    let vanish1 = s2 * log_eps;
    let intermediate = ratio > 1.0;
    let mut classification = Vec::new();
    if !intermediate {
        classification.push("outside all regimes: sigma/eps <= 1".to_string());
    } else {
        let describe = |value: f64| {
            if value < 0.1 {
                "comfortably small"
            } else if value < 1.0 {
                "marginal"
            } else {
                "large"
            }
        };
        classification.push(format!(
            "nonlinear chain law (needs sigma^2 |ln eps|^3 -> 0): {} ({:.4})",
            describe(vanish3),
            vanish3
        ));
        classification.push(format!(
            "time-varying linear law (needs sigma^2 |ln eps|^1.5 -> 0): {} ({:.4})",
            describe(vanish15),
            vanish15
        ));
        classification.push(format!(
            "constant linear law (needs sigma^2 |ln eps| -> 0): {} ({:.4})",
            describe(vanish1),
            vanish1
        ));
    }
    Ok(RegimeReport { ratio, vanish3, vanish15, vanish1, intermediate, classification })
}

fn lenient_regime(params: &ChainParams) -> RegimeDiagnostics {
    match check_regime(params) {
        Ok(r) => RegimeDiagnostics {
            ratio: Some(r.ratio),
            vanish3: Some(r.vanish3),
            vanish15: Some(r.vanish15),
            vanish1: Some(r.vanish1),
        },
        Err(_) => RegimeDiagnostics::default(),
    }
}

enum PathOutcome {
    Done { event: BreakEvent, link_hits: Option<Vec<Option<f64>>> },
    DoneCoupled { record: crate::engine::CoupledRecord },
    Escaped { t: f64, link: usize, gap: f64 },
}

/// Run one experiment: `n_paths` independent simulations, aggregation, and
/// optional CSV/JSON output.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let params = config.chain()?;
    let potential = Potential::parse(&config.potential)?;
    let vp = Arc::new(ValidatedPotential::new(
        potential,
        params.b_break,
        &config.margin_candidates,
    )?);
    let u_curv = match config.u_curv {
        Some(u) => u,
        None => vp.potential.d2(params.b_break),
    };
    if !(u_curv > 0.0) {
        return Err(Error::Config(format!(
            "resolved stiffness U''(b_break) = {u_curv} is not positive"
        )));
    }
    let grid = config.grid.resolve(&params, vp.bounds.kappa_max)?;
    let horizon = effective_horizon(&params, config.horizon)
        .map_err(|e| Error::Config(e.to_string()))?;

    enum Planned {
        Linear(Arc<LinearPlan>),
        Nonlinear(Arc<Schedule>),
        Coupled(Arc<Schedule>),
    }
    let planned = match config.system {
        SystemKind::LinearConstant => Planned::Linear(Arc::new(LinearPlan::constant(
            &params,
            u_curv,
            &grid,
            Some(horizon),
        )?)),
        SystemKind::LinearTimevarying => Planned::Linear(Arc::new(LinearPlan::time_varying(
            &params,
            &vp,
            &grid,
            Some(horizon),
        )?)),
        SystemKind::Nonlinear => {
            Planned::Nonlinear(Arc::new(Schedule::build(&grid, horizon)?))
        }
        SystemKind::Coupled => Planned::Coupled(Arc::new(Schedule::build(&grid, horizon)?)),
    };

    let run_path = |index: usize| -> PathOutcome {
        let mut rng = seed_stream(config.master_seed, index as u64);
        match &planned {
            Planned::Linear(plan) => {
                let rec = plan.run(&mut rng);
                PathOutcome::Done { event: rec.first, link_hits: Some(rec.link_hits) }
            }
            Planned::Nonlinear(schedule) => {
                match run_nonlinear(&params, &vp, schedule, &mut rng) {
                    Ok(event) => PathOutcome::Done { event, link_hits: None },
                    Err(Error::DomainEscape { t, link, gap }) => {
                        PathOutcome::Escaped { t, link, gap }
                    }
                    Err(e) => panic!("unexpected simulation error: {e}"),
                }
            }
            Planned::Coupled(schedule) => {
                match run_coupled(&params, &vp, schedule, &mut rng) {
                    Ok(record) => PathOutcome::DoneCoupled { record },
                    Err(Error::DomainEscape { t, link, gap }) => {
                        PathOutcome::Escaped { t, link, gap }
                    }
                    Err(e) => panic!("unexpected simulation error: {e}"),
                }
            }
        }
    };

    let outcomes: Vec<PathOutcome> = if config.workers == 0 {
        (0..config.n_paths).into_par_iter().map(run_path).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(|| (0..config.n_paths).into_par_iter().map(run_path).collect())
    };

    let report = aggregate(config, &params, &vp, u_curv, horizon, outcomes)?;
    if let Some(path) = &config.csv_out {
        report.write_csv(path)?;
    }
    if let Some(path) = &config.json_out {
        report.write_json(path)?;
    }
    Ok(report)
}

fn aggregate(
    config: &ExperimentConfig,
    params: &ChainParams,
    vp: &ValidatedPotential,
    u_curv: f64,
    horizon: f64,
    outcomes: Vec<PathOutcome>,
) -> Result<ExperimentReport> {
    let d = params.d;
    let n_paths = outcomes.len();
    let normalizable = params.eps > 0.0 && params.sigma > params.eps;
    let law = LimitLawParams::new(d, u_curv)?;

    let mut rows = Vec::with_capacity(n_paths);
    let mut escaped = Vec::new();
    let mut censored = 0usize;
    let mut position_counts = vec![0u64; d];
    let mut normalized = Vec::new();
    let mut taus = Vec::new();
    let mut link_samples: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut coupling_s = Vec::new();
    let mut coupling_m = Vec::new();

    for (index, outcome) in outcomes.into_iter().enumerate() {
        let (event, link_hits) = match outcome {
            PathOutcome::Done { event, link_hits } => (event, link_hits),
            PathOutcome::DoneCoupled { record } => {
                coupling_s.push(record.s_star);
                coupling_m.push(record.m_star);
                (record.break_x, None)
            }
            PathOutcome::Escaped { t, link, gap } => {
                escaped.push(EscapeRow { path_index: index, t, link, gap });
                censored += 1;
                rows.push(PathRow {
                    path_index: index,
                    tau: t,
                    link: 0,
                    censored: true,
                    normalized_tau: None,
                });
                continue;
            }
        };
        let normalized_tau = if !event.censored && normalizable {
            Some(normalize_break_time(event.tau, params, u_curv)?)
        } else {
            None
        };
        if event.censored {
            censored += 1;
        } else {
            position_counts[event.link - 1] += 1;
            taus.push(event.tau);
            if let Some(v) = normalized_tau {
                normalized.push(v);
            }
        }
        if let Some(hits) = link_hits {
            if normalizable {
                for (link_idx, hit) in hits.iter().enumerate() {
                    if let Some(tau) = hit {
                        link_samples[link_idx]
                            .push(normalize_break_time(*tau, params, u_curv)?);
                    }
                }
            }
        }
        rows.push(PathRow {
            path_index: index,
            tau: event.tau,
            link: event.link,
            censored: event.censored,
            normalized_tau,
        });
    }

    if escaped.len() * 100 > n_paths {
        return Err(Error::Domain(format!(
            "{} of {} paths escaped the certified potential domain",
            escaped.len(),
            n_paths
        )));
    }

    let (gumbel_a_min, gumbel_b) = if normalizable {
        let (a, b) = law.gumbel_min();
        (Some(a), Some(b))
    } else {
        (None, None)
    };

    let ks_min = if let (Some(a), Some(b)) = (gumbel_a_min, gumbel_b) {
        match Sample::new(normalized.clone()) {
            Ok(sample) => Some(ks_distance(&sample, |r| {
                gumbel_cdf(r, a, b).expect("positive Gumbel parameters")
            })),
            Err(_) => None,
        }
    } else {
        None
    };

    let ks_links: Vec<Option<f64>> = (0..d)
        .map(|link_idx| {
            if !normalizable || link_samples[link_idx].is_empty() {
                return None;
            }
            let (a, b) = law.gumbel_link(link_idx + 1);
            Sample::new(link_samples[link_idx].clone()).ok().map(|sample| {
                ks_distance(&sample, |r| gumbel_cdf(r, a, b).expect("positive parameters"))
            })
        })
        .collect();

    let breaks_total: u64 = position_counts.iter().sum();
    let position_probs_model = position_limit_probs(d)?;
    let position_freqs: Vec<f64> = position_counts
        .iter()
        .map(|&c| if breaks_total > 0 { c as f64 / breaks_total as f64 } else { 0.0 })
        .collect();
    let position_chisq = if breaks_total > 0 {
        Some(position_chisq(&position_counts, &position_probs_model)?)
    } else {
        None
    };

    let ecdf = match (Sample::new(normalized.clone()), gumbel_a_min, gumbel_b) {
        (Ok(sample), Some(a), Some(b)) => ecdf_grid(&sample, a, b),
        _ => Vec::new(),
    };

    let coupling = if coupling_s.is_empty() {
        None
    } else {
        let n = coupling_s.len() as f64;
        Some(CouplingSummary {
            s_star_mean: coupling_s.iter().sum::<f64>() / n,
            s_star_max: coupling_s.iter().fold(0.0f64, |m, &v| m.max(v)),
            m_star_mean: coupling_m.iter().sum::<f64>() / n,
            m_star_max: coupling_m.iter().fold(0.0f64, |m, &v| m.max(v)),
            frac_s_star_ge_0_1: coupling_s.iter().filter(|&&v| v >= 0.1).count() as f64 / n,
        })
    };

    let t_star = params.t_star();
    let full_horizon = t_star.is_finite() && horizon >= t_star;
    let censored_anomaly = params.eps > 0.0 && full_horizon && censored > escaped.len();

    let mean_tau = if taus.is_empty() {
        None
    } else {
        Some(taus.iter().sum::<f64>() / taus.len() as f64)
    };

    let summary = ReportSummary {
        system: config.system.as_str().to_string(),
        potential: vp.potential.name(),
        d,
        eps: params.eps,
        sigma: params.sigma,
        b_break: params.b_break,
        u_curv,
        t_star: if t_star.is_finite() { Some(t_star) } else { None },
        horizon,
        n_paths,
        master_seed: config.master_seed,
        censored,
        censored_anomaly,
        escaped,
        gumbel_a_min,
        gumbel_b,
        ks_min,
        ks_links,
        position_counts,
        position_freqs,
        position_probs_model,
        position_chisq,
        mean_tau,
        regime: lenient_regime(params),
        ecdf,
        coupling,
    };
    Ok(ExperimentReport { rows, summary })
}

fn ecdf_grid(sample: &Sample, a: f64, b: f64) -> Vec<EcdfPoint> {
    let values = sample.values();
    let n = values.len();
    let lo = values[0];
    let hi = values[n - 1];
    let points = 101.min(n.max(2));
    (0..points)
        .map(|k| {
            let r = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            let below = values.partition_point(|&v| v <= r);
            EcdfPoint {
                r,
                empirical: below as f64 / n as f64,
                model: gumbel_cdf(r, a, b).expect("positive parameters"),
            }
        })
        .collect()
}

/// Acceptance thresholds of the distributional checks. The limit laws are
/// asymptotic and convergence is logarithmic, so these are deliberately
/// loose; they are pinned here so the CLI and the acceptance suite agree.
pub mod thresholds {
    /// KS of the normalised earliest break vs its Gumbel law, exact-mode
    /// linear systems.
    pub const LAW_KS_MIN_LINEAR: f64 = 0.15;
    /// Per-link KS for the linear systems.
    pub const LAW_KS_LINK_LINEAR: f64 = 0.20;
    /// Break-position frequency tolerance for linear systems.
    pub const LAW_POS_TOL_LINEAR: f64 = 0.05;
    /// KS of the normalised earliest break for the nonlinear chain.
    pub const LAW_KS_MIN_NONLINEAR: f64 = 0.20;
    /// Break-position frequency tolerance for the nonlinear chain.
    pub const LAW_POS_TOL_NONLINEAR: f64 = 0.07;
    /// Two-sample KS budget for the exact-in-law scaling check (1%
    /// critical value is about 0.0326 at n = 5000; the rest budgets
    /// discretisation).
    pub const SCALING_KS_MAX: f64 = 0.04;
}

/// One named pass/fail check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.to_string(), value, threshold, pass: value <= threshold }
    }
}

/// Outcome of the break-law verification recipe.
#[derive(Debug)]
pub struct LawOutcome {
    pub report: ExperimentReport,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Run an experiment and test the normalised break times and positions
/// against the limiting law, with thresholds chosen by system kind.
pub fn verify_law(config: &ExperimentConfig) -> Result<LawOutcome> {
    let report = run_experiment(config)?;
    let (ks_min_tol, ks_link_tol, pos_tol) = match config.system {
        SystemKind::Nonlinear | SystemKind::Coupled => (
            thresholds::LAW_KS_MIN_NONLINEAR,
            None,
            thresholds::LAW_POS_TOL_NONLINEAR,
        ),
        SystemKind::LinearConstant | SystemKind::LinearTimevarying => (
            thresholds::LAW_KS_MIN_LINEAR,
            Some(thresholds::LAW_KS_LINK_LINEAR),
            thresholds::LAW_POS_TOL_LINEAR,
        ),
    };
    let mut checks = Vec::new();
    let ks_min = report.summary.ks_min.ok_or_else(|| {
        Error::Regime("no normalised sample (needs sigma > eps > 0 and breaks)".into())
    })?;
    checks.push(Check::at_most("ks(min break time vs Gumbel)", ks_min, ks_min_tol));
    if let Some(link_tol) = ks_link_tol {
        let worst = report
            .summary
            .ks_links
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| m.max(v));
        checks.push(Check::at_most("worst per-link ks", worst, link_tol));
    }
    let worst_pos = report
        .summary
        .position_freqs
        .iter()
        .zip(&report.summary.position_probs_model)
        .map(|(f, p)| (f - p).abs())
        .fold(0.0f64, f64::max);
    checks.push(Check::at_most("worst position frequency deviation", worst_pos, pos_tol));
    checks.push(Check::at_most(
        "censored paths",
        report.summary.censored as f64,
        0.0,
    ));
    let pass = checks.iter().all(|c| c.pass);
    Ok(LawOutcome { report, checks, pass })
}

/// Outcome of the equality-in-law scaling check.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingOutcome {
    pub eps_std: f64,
    pub sigma_std: f64,
    pub time_factor: f64,
    pub n_per_side: usize,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Verify that the break times of the linear chain at `(u, b_break, eps,
/// sigma)` match, in law, `1/u` times those of the standard problem
/// (`u = 1`, `b = 2`) at the reduced parameters. Both sides use grids
/// scaled consistently (`dt_std = u * dt`).
pub fn verify_scaling(
    d: usize,
    u: f64,
    b_break: f64,
    eps: f64,
    sigma: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<ScalingOutcome> {
    let reduction = crate::scaling::reduce_to_standard(u, b_break, eps, sigma)?;
    let params = ChainParams::new(d, eps, sigma, b_break)?;
    let params_std = ChainParams::new(d, reduction.eps_std, reduction.sigma_std, 2.0)?;

    let grid = SimGrid::auto(&params, u);
    let grid_std = SimGrid::new(grid.coarse_dt * u, grid.fine_dt * u, grid.window * u)?;

    let plan = Arc::new(LinearPlan::constant(&params, u, &grid, None)?);
    let plan_std = Arc::new(LinearPlan::constant(&params_std, 1.0, &grid_std, None)?);

    let taus = |plan: Arc<LinearPlan>, seed: u64| -> Vec<f64> {
        (0..n_paths)
            .into_par_iter()
            .map(|i| plan.run(&mut seed_stream(seed, i as u64)).first)
            .filter(|e| !e.censored)
            .map(|e| e.tau)
            .collect()
    };
    let side_a = taus(plan, master_seed);
    let side_b: Vec<f64> = taus(plan_std, master_seed.wrapping_add(1))
        .into_iter()
        .map(|t| t * reduction.time_factor)
        .collect();

    let ks = crate::stats::ks_distance_two_sample(
        &Sample::new(side_a)?,
        &Sample::new(side_b)?,
    );
    Ok(ScalingOutcome {
        eps_std: reduction.eps_std,
        sigma_std: reduction.sigma_std,
        time_factor: reduction.time_factor,
        n_per_side: n_paths,
        ks,
        threshold: thresholds::SCALING_KS_MAX,
        pass: ks <= thresholds::SCALING_KS_MAX,
    })
}

/// Run one experiment per axis value, sharing the master seed; outputs are
/// suffixed with the axis coordinate.
pub fn sweep(
    base: &ExperimentConfig,
    axis: &str,
    values: &[f64],
) -> Result<Vec<ExperimentReport>> {
    let axis = SweepAxis::parse(axis)?;
    if values.is_empty() {
        return Err(Error::Parameter("sweep needs at least one value".into()));
    }
    let mut reports = Vec::with_capacity(values.len());
    for &value in values {
        let mut config = base.clone();
        axis.apply(&mut config, value)?;
        if let Some(path) = &base.csv_out {
            config.csv_out = Some(suffix_path(path, axis, value));
        }
        if let Some(path) = &base.json_out {
            config.json_out = Some(suffix_path(path, axis, value));
        }
        reports.push(run_experiment(&config)?);
    }
    Ok(reports)
}
