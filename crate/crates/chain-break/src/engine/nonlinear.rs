//! Euler–Maruyama integration of the nonlinear chain.
//!
//! Interior particles move by
//!
//! ```text
//! x_i += (U'(gap_{i+1}) - U'(gap_i)) dt + sigma sqrt(dt) xi_i
//! ```
//!
//! with the boundary particles re-pinned every step. The run stops at the
//! first break. A gap that leaves the interval `[.., b_break + margin_r]`
//! on which the potential bounds were certified aborts the run instead of
//! extrapolating the potential.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{BreakEvent, ChainParams, ValidatedPotential};

use super::break_detect::first_break;
use super::Schedule;

/// Position snapshot of the full chain (pinned particles included).
#[derive(Debug, Clone)]
pub struct SiteObservation {
    pub t: f64,
    pub positions: Vec<f64>,
}

/// Run one nonlinear path up to its first break or the end of the schedule.
pub fn run_nonlinear<R: Rng>(
    params: &ChainParams,
    potential: &ValidatedPotential,
    schedule: &Schedule,
    rng: &mut R,
) -> Result<BreakEvent> {
    run_observed_impl(params, potential, schedule, rng, &[], &mut |_| {})
}

/// Same as [`run_nonlinear`], also recording positions at the grid
/// boundaries closest to `probe_times`.
pub fn run_nonlinear_observed<R: Rng>(
    params: &ChainParams,
    potential: &ValidatedPotential,
    schedule: &Schedule,
    rng: &mut R,
    probe_times: &[f64],
) -> Result<(BreakEvent, Vec<SiteObservation>)> {
    let mut observations = Vec::new();
    let event = run_observed_impl(params, potential, schedule, rng, probe_times, &mut |obs| {
        observations.push(obs)
    })?;
    Ok((event, observations))
}

fn run_observed_impl<R: Rng>(
    params: &ChainParams,
    potential: &ValidatedPotential,
    schedule: &Schedule,
    rng: &mut R,
    probe_times: &[f64],
    sink: &mut dyn FnMut(SiteObservation),
) -> Result<BreakEvent> {
    let d = params.d;
    let sigma = params.sigma;
    let eps = params.eps;
    let b_break = params.b_break;
    let escape_at = b_break + potential.bounds.margin_r;
    let t_star = params.t_star();

    let mut wanted: Vec<usize> = probe_times
        .iter()
        .map(|&t| schedule.nearest_boundary(t))
        .collect();
    wanted.sort_unstable();
    wanted.dedup();

    // Interior positions x_1 .. x_{d-1}; boundaries are implicit.
    let mut x: Vec<f64> = (1..d).map(|i| i as f64).collect();
    let mut gaps_prev = vec![1.0f64; d];
    let mut gaps_next = vec![0.0f64; d];
    let mut force = vec![0.0f64; d];

    let snapshot = |t: f64, x: &[f64]| {
        let mut pos = Vec::with_capacity(d + 1);
        pos.push(0.0);
        pos.extend_from_slice(x);
        pos.push(d as f64 + eps * t);
        SiteObservation { t, positions: pos }
    };
    if wanted.first() == Some(&0) {
        sink(snapshot(0.0, &x));
    }

    for (step, (t0, t1)) in schedule.steps().enumerate() {
        let dt = t1 - t0;
        let noise_scale = sigma * dt.sqrt();
        for i in 0..d {
            force[i] = potential.potential.d1(gaps_prev[i]);
        }
        for (i, xi) in x.iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            *xi += (force[i + 1] - force[i]) * dt + noise_scale * noise;
        }
        let right_end = d as f64 + eps * t1;
        gaps_next[0] = x[0];
        for i in 1..d - 1 {
            gaps_next[i] = x[i] - x[i - 1];
        }
        gaps_next[d - 1] = right_end - x[d - 2];

        if let Some((tau, link)) = first_break(&gaps_prev, &gaps_next, t0, t1, b_break) {
            assert!(
                tau <= t_star * (1.0 + 1e-12),
                "break at {tau} exceeds t_star {t_star}"
            );
            return Ok(BreakEvent::broke(tau, link));
        }
        for (i, &g) in gaps_next.iter().enumerate() {
            if g > escape_at {
                return Err(Error::DomainEscape { t: t1, link: i + 1, gap: g });
            }
        }
        if wanted.binary_search(&(step + 1)).is_ok() {
            sink(snapshot(t1, &x));
        }
        std::mem::swap(&mut gaps_prev, &mut gaps_next);
    }
    Ok(BreakEvent::censored_at(schedule.end()))
}
