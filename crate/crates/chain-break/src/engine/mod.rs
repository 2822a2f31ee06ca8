//! Path simulation for the three chain systems and their couplings.
//!
//! Three dynamics share the same layout (particle 0 pinned at zero,
//! particle `d` pulled at speed `eps`, `d - 1` free interior particles):
//!
//! * the nonlinear chain, integrated by Euler–Maruyama;
//! * the constant-coefficient linear chain, sampled exactly per eigen-mode;
//! * the time-varying linear chain (stiffness `phi(t) = U''(q_t)`), also
//!   sampled exactly per eigen-mode with quadrature step moments.
//!
//! Exact mode sampling keeps the marginal law unbiased on arbitrarily coarse
//! grids, which is what makes horizons of order `1/eps` affordable; only
//! break *detection* sees the grid, so the schedule refines near the forced
//! break time where the action is.

mod break_detect;
mod coupled;
mod linear;
mod nonlinear;

pub use break_detect::{first_break, LinkTracker};
pub use coupled::{run_coupled, CoupledRecord};
pub use linear::{LinearObservation, LinearPathRecord, LinearPlan};
pub use nonlinear::{run_nonlinear, run_nonlinear_observed, SiteObservation};

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{BreakEvent, ChainParams, ValidatedPotential};

/// Discretisation policy: coarse steps up to the terminal window, fine
/// steps inside it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimGrid {
    /// Step used on `[0, end - window]`.
    pub coarse_dt: f64,
    /// Step used on the terminal window `[end - window, end]`.
    pub fine_dt: f64,
    /// Width of the terminal window (clamped to the horizon when built).
    pub window: f64,
}

impl SimGrid {
    pub fn new(coarse_dt: f64, fine_dt: f64, window: f64) -> Result<Self> {
        if !(coarse_dt > 0.0) || !(fine_dt > 0.0) {
            return Err(Error::Parameter(format!(
                "grid steps must be positive, got coarse = {coarse_dt}, fine = {fine_dt}"
            )));
        }
        if fine_dt > coarse_dt {
            return Err(Error::Parameter(format!(
                "fine_dt ({fine_dt}) must not exceed coarse_dt ({coarse_dt})"
            )));
        }
        if !(window >= 0.0) {
            return Err(Error::Parameter(format!("window must be >= 0, got {window}")));
        }
        Ok(SimGrid { coarse_dt, fine_dt, window })
    }

    /// Default policy: `coarse_dt = min(0.5, 0.1 / kappa_max)`, a twenty
    /// times finer terminal step, and a window of three times the expected
    /// spread `gamma (sigma/eps) sqrt(ln(sigma/eps))` of the break time.
    pub fn auto(params: &ChainParams, kappa_max: f64) -> SimGrid {
        let coarse = (0.1 / kappa_max).min(0.5);
        let fine = coarse / 20.0;
        let window = if params.sigma > params.eps && params.eps > 0.0 {
            let ratio = params.sigma / params.eps;
            let gamma = (params.d as f64 * (params.d as f64 - 1.0)).sqrt();
            3.0 * gamma * ratio * ratio.ln().sqrt()
        } else {
            0.0
        };
        SimGrid { coarse_dt: coarse, fine_dt: fine, window }
    }
}

/// A concrete monotone time grid from 0 to the simulation horizon.
///
/// Both regions are uniformly subdivided with steps no larger than the
/// requested ones, so the region boundaries and the horizon are hit
/// exactly.
#[derive(Debug, Clone)]
pub struct Schedule {
    times: Vec<f64>,
}

impl Schedule {
    pub fn build(grid: &SimGrid, end: f64) -> Result<Self> {
        if !end.is_finite() || !(end > 0.0) {
            return Err(Error::Parameter(format!(
                "simulation horizon must be finite and positive, got {end}"
            )));
        }
        let window = grid.window.min(end);
        let switch = end - window;
        let mut times = Vec::new();
        times.push(0.0);
        if switch > 0.0 {
            let n = (switch / grid.coarse_dt).ceil().max(1.0) as usize;
            for k in 1..=n {
                times.push(switch * k as f64 / n as f64);
            }
        }
        if window > 0.0 {
            let m = (window / grid.fine_dt).ceil().max(1.0) as usize;
            for k in 1..=m {
                times.push(switch + window * k as f64 / m as f64);
            }
        }
        debug_assert!(times.windows(2).all(|w| w[1] > w[0]));
        Ok(Schedule { times })
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.times.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("schedule non-empty")
    }

    /// Grid boundaries including 0 and the horizon.
    pub fn boundaries(&self) -> &[f64] {
        &self.times
    }

    /// Iterate over steps as `(t0, t1)` pairs.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[1]))
    }

    /// Index of the step whose right boundary is closest to `t`.
    pub fn nearest_boundary(&self, t: f64) -> usize {
        match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.times.len() => self.times.len() - 1,
            Err(i) => {
                if (self.times[i] - t).abs() < (t - self.times[i - 1]).abs() {
                    i
                } else {
                    i - 1
                }
            }
        }
    }
}

/// Resolve the effective simulation horizon: `min(t_star, horizon)`, which
/// must be finite (a pull-free chain needs an explicit horizon).
pub fn effective_horizon(params: &ChainParams, horizon: Option<f64>) -> Result<f64> {
    let end = match horizon {
        Some(h) => h.min(params.t_star()),
        None => params.t_star(),
    };
    if !end.is_finite() || !(end > 0.0) {
        return Err(Error::Parameter(
            "simulation horizon is not finite; with eps = 0 an explicit horizon is required"
                .into(),
        ));
    }
    Ok(end)
}

/// Euler–Maruyama simulation of the nonlinear chain up to the first break.
pub fn simulate_nonlinear<R: Rng>(
    params: &ChainParams,
    potential: &ValidatedPotential,
    grid: &SimGrid,
    horizon: Option<f64>,
    rng: &mut R,
) -> Result<BreakEvent> {
    let schedule = Schedule::build(grid, effective_horizon(params, horizon)?)?;
    run_nonlinear(params, potential, &schedule, rng)
}

/// Exact-transition simulation of the constant-coefficient linear chain.
pub fn simulate_linear_constant<R: Rng>(
    params: &ChainParams,
    u_curv: f64,
    grid: &SimGrid,
    horizon: Option<f64>,
    rng: &mut R,
) -> Result<BreakEvent> {
    let plan = LinearPlan::constant(params, u_curv, grid, horizon)?;
    Ok(plan.run(rng).first)
}

/// Exact-transition simulation of the time-varying linear chain.
pub fn simulate_linear_timevarying<R: Rng>(
    params: &ChainParams,
    potential: &ValidatedPotential,
    grid: &SimGrid,
    horizon: Option<f64>,
    rng: &mut R,
) -> Result<BreakEvent> {
    let plan = LinearPlan::time_varying(params, potential, grid, horizon)?;
    Ok(plan.run(rng).first)
}

/// Same-noise simulation of the nonlinear and time-varying linear chains,
/// returning the running suprema that control the linearisation error.
pub fn simulate_coupled<R: Rng>(
    params: &ChainParams,
    potential: &ValidatedPotential,
    grid: &SimGrid,
    horizon: Option<f64>,
    rng: &mut R,
) -> Result<CoupledRecord> {
    let schedule = Schedule::build(grid, effective_horizon(params, horizon)?)?;
    run_coupled(params, potential, &schedule, rng)
}

#[cfg(test)]
mod tests;
