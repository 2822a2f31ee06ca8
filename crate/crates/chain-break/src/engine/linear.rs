//! Exact per-mode sampling of the two linear chains.
//!
//! In the eigenbasis of the coupling matrix the interior of the linear
//! chain decouples into `d - 1` scalar modes
//!
//! ```text
//! dz_j = lambda_j phi(t) z_j dt + sigma dB_j,
//! ```
//!
//! whose transition over a step `[t0, t1]` is Gaussian with
//!
//! ```text
//! decay    = exp(lambda_j (Phi(t1) - Phi(t0)))
//! variance = sigma^2 ∫_{t0}^{t1} exp(2 lambda_j (Phi(t1) - Phi(s))) ds.
//! ```
//!
//! Sites are reconstructed from the modes through
//! `Z_t^i = i q_t + eps g_t^i + (Q^T z)_i`, where the drift profile `g`
//! satisfies the same decay recursion with inhomogeneity `(Q nu)_j`, so the
//! whole step is three fused multiply-adds per mode. All step moments are
//! precomputed once per grid and shared by every path.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{BreakEvent, ChainParams, ValidatedPotential};
use crate::quad;
use crate::spectral::{eigendecompose, phi_between, q_nu, Spectrum};

use super::break_detect::LinkTracker;
use super::{effective_horizon, Schedule, SimGrid};

/// Outcome of one linear path: the earliest break plus every link's own
/// first hitting time (`None` where the horizon cut it off).
#[derive(Debug, Clone)]
pub struct LinearPathRecord {
    pub first: BreakEvent,
    pub link_hits: Vec<Option<f64>>,
}

/// State snapshot taken while a path runs.
#[derive(Debug, Clone)]
pub struct LinearObservation {
    pub t: f64,
    /// Mode coordinates `z_j`.
    pub modes: Vec<f64>,
    /// Full position vector including the two pinned particles.
    pub positions: Vec<f64>,
}

enum Rate<'a> {
    Constant(f64),
    TimeVarying(&'a ValidatedPotential),
}

/// Precomputed per-step transition moments for one grid, shared by all
/// paths of an experiment.
#[derive(Debug, Clone)]
pub struct LinearPlan {
    pub params: ChainParams,
    pub schedule: Schedule,
    pub spectrum: Spectrum,
    n_modes: usize,
    /// Per step and mode: state decay factor.
    decay: Vec<f64>,
    /// Per step and mode: standard deviation of the Gaussian increment.
    noise_sd: Vec<f64>,
    /// Per step and mode: increment of the drift-profile recursion.
    gstep: Vec<f64>,
    /// Gap reconstruction rows: `diff[(i-1) m + j] = Q[j][i] - Q[j][i-1]`
    /// with pinned boundary columns treated as zero.
    diff: Vec<f64>,
}

impl LinearPlan {
    /// Plan for the constant-coefficient chain with stiffness `u_curv > 0`.
    pub fn constant(
        params: &ChainParams,
        u_curv: f64,
        grid: &SimGrid,
        horizon: Option<f64>,
    ) -> Result<Self> {
        if !(u_curv > 0.0) || !u_curv.is_finite() {
            return Err(Error::Parameter(format!(
                "stiffness must be finite and > 0, got {u_curv}"
            )));
        }
        Self::build(params, grid, horizon, Rate::Constant(u_curv))
    }

    /// Plan for the time-varying chain with stiffness `phi(t) = U''(q_t)`.
    pub fn time_varying(
        params: &ChainParams,
        potential: &ValidatedPotential,
        grid: &SimGrid,
        horizon: Option<f64>,
    ) -> Result<Self> {
        Self::build(params, grid, horizon, Rate::TimeVarying(potential))
    }

    fn build(params: &ChainParams, grid: &SimGrid, horizon: Option<f64>, rate: Rate) -> Result<Self> {
        let end = effective_horizon(params, horizon)?;
        let schedule = Schedule::build(grid, end)?;
        let spectrum = eigendecompose(params.d)?;
        let m = spectrum.dim;
        let qnu = q_nu(&spectrum, params.d);
        let n_steps = schedule.len();
        let sigma2 = params.sigma * params.sigma;

        let mut decay = Vec::with_capacity(n_steps * m);
        let mut noise_sd = Vec::with_capacity(n_steps * m);
        let mut gstep = Vec::with_capacity(n_steps * m);

        for (t0, t1) in schedule.steps() {
            match &rate {
                Rate::Constant(u) => {
                    let dt = t1 - t0;
                    for j in 0..m {
                        let r = -spectrum.lambdas[j] * u;
                        decay.push((-r * dt).exp());
                        noise_sd.push((sigma2 * (1.0 - (-2.0 * r * dt).exp()) / (2.0 * r)).sqrt());
                        gstep.push(qnu[j] * (1.0 - (-r * dt).exp()) / r);
                    }
                }
                Rate::TimeVarying(vp) => {
                    let dphi = phi_between(&vp.potential, params, t0, t1);
                    // Shared quadrature nodes for this step: the integrands
                    // of all modes are exponentials of the same Phi
                    // differences.
                    let (pts, wk, wg) = quad::nodes15(t0, t1);
                    let mut dphi_end = [0.0f64; 15];
                    for (i, &s) in pts.iter().enumerate() {
                        dphi_end[i] = phi_between(&vp.potential, params, s, t1);
                    }
                    for j in 0..m {
                        let lam = spectrum.lambdas[j];
                        decay.push((lam * dphi).exp());
                        let (mut var_k, mut var_g) = (0.0, 0.0);
                        let (mut dr_k, mut dr_g) = (0.0, 0.0);
                        for i in 0..15 {
                            let e2 = (2.0 * lam * dphi_end[i]).exp();
                            let e1 = (lam * dphi_end[i]).exp();
                            var_k += wk[i] * e2;
                            var_g += wg[i] * e2;
                            dr_k += wk[i] * e1;
                            dr_g += wg[i] * e1;
                        }
                        // The embedded Gauss rule flags the rare step where
                        // one panel is not enough.
                        let var = if (var_k - var_g).abs() <= 1e-9 * var_k.abs() {
                            var_k
                        } else {
                            quad::integrate(
                                |s| (2.0 * lam * phi_between(&vp.potential, params, s, t1)).exp(),
                                t0,
                                t1,
                                1e-9,
                            )
                        };
                        let dr = if (dr_k - dr_g).abs() <= 1e-9 * dr_k.abs() {
                            dr_k
                        } else {
                            quad::integrate(
                                |s| (lam * phi_between(&vp.potential, params, s, t1)).exp(),
                                t0,
                                t1,
                                1e-9,
                            )
                        };
                        noise_sd.push((sigma2 * var).sqrt());
                        gstep.push(qnu[j] * dr);
                    }
                }
            }
        }

        let d = params.d;
        let mut diff = vec![0.0; d * m];
        for i in 1..=d {
            for j in 0..m {
                let right = if i < d { spectrum.q[j][i - 1] } else { 0.0 };
                let left = if i >= 2 { spectrum.q[j][i - 2] } else { 0.0 };
                diff[(i - 1) * m + j] = right - left;
            }
        }

        Ok(LinearPlan {
            params: *params,
            schedule,
            spectrum,
            n_modes: m,
            decay,
            noise_sd,
            gstep,
            diff,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    #[cfg(test)]
    pub(crate) fn decay_at(&self, idx: usize) -> f64 {
        self.decay[idx]
    }

    #[cfg(test)]
    pub(crate) fn noise_sd_at(&self, idx: usize) -> f64 {
        self.noise_sd[idx]
    }

    #[cfg(test)]
    pub(crate) fn gstep_at(&self, idx: usize) -> f64 {
        self.gstep[idx]
    }

    /// Simulate one path, tracking every link's first hitting time.
    pub fn run<R: Rng>(&self, rng: &mut R) -> LinearPathRecord {
        self.run_impl(rng, |_, _, _, _| {})
    }

    /// Simulate one path and record state snapshots at the grid boundaries
    /// closest to `probe_times` (every boundary if `every_step`).
    pub fn run_observed<R: Rng>(
        &self,
        rng: &mut R,
        probe_times: &[f64],
        every_step: bool,
    ) -> (LinearPathRecord, Vec<LinearObservation>) {
        let mut wanted: Vec<usize> = probe_times
            .iter()
            .map(|&t| self.schedule.nearest_boundary(t))
            .collect();
        wanted.sort_unstable();
        wanted.dedup();
        let mut observations = Vec::new();
        let record = self.run_impl(rng, |boundary_idx, t, modes, positions| {
            if every_step || wanted.binary_search(&boundary_idx).is_ok() {
                observations.push(LinearObservation {
                    t,
                    modes: modes.to_vec(),
                    positions: positions(),
                });
            }
        });
        (record, observations)
    }

    fn run_impl<R, F>(&self, rng: &mut R, mut observe: F) -> LinearPathRecord
    where
        R: Rng,
        F: FnMut(usize, f64, &[f64], &dyn Fn() -> Vec<f64>),
    {
        let d = self.params.d;
        let m = self.n_modes;
        let eps = self.params.eps;
        let t_star = self.params.t_star();

        let mut modes = vec![0.0f64; m];
        let mut gmodes = vec![0.0f64; m];
        let mut gaps_prev = vec![1.0f64; d];
        let mut gaps_next = vec![0.0f64; d];
        let mut tracker = LinkTracker::new(d, self.params.b_break);

        let positions_of = |t: f64, modes: &[f64], gmodes: &[f64]| -> Vec<f64> {
            let q = self.params.equilibrium_gap(t);
            let mut pos = vec![0.0; d + 1];
            for k in 1..d {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += self.spectrum.q[j][k - 1] * (eps * gmodes[j] + modes[j]);
                }
                pos[k] = k as f64 * q + acc;
            }
            pos[d] = d as f64 * q;
            pos
        };

        observe(0, 0.0, &modes, &|| positions_of(0.0, &modes, &gmodes));

        for (step, (t0, t1)) in self.schedule.steps().enumerate() {
            let base = step * m;
            for j in 0..m {
                let xi: f64 = rng.sample(StandardNormal);
                modes[j] = self.decay[base + j] * modes[j] + self.noise_sd[base + j] * xi;
                gmodes[j] = self.decay[base + j] * gmodes[j] - self.gstep[base + j];
            }
            let q1 = self.params.equilibrium_gap(t1);
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += self.diff[i * m + j] * (eps * gmodes[j] + modes[j]);
                }
                gaps_next[i] = q1 + acc;
            }
            tracker.update(&gaps_prev, &gaps_next, t0, t1);
            observe(step + 1, t1, &modes, &|| positions_of(t1, &modes, &gmodes));
            if tracker.all_hit() {
                break;
            }
            std::mem::swap(&mut gaps_prev, &mut gaps_next);
        }

        let first = match tracker.earliest() {
            Some((tau, link)) => {
                // No uncensored break can ever land past the forced time.
                assert!(
                    tau <= t_star * (1.0 + 1e-12),
                    "break at {tau} exceeds t_star {t_star}"
                );
                BreakEvent::broke(tau, link)
            }
            None => BreakEvent::censored_at(self.schedule.end()),
        };
        LinearPathRecord { first, link_hits: tracker.into_hits() }
    }

    /// Exact marginal variance of every mode after `steps` grid steps,
    /// obtained by composing the per-step moments. Lets tests check that
    /// the precomputed transitions compose to the continuous-time law
    /// independently of the step size.
    pub fn composed_mode_variance(&self, steps: usize) -> Vec<f64> {
        let m = self.n_modes;
        let mut var = vec![0.0f64; m];
        for k in 0..steps.min(self.schedule.len()) {
            for j in 0..m {
                let dec = self.decay[k * m + j];
                let sd = self.noise_sd[k * m + j];
                var[j] = dec * dec * var[j] + sd * sd;
            }
        }
        var
    }
}
