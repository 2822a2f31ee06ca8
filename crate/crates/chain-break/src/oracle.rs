//! Closed-form and quadrature second moments of the scalar Gaussian
//! processes behind the linearised chain. These serve as ground truth for
//! the Monte Carlo engines.
//!
//! Two scalar building blocks, both started at zero:
//!
//! ```text
//! dY = -u Y dt + sigma dB            (constant-rate OU)
//! dZ = -phi(t) Z dt + sigma dB       (time-varying rate phi(t) = U''(q_t))
//! ```
//!
//! with explicit solutions `Y_t = sigma ∫_0^t e^{u(s-t)} dB_s` and
//! `Z_t = sigma e^{-Phi(t)} ∫_0^t e^{Phi(s)} dB_s`, `Phi(t) = ∫_0^t phi`.
//! Every moment below is expressed through `Phi` differences only, so the
//! formulas stay finite even when `Phi(t)` is in the tens of thousands.

use crate::error::{Error, Result};
use crate::model::{ChainParams, Potential};
use crate::quad;
use crate::spectral::phi_between;

/// Fraction `e^{-37} ≈ 8.5e-17` of the peak below which exponentially
/// decaying integrands are truncated.
const DECAY_CUTOFF: f64 = 37.0;

/// Kind of scalar process the moments refer to.
#[derive(Debug, Clone)]
pub enum ProcessKind {
    /// Constant mean-reversion rate `u > 0`.
    ConstantRate { u: f64 },
    /// Rate `phi(t) = U''(1 + eps t / d)` along the pulled equilibrium.
    TimeVarying { potential: Potential },
}

/// A scalar mean-reverting Gaussian process
/// `dX = rate_scale * base(t) X dt + sigma dB`, where `base(t)` is `u` or
/// `phi(t)` depending on the kind and `rate_scale < 0` (eigenvalue
/// multiplier; `-1` recovers the plain scalar convention).
#[derive(Debug, Clone)]
pub struct ScalarProcessSpec {
    pub kind: ProcessKind,
    pub sigma: f64,
    pub rate_scale: f64,
}

impl ScalarProcessSpec {
    pub fn new(kind: ProcessKind, sigma: f64, rate_scale: f64) -> Result<Self> {
        if let ProcessKind::ConstantRate { u } = &kind {
            if !(*u > 0.0) {
                return Err(Error::Parameter(format!("rate must be > 0, got {u}")));
            }
        }
        if !(rate_scale < 0.0) {
            return Err(Error::Parameter(format!(
                "rate_scale must be negative, got {rate_scale}"
            )));
        }
        if !(sigma >= 0.0) {
            return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(ScalarProcessSpec { kind, sigma, rate_scale })
    }

    /// Marginal variance at time `t`.
    pub fn variance(&self, params: &ChainParams, t: f64) -> Result<f64> {
        match &self.kind {
            ProcessKind::ConstantRate { u } => {
                ou_variance(-self.rate_scale * u, self.sigma, t)
            }
            ProcessKind::TimeVarying { potential } => {
                mode_variance(potential, params, self.rate_scale, self.sigma, t)
            }
        }
    }
}

/// Variance of the constant-rate OU process:
/// `Var Y_t = sigma^2 (1 - e^{-2 u t}) / (2 u)`.
pub fn ou_variance(u: f64, sigma: f64, t: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Parameter(format!("rate must be > 0, got {u}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("t must be >= 0, got {t}")));
    }
    Ok(sigma * sigma * (1.0 - (-2.0 * u * t).exp()) / (2.0 * u))
}

/// Covariance of the constant-rate OU process:
/// `sigma^2 / (2u) (e^{-u |t1 - t2|} - e^{-u (t1 + t2)})`.
pub fn ou_covariance(u: f64, sigma: f64, t1: f64, t2: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Parameter(format!("rate must be > 0, got {u}")));
    }
    if !(t1 >= 0.0) || !(t2 >= 0.0) {
        return Err(Error::Domain(format!("times must be >= 0, got {t1}, {t2}")));
    }
    Ok(sigma * sigma / (2.0 * u) * ((-u * (t1 - t2).abs()).exp() - (-u * (t1 + t2)).exp()))
}

/// A strictly positive lower bound of `phi` on `[0, t]`, for sizing
/// quadrature truncation windows.
fn phi_floor(potential: &Potential, params: &ChainParams, t: f64) -> f64 {
    let mut lo = f64::INFINITY;
    for k in 0..=32 {
        lo = lo.min(potential.d2(params.equilibrium_gap(t * k as f64 / 32.0)));
    }
    if lo > 0.0 && lo.is_finite() {
        lo
    } else {
        1e-6
    }
}

/// Variance of an eigen-mode with drift `lambda * phi(t)` (`lambda < 0`):
/// `sigma^2 ∫_0^t exp(2 lambda (Phi(t) - Phi(s))) ds`, truncated where the
/// integrand drops below 1e-16 of its peak.
pub fn mode_variance(
    potential: &Potential,
    params: &ChainParams,
    lambda: f64,
    sigma: f64,
    t: f64,
) -> Result<f64> {
    if !(lambda < 0.0) {
        return Err(Error::Parameter(format!("lambda must be < 0, got {lambda}")));
    }
    check_time(params, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let floor = phi_floor(potential, params, t);
    let lo = (t - DECAY_CUTOFF / (2.0 * lambda.abs() * floor)).max(0.0);
    let v = quad::integrate_panels(
        |s| (2.0 * lambda * phi_between(potential, params, s, t)).exp(),
        lo,
        t,
        1e-10,
        panels_for(t - lo),
    );
    Ok(sigma * sigma * v)
}

/// Variance of the time-varying scalar process (`lambda = -1` convention):
/// `Var Z_t = sigma^2 ∫_0^t e^{2 (Phi(s) - Phi(t))} ds`.
pub fn z_variance(potential: &Potential, params: &ChainParams, t: f64) -> Result<f64> {
    mode_variance(potential, params, -1.0, params.sigma, t)
}

/// Covariance between the constant-rate process at rate `u` and the
/// time-varying process driven by the same Brownian motion:
/// `cov(Y_t, Z_t) = sigma^2 ∫_0^t e^{u (s - t) + Phi(s) - Phi(t)} ds`.
pub fn yz_covariance(
    potential: &Potential,
    params: &ChainParams,
    u: f64,
    t: f64,
) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Parameter(format!("u must be > 0, got {u}")));
    }
    check_time(params, t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let floor = phi_floor(potential, params, t);
    let lo = (t - DECAY_CUTOFF / (u + floor)).max(0.0);
    let v = quad::integrate_panels(
        |s| (u * (s - t) - phi_between(potential, params, s, t)).exp(),
        lo,
        t,
        1e-10,
        panels_for(t - lo),
    );
    Ok(params.sigma * params.sigma * v)
}

/// Mean-square distance between the two coupled scalar processes:
/// `E (Y_t - Z_t)^2 = Var Y_t + Var Z_t - 2 cov(Y_t, Z_t)`.
pub fn yz_distance_sq(
    potential: &Potential,
    params: &ChainParams,
    u: f64,
    t: f64,
) -> Result<f64> {
    let vy = ou_variance(u, params.sigma, t)?;
    let vz = z_variance(potential, params, t)?;
    let c = yz_covariance(potential, params, u, t)?;
    Ok(vy + vz - 2.0 * c)
}

/// Exact second moment of an increment of the time-varying scalar process:
/// `E (Z_{t2} - Z_{t1})^2`, for `0 <= t1 <= t2 <= t_star` with
/// `t2 - t1 <= 1` (the range on which the linear-in-`|t2 - t1|` bound with
/// `C = kappa_max^2 / (2 kappa_min) + 1` applies).
pub fn increment_msq(
    potential: &Potential,
    params: &ChainParams,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    if !(0.0 <= t1 && t1 <= t2) {
        return Err(Error::Domain(format!("need 0 <= t1 <= t2, got {t1}, {t2}")));
    }
    check_time(params, t2)?;
    if t2 - t1 > 1.0 {
        return Err(Error::Domain(format!(
            "increment bound only applies for t2 - t1 <= 1, got {}",
            t2 - t1
        )));
    }
    if t1 == t2 {
        return Ok(0.0);
    }
    let v1 = z_variance(potential, params, t1)?;
    let v2 = z_variance(potential, params, t2)?;
    // cov(Z_{t1}, Z_{t2}) = sigma^2 ∫_0^{t1} e^{2 Phi(s) - Phi(t1) - Phi(t2)} ds
    let floor = phi_floor(potential, params, t2);
    let lo = (t1 - DECAY_CUTOFF / (2.0 * floor)).max(0.0);
    let cov = if t1 == 0.0 {
        0.0
    } else {
        params.sigma
            * params.sigma
            * quad::integrate_panels(
                |s| {
                    (-phi_between(potential, params, s, t1)
                        - phi_between(potential, params, s, t2))
                    .exp()
                },
                lo,
                t1,
                1e-10,
                panels_for(t1 - lo),
            )
    };
    Ok(v1 + v2 - 2.0 * cov)
}

fn check_time(params: &ChainParams, t: f64) -> Result<()> {
    if !(t >= 0.0) || t > params.t_star() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "t = {t} outside [0, t_star = {}]",
            params.t_star()
        )));
    }
    Ok(())
}

fn panels_for(width: f64) -> usize {
    (width.ceil() as usize).clamp(1, 64)
}
