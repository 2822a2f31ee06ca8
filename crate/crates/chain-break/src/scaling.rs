//! Reductions between the general chain problem `(u, b_break, eps, sigma)`
//! and the standard one (`u = 1`, `b_break = 2`), plus the closure of the
//! double-exponential family under shifts.
//!
//! Rescaling time by `u` and lengths by `b_break - 1` shows that the break
//! times of the general linear problem equal, in distribution, `1/u` times
//! the break times of the standard problem run at
//! `eps' = eps / (u (b-1))` and `sigma' = sigma / (sqrt(u) (b-1))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Result of mapping a general problem onto the standard one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardReduction {
    /// Pulling speed of the equivalent standard problem.
    pub eps_std: f64,
    /// Noise amplitude of the equivalent standard problem.
    pub sigma_std: f64,
    /// Break times of the general problem are `time_factor` times those of
    /// the standard problem (`time_factor = 1/u`).
    pub time_factor: f64,
}

/// Map `(u, b_break, eps, sigma)` to the standard problem.
pub fn reduce_to_standard(u: f64, b_break: f64, eps: f64, sigma: f64) -> Result<StandardReduction> {
    if !(u > 0.0) {
        return Err(Error::Parameter(format!("u must be > 0, got {u}")));
    }
    if !(b_break > 1.0) {
        return Err(Error::Parameter(format!("b_break must be > 1, got {b_break}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps must be > 0, got {eps}")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
    }
    Ok(StandardReduction {
        eps_std: eps / (u * (b_break - 1.0)),
        sigma_std: sigma / (u.sqrt() * (b_break - 1.0)),
        time_factor: 1.0 / u,
    })
}

/// Invert [`reduce_to_standard`]: recover `(eps, sigma)` from the standard
/// parameters.
pub fn from_standard(u: f64, b_break: f64, eps_std: f64, sigma_std: f64) -> (f64, f64) {
    (eps_std * u * (b_break - 1.0), sigma_std * u.sqrt() * (b_break - 1.0))
}

/// If `xi` is double exponential with parameters `(a, b)`, then `xi + kappa`
/// is double exponential with parameters `(a e^{b kappa}, b)`.
pub fn gumbel_shift(a: f64, b: f64, kappa: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Parameter(format!(
            "Gumbel parameters must be positive, got a = {a}, b = {b}"
        )));
    }
    Ok((a * (b * kappa).exp(), b))
}
