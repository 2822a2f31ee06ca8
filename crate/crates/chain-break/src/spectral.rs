//! The discrete Laplacian coupling the interior particles, its exact
//! eigendecomposition, the stiffness integral `Phi`, and the deterministic
//! drift profile `g_t` of the linearised chain.
//!
//! Writing the interior gaps' linear dynamics in vector form produces the
//! `(d-1) x (d-1)` matrix `A` with `-2` on the diagonal and `+1` on the two
//! adjacent off-diagonals (Dirichlet boundary). Its spectrum is known in
//! closed form:
//!
//! ```text
//! lambda_j = -2 (1 - cos(j pi / d))              j = 1 .. d-1
//! Q_{j,k}  = sqrt(2/d) sin(j k pi / d)           rows of Q are eigenvectors
//! A        = Q^T D Q,   D = diag(lambda_1, ..)
//! ```
//!
//! All eigenvalues are strictly negative, so every eigen-mode of the
//! linearised chain is a mean-reverting scalar process.

use crate::error::{Error, Result};
use crate::model::{ChainParams, Potential};
use crate::quad;

/// Exact spectral data of the interior coupling matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// `d - 1`.
    pub dim: usize,
    /// Eigenvalues `lambda_j = -2 (1 - cos(j pi / d))`, stored for
    /// `j = 1 .. d-1` (so `lambdas[0]` is the one closest to zero).
    pub lambdas: Vec<f64>,
    /// Orthogonal matrix with rows `Q_{j, .}` equal to the normalised
    /// eigenvectors, `Q[j][k] = sqrt(2/d) sin((j+1)(k+1) pi / d)`.
    pub q: Vec<Vec<f64>>,
}

impl Spectrum {
    /// Spectral gap `mu = min_j |lambda_j| = |lambda_1|`.
    pub fn mu(&self) -> f64 {
        self.lambdas[0].abs()
    }

    /// Rotate a vector of mode coordinates back to particle coordinates:
    /// `(Q^T m)_k = sum_j Q[j][k] m_j`.
    pub fn modes_to_sites(&self, modes: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|k| (0..self.dim).map(|j| self.q[j][k] * modes[j]).sum())
            .collect()
    }

    /// Project a site vector onto the eigenbasis: `(Q v)_j = sum_k Q[j][k] v_k`.
    pub fn sites_to_modes(&self, sites: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|k| self.q[j][k] * sites[k]).sum())
            .collect()
    }
}

/// Dense `(d-1) x (d-1)` coupling matrix: `-2` on the diagonal, `+1` on the
/// first off-diagonals.
pub fn build_laplacian(d: usize) -> Result<Vec<Vec<f64>>> {
    if d < 2 {
        return Err(Error::Parameter(format!("d must be >= 2, got {d}")));
    }
    let n = d - 1;
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = -2.0;
        if i + 1 < n {
            a[i][i + 1] = 1.0;
            a[i + 1][i] = 1.0;
        }
    }
    Ok(a)
}

/// Closed-form eigendecomposition of the coupling matrix.
pub fn eigendecompose(d: usize) -> Result<Spectrum> {
    if d < 2 {
        return Err(Error::Parameter(format!("d must be >= 2, got {d}")));
    }
    let n = d - 1;
    let df = d as f64;
    let norm = (2.0 / df).sqrt();
    let lambdas: Vec<f64> = (1..=n)
        .map(|j| -2.0 * (1.0 - (j as f64 * std::f64::consts::PI / df).cos()))
        .collect();
    let q: Vec<Vec<f64>> = (1..=n)
        .map(|j| {
            (1..=n)
                .map(|k| norm * ((j * k) as f64 * std::f64::consts::PI / df).sin())
                .collect()
        })
        .collect();
    Ok(Spectrum { dim: n, lambdas, q })
}

/// Stiffness of the linearised chain at time `t`: `phi(t) = U''(q_t)` with
/// `q_t = 1 + eps t / d`.
pub fn stiffness(potential: &Potential, params: &ChainParams, t: f64) -> f64 {
    potential.d2(params.equilibrium_gap(t))
}

/// `Phi(t1) - Phi(t0)` where `Phi(t) = ∫_0^t phi(s) ds`.
///
/// Uses the closed form when the potential provides one (substituting
/// `x = q_s` turns the integral into `(d/eps)(U'(q_t1) - U'(q_t0))`),
/// otherwise adaptive quadrature to relative accuracy 1e-10. Always computed
/// as an increment so that exponentials of `Phi` differences stay finite
/// even when `Phi` itself is huge.
pub fn phi_between(potential: &Potential, params: &ChainParams, t0: f64, t1: f64) -> f64 {
    if let Some(v) = potential.closed_phi_between(params, t0, t1) {
        return v;
    }
    if t0 == t1 {
        return 0.0;
    }
    // phi varies on the pulling time scale d/eps; pick panels accordingly.
    let span = (t1 - t0).abs();
    let scale = if params.eps > 0.0 { params.d as f64 / params.eps } else { f64::INFINITY };
    let panels = ((span / scale * 8.0).ceil() as usize).clamp(1, 64);
    quad::integrate_panels(|s| stiffness(potential, params, s), t0, t1, 1e-10, panels)
}

/// `Phi(t) = ∫_0^t U''(1 + eps s / d) ds`, for `0 <= t <= t_star`.
pub fn phi_integral(potential: &Potential, params: &ChainParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) || t > params.t_star() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "t = {t} outside [0, t_star = {}]",
            params.t_star()
        )));
    }
    Ok(phi_between(potential, params, 0.0, t))
}

/// Deterministic drift profile of the linearised chain.
///
/// Interior sites of the linear system track `i q_t + eps g_t^i` plus
/// Gaussian fluctuation, where in mode coordinates
///
/// ```text
/// (Q g_t)_j = -(Q nu)_j ∫_0^t exp(lambda_j (Phi(t) - Phi(s))) ds,
/// ```
///
/// and `nu_k = k / d`. Returns the `d - 1` interior site values of `g_t`.
pub fn drift_g(
    potential: &Potential,
    params: &ChainParams,
    spectrum: &Spectrum,
    t: f64,
) -> Result<Vec<f64>> {
    if !(t >= 0.0) || t > params.t_star() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "t = {t} outside [0, t_star = {}]",
            params.t_star()
        )));
    }
    let qnu = q_nu(spectrum, params.d);
    let kappa_floor = validated_kappa_floor(potential, params, t);
    let modes: Vec<f64> = spectrum
        .lambdas
        .iter()
        .zip(&qnu)
        .map(|(&lam, &qn)| {
            // The integrand decays like exp(lambda kappa (t - s)); truncate
            // where it is below 1e-16 of its peak.
            let width = 37.0 / (lam.abs() * kappa_floor);
            let lo = (t - width).max(0.0);
            let integral = quad::integrate_panels(
                |s| (lam * phi_between(potential, params, s, t)).exp(),
                lo,
                t,
                1e-8,
                ((t - lo).ceil() as usize).clamp(1, 64),
            );
            -qn * integral
        })
        .collect();
    Ok(spectrum.modes_to_sites(&modes))
}

/// Mode-space projection of the pulling vector: `(Q nu)_j`, `nu_k = k/d`.
pub(crate) fn q_nu(spectrum: &Spectrum, d: usize) -> Vec<f64> {
    let nu: Vec<f64> = (1..d).map(|k| k as f64 / d as f64).collect();
    spectrum.sites_to_modes(&nu)
}

/// A positive lower bound for the stiffness on `[0, t]`, used only to size
/// quadrature truncation windows. Falls back to sampling for custom
/// potentials.
fn validated_kappa_floor(potential: &Potential, params: &ChainParams, t: f64) -> f64 {
    let mut lo = f64::INFINITY;
    for k in 0..=32 {
        let s = t * k as f64 / 32.0;
        lo = lo.min(stiffness(potential, params, s));
    }
    if lo > 0.0 && lo.is_finite() {
        lo
    } else {
        1e-6
    }
}
