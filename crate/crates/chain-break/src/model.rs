//! Core domain types: chain parameters, interaction potentials with
//! validated convexity bounds, the parameters of the limiting
//! double-exponential (Gumbel) break-time law, and the normalisation that
//! maps raw break times onto that law.
//!
//! The physical model is a chain of `d + 1` particles on the line with
//! nearest-neighbour interaction potential `U`. The leftmost particle is
//! pinned at 0, the rightmost is pulled with speed `eps`, and the interior
//! particles feel independent Brownian noise of amplitude `sigma`:
//!
//! ```text
//! dx_i = (U'(x_{i+1} - x_i) - U'(x_i - x_{i-1})) dt + sigma dB_i
//! ```
//!
//! The chain "breaks" when some gap `x_i - x_{i-1}` first reaches the
//! threshold `b_break` > 1. Since the total length grows linearly, no break
//! can happen later than `t_star = d (b_break - 1) / eps`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.5066282746310002;

/// Physical configuration of one chain experiment.
///
/// `d` is the number of links (the chain has `d + 1` particles), `eps` the
/// pulling speed, `sigma` the noise amplitude, `b_break` the gap threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub d: usize,
    pub eps: f64,
    pub sigma: f64,
    pub b_break: f64,
}

impl ChainParams {
    pub fn new(d: usize, eps: f64, sigma: f64, b_break: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Parameter(format!("d must be >= 2, got {d}")));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::Parameter(format!("eps must be finite and >= 0, got {eps}")));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!(
                "sigma must be finite and >= 0, got {sigma}"
            )));
        }
        if !(b_break > 1.0) || !b_break.is_finite() {
            return Err(Error::Parameter(format!(
                "b_break must be finite and > 1, got {b_break}"
            )));
        }
        Ok(ChainParams { d, eps, sigma, b_break })
    }

    /// Latest possible break time `d (b_break - 1) / eps`.
    ///
    /// At that moment the total chain length is `d * b_break`, which forces
    /// some gap to reach the threshold. Returns `f64::INFINITY` for
    /// `eps = 0` (nothing ever forces a break).
    pub fn t_star(&self) -> f64 {
        if self.eps == 0.0 {
            f64::INFINITY
        } else {
            self.d as f64 * (self.b_break - 1.0) / self.eps
        }
    }

    /// Quasi-static equilibrium gap `q_t = 1 + eps * t / d`: the mean
    /// spacing of the slowly pulled chain.
    pub fn equilibrium_gap(&self, t: f64) -> f64 {
        1.0 + self.eps * t / self.d as f64
    }
}

/// Grid-certified regularity bounds of a potential on `[1, b_break + margin_r]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialBounds {
    /// Lower bound of `U''` on the certified interval (strictly positive).
    pub kappa_min: f64,
    /// Upper bound of `U''` on the certified interval.
    pub kappa_max: f64,
    /// Upper bound of `|U'''|` on the certified interval.
    pub third_max: f64,
    /// Margin beyond the break threshold on which the bounds hold.
    pub margin_r: f64,
}

enum PotentialImpl {
    /// `U(x) = u x^2 / 2`, so `U' = u x`, `U'' = u`, `U''' = 0`.
    Quadratic { u: f64 },
    /// `U(x) = cosh(x - 1)`: globally smooth, strictly convex, with
    /// `U''(x) = cosh(x - 1) >= 1` everywhere.
    Cosh,
    /// User-supplied first, second, and third derivative callables.
    Custom {
        name: String,
        d1: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        d2: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        d3: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

/// A pair-interaction potential exposing its first three derivatives.
///
/// The simulation only ever calls the derivatives, never `U` itself.
#[derive(Clone)]
pub struct Potential {
    inner: Arc<PotentialImpl>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({})", self.name())
    }
}

impl Potential {
    /// Quadratic potential `U(x) = u x^2 / 2` with curvature `u > 0`.
    pub fn quadratic(u: f64) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::Parameter(format!(
                "quadratic curvature must be finite and > 0, got {u}"
            )));
        }
        Ok(Potential { inner: Arc::new(PotentialImpl::Quadratic { u }) })
    }

    /// The built-in non-quadratic test potential `U(x) = cosh(x - 1)`.
    pub fn cosh() -> Self {
        Potential { inner: Arc::new(PotentialImpl::Cosh) }
    }

    /// Potential defined by derivative callables (no closed forms assumed).
    pub fn custom<F1, F2, F3>(name: &str, d1: F1, d2: F2, d3: F3) -> Self
    where
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
        F3: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Potential {
            inner: Arc::new(PotentialImpl::Custom {
                name: name.to_string(),
                d1: Box::new(d1),
                d2: Box::new(d2),
                d3: Box::new(d3),
            }),
        }
    }

    /// Parse a config selector: `"quadratic:u=<f>"` or `"cosh"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        if s == "cosh" {
            return Ok(Potential::cosh());
        }
        if let Some(rest) = s.strip_prefix("quadratic:") {
            if let Some(val) = rest.trim().strip_prefix("u=") {
                let u: f64 = val
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad curvature value in {spec:?}")))?;
                return Potential::quadratic(u);
            }
        }
        Err(Error::Parameter(format!(
            "unknown potential {spec:?} (expected \"quadratic:u=<f>\" or \"cosh\")"
        )))
    }

    pub fn name(&self) -> String {
        match &*self.inner {
            PotentialImpl::Quadratic { u } => format!("quadratic:u={u}"),
            PotentialImpl::Cosh => "cosh".to_string(),
            PotentialImpl::Custom { name, .. } => name.clone(),
        }
    }

    /// `U'(x)`.
    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        match &*self.inner {
            PotentialImpl::Quadratic { u } => u * x,
            PotentialImpl::Cosh => (x - 1.0).sinh(),
            PotentialImpl::Custom { d1, .. } => d1(x),
        }
    }

    /// `U''(x)`.
    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        match &*self.inner {
            PotentialImpl::Quadratic { u } => *u,
            PotentialImpl::Cosh => (x - 1.0).cosh(),
            PotentialImpl::Custom { d2, .. } => d2(x),
        }
    }

    /// `U'''(x)`.
    #[inline]
    pub fn d3(&self, x: f64) -> f64 {
        match &*self.inner {
            PotentialImpl::Quadratic { .. } => 0.0,
            PotentialImpl::Cosh => (x - 1.0).sinh(),
            PotentialImpl::Custom { d3, .. } => d3(x),
        }
    }

    /// Antiderivative of the stiffness along the pulled equilibrium, when a
    /// closed form is known: `Phi(t1) - Phi(t0)` with
    /// `Phi(t) = ∫_0^t U''(1 + eps s / d) ds`.
    pub(crate) fn closed_phi_between(&self, params: &ChainParams, t0: f64, t1: f64) -> Option<f64> {
        let eps = params.eps;
        let d = params.d as f64;
        match &*self.inner {
            PotentialImpl::Quadratic { u } => Some(u * (t1 - t0)),
            PotentialImpl::Cosh => {
                if eps == 0.0 {
                    // q_t == 1, stiffness is cosh(0) = 1.
                    Some(t1 - t0)
                } else {
                    // (d/eps) (sinh(eps t1 / d) - sinh(eps t0 / d)), written
                    // via the product identity to stay accurate for t1 ≈ t0.
                    let a = eps * t1 / d;
                    let b = eps * t0 / d;
                    Some(2.0 * d / eps * (0.5 * (a + b)).cosh() * (0.5 * (a - b)).sinh())
                }
            }
            PotentialImpl::Custom { .. } => None,
        }
    }

    /// Certify this potential on `[1, b_break + r]` for the largest workable
    /// margin among `r_candidates` and return the resulting bounds.
    pub fn validate(&self, b_break: f64, r_candidates: &[f64]) -> Result<PotentialBounds> {
        validate_potential(self, b_break, r_candidates)
    }
}

/// Default margin candidates used when the experiment config names none.
pub const DEFAULT_MARGIN_CANDIDATES: [f64; 4] = [0.5, 0.25, 0.1, 0.05];

/// Grid spacing used by [`validate_potential`].
const VALIDATION_GRID_STEP: f64 = 1e-3;

/// Scan `U''` and `U'''` on a dense grid over `[1, b_break + r]` for each
/// candidate margin `r` (largest first) and return bounds for the largest
/// margin whose minimal curvature is strictly positive.
///
/// Fails with an assumption-violation error naming the offending grid point
/// when no candidate works.
pub fn validate_potential(
    potential: &Potential,
    b_break: f64,
    r_candidates: &[f64],
) -> Result<PotentialBounds> {
    if !(b_break > 1.0) {
        return Err(Error::Parameter(format!("b_break must be > 1, got {b_break}")));
    }
    if r_candidates.is_empty() {
        return Err(Error::Parameter("margin candidate list is empty".into()));
    }
    if r_candidates.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Parameter("margin candidates must be positive".into()));
    }

    let mut sorted: Vec<f64> = r_candidates.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let mut first_failure: Option<(f64, f64)> = None;
    for &r in &sorted {
        let hi = b_break + r;
        let n = ((hi - 1.0) / VALIDATION_GRID_STEP).ceil() as usize;
        let n = n.max(1);
        let mut kappa_min = f64::INFINITY;
        let mut kappa_max = f64::NEG_INFINITY;
        let mut third_max: f64 = 0.0;
        let mut worst_point = 1.0;
        for k in 0..=n {
            let x = 1.0 + (hi - 1.0) * k as f64 / n as f64;
            let k2 = potential.d2(x);
            if k2 < kappa_min {
                kappa_min = k2;
                worst_point = x;
            }
            kappa_max = kappa_max.max(k2);
            third_max = third_max.max(potential.d3(x).abs());
        }
        if kappa_min > 0.0 {
            return Ok(PotentialBounds { kappa_min, kappa_max, third_max, margin_r: r });
        }
        if first_failure.is_none() {
            first_failure = Some((worst_point, kappa_min));
        }
    }
    let (x, k2) = first_failure.expect("candidate list non-empty");
    Err(Error::Assumption(format!(
        "second derivative is not strictly positive: U''({x}) = {k2} (potential {})",
        potential.name()
    )))
}

/// A potential together with its certified bounds.
///
/// Simulators require this type so that every run is backed by a verified
/// convexity certificate.
#[derive(Debug, Clone)]
pub struct ValidatedPotential {
    pub potential: Potential,
    pub bounds: PotentialBounds,
}

impl ValidatedPotential {
    pub fn new(potential: Potential, b_break: f64, r_candidates: &[f64]) -> Result<Self> {
        let bounds = validate_potential(&potential, b_break, r_candidates)?;
        Ok(ValidatedPotential { potential, bounds })
    }
}

/// Parameters of the limiting double-exponential law of the break times.
///
/// For a chain with `d` links,
///
/// ```text
/// v^2 = (d-1) / (2d)            gamma = sqrt(d (d-1))
/// A_1 = A_d = d / (d-1)         A_i = 2d / (d-1)    (interior i)
/// a_i = v d A_i / sqrt(2 pi)    a_0 = sum_i a_i = 2 v d^2 / sqrt(2 pi)
/// b   = sqrt(2) / (v d)
/// ```
///
/// and `b * gamma = 2` identically. The normalised break time of link `i`
/// converges in law to a Gumbel variable with parameters `(sqrt(u) a_i, b)`,
/// and the minimum over links to `(sqrt(u) a_0, b)`, where `u = U''(b_break)`
/// is the only trace the potential leaves in the limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLawParams {
    pub v: f64,
    pub gamma: f64,
    /// Per-link amplitudes `A_1 .. A_d`.
    pub amp: Vec<f64>,
    /// Per-link Gumbel parameters `a_1 .. a_d` (before the `sqrt(u)` factor).
    pub a_link: Vec<f64>,
    /// `a_0 = sum_i a_i`, governing the law of the earliest break.
    pub a_sum: f64,
    /// Common Gumbel rate parameter `b`.
    pub b: f64,
    /// Curvature `U''(b_break)` of the potential at the break distance.
    pub u_curv: f64,
}

impl LimitLawParams {
    pub fn new(d: usize, u_curv: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Parameter(format!("d must be >= 2, got {d}")));
        }
        if !(u_curv > 0.0) || !u_curv.is_finite() {
            return Err(Error::Parameter(format!(
                "curvature must be finite and > 0, got {u_curv}"
            )));
        }
        let df = d as f64;
        let v = ((df - 1.0) / (2.0 * df)).sqrt();
        let gamma = (df * (df - 1.0)).sqrt();
        let amp: Vec<f64> = (1..=d)
            .map(|i| {
                if i == 1 || i == d {
                    df / (df - 1.0)
                } else {
                    2.0 * df / (df - 1.0)
                }
            })
            .collect();
        let a_link: Vec<f64> = amp.iter().map(|ai| v * df * ai / SQRT_2PI).collect();
        let a_sum = 2.0 * v * df * df / SQRT_2PI;
        let b = std::f64::consts::SQRT_2 / (v * df);
        Ok(LimitLawParams { v, gamma, amp, a_link, a_sum, b, u_curv })
    }

    /// Gumbel `(a, b)` pair for the law of the earliest break.
    pub fn gumbel_min(&self) -> (f64, f64) {
        (self.u_curv.sqrt() * self.a_sum, self.b)
    }

    /// Gumbel `(a, b)` pair for the law of link `i` (1-based).
    pub fn gumbel_link(&self, link: usize) -> (f64, f64) {
        (self.u_curv.sqrt() * self.a_link[link - 1], self.b)
    }
}

/// Double-exponential (Gumbel) distribution function
/// `P(chi <= r) = exp(-a exp(-b r))`.
pub fn gumbel_cdf(r: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Parameter(format!(
            "Gumbel parameters must be positive, got a = {a}, b = {b}"
        )));
    }
    Ok((-a * (-b * r).exp()).exp())
}

/// Limiting break-position distribution: interior links break with
/// probability `1 / (d-1)`, the two boundary links with `1 / (2(d-1))`.
pub fn position_limit_probs(d: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::Parameter(format!("d must be >= 2, got {d}")));
    }
    let df = d as f64;
    Ok((1..=d)
        .map(|i| {
            if i == 1 || i == d {
                1.0 / (2.0 * (df - 1.0))
            } else {
                1.0 / (df - 1.0)
            }
        })
        .collect())
}

/// Map a raw break time onto the scale of the limiting Gumbel law:
///
/// ```text
/// (sqrt(u) eps / sigma) sqrt(ln(sigma/eps))
///     * ( t_star - gamma (sigma / (sqrt(u) eps)) sqrt(ln(sigma/eps)) - tau )
/// ```
///
/// Requires `sigma > eps > 0` so that the logarithm is positive.
pub fn normalize_break_time(tau: f64, params: &ChainParams, u_curv: f64) -> Result<f64> {
    if !(params.eps > 0.0) {
        return Err(Error::Regime("normalisation requires eps > 0".into()));
    }
    if !(params.sigma > params.eps) {
        return Err(Error::Regime(format!(
            "normalisation requires sigma > eps (got sigma = {}, eps = {})",
            params.sigma, params.eps
        )));
    }
    if !(u_curv > 0.0) {
        return Err(Error::Parameter(format!("curvature must be > 0, got {u_curv}")));
    }
    let ratio = params.sigma / params.eps;
    let sqrt_log = ratio.ln().sqrt();
    let gamma = (params.d as f64 * (params.d as f64 - 1.0)).sqrt();
    let su = u_curv.sqrt();
    let center = params.t_star() - gamma * (ratio / su) * sqrt_log;
    Ok((su / ratio) * sqrt_log * (center - tau))
}

/// A break event: the first time `tau` some link's gap reached the
/// threshold, which link it was (1-based), and whether the path ran out of
/// horizon without breaking instead (`censored`, in which case `tau` is the
/// horizon and `link` is 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakEvent {
    pub tau: f64,
    pub link: usize,
    pub censored: bool,
}

impl BreakEvent {
    pub fn broke(tau: f64, link: usize) -> Self {
        BreakEvent { tau, link, censored: false }
    }

    pub fn censored_at(horizon: f64) -> Self {
        BreakEvent { tau: horizon, link: 0, censored: true }
    }
}
