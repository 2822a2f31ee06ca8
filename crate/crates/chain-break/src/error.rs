use thiserror::Error;

/// Errors produced by model construction, simulation, and experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument violates its documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The supplied potential fails the convexity assumption on the
    /// interval where the simulation needs certified bounds.
    #[error("assumption violated: {0}")]
    Assumption(String),

    /// A gap left the interval on which the potential bounds were
    /// validated, so the run can no longer be trusted.
    #[error("gap {gap} at link {link} exceeded validated range at t = {t}")]
    DomainEscape { t: f64, link: usize, gap: f64 },

    /// The requested statistic is undefined for this (eps, sigma) pair.
    #[error("outside applicable regime: {0}")]
    Regime(String),

    /// A time or interval argument is outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Experiment configuration could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
