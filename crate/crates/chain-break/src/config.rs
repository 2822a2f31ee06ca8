//! Experiment configuration: a flat TOML file mirroring the fields below,
//! with CLI flags overriding file values.
//!
//! ```toml
//! d = 3
//! eps = 1e-3
//! sigma = 0.05
//! b_break = 2.0
//! potential = "quadratic:u=1"
//! system = "linear-constant"
//! n_paths = 2000
//! master_seed = 42
//! # grid = "auto"                         # or { coarse_dt=0.1, fine_dt=0.005, window=300.0 }
//! # u_curv = 1.0                          # defaults to U''(b_break)
//! # horizon = 50.0                        # required when eps = 0
//! # margin_candidates = [0.5, 0.25, 0.1, 0.05]
//! # workers = 4                           # 0 = library default
//! # csv_out = "rows.csv"
//! # json_out = "summary.json"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::SimGrid;
use crate::error::{Error, Result};
use crate::model::{ChainParams, Potential, DEFAULT_MARGIN_CANDIDATES};

/// Which dynamics to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Nonlinear,
    LinearConstant,
    LinearTimevarying,
    Coupled,
}

impl SystemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SystemKind::Nonlinear => "nonlinear",
            SystemKind::LinearConstant => "linear-constant",
            SystemKind::LinearTimevarying => "linear-timevarying",
            SystemKind::Coupled => "coupled",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nonlinear" => Ok(SystemKind::Nonlinear),
            "linear-constant" => Ok(SystemKind::LinearConstant),
            "linear-timevarying" => Ok(SystemKind::LinearTimevarying),
            "coupled" => Ok(SystemKind::Coupled),
            other => Err(Error::Config(format!(
                "unknown system {other:?} (expected nonlinear, linear-constant, \
                 linear-timevarying, or coupled)"
            ))),
        }
    }
}

/// Grid selection: the literal string `"auto"` or an explicit table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Named(String),
    Explicit { coarse_dt: f64, fine_dt: f64, window: f64 },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Named("auto".to_string())
    }
}

impl GridSpec {
    /// Resolve to a concrete grid given the chain and the certified
    /// curvature ceiling.
    pub fn resolve(&self, params: &ChainParams, kappa_max: f64) -> Result<SimGrid> {
        match self {
            GridSpec::Named(name) if name == "auto" => Ok(SimGrid::auto(params, kappa_max)),
            GridSpec::Named(other) => {
                Err(Error::Config(format!("unknown grid policy {other:?} (only \"auto\")")))
            }
            GridSpec::Explicit { coarse_dt, fine_dt, window } => {
                SimGrid::new(*coarse_dt, *fine_dt, *window)
            }
        }
    }
}

fn default_margins() -> Vec<f64> {
    DEFAULT_MARGIN_CANDIDATES.to_vec()
}

/// One batch experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub eps: f64,
    pub sigma: f64,
    pub b_break: f64,
    /// Potential selector, e.g. `"quadratic:u=1"` or `"cosh"`.
    pub potential: String,
    pub system: SystemKind,
    /// Stiffness used by the linear-constant system and by the break-time
    /// normalisation; defaults to `U''(b_break)`.
    #[serde(default)]
    pub u_curv: Option<f64>,
    pub n_paths: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    /// Optional simulation horizon; the effective horizon is
    /// `min(horizon, t_star)`. Mandatory when `eps = 0`.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_margins")]
    pub margin_candidates: Vec<f64>,
    /// Worker threads (0 = library default). Results are identical for any
    /// worker count.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub csv_out: Option<PathBuf>,
    #[serde(default)]
    pub json_out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        self.chain()?;
        Potential::parse(&self.potential).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(u) = self.u_curv {
            if !(u > 0.0) {
                return Err(Error::Config(format!("u_curv must be > 0, got {u}")));
            }
        }
        if self.margin_candidates.is_empty() {
            return Err(Error::Config("margin_candidates must be non-empty".into()));
        }
        Ok(())
    }

    pub fn chain(&self) -> Result<ChainParams> {
        ChainParams::new(self.d, self.eps, self.sigma, self.b_break)
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parameter axes a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Eps,
    Sigma,
    D,
    BBreak,
    NPaths,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "eps" => Ok(SweepAxis::Eps),
            "sigma" => Ok(SweepAxis::Sigma),
            "d" => Ok(SweepAxis::D),
            "b_break" => Ok(SweepAxis::BBreak),
            "n_paths" => Ok(SweepAxis::NPaths),
            other => Err(Error::Parameter(format!(
                "unknown sweep axis {other:?} (expected eps, sigma, d, b_break, or n_paths)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Eps => "eps",
            SweepAxis::Sigma => "sigma",
            SweepAxis::D => "d",
            SweepAxis::BBreak => "b_break",
            SweepAxis::NPaths => "n_paths",
        }
    }

    /// Set this axis on a config. Integer axes reject fractional values.
    pub fn apply(&self, config: &mut ExperimentConfig, value: f64) -> Result<()> {
        match self {
            SweepAxis::Eps => config.eps = value,
            SweepAxis::Sigma => config.sigma = value,
            SweepAxis::BBreak => config.b_break = value,
            SweepAxis::D => {
                if value.fract() != 0.0 || value < 2.0 {
                    return Err(Error::Parameter(format!("d must be an integer >= 2, got {value}")));
                }
                config.d = value as usize;
            }
            SweepAxis::NPaths => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::Parameter(format!(
                        "n_paths must be an integer >= 1, got {value}"
                    )));
                }
                config.n_paths = value as usize;
            }
        }
        Ok(())
    }
}

/// Suffix an output path with the sweep coordinate:
/// `rows.csv` + (`sigma`, 0.05) -> `rows_sigma0.05.csv`.
pub fn suffix_path(path: &Path, axis: SweepAxis, value: f64) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str());
    let name = match ext {
        Some(e) => format!("{stem}_{}{value}.{e}", axis.as_str()),
        None => format!("{stem}_{}{value}", axis.as_str()),
    };
    path.with_file_name(name)
}
