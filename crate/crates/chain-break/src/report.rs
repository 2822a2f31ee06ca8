//! Experiment reports: per-path CSV rows and a JSON summary.
//!
//! The CSV schema is fixed: `path_index,tau,link,censored,normalized_tau`,
//! one row per path in path order, numbers in full double precision with
//! locale-independent decimal points. Censored rows (including the rare
//! aborted paths) carry `link = 0` and `normalized_tau = NaN`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub path_index: usize,
    pub tau: f64,
    pub link: usize,
    pub censored: bool,
    pub normalized_tau: Option<f64>,
}

/// A path that left the certified potential domain and was cut short.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeRow {
    pub path_index: usize,
    pub t: f64,
    pub link: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcdfPoint {
    pub r: f64,
    pub empirical: f64,
    pub model: f64,
}

/// The pulling-vs-noise regime quantities of the run (smaller is deeper in
/// the asymptotic regime). `None` when undefined for the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RegimeDiagnostics {
    pub ratio: Option<f64>,
    pub vanish3: Option<f64>,
    pub vanish15: Option<f64>,
    pub vanish1: Option<f64>,
}

/// Aggregated statistics of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub system: String,
    pub potential: String,
    pub d: usize,
    pub eps: f64,
    pub sigma: f64,
    pub b_break: f64,
    pub u_curv: f64,
    /// `None` when `eps = 0` (no forced break time).
    pub t_star: Option<f64>,
    pub horizon: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    pub censored: usize,
    /// Censoring with `eps > 0` and a full horizon contradicts the forced
    /// break bound, so it is flagged rather than silently tolerated.
    pub censored_anomaly: bool,
    pub escaped: Vec<EscapeRow>,
    /// Gumbel parameters `(sqrt(u) a_0, b)` the minimum is tested against,
    /// when the normalisation applies.
    pub gumbel_a_min: Option<f64>,
    pub gumbel_b: Option<f64>,
    /// KS distance of normalised break times against the limiting law.
    pub ks_min: Option<f64>,
    /// Per-link KS distances (marginal hitting times; linear systems only).
    pub ks_links: Vec<Option<f64>>,
    pub position_counts: Vec<u64>,
    pub position_freqs: Vec<f64>,
    pub position_probs_model: Vec<f64>,
    pub position_chisq: Option<f64>,
    pub mean_tau: Option<f64>,
    pub regime: RegimeDiagnostics,
    pub ecdf: Vec<EcdfPoint>,
    /// Coupling diagnostics (coupled runs only).
    pub coupling: Option<CouplingSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub s_star_mean: f64,
    pub s_star_max: f64,
    pub m_star_mean: f64,
    pub m_star_max: f64,
    /// Empirical probability of `S* >= 0.1`.
    pub frac_s_star_ge_0_1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<PathRow>,
    pub summary: ReportSummary,
}

pub const CSV_HEADER: &str = "path_index,tau,link,censored,normalized_tau";

impl ExperimentReport {
    pub fn csv_string(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let norm = match row.normalized_tau {
                Some(v) => format!("{v}"),
                None => "NaN".to_string(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                row.path_index, row.tau, row.link, row.censored, norm
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, self.csv_string())?;
        Ok(())
    }

    pub fn json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.summary)
            .map_err(|e| crate::error::Error::Config(format!("JSON encode error: {e}")))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, self.json_string()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_report() -> ExperimentReport {
        ExperimentReport {
            rows: vec![
                PathRow {
                    path_index: 0,
                    tau: 12.5,
                    link: 2,
                    censored: false,
                    normalized_tau: Some(0.75),
                },
                PathRow {
                    path_index: 1,
                    tau: 20.0,
                    link: 0,
                    censored: true,
                    normalized_tau: None,
                },
            ],
            summary: ReportSummary {
                system: "linear-constant".into(),
                potential: "quadratic:u=1".into(),
                d: 3,
                eps: 1e-3,
                sigma: 0.05,
                b_break: 2.0,
                u_curv: 1.0,
                t_star: Some(3000.0),
                horizon: 20.0,
                n_paths: 2,
                master_seed: 42,
                censored: 1,
                censored_anomaly: false,
                escaped: vec![],
                gumbel_a_min: Some(4.145929793656026),
                gumbel_b: Some(0.8164965809277261),
                ks_min: Some(0.5),
                ks_links: vec![Some(0.5), None, None],
                position_counts: vec![0, 1, 0],
                position_freqs: vec![0.0, 1.0, 0.0],
                position_probs_model: vec![0.25, 0.5, 0.25],
                position_chisq: Some(1.0),
                mean_tau: Some(12.5),
                regime: RegimeDiagnostics {
                    ratio: Some(50.0),
                    vanish3: Some(0.824),
                    vanish15: Some(0.045),
                    vanish1: Some(0.017),
                },
                ecdf: vec![EcdfPoint { r: 0.75, empirical: 1.0, model: 0.9 }],
                coupling: None,
            },
        }
    }

    #[test]
    fn csv_schema_is_stable() {
        let report = tiny_report();
        let csv = report.csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "path_index,tau,link,censored,normalized_tau");
        assert_eq!(lines.next().unwrap(), "0,12.5,2,false,0.75");
        assert_eq!(lines.next().unwrap(), "1,20,0,true,NaN");
        assert!(lines.next().is_none());
    }

    #[test]
    fn json_summary_round_trips() {
        let report = tiny_report();
        let text = report.json_string().unwrap();
        let back: ReportSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report.summary);
    }
}
