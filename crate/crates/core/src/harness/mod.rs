//! Seeded experiment pipelines.
//!
//! Three families are supported:
//!
//! * `pij`: ensemble mean adjacency of synthesized graphs against the model
//!   edge probabilities;
//! * `cp`: exact control power of test networks against the BA and GMG
//!   closed-form estimates;
//! * `strategy`: exact control power of the top-degree and top-ξ control
//!   sets on the same networks and belief draws.
//!
//! Every random quantity is drawn from a seed derived from the master seed
//! and the identity of the cell, network and trial, so a report is a pure
//! function of the configuration, the master seed and the library version.
//! Wall-clock time is returned separately and never enters the report.

mod networks;
mod output;
mod pij;

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alpha::{AlphaGrid, Method};
use crate::error::{Error, Result};
use crate::estimators::Model;

pub use networks::{run_cp_experiment, run_strategy_experiment, CellAlpha, CpRecord, StrategyRecord};
pub use output::{read_report, write_report, Aggregate};
pub use pij::{run_pij_experiment, PijCell};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(alias = "pij_verification")]
    Pij,
    #[serde(alias = "cp_estimation")]
    Cp,
    #[serde(alias = "strategy_comparison")]
    Strategy,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pij" | "pij_verification" => Ok(Family::Pij),
            "cp" | "cp_estimation" => Ok(Family::Cp),
            "strategy" | "strategy_comparison" => Ok(Family::Strategy),
            other => Err(Error::Config(format!("unknown experiment family {other:?}"))),
        }
    }
}

/// Graphs grown by one of the generators, one cell per (m, α).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSource {
    pub model: Model,
    pub n: usize,
    pub m_values: Vec<usize>,
    /// Generator α values (GMG only).
    #[serde(default)]
    pub alpha_values: Vec<f64>,
}

/// Networks snowball-sampled from edge-list files, one cell per file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeListSource {
    pub paths: Vec<PathBuf>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SyntheticSource),
    EdgeLists(EdgeListSource),
}

/// How the GMG estimator's α is learned when it is not given directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaLearning {
    pub method: Method,
    #[serde(default)]
    pub grid: AlphaGrid,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Training networks per cell, drawn independently of the test networks.
    #[serde(default = "default_training")]
    pub training_networks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub source: DataSource,
    /// Graphs per cell (ensemble size for `pij`, test networks otherwise).
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    /// Private-belief draws per network.
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_fraction")]
    pub control_fraction: f64,
    #[serde(default)]
    pub master_seed: u64,
    /// Fixed α for the GMG estimator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_learning: Option<AlphaLearning>,
}

fn default_samples() -> usize {
    50
}
fn default_sample_size() -> usize {
    100
}
fn default_realizations() -> usize {
    1000
}
fn default_trials() -> usize {
    100
}
fn default_training() -> usize {
    25
}
fn default_fraction() -> f64 {
    0.05
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 || self.trials == 0 {
            return Err(Error::Config("realizations and trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.control_fraction) {
            return Err(Error::Config(format!(
                "control fraction {} outside [0, 1]",
                self.control_fraction
            )));
        }
        if let Some(alpha) = self.alpha {
            if !alpha.is_finite() {
                return Err(Error::Config("alpha must be finite".into()));
            }
        }
        if let Some(learning) = &self.alpha_learning {
            learning.grid.validate()?;
            if learning.trials == 0 || learning.training_networks == 0 {
                return Err(Error::Config("alpha learning needs at least one trial and network".into()));
            }
        }
        match &self.source {
            DataSource::Synthetic(s) => {
                if s.m_values.is_empty() {
                    return Err(Error::Config("m_values is empty".into()));
                }
                if s.model == Model::Gmg && s.alpha_values.is_empty() {
                    return Err(Error::Config("GMG synthesis needs alpha_values".into()));
                }
                if s.alpha_values.iter().any(|a| !a.is_finite()) {
                    return Err(Error::Config("alpha_values must be finite".into()));
                }
                for &m in &s.m_values {
                    crate::synthesis::SynthesisConfig::new(s.n, m, 0.0, 0).validate()?;
                }
            }
            DataSource::EdgeLists(e) => {
                if self.family == Family::Pij {
                    return Err(Error::Config("the pij family needs a synthetic source".into()));
                }
                if e.paths.is_empty() || e.samples == 0 || e.sample_size < 2 {
                    return Err(Error::Config("edge-list source needs paths, samples ≥ 1 and sample_size ≥ 2".into()));
                }
            }
        }
        if self.family != Family::Pij && self.alpha.is_none() && self.alpha_learning.is_none() {
            return Err(Error::Config("the GMG estimator needs either alpha or alpha_learning".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Results {
    Pij {
        cells: Vec<PijCell>,
        /// Over cells, of `l1_error`.
        l1_error: Aggregate,
    },
    Cp {
        alphas: Vec<CellAlpha>,
        networks: Vec<CpRecord>,
        ba_error: Aggregate,
        /// Over networks whose GMG series converges.
        gmg_error: Aggregate,
        gmg_excluded: usize,
        /// Fraction of all networks where the GMG error is at most the BA error;
        /// excluded networks count as losses.
        gmg_win_rate: f64,
    },
    Strategy {
        alphas: Vec<CellAlpha>,
        networks: Vec<StrategyRecord>,
        ba_cp: Aggregate,
        gmg_cp: Aggregate,
        /// Fraction of networks where the top-ξ set's exact cp is at least the top-degree set's.
        gmg_win_rate: f64,
        identical_sets: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub results: Results,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

/// Run the family named in the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config.family {
        Family::Pij => run_pij_experiment(config),
        Family::Cp => run_cp_experiment(config),
        Family::Strategy => run_strategy_experiment(config),
    }
}

pub fn run_timed(config: &ExperimentConfig) -> Result<(ExperimentReport, Timing)> {
    let start = Instant::now();
    let report = run_experiment(config)?;
    Ok((
        report,
        Timing {
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

fn report(config: &ExperimentConfig, results: Results) -> ExperimentReport {
    ExperimentReport {
        version: VERSION.to_string(),
        master_seed: config.master_seed,
        config: config.clone(),
        results,
    }
}

/// Seed-path tags, one per kind of random draw.
mod tag {
    pub const ENSEMBLE: u64 = 1;
    pub const TEST: u64 = 2;
    pub const TRAIN: u64 = 3;
    pub const BELIEFS: u64 = 4;
    pub const LEARN: u64 = 5;
    pub const SNOWBALL: u64 = 6;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(family: Family) -> ExperimentConfig {
        ExperimentConfig {
            family,
            source: DataSource::Synthetic(SyntheticSource {
                model: Model::Gmg,
                n: 30,
                m_values: vec![2],
                alpha_values: vec![1.0],
            }),
            realizations: 4,
            trials: 5,
            control_fraction: 0.1,
            master_seed: 7,
            alpha: Some(1.0),
            alpha_learning: None,
        }
    }

    #[test]
    fn config_json_defaults_and_aliases() {
        let cfg = ExperimentConfig::from_json(
            r#"{"family": "cp_estimation",
                "source": {"synthetic": {"model": "ba", "n": 100, "m_values": [3]}},
                "alpha": 0.5}"#,
        )
        .unwrap();
        assert_eq!(cfg.family, Family::Cp);
        assert_eq!(cfg.realizations, 1000);
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.control_fraction, 0.05);
        cfg.validate().unwrap();
        assert!(ExperimentConfig::from_json(r#"{"family": "nope"}"#).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = synthetic(Family::Cp);
        cfg.validate().unwrap();
        cfg.alpha = None;
        assert!(cfg.validate().is_err());
        let mut cfg = synthetic(Family::Pij);
        cfg.realizations = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = synthetic(Family::Pij);
        cfg.source = DataSource::EdgeLists(EdgeListSource {
            paths: vec!["x.txt".into()],
            samples: 2,
            sample_size: 10,
        });
        assert!(cfg.validate().is_err());
        let mut cfg = synthetic(Family::Pij);
        if let DataSource::Synthetic(s) = &mut cfg.source {
            s.m_values = vec![30];
        }
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn every_family_is_deterministic_and_round_trips() {
        for family in [Family::Pij, Family::Cp, Family::Strategy] {
            let cfg = synthetic(family);
            let a = run_experiment(&cfg).unwrap();
            let b = run_experiment(&cfg).unwrap();
            let text = serde_json::to_string_pretty(&a).unwrap();
            assert_eq!(text, serde_json::to_string_pretty(&b).unwrap());
            let back: ExperimentReport = serde_json::from_str(&text).unwrap();
            assert_eq!(back, a);
        }
    }
}
