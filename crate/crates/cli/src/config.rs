//! Experiment configuration files.

use std::path::{Path, PathBuf};

use ramdp_core::environments::EnvSpec;
use ramdp_core::planners::{MlMvMode, PlannerConfig, PlannerKind, TieBreak};
use ramdp_core::simulation::NatureKind;
use ramdp_core::solvers::SolveOptions;
use serde::Deserialize;

use crate::CliError;

/// `start, start + step, ...` up to and including `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// `c`, `p_max` or `alpha`.
    pub param: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<SweepRange>,
    /// Plan at this confidence level while nature uses the swept one.
    #[serde(default)]
    pub planning_alpha: Option<f64>,
}

impl Sweep {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let values = match (&self.values, &self.range) {
            (Some(v), None) => v.clone(),
            (None, Some(r)) => {
                if !(r.step > 0.0) || r.stop < r.start {
                    return Err(CliError::Config(format!(
                        "sweep range needs step > 0 and stop >= start, got {r:?}"
                    )));
                }
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                (0..=n)
                    .map(|k| ((r.start + k as f64 * r.step) * 1e12).round() / 1e12)
                    .collect()
            }
            _ => {
                return Err(CliError::Config(
                    "sweep needs exactly one of `values` or `range`".into(),
                ))
            }
        };
        if values.is_empty() {
            return Err(CliError::Config("sweep has no values".into()));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CliError::Config(
                "sweep values must be strictly increasing".into(),
            ));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    SolveOptions::default().tol
}
fn default_max_iter() -> usize {
    SolveOptions::default().max_iter
}
fn default_episodes() -> usize {
    100
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

/// One sweep over one environment parameter.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub env: EnvSpec,
    pub sweep: Sweep,
    pub planners: Vec<PlannerKind>,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Defaults to the environment's own episode cap.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub nature: NatureKind,
    #[serde(default)]
    pub tie_break: TieBreak,
    #[serde(default)]
    pub ml_mv_mode: MlMvMode,
    #[serde(default)]
    pub solver: SolverConfig,
    /// CSV destination, relative to the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let values = self.sweep.points()?;
        if self.episodes == 0 {
            return Err(CliError::Config("episodes must be at least 1".into()));
        }
        if self.planners.is_empty() {
            return Err(CliError::Config("no planners listed".into()));
        }
        if self.horizon == Some(0) {
            return Err(CliError::Config("horizon must be positive".into()));
        }
        if self.nature == NatureKind::Point {
            return Err(CliError::Config(
                "nature must be `rmdp-worst` or `average`".into(),
            ));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(CliError::Config(
                "solver needs tol > 0 and max_iter > 0".into(),
            ));
        }
        let mut probe = self.env.clone();
        for v in values {
            probe
                .set_param(&self.sweep.param, v)
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(a) = self.sweep.planning_alpha {
            if self.sweep.param != "alpha" {
                return Err(CliError::Config(
                    "planning_alpha needs an alpha sweep".into(),
                ));
            }
            if !(a > 0.0 && a <= 1.0) {
                return Err(CliError::Config(format!(
                    "planning_alpha must lie in (0, 1], got {a}"
                )));
            }
        }
        Ok(())
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    pub fn planner_configs(&self) -> Vec<PlannerConfig> {
        self.planners
            .iter()
            .map(|&kind| PlannerConfig {
                kind,
                tie_break: self.tie_break,
                ml_mv_mode: self.ml_mv_mode,
            })
            .collect()
    }
}
