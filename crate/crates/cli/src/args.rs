//! Command-line syntax.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ramdp_core::environments::EnvSpec;
use ramdp_core::planners::PlannerKind;
use ramdp_core::simulation::NatureKind;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ramdp",
    version,
    about = "Robust active-measuring planners and experiments"
)]
pub struct Cli {
    /// Base seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Episodes per planner and sweep point; overrides the config file.
    #[arg(long, global = true)]
    pub episodes: Option<usize>,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a parameter sweep from a TOML config and write CSV.
    Run {
        config: PathBuf,
        /// Output path; overrides the config file. `-` writes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print reference values and check planners against them.
    Oracle(OracleArgs),
    /// Build an environment and save it as a JSON model file.
    ExportModel {
        env: EnvName,
        #[command(flatten)]
        params: EnvParams,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleTarget {
    Ab,
    LuckyUnlucky,
    BeliefDep,
    Bound,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub target: OracleTarget,
    /// Environment for the bound check.
    #[arg(long, default_value = "snakemaze")]
    pub env: EnvName,
    #[command(flatten)]
    pub params: EnvParams,
    /// Probability mass on `s0` for the belief-dependent example.
    #[arg(long, default_value_t = 0.2)]
    pub b0: f64,
    /// Lenient planners for the bound check (default: all three).
    #[arg(long = "planner")]
    pub planners: Vec<PlannerKind>,
    #[arg(long, value_enum, default_value = "rmdp-worst")]
    pub nature: NatureArg,
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NatureArg {
    RmdpWorst,
    Average,
}

impl From<NatureArg> for NatureKind {
    fn from(n: NatureArg) -> Self {
        match n {
            NatureArg::RmdpWorst => NatureKind::RmdpWorst,
            NatureArg::Average => NatureKind::Average,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnvName {
    Ab,
    LuckyUnlucky,
    BeliefDep,
    Snakemaze,
    Drone,
}

/// Environment parameters; unset ones keep their defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct EnvParams {
    /// Measuring cost.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub pmax: Option<f64>,
    #[arg(long)]
    pub reward_scale: Option<f64>,
    /// Confidence level of the interval model.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub step_penalty: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

fn unused(env: EnvName, flag: &str) -> CliError {
    CliError::Config(format!("--{flag} does not apply to {env:?}"))
}

impl EnvParams {
    pub fn spec(&self, env: EnvName) -> Result<EnvSpec, CliError> {
        let kind = match env {
            EnvName::Ab => "ab",
            EnvName::LuckyUnlucky => "lucky_unlucky",
            EnvName::BeliefDep => "belief_dep",
            EnvName::Snakemaze => "snakemaze",
            EnvName::Drone => "drone",
        };
        let mut spec: EnvSpec = toml::from_str(&format!("kind = \"{kind}\""))
            .map_err(|e| CliError::Config(e.to_string()))?;
        let set = |spec: &mut EnvSpec, name: &str, v: Option<f64>| -> Result<(), CliError> {
            match v {
                Some(v) => spec
                    .set_param(name, v)
                    .map_err(|_| unused(env, &name.replace('_', ""))),
                None => Ok(()),
            }
        };
        set(&mut spec, "c", self.c)?;
        set(&mut spec, "p_max", self.pmax)?;
        set(&mut spec, "alpha", self.alpha)?;
        match &mut spec {
            EnvSpec::LuckyUnlucky { reward_scale, .. } => {
                if let Some(r) = self.reward_scale {
                    *reward_scale = r;
                }
            }
            _ if self.reward_scale.is_some() => return Err(unused(env, "reward-scale")),
            _ => {}
        }
        match &mut spec {
            EnvSpec::Snakemaze {
                width,
                height,
                step_penalty,
                gamma,
                ..
            } => {
                *width = self.width.unwrap_or(*width);
                *height = self.height.unwrap_or(*height);
                *step_penalty = self.step_penalty.unwrap_or(*step_penalty);
                *gamma = self.gamma.unwrap_or(*gamma);
            }
            EnvSpec::Drone {
                step_penalty,
                gamma,
                ..
            } => {
                if self.width.is_some() || self.height.is_some() {
                    return Err(unused(env, "width/--height"));
                }
                *step_penalty = self.step_penalty.unwrap_or(*step_penalty);
                *gamma = self.gamma.unwrap_or(*gamma);
            }
            _ => {
                if self.width.is_some()
                    || self.height.is_some()
                    || self.step_penalty.is_some()
                    || self.gamma.is_some()
                {
                    return Err(unused(env, "width/--height/--step-penalty/--gamma"));
                }
            }
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let spec = EnvParams {
            alpha: Some(0.6),
            width: Some(2),
            ..Default::default()
        }
        .spec(EnvName::Snakemaze)
        .unwrap();
        match spec {
            EnvSpec::Snakemaze {
                width,
                height,
                alpha,
                ..
            } => assert_eq!((width, height, alpha), (2, 10, 0.6)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_foreign_parameters() {
        let p = EnvParams {
            pmax: Some(0.5),
            ..Default::default()
        };
        assert!(p.spec(EnvName::Ab).is_err());
        assert!(p.spec(EnvName::LuckyUnlucky).is_ok());
    }
}
