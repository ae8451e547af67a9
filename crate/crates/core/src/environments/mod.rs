//! Benchmark environments.

pub mod drone;
pub mod snakemaze;
pub mod toy;

use serde::{Deserialize, Serialize};

use crate::model::RamMdp;
use crate::{Error, Result};

pub use drone::{build_drone, DroneParams};
pub use snakemaze::{build_snakemaze, snakemaze_base, SnakemazeParams};
pub use toy::{build_ab, build_belief_dep, build_lucky_unlucky};

fn one() -> f64 {
    1.0
}
fn default_side() -> usize {
    10
}
fn default_penalty() -> f64 {
    0.01
}
fn default_gamma() -> f64 {
    0.95
}

/// A named environment and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Ab {
        #[serde(default)]
        c: f64,
    },
    LuckyUnlucky {
        #[serde(default = "one")]
        p_max: f64,
        #[serde(default)]
        c: f64,
        #[serde(default = "one")]
        reward_scale: f64,
    },
    BeliefDep {
        #[serde(default)]
        c: f64,
    },
    Snakemaze {
        #[serde(default = "default_side")]
        width: usize,
        #[serde(default = "default_side")]
        height: usize,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "default_penalty")]
        c: f64,
        #[serde(default = "default_penalty")]
        step_penalty: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Drone {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "default_penalty")]
        c: f64,
        #[serde(default = "default_penalty")]
        step_penalty: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
}

impl EnvSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Ab { .. } => "ab",
            EnvSpec::LuckyUnlucky { .. } => "lucky_unlucky",
            EnvSpec::BeliefDep { .. } => "belief_dep",
            EnvSpec::Snakemaze { .. } => "snakemaze",
            EnvSpec::Drone { .. } => "drone",
        }
    }

    /// Default episode length cap.
    pub fn default_horizon(&self) -> usize {
        match self {
            EnvSpec::Ab { .. } | EnvSpec::LuckyUnlucky { .. } | EnvSpec::BeliefDep { .. } => 2,
            EnvSpec::Snakemaze { .. } | EnvSpec::Drone { .. } => 100,
        }
    }

    pub fn build(&self) -> Result<RamMdp> {
        match *self {
            EnvSpec::Ab { c } => build_ab(c),
            EnvSpec::LuckyUnlucky {
                p_max,
                c,
                reward_scale,
            } => build_lucky_unlucky(p_max, c, reward_scale),
            EnvSpec::BeliefDep { c } => build_belief_dep(c),
            EnvSpec::Snakemaze {
                width,
                height,
                alpha,
                c,
                step_penalty,
                gamma,
            } => build_snakemaze(&SnakemazeParams {
                width,
                height,
                alpha,
                c,
                step_penalty,
                gamma,
            }),
            EnvSpec::Drone {
                alpha,
                c,
                step_penalty,
                gamma,
            } => build_drone(&DroneParams {
                alpha,
                c,
                step_penalty,
                gamma,
            }),
        }
    }

    pub fn measure_cost(&self) -> f64 {
        match *self {
            EnvSpec::Ab { c }
            | EnvSpec::LuckyUnlucky { c, .. }
            | EnvSpec::BeliefDep { c }
            | EnvSpec::Snakemaze { c, .. }
            | EnvSpec::Drone { c, .. } => c,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            EnvSpec::Snakemaze { alpha, .. } | EnvSpec::Drone { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Sets a sweepable parameter (`c`, `p_max` or `alpha`).
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match (self, name) {
            (EnvSpec::Ab { c }, "c")
            | (EnvSpec::LuckyUnlucky { c, .. }, "c")
            | (EnvSpec::BeliefDep { c }, "c")
            | (EnvSpec::Snakemaze { c, .. }, "c")
            | (EnvSpec::Drone { c, .. }, "c") => c,
            (EnvSpec::LuckyUnlucky { p_max, .. }, "p_max") => p_max,
            (EnvSpec::Snakemaze { alpha, .. }, "alpha")
            | (EnvSpec::Drone { alpha, .. }, "alpha") => alpha,
            (env, _) => {
                return Err(Error::Domain(format!(
                    "environment {} has no sweepable parameter {name}",
                    env.name()
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_small_environment_validates() {
        let specs = [
            EnvSpec::Ab { c: 0.3 },
            EnvSpec::LuckyUnlucky {
                p_max: 0.6,
                c: 0.2,
                reward_scale: 1.0,
            },
            EnvSpec::BeliefDep { c: 0.0 },
            EnvSpec::Snakemaze {
                width: 2,
                height: 5,
                alpha: 0.6,
                c: 0.01,
                step_penalty: 0.01,
                gamma: 0.95,
            },
        ];
        for spec in specs {
            let m = spec.build().unwrap();
            assert!(m.validate().is_ok(), "{}", spec.name());
        }
    }

    #[test]
    fn toml_style_specs_fill_defaults() {
        let spec: EnvSpec = serde_json::from_str(r#"{"kind": "snakemaze", "alpha": 0.6}"#).unwrap();
        assert_eq!(
            spec,
            EnvSpec::Snakemaze {
                width: 10,
                height: 10,
                alpha: 0.6,
                c: 0.01,
                step_penalty: 0.01,
                gamma: 0.95
            }
        );
        assert!(serde_json::from_str::<EnvSpec>(r#"{"kind": "ab", "p_max": 1}"#).is_err());
    }

    #[test]
    fn set_param_rejects_unknown_names() {
        let mut spec = EnvSpec::Ab { c: 0.0 };
        spec.set_param("c", 0.25).unwrap();
        assert_eq!(spec.measure_cost(), 0.25);
        assert!(spec.set_param("alpha", 0.5).is_err());
    }
}
