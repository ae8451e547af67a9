//! Brute-force references for checking the planners.

mod exact;
pub mod vertices;

use std::fmt;

use serde::Serialize;

pub use exact::{
    exact_finite_horizon_value, OracleOptions, OracleResult, PolicyNode, ORACLE_TIE_TOL,
};

use crate::planners::Planner;
use crate::simulation::{run_episodes, EpisodeOptions, MeanCi, NatureModel};
use crate::{Error, Result};

/// Largest measuring cost at which measuring is optimal in the a-b example.
pub fn ab_optimal_threshold() -> f64 {
    0.8 * (1.0 - 1.0 / 1.8)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LuckyUnluckyOptimum {
    pub measure: bool,
    pub value: f64,
}

/// Closed-form optimum of the lucky-unlucky example with its unit reward
/// scale: gamble blind (`1 - 2p`), play safe (`0`), or measure first
/// (`1 - p - c`). Measuring wins ties within [`ORACLE_TIE_TOL`].
pub fn lucky_unlucky_optimal(p_max: f64, c: f64) -> Result<LuckyUnluckyOptimum> {
    if !(0.0..=1.0).contains(&p_max) || !(c.is_finite() && c >= 0.0) {
        return Err(Error::Domain(format!(
            "invalid parameters p_max={p_max}, c={c}"
        )));
    }
    let blind = f64::max(1.0 - 2.0 * p_max, 0.0);
    let measured = 1.0 - p_max - c;
    let measure = measured >= blind - ORACLE_TIE_TOL;
    Ok(LuckyUnluckyOptimum {
        measure,
        value: measured.max(blind),
    })
}

/// Paired Monte Carlo comparison of a robust planner and a lenient one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub base_planner: String,
    pub ml_planner: String,
    pub episodes: usize,
    /// Mean and half-width of `base - ml` scalarized returns.
    pub difference: MeanCi,
    pub bound: f64,
    /// `bound + ci - mean`; nonnegative when the check passes.
    pub margin: f64,
    pub pass: bool,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "base planner:   {}", self.base_planner)?;
        writeln!(f, "ml planner:     {}", self.ml_planner)?;
        writeln!(f, "episodes:       {}", self.episodes)?;
        writeln!(
            f,
            "difference:     {:.6} +/- {:.6}",
            self.difference.mean, self.difference.ci
        )?;
        writeln!(f, "bound:          {:.6}", self.bound)?;
        writeln!(f, "margin:         {:.6}", self.margin)?;
        write!(
            f,
            "result:         {}",
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Worst-case extra measuring cost of a lenient policy: `c / (1 - gamma)`,
/// or `c * horizon` without discounting.
pub fn leniency_bound(c: f64, gamma: f64, horizon: usize) -> Result<f64> {
    if gamma < 1.0 {
        Ok(c / (1.0 - gamma))
    } else if horizon < usize::MAX {
        Ok(c * horizon as f64)
    } else {
        Err(Error::Domain(
            "undiscounted bound needs a finite horizon".into(),
        ))
    }
}

/// Estimates `V(base) - V(ml)` on shared seeds and checks it against
/// [`leniency_bound`] after subtracting the 95% half-width.
pub fn leniency_bound_check(
    base: &Planner,
    ml: &Planner,
    nature: &NatureModel,
    n_episodes: usize,
    seed: u64,
    horizon: usize,
) -> Result<BoundReport> {
    let m = base.model();
    let bound = leniency_bound(m.measure_cost(), m.discount(), horizon)?;
    let opts = EpisodeOptions {
        horizon,
        record_trace: false,
    };
    let a = run_episodes(base, nature, n_episodes, seed, &opts)?;
    let b = run_episodes(ml, nature, n_episodes, seed, &opts)?;
    let diffs: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| x.scalarized_return - y.scalarized_return)
        .collect();
    let difference = MeanCi::of(&diffs);
    let margin = bound + difference.ci - difference.mean;
    Ok(BoundReport {
        base_planner: base.config().kind.name().to_string(),
        ml_planner: ml.config().kind.name().to_string(),
        episodes: n_episodes,
        difference,
        bound,
        margin,
        pass: margin >= 0.0,
    })
}
