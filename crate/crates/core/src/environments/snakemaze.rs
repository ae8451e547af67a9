//! A snaking corridor flattened into a path of cells.
//!
//! Cells are numbered along the corridor from the start (0) to the goal
//! (`N - 1`). Movement distances apply along the path and overshoot clamps at
//! both ends.

use crate::model::{
    intervals_from_confidence, ConfidenceSpec, ControlActionId, PointModel, PointModelBuilder,
    RamMdp, StateId,
};
use crate::{Error, Result};

pub const SAFE_FORWARD: ControlActionId = ControlActionId(0);
pub const SAFE_BACKWARD: ControlActionId = ControlActionId(1);
pub const RISKY_FORWARD: ControlActionId = ControlActionId(2);
pub const RISKY_BACKWARD: ControlActionId = ControlActionId(3);

const SAFE_MOVES: [(i64, f64); 2] = [(1, 0.5), (2, 0.5)];
const RISKY_MOVES: [(i64, f64); 2] = [(3, 0.6), (0, 0.4)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnakemazeParams {
    pub width: usize,
    pub height: usize,
    pub alpha: f64,
    pub c: f64,
    pub step_penalty: f64,
    pub gamma: f64,
}

impl Default for SnakemazeParams {
    fn default() -> Self {
        Self {
            width: 10,
            height: 10,
            alpha: 1.0,
            c: 0.01,
            step_penalty: 0.01,
            gamma: 0.95,
        }
    }
}

impl SnakemazeParams {
    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn goal(&self) -> StateId {
        StateId::from(self.num_cells() - 1)
    }

    pub fn terminal(&self) -> StateId {
        StateId::from(self.num_cells())
    }
}

/// The model without transition uncertainty.
pub fn snakemaze_base(p: &SnakemazeParams) -> Result<PointModel> {
    let n = p.num_cells();
    if n < 2 {
        return Err(Error::Domain(format!(
            "snakemaze needs at least 2 cells, got {}x{}",
            p.width, p.height
        )));
    }
    if !(p.c.is_finite() && p.c >= 0.0) {
        return Err(Error::Domain(format!(
            "measuring cost must be nonnegative, got {}",
            p.c
        )));
    }
    if !(p.gamma > 0.0 && p.gamma <= 1.0) {
        return Err(Error::Domain(format!(
            "discount must lie in (0, 1], got {}",
            p.gamma
        )));
    }
    let mut b = PointModelBuilder::new(n + 1, 4)
        .measure_cost(p.c)
        .discount(p.gamma)
        .initial_state(StateId(0));
    let last = (n - 1) as i64;
    for cell in 0..n {
        let s = StateId::from(cell);
        if cell == n - 1 {
            for a in 0..4u32 {
                b.set_row(s, ControlActionId(a), vec![(p.terminal(), 1.0)]);
                b.set_reward(s, ControlActionId(a), 1.0);
            }
            continue;
        }
        for (action, moves, dir) in [
            (SAFE_FORWARD, &SAFE_MOVES, 1),
            (SAFE_BACKWARD, &SAFE_MOVES, -1),
            (RISKY_FORWARD, &RISKY_MOVES, 1),
            (RISKY_BACKWARD, &RISKY_MOVES, -1),
        ] {
            let dist = moves
                .iter()
                .map(|&(d, prob)| {
                    let to = (cell as i64 + dir * d).clamp(0, last);
                    (StateId::from(to as usize), prob)
                })
                .collect();
            b.set_row(s, action, dist);
            b.set_reward(s, action, -p.step_penalty);
        }
    }
    b.set_terminal(p.terminal());
    Ok(b.build())
}

/// Path cells plus one terminal state; intervals `[0, min(p / alpha, 1)]`.
pub fn build_snakemaze(p: &SnakemazeParams) -> Result<RamMdp> {
    let base = snakemaze_base(p)?;
    intervals_from_confidence(ConfidenceSpec {
        base_model: &base,
        alpha: p.alpha,
    })
}
