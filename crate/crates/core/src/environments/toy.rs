//! Two-step toy environments with a single uncertain branching.

use crate::model::{ControlActionId, ProbInterval, RamMdp, RamMdpBuilder, StateId, UncertainRow};
use crate::{Error, Result};

pub const S0: StateId = StateId(0);
pub const S_MINUS: StateId = StateId(1);
pub const S_PLUS: StateId = StateId(2);
pub const TERMINAL: StateId = StateId(3);
pub const ACTION_A: ControlActionId = ControlActionId(0);
pub const ACTION_B: ControlActionId = ControlActionId(1);

fn check_cost(c: f64) -> Result<()> {
    if c.is_finite() && c >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "measuring cost must be nonnegative, got {c}"
        )))
    }
}

/// Shared layout: `s0` branches to `s-` or `s+`, both of which end after one
/// more action.
fn branching(row: UncertainRow, c: f64) -> RamMdpBuilder {
    let mut b = RamMdpBuilder::new(4, 2)
        .measure_cost(c)
        .discount(1.0)
        .initial_state(S0);
    b.set_row_all_actions(S0, &row);
    for s in [S_MINUS, S_PLUS] {
        b.set_row_all_actions(s, &UncertainRow::deterministic(TERMINAL));
    }
    b.set_terminal(TERMINAL);
    b
}

/// `s0` reaches `s-` or `s+` with fully unknown probabilities. In `s-`
/// action a pays 0.8; in `s+` action b pays 1.
pub fn build_ab(c: f64) -> Result<RamMdp> {
    check_cost(c)?;
    let row = UncertainRow::new(vec![
        (S_MINUS, ProbInterval::new(0.0, 1.0)),
        (S_PLUS, ProbInterval::new(0.0, 1.0)),
    ]);
    let mut b = branching(row, c);
    b.set_reward(S_MINUS, ACTION_A, 0.8);
    b.set_reward(S_PLUS, ACTION_B, 1.0);
    b.build_validated()
}

/// `s0` reaches `s-` with probability in `[0, p_max]`. Action a is a gamble:
/// `-scale` in `s-`, `+scale` in `s+`; action b pays 0 everywhere.
pub fn build_lucky_unlucky(p_max: f64, c: f64, reward_scale: f64) -> Result<RamMdp> {
    check_cost(c)?;
    if !(0.0..=1.0).contains(&p_max) {
        return Err(Error::Domain(format!(
            "p_max must lie in [0, 1], got {p_max}"
        )));
    }
    if !reward_scale.is_finite() {
        return Err(Error::Domain("reward scale must be finite".into()));
    }
    let mut entries = Vec::with_capacity(2);
    if p_max > 0.0 {
        entries.push((S_MINUS, ProbInterval::new(0.0, p_max)));
    }
    entries.push((S_PLUS, ProbInterval::new(1.0 - p_max, 1.0)));
    let mut b = branching(UncertainRow::new(entries), c);
    b.set_reward(S_MINUS, ACTION_A, -reward_scale);
    b.set_reward(S_PLUS, ACTION_A, reward_scale);
    b.build_validated()
}

pub mod belief_dep {
    use super::*;

    pub const S0: StateId = StateId(0);
    pub const S1: StateId = StateId(1);
    pub const S_MINUS: StateId = StateId(2);
    pub const S_PLUS: StateId = StateId(3);
    pub const TERMINAL: StateId = StateId(4);
}

/// Two start states: from `s0` the agent surely lands in `s-`, from `s1` in
/// `s-` or `s+` with unknown probabilities. Action a pays 1 in `s-`, action b
/// pays 1 in `s+`. The worst case for `s1` depends on the agent's belief.
pub fn build_belief_dep(c: f64) -> Result<RamMdp> {
    use belief_dep::*;
    check_cost(c)?;
    let mut b = RamMdpBuilder::new(5, 2)
        .measure_cost(c)
        .discount(1.0)
        .initial_state(S0);
    b.set_row_all_actions(S0, &UncertainRow::deterministic(S_MINUS));
    b.set_row_all_actions(
        S1,
        &UncertainRow::new(vec![
            (S_MINUS, ProbInterval::new(0.0, 1.0)),
            (S_PLUS, ProbInterval::new(0.0, 1.0)),
        ]),
    );
    for s in [S_MINUS, S_PLUS] {
        b.set_row_all_actions(s, &UncertainRow::deterministic(TERMINAL));
    }
    b.set_reward(S_MINUS, ACTION_A, 1.0);
    b.set_reward(S_PLUS, ACTION_B, 1.0);
    b.set_terminal(TERMINAL);
    b.build_validated()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{value_iteration, Backup, SolveOptions};

    #[test]
    fn ab_robust_values() {
        let m = build_ab(0.3).unwrap();
        let q = value_iteration(&m, Backup::Robust, &SolveOptions::default())
            .unwrap()
            .q;
        assert_eq!(q.value(S_MINUS), 0.8);
        assert_eq!(q.value(S_PLUS), 1.0);
        // nature routes everything to the lower-valued branch
        assert!((q.get(S0, ACTION_A) - 0.8).abs() < 1e-12);
        assert_eq!(q.value(TERMINAL), 0.0);
    }

    #[test]
    fn lucky_unlucky_rows_are_feasible_at_extremes() {
        for p in [0.0, 0.3, 1.0] {
            let m = build_lucky_unlucky(p, 0.2, 1.0).unwrap();
            let row = m.row(S0, ACTION_A);
            assert!(row.sum_lo() <= 1.0 + 1e-12 && row.sum_hi() >= 1.0 - 1e-12);
        }
        assert!(build_lucky_unlucky(1.5, 0.2, 1.0).is_err());
        assert!(build_ab(-0.1).is_err());
    }

    #[test]
    fn belief_dep_shape() {
        let m = build_belief_dep(0.0).unwrap();
        assert_eq!(m.num_states(), 5);
        assert_eq!(m.row(belief_dep::S0, ACTION_B).len(), 1);
    }
}
