//! Belief-dependent worst case for a step taken without measuring.
//!
//! Without a measurement the agent picks its next action from the joint next
//! belief, so nature chooses all support rows together. The game
//!
//! `min_P max_j sum_s b(s) sum_s' P_s(s') Q(s', j)`
//!
//! is bilinear, so it equals `max_sigma min_P` over mixed responses `sigma`.
//! For fixed `sigma` the inner minimum splits into one greedy interval problem
//! per support state. The solver alternates between a restricted matrix game
//! over nature's discovered vertices and nature's greedy best response to the
//! agent's optimal mixture, stopping once no vertex improves on the
//! restricted value.

use serde::{Deserialize, Serialize};

use super::inner::{greedy_fill, Direction, WorstCaseRow};
use super::matrix_game::solve_min_max;
use super::value_iteration::QTable;
use crate::model::{Belief, ControlActionId, RamMdp, StateId, PROB_EPS};
use crate::{Error, Result};

/// Relative tolerance on the duality gap of the restricted game.
const GAP_TOL: f64 = 1e-12;
const MAX_ROUNDS: usize = 1000;
/// Actions within this margin of the best response count as tied.
pub const RESPONSE_TIE_TOL: f64 = 1e-9;

/// Nature's choice for one non-measuring step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoMeasureSolution {
    /// `max_j` of the expected next Q-value under the returned rows.
    pub game_value: f64,
    /// One distribution per support state of the belief, sorted by state.
    pub rows: Vec<(StateId, WorstCaseRow)>,
    /// Lowest-index best response to the returned rows.
    pub response: ControlActionId,
    /// The agent's equilibrium mixture over responses.
    pub agent_mixture: Vec<f64>,
    /// Number of nature vertices generated.
    pub vertices: usize,
}

impl NoMeasureSolution {
    /// The next belief `b'(s') = sum_s b(s) P_s(s')`.
    pub fn next_belief(&self, b: &Belief) -> Result<Belief> {
        robust_belief_update(b, &self.rows)
    }
}

/// Pushes `b` through one chosen row per support state.
pub fn robust_belief_update(b: &Belief, rows: &[(StateId, WorstCaseRow)]) -> Result<Belief> {
    b.transport(|s| {
        rows.binary_search_by_key(&s, |(t, _)| *t)
            .ok()
            .map(|i| rows[i].1.distribution.as_slice())
    })
}

struct SupportRow<'a> {
    weight: f64,
    successors: &'a [StateId],
    intervals: &'a [crate::model::ProbInterval],
}

/// Expected next Q-value of every response under one joint choice of rows.
fn response_payoffs(support: &[SupportRow<'_>], probs: &[Vec<f64>], q: &QTable) -> Vec<f64> {
    let mut out = vec![0.0; q.num_actions()];
    for (row, p) in support.iter().zip(probs) {
        for (sp, pk) in row.successors.iter().zip(p) {
            if *pk == 0.0 {
                continue;
            }
            let w = row.weight * pk;
            for (o, qv) in out.iter_mut().zip(q.state_row(*sp)) {
                *o += w * qv;
            }
        }
    }
    out
}

/// Solves the worst-case transition for taking control action `a` from
/// belief `b` without measuring, against responses valued by `q`.
pub fn worst_case_transition_nomeasure(
    m: &RamMdp,
    b: &Belief,
    a: ControlActionId,
    q: &QTable,
) -> Result<NoMeasureSolution> {
    if q.num_states() != m.num_states() || q.num_actions() != m.num_actions() {
        return Err(Error::Domain("Q-table shape differs from model".into()));
    }
    if a.index() >= m.num_actions() {
        return Err(Error::Domain(format!("control action {a} out of range")));
    }
    let support: Vec<SupportRow<'_>> = b
        .iter()
        .map(|(s, w)| {
            let row = m.row(s, a);
            SupportRow {
                weight: w,
                successors: row.successors,
                intervals: row.intervals,
            }
        })
        .collect();
    let na = m.num_actions();

    let mut order = Vec::new();
    let mut vals = Vec::new();
    // Nature's greedy best response to a response mixture `sigma`.
    let mut best_response = |sigma: &[f64]| -> Result<(Vec<Vec<f64>>, f64)> {
        let mut value = 0.0;
        let mut probs = Vec::with_capacity(support.len());
        for (row, (s, _)) in support.iter().zip(b.iter()) {
            vals.clear();
            vals.extend(row.successors.iter().map(|sp| {
                q.state_row(*sp)
                    .iter()
                    .zip(sigma)
                    .map(|(qv, w)| qv * w)
                    .sum::<f64>()
            }));
            let mut p = vec![0.0; row.successors.len()];
            let achieved = greedy_fill(
                row.intervals,
                &vals,
                Direction::Minimize,
                &mut order,
                &mut p,
            )
            .map_err(|(sum_lo, sum_hi)| Error::Infeasible {
                location: Some((s, a)),
                sum_lo,
                sum_hi,
            })?;
            value += row.weight * achieved;
            probs.push(p);
        }
        Ok((probs, value))
    };

    let fixed = support.iter().all(|r| {
        let lo: f64 = r.intervals.iter().map(|i| i.lo).sum();
        let hi: f64 = r.intervals.iter().map(|i| i.hi).sum();
        lo >= 1.0 - PROB_EPS || hi <= 1.0 + PROB_EPS
    });

    let uniform = vec![1.0 / na as f64; na];
    let (first, _) = best_response(&uniform)?;
    let mut vertices = vec![first];
    let mut payoffs = vec![response_payoffs(&support, &vertices[0], q)];
    let mut weights = vec![1.0];
    let mut sigma = uniform;

    if !fixed {
        let mut rounds = 0;
        loop {
            let game = solve_min_max(&payoffs)?;
            weights = game.row_strategy;
            sigma = game.col_strategy;
            let (candidate, br_value) = best_response(&sigma)?;
            if br_value >= game.value - GAP_TOL * (1.0 + game.value.abs())
                || vertices.contains(&candidate)
            {
                break;
            }
            payoffs.push(response_payoffs(&support, &candidate, q));
            vertices.push(candidate);
            rounds += 1;
            if rounds > MAX_ROUNDS {
                return Err(Error::Internal(
                    "non-measuring worst case did not converge".into(),
                ));
            }
        }
    }

    // Mix nature's vertices with the equilibrium weights.
    let mut mixed: Vec<Vec<f64>> = support
        .iter()
        .map(|r| vec![0.0; r.successors.len()])
        .collect();
    for (w, vx) in weights.iter().zip(&vertices) {
        if *w == 0.0 {
            continue;
        }
        for (mrow, vrow) in mixed.iter_mut().zip(vx) {
            for (mp, vp) in mrow.iter_mut().zip(vrow) {
                *mp += w * vp;
            }
        }
    }
    let pay = response_payoffs(&support, &mixed, q);
    let game_value = pay.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let response = pay
        .iter()
        .position(|v| *v >= game_value - RESPONSE_TIE_TOL)
        .unwrap_or(0);

    let rows = support
        .iter()
        .zip(b.iter())
        .zip(mixed)
        .map(|((row, (s, _)), p)| {
            let achieved_value = row
                .successors
                .iter()
                .zip(&p)
                .map(|(sp, pk)| pk * q.state_row(*sp)[response])
                .sum();
            let distribution = row
                .successors
                .iter()
                .zip(p)
                .filter(|(_, pk)| *pk > 0.0)
                .map(|(sp, pk)| (*sp, pk))
                .collect();
            (
                s,
                WorstCaseRow {
                    distribution,
                    achieved_value,
                },
            )
        })
        .collect();

    Ok(NoMeasureSolution {
        game_value,
        rows,
        response: ControlActionId::from(response),
        agent_mixture: sigma,
        vertices: vertices.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProbInterval, RamMdpBuilder, UncertainRow};
    use crate::solvers::{value_iteration, Backup, SolveOptions};

    /// s0 -> {s1, s2} with both probabilities free in [0, 1]; in s1 action 0
    /// pays `left`, in s2 action 1 pays 1.
    fn fork(left: f64, hi1: f64) -> RamMdp {
        let mut b = RamMdpBuilder::new(4, 2);
        let row = UncertainRow::new(vec![
            (StateId(1), ProbInterval::new(0.0, hi1)),
            (StateId(2), ProbInterval::new(1.0 - hi1, 1.0)),
        ]);
        b.set_row_all_actions(StateId(0), &row);
        for s in 1..3u32 {
            b.set_row_all_actions(StateId(s), &UncertainRow::deterministic(StateId(3)));
        }
        b.set_reward(StateId(1), ControlActionId(0), left);
        b.set_reward(StateId(2), ControlActionId(1), 1.0);
        b.set_terminal(StateId(3));
        b.build_validated().unwrap()
    }

    fn robust_q(m: &RamMdp) -> QTable {
        value_iteration(m, Backup::Robust, &SolveOptions::default())
            .unwrap()
            .q
    }

    #[test]
    fn nature_equalizes_when_both_routes_are_open() {
        let m = fork(0.8, 1.0);
        let q = robust_q(&m);
        let sol =
            worst_case_transition_nomeasure(&m, &Belief::delta(StateId(0)), ControlActionId(0), &q)
                .unwrap();
        assert!((sol.game_value - 0.8 / 1.8).abs() < 1e-12);
        assert!((sol.rows[0].1.prob(StateId(1)) - 1.0 / 1.8).abs() < 1e-12);
        let next = sol.next_belief(&Belief::delta(StateId(0))).unwrap();
        assert!((next.prob(StateId(2)) - 0.8 / 1.8).abs() < 1e-12);
        assert_eq!(sol.response, ControlActionId(0));
    }

    #[test]
    fn capped_nature_takes_the_cap() {
        // symmetric +-1 payoffs: equalizing needs p = 0.5
        let mut b = RamMdpBuilder::new(4, 2);
        b.set_row_all_actions(
            StateId(0),
            &UncertainRow::new(vec![
                (StateId(1), ProbInterval::new(0.0, 0.3)),
                (StateId(2), ProbInterval::new(0.7, 1.0)),
            ]),
        );
        for s in 1..3u32 {
            b.set_row_all_actions(StateId(s), &UncertainRow::deterministic(StateId(3)));
        }
        b.set_reward(StateId(1), ControlActionId(0), -1.0);
        b.set_reward(StateId(2), ControlActionId(0), 1.0);
        b.set_terminal(StateId(3));
        let m = b.build_validated().unwrap();
        let q = robust_q(&m);
        let sol =
            worst_case_transition_nomeasure(&m, &Belief::delta(StateId(0)), ControlActionId(0), &q)
                .unwrap();
        assert!((sol.rows[0].1.prob(StateId(1)) - 0.3).abs() < 1e-12);
        assert!((sol.game_value - 0.4).abs() < 1e-12);
    }

    #[test]
    fn point_rows_give_the_plain_expectation() {
        let mut b = RamMdpBuilder::new(4, 2);
        b.set_row_all_actions(
            StateId(0),
            &UncertainRow::from_distribution(&[(StateId(1), 0.25), (StateId(2), 0.75)]),
        );
        for s in 1..3u32 {
            b.set_row_all_actions(StateId(s), &UncertainRow::deterministic(StateId(3)));
        }
        b.set_reward(StateId(1), ControlActionId(0), 1.0);
        b.set_reward(StateId(2), ControlActionId(1), 1.0);
        b.set_terminal(StateId(3));
        let m = b.build_validated().unwrap();
        let q = robust_q(&m);
        let sol =
            worst_case_transition_nomeasure(&m, &Belief::delta(StateId(0)), ControlActionId(1), &q)
                .unwrap();
        assert_eq!(sol.vertices, 1);
        assert_eq!(sol.response, ControlActionId(1));
        assert!((sol.game_value - 0.75).abs() < 1e-15);
    }

    #[test]
    fn robust_update_transports_delta_through_deterministic_row() {
        let rows = vec![(
            StateId(0),
            WorstCaseRow {
                distribution: vec![(StateId(5), 1.0)],
                achieved_value: 0.0,
            },
        )];
        let b = robust_belief_update(&Belief::delta(StateId(0)), &rows).unwrap();
        assert_eq!(b, Belief::delta(StateId(5)));
    }
}
