//! Optimization of a linear objective over one interval row.
//!
//! The feasible set `{P : lo <= P <= hi, sum P = 1}` is a box cut by the
//! simplex. Its linear minimum is reached by giving every successor its lower
//! bound and pouring the remaining mass into successors in ascending value
//! order, each up to its upper bound. Maximization uses descending order.

use serde::{Deserialize, Serialize};

use crate::model::{ProbInterval, RowRef, StateId, PROB_EPS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// A distribution chosen from an interval row and its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseRow {
    /// Successors with positive probability, sorted by id.
    pub distribution: Vec<(StateId, f64)>,
    pub achieved_value: f64,
}

impl WorstCaseRow {
    pub fn total(&self) -> f64 {
        self.distribution.iter().map(|(_, p)| p).sum()
    }

    pub fn prob(&self, s: StateId) -> f64 {
        self.distribution
            .iter()
            .find(|(t, _)| *t == s)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }
}

/// Infeasible row: `(sum lo, sum hi)`.
pub(crate) type RowSums = (f64, f64);

#[inline]
fn precedes(values: &[f64], dir: Direction, x: u32, y: u32) -> bool {
    let (vx, vy) = (values[x as usize], values[y as usize]);
    let strictly = match dir {
        Direction::Minimize => vx < vy,
        Direction::Maximize => vx > vy,
    };
    strictly || (vx == vy && x < y)
}

/// Sorts `order` (a permutation of `0..values.len()`) into fill order.
///
/// The order is total (value, then index), so the result does not depend on
/// the starting permutation. Insertion sort makes a warm start from the last
/// iteration's order nearly linear.
pub(crate) fn sort_order(values: &[f64], dir: Direction, order: &mut [u32]) {
    let n = order.len();
    if n > 64 {
        order.sort_unstable_by(|&x, &y| {
            if precedes(values, dir, x, y) {
                std::cmp::Ordering::Less
            } else if x == y {
                std::cmp::Ordering::Equal
            } else {
                std::cmp::Ordering::Greater
            }
        });
        return;
    }
    for i in 1..n {
        let key = order[i];
        let mut j = i;
        while j > 0 && precedes(values, dir, key, order[j - 1]) {
            order[j] = order[j - 1];
            j -= 1;
        }
        order[j] = key;
    }
}

/// Gives every entry its lower bound, then pours the remaining mass along
/// `order`. Writes probabilities aligned with `intervals` into `out` and
/// returns the objective.
pub(crate) fn fill_in_order(
    intervals: &[ProbInterval],
    values: &[f64],
    order: &[u32],
    out: &mut [f64],
) -> std::result::Result<f64, RowSums> {
    let mut sum_lo = 0.0;
    for (o, iv) in out.iter_mut().zip(intervals) {
        *o = iv.lo;
        sum_lo += iv.lo;
    }
    let sums = || (sum_lo, intervals.iter().map(|i| i.hi).sum());
    if sum_lo > 1.0 + PROB_EPS {
        return Err(sums());
    }
    let mut remaining = 1.0 - sum_lo;
    for &k in order {
        if remaining <= 0.0 {
            break;
        }
        let k = k as usize;
        let add = (intervals[k].hi - intervals[k].lo).min(remaining);
        out[k] += add;
        remaining -= add;
    }
    if remaining > PROB_EPS {
        return Err(sums());
    }
    Ok(out.iter().zip(values).map(|(p, v)| p * v).sum())
}

/// Cold-start greedy solve; see [`sort_order`] and [`fill_in_order`].
pub(crate) fn greedy_fill(
    intervals: &[ProbInterval],
    values: &[f64],
    dir: Direction,
    order: &mut Vec<u32>,
    out: &mut [f64],
) -> std::result::Result<f64, RowSums> {
    order.clear();
    order.extend(0..intervals.len() as u32);
    sort_order(values, dir, order);
    fill_in_order(intervals, values, order, out)
}

fn solve_row<F>(row: RowRef<'_>, values: F, dir: Direction) -> Result<WorstCaseRow>
where
    F: Fn(StateId) -> f64,
{
    let vals: Vec<f64> = row.successors.iter().map(|&s| values(s)).collect();
    let mut probs = vec![0.0; row.len()];
    let mut order = Vec::with_capacity(row.len());
    let achieved_value = greedy_fill(row.intervals, &vals, dir, &mut order, &mut probs).map_err(
        |(sum_lo, sum_hi)| Error::Infeasible {
            location: None,
            sum_lo,
            sum_hi,
        },
    )?;
    let distribution = row
        .successors
        .iter()
        .zip(&probs)
        .filter(|(_, p)| **p > 0.0)
        .map(|(s, p)| (*s, *p))
        .collect();
    Ok(WorstCaseRow {
        distribution,
        achieved_value,
    })
}

/// The feasible distribution of `row` minimizing `sum P(s') values(s')`.
pub fn inner_worst_expectation<F>(row: RowRef<'_>, values: F) -> Result<WorstCaseRow>
where
    F: Fn(StateId) -> f64,
{
    solve_row(row, values, Direction::Minimize)
}

/// The feasible distribution of `row` maximizing `sum P(s') values(s')`.
pub fn inner_best_expectation<F>(row: RowRef<'_>, values: F) -> Result<WorstCaseRow>
where
    F: Fn(StateId) -> f64,
{
    solve_row(row, values, Direction::Maximize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UncertainRow;
    use crate::oracle::vertices::row_vertices;
    use proptest::prelude::*;

    fn row3() -> UncertainRow {
        UncertainRow::new(vec![
            (StateId(0), ProbInterval::new(0.0, 0.6)),
            (StateId(1), ProbInterval::new(0.0, 0.6)),
            (StateId(2), ProbInterval::new(0.0, 0.6)),
        ])
    }

    fn ref_of(r: &UncertainRow) -> (Vec<StateId>, Vec<ProbInterval>) {
        r.entries.iter().copied().unzip()
    }

    fn values3(s: StateId) -> f64 {
        [1.0, 0.0, 0.5][s.index()]
    }

    fn brute(row: &UncertainRow, values: impl Fn(StateId) -> f64, dir: Direction) -> f64 {
        let objective = |p: &Vec<f64>| -> f64 {
            p.iter()
                .zip(&row.entries)
                .map(|(p, (s, _))| p * values(*s))
                .sum()
        };
        let vs = row_vertices(row);
        let it = vs.iter().map(objective);
        match dir {
            Direction::Minimize => it.fold(f64::INFINITY, f64::min),
            Direction::Maximize => it.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    #[test]
    fn worst_case_of_three_state_row() {
        let r = row3();
        let (s, i) = ref_of(&r);
        let row = RowRef {
            successors: &s,
            intervals: &i,
        };
        let w = inner_worst_expectation(row, values3).unwrap();
        assert_eq!(w.distribution.len(), 2);
        assert!((w.prob(StateId(1)) - 0.6).abs() < 1e-12);
        assert!((w.prob(StateId(2)) - 0.4).abs() < 1e-12);
        assert!((w.achieved_value - 0.2).abs() < 1e-12);
        assert!((brute(&r, values3, Direction::Minimize) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn best_case_of_three_state_row() {
        let r = row3();
        let (s, i) = ref_of(&r);
        let row = RowRef {
            successors: &s,
            intervals: &i,
        };
        let w = inner_best_expectation(row, values3).unwrap();
        assert!((w.prob(StateId(0)) - 0.6).abs() < 1e-12);
        assert!((w.prob(StateId(2)) - 0.4).abs() < 1e-12);
        assert!((w.achieved_value - 0.8).abs() < 1e-12);
        assert!((brute(&r, values3, Direction::Maximize) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn point_intervals_leave_no_freedom() {
        let r = UncertainRow::from_distribution(&[(StateId(0), 0.25), (StateId(1), 0.75)]);
        let (s, i) = ref_of(&r);
        let row = RowRef {
            successors: &s,
            intervals: &i,
        };
        let v = |s: StateId| [2.0, -1.0][s.index()];
        let expect = 0.25 * 2.0 - 0.75;
        assert!((inner_worst_expectation(row, v).unwrap().achieved_value - expect).abs() < 1e-15);
        assert!((inner_best_expectation(row, v).unwrap().achieved_value - expect).abs() < 1e-15);
    }

    #[test]
    fn lucky_unlucky_nature_takes_max_probability() {
        let r = UncertainRow::new(vec![
            (StateId(1), ProbInterval::new(0.0, 0.6)),
            (StateId(2), ProbInterval::new(0.0, 1.0)),
        ]);
        let (s, i) = ref_of(&r);
        let row = RowRef {
            successors: &s,
            intervals: &i,
        };
        let w = inner_worst_expectation(row, |s| if s == StateId(1) { -1.0 } else { 1.0 }).unwrap();
        assert!((w.prob(StateId(1)) - 0.6).abs() < 1e-15);
        assert!((w.prob(StateId(2)) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn infeasible_rows_error() {
        let r = UncertainRow::new(vec![
            (StateId(0), ProbInterval::new(0.6, 0.6)),
            (StateId(1), ProbInterval::new(0.6, 0.6)),
        ]);
        let (s, i) = ref_of(&r);
        let row = RowRef {
            successors: &s,
            intervals: &i,
        };
        assert!(matches!(
            inner_worst_expectation(row, |_| 0.0),
            Err(Error::Infeasible { .. })
        ));
        let r = UncertainRow::new(vec![(StateId(0), ProbInterval::new(0.0, 0.4))]);
        let (s, i) = ref_of(&r);
        let row = RowRef {
            successors: &s,
            intervals: &i,
        };
        assert!(inner_best_expectation(row, |_| 0.0).is_err());
    }

    /// Random feasible rows with up to four successors.
    pub(crate) fn feasible_row() -> impl Strategy<Value = UncertainRow> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..=4).prop_map(|raw| {
            let n = raw.len();
            // anchor a distribution, then widen around it
            let total: f64 = raw.iter().map(|(a, _)| a + 1e-3).sum();
            let anchor: Vec<f64> = raw.iter().map(|(a, _)| (a + 1e-3) / total).collect();
            let entries = (0..n)
                .map(|k| {
                    let w = raw[k].1;
                    let lo = anchor[k] * (1.0 - w);
                    let hi = (anchor[k] + w * (1.0 - anchor[k])).min(1.0);
                    (StateId(k as u32), ProbInterval::new(lo, hi))
                })
                .collect();
            UncertainRow::new(entries)
        })
    }

    proptest! {
        #[test]
        fn greedy_matches_vertex_enumeration(
            row in feasible_row(),
            vals in prop::collection::vec(-5.0f64..5.0, 4),
        ) {
            let v = |s: StateId| vals[s.index()];
            let (s, i) = ref_of(&row);
            let r = RowRef { successors: &s, intervals: &i };
            let lo = inner_worst_expectation(r, v).unwrap();
            let hi = inner_best_expectation(r, v).unwrap();
            prop_assert!((lo.achieved_value - brute(&row, v, Direction::Minimize)).abs() < 1e-9);
            prop_assert!((hi.achieved_value - brute(&row, v, Direction::Maximize)).abs() < 1e-9);
            for w in [&lo, &hi] {
                prop_assert!((w.total() - 1.0).abs() < 1e-9);
                for (sp, p) in &w.distribution {
                    prop_assert!(row.entries[sp.index()].1.contains(*p, 1e-12));
                }
            }
        }

        #[test]
        fn any_feasible_point_lies_between_extremes(
            row in feasible_row(),
            vals in prop::collection::vec(-5.0f64..5.0, 4),
            weights in prop::collection::vec(0.01f64..1.0, 16),
        ) {
            let v = |s: StateId| vals[s.index()];
            let (s, i) = ref_of(&row);
            let r = RowRef { successors: &s, intervals: &i };
            let lo = inner_worst_expectation(r, v).unwrap().achieved_value;
            let hi = inner_best_expectation(r, v).unwrap().achieved_value;
            // convex combination of vertices is a feasible point
            let verts = row_vertices(&row);
            let total: f64 = weights.iter().take(verts.len()).sum();
            let mut point = vec![0.0; row.len()];
            for (vx, w) in verts.iter().zip(&weights) {
                for (p, x) in point.iter_mut().zip(vx) {
                    *p += w / total * x;
                }
            }
            let val: f64 = point.iter().zip(&row.entries).map(|(p, (s, _))| p * v(*s)).sum();
            prop_assert!(lo <= val + 1e-9 && val <= hi + 1e-9);
        }
    }

    #[test]
    fn constant_objective_gives_constant() {
        let r = row3();
        let (s, i) = ref_of(&r);
        let row = RowRef {
            successors: &s,
            intervals: &i,
        };
        assert!((inner_best_expectation(row, |_| 4.2).unwrap().achieved_value - 4.2).abs() < 1e-12);
        assert!(
            (inner_worst_expectation(row, |_| 4.2)
                .unwrap()
                .achieved_value
                - 4.2)
                .abs()
                < 1e-12
        );
    }
}
