//! The RAM-MDP data model.
//!
//! A [`RamMdp`] stores one interval row per (state, control action) pair in a
//! compressed sparse layout: successor ids and their probability intervals live
//! in flat arrays, indexed through per-row offsets. Only successors with a
//! positive upper bound are stored. Measurements are complete and noiseless, so
//! the measurement action is a plain boolean and the observation channel is
//! implicit.

mod belief;
mod io;
mod point;
mod validate;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use belief::Belief;
pub use io::{ModelFile, ModelFileEntry, ModelFileReward, ModelFileRow};
pub(crate) use point::confidence_upper;
pub use point::{
    average_point_model, intervals_from_confidence, AveragedModel, ConfidenceSpec, PointModel,
    PointModelBuilder,
};
pub use validate::{validate_model, ValidationReport, Violation, ViolationKind};

/// Tolerance for every probability-sum check.
pub const PROB_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u32);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for StateId {
    fn from(i: usize) -> Self {
        StateId(i as u32)
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlActionId(pub u32);

impl ControlActionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for ControlActionId {
    fn from(i: usize) -> Self {
        ControlActionId(i as u32)
    }
}

impl fmt::Display for ControlActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// A control action together with the decision whether to measure the next state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionPair {
    pub control: ControlActionId,
    pub measure: bool,
}

impl ActionPair {
    pub fn new(control: ControlActionId, measure: bool) -> Self {
        Self { control, measure }
    }
}

/// Bounds `[lo, hi]` on one transition probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ProbInterval {
    /// Unchecked constructor; [`validate_model`] reports bad intervals.
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(p: f64) -> Self {
        Self { lo: p, hi: p }
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite()
            && self.hi.is_finite()
            && 0.0 <= self.lo
            && self.lo <= self.hi
            && self.hi <= 1.0
    }

    pub fn contains(&self, p: f64, eps: f64) -> bool {
        p >= self.lo - eps && p <= self.hi + eps
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Owned interval row for one (state, action) pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UncertainRow {
    pub entries: Vec<(StateId, ProbInterval)>,
}

impl UncertainRow {
    pub fn new(entries: Vec<(StateId, ProbInterval)>) -> Self {
        Self { entries }
    }

    /// Sorts entries by successor id.
    pub fn sorted(mut entries: Vec<(StateId, ProbInterval)>) -> Self {
        entries.sort_by_key(|(s, _)| *s);
        Self { entries }
    }

    /// A row whose intervals are all the degenerate point `[p, p]`.
    pub fn from_distribution(dist: &[(StateId, f64)]) -> Self {
        Self::sorted(
            dist.iter()
                .map(|&(s, p)| (s, ProbInterval::point(p)))
                .collect(),
        )
    }

    pub fn deterministic(target: StateId) -> Self {
        Self::new(vec![(target, ProbInterval::point(1.0))])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum_lo(&self) -> f64 {
        self.entries.iter().map(|(_, i)| i.lo).sum()
    }

    pub fn sum_hi(&self) -> f64 {
        self.entries.iter().map(|(_, i)| i.hi).sum()
    }

    pub fn is_feasible(&self) -> bool {
        self.sum_lo() <= 1.0 + PROB_EPS && self.sum_hi() >= 1.0 - PROB_EPS
    }
}

/// Borrowed view of one row inside a [`RamMdp`].
#[derive(Debug, Clone, Copy)]
pub struct RowRef<'a> {
    pub successors: &'a [StateId],
    pub intervals: &'a [ProbInterval],
}

impl<'a> RowRef<'a> {
    pub fn len(&self) -> usize {
        self.successors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.successors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, ProbInterval)> + 'a {
        self.successors
            .iter()
            .copied()
            .zip(self.intervals.iter().copied())
    }

    pub fn sum_lo(&self) -> f64 {
        self.intervals.iter().map(|i| i.lo).sum()
    }

    pub fn sum_hi(&self) -> f64 {
        self.intervals.iter().map(|i| i.hi).sum()
    }

    pub fn to_owned(&self) -> UncertainRow {
        UncertainRow::new(self.iter().collect())
    }
}

/// A robust active-measuring MDP with interval transition uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct RamMdp {
    num_states: usize,
    num_actions: usize,
    offsets: Vec<usize>,
    successors: Vec<StateId>,
    intervals: Vec<ProbInterval>,
    rewards: Vec<f64>,
    measure_cost: f64,
    discount: f64,
    initial_state: StateId,
    terminal: Vec<bool>,
}

/// Flat row storage handed to [`RamMdp::from_csr`].
#[derive(Debug, Clone, Default)]
pub(crate) struct CsrRows {
    pub offsets: Vec<usize>,
    pub successors: Vec<StateId>,
    pub intervals: Vec<ProbInterval>,
}

impl CsrRows {
    pub fn with_capacity(rows: usize, entries: usize) -> Self {
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        Self {
            offsets,
            successors: Vec::with_capacity(entries),
            intervals: Vec::with_capacity(entries),
        }
    }

    /// Appends the next row; entries must already be sorted by successor.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (StateId, ProbInterval)>) {
        for (s, iv) in entries {
            self.successors.push(s);
            self.intervals.push(iv);
        }
        self.offsets.push(self.successors.len());
    }
}

impl RamMdp {
    /// Assembles a model from rows laid out state-major, action-minor.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_csr(
        num_states: usize,
        num_actions: usize,
        rows: CsrRows,
        rewards: Vec<f64>,
        measure_cost: f64,
        discount: f64,
        initial_state: StateId,
        terminal: Vec<bool>,
    ) -> Self {
        assert_eq!(rows.offsets.len(), num_states * num_actions + 1);
        assert_eq!(rewards.len(), num_states * num_actions);
        assert_eq!(terminal.len(), num_states);
        Self {
            num_states,
            num_actions,
            offsets: rows.offsets,
            successors: rows.successors,
            intervals: rows.intervals,
            rewards,
            measure_cost,
            discount,
            initial_state,
            terminal,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn measure_cost(&self) -> f64 {
        self.measure_cost
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_state(&self) -> StateId {
        self.initial_state
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.terminal[s.index()]
    }

    pub fn terminal_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.terminal
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(i, _)| StateId::from(i))
    }

    pub(crate) fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    /// Total number of stored (successor, interval) entries.
    pub fn num_entries(&self) -> usize {
        self.successors.len()
    }

    #[inline]
    pub fn row_index(&self, s: StateId, a: ControlActionId) -> usize {
        s.index() * self.num_actions + a.index()
    }

    /// Range of the row's entries in the flat entry arrays.
    #[inline]
    pub fn row_range(&self, s: StateId, a: ControlActionId) -> Range<usize> {
        let r = self.row_index(s, a);
        self.offsets[r]..self.offsets[r + 1]
    }

    #[inline]
    pub fn row(&self, s: StateId, a: ControlActionId) -> RowRef<'_> {
        let range = self.row_range(s, a);
        RowRef {
            successors: &self.successors[range.clone()],
            intervals: &self.intervals[range],
        }
    }

    #[inline]
    pub fn reward(&self, s: StateId, a: ControlActionId) -> f64 {
        self.rewards[self.row_index(s, a)]
    }

    pub(crate) fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn intervals(&self) -> &[ProbInterval] {
        &self.intervals
    }

    pub(crate) fn successors(&self) -> &[StateId] {
        &self.successors
    }

    /// `R(s, a) - c * [m = 1]`.
    pub fn scalarized_reward(&self, s: StateId, ap: ActionPair) -> f64 {
        let cost = if ap.measure { self.measure_cost } else { 0.0 };
        self.reward(s, ap.control) - cost
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.num_states).map(StateId::from)
    }

    pub fn actions(&self) -> impl Iterator<Item = ControlActionId> {
        (0..self.num_actions).map(ControlActionId::from)
    }

    /// Copy of the model with a different measuring cost.
    pub fn with_measure_cost(&self, c: f64) -> Self {
        let mut m = self.clone();
        m.measure_cost = c;
        m
    }

    pub fn validate(&self) -> ValidationReport {
        validate_model(self)
    }
}

/// Incremental constructor for [`RamMdp`].
///
/// Rows not set explicitly stay empty (and are reported by validation).
#[derive(Debug, Clone)]
pub struct RamMdpBuilder {
    num_states: usize,
    num_actions: usize,
    rows: Vec<Vec<(StateId, ProbInterval)>>,
    rewards: Vec<f64>,
    measure_cost: f64,
    discount: f64,
    initial_state: StateId,
    terminal: Vec<bool>,
}

impl RamMdpBuilder {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            rows: vec![Vec::new(); num_states * num_actions],
            rewards: vec![0.0; num_states * num_actions],
            measure_cost: 0.0,
            discount: 1.0,
            initial_state: StateId(0),
            terminal: vec![false; num_states],
        }
    }

    pub fn measure_cost(mut self, c: f64) -> Self {
        self.measure_cost = c;
        self
    }

    pub fn discount(mut self, gamma: f64) -> Self {
        self.discount = gamma;
        self
    }

    pub fn initial_state(mut self, s: StateId) -> Self {
        self.initial_state = s;
        self
    }

    pub fn set_row(&mut self, s: StateId, a: ControlActionId, row: UncertainRow) -> &mut Self {
        let idx = s.index() * self.num_actions + a.index();
        self.rows[idx] = row.entries;
        self
    }

    /// Sets the same row for every control action of `s`.
    pub fn set_row_all_actions(&mut self, s: StateId, row: &UncertainRow) -> &mut Self {
        for a in 0..self.num_actions {
            self.set_row(s, ControlActionId::from(a), row.clone());
        }
        self
    }

    pub fn set_reward(&mut self, s: StateId, a: ControlActionId, r: f64) -> &mut Self {
        self.rewards[s.index() * self.num_actions + a.index()] = r;
        self
    }

    pub fn set_reward_all_actions(&mut self, s: StateId, r: f64) -> &mut Self {
        for a in 0..self.num_actions {
            self.set_reward(s, ControlActionId::from(a), r);
        }
        self
    }

    /// Makes `s` an absorbing terminal: self-loop `[1, 1]` and zero reward for every action.
    pub fn set_terminal(&mut self, s: StateId) -> &mut Self {
        self.terminal[s.index()] = true;
        self.set_row_all_actions(s, &UncertainRow::deterministic(s));
        self.set_reward_all_actions(s, 0.0);
        self
    }

    /// Flags `s` as terminal without touching its rows (used by deserialization).
    pub(crate) fn flag_terminal(&mut self, s: StateId) -> &mut Self {
        self.terminal[s.index()] = true;
        self
    }

    pub fn build(self) -> RamMdp {
        let total: usize = self.rows.iter().map(Vec::len).sum();
        let mut offsets = Vec::with_capacity(self.rows.len() + 1);
        let mut successors = Vec::with_capacity(total);
        let mut intervals = Vec::with_capacity(total);
        offsets.push(0);
        for row in self.rows {
            for (s, i) in row {
                successors.push(s);
                intervals.push(i);
            }
            offsets.push(successors.len());
        }
        RamMdp {
            num_states: self.num_states,
            num_actions: self.num_actions,
            offsets,
            successors,
            intervals,
            rewards: self.rewards,
            measure_cost: self.measure_cost,
            discount: self.discount,
            initial_state: self.initial_state,
            terminal: self.terminal,
        }
    }

    /// Builds and validates, returning the report as an error on any violation.
    pub fn build_validated(self) -> crate::Result<RamMdp> {
        let m = self.build();
        let report = validate_model(&m);
        if report.is_ok() {
            Ok(m)
        } else {
            Err(crate::Error::InvalidModel(report))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> RamMdp {
        let mut b = RamMdpBuilder::new(2, 1).measure_cost(0.2);
        b.set_row(
            StateId(0),
            ControlActionId(0),
            UncertainRow::deterministic(StateId(1)),
        );
        b.set_reward(StateId(0), ControlActionId(0), 1.0);
        b.set_terminal(StateId(1));
        b.build()
    }

    #[test]
    fn scalarized_reward_subtracts_cost_only_when_measuring() {
        let m = two_state();
        let a = ControlActionId(0);
        assert_eq!(
            m.scalarized_reward(StateId(0), ActionPair::new(a, true)),
            0.8
        );
        assert_eq!(
            m.scalarized_reward(StateId(0), ActionPair::new(a, false)),
            1.0
        );
        assert_eq!(
            m.scalarized_reward(StateId(1), ActionPair::new(a, false)),
            0.0
        );
    }

    #[test]
    fn scalarized_reward_with_step_penalty() {
        let mut b = RamMdpBuilder::new(1, 1).measure_cost(0.01);
        b.set_terminal(StateId(0));
        b.set_reward(StateId(0), ControlActionId(0), -0.01);
        let m = b.build();
        let r = m.scalarized_reward(StateId(0), ActionPair::new(ControlActionId(0), true));
        assert!((r + 0.02).abs() < 1e-15);
    }

    #[test]
    fn rows_are_addressable_by_pair() {
        let m = two_state();
        let row = m.row(StateId(0), ControlActionId(0));
        assert_eq!(row.successors, &[StateId(1)]);
        assert_eq!(row.intervals[0], ProbInterval::point(1.0));
        assert!(m.is_terminal(StateId(1)));
        assert_eq!(m.terminal_states().collect::<Vec<_>>(), vec![StateId(1)]);
    }
}
