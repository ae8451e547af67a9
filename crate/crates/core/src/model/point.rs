use super::{
    Belief, ControlActionId, ProbInterval, RamMdp, RamMdpBuilder, StateId, UncertainRow, PROB_EPS,
};
use crate::{Error, Result};

/// A RAM-MDP without transition uncertainty: one distribution per (s, a).
#[derive(Debug, Clone, PartialEq)]
pub struct PointModel {
    num_states: usize,
    num_actions: usize,
    offsets: Vec<usize>,
    entries: Vec<(StateId, f64)>,
    rewards: Vec<f64>,
    measure_cost: f64,
    discount: f64,
    initial_state: StateId,
    terminal: Vec<bool>,
}

impl PointModel {
    /// Takes the parent's structure and one probability per stored entry
    /// (aligned with the parent's flat entry layout). Zero entries are dropped.
    pub fn from_aligned(parent: &RamMdp, probs: &[f64]) -> Self {
        assert_eq!(probs.len(), parent.num_entries());
        let offsets_in = parent.offsets();
        let succ = parent.successors();
        let mut offsets = Vec::with_capacity(offsets_in.len());
        let mut entries = Vec::with_capacity(probs.len());
        offsets.push(0);
        for w in offsets_in.windows(2) {
            for k in w[0]..w[1] {
                if probs[k] > 0.0 {
                    entries.push((succ[k], probs[k]));
                }
            }
            offsets.push(entries.len());
        }
        Self {
            num_states: parent.num_states(),
            num_actions: parent.num_actions(),
            offsets,
            entries,
            rewards: parent.rewards().to_vec(),
            measure_cost: parent.measure_cost(),
            discount: parent.discount(),
            initial_state: parent.initial_state(),
            terminal: parent.terminal_mask().to_vec(),
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

    #[inline]
    pub fn row(&self, s: StateId, a: ControlActionId) -> &[(StateId, f64)] {
        let r = s.index() * self.num_actions + a.index();
        &self.entries[self.offsets[r]..self.offsets[r + 1]]
    }

    #[inline]
    pub fn reward(&self, s: StateId, a: ControlActionId) -> f64 {
        self.rewards[s.index() * self.num_actions + a.index()]
    }

    /// Belief after taking `a` without measuring.
    pub fn propagate(&self, b: &Belief, a: ControlActionId) -> Result<Belief> {
        b.transport(|s| Some(self.row(s, a)))
    }

    /// Largest deviation of any row sum from 1.
    pub fn max_row_error(&self) -> f64 {
        self.offsets
            .windows(2)
            .map(|w| {
                let sum: f64 = self.entries[w[0]..w[1]].iter().map(|(_, p)| p).sum();
                (sum - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// True when every row sums to 1 within [`PROB_EPS`] and has no negative entry.
    pub fn is_valid(&self) -> bool {
        self.max_row_error() <= PROB_EPS && self.entries.iter().all(|(_, p)| *p >= 0.0)
    }

    /// True when every probability lies inside the corresponding interval of `m`.
    pub fn is_feasible_for(&self, m: &RamMdp) -> bool {
        if m.num_states() != self.num_states || m.num_actions() != self.num_actions {
            return false;
        }
        for s in m.states() {
            for a in m.actions() {
                let row = m.row(s, a);
                let mine = self.row(s, a);
                // every interval must contain our probability (0 when absent)
                for (sp, iv) in row.iter() {
                    let p = mine
                        .iter()
                        .find(|(t, _)| *t == sp)
                        .map(|(_, p)| *p)
                        .unwrap_or(0.0);
                    if !iv.contains(p, PROB_EPS) {
                        return false;
                    }
                }
                if mine
                    .iter()
                    .any(|(t, p)| *p > 0.0 && !row.successors.contains(t))
                {
                    return false;
                }
            }
        }
        true
    }

    /// Interval model with degenerate `[p, p]` intervals.
    pub fn to_interval_model(&self) -> RamMdp {
        let mut b = RamMdpBuilder::new(self.num_states, self.num_actions)
            .measure_cost(self.measure_cost)
            .discount(self.discount)
            .initial_state(self.initial_state);
        for s in 0..self.num_states {
            let s = StateId::from(s);
            for a in 0..self.num_actions {
                let a = ControlActionId::from(a);
                b.set_row(s, a, UncertainRow::from_distribution(self.row(s, a)));
                b.set_reward(s, a, self.reward(s, a));
            }
            if self.is_terminal(s) {
                b.set_terminal(s);
            }
        }
        b.build()
    }
}

/// Constructor for [`PointModel`]; rows are sorted and duplicate successors merged.
#[derive(Debug, Clone)]
pub struct PointModelBuilder {
    num_states: usize,
    num_actions: usize,
    rows: Vec<Vec<(StateId, f64)>>,
    rewards: Vec<f64>,
    measure_cost: f64,
    discount: f64,
    initial_state: StateId,
    terminal: Vec<bool>,
}

impl PointModelBuilder {
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

    pub fn set_row(&mut self, s: StateId, a: ControlActionId, mut dist: Vec<(StateId, f64)>) {
        dist.sort_by_key(|(t, _)| *t);
        let mut merged: Vec<(StateId, f64)> = Vec::with_capacity(dist.len());
        for (t, p) in dist {
            match merged.last_mut() {
                Some((last, q)) if *last == t => *q += p,
                _ => merged.push((t, p)),
            }
        }
        merged.retain(|(_, p)| *p > 0.0);
        self.rows[s.index() * self.num_actions + a.index()] = merged;
    }

    pub fn set_reward(&mut self, s: StateId, a: ControlActionId, r: f64) {
        self.rewards[s.index() * self.num_actions + a.index()] = r;
    }

    pub fn set_terminal(&mut self, s: StateId) {
        self.terminal[s.index()] = true;
        for a in 0..self.num_actions {
            let a = ControlActionId::from(a);
            self.set_row(s, a, vec![(s, 1.0)]);
            self.set_reward(s, a, 0.0);
        }
    }

    pub fn build(self) -> PointModel {
        let mut offsets = Vec::with_capacity(self.rows.len() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for row in self.rows {
            entries.extend(row);
            offsets.push(entries.len());
        }
        PointModel {
            num_states: self.num_states,
            num_actions: self.num_actions,
            offsets,
            entries,
            rewards: self.rewards,
            measure_cost: self.measure_cost,
            discount: self.discount,
            initial_state: self.initial_state,
            terminal: self.terminal,
        }
    }
}

/// A base distribution together with a confidence level `alpha` in (0, 1].
#[derive(Debug, Clone, Copy)]
pub struct ConfidenceSpec<'a> {
    pub base_model: &'a PointModel,
    pub alpha: f64,
}

/// Upper bound of the confidence interval for base probability `p`.
#[inline]
pub(crate) fn confidence_upper(p: f64, alpha: f64) -> f64 {
    (p / alpha).min(1.0)
}

/// Widens every base probability `p` to the interval `[0, min(p / alpha, 1)]`.
///
/// Terminal self-loops keep their `[1, 1]` interval.
pub fn intervals_from_confidence(spec: ConfidenceSpec<'_>) -> Result<RamMdp> {
    let ConfidenceSpec {
        base_model: base,
        alpha,
    } = spec;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "confidence level must lie in (0, 1], got {alpha}"
        )));
    }
    if !base.is_valid() {
        return Err(Error::Domain(format!(
            "base model rows must be distributions (max row error {:e})",
            base.max_row_error()
        )));
    }
    let mut b = RamMdpBuilder::new(base.num_states(), base.num_actions())
        .measure_cost(base.measure_cost())
        .discount(base.discount())
        .initial_state(base.initial_state());
    for s in 0..base.num_states() {
        let s = StateId::from(s);
        if base.is_terminal(s) {
            b.set_terminal(s);
            continue;
        }
        for a in 0..base.num_actions() {
            let a = ControlActionId::from(a);
            let row = base
                .row(s, a)
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|&(sp, p)| (sp, ProbInterval::new(0.0, confidence_upper(p, alpha))))
                .collect();
            b.set_row(s, a, UncertainRow::new(row));
            b.set_reward(s, a, base.reward(s, a));
        }
    }
    Ok(b.build())
}

/// Result of [`average_point_model`].
#[derive(Debug, Clone)]
pub struct AveragedModel {
    pub model: PointModel,
    /// Set when at least one row of midpoints had to be rescaled to sum to 1.
    pub renormalized: bool,
}

impl AveragedModel {
    pub fn into_model(self) -> PointModel {
        self.model
    }
}

/// Midpoint model `(lo + hi) / 2`, uniformly rescaled where rows do not sum to 1.
pub fn average_point_model(m: &RamMdp) -> AveragedModel {
    let mut probs = Vec::with_capacity(m.num_entries());
    let mut renormalized = false;
    for s in m.states() {
        for a in m.actions() {
            let row = m.row(s, a);
            let start = probs.len();
            probs.extend(row.intervals.iter().map(ProbInterval::midpoint));
            let sum: f64 = probs[start..].iter().sum();
            if (sum - 1.0).abs() > PROB_EPS && sum > 0.0 {
                renormalized = true;
                for p in &mut probs[start..] {
                    *p /= sum;
                }
            }
        }
    }
    AveragedModel {
        model: PointModel::from_aligned(m, &probs),
        renormalized,
    }
}
