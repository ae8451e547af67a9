use std::fmt;

use serde::Serialize;

use super::{ControlActionId, RamMdp, StateId, PROB_EPS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ViolationKind {
    /// Interval with `lo > hi`.
    LoAboveHi {
        successor: StateId,
        lo: f64,
        hi: f64,
    },
    /// Bound outside `[0, 1]` or not finite.
    BoundOutOfRange {
        successor: StateId,
        lo: f64,
        hi: f64,
    },
    /// `sum lo > 1` or `sum hi < 1`: no distribution fits the row.
    RowInfeasible {
        sum_lo: f64,
        sum_hi: f64,
    },
    MissingRow,
    DuplicateSuccessor(StateId),
    UnsortedSuccessors,
    SuccessorOutOfRange(StateId),
    NonFiniteReward(f64),
    TerminalNotAbsorbing,
    NegativeMeasureCost(f64),
    DiscountOutOfRange(f64),
    InitialStateOutOfRange(StateId),
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::LoAboveHi { successor, lo, hi } => {
                write!(f, "lo>hi for successor {successor} ([{lo}, {hi}])")
            }
            ViolationKind::BoundOutOfRange { successor, lo, hi } => {
                write!(
                    f,
                    "bound outside [0,1] for successor {successor} ([{lo}, {hi}])"
                )
            }
            ViolationKind::RowInfeasible { sum_lo, sum_hi } => {
                write!(f, "row infeasible (sum lo = {sum_lo}, sum hi = {sum_hi})")
            }
            ViolationKind::MissingRow => write!(f, "missing row"),
            ViolationKind::DuplicateSuccessor(s) => write!(f, "duplicate successor {s}"),
            ViolationKind::UnsortedSuccessors => write!(f, "successors not sorted"),
            ViolationKind::SuccessorOutOfRange(s) => write!(f, "successor {s} out of range"),
            ViolationKind::NonFiniteReward(r) => write!(f, "non-finite reward {r}"),
            ViolationKind::TerminalNotAbsorbing => {
                write!(f, "terminal state lacks a [1,1] self-loop with zero reward")
            }
            ViolationKind::NegativeMeasureCost(c) => write!(f, "negative measuring cost {c}"),
            ViolationKind::DiscountOutOfRange(g) => write!(f, "discount {g} outside (0, 1]"),
            ViolationKind::InitialStateOutOfRange(s) => {
                write!(f, "initial state {s} out of range")
            }
        }
    }
}

/// One invariant violation; `location` is the (state, action) row when applicable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub location: Option<(StateId, ControlActionId)>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((s, a)) => write!(f, "({s}, {a}): {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in self.violations.iter().take(10) {
            write!(f, "; {v}")?;
        }
        if self.violations.len() > 10 {
            write!(f, "; ...")?;
        }
        Ok(())
    }
}

/// Checks every model invariant and lists each violation.
pub fn validate_model(m: &RamMdp) -> ValidationReport {
    let mut out = Vec::new();
    let global = |kind| Violation {
        location: None,
        kind,
    };

    if !(m.measure_cost().is_finite() && m.measure_cost() >= 0.0) {
        out.push(global(ViolationKind::NegativeMeasureCost(m.measure_cost())));
    }
    let g = m.discount();
    if !(g > 0.0 && g <= 1.0) {
        out.push(global(ViolationKind::DiscountOutOfRange(g)));
    }
    if m.initial_state().index() >= m.num_states() {
        out.push(global(ViolationKind::InitialStateOutOfRange(
            m.initial_state(),
        )));
    }

    for s in m.states() {
        for a in m.actions() {
            let at = |kind| Violation {
                location: Some((s, a)),
                kind,
            };
            let row = m.row(s, a);
            let r = m.reward(s, a);
            if !r.is_finite() {
                out.push(at(ViolationKind::NonFiniteReward(r)));
            }
            if row.is_empty() {
                out.push(at(ViolationKind::MissingRow));
                continue;
            }
            for (sp, iv) in row.iter() {
                if sp.index() >= m.num_states() {
                    out.push(at(ViolationKind::SuccessorOutOfRange(sp)));
                }
                if !(iv.lo.is_finite() && iv.hi.is_finite()) || iv.lo < 0.0 || iv.hi > 1.0 {
                    out.push(at(ViolationKind::BoundOutOfRange {
                        successor: sp,
                        lo: iv.lo,
                        hi: iv.hi,
                    }));
                }
                if iv.lo > iv.hi {
                    out.push(at(ViolationKind::LoAboveHi {
                        successor: sp,
                        lo: iv.lo,
                        hi: iv.hi,
                    }));
                }
            }
            let mut sorted = true;
            for w in row.successors.windows(2) {
                if w[0] == w[1] {
                    out.push(at(ViolationKind::DuplicateSuccessor(w[0])));
                } else if w[0] > w[1] {
                    sorted = false;
                }
            }
            if !sorted {
                out.push(at(ViolationKind::UnsortedSuccessors));
            }
            let (sum_lo, sum_hi) = (row.sum_lo(), row.sum_hi());
            if sum_lo > 1.0 + PROB_EPS || sum_hi < 1.0 - PROB_EPS {
                out.push(at(ViolationKind::RowInfeasible { sum_lo, sum_hi }));
            }
            if m.is_terminal(s) {
                let absorbing = row.len() == 1
                    && row.successors[0] == s
                    && row.intervals[0] == super::ProbInterval::point(1.0)
                    && r == 0.0;
                if !absorbing {
                    out.push(at(ViolationKind::TerminalNotAbsorbing));
                }
            }
        }
    }
    ValidationReport { violations: out }
}
