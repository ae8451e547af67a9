//! Value iteration over interval and point models.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inner::{fill_in_order, sort_order, Direction, WorstCaseRow};
use crate::model::{ControlActionId, PointModel, RamMdp, StateId};
use crate::{Error, Result};

/// Stopping rule for value iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Sup-norm change of the Q-table below which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QVariant {
    Robust,
    Optimistic,
    Exact,
}

/// Dense action values indexed by (state, control action).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
    variant: QVariant,
}

impl QTable {
    pub fn new(num_states: usize, num_actions: usize, values: Vec<f64>, variant: QVariant) -> Self {
        assert_eq!(values.len(), num_states * num_actions);
        Self {
            num_states,
            num_actions,
            values,
            variant,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn variant(&self) -> QVariant {
        self.variant
    }

    #[inline]
    pub fn get(&self, s: StateId, a: ControlActionId) -> f64 {
        self.values[s.index() * self.num_actions + a.index()]
    }

    #[inline]
    pub fn state_row(&self, s: StateId) -> &[f64] {
        let k = s.index() * self.num_actions;
        &self.values[k..k + self.num_actions]
    }

    /// `max_a Q(s, a)`.
    pub fn value(&self, s: StateId) -> f64 {
        self.state_row(s)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index maximizing action.
    pub fn greedy_action(&self, s: StateId) -> ControlActionId {
        let row = self.state_row(s);
        let mut best = 0;
        for (a, &q) in row.iter().enumerate() {
            if q > row[best] {
                best = a;
            }
        }
        ControlActionId::from(best)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `s,a,value` rows with a header line.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["s", "a", "value"])?;
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let v = self.values[s * self.num_actions + a];
                out.write_record([s.to_string(), a.to_string(), v.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Which inner problem each backup solves.
#[derive(Debug, Clone, Copy)]
pub enum Backup<'a> {
    /// Nature minimizes over each interval row.
    Robust,
    /// Nature maximizes over each interval row.
    Optimistic,
    /// Fixed transition probabilities from a point model with the same shape.
    Exact(&'a PointModel),
}

/// Converged Q-table plus the per-row distributions chosen at the fixed point.
#[derive(Debug, Clone)]
pub struct Solution {
    pub q: QTable,
    /// Probabilities aligned with the interval model's flat entries; absent
    /// for exact backups.
    chosen: Option<Vec<f64>>,
    pub iterations: usize,
    /// Sup-norm change after each iteration.
    pub residuals: Vec<f64>,
}

impl Solution {
    pub fn chosen_probs(&self) -> Option<&[f64]> {
        self.chosen.as_deref()
    }

    /// The chosen rows as a point model (for the robust backup this is the
    /// fully observable worst-case transition function).
    pub fn point_model(&self, m: &RamMdp) -> Option<PointModel> {
        self.chosen.as_ref().map(|p| PointModel::from_aligned(m, p))
    }

    pub fn chosen_row(&self, m: &RamMdp, s: StateId, a: ControlActionId) -> Option<WorstCaseRow> {
        let probs = self.chosen.as_ref()?;
        let range = m.row_range(s, a);
        let succ = &m.successors()[range.clone()];
        let dist: Vec<(StateId, f64)> = succ
            .iter()
            .zip(&probs[range])
            .filter(|(_, p)| **p > 0.0)
            .map(|(s, p)| (*s, *p))
            .collect();
        let achieved_value = dist.iter().map(|(sp, p)| p * self.q.value(*sp)).sum();
        Some(WorstCaseRow {
            distribution: dist,
            achieved_value,
        })
    }
}

/// Iterates `Q(s,a) = R(s,a) + gamma * inner(row(s,a), V)` with
/// `V(s') = max_a Q(s',a)` until the sup-norm change drops below `opts.tol`.
///
/// Terminal states keep `Q = 0`. Backups are Jacobi style (each iteration
/// reads only the previous iterate) and run in parallel over states.
pub fn value_iteration(m: &RamMdp, backup: Backup<'_>, opts: &SolveOptions) -> Result<Solution> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let report = m.validate();
    if !report.is_ok() {
        return Err(Error::InvalidModel(report));
    }
    match backup {
        Backup::Robust => interval_vi(m, Direction::Minimize, QVariant::Robust, opts),
        Backup::Optimistic => interval_vi(m, Direction::Maximize, QVariant::Optimistic, opts),
        Backup::Exact(pm) => {
            if pm.num_states() != m.num_states() || pm.num_actions() != m.num_actions() {
                return Err(Error::Domain(
                    "point model shape differs from interval model".into(),
                ));
            }
            point_value_iteration(pm, opts)
        }
    }
}

fn state_values(q: &[f64], na: usize, terminal: &[bool], v: &mut [f64]) {
    for (s, vs) in v.iter_mut().enumerate() {
        *vs = if terminal[s] {
            0.0
        } else {
            q[s * na..(s + 1) * na]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        };
    }
}

fn check_progress(iterations: usize, residual: f64, opts: &SolveOptions) -> Result<bool> {
    if !residual.is_finite() {
        return Err(Error::Divergence {
            iterations,
            residual,
        });
    }
    if residual < opts.tol {
        return Ok(true);
    }
    if iterations >= opts.max_iter {
        return Err(Error::Divergence {
            iterations,
            residual,
        });
    }
    Ok(false)
}

/// Splits `data` into consecutive mutable pieces at the given offsets.
fn split_by_offsets<'a, T>(mut data: &'a mut [T], bounds: &[usize]) -> Vec<&'a mut [T]> {
    let mut out = Vec::with_capacity(bounds.len().saturating_sub(1));
    for w in bounds.windows(2) {
        let (head, tail) = std::mem::take(&mut data).split_at_mut(w[1] - w[0]);
        out.push(head);
        data = tail;
    }
    out
}

fn interval_vi(
    m: &RamMdp,
    dir: Direction,
    variant: QVariant,
    opts: &SolveOptions,
) -> Result<Solution> {
    let (ns, na) = (m.num_states(), m.num_actions());
    let offsets = m.offsets();
    let successors = m.successors();
    let intervals = m.intervals();
    let rewards = m.rewards();
    let terminal = m.terminal_mask();
    let gamma = m.discount();

    let mut probs = vec![0.0; m.num_entries()];
    let mut order: Vec<u32> = Vec::with_capacity(m.num_entries());
    for w in offsets.windows(2) {
        order.extend(0..(w[1] - w[0]) as u32);
    }
    let state_bounds: Vec<usize> = (0..=ns).map(|s| offsets[s * na]).collect();

    let mut q_old = vec![0.0; ns * na];
    let mut q_new = vec![0.0; ns * na];
    let mut v = vec![0.0; ns];
    let mut residuals = Vec::new();
    {
        let mut prob_parts = split_by_offsets(&mut probs, &state_bounds);
        let mut order_parts = split_by_offsets(&mut order, &state_bounds);
        loop {
            state_values(&q_old, na, terminal, &mut v);
            let v = &v;
            let q_prev = &q_old;
            let residual = q_new
                .par_chunks_mut(na)
                .zip(prob_parts.par_iter_mut())
                .zip(order_parts.par_iter_mut())
                .enumerate()
                .with_min_len(64)
                .map_init(Vec::new, |vals: &mut Vec<f64>, (s, ((qs, ps), os))| {
                    if terminal[s] {
                        qs.fill(0.0);
                        return Ok(0.0);
                    }
                    let base = offsets[s * na];
                    let mut res: f64 = 0.0;
                    for a in 0..na {
                        let k = s * na + a;
                        let (lo, hi) = (offsets[k], offsets[k + 1]);
                        vals.clear();
                        vals.extend(successors[lo..hi].iter().map(|sp| v[sp.index()]));
                        let local = lo - base..hi - base;
                        let ord = &mut os[local.clone()];
                        sort_order(vals, dir, ord);
                        let achieved = fill_in_order(&intervals[lo..hi], vals, ord, &mut ps[local])
                            .map_err(|(sum_lo, sum_hi)| Error::Infeasible {
                                location: Some((StateId::from(s), ControlActionId::from(a))),
                                sum_lo,
                                sum_hi,
                            })?;
                        qs[a] = rewards[k] + gamma * achieved;
                        res = res.max((qs[a] - q_prev[k]).abs());
                    }
                    Ok(res)
                })
                .try_reduce(|| 0.0, |x: f64, y: f64| Ok::<f64, Error>(x.max(y)))?;
            std::mem::swap(&mut q_old, &mut q_new);
            residuals.push(residual);
            if check_progress(residuals.len(), residual, opts)? {
                break;
            }
        }
    }
    Ok(Solution {
        q: QTable::new(ns, na, q_old, variant),
        chosen: Some(probs),
        iterations: residuals.len(),
        residuals,
    })
}

/// Exact value iteration on a point model.
pub fn point_value_iteration(pm: &PointModel, opts: &SolveOptions) -> Result<Solution> {
    if !pm.is_valid() {
        return Err(Error::Domain(format!(
            "point model rows must be distributions (max row error {:e})",
            pm.max_row_error()
        )));
    }
    let (ns, na) = (pm.num_states(), pm.num_actions());
    let gamma = pm.discount();
    let terminal: Vec<bool> = (0..ns).map(|s| pm.is_terminal(StateId::from(s))).collect();
    let mut q_old = vec![0.0; ns * na];
    let mut q_new = vec![0.0; ns * na];
    let mut v = vec![0.0; ns];
    let mut residuals = Vec::new();
    loop {
        state_values(&q_old, na, &terminal, &mut v);
        let v = &v;
        let q_prev = &q_old;
        let terminal = &terminal;
        let residual = q_new
            .par_chunks_mut(na)
            .enumerate()
            .with_min_len(64)
            .map(|(s, qs)| {
                if terminal[s] {
                    qs.fill(0.0);
                    return 0.0;
                }
                let st = StateId::from(s);
                let mut res: f64 = 0.0;
                for (a, q) in qs.iter_mut().enumerate() {
                    let at = ControlActionId::from(a);
                    let cont: f64 = pm.row(st, at).iter().map(|(sp, p)| p * v[sp.index()]).sum();
                    *q = pm.reward(st, at) + gamma * cont;
                    res = res.max((*q - q_prev[s * na + a]).abs());
                }
                res
            })
            .reduce(|| 0.0, f64::max);
        std::mem::swap(&mut q_old, &mut q_new);
        residuals.push(residual);
        if check_progress(residuals.len(), residual, opts)? {
            break;
        }
    }
    Ok(Solution {
        q: QTable::new(ns, na, q_old, QVariant::Exact),
        chosen: None,
        iterations: residuals.len(),
        residuals,
    })
}
