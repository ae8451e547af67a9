//! Exhaustive finite-horizon robust planning over beliefs.
//!
//! The agent enumerates every action pair. After a measurement the next
//! state is known, so nature minimizes each support row separately. Without a
//! measurement nature picks one distribution per support row jointly, and the
//! search tries every combination of candidate rows: all interval vertices
//! plus a regular grid, which captures interior equalizing choices.

use std::collections::HashMap;

use serde::Serialize;

use super::vertices::row_vertices;
use crate::model::{ActionPair, Belief, ControlActionId, RamMdp, StateId, UncertainRow};
use crate::{Error, Result};

/// Pairs within this margin of the best value count as optimal; among them
/// the lowest control action wins, and measuring wins over not measuring.
pub const ORACLE_TIE_TOL: f64 = 1e-9;
const BELIEF_KEY_SCALE: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleOptions {
    /// Grid step per free probability coordinate.
    pub grid_resolution: f64,
    /// Largest number of distinct (belief, depth) nodes to evaluate.
    pub max_beliefs: usize,
    /// Largest number of candidate distributions per row.
    pub max_row_candidates: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            grid_resolution: 1e-3,
            max_beliefs: 10_000,
            max_row_candidates: 100_000,
        }
    }
}

/// Best action pair found for one node of the search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyNode {
    pub steps_to_go: usize,
    pub belief: Vec<(StateId, f64)>,
    pub action: ActionPair,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub root_action: ActionPair,
    /// Value of every action pair at the root.
    pub root_values: Vec<(ActionPair, f64)>,
    /// Nature's minimizing rows for the best non-measuring root pair.
    pub root_nature: Vec<(StateId, Vec<(StateId, f64)>)>,
    /// Best pair at every evaluated node, ordered by depth.
    pub policy: Vec<PolicyNode>,
    pub beliefs_evaluated: usize,
}

impl OracleResult {
    pub fn root_value(&self, ap: ActionPair) -> Option<f64> {
        self.root_values
            .iter()
            .find(|(p, _)| *p == ap)
            .map(|(_, v)| *v)
    }

    /// Best root value restricted to pairs with the given measuring choice.
    pub fn best_root_value(&self, measure: bool) -> f64 {
        self.root_values
            .iter()
            .filter(|(p, _)| p.measure == measure)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

type Key = (Vec<(u32, i64)>, usize);
type Distribution = Vec<(StateId, f64)>;

struct Search<'a> {
    m: &'a RamMdp,
    opts: OracleOptions,
    candidates: HashMap<(StateId, ControlActionId), Vec<Distribution>>,
    memo: HashMap<Key, (f64, ActionPair)>,
}

fn key_of(b: &Belief, h: usize) -> Key {
    (
        b.iter()
            .map(|(s, p)| (s.0, (p * BELIEF_KEY_SCALE).round() as i64))
            .collect(),
        h,
    )
}

/// Grid points of `[lo, hi]` plus both endpoints.
fn axis_points(lo: f64, hi: f64, res: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    let start = (lo / res).ceil() as i64;
    let stop = (hi / res).floor() as i64;
    for k in start..=stop {
        let p = k as f64 * res;
        if p > lo && p < hi {
            pts.push(p);
        }
    }
    if hi > lo {
        pts.push(hi);
    }
    pts
}

/// Candidate distributions of one row: vertices and grid points.
fn row_candidates(row: &UncertainRow, opts: &OracleOptions) -> Result<Vec<Vec<f64>>> {
    let n = row.len();
    let mut out = row_vertices(row);
    if n >= 2 {
        let axes: Vec<Vec<f64>> = row.entries[..n - 1]
            .iter()
            .map(|(_, iv)| axis_points(iv.lo, iv.hi, opts.grid_resolution))
            .collect();
        let size = axes
            .iter()
            .map(Vec::len)
            .try_fold(1usize, |acc, l| acc.checked_mul(l));
        if size.is_none_or(|s| s > opts.max_row_candidates) {
            return Err(Error::BudgetExceeded(format!(
                "row with {n} successors needs more than {} grid points",
                opts.max_row_candidates
            )));
        }
        let last = row.entries[n - 1].1;
        let mut idx = vec![0usize; n - 1];
        loop {
            let head: Vec<f64> = idx.iter().zip(&axes).map(|(i, ax)| ax[*i]).collect();
            let rest = 1.0 - head.iter().sum::<f64>();
            if rest >= last.lo - 1e-12 && rest <= last.hi + 1e-12 {
                let mut p = head;
                p.push(rest.clamp(last.lo, last.hi));
                out.push(p);
            }
            let mut k = 0;
            loop {
                if k == n - 1 {
                    return Ok(dedup(out));
                }
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
    Ok(dedup(out))
}

fn dedup(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    v.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    v.dedup();
    v
}

impl<'a> Search<'a> {
    fn candidates(&mut self, s: StateId, a: ControlActionId) -> Result<&[Vec<(StateId, f64)>]> {
        if !self.candidates.contains_key(&(s, a)) {
            let row = self.m.row(s, a).to_owned();
            let cands = row_candidates(&row, &self.opts)?
                .into_iter()
                .map(|p| {
                    row.entries
                        .iter()
                        .zip(p)
                        .filter(|(_, q)| *q > 0.0)
                        .map(|((sp, _), q)| (*sp, q))
                        .collect()
                })
                .collect();
            self.candidates.insert((s, a), cands);
        }
        Ok(&self.candidates[&(s, a)])
    }

    fn all_terminal(&self, b: &Belief) -> bool {
        b.support().all(|s| self.m.is_terminal(s))
    }

    fn value(&mut self, b: &Belief, h: usize) -> Result<f64> {
        Ok(self.best(b, h)?.0)
    }

    fn best(&mut self, b: &Belief, h: usize) -> Result<(f64, ActionPair)> {
        let none = ActionPair::new(ControlActionId(0), false);
        if h == 0 || self.all_terminal(b) {
            return Ok((0.0, none));
        }
        let key = key_of(b, h);
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        if self.memo.len() >= self.opts.max_beliefs {
            return Err(Error::BudgetExceeded(format!(
                "more than {} beliefs reachable",
                self.opts.max_beliefs
            )));
        }
        let (vals, _) = self.pair_values(b, h)?;
        let best = pick(&vals);
        self.memo.insert(key, best);
        Ok(best)
    }

    /// Values of all pairs and nature's choice for each non-measuring pair.
    #[allow(clippy::type_complexity)]
    fn pair_values(
        &mut self,
        b: &Belief,
        h: usize,
    ) -> Result<(
        Vec<(ActionPair, f64)>,
        Vec<Vec<(StateId, Vec<(StateId, f64)>)>>,
    )> {
        let gamma = self.m.discount();
        let c = self.m.measure_cost();
        let mut out = Vec::new();
        let mut natures = Vec::new();
        for a in self.m.actions() {
            let immediate: f64 = b.iter().map(|(s, p)| p * self.m.reward(s, a)).sum();

            let mut measured = 0.0;
            for (s, p) in b.iter() {
                let cands = self.candidates(s, a)?.to_vec();
                let mut best = f64::INFINITY;
                for cand in &cands {
                    let mut v = 0.0;
                    for &(sp, q) in cand {
                        v += q * self.value(&Belief::delta(sp), h - 1)?;
                    }
                    best = best.min(v);
                }
                measured += p * best;
            }
            out.push((ActionPair::new(a, true), immediate - c + gamma * measured));

            let support: Vec<(StateId, f64)> = b.iter().collect();
            let lists: Vec<Vec<Vec<(StateId, f64)>>> = support
                .iter()
                .map(|(s, _)| self.candidates(*s, a).map(|c| c.to_vec()))
                .collect::<Result<_>>()?;
            let combos = lists
                .iter()
                .try_fold(1usize, |acc, l| acc.checked_mul(l.len()));
            if combos.is_none_or(|n| n > self.opts.max_beliefs * 100) {
                return Err(Error::BudgetExceeded(format!(
                    "too many joint nature choices at a belief with {} support states",
                    support.len()
                )));
            }
            let mut idx = vec![0usize; lists.len()];
            let mut best = f64::INFINITY;
            let mut best_idx = idx.clone();
            'outer: loop {
                let weights = support
                    .iter()
                    .zip(&idx)
                    .zip(&lists)
                    .flat_map(|(((_, p), i), l)| l[*i].iter().map(move |(sp, q)| (*sp, p * q)));
                let next = Belief::from_weights(weights)?;
                let v = self.value(&next, h - 1)?;
                if v < best - 1e-15 {
                    best = v;
                    best_idx = idx.clone();
                }
                let mut k = 0;
                loop {
                    if k == lists.len() {
                        break 'outer;
                    }
                    idx[k] += 1;
                    if idx[k] < lists[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
            out.push((ActionPair::new(a, false), immediate + gamma * best));
            natures.push(
                support
                    .iter()
                    .zip(&best_idx)
                    .zip(&lists)
                    .map(|(((s, _), i), l)| (*s, l[*i].clone()))
                    .collect(),
            );
        }
        Ok((out, natures))
    }
}

/// Lowest control, measuring first, among pairs within the tie margin.
fn pick(vals: &[(ActionPair, f64)]) -> (f64, ActionPair) {
    let best = vals
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let ap = vals
        .iter()
        .filter(|(_, v)| *v >= best - ORACLE_TIE_TOL)
        .map(|(p, _)| *p)
        .min_by_key(|p| (p.control, !p.measure))
        .expect("at least one action pair");
    (best, ap)
}

/// Robust value of `b0` over `horizon` steps by exhaustive search.
pub fn exact_finite_horizon_value(
    env: &RamMdp,
    b0: &Belief,
    horizon: usize,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    if horizon == 0 || horizon > 3 {
        return Err(Error::Domain(format!(
            "horizon must lie in 1..=3, got {horizon}"
        )));
    }
    if !(opts.grid_resolution > 0.0 && opts.grid_resolution <= 1.0) {
        return Err(Error::Domain("grid resolution must lie in (0, 1]".into()));
    }
    let report = env.validate();
    if !report.is_ok() {
        return Err(Error::InvalidModel(report));
    }
    let mut search = Search {
        m: env,
        opts: *opts,
        candidates: HashMap::new(),
        memo: HashMap::new(),
    };
    let (root_values, natures) = search.pair_values(b0, horizon)?;
    let (value, root_action) = pick(&root_values);
    let best_nomeasure = root_values
        .iter()
        .enumerate()
        .filter(|(_, (p, _))| !p.measure)
        .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1).then(y.0.cmp(&x.0)))
        .map(|(i, _)| i / 2)
        .unwrap_or(0);
    let mut policy: Vec<PolicyNode> = search
        .memo
        .iter()
        .map(|((entries, h), (v, ap))| PolicyNode {
            steps_to_go: *h,
            belief: entries
                .iter()
                .map(|(s, p)| (StateId(*s), *p as f64 / BELIEF_KEY_SCALE))
                .collect(),
            action: *ap,
            value: *v,
        })
        .collect();
    policy.sort_by(|x, y| {
        y.steps_to_go.cmp(&x.steps_to_go).then_with(|| {
            x.belief
                .partial_cmp(&y.belief)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(OracleResult {
        value,
        root_action,
        root_nature: natures.get(best_nomeasure).cloned().unwrap_or_default(),
        beliefs_evaluated: search.memo.len(),
        root_values,
        policy,
    })
}
