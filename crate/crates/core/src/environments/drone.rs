//! Drone flying through an L-shaped corridor with wind perturbations.
//!
//! The corridor is the union of `x in [0, 29], y in [0, 5]` and
//! `x in [0, 5], y in [0, 29]` (324 cells). A state is a corridor cell plus a
//! velocity in `[-5, 5]^2`; one extra sink state absorbs every exit from the
//! corridor and every visit to the goal area `y > 27`.

use crate::model::{
    confidence_upper, ControlActionId, CsrRows, ProbInterval, RamMdp, StateId, PROB_EPS,
};
use crate::{Error, Result};

pub const V_MAX: i32 = 5;
pub const A_MAX: i32 = 2;
pub const NUM_VELOCITIES: usize = 121;
pub const NUM_ACTIONS: usize = 25;
pub const NUM_CELLS: usize = 324;
/// Non-sink states.
pub const NUM_FLIGHT_STATES: usize = NUM_CELLS * NUM_VELOCITIES;
pub const SINK: StateId = StateId(NUM_FLIGHT_STATES as u32);
const EXTENT: i32 = 30;
const WIDTH: i32 = 6;
const GOAL_Y: i32 = 27;

/// Per-axis perturbation distribution.
pub const PERTURBATION: [(i32, f64); 5] = [(-2, 0.02), (-1, 0.14), (0, 0.68), (1, 0.14), (2, 0.02)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneParams {
    pub alpha: f64,
    pub c: f64,
    pub step_penalty: f64,
    pub gamma: f64,
}

impl Default for DroneParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            c: 0.01,
            step_penalty: 0.01,
            gamma: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DroneState {
    pub x: i32,
    pub y: i32,
    pub vx: i32,
    pub vy: i32,
}

/// Cell numbering and state encoding.
#[derive(Debug, Clone)]
pub struct DroneGeometry {
    cell_of: Vec<Option<u32>>,
    cells: Vec<(i32, i32)>,
}

impl Default for DroneGeometry {
    fn default() -> Self {
        Self::new()
    }
}

impl DroneGeometry {
    pub fn new() -> Self {
        let mut cell_of = vec![None; (EXTENT * EXTENT) as usize];
        let mut cells = Vec::with_capacity(NUM_CELLS);
        for y in 0..EXTENT {
            for x in 0..EXTENT {
                if Self::in_corridor(x, y) {
                    cell_of[(y * EXTENT + x) as usize] = Some(cells.len() as u32);
                    cells.push((x, y));
                }
            }
        }
        debug_assert_eq!(cells.len(), NUM_CELLS);
        Self { cell_of, cells }
    }

    pub fn in_corridor(x: i32, y: i32) -> bool {
        let horizontal = (0..EXTENT).contains(&x) && (0..WIDTH).contains(&y);
        let vertical = (0..WIDTH).contains(&x) && (0..EXTENT).contains(&y);
        horizontal || vertical
    }

    pub fn is_goal(st: &DroneState) -> bool {
        st.y > GOAL_Y
    }

    pub fn encode(&self, st: &DroneState) -> Option<StateId> {
        if !Self::in_corridor(st.x, st.y) || st.vx.abs() > V_MAX || st.vy.abs() > V_MAX {
            return None;
        }
        let cell = self.cell_of[(st.y * EXTENT + st.x) as usize]? as usize;
        let v = ((st.vx + V_MAX) * (2 * V_MAX + 1) + (st.vy + V_MAX)) as usize;
        Some(StateId::from(cell * NUM_VELOCITIES + v))
    }

    pub fn decode(&self, s: StateId) -> Option<DroneState> {
        if s.index() >= NUM_FLIGHT_STATES {
            return None;
        }
        let (cell, v) = (
            s.index() / NUM_VELOCITIES,
            (s.index() % NUM_VELOCITIES) as i32,
        );
        let (x, y) = self.cells[cell];
        Some(DroneState {
            x,
            y,
            vx: v / (2 * V_MAX + 1) - V_MAX,
            vy: v % (2 * V_MAX + 1) - V_MAX,
        })
    }

    pub fn action(ax: i32, ay: i32) -> ControlActionId {
        ControlActionId(((ax + A_MAX) * (2 * A_MAX + 1) + (ay + A_MAX)) as u32)
    }

    pub fn acceleration(a: ControlActionId) -> (i32, i32) {
        let k = a.0 as i32;
        (k / (2 * A_MAX + 1) - A_MAX, k % (2 * A_MAX + 1) - A_MAX)
    }

    /// One step of the kinematics for a fixed perturbation.
    pub fn step(st: &DroneState, ax: i32, ay: i32, wx: i32, wy: i32) -> DroneState {
        let vx = (st.vx + ax + wx).clamp(-V_MAX, V_MAX);
        let vy = (st.vy + ay + wy).clamp(-V_MAX, V_MAX);
        DroneState {
            x: st.x + (st.vx + vx).div_euclid(2),
            y: st.y + (st.vy + vy).div_euclid(2),
            vx,
            vy,
        }
    }

    /// Successor distribution without uncertainty, merged and sorted; exits
    /// from the corridor go to the sink.
    pub fn base_row(&self, st: &DroneState, a: ControlActionId, out: &mut Vec<(StateId, f64)>) {
        let (ax, ay) = Self::acceleration(a);
        out.clear();
        for &(wx, px) in &PERTURBATION {
            for &(wy, py) in &PERTURBATION {
                let next = Self::step(st, ax, ay, wx, wy);
                let s = self.encode(&next).unwrap_or(SINK);
                out.push((s, px * py));
            }
        }
        out.sort_by_key(|(s, _)| *s);
        out.dedup_by(|(s, p), (t, q)| {
            if s == t {
                *q += *p;
                true
            } else {
                false
            }
        });
    }
}

pub fn initial_state() -> DroneState {
    DroneState {
        x: 29,
        y: 2,
        vx: 0,
        vy: 0,
    }
}

/// Builds the interval model at confidence level `alpha`. Acting in the goal
/// area pays 1 and moves to the sink; every other flight step costs
/// `step_penalty`.
pub fn build_drone(p: &DroneParams) -> Result<RamMdp> {
    if !(p.alpha > 0.0 && p.alpha <= 1.0) {
        return Err(Error::Domain(format!(
            "confidence level must lie in (0, 1], got {}",
            p.alpha
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
    let geo = DroneGeometry::new();
    let ns = NUM_FLIGHT_STATES + 1;
    let nrows = ns * NUM_ACTIONS;
    let mut rows = CsrRows::with_capacity(nrows, nrows * 12);
    let mut rewards = Vec::with_capacity(nrows);
    let mut scratch = Vec::with_capacity(NUM_ACTIONS);
    for s in 0..NUM_FLIGHT_STATES {
        let st = geo.decode(StateId::from(s)).expect("flight state decodes");
        let goal = DroneGeometry::is_goal(&st);
        for a in 0..NUM_ACTIONS {
            if goal {
                rows.push_row([(SINK, ProbInterval::point(1.0))]);
                rewards.push(1.0);
                continue;
            }
            geo.base_row(&st, ControlActionId::from(a), &mut scratch);
            debug_assert!((scratch.iter().map(|(_, q)| q).sum::<f64>() - 1.0).abs() < PROB_EPS);
            rows.push_row(
                scratch
                    .iter()
                    .map(|&(sp, q)| (sp, ProbInterval::new(0.0, confidence_upper(q, p.alpha)))),
            );
            rewards.push(-p.step_penalty);
        }
    }
    for _ in 0..NUM_ACTIONS {
        rows.push_row([(SINK, ProbInterval::point(1.0))]);
    }
    rewards.resize(rewards.len() + NUM_ACTIONS, 0.0);
    let mut terminal = vec![false; ns];
    terminal[SINK.index()] = true;
    let init = geo
        .encode(&initial_state())
        .expect("initial state lies in the corridor");
    Ok(RamMdp::from_csr(
        ns,
        NUM_ACTIONS,
        rows,
        rewards,
        p.c,
        p.gamma,
        init,
        terminal,
    ))
}
