#![allow(dead_code)]

use ramdp_core::model::{
    Belief, ControlActionId, ProbInterval, RamMdp, RamMdpBuilder, RowRef, StateId, UncertainRow,
};
use ramdp_core::solvers::{QTable, QVariant, WorstCaseRow};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A feasible interval row around a random distribution on `<= max_len`
/// successors out of `n` states.
pub fn random_row(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> UncertainRow {
    let len = rng.gen_range(1..=max_len.min(n));
    let mut targets: Vec<usize> = sample(rng, n, len).into_vec();
    targets.sort_unstable();
    let weights: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    UncertainRow::new(
        targets
            .into_iter()
            .zip(weights)
            .map(|(t, w)| {
                let p = w / total;
                let lo = p * rng.gen_range(0.0..1.0);
                let hi = (p + rng.gen_range(0.0..0.5)).min(1.0);
                (StateId(t as u32), ProbInterval::new(lo, hi))
            })
            .collect(),
    )
}

/// A small random model, random Q-values and a random belief.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (RamMdp, QTable, Belief) {
    let ns = rng.gen_range(2..=5);
    let na = rng.gen_range(2..=3);
    let mut b = RamMdpBuilder::new(ns, na).discount(0.9);
    for s in 0..ns {
        for a in 0..na {
            b.set_row(
                StateId(s as u32),
                ControlActionId(a as u32),
                random_row(rng, ns, 4),
            );
        }
    }
    let m = b.build_validated().expect("random model is valid");
    let q: Vec<f64> = (0..ns * na).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let support = rng.gen_range(1..=ns.min(3));
    let states = sample(rng, ns, support).into_vec();
    let belief = Belief::from_weights(
        states
            .into_iter()
            .map(|s| (StateId(s as u32), rng.gen_range(0.1..1.0))),
    )
    .unwrap();
    (m, QTable::new(ns, na, q, QVariant::Robust), belief)
}

/// A uniformly random point of the row's polytope, by filling lower bounds
/// and spreading the remaining mass in random order with random shares.
pub fn sample_feasible(row: RowRef<'_>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut p: Vec<f64> = row.intervals.iter().map(|i| i.lo).collect();
    let mut rest = 1.0 - p.iter().sum::<f64>();
    let mut order: Vec<usize> = (0..p.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for (k, &i) in order.iter().enumerate() {
        let room = row.intervals[i].hi - p[i];
        let share = if k + 1 == order.len() {
            rest
        } else {
            rest * rng.gen_range(0.0..1.0)
        };
        let add = share.min(room).max(0.0);
        p[i] += add;
        rest -= add;
    }
    for (i, iv) in row.intervals.iter().enumerate() {
        if rest <= 0.0 {
            break;
        }
        let add = (iv.hi - p[i]).min(rest).max(0.0);
        p[i] += add;
        rest -= add;
    }
    p
}

/// Expected next Q-value of every response under one row per support state.
pub fn response_values(
    m: &RamMdp,
    b: &Belief,
    a: ControlActionId,
    q: &QTable,
    probs: &[Vec<f64>],
) -> Vec<f64> {
    let mut out = vec![0.0; m.num_actions()];
    for ((s, w), p) in b.iter().zip(probs) {
        let row = m.row(s, a);
        for (sp, pk) in row.successors.iter().zip(p) {
            for (j, o) in out.iter_mut().enumerate() {
                *o += w * pk * q.get(*sp, ControlActionId(j as u32));
            }
        }
    }
    out
}

/// Dense probabilities of `row` laid out along the model row for `s`.
pub fn dense(m: &RamMdp, s: StateId, a: ControlActionId, row: &WorstCaseRow) -> Vec<f64> {
    m.row(s, a)
        .successors
        .iter()
        .map(|sp| row.prob(*sp))
        .collect()
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
