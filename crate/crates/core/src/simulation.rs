//! Episode simulation against a fixed nature model.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{average_point_model, ControlActionId, PointModel, RamMdp, StateId};
use crate::planners::Planner;
use crate::solvers::{value_iteration, Backup, SolveOptions};
use crate::{Error, Result};

const NATURE_STREAM: u64 = 0;
const PLANNER_STREAM: u64 = 1;

/// How nature picks transitions from the true interval model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NatureKind {
    /// Worst-case rows of the fully observable robust problem.
    #[default]
    RmdpWorst,
    /// Interval midpoints.
    Average,
    /// A user-supplied point model.
    Point,
}

/// The transition function episodes are sampled from.
#[derive(Debug, Clone)]
pub struct NatureModel {
    pub kind: NatureKind,
    pub model: Arc<PointModel>,
}

impl NatureModel {
    /// Nature plays the fixed worst-case rows of `env`'s robust solution.
    pub fn rmdp_worst(env: &RamMdp, opts: &SolveOptions) -> Result<Self> {
        let sol = value_iteration(env, Backup::Robust, opts)?;
        let model = sol
            .point_model(env)
            .ok_or_else(|| Error::Internal("robust solve returned no rows".into()))?;
        Ok(Self {
            kind: NatureKind::RmdpWorst,
            model: Arc::new(model),
        })
    }

    pub fn average(env: &RamMdp) -> Self {
        Self {
            kind: NatureKind::Average,
            model: Arc::new(average_point_model(env).into_model()),
        }
    }

    pub fn point(model: Arc<PointModel>) -> Self {
        Self {
            kind: NatureKind::Point,
            model,
        }
    }

    pub fn from_kind(kind: NatureKind, env: &RamMdp, opts: &SolveOptions) -> Result<Self> {
        match kind {
            NatureKind::RmdpWorst => Self::rmdp_worst(env, opts),
            NatureKind::Average => Ok(Self::average(env)),
            NatureKind::Point => Err(Error::Domain("point nature needs an explicit model".into())),
        }
    }

    pub fn sample(&self, s: StateId, a: ControlActionId, rng: &mut ChaCha8Rng) -> StateId {
        let row = self.model.row(s, a);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(sp, p) in row {
            acc += p;
            if u < acc {
                return sp;
            }
        }
        row.last().map(|(sp, _)| *sp).unwrap_or(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeOptions {
    pub horizon: usize,
    pub record_trace: bool,
}

/// One step of an episode trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub control: u32,
    pub measure: bool,
    pub mv_robust: f64,
    pub mv_ml: Option<f64>,
    pub reward: f64,
    pub cost: f64,
    /// Entropy (nats) of the robust belief the decision was made from.
    pub belief_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// Discounted rewards minus discounted measuring costs.
    pub scalarized_return: f64,
    /// Discounted rewards only.
    pub nonscalarized_return: f64,
    pub discounted_cost: f64,
    pub num_measurements: usize,
    pub steps: usize,
    pub reached_terminal: bool,
    pub trace: Vec<TraceRecord>,
    pub seed: u64,
}

impl EpisodeResult {
    /// Steps at which a measurement was taken (needs a recorded trace).
    pub fn measured_steps(&self) -> Vec<usize> {
        self.trace
            .iter()
            .filter(|r| r.measure)
            .map(|r| r.t)
            .collect()
    }
}

/// The two independent random streams used by an episode with `seed`.
pub fn episode_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut nature = ChaCha8Rng::seed_from_u64(seed);
    nature.set_stream(NATURE_STREAM);
    let mut planner = ChaCha8Rng::seed_from_u64(seed);
    planner.set_stream(PLANNER_STREAM);
    (nature, planner)
}

/// Runs `planner` against `nature` until a terminal state or the horizon.
///
/// Rewards and measuring costs come from nature's model and are discounted
/// with its discount factor.
pub fn run_episode(
    planner: &Planner,
    nature: &NatureModel,
    seed: u64,
    opts: &EpisodeOptions,
) -> Result<EpisodeResult> {
    if opts.horizon == 0 {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    let env = &nature.model;
    if env.num_states() != planner.model().num_states()
        || env.num_actions() != planner.model().num_actions()
    {
        return Err(Error::Domain(
            "nature and planner models differ in shape".into(),
        ));
    }
    let (mut nature_rng, planner_rng) = episode_rngs(seed);
    let mut s = env.initial_state();
    let mut st = planner.start(s, planner_rng);
    let (gamma, c) = (env.discount(), env.measure_cost());
    let mut discount = 1.0;
    let mut rewards = 0.0;
    let mut costs = 0.0;
    let mut num_measurements = 0;
    let mut trace = Vec::new();
    let mut steps = 0;
    while steps < opts.horizon && !env.is_terminal(s) {
        let entropy = if opts.record_trace {
            st.robust_belief.entropy()
        } else {
            0.0
        };
        let d = planner.decide(&mut st)?;
        let a = d.action_pair.control;
        let reward = env.reward(s, a);
        let cost = if d.measure() { c } else { 0.0 };
        rewards += discount * reward;
        costs += discount * cost;
        num_measurements += usize::from(d.measure());
        let next = nature.sample(s, a, &mut nature_rng);
        planner.advance(&mut st, &d, d.measure().then_some(next))?;
        if opts.record_trace {
            trace.push(TraceRecord {
                t: steps,
                control: a.0,
                measure: d.measure(),
                mv_robust: d.mv_robust,
                mv_ml: d.mv_ml,
                reward,
                cost,
                belief_entropy: entropy,
            });
        }
        s = next;
        discount *= gamma;
        steps += 1;
    }
    Ok(EpisodeResult {
        scalarized_return: rewards - costs,
        nonscalarized_return: rewards,
        discounted_cost: costs,
        num_measurements,
        steps,
        reached_terminal: env.is_terminal(s),
        trace,
        seed,
    })
}

/// Episodes `base_seed + i` for `i < n`, run in parallel, returned in order.
pub fn run_episodes(
    planner: &Planner,
    nature: &NatureModel,
    n: usize,
    base_seed: u64,
    opts: &EpisodeOptions,
) -> Result<Vec<EpisodeResult>> {
    if n == 0 {
        return Err(Error::Domain("need at least one episode".into()));
    }
    (0..n as u64)
        .into_par_iter()
        .map(|i| run_episode(planner, nature, base_seed.wrapping_add(i), opts))
        .collect()
}

/// Sample mean with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci: f64,
}

impl MeanCi {
    /// With one sample the interval is degenerate and `ci` is 0.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                ci: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, ci: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            ci: 1.96 * var.sqrt() / (n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub planner: String,
    pub n: usize,
    pub scalarized: MeanCi,
    pub nonscalarized: MeanCi,
    pub measurements: MeanCi,
}

impl BatchStats {
    pub fn summarize(planner: &str, episodes: &[EpisodeResult]) -> Self {
        let col = |f: fn(&EpisodeResult) -> f64| episodes.iter().map(f).collect::<Vec<_>>();
        Self {
            planner: planner.to_string(),
            n: episodes.len(),
            scalarized: MeanCi::of(&col(|e| e.scalarized_return)),
            nonscalarized: MeanCi::of(&col(|e| e.nonscalarized_return)),
            measurements: MeanCi::of(&col(|e| e.num_measurements as f64)),
        }
    }
}

/// Runs every planner on the same seeds and summarizes each.
pub fn run_batch(
    planners: &[Planner],
    nature: &NatureModel,
    n_episodes: usize,
    base_seed: u64,
    horizon: usize,
) -> Result<Vec<BatchStats>> {
    let opts = EpisodeOptions {
        horizon,
        record_trace: false,
    };
    planners
        .iter()
        .map(|p| {
            let eps = run_episodes(p, nature, n_episodes, base_seed, &opts)?;
            Ok(BatchStats::summarize(p.config().kind.name(), &eps))
        })
        .collect()
}

/// One line of a sweep result table.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub env: String,
    pub param_name: String,
    pub param_value: f64,
    pub planning_alpha: Option<f64>,
    pub stats: BatchStats,
}

/// Writes sweep rows as CSV. The `planning_alpha` column is added when any
/// row carries one.
pub fn write_batch_csv<W: Write>(w: W, rows: &[BatchRow]) -> Result<()> {
    let with_alpha = rows.iter().any(|r| r.planning_alpha.is_some());
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![
        "env",
        "planner",
        "param_name",
        "param_value",
        "mean_return",
        "ci_return",
        "mean_nonscalarized",
        "ci_nonscalarized",
        "mean_measurements",
        "ci_measurements",
        "n",
    ];
    if with_alpha {
        header.push("planning_alpha");
    }
    out.write_record(&header)?;
    for r in rows {
        let s = &r.stats;
        let mut rec = vec![
            r.env.clone(),
            s.planner.clone(),
            r.param_name.clone(),
            r.param_value.to_string(),
            s.scalarized.mean.to_string(),
            s.scalarized.ci.to_string(),
            s.nonscalarized.mean.to_string(),
            s.nonscalarized.ci.to_string(),
            s.measurements.mean.to_string(),
            s.measurements.ci.to_string(),
            s.n.to_string(),
        ];
        if with_alpha {
            rec.push(r.planning_alpha.map(|a| a.to_string()).unwrap_or_default());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a decision trace as CSV.
pub fn write_trace_csv<W: Write>(w: W, trace: &[TraceRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in trace {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::build_ab;
    use crate::planners::{PlannerConfig, PlannerKind, PlanningContext};

    fn ab_setup(c: f64) -> (Planner, NatureModel) {
        let m = build_ab(c).unwrap();
        let nature = NatureModel::rmdp_worst(&m, &SolveOptions::default()).unwrap();
        let ctx = PlanningContext::new(m, SolveOptions::default()).unwrap();
        (
            ctx.planner(PlannerConfig::new(PlannerKind::Ratm)).unwrap(),
            nature,
        )
    }

    #[test]
    fn ab_free_measurement_earns_point_eight() {
        let (p, nature) = ab_setup(0.0);
        let opts = EpisodeOptions {
            horizon: 2,
            record_trace: true,
        };
        for seed in 0..5 {
            let e = run_episode(&p, &nature, seed, &opts).unwrap();
            assert!((e.scalarized_return - 0.8).abs() < 1e-12);
            // with c = 0 the second step's measuring value is exactly 0, which still measures
            assert_eq!(e.measured_steps(), vec![0, 1]);
            assert!(e.reached_terminal);
        }
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let (p, nature) = ab_setup(0.0);
        let opts = EpisodeOptions {
            horizon: 0,
            record_trace: false,
        };
        assert!(matches!(
            run_episode(&p, &nature, 0, &opts),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn single_episode_has_degenerate_interval() {
        let s = MeanCi::of(&[0.3]);
        assert_eq!((s.mean, s.ci), (0.3, 0.0));
        let s = MeanCi::of(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.ci - 1.96 * 2f64.sqrt() / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn batch_is_deterministic() {
        let (p, nature) = ab_setup(0.3);
        let a = run_batch(std::slice::from_ref(&p), &nature, 20, 7, 2).unwrap();
        let b = run_batch(&[p], &nature, 20, 7, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_csv_columns() {
        let (p, nature) = ab_setup(0.3);
        let stats = run_batch(&[p], &nature, 3, 0, 2).unwrap().remove(0);
        let row = BatchRow {
            env: "ab".into(),
            param_name: "c".into(),
            param_value: 0.3,
            planning_alpha: None,
            stats,
        };
        let mut buf = Vec::new();
        write_batch_csv(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "env,planner,param_name,param_value,mean_return,ci_return,mean_nonscalarized,\
             ci_nonscalarized,mean_measurements,ci_measurements,n\n"
        ));
        assert!(text.lines().nth(1).unwrap().starts_with("ab,ratm,c,0.3,"));
    }
}
