//! Online act-then-measure planners.
//!
//! Every planner picks its control action from the robust Q-values of the
//! current belief and then decides whether to measure after acting. The
//! robust planner (`ratm`) measures when the worst-case value of knowing the
//! next state exceeds the measuring cost. Measurement-lenient planners
//! (`mlatm-*`) keep its control actions and may add measurements that a less
//! pessimistic model deems worthwhile. The `atm-*` baselines run the robust
//! machinery on a model without transition uncertainty.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    average_point_model, ActionPair, Belief, ControlActionId, PointModel, RamMdp, StateId,
};
use crate::solvers::{
    value_iteration, worst_case_transition_nomeasure, Backup, NoMeasureSolution, QTable, Solution,
    SolveOptions,
};
use crate::{Error, Result};

/// Actions whose value is within this margin of the best are tied.
pub const TIE_TOL: f64 = 1e-9;
/// A measuring value this close below zero still triggers a measurement.
pub const MEASURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MlVariant {
    /// Best-case rows of the interval model.
    Opt,
    /// Worst-case rows of the fully observable robust problem.
    Pes,
    /// Interval midpoints.
    Avg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtmModel {
    Avg,
    Pes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PlannerKind {
    Ratm,
    Mlatm(MlVariant),
    Atm(AtmModel),
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 6] = [
        PlannerKind::Ratm,
        PlannerKind::Mlatm(MlVariant::Opt),
        PlannerKind::Mlatm(MlVariant::Pes),
        PlannerKind::Mlatm(MlVariant::Avg),
        PlannerKind::Atm(AtmModel::Avg),
        PlannerKind::Atm(AtmModel::Pes),
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Ratm => "ratm",
            PlannerKind::Mlatm(MlVariant::Opt) => "mlatm-opt",
            PlannerKind::Mlatm(MlVariant::Pes) => "mlatm-pes",
            PlannerKind::Mlatm(MlVariant::Avg) => "mlatm-avg",
            PlannerKind::Atm(AtmModel::Avg) => "atm-avg",
            PlannerKind::Atm(AtmModel::Pes) => "atm-pes",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown planner {s:?}")))
    }
}

impl TryFrom<String> for PlannerKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PlannerKind> for String {
    fn from(k: PlannerKind) -> String {
        k.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    Lexicographic,
    SeededRandom,
}

/// Which action the lenient measuring value credits after a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MlMvMode {
    /// The robust greedy action in the revealed state.
    #[default]
    RobustActions,
    /// The greedy action of the lenient model's own Q-values.
    MlOptimalActions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    #[serde(default)]
    pub tie_break: TieBreak,
    #[serde(default)]
    pub ml_mv_mode: MlMvMode,
}

impl PlannerConfig {
    pub fn new(kind: PlannerKind) -> Self {
        Self {
            kind,
            tie_break: TieBreak::default(),
            ml_mv_mode: MlMvMode::default(),
        }
    }
}

/// Lowest index among entries within [`TIE_TOL`] of the maximum, or a
/// uniformly drawn one of them when `rng` is given.
pub fn tied_argmax(values: &[f64], rng: Option<&mut ChaCha8Rng>) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut tied = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= best - TIE_TOL)
        .map(|(i, _)| i);
    match rng {
        None => tied.next().unwrap_or(0),
        Some(rng) => {
            let all: Vec<usize> = tied.collect();
            if all.len() <= 1 {
                all.first().copied().unwrap_or(0)
            } else {
                all[rng.gen_range(0..all.len())]
            }
        }
    }
}

/// `sum_s b(s) Q(s, a)` for every action.
pub fn belief_q_values(q: &QTable, b: &Belief) -> Vec<f64> {
    let mut out = vec![0.0; q.num_actions()];
    for (s, p) in b.iter() {
        for (o, v) in out.iter_mut().zip(q.state_row(s)) {
            *o += p * v;
        }
    }
    out
}

/// An interval model with its robust solution.
#[derive(Debug)]
pub struct RobustModel {
    pub model: Arc<RamMdp>,
    pub solution: Arc<Solution>,
    /// The chosen worst-case rows as a point model.
    pub worst_case: Arc<PointModel>,
}

impl RobustModel {
    pub fn solve(model: Arc<RamMdp>, opts: &SolveOptions) -> Result<Self> {
        let solution = value_iteration(&model, Backup::Robust, opts)?;
        let worst_case = solution
            .point_model(&model)
            .ok_or_else(|| Error::Internal("robust solve returned no rows".into()))?;
        Ok(Self {
            model,
            solution: Arc::new(solution),
            worst_case: Arc::new(worst_case),
        })
    }
}

/// A point model with its exact Q-values.
#[derive(Debug)]
pub struct MlModel {
    pub point: Arc<PointModel>,
    pub q: Arc<QTable>,
}

type Slot<T> = Mutex<Option<Arc<T>>>;

fn cached<T>(slot: &Slot<T>, make: impl FnOnce() -> Result<T>) -> Result<Arc<T>> {
    let mut guard = slot
        .lock()
        .map_err(|_| Error::Internal("poisoned planner cache".into()))?;
    if let Some(v) = guard.as_ref() {
        return Ok(v.clone());
    }
    let v = Arc::new(make()?);
    *guard = Some(v.clone());
    Ok(v)
}

/// Everything planners precompute for one planning model, built on demand
/// and shared between planners.
#[derive(Debug)]
pub struct PlanningContext {
    robust: Arc<RobustModel>,
    opts: SolveOptions,
    optimistic: Slot<MlModel>,
    average: Slot<MlModel>,
    atm_avg: Slot<RobustModel>,
    atm_pes: Slot<RobustModel>,
}

impl PlanningContext {
    /// Solves the robust problem for `model` right away.
    pub fn new(model: RamMdp, opts: SolveOptions) -> Result<Self> {
        let robust = RobustModel::solve(Arc::new(model), &opts)?;
        Ok(Self {
            robust: Arc::new(robust),
            opts,
            optimistic: Mutex::new(None),
            average: Mutex::new(None),
            atm_avg: Mutex::new(None),
            atm_pes: Mutex::new(None),
        })
    }

    pub fn model(&self) -> &Arc<RamMdp> {
        &self.robust.model
    }

    pub fn robust(&self) -> &Arc<RobustModel> {
        &self.robust
    }

    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }

    pub fn optimistic(&self) -> Result<Arc<MlModel>> {
        cached(&self.optimistic, || {
            let m = self.model();
            let sol = value_iteration(m, Backup::Optimistic, &self.opts)?;
            let point = sol
                .point_model(m)
                .ok_or_else(|| Error::Internal("optimistic solve returned no rows".into()))?;
            Ok(MlModel {
                point: Arc::new(point),
                q: Arc::new(sol.q),
            })
        })
    }

    pub fn average(&self) -> Result<Arc<MlModel>> {
        cached(&self.average, || {
            let m = self.model();
            let point = average_point_model(m).into_model();
            let sol = value_iteration(m, Backup::Exact(&point), &self.opts)?;
            Ok(MlModel {
                point: Arc::new(point),
                q: Arc::new(sol.q),
            })
        })
    }

    pub fn pessimistic(&self) -> MlModel {
        MlModel {
            point: self.robust.worst_case.clone(),
            q: Arc::new(self.robust.solution.q.clone()),
        }
    }

    /// The robust problem on the degenerate model `[p, p]` of a point model.
    pub fn atm(&self, which: AtmModel) -> Result<Arc<RobustModel>> {
        let (slot, point) = match which {
            AtmModel::Avg => (&self.atm_avg, self.average()?.point.clone()),
            AtmModel::Pes => (&self.atm_pes, self.robust.worst_case.clone()),
        };
        cached(slot, || {
            RobustModel::solve(Arc::new(point.to_interval_model()), &self.opts)
        })
    }

    pub fn planner(&self, config: PlannerConfig) -> Result<Planner> {
        let (robust, ml) = match config.kind {
            PlannerKind::Ratm => (self.robust.clone(), None),
            PlannerKind::Mlatm(v) => {
                let ml = match v {
                    MlVariant::Opt => self.optimistic()?,
                    MlVariant::Avg => self.average()?,
                    MlVariant::Pes => Arc::new(self.pessimistic()),
                };
                (self.robust.clone(), Some(ml))
            }
            PlannerKind::Atm(which) => (self.atm(which)?, None),
        };
        Ok(Planner { config, robust, ml })
    }
}

/// Mutable per-episode planner state.
#[derive(Debug, Clone)]
pub struct PlannerState {
    pub robust_belief: Belief,
    pub ml_belief: Option<Belief>,
    pub rng: ChaCha8Rng,
}

/// One step's decision with the values behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action_pair: ActionPair,
    pub mv_robust: f64,
    pub mv_ml: Option<f64>,
    /// `sum_s b(s) Q(s, a)` of the chosen control action.
    pub control_q: f64,
    /// Best response to nature's non-measuring worst case.
    pub chosen_response: Option<ControlActionId>,
    /// Robust belief after the step if no measurement is taken.
    #[serde(skip)]
    pub next_robust: Option<Belief>,
    #[serde(skip)]
    pub next_ml: Option<Belief>,
}

impl Decision {
    pub fn measure(&self) -> bool {
        self.action_pair.measure
    }
}

/// A configured planner bound to precomputed models. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Planner {
    config: PlannerConfig,
    robust: Arc<RobustModel>,
    ml: Option<Arc<MlModel>>,
}

impl Planner {
    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    /// The interval model the planner reasons with.
    pub fn model(&self) -> &RamMdp {
        &self.robust.model
    }

    pub fn robust_q(&self) -> &QTable {
        &self.robust.solution.q
    }

    pub fn ml_model(&self) -> Option<&MlModel> {
        self.ml.as_deref()
    }

    /// Fresh state with every belief on `s`; the rng drives random tie-breaks.
    pub fn start(&self, s: StateId, rng: ChaCha8Rng) -> PlannerState {
        PlannerState {
            robust_belief: Belief::delta(s),
            ml_belief: self.ml.as_ref().map(|_| Belief::delta(s)),
            rng,
        }
    }

    /// Starts from the model's initial state with a seeded rng.
    pub fn start_seeded(&self, seed: u64) -> PlannerState {
        self.start(
            self.model().initial_state(),
            ChaCha8Rng::seed_from_u64(seed),
        )
    }

    /// `argmax_a sum_s b(s) Q_robust(s, a)`.
    pub fn control_action(&self, st: &mut PlannerState) -> ControlActionId {
        let values = belief_q_values(self.robust_q(), &st.robust_belief);
        let rng = match self.config.tie_break {
            TieBreak::Lexicographic => None,
            TieBreak::SeededRandom => Some(&mut st.rng),
        };
        ControlActionId::from(tied_argmax(&values, rng))
    }

    /// Expected next state value when the next state will be observed, with
    /// nature using the fully observable worst-case rows.
    pub fn measured_continuation(&self, b: &Belief, a: ControlActionId) -> f64 {
        let q = self.robust_q();
        b.iter()
            .map(|(s, p)| {
                let row: f64 = self
                    .robust
                    .worst_case
                    .row(s, a)
                    .iter()
                    .map(|(sp, ps)| ps * q.value(*sp))
                    .sum();
                p * row
            })
            .sum()
    }

    /// Robust measuring value of acting with `a` from `b`, together with
    /// nature's non-measuring worst case.
    pub fn measuring_value(
        &self,
        b: &Belief,
        a: ControlActionId,
    ) -> Result<(f64, NoMeasureSolution)> {
        let m = self.model();
        let nomeasure = worst_case_transition_nomeasure(m, b, a, self.robust_q())?;
        let measured = self.measured_continuation(b, a);
        let mv = m.discount() * (measured - nomeasure.game_value) - m.measure_cost();
        Ok((mv, nomeasure))
    }

    /// Lenient measuring value: expected regret under the lenient model's
    /// next belief of continuing with the robust policy's belief-level action
    /// instead of acting on the revealed state.
    pub fn ml_measuring_value(
        &self,
        ml_belief: &Belief,
        a: ControlActionId,
        next_robust: &Belief,
    ) -> Result<(f64, Belief)> {
        let ml = self
            .ml
            .as_ref()
            .ok_or_else(|| Error::Contract("planner has no lenient model".into()))?;
        let m = self.model();
        let next_ml = ml.point.propagate(ml_belief, a)?;
        let a_r = tied_argmax(&belief_q_values(self.robust_q(), next_robust), None);
        let regret: f64 = next_ml
            .iter()
            .map(|(s, p)| {
                let row = ml.q.state_row(s);
                let best = match self.config.ml_mv_mode {
                    MlMvMode::RobustActions => tied_argmax(self.robust_q().state_row(s), None),
                    MlMvMode::MlOptimalActions => tied_argmax(row, None),
                };
                p * (row[best] - row[a_r])
            })
            .sum();
        Ok((m.discount() * regret - m.measure_cost(), next_ml))
    }

    pub fn decide(&self, st: &mut PlannerState) -> Result<Decision> {
        let a = self.control_action(st);
        let control_q = belief_q_values(self.robust_q(), &st.robust_belief)[a.index()];
        let (mv_robust, nomeasure) = self.measuring_value(&st.robust_belief, a)?;
        let next_robust = nomeasure.next_belief(&st.robust_belief)?;
        let mut measure = mv_robust >= -MEASURE_TOL;
        let (mv_ml, next_ml) = match &st.ml_belief {
            Some(bml) if self.ml.is_some() => {
                let (mv, next) = self.ml_measuring_value(bml, a, &next_robust)?;
                measure |= mv >= -MEASURE_TOL;
                (Some(mv), Some(next))
            }
            _ => (None, None),
        };
        Ok(Decision {
            action_pair: ActionPair::new(a, measure),
            mv_robust,
            mv_ml,
            control_q,
            chosen_response: Some(nomeasure.response),
            next_robust: Some(next_robust),
            next_ml,
        })
    }

    /// Moves both beliefs past `decision`. `observation` must be present
    /// exactly when the decision measured.
    pub fn advance(
        &self,
        st: &mut PlannerState,
        decision: &Decision,
        observation: Option<StateId>,
    ) -> Result<()> {
        match (decision.measure(), observation) {
            (true, Some(s)) => {
                if s.index() >= self.model().num_states() {
                    return Err(Error::Contract(format!("observed state {s} out of range")));
                }
                st.robust_belief = Belief::delta(s);
                if st.ml_belief.is_some() {
                    st.ml_belief = Some(Belief::delta(s));
                }
                Ok(())
            }
            (false, None) => {
                let a = decision.action_pair.control;
                st.robust_belief = match &decision.next_robust {
                    Some(b) => b.clone(),
                    None => self
                        .measuring_value(&st.robust_belief, a)?
                        .1
                        .next_belief(&st.robust_belief)?,
                };
                if let (Some(bml), Some(ml)) = (&st.ml_belief, &self.ml) {
                    st.ml_belief = Some(match &decision.next_ml {
                        Some(b) => b.clone(),
                        None => ml.point.propagate(bml, a)?,
                    });
                }
                Ok(())
            }
            (true, None) => Err(Error::Contract(
                "measurement taken but no observation given".into(),
            )),
            (false, Some(_)) => Err(Error::Contract(
                "observation given without a measurement".into(),
            )),
        }
    }
}
