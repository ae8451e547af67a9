//! The work behind each subcommand.

use std::fmt::Write as _;
use std::path::Path;

use ramdp_core::environments::toy::{belief_dep, ACTION_A, S0};
use ramdp_core::model::{Belief, RamMdp};
use ramdp_core::oracle::{
    ab_optimal_threshold, exact_finite_horizon_value, leniency_bound, leniency_bound_check,
    lucky_unlucky_optimal, OracleOptions,
};
use ramdp_core::planners::{MlVariant, PlannerConfig, PlannerKind, PlanningContext};
use ramdp_core::simulation::{run_batch, BatchRow, NatureModel};
use ramdp_core::solvers::{worst_case_transition_nomeasure, SolveOptions};

use crate::args::{EnvName, EnvParams, OracleArgs, OracleTarget};
use crate::config::ExperimentConfig;
use crate::CliError;

/// Runs every planner at every sweep point. Rows come out sweep-major in
/// config order.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed: Option<u64>,
    episodes: Option<usize>,
) -> Result<Vec<BatchRow>, CliError> {
    let episodes = episodes.unwrap_or(cfg.episodes);
    if episodes == 0 {
        return Err(CliError::Config("episodes must be at least 1".into()));
    }
    let seed = seed.unwrap_or(cfg.base_seed);
    let opts = cfg.solve_options();
    let horizon = cfg.horizon.unwrap_or_else(|| cfg.env.default_horizon());
    let mut rows = Vec::new();
    for value in cfg.sweep.points()? {
        let mut truth = cfg.env.clone();
        truth.set_param(&cfg.sweep.param, value)?;
        let mut planning = truth.clone();
        if let Some(a) = cfg.sweep.planning_alpha {
            planning.set_param("alpha", a)?;
        }
        let true_model = truth.build()?;
        let nature = NatureModel::from_kind(cfg.nature, &true_model, &opts)?;
        let ctx = if planning == truth {
            PlanningContext::new(true_model, opts)?
        } else {
            PlanningContext::new(planning.build()?, opts)?
        };
        let planners = cfg
            .planner_configs()
            .into_iter()
            .map(|c| ctx.planner(c))
            .collect::<Result<Vec<_>, _>>()?;
        for stats in run_batch(&planners, &nature, episodes, seed, horizon)? {
            rows.push(BatchRow {
                env: cfg.env.name().to_string(),
                param_name: cfg.sweep.param.clone(),
                param_value: value,
                planning_alpha: cfg.sweep.planning_alpha,
                stats,
            });
        }
    }
    Ok(rows)
}

fn first_ratm_measure(m: RamMdp) -> Result<bool, CliError> {
    let ctx = PlanningContext::new(m, SolveOptions::default())?;
    let p = ctx.planner(PlannerConfig::new(PlannerKind::Ratm))?;
    let mut st = p.start_seeded(0);
    Ok(p.decide(&mut st)?.measure())
}

fn verdict(measure: bool) -> &'static str {
    if measure {
        "measure"
    } else {
        "skip"
    }
}

fn oracle_ab(params: &EnvParams) -> Result<String, CliError> {
    let threshold = ab_optimal_threshold();
    let costs: Vec<f64> = match params.c {
        Some(c) => vec![c],
        None => (0..=50).map(|k| k as f64 / 100.0).collect(),
    };
    let mut out = String::new();
    writeln!(out, "ab measuring threshold: {threshold:.9}").ok();
    writeln!(
        out,
        "{:>6}  {:>8}  {:>8}  {:>8}  {:>9}",
        "c", "optimal", "ratm", "search", "value"
    )
    .ok();
    let mut agree = 0;
    for &c in &costs {
        let spec = EnvParams {
            c: Some(c),
            ..params.clone()
        }
        .spec(EnvName::Ab)?;
        let m = spec.build()?;
        let optimal = c <= threshold;
        let ratm = first_ratm_measure(m.clone())?;
        let search =
            exact_finite_horizon_value(&m, &Belief::delta(S0), 2, &OracleOptions::default())?;
        agree += usize::from(optimal == ratm && ratm == search.root_action.measure);
        writeln!(
            out,
            "{c:>6.3}  {:>8}  {:>8}  {:>8}  {:>9.6}",
            verdict(optimal),
            verdict(ratm),
            verdict(search.root_action.measure),
            search.value
        )
        .ok();
    }
    write!(out, "agreement: {agree}/{}", costs.len()).ok();
    Ok(out)
}

fn oracle_lucky_unlucky(params: &EnvParams) -> Result<String, CliError> {
    if params.reward_scale.is_some_and(|r| r != 1.0) {
        return Err(CliError::Config(
            "the closed form assumes --reward-scale 1".into(),
        ));
    }
    let p_max = params.pmax.unwrap_or(1.0);
    let c = params.c.unwrap_or(0.0);
    let m = params.spec(EnvName::LuckyUnlucky)?.build()?;
    let optimal = lucky_unlucky_optimal(p_max, c)?;
    let search = exact_finite_horizon_value(&m, &Belief::delta(S0), 2, &OracleOptions::default())?;
    let ratm = first_ratm_measure(m)?;
    let mut out = String::new();
    writeln!(out, "lucky-unlucky p_max={p_max} c={c}").ok();
    writeln!(
        out,
        "optimal: measure={} value={:.6}",
        optimal.measure, optimal.value
    )
    .ok();
    writeln!(
        out,
        "search:  measure={} value={:.6}",
        search.root_action.measure, search.value
    )
    .ok();
    writeln!(out, "ratm:    measure={ratm}").ok();
    let agree = optimal.measure == ratm && ratm == search.root_action.measure;
    write!(out, "agreement: {}", if agree { "yes" } else { "no" }).ok();
    Ok(out)
}

fn oracle_belief_dep(params: &EnvParams, b0: f64) -> Result<String, CliError> {
    if !(0.0..=1.0).contains(&b0) {
        return Err(CliError::Config(format!(
            "--b0 must lie in [0, 1], got {b0}"
        )));
    }
    let m = params.spec(EnvName::BeliefDep)?.build()?;
    let b1 = 1.0 - b0;
    let b = Belief::from_weights([(belief_dep::S0, b0), (belief_dep::S1, b1)])?;
    let closed = if b1 > 0.0 {
        ((b1 - b0) / (2.0 * b1)).max(0.0)
    } else {
        0.0
    };
    let ctx = PlanningContext::new(m.clone(), SolveOptions::default())?;
    let sol = worst_case_transition_nomeasure(&m, &b, ACTION_A, &ctx.robust().solution.q)?;
    let solver = sol
        .rows
        .iter()
        .find(|(s, _)| *s == belief_dep::S1)
        .map(|(_, r)| r.prob(belief_dep::S_MINUS));
    let search = exact_finite_horizon_value(&m, &b, 2, &OracleOptions::default())?;
    let searched = search
        .root_nature
        .iter()
        .find(|(s, _)| *s == belief_dep::S1)
        .map(|(_, row)| {
            row.iter()
                .find(|(s, _)| *s == belief_dep::S_MINUS)
                .map_or(0.0, |(_, p)| *p)
        });
    let fmt = |p: Option<f64>| p.map_or("n/a".to_string(), |p| format!("{p:.6}"));
    let mut out = String::new();
    writeln!(out, "belief-dep b=({b0}, {b1})").ok();
    writeln!(out, "nature p(s-) closed form: {closed:.6}").ok();
    writeln!(out, "nature p(s-) solver:      {}", fmt(solver)).ok();
    writeln!(out, "nature p(s-) search:      {}", fmt(searched)).ok();
    write!(out, "non-measuring value:      {:.6}", sol.game_value).ok();
    Ok(out)
}

fn oracle_bound(args: &OracleArgs, seed: u64, episodes: usize) -> Result<String, CliError> {
    let spec = args.params.spec(args.env)?;
    let m = spec.build()?;
    let opts = SolveOptions::default();
    let horizon = args.horizon.unwrap_or_else(|| spec.default_horizon());
    let bound = leniency_bound(m.measure_cost(), m.discount(), horizon)?;
    let nature = NatureModel::from_kind(args.nature.into(), &m, &opts)?;
    let ctx = PlanningContext::new(m, opts)?;
    let base = ctx.planner(PlannerConfig::new(PlannerKind::Ratm))?;
    let kinds = if args.planners.is_empty() {
        vec![
            PlannerKind::Mlatm(MlVariant::Opt),
            PlannerKind::Mlatm(MlVariant::Pes),
            PlannerKind::Mlatm(MlVariant::Avg),
        ]
    } else {
        args.planners.clone()
    };
    let mut out = String::new();
    writeln!(out, "environment:    {}", spec.name()).ok();
    writeln!(out, "bound c/(1-gamma): {bound:.6}").ok();
    for kind in kinds {
        let ml = ctx.planner(PlannerConfig::new(kind))?;
        let report = leniency_bound_check(&base, &ml, &nature, episodes, seed, horizon)?;
        writeln!(out, "\n{report}").ok();
    }
    Ok(out.trim_end().to_string())
}

pub fn oracle_report(
    args: &OracleArgs,
    seed: Option<u64>,
    episodes: Option<usize>,
) -> Result<String, CliError> {
    match args.target {
        OracleTarget::Ab => oracle_ab(&args.params),
        OracleTarget::LuckyUnlucky => oracle_lucky_unlucky(&args.params),
        OracleTarget::BeliefDep => oracle_belief_dep(&args.params, args.b0),
        OracleTarget::Bound => oracle_bound(args, seed.unwrap_or(0), episodes.unwrap_or(500)),
    }
}

/// Builds `env` and saves it to `out`, returning a one-line summary.
pub fn export_model(env: EnvName, params: &EnvParams, out: &Path) -> Result<String, CliError> {
    let m = params.spec(env)?.build()?;
    m.save(out).map_err(|e| CliError::Output {
        path: out.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(format!(
        "{} states ({} terminal), {} actions, {} transition entries -> {}",
        m.num_states(),
        m.terminal_states().count(),
        m.num_actions(),
        m.num_entries(),
        out.display()
    ))
}
