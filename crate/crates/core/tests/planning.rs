mod common;

use std::sync::Arc;

use ramdp_core::environments::toy::{belief_dep, ACTION_A, S0, S_MINUS, S_PLUS};
use ramdp_core::environments::{
    build_ab, build_belief_dep, build_lucky_unlucky, build_snakemaze, SnakemazeParams,
};
use ramdp_core::model::{Belief, RamMdp};
use ramdp_core::oracle::{
    ab_optimal_threshold, exact_finite_horizon_value, lucky_unlucky_optimal, OracleOptions,
};
use ramdp_core::planners::{AtmModel, MlVariant, PlannerConfig, PlannerKind, PlanningContext};
use ramdp_core::simulation::{run_episode, run_episodes, EpisodeOptions, NatureModel};
use ramdp_core::solvers::{worst_case_transition_nomeasure, SolveOptions};

fn ratm_first_decision(m: RamMdp) -> bool {
    let ctx = PlanningContext::new(m, SolveOptions::default()).unwrap();
    let p = ctx.planner(PlannerConfig::new(PlannerKind::Ratm)).unwrap();
    let mut st = p.start_seeded(0);
    p.decide(&mut st).unwrap().measure()
}

#[test]
fn ab_decisions_match_threshold_and_search() {
    let threshold = ab_optimal_threshold();
    for k in 0..=50 {
        let c = k as f64 * 0.01;
        let m = build_ab(c).unwrap();
        let ratm = ratm_first_decision(m.clone());
        assert_eq!(ratm, c <= threshold, "c={c}");
        let exact =
            exact_finite_horizon_value(&m, &Belief::delta(S0), 2, &OracleOptions::default())
                .unwrap();
        assert_eq!(exact.root_action.measure, ratm, "c={c}");
    }
}

#[test]
fn ab_next_belief_after_skipping_measurement() {
    let ctx = PlanningContext::new(build_ab(0.5).unwrap(), SolveOptions::default()).unwrap();
    let p = ctx.planner(PlannerConfig::new(PlannerKind::Ratm)).unwrap();
    let mut st = p.start_seeded(0);
    let d = p.decide(&mut st).unwrap();
    assert!(!d.measure());
    p.advance(&mut st, &d, None).unwrap();
    assert!((st.robust_belief.prob(S_MINUS) - 1.0 / 1.8).abs() < 1e-9);
    assert!((st.robust_belief.prob(S_PLUS) - 0.8 / 1.8).abs() < 1e-9);
}

#[test]
fn lucky_unlucky_decisions_match_closed_form() {
    for k in 0..=20 {
        let p_max = k as f64 * 0.05;
        let ratm = ratm_first_decision(build_lucky_unlucky(p_max, 0.2, 1.0).unwrap());
        let opt = lucky_unlucky_optimal(p_max, 0.2).unwrap();
        assert_eq!(ratm, opt.measure, "p_max={p_max}");
    }
}

#[test]
fn lucky_unlucky_closed_form_matches_search() {
    for p_max in [0.1, 0.5, 1.0] {
        let m = build_lucky_unlucky(p_max, 0.2, 1.0).unwrap();
        let exact =
            exact_finite_horizon_value(&m, &Belief::delta(S0), 2, &OracleOptions::default())
                .unwrap();
        let opt = lucky_unlucky_optimal(p_max, 0.2).unwrap();
        assert!((exact.value - opt.value).abs() < 1e-9, "p_max={p_max}");
        assert_eq!(exact.root_action.measure, opt.measure);
    }
}

#[test]
fn belief_dependent_worst_case_equalizes() {
    let m = build_belief_dep(0.0).unwrap();
    let ctx = PlanningContext::new(m.clone(), SolveOptions::default()).unwrap();
    let b = Belief::from_weights([(belief_dep::S0, 0.2), (belief_dep::S1, 0.8)]).unwrap();
    let sol = worst_case_transition_nomeasure(&m, &b, ACTION_A, &ctx.robust().solution.q).unwrap();
    let row = &sol
        .rows
        .iter()
        .find(|(s, _)| *s == belief_dep::S1)
        .unwrap()
        .1;
    assert!((row.prob(belief_dep::S_MINUS) - 0.375).abs() < 1e-9);
    assert!((sol.game_value - 0.5).abs() < 1e-9);

    let exact = exact_finite_horizon_value(&m, &b, 2, &OracleOptions::default()).unwrap();
    assert!((exact.best_root_value(false) - sol.game_value).abs() < 1e-6);
}

#[test]
fn q_values_are_ordered_by_optimism() {
    let m = build_snakemaze(&SnakemazeParams {
        alpha: 0.6,
        ..Default::default()
    })
    .unwrap();
    let ctx = PlanningContext::new(m, SolveOptions::default()).unwrap();
    let robust = &ctx.robust().solution.q;
    let avg = ctx.average().unwrap();
    let opt = ctx.optimistic().unwrap();
    for ((r, a), o) in robust
        .values()
        .iter()
        .zip(avg.q.values())
        .zip(opt.q.values())
    {
        assert!(r <= &(a + 1e-7), "{r} > {a}");
        assert!(a <= &(o + 1e-7), "{a} > {o}");
    }
}

#[test]
fn certain_model_collapses_all_robust_planners() {
    let m = build_snakemaze(&SnakemazeParams {
        width: 2,
        height: 5,
        alpha: 1.0,
        ..Default::default()
    })
    .unwrap();
    let ctx = PlanningContext::new(m.clone(), SolveOptions::default()).unwrap();
    let nature = NatureModel::average(&m);
    let opts = EpisodeOptions {
        horizon: 50,
        record_trace: true,
    };
    let kinds = [
        PlannerKind::Ratm,
        PlannerKind::Atm(AtmModel::Avg),
        PlannerKind::Atm(AtmModel::Pes),
    ];
    let planners: Vec<_> = kinds
        .iter()
        .map(|k| ctx.planner(PlannerConfig::new(*k)).unwrap())
        .collect();
    for seed in 0..10 {
        let runs: Vec<_> = planners
            .iter()
            .map(|p| run_episode(p, &nature, seed, &opts).unwrap())
            .collect();
        let actions = |i: usize| {
            runs[i]
                .trace
                .iter()
                .map(|r| (r.control, r.measure))
                .collect::<Vec<_>>()
        };
        assert_eq!(actions(0), actions(1), "seed {seed}");
        assert_eq!(actions(0), actions(2), "seed {seed}");
    }
}

#[test]
fn lenient_planners_measure_whenever_robust_would() {
    let m = build_snakemaze(&SnakemazeParams {
        alpha: 0.6,
        ..Default::default()
    })
    .unwrap();
    let ctx = PlanningContext::new(m.clone(), SolveOptions::default()).unwrap();
    let ratm = ctx.planner(PlannerConfig::new(PlannerKind::Ratm)).unwrap();
    let nature = NatureModel::average(&m);
    for v in [MlVariant::Opt, MlVariant::Pes, MlVariant::Avg] {
        let ml = ctx
            .planner(PlannerConfig::new(PlannerKind::Mlatm(v)))
            .unwrap();
        let mut st = ml.start_seeded(3);
        let mut rng = ramdp_core::simulation::episode_rngs(3).0;
        let mut s = m.initial_state();
        for _ in 0..40 {
            if m.is_terminal(s) {
                break;
            }
            let mut shadow = ratm.start_seeded(0);
            shadow.robust_belief = st.robust_belief.clone();
            let robust_measures = ratm.decide(&mut shadow).unwrap().measure();
            let d = ml.decide(&mut st).unwrap();
            assert!(!robust_measures || d.measure());
            s = nature.sample(s, d.action_pair.control, &mut rng);
            ml.advance(&mut st, &d, d.measure().then_some(s)).unwrap();
        }
    }
}

#[test]
fn batches_are_reproducible() {
    let m = build_lucky_unlucky(0.5, 0.2, 1.0).unwrap();
    let ctx = PlanningContext::new(m.clone(), SolveOptions::default()).unwrap();
    let p = ctx
        .planner(PlannerConfig::new(PlannerKind::Mlatm(MlVariant::Avg)))
        .unwrap();
    let nature = NatureModel::point(Arc::new(ctx.robust().worst_case.as_ref().clone()));
    let opts = EpisodeOptions {
        horizon: 2,
        record_trace: true,
    };
    let a = run_episodes(&p, &nature, 32, 11, &opts).unwrap();
    let b = run_episodes(&p, &nature, 32, 11, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|e| e.num_measurements == 1));
}
