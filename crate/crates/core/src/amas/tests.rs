use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::model::{Deltas, FailureMode, PreventiveAction};
use crate::rank::{Rank, Scales};

fn failure_mode(id: &str, sod: (u8, u8, u8), threshold: u32, actions: &[&str]) -> FailureMode {
    FailureMode {
        id: id.into(),
        component_id: String::new(),
        function: String::new(),
        description: String::new(),
        causes: String::new(),
        effects: String::new(),
        severity: Rank::new(sod.0),
        occurrence: Rank::new(sod.1),
        detectability: Rank::new(sod.2),
        critical_threshold: threshold,
        recommended_actions: actions.iter().map(|a| a.to_string()).collect(),
        alternative_groups: Vec::new(),
    }
}

fn action(id: &str, cost: i64, fm: &str, deltas: Deltas) -> PreventiveAction {
    PreventiveAction {
        id: id.into(),
        description: String::new(),
        cost: Cost::from(cost),
        mitigations: [(fm.to_string(), deltas)].into(),
    }
}

/// One failure (criticality 6, threshold 2) and two complementary actions
/// that are both needed.
fn generator(budget: i64) -> FmecaModel {
    FmecaModel {
        scales: Scales::default(),
        components: Vec::new(),
        failure_modes: vec![failure_mode("Failure1", (3, 2, 1), 2, &["A1", "A2"])],
        actions: vec![
            action("A1", 7, "Failure1", Deltas::new(0, 1, 0)),
            action("A2", 10, "Failure1", Deltas::new(1, 0, 0)),
        ],
        budget: Cost::from(budget),
    }
}

fn setup(model: &FmecaModel, config: &SolverConfig) -> (Problem, SimulationState) {
    let problem = Problem::compile(model).unwrap();
    let state = SimulationState::new(&problem, config);
    (problem, state)
}

fn kinds(feedbacks: &[Feedback]) -> Vec<(FeedbackKind, AgentId)> {
    feedbacks.iter().map(|f| (f.kind, f.target)).collect()
}

#[test]
fn violated_failure_mode_asks_every_unselected_action() {
    let (problem, mut state) = setup(&generator(20), &SolverConfig::default());
    let d = detect_bad_safety_criticality(&mut state.failure_modes[0], &problem, 1);
    assert!(d.ncs && !d.unresolvable);
    assert_eq!(
        kinds(&d.feedbacks),
        [
            (FeedbackKind::SelectMore, AgentId::Action(0)),
            (FeedbackKind::SelectMore, AgentId::Action(1)),
        ]
    );
    assert!(d.feedbacks.iter().all(|f| f.subject == Some(0)));
    assert_eq!(state.failure_modes[0].annoyance.select_more, 1);
}

#[test]
fn satisfied_failure_mode_sends_selection_good() {
    let mut model = generator(20);
    model.failure_modes[0].critical_threshold = 6;
    let (problem, mut state) = setup(&model, &SolverConfig::default());
    state.failure_modes[0].annoyance.select_more = 4;
    let d = detect_bad_safety_criticality(&mut state.failure_modes[0], &problem, 1);
    assert!(!d.ncs);
    assert_eq!(
        kinds(&d.feedbacks),
        [
            (FeedbackKind::SelectionGood, AgentId::Action(0)),
            (FeedbackKind::SelectionGood, AgentId::Action(1)),
        ]
    );
    assert_eq!(state.failure_modes[0].annoyance.select_more, 0);
}

#[test]
fn exhausted_failure_mode_is_unresolvable() {
    let mut model = generator(20);
    // Even both actions leave 2 * 1 * 1 = 2 > 1.
    model.failure_modes[0].critical_threshold = 1;
    let config = SolverConfig {
        initial_selection: InitialSelection::AllRecommended,
        ..Default::default()
    };
    let (problem, mut state) = setup(&model, &config);
    let d = detect_bad_safety_criticality(&mut state.failure_modes[0], &problem, 1);
    assert!(d.ncs && d.unresolvable);
    assert!(d.feedbacks.is_empty());
    assert_eq!(state.failure_modes[0].annoyance.select_more, 1);
    // And indeed no selection at all meets the threshold.
    let oracle = crate::oracle::exact_best(&model, Default::default()).unwrap();
    assert!(oracle.optimal_objective.violations > 0);
}

#[test]
fn cost_detection_compares_strictly() {
    let mut q = QualityAgent {
        budget: Cost::from(20),
        last_total: Cost::ZERO,
        annoyance: 0,
    };
    let d = detect_bad_total_cost(&mut q, &[0, 3], Cost::from(25), 1);
    assert!(d.ncs);
    assert_eq!(
        kinds(&d.feedbacks),
        [
            (FeedbackKind::SelectLess, AgentId::Action(0)),
            (FeedbackKind::SelectLess, AgentId::Action(3)),
        ]
    );
    assert!(d.feedbacks.iter().all(|f| f.subject.is_none()));
    assert_eq!(q.annoyance, 1);

    let d = detect_bad_total_cost(&mut q, &[0, 3], Cost::from(20), 2);
    assert!(!d.ncs);
    assert!(d.feedbacks.iter().all(|f| f.kind == FeedbackKind::SelectionGood));
    assert_eq!(q.annoyance, 0);

    let d = detect_bad_total_cost(&mut q, &[], Cost::ZERO, 3);
    assert!(!d.ncs && d.feedbacks.is_empty());
}

#[test]
fn failure_mode_criticality_values() {
    let (problem, mut state) = setup(&generator(20), &SolverConfig::default());
    assert_eq!(agent_criticality_failure_mode(&state.failure_modes[0], &problem), 100.0);
    state.failure_modes[0].selected.insert(0);
    assert_eq!(agent_criticality_failure_mode(&state.failure_modes[0], &problem), 50.0);
    state.failure_modes[0].selected.insert(1);
    assert_eq!(agent_criticality_failure_mode(&state.failure_modes[0], &problem), 0.0);
}

#[test]
fn action_criticality_values() {
    let mut agent = ActionAgent {
        action: 0,
        selected_by: Default::default(),
        inbox: Vec::new(),
        annoyance: Default::default(),
    };
    assert_eq!(agent_criticality_action(&agent), 100.0);
    agent.selected_by.insert(0);
    assert_eq!(agent_criticality_action(&agent), 50.0);
    agent.selected_by.extend(1..1000);
    let c = agent_criticality_action(&agent);
    assert!(c > 0.0 && c < 0.2);
}

#[test]
fn quality_criticality_values() {
    let q = |total: i64, budget: i64| QualityAgent {
        budget: Cost::from(budget),
        last_total: Cost::from(total),
        annoyance: 0,
    };
    assert_eq!(agent_criticality_quality(&q(20, 20)), 0.0);
    assert_eq!(agent_criticality_quality(&q(30, 20)), 50.0);
    assert_eq!(agent_criticality_quality(&q(50, 20)), 100.0);
    assert_eq!(agent_criticality_quality(&q(5, 0)), 100.0);
    assert_eq!(agent_criticality_quality(&q(0, 0)), 0.0);
}

#[test]
fn select_more_tie_goes_to_cheaper_action() {
    let config = SolverConfig::default();
    let (problem, state) = setup(&generator(20), &config);
    let up = |target| {
        Feedback::new(
            FeedbackKind::SelectMore,
            AgentId::FailureMode(0),
            AgentId::Action(target),
            Some(0),
            1,
        )
    };

    // A1 (cost 7) wins the tie at criticality 100 and adds itself.
    assert_eq!(
        route_feedback(&state, &problem, &config, 0, &up(0)),
        RouteDecision::Add {
            failure_mode: 0,
            action: 0
        }
    );
    // A2 passes its request to A1.
    match route_feedback(&state, &problem, &config, 1, &up(1)) {
        RouteDecision::Forward { to, feedback } => {
            assert_eq!(to, 0);
            assert_eq!(feedback.hop_trail, [1]);
            assert_eq!(feedback.target, AgentId::Action(0));
            // A1 has nobody left to forward to.
            assert_eq!(
                route_feedback(&state, &problem, &config, 0, &feedback),
                RouteDecision::Add {
                    failure_mode: 0,
                    action: 0
                }
            );
        }
        other => panic!("expected a forward, got {other:?}"),
    }
}

#[test]
fn select_more_forwards_to_strictly_more_critical_neighbour() {
    let config = SolverConfig::default();
    let mut model = generator(20);
    model.actions[0].cost = Cost::from(50);
    let (problem, mut state) = setup(&model, &config);
    let up = Feedback::new(
        FeedbackKind::SelectMore,
        AgentId::FailureMode(0),
        AgentId::Action(1),
        Some(0),
        1,
    );
    // A2 (cost 10) would win on cost, but serves another failure mode in
    // this hand-made graph, so A1 (criticality 100 vs 50) is more critical.
    state.actions[1].selected_by.insert(7);
    match route_feedback(&state, &problem, &config, 1, &up) {
        RouteDecision::Forward { to, feedback } => {
            assert_eq!(to, 0);
            assert_eq!(feedback.hop_trail, [1]);
        }
        other => panic!("expected a forward, got {other:?}"),
    }
}

#[test]
fn selection_good_resets_annoyance() {
    let config = SolverConfig::default();
    let (problem, state) = setup(&generator(20), &config);
    let from_fm = Feedback::new(
        FeedbackKind::SelectionGood,
        AgentId::FailureMode(0),
        AgentId::Action(0),
        Some(0),
        1,
    );
    let from_q = Feedback::new(
        FeedbackKind::SelectionGood,
        AgentId::Quality,
        AgentId::Action(0),
        None,
        1,
    );
    assert_eq!(
        route_feedback(&state, &problem, &config, 0, &from_fm),
        RouteDecision::NoOp {
            annoyance: AnnoyanceEffect::Reset(FeedbackKind::SelectMore)
        }
    );
    assert_eq!(
        route_feedback(&state, &problem, &config, 0, &from_q),
        RouteDecision::NoOp {
            annoyance: AnnoyanceEffect::Reset(FeedbackKind::SelectLess)
        }
    );
}

#[test]
fn select_less_removes_most_expensive_safe_action() {
    // Two failure modes; F2 is over-served by B1 + B2 where B2 alone suffices.
    let model = FmecaModel {
        scales: Scales::default(),
        components: Vec::new(),
        failure_modes: vec![
            failure_mode("F1", (3, 2, 1), 2, &["A1"]),
            failure_mode("F2", (2, 2, 2), 4, &["B1", "B2"]),
        ],
        actions: vec![
            action("A1", 30, "F1", Deltas::new(2, 0, 0)),
            action("B1", 20, "F2", Deltas::new(0, 1, 0)),
            action("B2", 5, "F2", Deltas::new(1, 0, 0)),
        ],
        budget: Cost::from(40),
    };
    let config = SolverConfig {
        initial_selection: InitialSelection::AllRecommended,
        ..Default::default()
    };
    let (problem, state) = setup(&model, &config);
    assert!(removal_is_safe(&state, &problem, 1));
    assert!(!removal_is_safe(&state, &problem, 0));
    let down = |target| {
        Feedback::new(
            FeedbackKind::SelectLess,
            AgentId::Quality,
            AgentId::Action(target),
            None,
            1,
        )
    };
    // A1 is the most expensive but not removable: it forwards to B1.
    match route_feedback(&state, &problem, &config, 0, &down(0)) {
        RouteDecision::Forward { to, .. } => assert_eq!(to, 1),
        other => panic!("expected forward, got {other:?}"),
    }
    assert_eq!(
        route_feedback(&state, &problem, &config, 1, &down(1)),
        RouteDecision::Remove {
            action: 1,
            failure_modes: vec![1]
        }
    );

    let result = run(&model, &config).unwrap();
    assert!(result.converged);
    let chosen: Vec<&str> = result.best.selected.iter().map(String::as_str).collect();
    assert_eq!(chosen, ["A1", "B2"]);
    assert!(result.is_feasible());
}

#[test]
fn generator_is_solved_within_three_rounds() {
    let config = SolverConfig::default();
    let (problem, mut state) = setup(&generator(1000), &config);
    let mut rounds = 0;
    while state.failure_modes[0].is_violated(&problem) {
        let s = state.step(&problem, &config);
        assert!(state.is_symmetric());
        rounds += 1;
        assert!(rounds <= 3, "not solved after {rounds} rounds");
        assert!(s.ncs);
    }
    assert_eq!(state.selected_actions(), [0, 1]);
    let s = state.step(&problem, &config);
    assert!(s.is_quiescent());
}

#[test]
fn quiescent_round_changes_nothing_but_the_trace() {
    let mut model = generator(20);
    model.failure_modes[0].critical_threshold = 6;
    let config = SolverConfig::default();
    let (problem, mut state) = setup(&model, &config);
    let before = state.clone();
    let s = state.step(&problem, &config);
    assert!(s.is_quiescent());
    assert_eq!(state.failure_modes, before.failure_modes);
    assert_eq!(state.actions, before.actions);
    assert!(state.trace.len() > before.trace.len());
}

#[test]
fn stepping_is_deterministic() {
    let config = SolverConfig::default();
    let (problem, mut state) = setup(&generator(12), &config);
    state.step(&problem, &config);
    let snapshot = state.clone();
    let mut a = snapshot.clone();
    let mut b = snapshot;
    for _ in 0..5 {
        a.step(&problem, &config);
        b.step(&problem, &config);
        assert_eq!(a, b);
    }
}

#[test]
fn run_solves_generator_with_enough_budget() {
    let result = run(&generator(20), &SolverConfig::default()).unwrap();
    assert!(result.converged);
    assert_eq!(result.termination, Termination::Converged);
    assert_eq!(
        result.best_objective,
        Objective {
            violations: 0,
            excess: 0,
            cost: Cost::from(17)
        }
    );
    assert!(result.is_feasible());
    assert!(result.best_objective <= result.final_objective);
    assert!(result.unresolved.violated.is_empty());
}

#[test]
fn zero_budget_is_reported_as_budget_infeasible() {
    let result = run(&generator(0), &SolverConfig::default()).unwrap();
    assert!(!result.converged);
    assert!(!result.is_feasible());
    assert!(result.unresolved.budget_infeasible);
    // Safety-first best meets the threshold but costs more than nothing.
    assert_eq!(result.best_objective.violations, 0);
    assert_eq!(result.best_objective.cost, Cost::from(17));
    // The only selection within a zero budget is the empty one.
    let (within, objective) = result.best_within_budget.unwrap();
    assert!(within.selected.is_empty());
    assert_eq!(objective.violations, 1);
}

#[test]
fn nothing_critical_converges_in_window_rounds() {
    let mut model = generator(20);
    model.failure_modes[0].critical_threshold = 6;
    let config = SolverConfig::default();
    let result = run(&model, &config).unwrap();
    assert!(result.converged);
    assert_eq!(result.rounds_used, config.quiescence_window);
    assert!(result.best.selected.is_empty());
    assert_eq!(result.best.total_cost, Cost::ZERO);
    assert!(!result
        .trace
        .iter()
        .any(|r| matches!(r.event, TraceEvent::Applied { .. })));
}

#[test]
fn reorganization_threshold_delays_additions() {
    let config = SolverConfig {
        reorganization_threshold: 2,
        ..Default::default()
    };
    let (problem, mut state) = setup(&generator(20), &config);
    assert_eq!(state.step(&problem, &config).mutations, 0);
    // A1 is annoyed twice: once directly, once through A2's forward.
    assert_eq!(state.actions[0].annoyance.select_more, 2);
    assert_eq!(state.step(&problem, &config).mutations, 1);
    let result = run(&generator(20), &config).unwrap();
    assert!(result.converged && result.is_feasible());
}

#[test]
fn forced_full_start_over_budget_sends_select_less_first_round() {
    let config = SolverConfig {
        initial_selection: InitialSelection::AllRecommended,
        ..Default::default()
    };
    let (problem, mut state) = setup(&generator(10), &config);
    let s = state.step(&problem, &config);
    assert_eq!(s.select_less_sent, 2);
    assert!(s.ncs);
}

#[test]
fn literal_deselection_runs_to_completion() {
    let config = SolverConfig {
        initial_selection: InitialSelection::AllRecommended,
        deselection: DeselectionMode::Literal,
        ..Default::default()
    };
    let result = run(&generator(10), &config).unwrap();
    // With every selected action equally critical nobody ever removes itself.
    assert_eq!(result.final_configuration.selected.len(), 2);
    assert!(!result.converged);
}

#[test]
fn invalid_config_and_models_are_rejected() {
    let bad = SolverConfig {
        max_rounds: 0,
        ..Default::default()
    };
    assert!(matches!(run(&generator(20), &bad), Err(SolverError::Config(_))));

    let mut model = generator(20);
    model.failure_modes[0].alternative_groups = vec![vec!["A1".into(), "A2".into()]];
    assert!(matches!(
        run(&model, &SolverConfig::default()),
        Err(SolverError::Model(ModelError::UnsupportedAlternatives { .. }))
    ));

    let mut model = generator(20);
    model.failure_modes[0].severity = Rank::new(9);
    assert!(matches!(
        run(&model, &SolverConfig::default()),
        Err(SolverError::Model(ModelError::Invalid(1)))
    ));
}

#[test]
fn best_so_far_never_gets_worse() {
    let result = run(&generator(12), &SolverConfig::default()).unwrap();
    let mut previous: Option<Objective> = None;
    for record in &result.trace {
        if let TraceEvent::Snapshot(s) = &record.event {
            if let Some(p) = previous {
                assert!(s.best <= p);
            }
            previous = Some(s.best);
        }
    }
    assert!(previous.is_some());
}
