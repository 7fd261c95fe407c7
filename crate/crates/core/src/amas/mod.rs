//! Cooperative multi-agent selection of preventive actions.
//!
//! Every failure mode and every preventive action is an agent; a single
//! quality agent watches the budget. Agents exchange select-more (↑),
//! select-less (↓) and selection-good (≈) feedbacks and react by forming or
//! suppressing selection relations `{failure mode, action}`. The simulation
//! runs in synchronous, fully deterministic rounds until nothing has been
//! wrong or changed for a number of rounds.
//!
//! ```
//! use fmeca_core::amas::{run, SolverConfig};
//! # use fmeca_core::{Cost, Deltas, FailureMode, FmecaModel, PreventiveAction, Rank};
//! # let mut model = FmecaModel::empty();
//! # model.budget = Cost::from(20);
//! # model.failure_modes.push(FailureMode {
//! #     id: "F1".into(), component_id: String::new(), function: String::new(),
//! #     description: String::new(), causes: String::new(), effects: String::new(),
//! #     severity: Rank::new(3), occurrence: Rank::new(2), detectability: Rank::new(1),
//! #     critical_threshold: 2, recommended_actions: vec!["A1".into()],
//! #     alternative_groups: vec![],
//! # });
//! # model.actions.push(PreventiveAction {
//! #     id: "A1".into(), description: String::new(), cost: Cost::from(5),
//! #     mitigations: [("F1".to_string(), Deltas::new(2, 0, 0))].into(),
//! # });
//! let result = run(&model, &SolverConfig::default()).unwrap();
//! assert!(result.converged);
//! assert_eq!(result.best_objective.violations, 0);
//! ```

mod agents;
mod feedback;
mod routing;
mod state;
mod trace;

use alloc::string::String;
use alloc::vec::Vec;

pub use agents::{
    agent_criticality_action, agent_criticality_failure_mode, agent_criticality_quality, detect_bad_safety_criticality,
    detect_bad_total_cost, ActionAgent, Annoyance, Detection, FailureModeAgent, QualityAgent, MAX_AGENT_CRITICALITY,
};
pub use feedback::{AgentId, Feedback, FeedbackKind};
pub use routing::{removal_is_safe, route_feedback, AnnoyanceEffect, RouteDecision};
pub use state::{Incumbent, SimulationState, StepSummary};
pub use trace::{Decision, NcsKind, Relation, Snapshot, TraceEvent, TraceRecord};

use crate::config::{Configuration, Objective};
use crate::cost::Cost;
use crate::model::{FmecaModel, ModelError};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialSelection {
    #[default]
    Empty,
    /// Every failure mode starts with all its recommended actions; useful to
    /// let the budget pressure prune an over-complete plan.
    AllRecommended,
}

/// How action agents react to the quality agent's select-less feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeselectionMode {
    /// Only an action whose removal keeps every threshold met may leave, and
    /// the most expensive such action goes first.
    #[default]
    SafetyGated,
    /// The textbook rule as worded: the most critical agent forwards, the
    /// others remove themselves. Tends to deselect nothing or the wrong
    /// actions; for comparison only.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Recorded with the run. The round scheduler itself uses no randomness.
    pub seed: u64,
    pub max_rounds: u64,
    /// Consecutive quiet rounds (no NCS, no graph change) that mean convergence.
    pub quiescence_window: u64,
    /// Annoyance an action agent must have accumulated before it reorganizes.
    pub reorganization_threshold: u32,
    pub initial_selection: InitialSelection,
    /// Serve ↑ before ↓ and let additions win conflicts.
    pub safety_precedence: bool,
    pub deselection: DeselectionMode,
    /// Stop early once the graph has been frozen under a persisting NCS long
    /// enough that no agent can still change it. Later rounds would repeat
    /// the same decisions until `max_rounds`.
    pub stop_when_stalled: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            max_rounds: 10_000,
            quiescence_window: 10,
            reorganization_threshold: 0,
            initial_selection: InitialSelection::Empty,
            safety_precedence: true,
            deselection: DeselectionMode::SafetyGated,
            stop_when_stalled: true,
        }
    }
}

impl SolverConfig {
    /// Agents never create or remove other agents: the failure modes and
    /// actions are fixed by the model. There is no threshold to configure.
    pub const EVOLUTION_THRESHOLD: Option<u32> = None;

    fn stall_window(&self) -> u64 {
        self.quiescence_window.max(u64::from(self.reorganization_threshold) + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid solver configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Quiet for `quiescence_window` consecutive rounds.
    Converged,
    /// Graph frozen while some NCS persists.
    Stalled,
    RoundLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::Stalled => "stalled",
            Termination::RoundLimit => "round_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnresolvedSummary {
    /// Failure modes above threshold in the final configuration.
    pub violated: Vec<String>,
    /// Failure modes above threshold with every recommended action selected.
    pub unresolvable: Vec<String>,
    pub over_budget: bool,
    /// Thresholds can be met but no configuration seen did so within budget.
    pub budget_infeasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub best: Configuration,
    pub best_objective: Objective,
    pub final_configuration: Configuration,
    pub final_objective: Objective,
    pub best_within_budget: Option<(Configuration, Objective)>,
    pub converged: bool,
    pub termination: Termination,
    pub rounds_used: u64,
    pub budget: Cost,
    pub unresolved: UnresolvedSummary,
    pub trace: Vec<TraceRecord>,
}

impl SolverResult {
    /// Best configuration meets every threshold within budget.
    pub fn is_feasible(&self) -> bool {
        self.best_objective.is_feasible(self.budget)
    }
}

/// Simulate until quiescence, a stall, or `max_rounds`.
pub fn run(model: &FmecaModel, config: &SolverConfig) -> Result<SolverResult, SolverError> {
    let problem = Problem::compile(model)?;
    run_compiled(model, &problem, config)
}

/// [`run`] for an already compiled model; `problem` must come from `model`.
pub fn run_compiled(model: &FmecaModel, problem: &Problem, config: &SolverConfig) -> Result<SolverResult, SolverError> {
    if config.max_rounds == 0 {
        return Err(SolverError::Config("max_rounds must be positive"));
    }
    if config.quiescence_window == 0 {
        return Err(SolverError::Config("quiescence_window must be positive"));
    }
    let mut state = SimulationState::new(problem, config);
    let mut quiet = 0u64;
    let mut frozen = 0u64;
    let mut termination = Termination::RoundLimit;
    while state.round < config.max_rounds {
        let summary = state.step(problem, config);
        if summary.is_quiescent() {
            quiet += 1;
            frozen = 0;
        } else {
            quiet = 0;
            frozen = if summary.mutations == 0 { frozen + 1 } else { 0 };
        }
        if quiet >= config.quiescence_window {
            termination = Termination::Converged;
            break;
        }
        if config.stop_when_stalled && frozen >= config.stall_window() {
            termination = Termination::Stalled;
            break;
        }
    }
    Ok(finish(model, problem, state, termination))
}

fn finish(model: &FmecaModel, problem: &Problem, state: SimulationState, termination: Termination) -> SolverResult {
    let final_selected = state.selected_set();
    let final_objective = problem.evaluate(&final_selected);
    let best = state.best.clone().expect("initial configuration is always recorded");
    let budget = problem.budget();

    let violated = state
        .failure_modes
        .iter()
        .filter(|g| g.is_violated(problem))
        .map(|g| String::from(problem.failure_mode_id(g.failure_mode)))
        .collect();
    let unresolvable = state
        .failure_modes
        .iter()
        .filter(|g| g.is_violated(problem) && g.selected.len() == problem.recommended(g.failure_mode).len())
        .map(|g| String::from(problem.failure_mode_id(g.failure_mode)))
        .collect();
    let unresolved = UnresolvedSummary {
        violated,
        unresolvable,
        over_budget: final_objective.cost > budget,
        budget_infeasible: best.objective.violations == 0 && best.objective.cost > budget,
    };

    SolverResult {
        best: problem.configuration(model, &best.selected),
        best_objective: best.objective,
        final_configuration: problem.configuration(model, &final_selected),
        final_objective,
        best_within_budget: state
            .best_within_budget
            .as_ref()
            .map(|b| (problem.configuration(model, &b.selected), b.objective)),
        converged: termination == Termination::Converged,
        termination,
        rounds_used: state.round,
        budget,
        unresolved,
        trace: state.trace,
    }
}

#[cfg(test)]
mod tests;
