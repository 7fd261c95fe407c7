//! How a preventive-action agent reacts to one feedback.

use alloc::vec::Vec;
use core::cmp::Ordering;

use super::agents::agent_criticality_action;
use super::feedback::{AgentId, Feedback, FeedbackKind};
use super::state::SimulationState;
use super::{DeselectionMode, SolverConfig};
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RouteDecision {
    /// Form the relation `{failure_mode, action}`.
    Add {
        failure_mode: usize,
        action: usize,
    },
    /// Drop every relation of `action`.
    Remove {
        action: usize,
        failure_modes: Vec<usize>,
    },
    Forward {
        to: usize,
        feedback: Feedback,
    },
    NoOp {
        annoyance: AnnoyanceEffect,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnoyanceEffect {
    None,
    Increment(FeedbackKind),
    Reset(FeedbackKind),
}

/// Most critical first: higher agent-criticality, then lower cost, then id.
fn helper_order(state: &SimulationState, problem: &Problem, a: usize, b: usize) -> Ordering {
    let ca = agent_criticality_action(&state.actions[a]);
    let cb = agent_criticality_action(&state.actions[b]);
    cb.total_cmp(&ca)
        .then_with(|| problem.action_cost(a).cmp(&problem.action_cost(b)))
        .then_with(|| problem.action_id(a).cmp(problem.action_id(b)))
}

/// Removal preference: highest cost first, then id.
fn removal_order(problem: &Problem, a: usize, b: usize) -> Ordering {
    problem
        .action_cost(b)
        .cmp(&problem.action_cost(a))
        .then_with(|| problem.action_id(a).cmp(problem.action_id(b)))
}

/// Whether dropping every relation of `action` leaves all failure modes that
/// select it at or below their threshold.
pub fn removal_is_safe(state: &SimulationState, problem: &Problem, action: usize) -> bool {
    state.actions[action].selected_by.iter().all(|&g| {
        let without = state.failure_modes[g].selected.iter().copied().filter(|&p| p != action);
        problem.residual(g, without) <= problem.threshold(g)
    })
}

fn gated(
    state: &SimulationState,
    config: &SolverConfig,
    action: usize,
    kind: FeedbackKind,
    decision: RouteDecision,
) -> RouteDecision {
    if state.actions[action].annoyance.get(kind) < config.reorganization_threshold {
        RouteDecision::NoOp {
            annoyance: AnnoyanceEffect::Increment(kind),
        }
    } else {
        decision
    }
}

/// Decide what action agent `action` does with `feedback`, reading the graph
/// as it stood at the start of the round. Pure: the caller applies the
/// decision.
pub fn route_feedback(
    state: &SimulationState,
    problem: &Problem,
    config: &SolverConfig,
    action: usize,
    feedback: &Feedback,
) -> RouteDecision {
    match feedback.kind {
        FeedbackKind::SelectMore => route_select_more(state, problem, config, action, feedback),
        FeedbackKind::SelectLess => match config.deselection {
            DeselectionMode::SafetyGated => route_select_less(state, problem, config, action, feedback),
            DeselectionMode::Literal => route_select_less_literal(state, problem, config, action, feedback),
        },
        FeedbackKind::SelectionGood => {
            let resolved = match feedback.source {
                AgentId::Quality => FeedbackKind::SelectLess,
                _ => FeedbackKind::SelectMore,
            };
            RouteDecision::NoOp {
                annoyance: AnnoyanceEffect::Reset(resolved),
            }
        }
    }
}

fn route_select_more(
    state: &SimulationState,
    problem: &Problem,
    config: &SolverConfig,
    action: usize,
    feedback: &Feedback,
) -> RouteDecision {
    let Some(g) = feedback.subject else {
        return RouteDecision::NoOp {
            annoyance: AnnoyanceEffect::None,
        };
    };
    let selection = &state.failure_modes[g].selected;
    if selection.contains(&action) {
        // Stale request: this relation already exists.
        return RouteDecision::NoOp {
            annoyance: AnnoyanceEffect::None,
        };
    }
    // Neighbourhood: the other recommended, still unselected actions of g.
    let best = problem
        .recommended(g)
        .iter()
        .copied()
        .filter(|p| *p == action || (!selection.contains(p) && !feedback.hop_trail.contains(p)))
        .min_by(|&a, &b| helper_order(state, problem, a, b))
        .unwrap_or(action);
    if best == action {
        gated(
            state,
            config,
            action,
            FeedbackKind::SelectMore,
            RouteDecision::Add {
                failure_mode: g,
                action,
            },
        )
    } else {
        RouteDecision::Forward {
            to: best,
            feedback: feedback.forwarded(action, best),
        }
    }
}

fn route_select_less(
    state: &SimulationState,
    problem: &Problem,
    config: &SolverConfig,
    action: usize,
    feedback: &Feedback,
) -> RouteDecision {
    if !state.actions[action].is_selected() {
        return RouteDecision::NoOp {
            annoyance: AnnoyanceEffect::None,
        };
    }
    // Cost-neighbourhood: every selected action agent.
    let best = state
        .actions
        .iter()
        .filter(|p| p.is_selected())
        .map(|p| p.action)
        .filter(|&p| p == action || !feedback.hop_trail.contains(&p))
        .filter(|&p| removal_is_safe(state, problem, p))
        .min_by(|&a, &b| removal_order(problem, a, b));
    match best {
        Some(p) if p == action => gated(
            state,
            config,
            action,
            FeedbackKind::SelectLess,
            RouteDecision::Remove {
                action,
                failure_modes: state.actions[action].selected_by.iter().copied().collect(),
            },
        ),
        Some(p) => RouteDecision::Forward {
            to: p,
            feedback: feedback.forwarded(action, p),
        },
        None => RouteDecision::NoOp {
            annoyance: AnnoyanceEffect::Increment(FeedbackKind::SelectLess),
        },
    }
}

/// Select-less handling read word for word: the most critical agent passes
/// the feedback on, any agent with a more critical neighbour removes itself.
/// Kept for comparison with [`DeselectionMode::SafetyGated`].
fn route_select_less_literal(
    state: &SimulationState,
    problem: &Problem,
    config: &SolverConfig,
    action: usize,
    feedback: &Feedback,
) -> RouteDecision {
    if !state.actions[action].is_selected() {
        return RouteDecision::NoOp {
            annoyance: AnnoyanceEffect::None,
        };
    }
    let own = agent_criticality_action(&state.actions[action]);
    let neighbours: Vec<usize> = state
        .actions
        .iter()
        .filter(|p| p.is_selected() && p.action != action && !feedback.hop_trail.contains(&p.action))
        .map(|p| p.action)
        .collect();
    let more_critical_exists = neighbours
        .iter()
        .any(|&p| agent_criticality_action(&state.actions[p]) > own);
    if more_critical_exists {
        return gated(
            state,
            config,
            action,
            FeedbackKind::SelectLess,
            RouteDecision::Remove {
                action,
                failure_modes: state.actions[action].selected_by.iter().copied().collect(),
            },
        );
    }
    match neighbours
        .into_iter()
        .min_by(|&a, &b| helper_order(state, problem, a, b))
    {
        Some(p) => RouteDecision::Forward {
            to: p,
            feedback: feedback.forwarded(action, p),
        },
        None => RouteDecision::NoOp {
            annoyance: AnnoyanceEffect::Increment(FeedbackKind::SelectLess),
        },
    }
}
