//! The three agent kinds, their agent-criticality functions and their
//! non-cooperative situation detectors.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::feedback::{AgentId, Feedback, FeedbackKind};
use crate::cost::{ratio_to_f64, Cost};
use crate::problem::Problem;

/// Upper end of the agent-criticality range; 0 means fully satisfied.
pub const MAX_AGENT_CRITICALITY: f64 = 100.0;

/// Rounds an unresolved non-cooperative situation has persisted, per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Annoyance {
    pub select_more: u32,
    pub select_less: u32,
}

impl Annoyance {
    pub fn get(&self, kind: FeedbackKind) -> u32 {
        match kind {
            FeedbackKind::SelectMore => self.select_more,
            FeedbackKind::SelectLess => self.select_less,
            FeedbackKind::SelectionGood => 0,
        }
    }

    pub fn increment(&mut self, kind: FeedbackKind) {
        match kind {
            FeedbackKind::SelectMore => self.select_more += 1,
            FeedbackKind::SelectLess => self.select_less += 1,
            FeedbackKind::SelectionGood => {}
        }
    }

    pub fn reset(&mut self, kind: FeedbackKind) {
        match kind {
            FeedbackKind::SelectMore => self.select_more = 0,
            FeedbackKind::SelectLess => self.select_less = 0,
            FeedbackKind::SelectionGood => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureModeAgent {
    pub failure_mode: usize,
    /// Sel_g: selected actions, a subset of the recommended ones.
    pub selected: BTreeSet<usize>,
    pub annoyance: Annoyance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionAgent {
    pub action: usize,
    /// SelBy_p: failure modes that currently select this action.
    pub selected_by: BTreeSet<usize>,
    pub inbox: Vec<Feedback>,
    pub annoyance: Annoyance,
}

impl ActionAgent {
    pub fn is_selected(&self) -> bool {
        !self.selected_by.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualityAgent {
    pub budget: Cost,
    pub last_total: Cost,
    pub annoyance: u32,
}

impl FailureModeAgent {
    pub fn residual(&self, problem: &Problem) -> u32 {
        problem.residual(self.failure_mode, self.selected.iter().copied())
    }

    pub fn is_violated(&self, problem: &Problem) -> bool {
        self.residual(problem) > problem.threshold(self.failure_mode)
    }
}

/// 0 when the threshold is met, otherwise `100 / (m + 1)` with `m` the
/// number of selected actions: the fewer actions already help, the more
/// dissatisfied the agent.
pub fn agent_criticality_failure_mode(agent: &FailureModeAgent, problem: &Problem) -> f64 {
    if agent.is_violated(problem) {
        MAX_AGENT_CRITICALITY / (agent.selected.len() as f64 + 1.0)
    } else {
        0.0
    }
}

/// `100 / (n + 1)` with `n` the number of failure modes selecting the action.
pub fn agent_criticality_action(agent: &ActionAgent) -> f64 {
    MAX_AGENT_CRITICALITY / (agent.selected_by.len() as f64 + 1.0)
}

/// Budget overrun relative to the budget, capped at 100.
pub fn agent_criticality_quality(agent: &QualityAgent) -> f64 {
    let (total, budget) = (agent.last_total, agent.budget);
    if total <= budget {
        return 0.0;
    }
    match (total - budget).checked_div(budget) {
        Some(ratio) => (ratio_to_f64(ratio) * MAX_AGENT_CRITICALITY).min(MAX_AGENT_CRITICALITY),
        None => MAX_AGENT_CRITICALITY,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Detection {
    pub feedbacks: Vec<Feedback>,
    /// A non-cooperative situation exists this round.
    pub ncs: bool,
    /// The situation exists but the detector has nobody left to ask.
    pub unresolvable: bool,
}

/// Bad safety-criticality check of one failure-mode agent.
///
/// Violated thresholds produce ↑ to every recommended action not yet
/// selected; with none left the situation is reported as unresolvable.
/// A met threshold produces ≈ to every recommended action.
pub fn detect_bad_safety_criticality(agent: &mut FailureModeAgent, problem: &Problem, round: u64) -> Detection {
    let g = agent.failure_mode;
    let source = AgentId::FailureMode(g);
    let recommended = problem.recommended(g);
    if agent.is_violated(problem) {
        agent.annoyance.increment(FeedbackKind::SelectMore);
        let feedbacks: Vec<Feedback> = recommended
            .iter()
            .filter(|p| !agent.selected.contains(p))
            .map(|&p| Feedback::new(FeedbackKind::SelectMore, source, AgentId::Action(p), Some(g), round))
            .collect();
        Detection {
            unresolvable: feedbacks.is_empty(),
            feedbacks,
            ncs: true,
        }
    } else {
        agent.annoyance.reset(FeedbackKind::SelectMore);
        Detection {
            feedbacks: recommended
                .iter()
                .map(|&p| Feedback::new(FeedbackKind::SelectionGood, source, AgentId::Action(p), Some(g), round))
                .collect(),
            ncs: false,
            unresolvable: false,
        }
    }
}

/// Bad total-cost check of the quality agent. `total` is τ for this round.
///
/// Over budget: ↓ to every selected action. Otherwise ≈ to the same set.
pub fn detect_bad_total_cost(
    agent: &mut QualityAgent,
    selected_actions: &[usize],
    total: Cost,
    round: u64,
) -> Detection {
    agent.last_total = total;
    let over = total > agent.budget;
    let kind = if over {
        agent.annoyance += 1;
        FeedbackKind::SelectLess
    } else {
        agent.annoyance = 0;
        FeedbackKind::SelectionGood
    };
    Detection {
        feedbacks: selected_actions
            .iter()
            .map(|&p| Feedback::new(kind, AgentId::Quality, AgentId::Action(p), None, round))
            .collect(),
        ncs: over,
        unresolvable: over && selected_actions.is_empty(),
    }
}
