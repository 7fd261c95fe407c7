//! The selection graph and the synchronous round scheduler.

use alloc::boxed::Box;
use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::agents::{
    agent_criticality_action, agent_criticality_failure_mode, agent_criticality_quality, detect_bad_safety_criticality,
    detect_bad_total_cost, ActionAgent, FailureModeAgent, QualityAgent,
};
use super::feedback::{AgentId, Feedback, FeedbackKind};
use super::routing::{route_feedback, AnnoyanceEffect, RouteDecision};
use super::trace::{Decision, NcsKind, Relation, Snapshot, TraceEvent, TraceRecord};
use super::{InitialSelection, SolverConfig};
use crate::config::Objective;
use crate::cost::Cost;
use crate::problem::Problem;

/// Best configuration seen so far, as action indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incumbent {
    pub objective: Objective,
    pub selected: BTreeSet<usize>,
}

impl Incumbent {
    fn offer(slot: &mut Option<Incumbent>, objective: Objective, selected: &BTreeSet<usize>) {
        let better = match slot {
            None => true,
            Some(current) => objective < current.objective,
        };
        if better {
            *slot = Some(Incumbent {
                objective,
                selected: selected.clone(),
            });
        }
    }
}

/// What happened in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepSummary {
    pub round: u64,
    /// Some agent detected a non-cooperative situation.
    pub ncs: bool,
    /// Relations actually formed or suppressed.
    pub mutations: usize,
    pub select_more_sent: usize,
    pub select_less_sent: usize,
}

impl StepSummary {
    pub fn is_quiescent(&self) -> bool {
        !self.ncs && self.mutations == 0
    }
}

/// `Sim(t) = (G(t), P(t), q)` plus the trace of how it got there.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    /// Rounds completed so far.
    pub round: u64,
    pub failure_modes: Vec<FailureModeAgent>,
    pub actions: Vec<ActionAgent>,
    pub quality: QualityAgent,
    pub best: Option<Incumbent>,
    /// Best configuration seen with total cost within budget.
    pub best_within_budget: Option<Incumbent>,
    pub trace: Vec<TraceRecord>,
}

impl SimulationState {
    pub fn new(problem: &Problem, config: &SolverConfig) -> Self {
        let mut failure_modes: Vec<FailureModeAgent> = (0..problem.failure_mode_count())
            .map(|g| FailureModeAgent {
                failure_mode: g,
                selected: BTreeSet::new(),
                annoyance: Default::default(),
            })
            .collect();
        let mut actions: Vec<ActionAgent> = (0..problem.action_count())
            .map(|p| ActionAgent {
                action: p,
                selected_by: BTreeSet::new(),
                inbox: Vec::new(),
                annoyance: Default::default(),
            })
            .collect();
        if config.initial_selection == InitialSelection::AllRecommended {
            for agent in &mut failure_modes {
                for &p in problem.recommended(agent.failure_mode) {
                    agent.selected.insert(p);
                    actions[p].selected_by.insert(agent.failure_mode);
                }
            }
        }
        let mut state = SimulationState {
            round: 0,
            failure_modes,
            actions,
            quality: QualityAgent {
                budget: problem.budget(),
                last_total: Cost::ZERO,
                annoyance: 0,
            },
            best: None,
            best_within_budget: None,
            trace: Vec::new(),
        };
        state.quality.last_total = state.total_cost(problem);
        state.record_incumbents(problem);
        state.push_snapshot(problem);
        state
    }

    pub fn selected_actions(&self) -> Vec<usize> {
        self.actions
            .iter()
            .filter(|a| a.is_selected())
            .map(|a| a.action)
            .collect()
    }

    pub fn selected_set(&self) -> BTreeSet<usize> {
        self.selected_actions().into_iter().collect()
    }

    /// τ(t): every selected action counted once.
    pub fn total_cost(&self, problem: &Problem) -> Cost {
        self.actions
            .iter()
            .filter(|a| a.is_selected())
            .map(|a| problem.action_cost(a.action))
            .sum()
    }

    pub fn objective(&self, problem: &Problem) -> Objective {
        problem.evaluate(&self.selected_set())
    }

    /// `p ∈ Sel_g ⟺ g ∈ SelBy_p` for every pair.
    pub fn is_symmetric(&self) -> bool {
        let forward = self.failure_modes.iter().all(|g| {
            g.selected
                .iter()
                .all(|&p| self.actions[p].selected_by.contains(&g.failure_mode))
        });
        let backward = self.actions.iter().all(|p| {
            p.selected_by
                .iter()
                .all(|&g| self.failure_modes[g].selected.contains(&p.action))
        });
        forward && backward
    }

    fn log(&mut self, agent: Option<AgentId>, event: TraceEvent) {
        self.trace.push(TraceRecord {
            round: self.round,
            agent,
            event,
        });
    }

    fn record_incumbents(&mut self, problem: &Problem) {
        let selected = self.selected_set();
        let objective = problem.evaluate(&selected);
        Incumbent::offer(&mut self.best, objective, &selected);
        if objective.cost <= problem.budget() {
            Incumbent::offer(&mut self.best_within_budget, objective, &selected);
        }
    }

    fn push_snapshot(&mut self, problem: &Problem) {
        let snapshot = Snapshot {
            selections: self
                .failure_modes
                .iter()
                .map(|g| g.selected.iter().copied().collect())
                .collect(),
            selected_by: self
                .actions
                .iter()
                .map(|p| p.selected_by.iter().copied().collect())
                .collect(),
            failure_mode_criticality: self
                .failure_modes
                .iter()
                .map(|g| agent_criticality_failure_mode(g, problem))
                .collect(),
            action_criticality: self.actions.iter().map(agent_criticality_action).collect(),
            quality_criticality: agent_criticality_quality(&self.quality),
            objective: self.objective(problem),
            best: self
                .best
                .as_ref()
                .map_or_else(|| self.objective(problem), |b| b.objective),
        };
        self.log(None, TraceEvent::Snapshot(Box::new(snapshot)));
    }

    /// Run one synchronous round.
    ///
    /// Phases: cost check by the quality agent, threshold checks by the
    /// failure-mode agents, delivery ordered by (source, target), inbox
    /// processing with forwarding run to a fixpoint, then atomic application
    /// of the collected add/remove operations.
    pub fn step(&mut self, problem: &Problem, config: &SolverConfig) -> StepSummary {
        self.round += 1;
        let round = self.round;
        let mut summary = StepSummary {
            round,
            ..Default::default()
        };
        let mut outgoing: Vec<Feedback> = Vec::new();

        // Quality agent.
        let selected = self.selected_actions();
        let total = self.total_cost(problem);
        let detection = detect_bad_total_cost(&mut self.quality, &selected, total, round);
        self.log(
            Some(AgentId::Quality),
            TraceEvent::CostAssessed {
                total,
                budget: self.quality.budget,
            },
        );
        if detection.ncs {
            summary.ncs = true;
            self.log(
                Some(AgentId::Quality),
                TraceEvent::NcsDetected {
                    ncs: NcsKind::BadTotalCost,
                    subject: None,
                },
            );
        }
        outgoing.extend(detection.feedbacks);

        // Failure-mode agents.
        for g in 0..self.failure_modes.len() {
            let detection = detect_bad_safety_criticality(&mut self.failure_modes[g], problem, round);
            let agent = Some(AgentId::FailureMode(g));
            if detection.ncs {
                summary.ncs = true;
                self.log(
                    agent,
                    TraceEvent::NcsDetected {
                        ncs: NcsKind::BadSafetyCriticality,
                        subject: Some(g),
                    },
                );
            }
            if detection.unresolvable {
                self.log(agent, TraceEvent::Unresolvable { failure_mode: g });
            }
            outgoing.extend(detection.feedbacks);
        }

        // Delivery.
        outgoing.sort_by_key(|f| (f.source, f.target));
        for feedback in outgoing {
            match feedback.kind {
                FeedbackKind::SelectMore => summary.select_more_sent += 1,
                FeedbackKind::SelectLess => summary.select_less_sent += 1,
                FeedbackKind::SelectionGood => {}
            }
            self.log(
                Some(feedback.source),
                TraceEvent::FeedbackSent {
                    kind: feedback.kind,
                    target: feedback.target,
                    subject: feedback.subject,
                },
            );
            if let AgentId::Action(p) = feedback.target {
                self.actions[p].inbox.push(feedback);
            }
        }

        // Inbox processing.
        let mut queue: Vec<(usize, Feedback)> = Vec::new();
        for agent in &mut self.actions {
            let p = agent.action;
            queue.extend(agent.inbox.drain(..).map(|f| (p, f)));
        }
        self.order_inbox_work(problem, config, &mut queue);

        let mut adds: BTreeSet<Relation> = BTreeSet::new();
        let mut removes: BTreeSet<Relation> = BTreeSet::new();
        let mut annoyance: Vec<(usize, AnnoyanceEffect)> = Vec::new();
        for (p, feedback) in queue {
            let mut pending = VecDeque::from([(p, feedback)]);
            while let Some((p, feedback)) = pending.pop_front() {
                let decision = route_feedback(self, problem, config, p, &feedback);
                let logged = match &decision {
                    RouteDecision::Add { failure_mode, action } => {
                        adds.insert((*failure_mode, *action));
                        Decision::Add {
                            failure_mode: *failure_mode,
                        }
                    }
                    RouteDecision::Remove { action, failure_modes } => {
                        removes.extend(failure_modes.iter().map(|&g| (g, *action)));
                        Decision::Remove {
                            failure_modes: failure_modes.clone(),
                        }
                    }
                    RouteDecision::Forward { to, .. } => Decision::Forward { to: *to },
                    RouteDecision::NoOp { annoyance: effect } => {
                        annoyance.push((p, *effect));
                        match effect {
                            AnnoyanceEffect::Reset(_) => Decision::AnnoyanceReset,
                            AnnoyanceEffect::Increment(_) => Decision::NoOp { annoyed: true },
                            AnnoyanceEffect::None => Decision::NoOp { annoyed: false },
                        }
                    }
                };
                // Selection-good receipts are frequent and carry no decision
                // beyond the reset; they are already visible as sends.
                if feedback.kind != FeedbackKind::SelectionGood {
                    self.log(
                        Some(AgentId::Action(p)),
                        TraceEvent::Routed {
                            kind: feedback.kind,
                            subject: feedback.subject,
                            hop_trail: feedback.hop_trail.clone(),
                            decision: logged,
                        },
                    );
                }
                if let RouteDecision::Forward { to, feedback } = decision {
                    pending.push_front((to, feedback));
                }
            }
        }
        // Annoyance changes take effect after the round's decisions so that
        // every routing call in a round sees the same state.
        for (p, effect) in annoyance {
            match effect {
                AnnoyanceEffect::Increment(kind) => self.actions[p].annoyance.increment(kind),
                AnnoyanceEffect::Reset(kind) => self.actions[p].annoyance.reset(kind),
                AnnoyanceEffect::None => {}
            }
        }

        // Apply: a relation both added and removed stays (safety first), so the
        // applied sets are disjoint.
        let conflicts: Vec<Relation> = adds.intersection(&removes).copied().collect();
        for relation in &conflicts {
            removes.remove(relation);
            self.log(None, TraceEvent::Conflict { relation: *relation });
        }
        let mut added = Vec::new();
        let mut removed = Vec::new();
        for &(g, p) in &adds {
            if self.failure_modes[g].selected.insert(p) {
                self.actions[p].selected_by.insert(g);
                added.push((g, p));
            }
        }
        for &(g, p) in &removes {
            if self.failure_modes[g].selected.remove(&p) {
                self.actions[p].selected_by.remove(&g);
                removed.push((g, p));
            }
        }
        summary.mutations = added.len() + removed.len();
        if summary.mutations > 0 {
            self.log(None, TraceEvent::Applied { added, removed });
        }
        self.quality.last_total = self.total_cost(problem);
        self.record_incumbents(problem);
        self.push_snapshot(problem);
        summary
    }

    /// Safety first: every ↑ before any ↓, ↑ from the most critical
    /// failure-mode agent first; ≈ last. Without safety precedence the
    /// delivery order is kept.
    fn order_inbox_work(&self, problem: &Problem, config: &SolverConfig, queue: &mut [(usize, Feedback)]) {
        let by_delivery =
            |a: &(usize, Feedback), b: &(usize, Feedback)| (a.1.source, a.1.target).cmp(&(b.1.source, b.1.target));
        if !config.safety_precedence {
            queue.sort_by(by_delivery);
            return;
        }
        let class = |f: &Feedback| match f.kind {
            FeedbackKind::SelectMore => 0,
            FeedbackKind::SelectLess => 1,
            FeedbackKind::SelectionGood => 2,
        };
        let urgency = |f: &Feedback| match f.source {
            AgentId::FailureMode(g) => agent_criticality_failure_mode(&self.failure_modes[g], problem),
            _ => 0.0,
        };
        queue.sort_by(|a, b| {
            class(&a.1)
                .cmp(&class(&b.1))
                .then_with(|| {
                    if a.1.kind == FeedbackKind::SelectMore {
                        urgency(&b.1).total_cmp(&urgency(&a.1))
                    } else {
                        Ordering::Equal
                    }
                })
                .then_with(|| by_delivery(a, b))
        });
    }
}
