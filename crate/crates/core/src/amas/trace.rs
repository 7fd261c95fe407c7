//! Append-only record of everything a simulation did.
//!
//! Records hold model positions rather than ids; the `fmeca` crate maps them
//! back to ids when exporting.

use alloc::boxed::Box;
use alloc::vec::Vec;

use super::feedback::{AgentId, FeedbackKind};
use crate::config::Objective;
use crate::cost::Cost;

/// A selection relation `{g, p}` as `(failure mode, action)`.
pub type Relation = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcsKind {
    BadSafetyCriticality,
    BadTotalCost,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Add {
        failure_mode: usize,
    },
    Remove {
        failure_modes: Vec<usize>,
    },
    Forward {
        to: usize,
    },
    /// Nothing to do; `annoyed` when the agent's annoyance went up.
    NoOp {
        annoyed: bool,
    },
    AnnoyanceReset,
}

/// Graph and satisfaction levels at the end of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Sel_g per failure mode.
    pub selections: Vec<Vec<usize>>,
    /// SelBy_p per action.
    pub selected_by: Vec<Vec<usize>>,
    pub failure_mode_criticality: Vec<f64>,
    pub action_criticality: Vec<f64>,
    pub quality_criticality: f64,
    pub objective: Objective,
    pub best: Objective,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    CostAssessed {
        total: Cost,
        budget: Cost,
    },
    NcsDetected {
        ncs: NcsKind,
        subject: Option<usize>,
    },
    /// Threshold violated with every recommended action already selected.
    Unresolvable {
        failure_mode: usize,
    },
    FeedbackSent {
        kind: FeedbackKind,
        target: AgentId,
        subject: Option<usize>,
    },
    Routed {
        kind: FeedbackKind,
        subject: Option<usize>,
        hop_trail: Vec<usize>,
        decision: Decision,
    },
    /// The same relation was both requested and released this round; the
    /// request wins.
    Conflict {
        relation: Relation,
    },
    Applied {
        added: Vec<Relation>,
        removed: Vec<Relation>,
    },
    Snapshot(Box<Snapshot>),
}

impl TraceEvent {
    pub fn name(&self) -> &'static str {
        match self {
            TraceEvent::CostAssessed { .. } => "cost_assessed",
            TraceEvent::NcsDetected { .. } => "ncs_detected",
            TraceEvent::Unresolvable { .. } => "unresolvable",
            TraceEvent::FeedbackSent { .. } => "feedback_sent",
            TraceEvent::Routed { .. } => "routed",
            TraceEvent::Conflict { .. } => "conflict",
            TraceEvent::Applied { .. } => "applied",
            TraceEvent::Snapshot(_) => "snapshot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub round: u64,
    /// `None` for simulation-level records (applied operations, snapshots).
    pub agent: Option<AgentId>,
    pub event: TraceEvent,
}
