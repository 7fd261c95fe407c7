use alloc::vec::Vec;
use core::fmt;

/// Identity of an agent in the selection graph. The derived order (quality
/// agent, then failure modes, then actions, each by model position) is the
/// delivery order of feedbacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentId {
    Quality,
    FailureMode(usize),
    Action(usize),
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Quality => f.write_str("quality"),
            AgentId::FailureMode(i) => write!(f, "fm#{i}"),
            AgentId::Action(i) => write!(f, "action#{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeedbackKind {
    /// ↑: a failure mode still exceeds its threshold.
    SelectMore,
    /// ↓: the total cost exceeds the budget.
    SelectLess,
    /// ≈: the sender is satisfied with the current selection.
    SelectionGood,
}

impl FeedbackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackKind::SelectMore => "select_more",
            FeedbackKind::SelectLess => "select_less",
            FeedbackKind::SelectionGood => "selection_good",
        }
    }

    pub fn symbol(self) -> char {
        match self {
            FeedbackKind::SelectMore => '↑',
            FeedbackKind::SelectLess => '↓',
            FeedbackKind::SelectionGood => '≈',
        }
    }
}

impl fmt::Display for FeedbackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feedback {
    pub kind: FeedbackKind,
    pub source: AgentId,
    pub target: AgentId,
    /// Failure mode index the feedback is about; `None` for the quality
    /// agent's cost feedback.
    pub subject: Option<usize>,
    pub round: u64,
    /// Action agents that already handled this feedback, in visiting order.
    pub hop_trail: Vec<usize>,
}

impl Feedback {
    pub fn new(kind: FeedbackKind, source: AgentId, target: AgentId, subject: Option<usize>, round: u64) -> Self {
        Feedback {
            kind,
            source,
            target,
            subject,
            round,
            hop_trail: Vec::new(),
        }
    }

    /// Copy addressed to action `to`, with `via` appended to the trail.
    pub fn forwarded(&self, via: usize, to: usize) -> Feedback {
        debug_assert!(!self.hop_trail.contains(&via));
        let mut next = self.clone();
        next.hop_trail.push(via);
        next.target = AgentId::Action(to);
        next
    }
}
