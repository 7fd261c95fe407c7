//! The FMECA table as data.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cost::Cost;
use crate::rank::{Rank, Scales};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: String,
    pub description: String,
    /// Threshold copied onto failure modes of this component that do not
    /// declare their own.
    pub default_threshold: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureMode {
    pub id: String,
    pub component_id: String,
    pub function: String,
    pub description: String,
    pub causes: String,
    pub effects: String,
    pub severity: Rank,
    pub occurrence: Rank,
    pub detectability: Rank,
    /// Largest criticality still acceptable; anything strictly above is critical.
    pub critical_threshold: u32,
    pub recommended_actions: Vec<String>,
    /// Groups of mutually alternative actions. Recorded from the input but not
    /// supported by the solvers.
    pub alternative_groups: Vec<Vec<String>>,
}

impl FailureMode {
    pub fn initial_criticality(&self) -> u32 {
        crate::criticality::product(self.severity, self.occurrence, self.detectability)
    }
}

/// Rank reductions an action brings to one failure mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Deltas {
    pub severity: u8,
    pub occurrence: u8,
    pub detectability: u8,
}

impl Deltas {
    pub const fn new(severity: u8, occurrence: u8, detectability: u8) -> Self {
        Deltas {
            severity,
            occurrence,
            detectability,
        }
    }

    pub fn is_zero(self) -> bool {
        self.severity == 0 && self.occurrence == 0 && self.detectability == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreventiveAction {
    pub id: String,
    pub description: String,
    pub cost: Cost,
    /// Keyed by failure mode id.
    pub mitigations: BTreeMap<String, Deltas>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmecaModel {
    pub scales: Scales,
    pub components: Vec<Component>,
    pub failure_modes: Vec<FailureMode>,
    pub actions: Vec<PreventiveAction>,
    pub budget: Cost,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown preventive action {0:?}")]
    UnknownAction(String),
    #[error("unknown failure mode {0:?}")]
    UnknownFailureMode(String),
    #[error("model has {0} validation error(s)")]
    Invalid(usize),
    #[error("failure mode {failure_mode:?} uses alternative action groups, which the solvers do not support")]
    UnsupportedAlternatives { failure_mode: String },
    #[error("action {action:?} targets several failure modes, which the solvers do not support")]
    UnsupportedMultiTarget { action: String },
}

impl FmecaModel {
    pub fn empty() -> Self {
        FmecaModel {
            scales: Scales::default(),
            components: Vec::new(),
            failure_modes: Vec::new(),
            actions: Vec::new(),
            budget: Cost::ZERO,
        }
    }

    pub fn action(&self, id: &str) -> Option<&PreventiveAction> {
        self.actions.iter().find(|a| a.id == id)
    }

    pub fn action_index(&self, id: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.id == id)
    }

    pub fn failure_mode(&self, id: &str) -> Option<&FailureMode> {
        self.failure_modes.iter().find(|f| f.id == id)
    }

    pub fn failure_mode_index(&self, id: &str) -> Option<usize> {
        self.failure_modes.iter().position(|f| f.id == id)
    }

    /// Sort every list by id so that two transcriptions of the same table
    /// compare (and serialize) identically.
    pub fn canonicalize(&mut self) {
        self.components.sort_by(|a, b| a.id.cmp(&b.id));
        self.failure_modes.sort_by(|a, b| a.id.cmp(&b.id));
        self.actions.sort_by(|a, b| a.id.cmp(&b.id));
        for fm in &mut self.failure_modes {
            fm.recommended_actions.sort();
            fm.recommended_actions.dedup();
            for group in &mut fm.alternative_groups {
                group.sort();
                group.dedup();
            }
            fm.alternative_groups.sort();
        }
        for scale in [
            &mut self.scales.severity,
            &mut self.scales.occurrence,
            &mut self.scales.detectability,
        ] {
            scale.levels.sort_by_key(|l| l.rank);
        }
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }
}
