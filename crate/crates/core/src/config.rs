//! Selections of preventive actions and how good they are.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::cost::Cost;
use crate::criticality::residual_criticality;
use crate::model::{FmecaModel, ModelError, PreventiveAction};

/// Lexicographic quality of a configuration: fewer threshold violations,
/// then less total excess over the thresholds, then lower cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Objective {
    pub violations: u32,
    pub excess: u64,
    pub cost: Cost,
}

impl Objective {
    pub fn is_safe(&self) -> bool {
        self.violations == 0
    }

    /// Safe and within `budget`.
    pub fn is_feasible(&self, budget: Cost) -> bool {
        self.violations == 0 && self.cost <= budget
    }
}

impl Ord for Objective {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.violations, self.excess, self.cost).cmp(&(other.violations, other.excess, other.cost))
    }
}

impl PartialOrd for Objective {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.violations, self.excess, self.cost)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureModeOutcome {
    pub failure_mode: String,
    pub initial_criticality: u32,
    pub residual_criticality: u32,
    pub threshold: u32,
    pub critical: bool,
    /// Selected actions that carry a mitigation for this failure mode.
    pub selected_actions: Vec<String>,
}

/// A set of selected actions together with what it implies for the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub selected: BTreeSet<String>,
    pub total_cost: Cost,
    /// In model order.
    pub outcomes: Vec<FailureModeOutcome>,
}

impl Configuration {
    pub fn evaluate<I, S>(model: &FmecaModel, selected: I) -> Result<Configuration, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let selected: BTreeSet<String> = selected.into_iter().map(Into::into).collect();
        let actions = resolve(model, &selected)?;
        let total_cost = actions.iter().map(|a| a.cost).sum();
        let outcomes = model
            .failure_modes
            .iter()
            .map(|fm| {
                let residual = residual_criticality(fm, actions.iter().copied(), model.scales.bounds);
                FailureModeOutcome {
                    failure_mode: fm.id.clone(),
                    initial_criticality: fm.initial_criticality(),
                    residual_criticality: residual,
                    threshold: fm.critical_threshold,
                    critical: residual > fm.critical_threshold,
                    selected_actions: actions
                        .iter()
                        .filter(|a| a.mitigations.contains_key(&fm.id))
                        .map(|a| a.id.clone())
                        .collect(),
                }
            })
            .collect();
        Ok(Configuration {
            selected,
            total_cost,
            outcomes,
        })
    }

    pub fn empty(model: &FmecaModel) -> Configuration {
        Configuration::evaluate(model, core::iter::empty::<String>()).expect("empty selection has no references")
    }

    pub fn objective(&self) -> Objective {
        let mut violations = 0u32;
        let mut excess = 0u64;
        for o in &self.outcomes {
            if o.residual_criticality > o.threshold {
                violations += 1;
                excess += u64::from(o.residual_criticality - o.threshold);
            }
        }
        Objective {
            violations,
            excess,
            cost: self.total_cost,
        }
    }

    pub fn is_feasible(&self, budget: Cost) -> bool {
        self.objective().is_feasible(budget)
    }
}

fn resolve<'m>(model: &'m FmecaModel, selected: &BTreeSet<String>) -> Result<Vec<&'m PreventiveAction>, ModelError> {
    selected
        .iter()
        .map(|id| model.action(id).ok_or_else(|| ModelError::UnknownAction(id.clone())))
        .collect()
}

/// Sum of the costs of the selected actions, each counted once however many
/// failure modes it serves.
pub fn total_cost(config: &Configuration, model: &FmecaModel) -> Result<Cost, ModelError> {
    Ok(resolve(model, &config.selected)?.iter().map(|a| a.cost).sum())
}

pub fn objective(config: &Configuration, model: &FmecaModel) -> Result<Objective, ModelError> {
    let fresh = Configuration::evaluate(model, config.selected.iter().cloned())?;
    Ok(fresh.objective())
}
