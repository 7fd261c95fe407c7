//! Index-based view of a validated model, shared by the solvers.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::config::{Configuration, Objective};
use crate::cost::Cost;
use crate::criticality::residual_from_totals;
use crate::model::{FmecaModel, ModelError};
use crate::rank::ScaleBounds;
use crate::validate::{error_count, validate, DiagnosticCode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct FailureModeEntry {
    pub initial: [u8; 3],
    pub threshold: u32,
    /// Action indices, ascending.
    pub recommended: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ActionEntry {
    pub cost: Cost,
    /// `(failure mode index, [dS, dO, dD])`.
    pub effects: Vec<(usize, [u32; 3])>,
}

/// A model that passed validation, with ids replaced by positions.
///
/// Failure mode `i` is `model.failure_modes[i]` and action `j` is
/// `model.actions[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub(crate) bounds: ScaleBounds,
    pub(crate) budget: Cost,
    pub(crate) failure_modes: Vec<FailureModeEntry>,
    pub(crate) actions: Vec<ActionEntry>,
    pub(crate) failure_mode_ids: Vec<String>,
    pub(crate) action_ids: Vec<String>,
}

impl Problem {
    /// Fails on any validation error, naming unsupported relation types
    /// explicitly.
    pub fn compile(model: &FmecaModel) -> Result<Problem, ModelError> {
        let diagnostics = validate(model);
        if let Some(fm) = model.failure_modes.iter().find(|f| !f.alternative_groups.is_empty()) {
            return Err(ModelError::UnsupportedAlternatives {
                failure_mode: fm.id.clone(),
            });
        }
        if let Some(d) = diagnostics
            .iter()
            .find(|d| d.code == DiagnosticCode::UnsupportedRelationType4)
        {
            let action = d.location.trim_start_matches("actions[").trim_end_matches(']').into();
            return Err(ModelError::UnsupportedMultiTarget { action });
        }
        let errors = error_count(&diagnostics);
        if errors > 0 {
            return Err(ModelError::Invalid(errors));
        }

        let failure_modes = model
            .failure_modes
            .iter()
            .map(|fm| {
                let mut recommended: Vec<usize> = fm
                    .recommended_actions
                    .iter()
                    .map(|id| model.action_index(id).expect("validated reference"))
                    .collect();
                recommended.sort_unstable();
                recommended.dedup();
                FailureModeEntry {
                    initial: [fm.severity.value(), fm.occurrence.value(), fm.detectability.value()],
                    threshold: fm.critical_threshold,
                    recommended,
                }
            })
            .collect();
        let actions = model
            .actions
            .iter()
            .map(|a| ActionEntry {
                cost: a.cost,
                effects: a
                    .mitigations
                    .iter()
                    .map(|(fm_id, d)| {
                        (
                            model.failure_mode_index(fm_id).expect("validated reference"),
                            [
                                u32::from(d.severity),
                                u32::from(d.occurrence),
                                u32::from(d.detectability),
                            ],
                        )
                    })
                    .collect(),
            })
            .collect();
        Ok(Problem {
            bounds: model.scales.bounds,
            budget: model.budget,
            failure_modes,
            actions,
            failure_mode_ids: model.failure_modes.iter().map(|f| f.id.clone()).collect(),
            action_ids: model.actions.iter().map(|a| a.id.clone()).collect(),
        })
    }

    pub fn failure_mode_count(&self) -> usize {
        self.failure_modes.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn budget(&self) -> Cost {
        self.budget
    }

    pub fn action_id(&self, index: usize) -> &str {
        &self.action_ids[index]
    }

    pub fn failure_mode_id(&self, index: usize) -> &str {
        &self.failure_mode_ids[index]
    }

    pub fn action_cost(&self, index: usize) -> Cost {
        self.actions[index].cost
    }

    pub fn recommended(&self, fm: usize) -> &[usize] {
        &self.failure_modes[fm].recommended
    }

    pub fn threshold(&self, fm: usize) -> u32 {
        self.failure_modes[fm].threshold
    }

    pub fn initial_criticality(&self, fm: usize) -> u32 {
        let [s, o, d] = self.failure_modes[fm].initial;
        u32::from(s) * u32::from(o) * u32::from(d)
    }

    /// Deltas of `action` on `fm`, zero when it has no effect there.
    pub(crate) fn effect(&self, action: usize, fm: usize) -> [u32; 3] {
        self.actions[action]
            .effects
            .iter()
            .find(|(f, _)| *f == fm)
            .map_or([0; 3], |(_, d)| *d)
    }

    pub(crate) fn residual_from_totals(&self, fm: usize, totals: [u32; 3]) -> u32 {
        let [s, o, d] = residual_from_totals(self.failure_modes[fm].initial, totals, self.bounds.min);
        u32::from(s) * u32::from(o) * u32::from(d)
    }

    /// Residual criticality of `fm` when exactly `actions` are implemented.
    pub fn residual<I: IntoIterator<Item = usize>>(&self, fm: usize, actions: I) -> u32 {
        let mut totals = [0u32; 3];
        for a in actions {
            let d = self.effect(a, fm);
            for k in 0..3 {
                totals[k] += d[k];
            }
        }
        self.residual_from_totals(fm, totals)
    }

    /// Objective of a selection given as a membership mask over actions.
    pub fn evaluate_mask(&self, selected: &[bool]) -> Objective {
        let mut totals = alloc::vec![[0u32; 3]; self.failure_modes.len()];
        let mut cost = Cost::ZERO;
        for (a, entry) in self.actions.iter().enumerate() {
            if selected[a] {
                cost += entry.cost;
                for (fm, d) in &entry.effects {
                    for k in 0..3 {
                        totals[*fm][k] += d[k];
                    }
                }
            }
        }
        let mut objective = Objective {
            violations: 0,
            excess: 0,
            cost,
        };
        for (fm, t) in totals.into_iter().enumerate() {
            let residual = self.residual_from_totals(fm, t);
            let threshold = self.failure_modes[fm].threshold;
            if residual > threshold {
                objective.violations += 1;
                objective.excess += u64::from(residual - threshold);
            }
        }
        objective
    }

    pub fn evaluate(&self, selected: &BTreeSet<usize>) -> Objective {
        let mut mask = alloc::vec![false; self.actions.len()];
        for &a in selected {
            mask[a] = true;
        }
        self.evaluate_mask(&mask)
    }

    /// Full [`Configuration`] for a set of action indices of `model`.
    pub fn configuration(&self, model: &FmecaModel, selected: &BTreeSet<usize>) -> Configuration {
        Configuration::evaluate(model, selected.iter().map(|&a| self.action_ids[a].clone()))
            .expect("indices come from this model")
    }
}
