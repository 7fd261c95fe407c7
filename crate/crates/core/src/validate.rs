//! Structural and semantic checks on an [`FmecaModel`].
//!
//! Errors make a model unusable by the solvers; warnings point at entries
//! that are legal but probably not what the analyst meant.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::FmecaModel;
use crate::rank::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticCode {
    InvalidScale,
    DuplicateLabel,
    DuplicateId,
    EmptyId,
    UnknownReference,
    RankOutOfScale,
    NonPositiveThreshold,
    ThresholdOutsideRange,
    NegativeCost,
    NegativeBudget,
    MitigationNotRecommended,
    ZeroEffectMitigation,
    RecommendedWithoutMitigation,
    CriticalWithoutActions,
    UnusedAction,
    NoFailureModes,
    UnsupportedRelationType3,
    UnsupportedRelationType4,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::InvalidScale => "invalid-scale",
            DiagnosticCode::DuplicateLabel => "duplicate-label",
            DiagnosticCode::DuplicateId => "duplicate-id",
            DiagnosticCode::EmptyId => "empty-id",
            DiagnosticCode::UnknownReference => "unknown-reference",
            DiagnosticCode::RankOutOfScale => "rank-out-of-scale",
            DiagnosticCode::NonPositiveThreshold => "non-positive-threshold",
            DiagnosticCode::ThresholdOutsideRange => "threshold-outside-range",
            DiagnosticCode::NegativeCost => "negative-cost",
            DiagnosticCode::NegativeBudget => "negative-budget",
            DiagnosticCode::MitigationNotRecommended => "mitigation-not-recommended",
            DiagnosticCode::ZeroEffectMitigation => "zero-effect-mitigation",
            DiagnosticCode::RecommendedWithoutMitigation => "recommended-without-mitigation",
            DiagnosticCode::CriticalWithoutActions => "critical-without-actions",
            DiagnosticCode::UnusedAction => "unused-action",
            DiagnosticCode::NoFailureModes => "no-failure-modes",
            DiagnosticCode::UnsupportedRelationType3 => "relation-type-3-unsupported",
            DiagnosticCode::UnsupportedRelationType4 => "relation-type-4-unsupported",
        }
    }
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    /// Path to the offending entry, e.g. `failure_modes[Failure1].severity`.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: DiagnosticCode, location: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn warning(code: DiagnosticCode, location: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            code,
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}] {}: {}",
            self.severity, self.code, self.location, self.message
        )
    }
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn error(&mut self, code: DiagnosticCode, location: String, message: String) {
        self.0.push(Diagnostic::error(code, location, message));
    }

    fn warning(&mut self, code: DiagnosticCode, location: String, message: String) {
        self.0.push(Diagnostic::warning(code, location, message));
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::new();
    let mut dup = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            dup.insert(id);
        }
    }
    dup
}

/// Check `model` and return every problem found, errors first. The model is
/// not modified, and the result only depends on the model.
pub fn validate(model: &FmecaModel) -> Vec<Diagnostic> {
    let mut out = Collector(Vec::new());
    check_scales(model, &mut out);
    check_ids(model, &mut out);
    check_failure_modes(model, &mut out);
    check_actions(model, &mut out);
    if model.budget.is_negative() {
        out.error(
            DiagnosticCode::NegativeBudget,
            "budget".into(),
            format!("budget {} is negative", model.budget),
        );
    }
    if model.failure_modes.is_empty() {
        out.warning(
            DiagnosticCode::NoFailureModes,
            "failure_modes".into(),
            "model has no failure modes; there is nothing to optimize".into(),
        );
    }
    let mut diagnostics = out.0;
    diagnostics.sort_by_key(|d| d.severity);
    diagnostics
}

fn check_scales(model: &FmecaModel, out: &mut Collector) {
    let bounds = model.scales.bounds;
    if bounds.min < 1 || bounds.max < bounds.min {
        out.error(
            DiagnosticCode::InvalidScale,
            "scales".into(),
            format!("scale bounds [{}, {}] need 1 <= min <= max", bounds.min, bounds.max),
        );
        return;
    }
    for dim in Dimension::ALL {
        let scale = model.scales.get(dim);
        let location = format!("scales.{dim}");
        let mut ranks: Vec<u8> = scale.levels.iter().map(|l| l.rank).collect();
        ranks.sort_unstable();
        let expected: Vec<u8> = (bounds.min..=bounds.max).collect();
        if ranks != expected {
            out.error(
                DiagnosticCode::InvalidScale,
                location.clone(),
                format!(
                    "levels must be the consecutive ranks {}..={}, found {:?}",
                    bounds.min, bounds.max, ranks
                ),
            );
        }
        for label in duplicates(scale.levels.iter().map(|l| l.label.as_str())) {
            out.error(
                DiagnosticCode::DuplicateLabel,
                location.clone(),
                format!("label {label:?} is used by more than one level"),
            );
        }
    }
}

fn check_ids(model: &FmecaModel, out: &mut Collector) {
    let groups: [(&str, Vec<&str>); 3] = [
        ("components", model.components.iter().map(|c| c.id.as_str()).collect()),
        (
            "failure_modes",
            model.failure_modes.iter().map(|f| f.id.as_str()).collect(),
        ),
        ("actions", model.actions.iter().map(|a| a.id.as_str()).collect()),
    ];
    for (category, ids) in groups {
        for id in duplicates(ids.iter().copied()) {
            out.error(
                DiagnosticCode::DuplicateId,
                format!("{category}[{id}]"),
                format!("id {id:?} is declared more than once"),
            );
        }
        if ids.iter().any(|id| id.trim().is_empty()) {
            out.error(
                DiagnosticCode::EmptyId,
                String::from(category),
                String::from("every entry needs a non-empty id"),
            );
        }
    }
}

fn check_failure_modes(model: &FmecaModel, out: &mut Collector) {
    let bounds = model.scales.bounds;
    let (lo, hi) = bounds.criticality_range();
    let component_ids: BTreeSet<&str> = model.components.iter().map(|c| c.id.as_str()).collect();
    let action_ids: BTreeSet<&str> = model.actions.iter().map(|a| a.id.as_str()).collect();

    for fm in &model.failure_modes {
        let at = |field: &str| format!("failure_modes[{}].{field}", fm.id);
        if !model.components.is_empty() && !component_ids.contains(fm.component_id.as_str()) {
            out.error(
                DiagnosticCode::UnknownReference,
                at("component"),
                format!("component {:?} is not declared", fm.component_id),
            );
        }
        let mut ranks_ok = true;
        for (dim, rank) in [
            (Dimension::Severity, fm.severity),
            (Dimension::Occurrence, fm.occurrence),
            (Dimension::Detectability, fm.detectability),
        ] {
            if let Err(e) = bounds.check(dim, rank) {
                ranks_ok = false;
                out.error(DiagnosticCode::RankOutOfScale, at(dim.as_str()), format!("{e}"));
            }
        }
        if fm.critical_threshold == 0 {
            out.error(
                DiagnosticCode::NonPositiveThreshold,
                at("threshold"),
                String::from("critical threshold must be a positive integer"),
            );
        } else if fm.critical_threshold < lo || fm.critical_threshold > hi {
            out.warning(
                DiagnosticCode::ThresholdOutsideRange,
                at("threshold"),
                format!(
                    "threshold {} lies outside the reachable criticality range [{lo}, {hi}]",
                    fm.critical_threshold
                ),
            );
        }
        for id in &fm.recommended_actions {
            if !action_ids.contains(id.as_str()) {
                out.error(
                    DiagnosticCode::UnknownReference,
                    at("actions"),
                    format!("recommended action {id:?} is not declared"),
                );
            }
        }
        for (i, group) in fm.alternative_groups.iter().enumerate() {
            for id in group {
                if !action_ids.contains(id.as_str()) {
                    out.error(
                        DiagnosticCode::UnknownReference,
                        format!("failure_modes[{}].alternatives[{i}]", fm.id),
                        format!("alternative action {id:?} is not declared"),
                    );
                }
            }
        }
        if !fm.alternative_groups.is_empty() {
            out.error(
                DiagnosticCode::UnsupportedRelationType3,
                at("alternatives"),
                String::from(
                    "alternative action groups (relation type 3) are recorded but not supported by the solvers",
                ),
            );
        }
        if ranks_ok && fm.recommended_actions.is_empty() && fm.initial_criticality() > fm.critical_threshold {
            out.warning(
                DiagnosticCode::CriticalWithoutActions,
                at("actions"),
                format!(
                    "criticality {} exceeds threshold {} but no preventive action is recommended",
                    fm.initial_criticality(),
                    fm.critical_threshold
                ),
            );
        }
    }
}

fn check_actions(model: &FmecaModel, out: &mut Collector) {
    // action id -> failure modes recommending it
    let mut recommended_by: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for fm in &model.failure_modes {
        for id in &fm.recommended_actions {
            recommended_by.entry(id.as_str()).or_default().push(fm.id.as_str());
        }
    }
    let fm_ids: BTreeSet<&str> = model.failure_modes.iter().map(|f| f.id.as_str()).collect();

    for action in &model.actions {
        let at = |field: &str| format!("actions[{}].{field}", action.id);
        if action.cost.is_negative() {
            out.error(
                DiagnosticCode::NegativeCost,
                at("cost"),
                format!("cost {} is negative", action.cost),
            );
        }
        let recommenders = recommended_by.get(action.id.as_str());
        for (fm_id, deltas) in &action.mitigations {
            if !fm_ids.contains(fm_id.as_str()) {
                out.error(
                    DiagnosticCode::UnknownReference,
                    format!("actions[{}].mitigations[{fm_id}]", action.id),
                    format!("failure mode {fm_id:?} is not declared"),
                );
            } else if !recommenders.is_some_and(|r| r.contains(&fm_id.as_str())) {
                out.error(
                    DiagnosticCode::MitigationNotRecommended,
                    format!("actions[{}].mitigations[{fm_id}]", action.id),
                    format!("failure mode {fm_id:?} does not list this action as recommended"),
                );
            }
            if deltas.is_zero() {
                out.warning(
                    DiagnosticCode::ZeroEffectMitigation,
                    format!("actions[{}].mitigations[{fm_id}]", action.id),
                    String::from("mitigation reduces no rank"),
                );
            }
        }
        match recommenders {
            None => out.warning(
                DiagnosticCode::UnusedAction,
                format!("actions[{}]", action.id),
                String::from("no failure mode recommends this action"),
            ),
            Some(fms) => {
                if fms.len() > 1 {
                    out.error(
                        DiagnosticCode::UnsupportedRelationType4,
                        format!("actions[{}]", action.id),
                        format!(
                            "action targets {} failure modes ({}); relation type 4 is not supported by the solvers",
                            fms.len(),
                            fms.join(", ")
                        ),
                    );
                }
                for fm_id in fms {
                    if !action.mitigations.contains_key(*fm_id) {
                        out.warning(
                            DiagnosticCode::RecommendedWithoutMitigation,
                            format!("actions[{}].mitigations", action.id),
                            format!("recommended for {fm_id:?} but declares no mitigation for it"),
                        );
                    }
                }
            }
        }
    }
}

/// Convenience for callers that only care whether the model is usable.
pub(crate) fn error_count(diagnostics: &[Diagnostic]) -> usize {
    diagnostics.iter().filter(|d| d.is_error()).count()
}
