//! Solver reports: a machine-readable TOML document and a fixed-width table,
//! both rendered from one [`ReportDocument`].

use std::fmt::Write as _;

use fmeca_core::amas::{DeselectionMode, InitialSelection, SolverConfig, SolverResult};
use fmeca_core::{Configuration, Cost, FmecaModel, Objective};
use serde::{Deserialize, Serialize};

use crate::digest::model_digest;
use crate::document::FORMAT_VERSION;

pub const REPORT_KIND: &str = "solver-report";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("report was produced for model {report}, not {model}")]
    DigestMismatch { report: String, model: String },
    #[error("result does not belong to this model: {0}")]
    ForeignResult(String),
    #[error("malformed report: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Machine,
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveDoc {
    pub violations: u32,
    pub excess: u64,
    pub cost: String,
}

impl From<Objective> for ObjectiveDoc {
    fn from(o: Objective) -> Self {
        ObjectiveDoc {
            violations: o.violations,
            excess: o.excess,
            cost: o.cost.to_string(),
        }
    }
}

impl ObjectiveDoc {
    pub fn to_objective(&self) -> Result<Objective, ReportError> {
        Ok(Objective {
            violations: self.violations,
            excess: self.excess,
            cost: parse_cost(&self.cost)?,
        })
    }
}

pub(crate) fn parse_cost(text: &str) -> Result<Cost, ReportError> {
    text.parse().map_err(|e| ReportError::Malformed(format!("{e}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionDoc {
    pub selected: Vec<String>,
    pub objective: ObjectiveDoc,
}

impl SelectionDoc {
    pub fn new(config: &Configuration, objective: Objective) -> Self {
        SelectionDoc {
            selected: config.selected.iter().cloned().collect(),
            objective: objective.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    pub seed: u64,
    pub max_rounds: u64,
    pub quiescence_window: u64,
    pub reorganization_threshold: u32,
    pub initial_selection: String,
    pub deselection: String,
    pub termination: String,
    pub converged: bool,
    pub rounds_used: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryDoc {
    pub objective: ObjectiveDoc,
    pub total_cost: String,
    pub budget: String,
    /// Every threshold met and total cost within budget.
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureModeRow {
    pub id: String,
    pub component: String,
    pub function: String,
    pub severity: u8,
    pub occurrence: u8,
    pub detectability: u8,
    pub initial_criticality: u32,
    pub threshold: u32,
    pub residual_criticality: u32,
    /// `critical` or `ok`.
    pub verdict: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnresolvedDoc {
    pub violated: Vec<String>,
    pub unresolvable: Vec<String>,
    pub over_budget: bool,
    pub budget_infeasible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub version: String,
    pub kind: String,
    pub model_digest: String,
    pub run: RunDoc,
    /// Best configuration found.
    pub summary: SummaryDoc,
    pub selected: Vec<String>,
    pub failure_modes: Vec<FailureModeRow>,
    /// Configuration the simulation stopped in.
    #[serde(rename = "final")]
    pub final_selection: SelectionDoc,
    /// Best configuration seen whose cost fits the budget.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub within_budget: Option<SelectionDoc>,
    pub unresolved: UnresolvedDoc,
}

fn initial_selection_str(s: InitialSelection) -> &'static str {
    match s {
        InitialSelection::Empty => "empty",
        InitialSelection::AllRecommended => "all-recommended",
    }
}

fn deselection_str(d: DeselectionMode) -> &'static str {
    match d {
        DeselectionMode::SafetyGated => "safety-gated",
        DeselectionMode::Literal => "literal",
    }
}

impl ReportDocument {
    pub fn new(model: &FmecaModel, config: &SolverConfig, result: &SolverResult) -> Result<Self, ReportError> {
        let best = &result.best;
        if best.outcomes.len() != model.failure_modes.len() {
            return Err(ReportError::ForeignResult(format!(
                "{} failure mode outcomes for {} failure modes",
                best.outcomes.len(),
                model.failure_modes.len()
            )));
        }
        if result.budget != model.budget {
            return Err(ReportError::ForeignResult(format!(
                "result budget {} differs from model budget {}",
                result.budget, model.budget
            )));
        }
        let mut failure_modes = Vec::new();
        for (fm, outcome) in model.failure_modes.iter().zip(&best.outcomes) {
            if fm.id != outcome.failure_mode {
                return Err(ReportError::ForeignResult(format!(
                    "outcome for {:?} where {:?} was expected",
                    outcome.failure_mode, fm.id
                )));
            }
            failure_modes.push(FailureModeRow {
                id: fm.id.clone(),
                component: fm.component_id.clone(),
                function: fm.function.clone(),
                severity: fm.severity.value(),
                occurrence: fm.occurrence.value(),
                detectability: fm.detectability.value(),
                initial_criticality: outcome.initial_criticality,
                threshold: outcome.threshold,
                residual_criticality: outcome.residual_criticality,
                verdict: if outcome.critical { "critical" } else { "ok" }.into(),
                actions: outcome.selected_actions.clone(),
            });
        }
        for id in &best.selected {
            if model.action(id).is_none() {
                return Err(ReportError::ForeignResult(format!("unknown action {id:?}")));
            }
        }
        Ok(ReportDocument {
            version: FORMAT_VERSION.into(),
            kind: REPORT_KIND.into(),
            model_digest: model_digest(model),
            run: RunDoc {
                seed: config.seed,
                max_rounds: config.max_rounds,
                quiescence_window: config.quiescence_window,
                reorganization_threshold: config.reorganization_threshold,
                initial_selection: initial_selection_str(config.initial_selection).into(),
                deselection: deselection_str(config.deselection).into(),
                termination: result.termination.as_str().into(),
                converged: result.converged,
                rounds_used: result.rounds_used,
            },
            summary: SummaryDoc {
                objective: result.best_objective.into(),
                total_cost: best.total_cost.to_string(),
                budget: result.budget.to_string(),
                feasible: result.is_feasible(),
            },
            selected: best.selected.iter().cloned().collect(),
            failure_modes,
            final_selection: SelectionDoc::new(&result.final_configuration, result.final_objective),
            within_budget: result
                .best_within_budget
                .as_ref()
                .map(|(c, o)| SelectionDoc::new(c, *o)),
            unresolved: UnresolvedDoc {
                violated: result.unresolved.violated.clone(),
                unresolvable: result.unresolved.unresolvable.clone(),
                over_budget: result.unresolved.over_budget,
                budget_infeasible: result.unresolved.budget_infeasible,
            },
        })
    }

    /// Fails unless the report was produced for `model`.
    pub fn check_model(&self, model: &FmecaModel) -> Result<(), ReportError> {
        let digest = model_digest(model);
        if digest != self.model_digest {
            return Err(ReportError::DigestMismatch {
                report: self.model_digest.clone(),
                model: digest,
            });
        }
        Ok(())
    }

    pub fn to_machine(&self) -> String {
        toml::to_string(self).expect("report fields are all representable in TOML")
    }

    pub fn from_machine(text: &str) -> Result<Self, ReportError> {
        let doc: ReportDocument = toml::from_str(text).map_err(|e| ReportError::Malformed(e.to_string()))?;
        if doc.kind != REPORT_KIND {
            return Err(ReportError::Malformed(format!(
                "kind {:?} is not {REPORT_KIND:?}",
                doc.kind
            )));
        }
        if doc.version != FORMAT_VERSION {
            return Err(ReportError::Malformed(format!("unsupported version {:?}", doc.version)));
        }
        doc.summary.objective.to_objective()?;
        Ok(doc)
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Machine => self.to_machine(),
            ReportFormat::Human => self.to_human(),
        }
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        let s = &self.summary;
        let _ = writeln!(out, "FMECA preventive action selection");
        let _ = writeln!(out, "model        {}", self.model_digest);
        let _ = writeln!(
            out,
            "run          {} after {} rounds (seed {})",
            self.run.termination, self.run.rounds_used, self.run.seed
        );
        let _ = writeln!(
            out,
            "objective    violations {}, excess {}, cost {}",
            s.objective.violations, s.objective.excess, s.objective.cost
        );
        let _ = writeln!(
            out,
            "total cost   {} of budget {} ({})",
            s.total_cost,
            s.budget,
            if s.feasible { "feasible" } else { "infeasible" }
        );
        let _ = writeln!(out, "selected     {}", list(&self.selected));
        out.push('\n');

        let header = [
            "Component",
            "Function",
            "Failure mode",
            "S",
            "O",
            "D",
            "C",
            "Threshold",
            "Residual",
            "Verdict",
            "Actions",
        ];
        let rows: Vec<[String; 11]> = self
            .failure_modes
            .iter()
            .map(|r| {
                [
                    r.component.clone(),
                    r.function.clone(),
                    r.id.clone(),
                    r.severity.to_string(),
                    r.occurrence.to_string(),
                    r.detectability.to_string(),
                    r.initial_criticality.to_string(),
                    r.threshold.to_string(),
                    r.residual_criticality.to_string(),
                    r.verdict.clone(),
                    list(&r.actions),
                ]
            })
            .collect();
        let mut widths = header.map(|h| h.chars().count());
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| -> String {
            let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
            padded.join("  ").trim_end().to_string()
        };
        let _ = writeln!(out, "{}", line(&header.map(String::from)));
        let _ = writeln!(out, "{}", line(&widths.map(|w| "-".repeat(w))));
        for row in &rows {
            let _ = writeln!(out, "{}", line(row));
        }
        out.push('\n');

        let f = &self.final_selection;
        let _ = writeln!(
            out,
            "final        {} -> ({}, {}, {})",
            list(&f.selected),
            f.objective.violations,
            f.objective.excess,
            f.objective.cost
        );
        match &self.within_budget {
            Some(w) => {
                let _ = writeln!(
                    out,
                    "in budget    {} -> ({}, {}, {})",
                    list(&w.selected),
                    w.objective.violations,
                    w.objective.excess,
                    w.objective.cost
                );
            }
            None => {
                let _ = writeln!(out, "in budget    none seen");
            }
        }
        let u = &self.unresolved;
        let mut notes = Vec::new();
        if !u.violated.is_empty() {
            notes.push(format!("violated {}", list(&u.violated)));
        }
        if !u.unresolvable.is_empty() {
            notes.push(format!("unresolvable {}", list(&u.unresolvable)));
        }
        if u.over_budget {
            notes.push("final configuration over budget".into());
        }
        if u.budget_infeasible {
            notes.push("budget infeasible".into());
        }
        let _ = writeln!(
            out,
            "unresolved   {}",
            if notes.is_empty() {
                "none".into()
            } else {
                notes.join("; ")
            }
        );
        out
    }
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        items.join(", ")
    }
}

/// Report bytes for `result`, which must have been produced from `model`.
pub fn write_report(
    model: &FmecaModel,
    config: &SolverConfig,
    result: &SolverResult,
    format: ReportFormat,
) -> Result<Vec<u8>, ReportError> {
    Ok(ReportDocument::new(model, config, result)?.render(format).into_bytes())
}
