//! Oracle results and solver/oracle gap reports as TOML documents.

use fmeca_core::oracle::{compare_objectives, CompareError, GapReport, OracleOptions, OracleResult};
use fmeca_core::{Cost, FmecaModel};
use serde::{Deserialize, Serialize};

use crate::digest::model_digest;
use crate::document::FORMAT_VERSION;
use crate::report::{ObjectiveDoc, ReportDocument, ReportError, SelectionDoc};

pub const ORACLE_KIND: &str = "oracle-result";
pub const GAP_KIND: &str = "gap-report";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDocument {
    pub version: String,
    pub kind: String,
    pub model_digest: String,
    pub limit: u64,
    pub pruned: bool,
    pub enumerated_count: u64,
    pub budget: String,
    pub feasible_exists: bool,
    pub optimal: SelectionDoc,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub within_budget: Option<SelectionDoc>,
}

impl OracleDocument {
    pub fn new(model: &FmecaModel, options: OracleOptions, result: &OracleResult) -> Self {
        OracleDocument {
            version: FORMAT_VERSION.into(),
            kind: ORACLE_KIND.into(),
            model_digest: model_digest(model),
            limit: options.limit as u64,
            pruned: options.prune,
            enumerated_count: result.enumerated_count,
            budget: model.budget.to_string(),
            feasible_exists: result.feasible_exists,
            optimal: SelectionDoc::new(&result.optimal, result.optimal_objective),
            within_budget: result
                .best_within_budget
                .as_ref()
                .map(|(c, o)| SelectionDoc::new(c, *o)),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("oracle fields are all representable in TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self, ReportError> {
        let doc: OracleDocument = toml::from_str(text).map_err(|e| ReportError::Malformed(e.to_string()))?;
        if doc.kind != ORACLE_KIND {
            return Err(ReportError::Malformed(format!(
                "kind {:?} is not {ORACLE_KIND:?}",
                doc.kind
            )));
        }
        doc.optimal.objective.to_objective()?;
        Ok(doc)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GapError {
    #[error("solver report is for model {report}, oracle result for {oracle}")]
    DigestMismatch { report: String, oracle: String },
    #[error(transparent)]
    Beaten(#[from] CompareError),
    #[error(transparent)]
    Malformed(#[from] ReportError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapDocument {
    pub version: String,
    pub kind: String,
    pub model_digest: String,
    /// `OPTIMAL` when the solver matched the exact optimum, `SUBOPTIMAL` otherwise.
    pub verdict: String,
    pub solver: ObjectiveDoc,
    pub oracle: ObjectiveDoc,
    pub cost_gap: String,
    /// Cost gap over the optimal cost; absent when the optimum costs nothing
    /// and the solver's answer does not.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub relative_cost_gap: Option<String>,
    pub solver_feasible: bool,
    pub oracle_feasible: bool,
    pub feasibility_agreement: bool,
    pub optimal: bool,
}

impl GapDocument {
    pub fn new(model_digest: String, gap: &GapReport) -> Self {
        GapDocument {
            version: FORMAT_VERSION.into(),
            kind: GAP_KIND.into(),
            model_digest,
            verdict: if gap.optimal { "OPTIMAL" } else { "SUBOPTIMAL" }.into(),
            solver: gap.solver_objective.into(),
            oracle: gap.oracle_objective.into(),
            cost_gap: gap.cost_gap.to_string(),
            relative_cost_gap: gap
                .relative_cost_gap
                .map(|r| Cost::new(*r.numer(), *r.denom()).to_string()),
            solver_feasible: gap.solver_feasible,
            oracle_feasible: gap.oracle_feasible,
            feasibility_agreement: gap.feasibility_agreement,
            optimal: gap.optimal,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("gap fields are all representable in TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self, ReportError> {
        toml::from_str(text).map_err(|e| ReportError::Malformed(e.to_string()))
    }
}

/// Gap between a solver report and an oracle result for the same model.
pub fn compare_documents(report: &ReportDocument, oracle: &OracleDocument) -> Result<GapDocument, GapError> {
    if report.model_digest != oracle.model_digest {
        return Err(GapError::DigestMismatch {
            report: report.model_digest.clone(),
            oracle: oracle.model_digest.clone(),
        });
    }
    let gap = compare_objectives(
        report.summary.objective.to_objective()?,
        report.summary.feasible,
        oracle.optimal.objective.to_objective()?,
        oracle.feasible_exists,
    )?;
    Ok(GapDocument::new(report.model_digest.clone(), &gap))
}
