//! FMECA criticality analysis and budget-constrained selection of preventive
//! actions.
//!
//! The crate is `no_std` (it needs `alloc`). It carries:
//!
//! - the FMECA domain model ([`FmecaModel`]) with its rating scales, failure
//!   modes and recommended preventive actions,
//! - the criticality arithmetic (`C = S * O * D`) and the residual-mitigation
//!   model used once actions are selected,
//! - a model validator producing structured [`Diagnostic`]s,
//! - the cooperative multi-agent solver in [`amas`],
//! - an exhaustive reference solver in [`oracle`] used to check the heuristic
//!   on small instances.
//!
//! Everything that touches files, text formats or the command line lives in
//! the `fmeca` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod amas;
mod config;
mod cost;
mod criticality;
mod model;
pub mod oracle;
mod problem;
mod rank;
mod validate;

pub use config::{objective, total_cost, Configuration, FailureModeOutcome, Objective};
pub use cost::{Cost, CostParseError};
pub use criticality::{criticality, is_critical, residual_criticality, residual_ranks, RankTriple};
pub use model::{Component, Deltas, FailureMode, FmecaModel, ModelError, PreventiveAction};
pub use problem::Problem;
pub use rank::{Dimension, Rank, RatingLevel, RatingScale, ScaleBounds, ScaleError, Scales};
pub use validate::{validate, Diagnostic, DiagnosticCode, Severity};
