//! Reading and writing FMECA models, solver reports and traces.
//!
//! Models come in two text formats: a nested TOML document and a flat CSV
//! table with one row per (failure mode, recommended action). Both are read
//! with [`parse_model`] and written with [`write_model`]; the `fmeca` binary
//! wires them to the solver and the exact oracle of `fmeca-core`.

pub mod audit;
pub mod digest;
pub mod document;
pub mod generate;
pub mod oracle_doc;
pub mod report;
mod structured;
pub mod tabular;
pub mod trace_io;

pub use audit::{audit_trace, AuditReport, Check, Violation};
pub use digest::model_digest;
pub use document::{
    parse_model, write_model, ModelDocument, ModelFormat, ParseDiagnostic, ParseError, ParseMode, Parsed, Position,
    FORMAT_VERSION,
};
pub use generate::{generate, GenerateError, GeneratorOptions};
pub use oracle_doc::{compare_documents, GapDocument, GapError, OracleDocument};
pub use report::{write_report, ReportDocument, ReportError, ReportFormat};
pub use trace_io::{read_trace, trace_lines, write_trace, TraceError, TraceLine};
