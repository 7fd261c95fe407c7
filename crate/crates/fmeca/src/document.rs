//! Model documents and the diagnostics produced while reading them.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use fmeca_core::{validate, FmecaModel, Severity};

use crate::{structured, tabular};

/// The only document version this crate reads and writes.
pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelDocument {
    pub format_version: String,
    pub model: FmecaModel,
    /// Free-form annotations such as author, system name or date.
    pub metadata: BTreeMap<String, String>,
}

impl ModelDocument {
    pub fn new(model: FmecaModel) -> Self {
        ModelDocument {
            format_version: FORMAT_VERSION.into(),
            model,
            metadata: BTreeMap::new(),
        }
    }

    pub fn canonicalize(&mut self) {
        self.model.canonicalize();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Unknown keys, columns and directives are errors.
    #[default]
    Strict,
    /// Unknown keys, columns and directives are reported as warnings.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    /// Nested TOML document.
    Structured,
    /// One CSV row per (failure mode, recommended action).
    Tabular,
}

impl ModelFormat {
    /// `.csv` files are tabular, everything else structured.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ModelFormat::Tabular,
            _ => ModelFormat::Structured,
        }
    }
}

/// 1-based position in the input. For tabular input `column` counts fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl Position {
    pub fn from_offset(source: &str, offset: usize) -> Self {
        let offset = offset.min(source.len());
        let before = &source.as_bytes()[..offset];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        let column = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
        Position { line, column }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    /// Kebab-case identifier, e.g. `syntax`, `unknown-key`, `rank-out-of-scale`.
    pub code: String,
    pub position: Option<Position>,
    /// Logical location such as `failure_modes[Failure1].severity`.
    pub location: String,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = self.position {
            write!(f, "{p}: ")?;
        }
        write!(f, "{}[{}]", self.severity, self.code)?;
        if !self.location.is_empty() {
            write!(f, " {}", self.location)?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub document: ModelDocument,
    pub warnings: Vec<ParseDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}", render(.diagnostics))]
pub struct ParseError {
    /// Errors first, then warnings, each in input order.
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl ParseError {
    pub fn errors(&self) -> impl Iterator<Item = &ParseDiagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }
}

fn render(diagnostics: &[ParseDiagnostic]) -> String {
    diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Collects diagnostics and remembers where each logical location was read.
#[derive(Debug, Default)]
pub(crate) struct Sink {
    pub diagnostics: Vec<ParseDiagnostic>,
    pub locations: BTreeMap<String, Position>,
}

impl Sink {
    pub fn push(
        &mut self,
        severity: Severity,
        code: &str,
        position: Option<Position>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.diagnostics.push(ParseDiagnostic {
            severity,
            code: code.into(),
            position,
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn error(
        &mut self,
        code: &str,
        position: Option<Position>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.push(Severity::Error, code, position, location, message);
    }

    /// Error in strict mode, warning in lenient mode.
    pub fn unknown(
        &mut self,
        mode: ParseMode,
        code: &str,
        position: Option<Position>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) {
        let severity = match mode {
            ParseMode::Strict => Severity::Error,
            ParseMode::Lenient => Severity::Warning,
        };
        self.push(severity, code, position, location, message);
    }

    pub fn mark(&mut self, location: impl Into<String>, position: Option<Position>) {
        if let Some(p) = position {
            self.locations.insert(location.into(), p);
        }
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(ParseDiagnostic::is_error)
    }

    /// Position of `location`, or of its closest recorded parent.
    fn locate(&self, location: &str) -> Option<Position> {
        let mut key = location;
        loop {
            if let Some(p) = self.locations.get(key) {
                return Some(*p);
            }
            let cut = key.rfind(['.', '['])?;
            key = &key[..cut];
        }
    }
}

/// Read a model document. On success the model is canonical and passes every
/// validator error check; warnings are returned alongside.
pub fn parse_model(bytes: &[u8], format: ModelFormat, mode: ParseMode) -> Result<Parsed, ParseError> {
    let source = match std::str::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or_default();
            return Err(ParseError {
                diagnostics: vec![ParseDiagnostic {
                    severity: Severity::Error,
                    code: "encoding".into(),
                    position: Some(Position::from_offset(valid, valid.len())),
                    location: String::new(),
                    message: "input is not valid UTF-8".into(),
                }],
            });
        }
    };
    let mut sink = Sink::default();
    let document = match format {
        ModelFormat::Structured => structured::read(source, mode, &mut sink),
        ModelFormat::Tabular => tabular::read(source, mode, &mut sink),
    };
    let document = match document {
        Some(d) if !sink.has_errors() => d,
        _ => return Err(finish(sink.diagnostics)),
    };
    let mut document = document;
    document.canonicalize();
    for d in validate(&document.model) {
        let position = sink.locate(&d.location);
        sink.push(d.severity, d.code.as_str(), position, d.location, d.message);
    }
    if sink.has_errors() {
        return Err(finish(sink.diagnostics));
    }
    Ok(Parsed {
        document,
        warnings: sink.diagnostics,
    })
}

fn finish(mut diagnostics: Vec<ParseDiagnostic>) -> ParseError {
    diagnostics.sort_by_key(|d| !d.is_error());
    ParseError { diagnostics }
}

/// Serialize in canonical order. Reading the bytes back yields the same
/// document.
pub fn write_model(document: &ModelDocument, format: ModelFormat) -> Vec<u8> {
    let mut document = document.clone();
    document.canonicalize();
    match format {
        ModelFormat::Structured => structured::write(&document),
        ModelFormat::Tabular => tabular::write(&document),
    }
    .into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_map_to_lines_and_columns() {
        let src = "ab\ncdé\nf";
        assert_eq!(Position::from_offset(src, 0), Position { line: 1, column: 1 });
        assert_eq!(Position::from_offset(src, 4), Position { line: 2, column: 2 });
        assert_eq!(Position::from_offset(src, src.len()), Position { line: 3, column: 2 });
    }

    #[test]
    fn parent_location_is_used_when_field_is_unknown() {
        let mut sink = Sink::default();
        sink.mark("actions[A1]", Some(Position { line: 4, column: 1 }));
        assert_eq!(
            sink.locate("actions[A1].mitigations[F9]"),
            Some(Position { line: 4, column: 1 })
        );
        assert_eq!(sink.locate("budget"), None);
    }

    #[test]
    fn format_follows_extension() {
        assert_eq!(ModelFormat::from_path(Path::new("m.CSV")), ModelFormat::Tabular);
        assert_eq!(ModelFormat::from_path(Path::new("m.toml")), ModelFormat::Structured);
        assert_eq!(ModelFormat::from_path(Path::new("-")), ModelFormat::Structured);
    }
}
