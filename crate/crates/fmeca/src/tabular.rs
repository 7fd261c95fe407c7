//! The flat CSV model format: one row per (failure mode, recommended action).
//!
//! Directive lines of the form `# key: value` may precede the header row:
//! `version`, `budget` and `metadata.<name>`. Other lines starting with `#`
//! and no `key:` prefix are comments. Scales are always the default ones.

use std::collections::BTreeMap;

use fmeca_core::{Component, Cost, Deltas, Dimension, FailureMode, FmecaModel, PreventiveAction, Rank, Scales};

use crate::document::{ModelDocument, ParseMode, Position, Sink, FORMAT_VERSION};

pub const COLUMNS: &[&str] = &[
    "component",
    "function",
    "failure_mode",
    "description",
    "causes",
    "effects",
    "severity",
    "occurrence",
    "detectability",
    "criticality",
    "threshold",
    "action",
    "action_description",
    "cost",
    "delta_s",
    "delta_o",
    "delta_d",
];

const REQUIRED: &[&str] = &["failure_mode", "severity", "occurrence", "detectability", "threshold"];

fn parse_directive(line: &str) -> Option<(&str, &str)> {
    let body = line.strip_prefix('#')?.trim();
    let (key, value) = body.split_once(':')?;
    let key = key.trim();
    if key.is_empty() || !key.bytes().all(|b| b.is_ascii_alphanumeric() || b"_.-".contains(&b)) {
        return None;
    }
    Some((key, value.trim()))
}

struct Row<'r> {
    record: &'r csv::StringRecord,
    line: usize,
    columns: &'r BTreeMap<&'static str, usize>,
}

impl Row<'_> {
    fn get(&self, column: &str) -> &str {
        self.columns
            .get(column)
            .and_then(|&i| self.record.get(i))
            .map_or("", str::trim)
    }

    fn pos(&self, column: &str) -> Option<Position> {
        let index = self.columns.get(column).copied().unwrap_or(0);
        Some(Position {
            line: self.line,
            column: index + 1,
        })
    }
}

fn rank(row: &Row, column: &str, dim: Dimension, scales: &Scales, sink: &mut Sink) -> Option<Rank> {
    let text = row.get(column);
    if let Ok(v) = text.parse::<u8>() {
        return Some(Rank::new(v));
    }
    if let Some(r) = scales.get(dim).resolve_label(text) {
        return Some(r);
    }
    let code = if text.parse::<i64>().is_ok() {
        "rank-out-of-scale"
    } else {
        "unknown-label"
    };
    sink.error(
        code,
        row.pos(column),
        column,
        format!("{text:?} is not a {dim} rank or level label"),
    );
    None
}

fn number<T: std::str::FromStr>(row: &Row, column: &str, sink: &mut Sink) -> Option<T> {
    let text = row.get(column);
    match text.parse() {
        Ok(v) => Some(v),
        Err(_) => {
            sink.error(
                "type",
                row.pos(column),
                column,
                format!("{text:?} is not a valid {column}"),
            );
            None
        }
    }
}

/// Keep the first value of a repeated field; flag rows that disagree.
fn agree(existing: &str, new: &str, what: &str, row: &Row, column: &str, sink: &mut Sink) {
    if existing != new {
        sink.error(
            "inconsistent",
            row.pos(column),
            what,
            format!("{column} {new:?} differs from {existing:?} on an earlier row"),
        );
    }
}

pub(crate) fn read(source: &str, mode: ParseMode, sink: &mut Sink) -> Option<ModelDocument> {
    let mut format_version = None;
    let mut budget = None;
    let mut metadata = BTreeMap::new();
    let mut offset = 0;
    let mut header_line = 1;
    for (i, line) in source.split_inclusive('\n').enumerate() {
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            header_line = i + 1;
            break;
        }
        offset += line.len();
        header_line = i + 2;
        let Some((key, value)) = parse_directive(trimmed) else {
            continue;
        };
        let position = Some(Position { line: i + 1, column: 1 });
        match key {
            "version" => {
                if value != FORMAT_VERSION {
                    sink.error(
                        "version",
                        position,
                        "version",
                        format!("unsupported version {value:?}, expected {FORMAT_VERSION:?}"),
                    );
                }
                format_version = Some(value.to_string());
            }
            "budget" => match value.parse::<Cost>() {
                Ok(c) => budget = Some(c),
                Err(e) => sink.error("cost", position, "budget", e.to_string()),
            },
            _ => match key.strip_prefix("metadata.") {
                Some(name) if !name.is_empty() => {
                    metadata.insert(name.to_string(), value.to_string());
                }
                _ => sink.unknown(
                    mode,
                    "unknown-directive",
                    position,
                    key,
                    format!("unknown directive {key:?}"),
                ),
            },
        }
    }
    let body = &source[offset..];
    if format_version.is_none() {
        sink.unknown(
            mode,
            "version",
            Some(Position { line: 1, column: 1 }),
            "version",
            "missing \"# version: 1\" directive",
        );
    }
    let Some(budget) = budget else {
        sink.error(
            "missing-field",
            Some(Position { line: 1, column: 1 }),
            "budget",
            "missing \"# budget: <cost>\" directive",
        );
        return None;
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(body.as_bytes());
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            sink.error(
                "syntax",
                Some(Position {
                    line: header_line,
                    column: 1,
                }),
                "",
                e.to_string(),
            );
            return None;
        }
    };
    if headers.is_empty() || body.trim().is_empty() {
        sink.error(
            "missing-header",
            Some(Position {
                line: header_line,
                column: 1,
            }),
            "",
            "header row is required",
        );
        return None;
    }
    let mut columns = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        let name = name.trim();
        let position = Some(Position {
            line: header_line,
            column: i + 1,
        });
        match COLUMNS.iter().find(|c| **c == name) {
            Some(c) => {
                if columns.insert(*c, i).is_some() {
                    sink.error(
                        "duplicate-column",
                        position,
                        name,
                        format!("column {name:?} appears twice"),
                    );
                }
            }
            None => sink.unknown(
                mode,
                "unknown-column",
                position,
                name,
                format!("unknown column {name:?}"),
            ),
        }
    }
    for required in REQUIRED {
        if !columns.contains_key(required) {
            sink.error(
                "missing-column",
                Some(Position {
                    line: header_line,
                    column: 1,
                }),
                *required,
                format!("required column {required:?} is missing"),
            );
        }
    }
    if sink.has_errors() {
        return None;
    }

    let scales = Scales::default();
    let mut model = FmecaModel::empty();
    model.budget = budget;
    let mut fm_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut action_index: BTreeMap<String, usize> = BTreeMap::new();
    let line_base = header_line - 1;

    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(header_line, |p| p.line() as usize + line_base);
                sink.error("syntax", Some(Position { line, column: 1 }), "", e.to_string());
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line() as usize) + line_base;
        let row = Row {
            record: &record,
            line,
            columns: &columns,
        };
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let fm_id = row.get("failure_mode").to_string();
        let action_id = row.get("action").to_string();

        if !fm_id.is_empty() {
            let location = format!("failure_modes[{fm_id}]");
            let ranks = [
                rank(&row, "severity", Dimension::Severity, &scales, sink),
                rank(&row, "occurrence", Dimension::Occurrence, &scales, sink),
                rank(&row, "detectability", Dimension::Detectability, &scales, sink),
            ];
            let threshold = number::<u32>(&row, "threshold", sink);
            let [Some(s), Some(o), Some(d)] = ranks else { continue };
            let Some(threshold) = threshold else { continue };
            let declared = row.get("criticality");
            if !declared.is_empty() {
                let product = u32::from(s.value()) * u32::from(o.value()) * u32::from(d.value());
                if declared.parse::<u32>() != Ok(product) {
                    sink.error(
                        "criticality-mismatch",
                        row.pos("criticality"),
                        format!("{location}.criticality"),
                        format!("criticality {declared:?} does not equal {s} x {o} x {d} = {product}"),
                    );
                }
            }
            let fm = FailureMode {
                id: fm_id.clone(),
                component_id: row.get("component").to_string(),
                function: row.get("function").to_string(),
                description: row.get("description").to_string(),
                causes: row.get("causes").to_string(),
                effects: row.get("effects").to_string(),
                severity: s,
                occurrence: o,
                detectability: d,
                critical_threshold: threshold,
                recommended_actions: Vec::new(),
                alternative_groups: Vec::new(),
            };
            match fm_index.get(&fm_id) {
                Some(&i) => {
                    let first = model.failure_modes[i].clone();
                    let pairs = [
                        (first.component_id.as_str(), fm.component_id.as_str(), "component"),
                        (&first.function, &fm.function, "function"),
                        (&first.description, &fm.description, "description"),
                        (&first.causes, &fm.causes, "causes"),
                        (&first.effects, &fm.effects, "effects"),
                    ];
                    for (a, b, column) in pairs {
                        agree(a, b, &location, &row, column, sink);
                    }
                    let numbers = [
                        (first.severity.to_string(), s.to_string(), "severity"),
                        (first.occurrence.to_string(), o.to_string(), "occurrence"),
                        (first.detectability.to_string(), d.to_string(), "detectability"),
                        (first.critical_threshold.to_string(), threshold.to_string(), "threshold"),
                    ];
                    for (a, b, column) in &numbers {
                        agree(a, b, &location, &row, column, sink);
                    }
                }
                None => {
                    sink.mark(&location, row.pos("failure_mode"));
                    for column in ["severity", "occurrence", "detectability", "threshold", "component"] {
                        sink.mark(format!("{location}.{column}"), row.pos(column));
                    }
                    fm_index.insert(fm_id.clone(), model.failure_modes.len());
                    model.failure_modes.push(fm);
                }
            }
        }

        if action_id.is_empty() {
            continue;
        }
        let location = format!("actions[{action_id}]");
        let Some(cost) = number::<Cost>(&row, "cost", sink) else {
            continue;
        };
        let description = row.get("action_description").to_string();
        let i = match action_index.get(&action_id) {
            Some(&i) => {
                let first = &model.actions[i];
                let (first_description, first_cost) = (first.description.clone(), first.cost.to_string());
                agree(
                    &first_description,
                    &description,
                    &location,
                    &row,
                    "action_description",
                    sink,
                );
                agree(&first_cost, &cost.to_string(), &location, &row, "cost", sink);
                i
            }
            None => {
                sink.mark(&location, row.pos("action"));
                sink.mark(format!("{location}.cost"), row.pos("cost"));
                action_index.insert(action_id.clone(), model.actions.len());
                model.actions.push(PreventiveAction {
                    id: action_id.clone(),
                    description,
                    cost,
                    mitigations: BTreeMap::new(),
                });
                model.actions.len() - 1
            }
        };
        if fm_id.is_empty() {
            continue;
        }
        let fm = &mut model.failure_modes[fm_index[&fm_id]];
        if fm.recommended_actions.contains(&action_id) {
            sink.error(
                "duplicate-row",
                row.pos("action"),
                &location,
                format!("{fm_id:?} lists action {action_id:?} twice"),
            );
            continue;
        }
        fm.recommended_actions.push(action_id.clone());
        let cells = [row.get("delta_s"), row.get("delta_o"), row.get("delta_d")];
        if cells.iter().all(|c| c.is_empty()) {
            continue;
        }
        let mut deltas = [0u8; 3];
        for (slot, column) in deltas.iter_mut().zip(["delta_s", "delta_o", "delta_d"]) {
            if !row.get(column).is_empty() {
                *slot = number::<u8>(&row, column, sink).unwrap_or(0);
            }
        }
        sink.mark(format!("{location}.mitigations[{fm_id}]"), row.pos("delta_s"));
        model.actions[i]
            .mitigations
            .insert(fm_id.clone(), Deltas::new(deltas[0], deltas[1], deltas[2]));
    }

    let mut components: Vec<String> = model
        .failure_modes
        .iter()
        .map(|fm| fm.component_id.clone())
        .filter(|c| !c.is_empty())
        .collect();
    components.sort();
    components.dedup();
    model.components = components
        .into_iter()
        .map(|id| Component {
            id,
            description: String::new(),
            default_threshold: None,
        })
        .collect();

    Some(ModelDocument {
        format_version: format_version.unwrap_or_else(|| FORMAT_VERSION.to_string()),
        model,
        metadata,
    })
}

pub(crate) fn write(document: &ModelDocument) -> String {
    let model = &document.model;
    let mut out = String::new();
    out.push_str(&format!(
        "# version: {}\n# budget: {}\n",
        document.format_version, model.budget
    ));
    for (k, v) in &document.metadata {
        let v = v.replace(['\n', '\r'], " ");
        out.push_str(&format!("# metadata.{k}: {v}\n"));
    }
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let _ = writer.write_record(COLUMNS);
    let mut used = std::collections::BTreeSet::new();
    for fm in &model.failure_modes {
        let ranks = [
            fm.severity.to_string(),
            fm.occurrence.to_string(),
            fm.detectability.to_string(),
        ];
        let base = |a: [String; 6]| -> Vec<String> {
            let mut row = vec![
                fm.component_id.clone(),
                fm.function.clone(),
                fm.id.clone(),
                fm.description.clone(),
                fm.causes.clone(),
                fm.effects.clone(),
            ];
            row.extend(ranks.iter().cloned());
            row.push(fm.initial_criticality().to_string());
            row.push(fm.critical_threshold.to_string());
            row.extend(a);
            row
        };
        if fm.recommended_actions.is_empty() {
            let _ = writer.write_record(base(Default::default()));
        }
        for id in &fm.recommended_actions {
            used.insert(id.as_str());
            let (description, cost, deltas) = match model.action(id) {
                Some(a) => (
                    a.description.clone(),
                    a.cost.to_string(),
                    a.mitigations.get(&fm.id).copied(),
                ),
                None => (String::new(), String::new(), None),
            };
            let d = deltas.map_or([String::new(), String::new(), String::new()], |d| {
                [
                    d.severity.to_string(),
                    d.occurrence.to_string(),
                    d.detectability.to_string(),
                ]
            });
            let [ds, d_o, dd] = d;
            let _ = writer.write_record(base([id.clone(), description, cost, ds, d_o, dd]));
        }
    }
    for a in &model.actions {
        if used.contains(a.id.as_str()) {
            continue;
        }
        let mut row = vec![String::new(); COLUMNS.len()];
        row[11] = a.id.clone();
        row[12] = a.description.clone();
        row[13] = a.cost.to_string();
        let _ = writer.write_record(&row);
    }
    let bytes = writer.into_inner().unwrap_or_default();
    out.push_str(&String::from_utf8(bytes).unwrap_or_default());
    out
}
