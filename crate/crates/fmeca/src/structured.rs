//! The nested TOML model format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use fmeca_core::{
    Component, Cost, Deltas, Dimension, FailureMode, FmecaModel, PreventiveAction, Rank, RatingLevel, RatingScale,
    ScaleBounds, Scales,
};
use toml_edit::{ImDocument, Item, TableLike, Value};

use crate::document::{ModelDocument, ParseMode, Position, Sink, FORMAT_VERSION};

const TOP_KEYS: &[&str] = &[
    "version",
    "budget",
    "metadata",
    "scales",
    "components",
    "failure_modes",
    "actions",
];
const SCALE_KEYS: &[&str] = &["min", "max", "severity", "occurrence", "detectability"];
const LEVEL_KEYS: &[&str] = &["rank", "label", "description"];
const COMPONENT_KEYS: &[&str] = &["id", "description", "threshold"];
const FAILURE_MODE_KEYS: &[&str] = &[
    "id",
    "component",
    "function",
    "description",
    "causes",
    "effects",
    "severity",
    "occurrence",
    "detectability",
    "threshold",
    "actions",
    "alternatives",
];
const ACTION_KEYS: &[&str] = &["id", "description", "cost", "mitigations"];
const DELTA_KEYS: &[&str] = &["severity", "occurrence", "detectability"];

struct Reader<'s, 'k> {
    source: &'s str,
    mode: ParseMode,
    sink: &'k mut Sink,
}

type Entry<'d> = (&'d dyn TableLike, Option<Range<usize>>);

impl Reader<'_, '_> {
    fn pos(&self, span: Option<Range<usize>>) -> Option<Position> {
        span.map(|s| Position::from_offset(self.source, s.start))
    }

    fn type_error(&mut self, item: &Item, location: &str, expected: &str) {
        let position = self.pos(item.span());
        self.sink.error(
            "type",
            position,
            location,
            format!("expected {expected}, found {}", item.type_name()),
        );
    }

    fn check_keys(&mut self, table: &dyn TableLike, allowed: &[&str], location: &str) {
        for (key, _) in table.iter() {
            if !allowed.contains(&key) {
                let span = table.get_key_value(key).and_then(|(k, _)| k.span());
                let position = self.pos(span);
                let at = join(location, key);
                self.sink
                    .unknown(self.mode, "unknown-key", position, at, format!("unknown key {key:?}"));
            }
        }
    }

    /// Field value, remembering where it was read.
    fn field<'d>(&mut self, table: &'d dyn TableLike, key: &str, location: &str) -> Option<&'d Item> {
        let item = table.get(key)?;
        let position = self.pos(item.span());
        self.sink.mark(join(location, key), position);
        Some(item)
    }

    fn required<'d>(
        &mut self,
        table: &'d dyn TableLike,
        key: &str,
        location: &str,
        span: Option<Range<usize>>,
    ) -> Option<&'d Item> {
        let item = self.field(table, key, location);
        if item.is_none() {
            let position = self.pos(span);
            self.sink.error(
                "missing-field",
                position,
                location,
                format!("missing required key {key:?}"),
            );
        }
        item
    }

    fn entries<'d>(&mut self, item: &'d Item, location: &str) -> Vec<Entry<'d>> {
        match item {
            Item::ArrayOfTables(a) => a.iter().map(|t| (t as &dyn TableLike, t.span())).collect(),
            Item::Value(Value::Array(a)) => {
                let mut out = Vec::new();
                for (i, v) in a.iter().enumerate() {
                    match v.as_inline_table() {
                        Some(t) => out.push((t as &dyn TableLike, v.span())),
                        None => {
                            let position = self.pos(v.span());
                            self.sink.error(
                                "type",
                                position,
                                format!("{location}[{i}]"),
                                format!("expected table, found {}", v.type_name()),
                            );
                        }
                    }
                }
                out
            }
            other => {
                self.type_error(other, location, "array of tables");
                Vec::new()
            }
        }
    }

    fn string(&mut self, item: &Item, location: &str) -> Option<String> {
        match item.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.type_error(item, location, "string");
                None
            }
        }
    }

    fn opt_string(&mut self, table: &dyn TableLike, key: &str, location: &str) -> String {
        match self.field(table, key, location) {
            Some(item) => self.string(item, &join(location, key)).unwrap_or_default(),
            None => String::new(),
        }
    }

    fn integer<T: TryFrom<i64>>(&mut self, item: &Item, location: &str, what: &str) -> Option<T> {
        let Some(v) = item.as_integer() else {
            self.type_error(item, location, "integer");
            return None;
        };
        match T::try_from(v) {
            Ok(x) => Some(x),
            Err(_) => {
                let position = self.pos(item.span());
                self.sink
                    .error("range", position, location, format!("{v} is not a valid {what}"));
                None
            }
        }
    }

    fn strings(&mut self, item: &Item, location: &str) -> Vec<String> {
        let Some(array) = item.as_array() else {
            self.type_error(item, location, "array of strings");
            return Vec::new();
        };
        let mut out = Vec::new();
        for v in array.iter() {
            match v.as_str() {
                Some(s) => out.push(s.to_string()),
                None => {
                    let position = self.pos(v.span());
                    self.sink.error(
                        "type",
                        position,
                        location,
                        format!("expected string, found {}", v.type_name()),
                    );
                }
            }
        }
        out
    }

    /// Integer, decimal (kept exact by re-reading its source text) or a string
    /// such as `"12.50"` or `"7/3"`.
    fn cost(&mut self, item: &Item, location: &str) -> Option<Cost> {
        let position = self.pos(item.span());
        let text = match item {
            Item::Value(Value::Integer(i)) => return Some(Cost::from(*i.value())),
            Item::Value(Value::Float(_)) => item
                .span()
                .and_then(|s| self.source.get(s))
                .unwrap_or_default()
                .to_string(),
            Item::Value(Value::String(s)) => s.value().clone(),
            other => {
                self.type_error(other, location, "number or string");
                return None;
            }
        };
        match text.parse::<Cost>() {
            Ok(c) => Some(c),
            Err(e) => {
                self.sink.error(
                    "cost",
                    position,
                    location,
                    format!("{e}; write costs as integers, decimals or quoted fractions"),
                );
                None
            }
        }
    }

    /// Numeric rank, or a level label of the matching scale.
    fn rank(&mut self, item: &Item, location: &str, scale: &RatingScale) -> Option<Rank> {
        if let Some(label) = item.as_str() {
            return match scale.resolve_label(label) {
                Some(r) => Some(r),
                None => {
                    let position = self.pos(item.span());
                    self.sink.error(
                        "unknown-label",
                        position,
                        location,
                        format!("{label:?} is not a {} level", scale.dimension),
                    );
                    None
                }
            };
        }
        match item.as_integer() {
            Some(v) => match u8::try_from(v) {
                Ok(r) => Some(Rank::new(r)),
                Err(_) => {
                    let position = self.pos(item.span());
                    self.sink.error(
                        "rank-out-of-scale",
                        position,
                        location,
                        format!("rank {v} is out of scale"),
                    );
                    None
                }
            },
            None => {
                self.type_error(item, location, "integer rank or level label");
                None
            }
        }
    }

    fn read_scales(&mut self, item: &Item) -> Scales {
        let mut scales = Scales::default();
        let Some(table) = item.as_table_like() else {
            self.type_error(item, "scales", "table");
            return scales;
        };
        self.check_keys(table, SCALE_KEYS, "scales");
        let min = self
            .field(table, "min", "scales")
            .and_then(|i| self.integer::<u8>(i, "scales.min", "rank"));
        let max = self
            .field(table, "max", "scales")
            .and_then(|i| self.integer::<u8>(i, "scales.max", "rank"));
        scales.bounds = ScaleBounds {
            min: min.unwrap_or(scales.bounds.min),
            max: max.unwrap_or(scales.bounds.max),
        };
        for dim in Dimension::ALL {
            let location = format!("scales.{dim}");
            let Some(item) = self.field(table, dim.as_str(), "scales") else {
                continue;
            };
            let mut levels = Vec::new();
            for (level, span) in self.entries(item, &location) {
                self.check_keys(level, LEVEL_KEYS, &location);
                let rank = self
                    .required(level, "rank", &location, span.clone())
                    .and_then(|i| self.integer::<u8>(i, &location, "rank"));
                let label = self
                    .required(level, "label", &location, span)
                    .and_then(|i| self.string(i, &location));
                let description = self.opt_string(level, "description", &location);
                if let (Some(rank), Some(label)) = (rank, label) {
                    levels.push(RatingLevel {
                        rank,
                        label,
                        description,
                    });
                }
            }
            scales.get_mut(dim).levels = levels;
        }
        scales
    }

    fn read_component(&mut self, table: &dyn TableLike, span: Option<Range<usize>>) -> Option<Component> {
        let id = self
            .required(table, "id", "components", span.clone())
            .and_then(|i| self.string(i, "components.id"))?;
        let location = format!("components[{id}]");
        self.sink.mark(&location, self.pos(span));
        self.check_keys(table, COMPONENT_KEYS, &location);
        let description = self.opt_string(table, "description", &location);
        let default_threshold = self
            .field(table, "threshold", &location)
            .and_then(|i| self.integer::<u32>(i, &join(&location, "threshold"), "threshold"));
        Some(Component {
            id,
            description,
            default_threshold,
        })
    }

    fn read_failure_mode(
        &mut self,
        table: &dyn TableLike,
        span: Option<Range<usize>>,
        scales: &Scales,
        component_thresholds: &BTreeMap<String, u32>,
    ) -> Option<FailureMode> {
        let id = self
            .required(table, "id", "failure_modes", span.clone())
            .and_then(|i| self.string(i, "failure_modes.id"))?;
        let location = format!("failure_modes[{id}]");
        self.sink.mark(&location, self.pos(span.clone()));
        self.check_keys(table, FAILURE_MODE_KEYS, &location);
        let component_id = self.opt_string(table, "component", &location);
        let mut ranks = [None; 3];
        for (slot, dim) in ranks.iter_mut().zip(Dimension::ALL) {
            *slot = self
                .required(table, dim.as_str(), &location, span.clone())
                .and_then(|i| self.rank(i, &join(&location, dim.as_str()), scales.get(dim)));
        }
        let threshold = match self.field(table, "threshold", &location) {
            Some(i) => self.integer::<u32>(i, &join(&location, "threshold"), "threshold"),
            None => match component_thresholds.get(&component_id) {
                Some(t) => Some(*t),
                None => {
                    let position = self.pos(span);
                    self.sink.error(
                        "missing-field",
                        position,
                        &location,
                        "missing \"threshold\" and the component declares no default",
                    );
                    None
                }
            },
        };
        let recommended_actions = match self.field(table, "actions", &location) {
            Some(i) => self.strings(i, &join(&location, "actions")),
            None => Vec::new(),
        };
        let mut alternative_groups = Vec::new();
        if let Some(item) = self.field(table, "alternatives", &location) {
            let at = join(&location, "alternatives");
            match item.as_array() {
                Some(groups) => {
                    for group in groups.iter() {
                        let group = Item::Value(group.clone());
                        alternative_groups.push(self.strings(&group, &at));
                    }
                }
                None => self.type_error(item, &at, "array of arrays"),
            }
        }
        let [Some(severity), Some(occurrence), Some(detectability)] = ranks else {
            return None;
        };
        Some(FailureMode {
            id,
            component_id,
            function: self.opt_string(table, "function", &location),
            description: self.opt_string(table, "description", &location),
            causes: self.opt_string(table, "causes", &location),
            effects: self.opt_string(table, "effects", &location),
            severity,
            occurrence,
            detectability,
            critical_threshold: threshold?,
            recommended_actions,
            alternative_groups,
        })
    }

    fn read_action(&mut self, table: &dyn TableLike, span: Option<Range<usize>>) -> Option<PreventiveAction> {
        let id = self
            .required(table, "id", "actions", span.clone())
            .and_then(|i| self.string(i, "actions.id"))?;
        let location = format!("actions[{id}]");
        self.sink.mark(&location, self.pos(span.clone()));
        self.check_keys(table, ACTION_KEYS, &location);
        let description = self.opt_string(table, "description", &location);
        let cost = self
            .required(table, "cost", &location, span)
            .and_then(|i| self.cost(i, &join(&location, "cost")));
        let mut mitigations = BTreeMap::new();
        if let Some(item) = self.field(table, "mitigations", &location) {
            let at = join(&location, "mitigations");
            match item.as_table_like() {
                Some(m) => {
                    for (fm, deltas) in m.iter() {
                        let fm_at = format!("{at}[{fm}]");
                        self.sink.mark(&fm_at, self.pos(deltas.span()));
                        let Some(d) = deltas.as_table_like() else {
                            self.type_error(deltas, &fm_at, "table");
                            continue;
                        };
                        self.check_keys(d, DELTA_KEYS, &fm_at);
                        let mut values = [0u8; 3];
                        for (slot, dim) in values.iter_mut().zip(Dimension::ALL) {
                            if let Some(v) = self.field(d, dim.as_str(), &fm_at) {
                                *slot = self
                                    .integer::<u8>(v, &join(&fm_at, dim.as_str()), "rank reduction")
                                    .unwrap_or(0);
                            }
                        }
                        mitigations.insert(fm.to_string(), Deltas::new(values[0], values[1], values[2]));
                    }
                }
                None => self.type_error(item, &at, "table"),
            }
        }
        Some(PreventiveAction {
            id,
            description,
            cost: cost?,
            mitigations,
        })
    }
}

fn join(location: &str, key: &str) -> String {
    if location.is_empty() {
        key.to_string()
    } else {
        format!("{location}.{key}")
    }
}

pub(crate) fn read(source: &str, mode: ParseMode, sink: &mut Sink) -> Option<ModelDocument> {
    let doc = match ImDocument::parse(source) {
        Ok(d) => d,
        Err(e) => {
            let position = e.span().map(|s| Position::from_offset(source, s.start));
            sink.error("syntax", position, "", e.message().trim_end());
            return None;
        }
    };
    let root: &dyn TableLike = doc.as_table();
    let mut r = Reader { source, mode, sink };
    r.check_keys(root, TOP_KEYS, "");

    let format_version = match r.field(root, "version", "") {
        Some(item) => {
            let v = r.string(item, "version")?;
            if v != FORMAT_VERSION {
                let position = r.pos(item.span());
                r.sink.error(
                    "version",
                    position,
                    "version",
                    format!("unsupported version {v:?}, expected {FORMAT_VERSION:?}"),
                );
            }
            v
        }
        None => {
            r.sink.unknown(
                mode,
                "version",
                Some(Position { line: 1, column: 1 }),
                "version",
                "missing \"version\" key",
            );
            FORMAT_VERSION.to_string()
        }
    };

    let mut metadata = BTreeMap::new();
    if let Some(item) = r.field(root, "metadata", "") {
        match item.as_table_like() {
            Some(t) => {
                for (key, value) in t.iter() {
                    let at = format!("metadata.{key}");
                    if let Some(s) = r.string(value, &at) {
                        metadata.insert(key.to_string(), s);
                    }
                }
            }
            None => r.type_error(item, "metadata", "table"),
        }
    }

    let scales = match r.field(root, "scales", "") {
        Some(item) => r.read_scales(item),
        None => Scales::default(),
    };

    let budget = r
        .required(root, "budget", "", Some(0..0))
        .and_then(|i| r.cost(i, "budget"));

    let mut model = FmecaModel::empty();
    model.scales = scales.clone();
    if let Some(item) = r.field(root, "components", "") {
        for (t, span) in r.entries(item, "components") {
            if let Some(c) = r.read_component(t, span) {
                model.components.push(c);
            }
        }
    }
    let thresholds: BTreeMap<String, u32> = model
        .components
        .iter()
        .filter_map(|c| Some((c.id.clone(), c.default_threshold?)))
        .collect();
    if let Some(item) = r.field(root, "failure_modes", "") {
        for (t, span) in r.entries(item, "failure_modes") {
            if let Some(fm) = r.read_failure_mode(t, span, &scales, &thresholds) {
                model.failure_modes.push(fm);
            }
        }
    }
    if let Some(item) = r.field(root, "actions", "") {
        for (t, span) in r.entries(item, "actions") {
            if let Some(a) = r.read_action(t, span) {
                model.actions.push(a);
            }
        }
    }
    model.budget = budget?;
    Some(ModelDocument {
        format_version,
        model,
        metadata,
    })
}

/// TOML basic string with the escapes the format requires.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn key(s: &str) -> String {
    if !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
        s.to_string()
    } else {
        quote(s)
    }
}

fn cost_value(cost: Cost) -> String {
    if cost.denom() == 1 {
        cost.to_string()
    } else {
        quote(&cost.to_string())
    }
}

fn string_list(items: &[String]) -> String {
    let inner: Vec<String> = items.iter().map(|s| quote(s)).collect();
    format!("[{}]", inner.join(", "))
}

fn text_field(out: &mut String, name: &str, value: &str) {
    if !value.is_empty() {
        let _ = writeln!(out, "{name} = {}", quote(value));
    }
}

pub(crate) fn write(document: &ModelDocument) -> String {
    let model = &document.model;
    let mut out = String::new();
    let _ = writeln!(out, "version = {}", quote(&document.format_version));
    let _ = writeln!(out, "budget = {}", cost_value(model.budget));

    if !document.metadata.is_empty() {
        out.push_str("\n[metadata]\n");
        for (k, v) in &document.metadata {
            let _ = writeln!(out, "{} = {}", key(k), quote(v));
        }
    }

    if model.scales != Scales::default() {
        let _ = write!(
            out,
            "\n[scales]\nmin = {}\nmax = {}\n",
            model.scales.bounds.min, model.scales.bounds.max
        );
        for dim in Dimension::ALL {
            for level in &model.scales.get(dim).levels {
                let _ = write!(
                    out,
                    "\n[[scales.{dim}]]\nrank = {}\nlabel = {}\n",
                    level.rank,
                    quote(&level.label)
                );
                text_field(&mut out, "description", &level.description);
            }
        }
    }

    for c in &model.components {
        let _ = writeln!(out, "\n[[components]]\nid = {}", quote(&c.id));
        text_field(&mut out, "description", &c.description);
        if let Some(t) = c.default_threshold {
            let _ = writeln!(out, "threshold = {t}");
        }
    }

    for fm in &model.failure_modes {
        let _ = writeln!(out, "\n[[failure_modes]]\nid = {}", quote(&fm.id));
        text_field(&mut out, "component", &fm.component_id);
        text_field(&mut out, "function", &fm.function);
        text_field(&mut out, "description", &fm.description);
        text_field(&mut out, "causes", &fm.causes);
        text_field(&mut out, "effects", &fm.effects);
        let _ = writeln!(
            out,
            "severity = {}\noccurrence = {}\ndetectability = {}\nthreshold = {}\nactions = {}",
            fm.severity,
            fm.occurrence,
            fm.detectability,
            fm.critical_threshold,
            string_list(&fm.recommended_actions)
        );
        if !fm.alternative_groups.is_empty() {
            let groups: Vec<String> = fm.alternative_groups.iter().map(|g| string_list(g)).collect();
            let _ = writeln!(out, "alternatives = [{}]", groups.join(", "));
        }
    }

    for a in &model.actions {
        let _ = writeln!(out, "\n[[actions]]\nid = {}", quote(&a.id));
        text_field(&mut out, "description", &a.description);
        let _ = writeln!(out, "cost = {}", cost_value(a.cost));
        for (fm, d) in &a.mitigations {
            let _ = write!(
                out,
                "\n[actions.mitigations.{}]\nseverity = {}\noccurrence = {}\ndetectability = {}\n",
                key(fm),
                d.severity,
                d.occurrence,
                d.detectability
            );
        }
    }
    out
}
