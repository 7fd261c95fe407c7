//! Invariant checks over an exported trace.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use fmeca_core::amas::MAX_AGENT_CRITICALITY;
use fmeca_core::{Cost, FmecaModel, Objective};
use serde_json::Value;

use crate::trace_io::TraceLine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    /// `g` selects `p` exactly when `p` is selected by `g`.
    Symmetry,
    /// No relation is both added and removed in one round.
    Disjointness,
    /// Agent criticalities stay within `[0, 100]`.
    CriticalityRange,
    /// Failure modes only select their recommended actions.
    Recommended,
    /// The best objective so far never gets worse.
    BestMonotone,
    /// Rounds never go backwards and records are well formed.
    Order,
}

impl Check {
    pub fn letter(self) -> &'static str {
        match self {
            Check::Symmetry => "a",
            Check::Disjointness => "b",
            Check::CriticalityRange => "c",
            Check::Recommended => "d",
            Check::BestMonotone => "e",
            Check::Order => "order",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based record index.
    pub record: usize,
    pub round: u64,
    pub check: Check,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "record {} (round {}): ({}) {}",
            self.record,
            self.round,
            self.check.letter(),
            self.message
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub records: usize,
    pub snapshots: usize,
    pub rounds: u64,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Auditor<'m> {
    model: &'m FmecaModel,
    report: AuditReport,
    record: usize,
    round: u64,
}

impl Auditor<'_> {
    fn flag(&mut self, check: Check, message: impl Into<String>) {
        self.report.violations.push(Violation {
            record: self.record,
            round: self.round,
            check,
            message: message.into(),
        });
    }

    fn id_map(&mut self, value: &Value, field: &str) -> BTreeMap<String, BTreeSet<String>> {
        let mut out = BTreeMap::new();
        let Some(map) = value.get(field).and_then(Value::as_object) else {
            self.flag(Check::Order, format!("snapshot lacks {field}"));
            return out;
        };
        for (k, v) in map {
            let ids = v
                .as_array()
                .map(|a| a.iter().filter_map(|x| x.as_str().map(String::from)).collect())
                .unwrap_or_default();
            out.insert(k.clone(), ids);
        }
        out
    }

    fn objective(&mut self, value: Option<&Value>) -> Option<Objective> {
        let v = value?;
        let parsed = (|| {
            Some(Objective {
                violations: u32::try_from(v.get("violations")?.as_u64()?).ok()?,
                excess: v.get("excess")?.as_u64()?,
                cost: v.get("cost")?.as_str()?.parse::<Cost>().ok()?,
            })
        })();
        if parsed.is_none() {
            self.flag(Check::Order, "malformed objective");
        }
        parsed
    }

    fn criticality(&mut self, what: &str, value: &Value) {
        match value.as_f64() {
            Some(c) if (0.0..=MAX_AGENT_CRITICALITY).contains(&c) => {}
            _ => self.flag(
                Check::CriticalityRange,
                format!("{what} criticality {value} outside [0, 100]"),
            ),
        }
    }

    fn snapshot(&mut self, payload: &Value, best: &mut Option<Objective>) {
        self.report.snapshots += 1;
        let selections = self.id_map(payload, "selections");
        let selected_by = self.id_map(payload, "selected_by");

        for (g, actions) in &selections {
            for p in actions {
                if !selected_by.get(p).is_some_and(|by| by.contains(g)) {
                    self.flag(Check::Symmetry, format!("{g} selects {p} but {p} does not list {g}"));
                }
            }
            match self.model.failure_mode(g) {
                Some(fm) => {
                    for p in actions {
                        if !fm.recommended_actions.contains(p) {
                            self.flag(
                                Check::Recommended,
                                format!("{g} selects {p}, which it does not recommend"),
                            );
                        }
                    }
                }
                None => self.flag(Check::Recommended, format!("unknown failure mode {g}")),
            }
        }
        for (p, by) in &selected_by {
            for g in by {
                if !selections.get(g).is_some_and(|s| s.contains(p)) {
                    self.flag(Check::Symmetry, format!("{p} lists {g} but {g} does not select {p}"));
                }
            }
        }

        for field in ["failure_mode_criticality", "action_criticality"] {
            match payload.get(field).and_then(Value::as_object) {
                Some(map) => {
                    for (id, c) in map {
                        self.criticality(id, c);
                    }
                }
                None => self.flag(Check::Order, format!("snapshot lacks {field}")),
            }
        }
        match payload.get("quality_criticality") {
            Some(c) => self.criticality("quality", c),
            None => self.flag(Check::Order, "snapshot lacks quality_criticality"),
        }

        if let Some(current) = self.objective(payload.get("best")) {
            if let Some(previous) = *best {
                if current > previous {
                    self.flag(Check::BestMonotone, format!("best went from {previous} to {current}"));
                }
            }
            *best = Some(current);
        }
    }
}

fn relation_set(value: Option<&Value>) -> BTreeSet<(String, String)> {
    value
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .filter_map(|r| Some((r.get(0)?.as_str()?.to_string(), r.get(1)?.as_str()?.to_string())))
                .collect()
        })
        .unwrap_or_default()
}

/// Check every record of a trace produced for `model`.
pub fn audit_trace(model: &FmecaModel, lines: &[TraceLine]) -> AuditReport {
    let mut a = Auditor {
        model,
        report: AuditReport::default(),
        record: 0,
        round: 0,
    };
    let mut best = None;
    let mut added: BTreeSet<(String, String)> = BTreeSet::new();
    let mut removed: BTreeSet<(String, String)> = BTreeSet::new();
    for (i, line) in lines.iter().enumerate() {
        a.record = i + 1;
        if line.round < a.round {
            a.flag(Check::Order, format!("round {} after round {}", line.round, a.round));
        }
        if line.round != a.round {
            added.clear();
            removed.clear();
        }
        a.round = line.round;
        match line.event.as_str() {
            "applied" => {
                added.extend(relation_set(line.payload.get("added")));
                removed.extend(relation_set(line.payload.get("removed")));
                let both: Vec<_> = added.intersection(&removed).cloned().collect();
                for (g, p) in both {
                    a.flag(Check::Disjointness, format!("{{{g}, {p}}} both added and removed"));
                }
            }
            "snapshot" => a.snapshot(&line.payload, &mut best),
            _ => {}
        }
    }
    a.report.records = lines.len();
    a.report.rounds = a.round;
    a.report
}
