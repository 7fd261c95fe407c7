//! Line-delimited JSON export of solver traces.
//!
//! One record per line with fields in the order `round`, `agent`, `event`,
//! `payload`. Agents are written as `quality`, `fm:<id>` or `action:<id>`;
//! payload keys are sorted.

use std::io::{self, BufRead, Write};

use fmeca_core::amas::{AgentId, Decision, NcsKind, TraceEvent, TraceRecord};
use fmeca_core::{Objective, Problem};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLine {
    pub round: u64,
    pub agent: Option<String>,
    pub event: String,
    pub payload: Value,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn agent_name(problem: &Problem, agent: AgentId) -> String {
    match agent {
        AgentId::Quality => "quality".into(),
        AgentId::FailureMode(i) => format!("fm:{}", problem.failure_mode_id(i)),
        AgentId::Action(j) => format!("action:{}", problem.action_id(j)),
    }
}

fn objective(o: &Objective) -> Value {
    json!({ "violations": o.violations, "excess": o.excess, "cost": o.cost.to_string() })
}

fn relations(problem: &Problem, list: &[(usize, usize)]) -> Value {
    list.iter()
        .map(|&(g, p)| json!([problem.failure_mode_id(g), problem.action_id(p)]))
        .collect()
}

fn payload(problem: &Problem, event: &TraceEvent) -> Value {
    let fm = |g: usize| Value::from(problem.failure_mode_id(g));
    let action = |p: usize| Value::from(problem.action_id(p));
    let subject = |s: Option<usize>| s.map_or(Value::Null, fm);
    match event {
        TraceEvent::CostAssessed { total, budget } => {
            json!({ "total": total.to_string(), "budget": budget.to_string() })
        }
        TraceEvent::NcsDetected { ncs, subject: s } => json!({
            "ncs": match ncs {
                NcsKind::BadSafetyCriticality => "bad_safety_criticality",
                NcsKind::BadTotalCost => "bad_total_cost",
            },
            "subject": subject(*s),
        }),
        TraceEvent::Unresolvable { failure_mode } => json!({ "failure_mode": fm(*failure_mode) }),
        TraceEvent::FeedbackSent {
            kind,
            target,
            subject: s,
        } => json!({
            "kind": kind.as_str(),
            "target": agent_name(problem, *target),
            "subject": subject(*s),
        }),
        TraceEvent::Routed {
            kind,
            subject: s,
            hop_trail,
            decision,
        } => {
            let decision = match decision {
                Decision::Add { failure_mode } => json!({ "type": "add", "failure_mode": fm(*failure_mode) }),
                Decision::Remove { failure_modes } => json!({
                    "type": "remove",
                    "failure_modes": failure_modes.iter().map(|&g| fm(g)).collect::<Vec<_>>(),
                }),
                Decision::Forward { to } => json!({ "type": "forward", "to": action(*to) }),
                Decision::NoOp { annoyed } => json!({ "type": "noop", "annoyed": annoyed }),
                Decision::AnnoyanceReset => json!({ "type": "annoyance_reset" }),
            };
            json!({
                "kind": kind.as_str(),
                "subject": subject(*s),
                "hop_trail": hop_trail.iter().map(|&p| action(p)).collect::<Vec<_>>(),
                "decision": decision,
            })
        }
        TraceEvent::Conflict { relation: (g, p) } => json!({ "failure_mode": fm(*g), "action": action(*p) }),
        TraceEvent::Applied { added, removed } => json!({
            "added": relations(problem, added),
            "removed": relations(problem, removed),
        }),
        TraceEvent::Snapshot(s) => {
            let mut selections = Map::new();
            let mut fm_crit = Map::new();
            for (g, sel) in s.selections.iter().enumerate() {
                let id = problem.failure_mode_id(g).to_string();
                selections.insert(id.clone(), sel.iter().map(|&p| action(p)).collect());
                fm_crit.insert(id, json!(s.failure_mode_criticality[g]));
            }
            let mut selected_by = Map::new();
            let mut action_crit = Map::new();
            for (p, by) in s.selected_by.iter().enumerate() {
                let id = problem.action_id(p).to_string();
                selected_by.insert(id.clone(), by.iter().map(|&g| fm(g)).collect());
                action_crit.insert(id, json!(s.action_criticality[p]));
            }
            json!({
                "selections": selections,
                "selected_by": selected_by,
                "failure_mode_criticality": fm_crit,
                "action_criticality": action_crit,
                "quality_criticality": s.quality_criticality,
                "objective": objective(&s.objective),
                "best": objective(&s.best),
            })
        }
    }
}

pub fn trace_lines(problem: &Problem, trace: &[TraceRecord]) -> Vec<TraceLine> {
    trace
        .iter()
        .map(|r| TraceLine {
            round: r.round,
            agent: r.agent.map(|a| agent_name(problem, a)),
            event: r.event.name().into(),
            payload: payload(problem, &r.event),
        })
        .collect()
}

pub fn write_trace<W: Write>(mut out: W, problem: &Problem, trace: &[TraceRecord]) -> io::Result<()> {
    for line in trace_lines(problem, trace) {
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceLine>, TraceError> {
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str(&line).map_err(|e| TraceError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        lines.push(parsed);
    }
    Ok(lines)
}
