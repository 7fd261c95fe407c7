//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Artifacts (models, reports, traces) go under the cargo test
//! scratch directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fmeca::{
    audit_trace, generate, parse_model, read_trace, write_model, write_trace, GeneratorOptions, ModelDocument,
    ModelFormat, ParseMode,
};
use fmeca_core::amas::{self, FeedbackKind, InitialSelection, SolverConfig, TraceEvent};
use fmeca_core::oracle::{compare, exact_best, OracleOptions};
use fmeca_core::{
    criticality, is_critical, residual_ranks, Configuration, Cost, Deltas, FailureMode, FmecaModel, PreventiveAction,
    Problem, Rank, ScaleBounds,
};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn scratch() -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn sample() -> ModelDocument {
    let src = include_bytes!("../samples/generator.toml");
    parse_model(src, ModelFormat::Structured, ParseMode::Strict)
        .unwrap()
        .document
}

fn generated(failure_modes: usize, actions: usize, seed: u64, feasible: bool) -> ModelDocument {
    generate(&GeneratorOptions {
        failure_modes,
        actions,
        seed,
        feasible,
        ..GeneratorOptions::default()
    })
    .unwrap()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let bounds = ScaleBounds::default();
    let mut checked = 0;
    for s in 1..=4u8 {
        for o in 1..=4u8 {
            for d in 1..=4u8 {
                let c = criticality(bounds, Rank::new(s), Rank::new(o), Rank::new(d)).map_err(|e| e.to_string())?;
                ensure(c == u32::from(s) * u32::from(o) * u32::from(d), || {
                    format!("C({s},{o},{d}) = {c}")
                })?;
                checked += 1;
            }
        }
    }
    let model = sample().model;
    let fm = &model.failure_modes[0];
    let c = fm.initial_criticality();
    ensure(c == 6 && fm.critical_threshold == 2, || {
        format!("sample criticality {c}, threshold {}", fm.critical_threshold)
    })?;
    ensure(is_critical(fm, [], bounds), || {
        "sample failure mode not critical".into()
    })?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("{checked} combinations exact; sample C=6 > 2 is critical"))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut random_configs = 0u64;
    for i in 0..200u64 {
        let n = 1 + (i as usize % 8);
        let m = rng.random_range(n.max(1)..=12);
        let model = generated(n, m, 10_000 + i, i % 2 == 0).model;
        let pruned = exact_best(&model, OracleOptions::default()).map_err(|e| e.to_string())?;
        let full = exact_best(
            &model,
            OracleOptions {
                prune: false,
                ..OracleOptions::default()
            },
        )
        .map_err(|e| e.to_string())?;
        ensure(full.enumerated_count == 1 << m, || {
            format!("instance {i}: {} subsets, expected 2^{m}", full.enumerated_count)
        })?;
        ensure(
            pruned.optimal == full.optimal
                && pruned.optimal_objective == full.optimal_objective
                && pruned.feasible_exists == full.feasible_exists
                && pruned.best_within_budget == full.best_within_budget,
            || format!("instance {i}: pruned and full enumeration disagree"),
        )?;
        let ids: Vec<&str> = model.actions.iter().map(|a| a.id.as_str()).collect();
        for _ in 0..1000 {
            let subset: Vec<&str> = ids.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            let config = Configuration::evaluate(&model, subset.iter().copied()).map_err(|e| e.to_string())?;
            let objective = config.objective();
            ensure(objective >= full.optimal_objective, || {
                format!(
                    "instance {i}: {subset:?} scores {objective}, optimum {}",
                    full.optimal_objective
                )
            })?;
            if objective.cost <= model.budget {
                let (_, best) = full
                    .best_within_budget
                    .as_ref()
                    .ok_or("within-budget optimum missing")?;
                ensure(objective >= *best, || {
                    format!("instance {i}: {subset:?} beats the within-budget optimum")
                })?;
            }
            random_configs += 1;
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "200 instances agree; {random_configs} random configurations never beat the optimum"
    ))
}

struct Solved {
    model: FmecaModel,
    trace: PathBuf,
}

fn criterion_3(dir: &Path, traces: &mut Vec<Solved>) -> Check {
    let start = Instant::now();
    let dir = dir.join("solver-vs-oracle");
    fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let config = SolverConfig::default();
    let mut feasible = 0;
    let mut optimal = 0;
    let mut gaps = Vec::with_capacity(100);
    for i in 0..100u64 {
        let n = rng.random_range(2..=8usize);
        let m = rng.random_range(n.max(3)..=12usize);
        let doc = generated(n, m, 30_000 + i, true);
        let model = &doc.model;
        let oracle = exact_best(model, OracleOptions::default()).map_err(|e| e.to_string())?;
        ensure(oracle.feasible_exists, || {
            format!("instance {i}: generator did not plant a feasible plan")
        })?;
        let result = amas::run(model, &config).map_err(|e| e.to_string())?;
        let gap = compare(&result, &oracle).map_err(|e| format!("instance {i}: {e}"))?;
        optimal += usize::from(gap.optimal);
        if result.is_feasible() {
            feasible += 1;
            gaps.push(gap.relative_cost_gap_f64());
        } else {
            gaps.push(f64::INFINITY);
        }
        let stem = format!("instance-{i:03}");
        fs::write(
            dir.join(format!("{stem}.toml")),
            write_model(&doc, ModelFormat::Structured),
        )
        .unwrap();
        let trace = dir.join(format!("{stem}.trace.jsonl"));
        let problem = Problem::compile(model).map_err(|e| e.to_string())?;
        write_trace(fs::File::create(&trace).unwrap(), &problem, &result.trace).unwrap();
        traces.push(Solved {
            model: model.clone(),
            trace,
        });
    }
    gaps.sort_by(f64::total_cmp);
    let median = (gaps[49] + gaps[50]) / 2.0;
    let summary = format!(
        "{feasible}/100 feasible, {optimal} optimal, median cost gap {:.1}%, worst {:.1}%",
        median * 100.0,
        gaps[99] * 100.0
    );
    ensure(feasible >= 80, || format!("{summary}; need at least 80 feasible"))?;
    ensure(median <= 0.25, || format!("{summary}; need a median of at most 25%"))?;
    within(start, Duration::from_secs(120))?;
    Ok(format!("{summary}; oracle never beaten"))
}

fn criterion_4(dir: &Path, traces: &mut Vec<Solved>) -> Check {
    let dir = dir.join("determinism");
    fs::create_dir_all(&dir).unwrap();
    let doc = generated(6, 10, 4, true);
    let model_path = dir.join("model.toml");
    fs::write(&model_path, write_model(&doc, ModelFormat::Structured)).unwrap();
    let mut first: Option<(Vec<u8>, Vec<u8>)> = None;
    for run in 0..10 {
        let report = dir.join(format!("run-{run}.report.toml"));
        let trace = dir.join(format!("run-{run}.trace.jsonl"));
        let out = Command::new(env!("CARGO_BIN_EXE_fmeca"))
            .args(["solve", "--seed", "17", "-o"])
            .arg(&report)
            .arg("--trace-out")
            .arg(&trace)
            .arg(&model_path)
            .env_remove("FMECA_OUTPUT_DIR")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(matches!(out.status.code(), Some(0 | 1)), || {
            format!("run {run} failed: {}", String::from_utf8_lossy(&out.stderr))
        })?;
        let bytes = (fs::read(&report).unwrap(), fs::read(&trace).unwrap());
        match &first {
            None => first = Some(bytes),
            Some(f) => ensure(*f == bytes, || format!("run {run} differs from run 0"))?,
        }
        traces.push(Solved {
            model: doc.model.clone(),
            trace,
        });
    }
    let (report, trace) = first.unwrap();
    Ok(format!(
        "10 runs identical ({} report bytes, {} trace bytes)",
        report.len(),
        trace.len()
    ))
}

fn criterion_5(traces: &[Solved]) -> Check {
    ensure(!traces.is_empty(), || "no traces to audit".into())?;
    let mut records = 0;
    for solved in traces {
        let file = fs::File::open(&solved.trace).map_err(|e| e.to_string())?;
        let lines = read_trace(std::io::BufReader::new(file)).map_err(|e| e.to_string())?;
        let audit = audit_trace(&solved.model, &lines);
        ensure(audit.snapshots > 0, || {
            format!("{}: no snapshots", solved.trace.display())
        })?;
        if let Some(v) = audit.violations.first() {
            return Err(format!("{}: {v}", solved.trace.display()));
        }
        records += audit.records;
    }
    Ok(format!(
        "{} traces, {records} records, no violations of (a)-(e)",
        traces.len()
    ))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let bounds = ScaleBounds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rank = |rng: &mut ChaCha8Rng| Rank::new(rng.random_range(1..=4));
    for pair in 0..1000 {
        let fm = FailureMode {
            id: "F".into(),
            component_id: String::new(),
            function: String::new(),
            description: String::new(),
            causes: String::new(),
            effects: String::new(),
            severity: rank(&mut rng),
            occurrence: rank(&mut rng),
            detectability: rank(&mut rng),
            critical_threshold: 1,
            recommended_actions: Vec::new(),
            alternative_groups: Vec::new(),
        };
        let count = rng.random_range(0..=6);
        let actions: Vec<PreventiveAction> = (0..count)
            .map(|j| PreventiveAction {
                id: format!("A{j}"),
                description: String::new(),
                cost: Cost::from(1),
                mitigations: [(
                    "F".to_string(),
                    Deltas::new(
                        rng.random_range(0..=3),
                        rng.random_range(0..=3),
                        rng.random_range(0..=3),
                    ),
                )]
                .into(),
            })
            .collect();
        let b: Vec<&PreventiveAction> = actions.iter().filter(|_| rng.random_bool(0.6)).collect();
        let take = rng.random_range(0..=b.len());
        let a: Vec<&PreventiveAction> = b.iter().copied().choose_multiple(&mut rng, take);
        let ra = residual_ranks(&fm, a.iter().copied(), bounds);
        let rb = residual_ranks(&fm, b.iter().copied(), bounds);
        ensure(rb.criticality() <= ra.criticality(), || {
            format!("pair {pair}: residual grew from A to B")
        })?;
        for r in [ra, rb] {
            for (got, initial) in [
                (r.severity, fm.severity),
                (r.occurrence, fm.occurrence),
                (r.detectability, fm.detectability),
            ] {
                ensure(got.value() >= bounds.min && got <= initial, || {
                    format!("pair {pair}: rank {got:?} outside clamp")
                })?;
            }
        }
    }
    within(start, Duration::from_secs(5))?;
    Ok("1000 pairs monotone and clamped".into())
}

fn round_one_sends(trace: &[amas::TraceRecord], kind: FeedbackKind) -> bool {
    trace
        .iter()
        .any(|r| r.round == 1 && matches!(r.event, TraceEvent::FeedbackSent { kind: k, .. } if k == kind))
}

fn criterion_7() -> Check {
    let mut over_budget = 0;
    let mut violating = 0;
    let mut satisfied = 0;
    for i in 0..100u64 {
        let mut model = generated(1 + (i as usize % 6), 3 + (i as usize % 8), 70_000 + i, i % 3 != 0).model;

        let total: Cost = model.actions.iter().map(|a| a.cost).sum();
        let mut tight = model.clone();
        tight.budget = total - Cost::from(1);
        let config = SolverConfig {
            initial_selection: InitialSelection::AllRecommended,
            ..SolverConfig::default()
        };
        let result = amas::run(&tight, &config).map_err(|e| e.to_string())?;
        ensure(round_one_sends(&result.trace, FeedbackKind::SelectLess), || {
            format!("instance {i}: no select-less feedback in round 1 with cost over budget")
        })?;
        over_budget += 1;

        if model
            .failure_modes
            .iter()
            .any(|fm| is_critical(fm, [], model.scales.bounds))
        {
            let result = amas::run(&model, &SolverConfig::default()).map_err(|e| e.to_string())?;
            ensure(round_one_sends(&result.trace, FeedbackKind::SelectMore), || {
                format!("instance {i}: no select-more feedback in round 1 with a violated threshold")
            })?;
            violating += 1;
        }

        for fm in &mut model.failure_modes {
            fm.critical_threshold = fm.initial_criticality();
        }
        let config = SolverConfig::default();
        let result = amas::run(&model, &config).map_err(|e| e.to_string())?;
        let mutated = result
            .trace
            .iter()
            .any(|r| matches!(r.event, TraceEvent::Applied { .. }));
        ensure(
            result.converged && result.rounds_used == config.quiescence_window && !mutated,
            || {
                format!(
                    "instance {i}: satisfied model took {} rounds (converged {}, mutated {mutated})",
                    result.rounds_used, result.converged
                )
            },
        )?;
        satisfied += 1;
    }
    Ok(format!(
        "select-less in round 1 on {over_budget} over-budget starts; select-more on {violating} violating models; \
         {satisfied} satisfied models quiet for exactly k rounds"
    ))
}

fn round_trip(doc: &ModelDocument, what: &str) -> Result<(), String> {
    let mut canonical = doc.clone();
    canonical.canonicalize();
    for format in [ModelFormat::Structured, ModelFormat::Tabular] {
        let bytes = write_model(doc, format);
        let back = parse_model(&bytes, format, ParseMode::Strict).map_err(|e| format!("{what}: {e:?}"))?;
        ensure(back.document == canonical, || {
            format!("{what}: {format:?} changed the model")
        })?;
        ensure(write_model(&back.document, format) == bytes, || {
            format!("{what}: {format:?} bytes drifted")
        })?;
    }
    Ok(())
}

fn criterion_8() -> Check {
    let doc = sample();
    round_trip(&doc, "sample")?;
    let csv = parse_model(
        include_bytes!("../samples/generator.csv"),
        ModelFormat::Tabular,
        ParseMode::Strict,
    )
    .map_err(|e| format!("{e:?}"))?;
    ensure(csv.document == doc, || "sample formats disagree".into())?;
    for i in 0..50u64 {
        let doc = generated(1 + (i as usize % 8), 1 + (i as usize % 12), 80_000 + i, i % 2 == 0);
        round_trip(&doc, &format!("generated model {i}"))?;
    }
    Ok("sample and 50 generated models stable in both formats".into())
}

fn main() -> ExitCode {
    let dir = scratch();
    let mut traces = Vec::new();
    let results = [
        (1, "criticality formula", criterion_1()),
        (2, "oracle correctness", criterion_2()),
        (3, "solver vs oracle", criterion_3(&dir, &mut traces)),
        (4, "determinism", criterion_4(&dir, &mut traces)),
        (5, "invariant audit", criterion_5(&traces)),
        (6, "monotonicity", criterion_6()),
        (7, "NCS behavior", criterion_7()),
        (8, "round-trip", criterion_8()),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS - {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL - {detail}");
            }
        }
    }
    println!("artifacts in {}", dir.display());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", results.len());
        ExitCode::FAILURE
    }
}
