use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fmeca::{
    compare_documents, generate, parse_model, write_model, write_trace, GeneratorOptions, ModelFormat, OracleDocument,
    ParseMode, Parsed, ReportDocument, ReportFormat,
};
use fmeca_core::amas::{self, DeselectionMode, InitialSelection, SolverConfig};
use fmeca_core::oracle::{exact_best_compiled, OracleError, OracleOptions, DEFAULT_LIMIT};
use fmeca_core::{Cost, FmecaModel, Problem};

/// Default directory for output files when `--output` is not given.
const OUTPUT_DIR_VAR: &str = "FMECA_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "fmeca",
    version,
    about = "FMECA criticality analysis and preventive action selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model and print its diagnostics.
    Validate {
        #[command(flatten)]
        input: ModelInput,
    },
    /// Select preventive actions with the multi-agent solver.
    Solve(SolveArgs),
    /// Compute the exact optimum by enumeration.
    Oracle(OracleArgs),
    /// Compare a solver report with an oracle result.
    Compare {
        report: PathBuf,
        oracle: PathBuf,
        /// Output file; relative paths resolve under $FMECA_OUTPUT_DIR when set.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Re-render a machine-readable solver report.
    Report {
        report: PathBuf,
        /// Check that the report was produced for this model.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Human)]
        format: OutputFormat,
        /// Output file; relative paths resolve under $FMECA_OUTPUT_DIR when set.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Generate a random model.
    Gen(GenArgs),
}

#[derive(Args)]
struct ModelInput {
    /// Model file, or `-` for standard input.
    model: PathBuf,
    /// Input format; by default `.csv` files are tabular and the rest structured.
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
    /// Report unknown keys and columns as warnings instead of errors.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: ModelInput,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_rounds: u64,
    /// Replace the model budget, e.g. `0`, `25.5` or `7/2`.
    #[arg(long)]
    budget_override: Option<String>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Machine)]
    format: OutputFormat,
    /// Write the event trace as JSON lines.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    quiescence_window: u64,
    #[arg(long, default_value_t = 0)]
    reorganization_threshold: u32,
    #[arg(long, value_enum, default_value_t = Start::Empty)]
    initial_selection: Start,
    /// Use the select-less rule as literally worded instead of the safety-gated one.
    #[arg(long)]
    literal_deselection: bool,
    /// Keep going until quiescence or the round limit even when nothing can change.
    #[arg(long)]
    no_stall_stop: bool,
    /// Output file; relative paths resolve under $FMECA_OUTPUT_DIR when set.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: ModelInput,
    /// Refuse models with more actions than this.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: usize,
    /// Enumerate every subset instead of branch and bound.
    #[arg(long)]
    no_prune: bool,
    /// Replace the model budget, e.g. `0`, `25.5` or `7/2`.
    #[arg(long)]
    budget_override: Option<String>,
    /// Output file; relative paths resolve under $FMECA_OUTPUT_DIR when set.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    failure_modes: usize,
    #[arg(long, default_value_t = 2)]
    actions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plant a configuration that meets every threshold within budget.
    #[arg(long)]
    feasible: bool,
    /// Budget margin over the planted cost, as a fraction.
    #[arg(long, default_value = "1/4")]
    slack: String,
    #[arg(long, value_enum, default_value_t = InputFormat::Structured)]
    format: InputFormat,
    /// Output file; relative paths resolve under $FMECA_OUTPUT_DIR when set.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Structured,
    Tabular,
}

impl From<InputFormat> for ModelFormat {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::Structured => ModelFormat::Structured,
            InputFormat::Tabular => ModelFormat::Tabular,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Machine,
    Human,
}

impl From<OutputFormat> for ReportFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Machine => ReportFormat::Machine,
            OutputFormat::Human => ReportFormat::Human,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    Empty,
    AllRecommended,
}

/// Exit status 1 for diagnostics and unmet goals, 2 for usage and IO problems.
enum Failure {
    Diagnostic(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Diagnostic(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

type Outcome = Result<u8, Failure>;

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    let mut bytes = Vec::new();
    let result = if path.as_os_str() == "-" {
        io::stdin().read_to_end(&mut bytes).map(|_| ())
    } else {
        fs::read(path).map(|b| bytes = b)
    };
    result.map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(bytes)
}

fn stem(path: &Path) -> String {
    if path.as_os_str() == "-" {
        return "stdin".into();
    }
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("model").to_string()
}

fn output_dir() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_DIR_VAR)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn resolve(path: &Path) -> PathBuf {
    match output_dir() {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

/// Write to `--output`, else into the default output directory, else stdout.
fn emit(output: Option<&Path>, default_name: &str, bytes: &[u8]) -> Result<(), Failure> {
    let target = match (output, output_dir()) {
        (Some(p), _) => Some(resolve(p)),
        (None, Some(dir)) => Some(dir.join(default_name)),
        (None, None) => None,
    };
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", parent.display())))?;
            }
            fs::write(&path, bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn load(input: &ModelInput) -> Result<Parsed, Failure> {
    let bytes = read_input(&input.model)?;
    let format = input
        .input_format
        .map_or_else(|| ModelFormat::from_path(&input.model), Into::into);
    let mode = if input.lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    };
    match parse_model(&bytes, format, mode) {
        Ok(parsed) => {
            for w in &parsed.warnings {
                eprintln!("{}: {w}", input.model.display());
            }
            Ok(parsed)
        }
        Err(e) => {
            let lines: Vec<String> = e
                .diagnostics
                .iter()
                .map(|d| format!("{}: {d}", input.model.display()))
                .collect();
            Err(Failure::Diagnostic(lines.join("\n")))
        }
    }
}

fn parse_budget(text: &str) -> Result<Cost, Failure> {
    let cost: Cost = text
        .parse()
        .map_err(|e| Failure::Usage(format!("invalid budget: {e}")))?;
    if cost.is_negative() {
        return Err(Failure::Usage("budget must not be negative".into()));
    }
    Ok(cost)
}

fn compile(model: &FmecaModel) -> Result<Problem, Failure> {
    Problem::compile(model).map_err(|e| Failure::Diagnostic(e.to_string()))
}

fn cmd_validate(input: &ModelInput) -> Outcome {
    let parsed = load(input)?;
    let model = &parsed.document.model;
    println!(
        "{}: ok, {} failure modes, {} actions, {} warnings",
        input.model.display(),
        model.failure_modes.len(),
        model.actions.len(),
        parsed.warnings.len()
    );
    Ok(0)
}

fn cmd_solve(args: &SolveArgs) -> Outcome {
    let mut model = load(&args.input)?.document.model;
    if let Some(b) = &args.budget_override {
        model.budget = parse_budget(b)?;
    }
    let problem = compile(&model)?;
    let config = SolverConfig {
        seed: args.seed,
        max_rounds: args.max_rounds,
        quiescence_window: args.quiescence_window,
        reorganization_threshold: args.reorganization_threshold,
        initial_selection: match args.initial_selection {
            Start::Empty => InitialSelection::Empty,
            Start::AllRecommended => InitialSelection::AllRecommended,
        },
        deselection: if args.literal_deselection {
            DeselectionMode::Literal
        } else {
            DeselectionMode::SafetyGated
        },
        stop_when_stalled: !args.no_stall_stop,
        ..SolverConfig::default()
    };
    let result = amas::run_compiled(&model, &problem, &config).map_err(|e| match e {
        amas::SolverError::Config(m) => Failure::Usage(m.into()),
        other => Failure::Diagnostic(other.to_string()),
    })?;
    let report = ReportDocument::new(&model, &config, &result).map_err(|e| Failure::Diagnostic(e.to_string()))?;
    let extension = match args.format {
        OutputFormat::Machine => "toml",
        OutputFormat::Human => "txt",
    };
    let name = format!("{}.report.{extension}", stem(&args.input.model));
    emit(
        args.output.as_deref(),
        &name,
        report.render(args.format.into()).as_bytes(),
    )?;
    if let Some(path) = &args.trace_out {
        let path = resolve(path);
        let file =
            fs::File::create(&path).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        write_trace(io::BufWriter::new(file), &problem, &result.trace)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    eprintln!(
        "{} after {} rounds, objective {}, {}",
        result.termination.as_str(),
        result.rounds_used,
        result.best_objective,
        if result.is_feasible() { "feasible" } else { "infeasible" }
    );
    Ok(if result.converged && result.is_feasible() { 0 } else { 1 })
}

fn cmd_oracle(args: &OracleArgs) -> Outcome {
    let mut model = load(&args.input)?.document.model;
    if let Some(b) = &args.budget_override {
        model.budget = parse_budget(b)?;
    }
    let problem = compile(&model)?;
    let options = OracleOptions {
        limit: args.limit,
        prune: !args.no_prune,
    };
    let result = exact_best_compiled(&model, &problem, options).map_err(|e| match e {
        OracleError::TooLarge { .. } => Failure::Diagnostic(e.to_string()),
        OracleError::Model(m) => Failure::Diagnostic(m.to_string()),
    })?;
    let doc = OracleDocument::new(&model, options, &result);
    let name = format!("{}.oracle.toml", stem(&args.input.model));
    emit(args.output.as_deref(), &name, doc.to_toml().as_bytes())?;
    eprintln!(
        "optimum {} after {} evaluations, {}",
        result.optimal_objective,
        result.enumerated_count,
        if result.feasible_exists {
            "feasible"
        } else {
            "infeasible"
        }
    );
    Ok(0)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    let bytes = read_input(path)?;
    String::from_utf8(bytes).map_err(|_| Failure::Diagnostic(format!("{} is not valid UTF-8", path.display())))
}

fn cmd_compare(report: &Path, oracle: &Path, output: Option<&Path>) -> Outcome {
    let report_doc = ReportDocument::from_machine(&read_text(report)?)
        .map_err(|e| Failure::Diagnostic(format!("{}: {e}", report.display())))?;
    let oracle_doc = OracleDocument::from_toml(&read_text(oracle)?)
        .map_err(|e| Failure::Diagnostic(format!("{}: {e}", oracle.display())))?;
    let gap = compare_documents(&report_doc, &oracle_doc).map_err(|e| Failure::Diagnostic(e.to_string()))?;
    let name = format!("{}.gap.toml", stem(report));
    emit(output, &name, gap.to_toml().as_bytes())?;
    eprintln!("{}", gap.verdict);
    Ok(0)
}

fn cmd_report(report: &Path, model: Option<&Path>, format: OutputFormat, output: Option<&Path>) -> Outcome {
    let doc = ReportDocument::from_machine(&read_text(report)?)
        .map_err(|e| Failure::Diagnostic(format!("{}: {e}", report.display())))?;
    if let Some(path) = model {
        let input = ModelInput {
            model: path.to_path_buf(),
            input_format: None,
            lenient: false,
        };
        let parsed = load(&input)?;
        doc.check_model(&parsed.document.model)
            .map_err(|e| Failure::Diagnostic(e.to_string()))?;
    }
    let extension = match format {
        OutputFormat::Machine => "toml",
        OutputFormat::Human => "txt",
    };
    let name = format!("{}.{extension}", stem(report));
    emit(output, &name, doc.render(format.into()).as_bytes())?;
    Ok(0)
}

fn cmd_gen(args: &GenArgs) -> Outcome {
    let slack: Cost = args
        .slack
        .parse()
        .map_err(|e| Failure::Usage(format!("invalid slack: {e}")))?;
    let options = GeneratorOptions {
        failure_modes: args.failure_modes,
        actions: args.actions,
        seed: args.seed,
        feasible: args.feasible,
        slack: (
            i64::try_from(slack.numer()).map_err(|_| Failure::Usage("slack too large".into()))?,
            i64::try_from(slack.denom()).map_err(|_| Failure::Usage("slack too large".into()))?,
        ),
    };
    let doc = generate(&options).map_err(|e| Failure::Usage(e.to_string()))?;
    let format: ModelFormat = args.format.into();
    let extension = match format {
        ModelFormat::Structured => "toml",
        ModelFormat::Tabular => "csv",
    };
    let name = format!("generated-{}.{extension}", args.seed);
    emit(args.output.as_deref(), &name, &write_model(&doc, format))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Validate { input } => cmd_validate(input),
        Command::Solve(args) => cmd_solve(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Compare { report, oracle, output } => cmd_compare(report, oracle, output.as_deref()),
        Command::Report {
            report,
            model,
            format,
            output,
        } => cmd_report(report, model.as_deref(), *format, output.as_deref()),
        Command::Gen(args) => cmd_gen(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            match &failure {
                Failure::Diagnostic(m) | Failure::Usage(m) => eprintln!("{m}"),
            }
            ExitCode::from(failure.code())
        }
    }
}
