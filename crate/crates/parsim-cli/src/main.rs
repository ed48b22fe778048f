//! `parsim` — what-if multicore speedup prediction from sequential traces.
//!
//! The subcommands mirror the four-step analysis flow: `characterize` builds
//! the platform overhead database, `gen` produces synthetic traces,
//! `validate` checks inputs, and `analyze`/`gantt` simulate parallel
//! schedules and render reports or timelines.
//!
//! Exit codes are a stable contract: 0 success, 1 input/validation error
//! (one `error: <Class>: <detail>` line on stderr), 2 usage error.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, IsTerminal, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use parsim_core::analysis::{emit_gantt, emit_report, Report, ReportFormat};
use parsim_core::chardb::{
    parse_db, sample_ladder, synthesize_db, write_db, Construct, SynthParams,
};
use parsim_core::directives::{bind, parse_spec, BoundProgram, DirectiveSpec};
use parsim_core::scheduler::{simulate, sweep};
use parsim_core::synthgen::{
    gen_fast_like, gen_loop_trace, CostModel, CriticalRegion, WorkloadParams,
};
use parsim_core::trace::{parse_trace, validate_trace, write_trace, TaskTrace};

#[derive(Parser)]
#[command(
    name = "parsim",
    version,
    about = "Predict parallel speedup of a sequential application from its trace",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a platform characterization database
    Characterize(CharacterizeArgs),
    /// Generate a deterministic synthetic trace
    #[command(subcommand)]
    Gen(GenCommand),
    /// Check a trace (and optionally a database and directive file) for problems
    Validate(ValidateArgs),
    /// Simulate a core-count sweep and emit the parallelization report
    Analyze(AnalyzeArgs),
    /// Simulate one core count and dump the per-core timeline as CSV
    Gantt(GanttArgs),
}

#[derive(Args)]
struct CharacterizeArgs {
    /// Platform label stored in the database
    #[arg(long, default_value = "synthetic")]
    platform: String,
    /// Largest supported core count
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    max_cores: u32,
    /// Constant overhead term, cycles (applies to every construct)
    #[arg(long, default_value_t = 0.0)]
    base: f64,
    /// Per-thread overhead term, cycles (applies to every construct)
    #[arg(long, default_value_t = 0.0)]
    slope: f64,
    /// Ideal zero-overhead machine (shorthand for --base 0 --slope 0)
    #[arg(long, conflicts_with_all = ["base", "slope"])]
    zero: bool,
    /// Override one construct: NAME=BASE,SLOPE (repeatable)
    #[arg(long = "override", value_name = "NAME=BASE,SLOPE", value_parser = parse_override)]
    overrides: Vec<(String, f64, f64)>,
    /// Output path (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Serial prologue plus one loop with a configurable cost model
    Loop(GenLoopArgs),
    /// Corner-detector-like row workload with density-driven imbalance
    Fast(GenFastArgs),
}

#[derive(Args)]
struct GenLoopArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    iterations: u64,
    /// Cost model: "uniform:C" or "range:LO,HI" (cycles per iteration)
    #[arg(long, default_value = "uniform:100", value_parser = parse_cost_model)]
    cost: CostModel,
    /// Serial prologue cycles before the loop
    #[arg(long, default_value_t = 0)]
    prologue: u64,
    /// Embed a region NAME:CYCLES inside every iteration
    #[arg(long, value_name = "NAME:CYCLES", value_parser = parse_critical)]
    critical: Option<CriticalRegion>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenFastArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    height: u64,
    #[arg(long, default_value_t = 320, value_parser = clap::value_parser!(u64).range(1..))]
    width: u64,
    /// Corner probability per pixel, in [0, 1]
    #[arg(long, default_value_t = 0.1, value_parser = parse_density)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    /// Core counts, e.g. "1,2,4,8" or "1..8"; default: power-of-two ladder up
    /// to the directive file's max_cores_requested
    #[arg(long)]
    cores: Option<String>,
    /// text, structured, or csv; default: text on a terminal, csv otherwise
    #[arg(long, value_parser = parse_format)]
    format: Option<ReportFormat>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GanttArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    /// Core count to simulate
    #[arg(long)]
    cores: u32,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

// --- flag value parsers (failures here are usage errors, exit code 2) ---

fn parse_override(raw: &str) -> Result<(String, f64, f64), String> {
    let (name, coeffs) = raw
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=BASE,SLOPE, got {raw:?}"))?;
    Construct::from_name(name).ok_or_else(|| format!("unknown construct {name:?}"))?;
    let (base, slope) = coeffs
        .split_once(',')
        .ok_or_else(|| format!("expected BASE,SLOPE after '=', got {coeffs:?}"))?;
    let base: f64 = base
        .trim()
        .parse()
        .map_err(|_| format!("bad base {base:?}"))?;
    let slope: f64 = slope
        .trim()
        .parse()
        .map_err(|_| format!("bad slope {slope:?}"))?;
    Ok((name.to_string(), base, slope))
}

fn parse_cost_model(raw: &str) -> Result<CostModel, String> {
    match raw.split_once(':') {
        Some(("uniform", c)) => c
            .parse()
            .map(CostModel::Uniform)
            .map_err(|_| format!("bad uniform cost {c:?}")),
        Some(("range", bounds)) => {
            let (lo, hi) = bounds
                .split_once(',')
                .ok_or_else(|| format!("expected range:LO,HI, got {raw:?}"))?;
            let lo = lo.parse().map_err(|_| format!("bad range lo {lo:?}"))?;
            let hi = hi.parse().map_err(|_| format!("bad range hi {hi:?}"))?;
            if lo > hi {
                return Err(format!("range lo {lo} exceeds hi {hi}"));
            }
            Ok(CostModel::Range(lo, hi))
        }
        _ => Err(format!("expected uniform:C or range:LO,HI, got {raw:?}")),
    }
}

fn parse_critical(raw: &str) -> Result<CriticalRegion, String> {
    let (name, cycles) = raw
        .rsplit_once(':')
        .ok_or_else(|| format!("expected NAME:CYCLES, got {raw:?}"))?;
    if name.is_empty() {
        return Err("critical region name is empty".to_string());
    }
    let cycles = cycles
        .parse()
        .map_err(|_| format!("bad cycle count {cycles:?}"))?;
    Ok(CriticalRegion {
        name: name.to_string(),
        cycles,
    })
}

fn parse_density(raw: &str) -> Result<f64, String> {
    let density: f64 = raw.parse().map_err(|_| format!("bad density {raw:?}"))?;
    if (0.0..=1.0).contains(&density) {
        Ok(density)
    } else {
        Err(format!("density {density} not in [0, 1]"))
    }
}

fn parse_format(raw: &str) -> Result<ReportFormat, String> {
    raw.parse().map_err(|e| format!("{e}"))
}

/// "1,2,4,8" and "1..8" (inclusive), mixed freely; order is preserved.
fn parse_core_list(raw: &str) -> Result<Vec<u32>, CliError> {
    let mut cores = Vec::new();
    for token in raw.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if let Some((lo, hi)) = token.split_once("..") {
            let lo: u32 = lo.trim().parse().map_err(|_| bad_cores(raw))?;
            let hi: u32 = hi.trim().parse().map_err(|_| bad_cores(raw))?;
            if lo == 0 || lo > hi {
                return Err(bad_cores(raw));
            }
            cores.extend(lo..=hi);
        } else {
            let p: u32 = token.parse().map_err(|_| bad_cores(raw))?;
            if p == 0 {
                return Err(bad_cores(raw));
            }
            cores.push(p);
        }
    }
    if cores.is_empty() {
        return Err(bad_cores(raw));
    }
    Ok(cores)
}

fn bad_cores(raw: &str) -> CliError {
    CliError {
        code: "CoreCountOutOfRange",
        message: format!("cannot parse core list {raw:?} (expected e.g. \"1,2,4,8\" or \"1..8\")"),
    }
}

/// An input/validation failure: printed as one machine-parseable line and
/// mapped to exit code 1.
struct CliError {
    code: &'static str,
    message: String,
}

impl CliError {
    fn io(context: &Path, err: io::Error) -> CliError {
        CliError {
            code: "IoError",
            message: format!("{}: {err}", context.display()),
        }
    }
}

macro_rules! from_core_error {
    ($ty:ty) => {
        impl From<$ty> for CliError {
            fn from(err: $ty) -> CliError {
                CliError {
                    code: err.code(),
                    message: err.to_string(),
                }
            }
        }
    };
}

from_core_error!(parsim_core::trace::TraceError);
from_core_error!(parsim_core::chardb::DbError);
from_core_error!(parsim_core::directives::DirectiveError);
from_core_error!(parsim_core::scheduler::SimError);
from_core_error!(parsim_core::analysis::AnalysisError);
from_core_error!(parsim_core::synthgen::GenError);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // The error classes double as stable grep targets for CI.
            eprintln!("error: {}: {}", err.code, err.message.replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Characterize(args) => cmd_characterize(args),
        Command::Gen(GenCommand::Loop(args)) => cmd_gen_loop(args),
        Command::Gen(GenCommand::Fast(args)) => cmd_gen_fast(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Gantt(args) => cmd_gantt(args),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut buffer = String::new();
        io::stdin()
            .read_to_string(&mut buffer)
            .map_err(|e| CliError::io(path, e))?;
        Ok(buffer)
    } else {
        fs::read_to_string(path).map_err(|e| CliError::io(path, e))
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn load_trace(path: &Path) -> Result<TaskTrace, CliError> {
    Ok(parse_trace(&read_input(path)?)?)
}

fn load_bound(
    trace_path: &Path,
    spec_path: &Path,
) -> Result<(BoundProgram, DirectiveSpec), CliError> {
    let trace = load_trace(trace_path)?;
    let spec = parse_spec(&read_input(spec_path)?)?;
    let bound = bind(&spec, trace)?;
    Ok((bound, spec))
}

fn cmd_characterize(args: CharacterizeArgs) -> Result<(), CliError> {
    let mut overrides = BTreeMap::new();
    for (name, base, slope) in &args.overrides {
        let construct = Construct::from_name(name).expect("validated by the flag parser");
        overrides.insert(construct, (*base, *slope));
    }
    let params = SynthParams {
        overrides,
        ..if args.zero {
            SynthParams::zero(&args.platform, args.max_cores)
        } else {
            SynthParams::uniform(&args.platform, args.max_cores, args.base, args.slope)
        }
    };
    let db = synthesize_db(&params)?;
    write_output(args.output.as_deref(), write_db(&db).as_bytes())
}

fn cmd_gen_loop(args: GenLoopArgs) -> Result<(), CliError> {
    let generated = gen_loop_trace(&WorkloadParams {
        seed: args.seed,
        serial_prologue: args.prologue,
        n_iterations: args.iterations,
        cost_model: args.cost,
        critical_region: args.critical,
    })?;
    eprintln!(
        "generated {} tasks: prologue {} + loop {} cycles",
        generated.trace.tasks.len(),
        generated.prologue_cycles,
        generated.loop_cycles
    );
    write_output(
        args.output.as_deref(),
        write_trace(&generated.trace).as_bytes(),
    )
}

fn cmd_gen_fast(args: GenFastArgs) -> Result<(), CliError> {
    let generated = gen_fast_like(args.height, args.width, args.density, args.seed)?;
    eprintln!(
        "generated {} tasks: prologue {} + loop {} cycles",
        generated.trace.tasks.len(),
        generated.prologue_cycles,
        generated.loop_cycles
    );
    write_output(
        args.output.as_deref(),
        write_trace(&generated.trace).as_bytes(),
    )
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let trace = load_trace(&args.trace)?;
    let violations = validate_trace(&trace);
    if violations.is_empty() {
        println!("trace: OK ({} tasks)", trace.tasks.len());
    } else {
        for violation in &violations {
            println!("trace: violation: {violation}");
        }
    }
    if let Some(db_path) = &args.db {
        let db = parse_db(&read_input(db_path)?)?;
        println!(
            "db: OK (platform {:?}, max {} cores, {} constructs, {} memory levels)",
            db.platform,
            db.max_cores,
            db.constructs.len(),
            db.memory_levels.len()
        );
    }
    if let Some(spec_path) = &args.spec {
        let spec = parse_spec(&read_input(spec_path)?)?;
        if violations.is_empty() {
            let bound = bind(&spec, trace)?;
            println!(
                "spec: OK ({} directives bound to {} tasks)",
                spec.directives.len(),
                bound.bindings.len()
            );
        } else {
            println!("spec: parsed, binding skipped (trace has violations)");
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError {
            code: "InvalidTrace",
            message: format!("{} violation(s) found", violations.len()),
        })
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let db = parse_db(&read_input(&args.db)?)?;
    let (bound, spec) = load_bound(&args.trace, &args.spec)?;
    let cores = match &args.cores {
        Some(raw) => parse_core_list(raw)?,
        None => sample_ladder(spec.max_cores_requested.min(db.max_cores)),
    };
    let results = sweep(&bound, &db, &cores)?;
    let report = Report::build(&bound, &db.platform, &results)?;
    for diagnostic in &report.diagnostics {
        eprintln!("diagnostic: {diagnostic}");
    }
    let format = args.format.unwrap_or_else(|| {
        if args.output.is_none() && io::stdout().is_terminal() {
            ReportFormat::Text
        } else {
            ReportFormat::Csv
        }
    });
    write_output(args.output.as_deref(), &emit_report(&report, format))
}

fn cmd_gantt(args: GanttArgs) -> Result<(), CliError> {
    let db = parse_db(&read_input(&args.db)?)?;
    let (bound, _) = load_bound(&args.trace, &args.spec)?;
    let result = simulate(&bound, &db, args.cores)?;
    for diagnostic in &result.diagnostics {
        eprintln!("diagnostic: {diagnostic}");
    }
    write_output(args.output.as_deref(), &emit_gantt(&result))
}
