//! `kinduct`: verification, oracle, reductions, benchmark generation and the
//! benchmarking harness behind one command line.
//!
//! Exit codes: 0 when the command completed (whatever the verdict), 1 for
//! usage and input errors, 2 for internal errors.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use kinduct::benchgen::{generate, MetricsProfile, Mode};
use kinduct::engine::{run_bmc, run_kinduction, EngineConfig, ResourceBudget, Schedule, Verdict, VerdictResult};
use kinduct::harness::{self, SuiteManifest};
use kinduct::lang::{load, pretty_print, TypedProgram};
use kinduct::oracle::{explore, OracleLimits, OracleOutcome};
use kinduct::reduce::{inject_value_assumes, move_variables_with, property_globals, slice_with, ReductionReport};
use kinduct::ts::{build_system, dump, load_properties, PropertySpec, TransitionSystem};
use kinduct::witness::{emit, validate_text, Validation};

#[derive(Parser)]
#[command(name = "kinduct", version, about = "Bounded model checking and k-induction for LoopC programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a program against its properties.
    Verify(VerifyArgs),
    /// Decide a program by explicit-state search.
    Oracle(OracleArgs),
    /// Apply static reductions and print the reduced program.
    Reduce(ReduceArgs),
    /// Generate a benchmark task from a metrics profile.
    Gen(GenArgs),
    /// Run a benchmark suite described by a JSON manifest.
    Bench(BenchArgs),
    /// Compute scores, quantile series, coverage, conflicts and summaries from results.
    Report(ReportArgs),
    /// Validate a witness file against a program.
    ValidateWitness(ValidateArgs),
    /// Deliberately misbehave, for exercising harness limits.
    #[command(hide = true)]
    Stress {
        #[arg(value_enum)]
        kind: StressKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Bmc,
    Kind,
}

#[derive(Clone, Copy, ValueEnum)]
enum StressKind {
    Spin,
    Alloc,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "kind")]
    method: Method,
    #[arg(long, default_value_t = 1000)]
    max_k: u64,
    /// CPU-time budget of the engine in seconds.
    #[arg(long, default_value_t = 7200.0)]
    cpu_seconds: f64,
    #[arg(long, default_value_t = 18432)]
    mem_mb: u64,
    /// Run base and step cases on separate threads.
    #[arg(long)]
    parallel: bool,
    /// Witness path; defaults to the program path with extension `.witness`.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Also write the transition system in its text form.
    #[arg(long)]
    dump_ts: Option<PathBuf>,
    program: PathBuf,
    property: Option<PathBuf>,
}

#[derive(clap::Args)]
struct OracleArgs {
    #[arg(long)]
    max_states: Option<u64>,
    #[arg(long)]
    max_depth: Option<u64>,
    /// Write a violation witness here when a violation is found.
    #[arg(long)]
    witness: Option<PathBuf>,
    program: PathBuf,
    property: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReduceArgs {
    #[arg(long)]
    slice: bool,
    #[arg(long)]
    move_vars: bool,
    #[arg(long)]
    value_assumes: bool,
    /// Functions whose globals are never moved.
    #[arg(long, value_delimiter = ',')]
    ignore_functions: Vec<String>,
    /// Properties whose globals must survive the reductions.
    #[arg(long)]
    property: Option<PathBuf>,
    /// Write the reduced program here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
    program: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenMode {
    Safe,
    Bug,
    Open,
}

#[derive(clap::Args)]
struct GenArgs {
    /// Metrics profile (JSON).
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "safe")]
    mode: GenMode,
    /// Depth of the planted violation in `bug` mode.
    #[arg(long, default_value_t = 3)]
    bug_depth: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// File name stem of the generated files.
    #[arg(long)]
    name: Option<String>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Suite manifest (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of tools in the coverage report.
    #[arg(long, default_value_t = 3)]
    top_n: usize,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// A `results.csv` written by `bench`.
    #[arg(long)]
    results: PathBuf,
    /// Suite manifest; its expected verdicts enable punished scoring.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    top_n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// Validation budget in CPU seconds; defaults to the budget of the witness kind.
    #[arg(long, visible_alias = "cpu-seconds")]
    cpu_time_limit: Option<f64>,
    /// Property file the witness was produced against.
    #[arg(long)]
    property: Option<PathBuf>,
    program: PathBuf,
    witness: PathBuf,
}

/// Errors caused by the invocation or its input files.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

fn read(path: &Path) -> Result<String> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) => usage(format!("{}: {e}", path.display())),
    }
}

fn load_program(path: &Path) -> Result<TypedProgram> {
    match load(&read(path)?) {
        Ok(tp) => Ok(tp),
        Err(e) => usage(format!("{}: {e}", path.display())),
    }
}

fn load_props(tp: &TypedProgram, path: Option<&Path>) -> Result<Vec<PropertySpec>> {
    let Some(path) = path else { return Ok(Vec::new()) };
    match load_properties(tp, &read(path)?) {
        Ok(p) => Ok(p),
        Err(e) => usage(format!("{}: {e}", path.display())),
    }
}

fn system(tp: &TypedProgram, props: &[PropertySpec]) -> Option<TransitionSystem> {
    match build_system(tp, props) {
        Ok(ts) => Some(ts),
        Err(e) => {
            log::warn!("no transition system: {e}");
            None
        }
    }
}

fn print_verdict(v: &Verdict) {
    match &v.result {
        VerdictResult::True { k, .. } => println!("TRUE (k={k})"),
        VerdictResult::False(cex) => println!("FALSE (depth={})", cex.depth),
        VerdictResult::Unknown(r) => println!("UNKNOWN({r})"),
    }
    let depth = match &v.result {
        VerdictResult::True { k, .. } => *k,
        VerdictResult::False(cex) => cex.depth,
        VerdictResult::Unknown(_) => v.stats.reached_depth,
    };
    println!("depth: {depth}");
    println!("cpu_time_s: {:.3}", v.stats.cpu_time_s);
    println!("solver_time_s: {:.3}", v.stats.solver_time_s);
    println!("mem_peak_mb: {:.1}", v.stats.mem_peak_mb);
}

fn write_witness(v: &Verdict, tp: &TypedProgram, producer: &str, path: &Path) -> Result<()> {
    if let Ok(w) = emit(v, tp, producer) {
        std::fs::write(path, w.to_json()).with_context(|| format!("writing {}", path.display()))?;
        println!("witness: {}", path.display());
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    if !(a.cpu_seconds > 0.0) {
        return usage("--cpu-seconds must be positive");
    }
    let tp = load_program(&a.program)?;
    let props = load_props(&tp, a.property.as_deref())?;
    let cfg = EngineConfig {
        max_k: a.max_k,
        budget: ResourceBudget {
            cpu_seconds: a.cpu_seconds,
            mem_mb: a.mem_mb,
        },
        schedule: if a.parallel { Schedule::Parallel } else { Schedule::Lockstep },
        ..EngineConfig::default()
    };
    let Some(ts) = system(&tp, &props) else {
        println!("UNKNOWN(shape unsupported)");
        return Ok(());
    };
    log::info!(
        "{}: {} state bits, {} input bits",
        a.program.display(),
        ts.state_bits(),
        ts.input_bits()
    );
    if let Some(p) = &a.dump_ts {
        std::fs::write(p, dump(&ts)).with_context(|| format!("writing {}", p.display()))?;
    }
    let (v, producer) = match a.method {
        Method::Bmc => (run_bmc(&ts, &cfg), "kinduct-bmc"),
        Method::Kind => (run_kinduction(&tp, &ts, &cfg), "kinduct-kind"),
    };
    print_verdict(&v);
    let path = a.witness.unwrap_or_else(|| a.program.with_extension("witness"));
    write_witness(&v, &tp, producer, &path)
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let tp = load_program(&a.program)?;
    let props = load_props(&tp, a.property.as_deref())?;
    let Some(ts) = system(&tp, &props) else {
        println!("UNKNOWN(shape unsupported)");
        return Ok(());
    };
    let mut limits = OracleLimits::default();
    if let Some(n) = a.max_states {
        limits.max_states = n;
    }
    if let Some(d) = a.max_depth {
        limits.max_depth = d;
    }
    let v = match explore(&ts, limits) {
        Ok(v) => v,
        Err(e) => {
            log::warn!("{e}");
            println!("UNKNOWN(state space too large)");
            return Ok(());
        }
    };
    match &v.outcome {
        OracleOutcome::Safe => println!("TRUE"),
        OracleOutcome::Unsafe { depth, .. } => {
            println!("FALSE (depth={depth})");
            println!("depth: {depth}");
        }
        OracleOutcome::BoundedSafe { depth } => {
            println!("UNKNOWN(bounded proof {depth})");
            println!("depth: {depth}");
        }
    }
    println!("explored: {}", v.explored);
    if let (Some(path), OracleOutcome::Unsafe { trace, depth }) = (&a.witness, &v.outcome) {
        let named = |vals: &[u64], vars: &[kinduct::ts::InputVar]| {
            vars.iter().zip(vals).map(|(v, &x)| (v.name.clone(), x)).collect()
        };
        let cex = kinduct::engine::Counterexample {
            init: named(&trace.init_inputs, &ts.init_inputs),
            steps: trace.inputs.iter().map(|i| named(i, &ts.inputs)).collect(),
            states: trace.states.iter().map(|s| s[..ts.program_cells].to_vec()).collect(),
            depth: *depth,
        };
        let verdict = Verdict {
            result: VerdictResult::False(Box::new(cex)),
            stats: Default::default(),
        };
        write_witness(&verdict, &tp, "kinduct-oracle", path)?;
    }
    Ok(())
}

fn cmd_reduce(a: ReduceArgs) -> Result<()> {
    let mut tp = load_program(&a.program)?;
    let props = load_props(&tp, a.property.as_deref())?;
    let keep = property_globals(&tp, &props);
    let mut reports: Vec<ReductionReport> = Vec::new();
    if a.slice {
        let (t, r) = slice_with(&tp, &keep).context("slicing")?;
        tp = t;
        reports.push(r);
    }
    if a.move_vars {
        let (t, r) = move_variables_with(&tp, &a.ignore_functions, &keep).context("moving variables")?;
        tp = t;
        reports.push(r);
    }
    if a.value_assumes {
        let (t, r) = inject_value_assumes(&tp).context("injecting value assumptions")?;
        tp = t;
        reports.push(r);
    }
    let text = pretty_print(&tp.source);
    match &a.out {
        Some(p) => {
            std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            for r in &reports {
                println!("{}", serde_json::to_string(r)?);
            }
        }
        None => {
            print!("{text}");
            for r in &reports {
                log::info!("{}", serde_json::to_string(r)?);
            }
        }
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let profile: MetricsProfile = match serde_json::from_str(&read(&a.profile)?) {
        Ok(p) => p,
        Err(e) => return usage(format!("{}: {e}", a.profile.display())),
    };
    let mode = match a.mode {
        GenMode::Safe => Mode::Safe,
        GenMode::Bug => Mode::Bug { depth: a.bug_depth },
        GenMode::Open => Mode::Open,
    };
    let task = match generate(&profile, a.seed, mode) {
        Ok(t) => t,
        Err(e) => return usage(e.to_string()),
    };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let stem = a.name.unwrap_or_else(|| format!("gen_{}", a.seed));
    let program = a.out.join(format!("{stem}.loopc"));
    std::fs::write(&program, &task.program)?;
    println!("program: {}", program.display());
    for i in 0..task.properties.len() {
        let p = a.out.join(format!("{stem}_{i}.prop"));
        std::fs::write(&p, task.property_file(i))?;
        println!("property: {} {:?}", p.display(), task.ground_truth[i]);
    }
    let meta = a.out.join(format!("{stem}.json"));
    std::fs::write(&meta, task.to_json())?;
    println!("metadata: {}", meta.display());
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let m = match SuiteManifest::load(&a.config) {
        Ok(m) => m,
        Err(e) => return usage(e.to_string()),
    };
    harness::process::abort_on_signals();
    let records = match harness::run_suite(&m.tasks, &m.adapters, &m.limits, &a.out) {
        Ok(r) => r,
        Err(e @ (harness::SuiteConfigError::Io(..) | harness::SuiteConfigError::Aborted)) => return Err(e.into()),
        Err(e) => return usage(e.to_string()),
    };
    harness::write_reports(&records, &m.ground_truth(), a.top_n, &a.out.join("report"))?;
    println!("results: {}", a.out.join("results.csv").display());
    println!("records: {}", records.len());
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let records = match harness::read_csv(&read(&a.results)?) {
        Ok(r) => r,
        Err(e) => return usage(format!("{}: {e}", a.results.display())),
    };
    let truth = match &a.config {
        Some(c) => match SuiteManifest::load(c) {
            Ok(m) => m.ground_truth(),
            Err(e) => return usage(e.to_string()),
        },
        None => Default::default(),
    };
    harness::write_reports(&records, &truth, a.top_n, &a.out)?;
    for (tool, s) in harness::summarize(&records) {
        println!(
            "{tool}: true {:.1}% false {:.1}% unknown {:.1}% of {}",
            s.true_pct, s.false_pct, s.unknown_pct, s.total
        );
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    let tp = load_program(&a.program)?;
    let props = load_props(&tp, a.property.as_deref())?;
    let text = read(&a.witness)?;
    let v = validate_text(&text, &tp, &props, a.cpu_time_limit);
    match &v.outcome {
        Validation::Correct => println!("Correct"),
        Validation::Invalid(m) => println!("Invalid: {m}"),
        Validation::Unknown(m) => println!("Unknown: {m}"),
    }
    println!("validation_time_s: {:.3}", v.validation_time.as_secs_f64());
    Ok(())
}

fn stress(kind: StressKind) -> Result<()> {
    match kind {
        StressKind::Spin => {
            let mut x = 0u64;
            loop {
                x = std::hint::black_box(x.wrapping_mul(6364136223846793005).wrapping_add(1));
            }
        }
        StressKind::Alloc => {
            let mut hoard: Vec<Vec<u8>> = Vec::new();
            loop {
                hoard.push(vec![1u8; 8 << 20]);
                std::hint::black_box(&hoard);
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Report(a) => cmd_report(a),
        Command::ValidateWitness(a) => cmd_validate(a),
        Command::Stress { kind } => stress(kind),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KINDUCT_LOG", "warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) if e.is::<UsageError>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(Err(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
