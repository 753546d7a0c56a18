//! Benchmark runs of (tool × task) matrices under resource limits, witness
//! validation of definite answers, CSV records and the analyses built on them.
//!
//! Every run is a child process. Internal tools run through a worker
//! executable (the `kinduct` binary), which is invoked as
//! `<worker> verify --method <m> ...`, `<worker> oracle ...` and
//! `<worker> validate-witness ...`.

mod analytics;
pub mod process;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use analytics::{
    conflict_table, coverage_sets, quantile_data, score, summarize, write_reports, ConflictRow, Coverage, ScoreError,
    ScoreScheme, ToolSummary,
};
use process::{run_limited, ProcLimits, ProcOutcome, Termination};

pub const CSV_HEADER: &str = "task,tool,result,reason,cpu_time_s,mem_peak_mb,solver_time_s,depth,witness_validation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Expected {
    #[serde(alias = "true")]
    True,
    #[serde(alias = "false")]
    False,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub program: PathBuf,
    pub property: PathBuf,
    #[serde(default)]
    pub expected: Option<Expected>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InternalTool {
    Bmc,
    Kind,
    Oracle,
}

/// Output patterns of an external tool, as regular expressions matched
/// against each stdout line. An optional capture group in `unknown` becomes
/// the record's reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultPatterns {
    #[serde(rename = "true")]
    pub true_: String,
    #[serde(rename = "false")]
    pub false_: String,
    pub unknown: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AdapterKind {
    Internal {
        method: InternalTool,
    },
    /// `command` is an argv template. `{program}`, `{property}`, `{witness}`
    /// and `{cpu_s}` are substituted in each element.
    External {
        command: Vec<String>,
        patterns: ResultPatterns,
        /// Where the tool leaves its witness, with the same placeholders.
        #[serde(default)]
        witness: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolAdapter {
    pub id: String,
    #[serde(flatten)]
    pub kind: AdapterKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub cpu_s: f64,
    pub mem_mb: u64,
    pub workers: usize,
    pub cores_per_task: usize,
    /// Reporting resolution of the time columns in the CSV, in seconds.
    pub time_resolution_s: f64,
    /// Reporting resolution of the memory column in the CSV, in MB.
    pub mem_resolution_mb: f64,
    pub witness_violation_s: f64,
    pub witness_proof_s: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            cpu_s: 7200.0,
            mem_mb: 18432,
            workers: 10,
            cores_per_task: 4,
            time_resolution_s: 0.001,
            mem_resolution_mb: 0.1,
            witness_violation_s: crate::witness::VIOLATION_BUDGET_S,
            witness_proof_s: crate::witness::PROOF_BUDGET_S,
        }
    }
}

/// The JSON suite manifest. Relative paths are resolved against the
/// manifest's directory by [`SuiteManifest::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub tasks: Vec<Task>,
    pub adapters: Vec<ToolAdapter>,
    #[serde(default)]
    pub limits: Limits,
}

impl SuiteManifest {
    pub fn load(path: &Path) -> Result<SuiteManifest, SuiteConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| SuiteConfigError::Io(path.to_path_buf(), e.to_string()))?;
        let mut m: SuiteManifest =
            serde_json::from_str(&text).map_err(|e| SuiteConfigError::Manifest(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for t in &mut m.tasks {
            t.program = base.join(&t.program);
            t.property = base.join(&t.property);
        }
        Ok(m)
    }

    pub fn ground_truth(&self) -> BTreeMap<String, Expected> {
        self.tasks
            .iter()
            .filter_map(|t| t.expected.map(|e| (t.id.clone(), e)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SuiteConfigError {
    #[error("duplicate task id `{0}`")]
    DuplicateTask(String),
    #[error("duplicate tool id `{0}`")]
    DuplicateTool(String),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("the suite has no tasks")]
    NoTasks,
    #[error("the suite has no tools")]
    NoTools,
    #[error("limits must be positive")]
    BadLimits,
    #[error("tool `{0}`: {1}")]
    BadPatterns(String, String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("{0}: {1}")]
    Io(PathBuf, String),
    /// The suite was aborted before every run finished; nothing was written.
    #[error("suite aborted")]
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RunResult {
    True,
    False,
    Unknown,
}

impl RunResult {
    pub fn is_definite(self) -> bool {
        self != RunResult::Unknown
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WitnessValidation {
    Correct,
    Invalid,
    Unknown,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub task: String,
    pub tool: String,
    pub result: RunResult,
    pub reason: String,
    pub cpu_time_s: f64,
    pub mem_peak_mb: f64,
    pub solver_time_s: Option<f64>,
    pub depth: Option<u64>,
    pub witness_validation: WitnessValidation,
    /// Wall-clock time; kept out of the CSV so it is never mixed with CPU time.
    #[serde(skip)]
    pub wall_time_s: f64,
}

pub const REASON_TIMEOUT: &str = "timeout";
pub const REASON_OUT_OF_MEMORY: &str = "out of memory";
pub const REASON_TOOL_ERROR: &str = "tool error";

struct Compiled {
    adapter: ToolAdapter,
    patterns: Option<[Regex; 3]>,
}

fn check(tasks: &[Task], adapters: &[ToolAdapter], limits: &Limits) -> Result<Vec<Compiled>, SuiteConfigError> {
    if tasks.is_empty() {
        return Err(SuiteConfigError::NoTasks);
    }
    if adapters.is_empty() {
        return Err(SuiteConfigError::NoTools);
    }
    let positive = |x: f64| x.is_finite() && x > 0.0;
    if !(positive(limits.cpu_s)
        && limits.mem_mb > 0
        && limits.workers > 0
        && limits.cores_per_task > 0
        && positive(limits.time_resolution_s)
        && positive(limits.mem_resolution_mb)
        && positive(limits.witness_violation_s)
        && positive(limits.witness_proof_s))
    {
        return Err(SuiteConfigError::BadLimits);
    }
    let mut ids = BTreeSet::new();
    for t in tasks {
        if !ids.insert(&t.id) {
            return Err(SuiteConfigError::DuplicateTask(t.id.clone()));
        }
        for p in [&t.program, &t.property] {
            if !p.is_file() {
                return Err(SuiteConfigError::MissingFile(p.clone()));
            }
        }
    }
    let mut tools = BTreeSet::new();
    let mut out = Vec::new();
    for a in adapters {
        if !tools.insert(&a.id) {
            return Err(SuiteConfigError::DuplicateTool(a.id.clone()));
        }
        let patterns = match &a.kind {
            AdapterKind::Internal { .. } => None,
            AdapterKind::External { command, patterns, .. } => {
                if command.is_empty() {
                    return Err(SuiteConfigError::BadPatterns(a.id.clone(), "empty command".into()));
                }
                let p = [&patterns.true_, &patterns.false_, &patterns.unknown];
                if p[0] == p[1] || p[0] == p[2] || p[1] == p[2] {
                    return Err(SuiteConfigError::BadPatterns(a.id.clone(), "patterns must differ".into()));
                }
                let compile =
                    |s: &str| Regex::new(s).map_err(|e| SuiteConfigError::BadPatterns(a.id.clone(), e.to_string()));
                Some([compile(p[0])?, compile(p[1])?, compile(p[2])?])
            }
        };
        out.push(Compiled {
            adapter: a.clone(),
            patterns,
        });
    }
    Ok(out)
}

fn internal_patterns() -> [Regex; 3] {
    [
        Regex::new(r"^TRUE\b").unwrap(),
        Regex::new(r"^FALSE\b").unwrap(),
        Regex::new(r"^UNKNOWN\((.*)\)$").unwrap(),
    ]
}

/// Classifies tool output. Output matching none of the patterns, or more
/// than one, is a tool error.
fn classify(stdout: &str, patterns: &[Regex; 3]) -> (RunResult, String) {
    let mut found: Option<(RunResult, String)> = None;
    for line in stdout.lines() {
        let line = line.trim_end();
        let hits: Vec<usize> = (0..3).filter(|&i| patterns[i].is_match(line)).collect();
        match hits.as_slice() {
            [] => continue,
            [i] => {
                let hit = match i {
                    0 => (RunResult::True, String::new()),
                    1 => (RunResult::False, String::new()),
                    _ => {
                        let reason = patterns[2]
                            .captures(line)
                            .and_then(|c| c.get(1))
                            .map(|m| m.as_str().to_string())
                            .unwrap_or_else(|| "unknown".into());
                        (RunResult::Unknown, reason)
                    }
                };
                if found.as_ref().is_some_and(|f| f.0 != hit.0) {
                    return (RunResult::Unknown, REASON_TOOL_ERROR.into());
                }
                found.get_or_insert(hit);
            }
            _ => return (RunResult::Unknown, REASON_TOOL_ERROR.into()),
        }
    }
    found.unwrap_or((RunResult::Unknown, REASON_TOOL_ERROR.into()))
}

/// `key: value` statistics lines printed by the worker.
fn stat(stdout: &str, key: &str) -> Option<f64> {
    stdout.lines().find_map(|l| {
        let (k, v) = l.split_once(':')?;
        (k.trim() == key).then(|| v.trim().parse().ok()).flatten()
    })
}

fn substitute(template: &str, vars: &[(&str, String)]) -> String {
    let mut s = template.to_string();
    for (k, v) in vars {
        s = s.replace(&format!("{{{k}}}"), v);
    }
    s
}

fn file_key(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Options beyond the suite itself.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// The executable that serves internal tools and witness validation.
    pub worker: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            worker: std::env::current_exe().unwrap_or_else(|_| PathBuf::from("kinduct")),
        }
    }
}

fn cores_for_slot(slot: usize, per_task: usize) -> Vec<usize> {
    let n = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    if per_task >= n {
        return Vec::new();
    }
    (0..per_task).map(|i| (slot * per_task + i) % n).collect()
}

fn wall_cap(cpu_s: f64) -> Duration {
    Duration::from_secs_f64(cpu_s * 4.0 + 10.0)
}

struct Job<'a> {
    task: &'a Task,
    tool: &'a Compiled,
}

fn run_one(job: &Job, limits: &Limits, opts: &RunOptions, out: &Path, slot: usize) -> BenchmarkRecord {
    let task = job.task;
    let adapter = &job.tool.adapter;
    let run_dir = out.join("runs").join(file_key(&adapter.id)).join(file_key(&task.id));
    let _ = std::fs::create_dir_all(&run_dir);
    let witness_default = run_dir.join("witness.json");
    let vars = |witness: &Path| {
        vec![
            ("program", task.program.display().to_string()),
            ("property", task.property.display().to_string()),
            ("witness", witness.display().to_string()),
            ("cpu_s", format!("{}", limits.cpu_s)),
        ]
    };
    let worker = opts.worker.display().to_string();
    let internal = internal_patterns();
    let (argv, patterns, witness_path): (Vec<String>, &[Regex; 3], Option<PathBuf>) = match &adapter.kind {
        AdapterKind::Internal { method } => {
            // The engine stops slightly before the hard limit so it can report its own reason.
            let budget = format!("{:.3}", limits.cpu_s * 0.95);
            let mut argv = vec![worker.clone()];
            match method {
                InternalTool::Oracle => argv.push("oracle".into()),
                m => {
                    argv.extend(["verify".into(), "--method".into()]);
                    argv.push(if *m == InternalTool::Bmc { "bmc" } else { "kind" }.into());
                    argv.extend(["--cpu-seconds".into(), budget]);
                }
            }
            argv.extend([
                "--witness".into(),
                witness_default.display().to_string(),
                task.program.display().to_string(),
                task.property.display().to_string(),
            ]);
            (argv, &internal, Some(witness_default.clone()))
        }
        AdapterKind::External { command, witness, .. } => {
            let v = vars(&witness_default);
            let argv = command.iter().map(|c| substitute(c, &v)).collect();
            let wp = witness.as_ref().map(|w| PathBuf::from(substitute(w, &v)));
            (argv, job.tool.patterns.as_ref().unwrap(), wp)
        }
    };
    if let Some(w) = &witness_path {
        let _ = std::fs::remove_file(w);
    }
    let proc_limits = ProcLimits {
        cpu_s: limits.cpu_s,
        mem_mb: limits.mem_mb,
        cores: cores_for_slot(slot, limits.cores_per_task),
    };
    log::info!("run {} on {}", adapter.id, task.id);
    let outcome = match run_limited(&argv, &proc_limits, wall_cap(limits.cpu_s), &run_dir) {
        Ok(o) => o,
        Err(e) => {
            log::warn!("{} on {}: cannot start: {e}", adapter.id, task.id);
            return BenchmarkRecord {
                task: task.id.clone(),
                tool: adapter.id.clone(),
                result: RunResult::Unknown,
                reason: REASON_TOOL_ERROR.into(),
                cpu_time_s: 0.0,
                mem_peak_mb: 0.0,
                solver_time_s: None,
                depth: None,
                witness_validation: WitnessValidation::NotRun,
                wall_time_s: 0.0,
            };
        }
    };
    let (result, reason) = outcome_verdict(&outcome, patterns);
    let mut rec = BenchmarkRecord {
        task: task.id.clone(),
        tool: adapter.id.clone(),
        result,
        reason,
        cpu_time_s: outcome.cpu_time_s,
        mem_peak_mb: outcome.mem_peak_mb,
        solver_time_s: stat(&outcome.stdout, "solver_time_s"),
        depth: stat(&outcome.stdout, "depth").map(|d| d as u64),
        witness_validation: WitnessValidation::NotRun,
        wall_time_s: outcome.wall_time_s,
    };
    if rec.result.is_definite() {
        rec.witness_validation = match witness_path.filter(|p| p.is_file()) {
            Some(w) => validate_witness(task, &w, rec.result, limits, opts, &run_dir, slot),
            None => WitnessValidation::NotRun,
        };
    }
    rec
}

fn outcome_verdict(o: &ProcOutcome, patterns: &[Regex; 3]) -> (RunResult, String) {
    match o.termination {
        Termination::CpuLimit | Termination::WallLimit => (RunResult::Unknown, REASON_TIMEOUT.into()),
        Termination::MemLimit => (RunResult::Unknown, REASON_OUT_OF_MEMORY.into()),
        Termination::Aborted => (RunResult::Unknown, "aborted".into()),
        _ if o.allocation_failed() => (RunResult::Unknown, REASON_OUT_OF_MEMORY.into()),
        Termination::Exited(_) | Termination::Signaled(_) => {
            let (r, reason) = classify(&o.stdout, patterns);
            // A definite answer from a crashed run is not trusted.
            if r.is_definite() && o.termination != Termination::Exited(0) {
                (RunResult::Unknown, REASON_TOOL_ERROR.into())
            } else {
                (r, reason)
            }
        }
    }
}

fn validate_witness(
    task: &Task,
    witness: &Path,
    result: RunResult,
    limits: &Limits,
    opts: &RunOptions,
    run_dir: &Path,
    slot: usize,
) -> WitnessValidation {
    let budget = if result == RunResult::False {
        limits.witness_violation_s
    } else {
        limits.witness_proof_s
    };
    let argv = vec![
        opts.worker.display().to_string(),
        "validate-witness".into(),
        "--cpu-time-limit".into(),
        format!("{budget}"),
        "--property".into(),
        task.property.display().to_string(),
        task.program.display().to_string(),
        witness.display().to_string(),
    ];
    let pl = ProcLimits {
        cpu_s: budget + 1.0,
        mem_mb: limits.mem_mb,
        cores: cores_for_slot(slot, limits.cores_per_task),
    };
    match run_limited(&argv, &pl, wall_cap(budget), &run_dir.join("validation")) {
        Ok(o) if o.termination == Termination::Exited(0) => {
            match o.stdout.split_whitespace().next().map(|w| w.trim_end_matches(':')) {
                Some("Correct") => WitnessValidation::Correct,
                Some("Invalid") => WitnessValidation::Invalid,
                _ => WitnessValidation::Unknown,
            }
        }
        _ => WitnessValidation::Unknown,
    }
}

/// Runs every (tool, task) pair once on a pool of `limits.workers` slots and
/// writes `results.csv` and `records.json` under `out`. Records come back
/// ordered by task id, then by adapter order.
pub fn run_suite(
    tasks: &[Task],
    adapters: &[ToolAdapter],
    limits: &Limits,
    out: &Path,
) -> Result<Vec<BenchmarkRecord>, SuiteConfigError> {
    run_suite_with(tasks, adapters, limits, out, &RunOptions::default())
}

pub fn run_suite_with(
    tasks: &[Task],
    adapters: &[ToolAdapter],
    limits: &Limits,
    out: &Path,
    opts: &RunOptions,
) -> Result<Vec<BenchmarkRecord>, SuiteConfigError> {
    let tools = check(tasks, adapters, limits)?;
    std::fs::create_dir_all(out).map_err(|e| SuiteConfigError::Io(out.to_path_buf(), e.to_string()))?;
    let mut order: Vec<&Task> = tasks.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let jobs: VecDeque<(usize, Job)> = order
        .iter()
        .flat_map(|t| tools.iter().map(move |c| Job { task: t, tool: c }))
        .enumerate()
        .collect();
    let n = jobs.len();
    let queue = Arc::new(Mutex::new(jobs));
    let results: Mutex<Vec<Option<BenchmarkRecord>>> = Mutex::new(vec![None; n]);
    std::thread::scope(|s| {
        for slot in 0..limits.workers.min(n) {
            let queue = Arc::clone(&queue);
            let results = &results;
            s.spawn(move || loop {
                if process::abort_requested() {
                    break;
                }
                let Some((i, job)) = queue.lock().unwrap().pop_front() else { break };
                let rec = run_one(&job, limits, opts, out, slot);
                results.lock().unwrap()[i] = Some(rec);
            });
        }
    });
    if process::abort_requested() {
        return Err(SuiteConfigError::Aborted);
    }
    let records: Vec<BenchmarkRecord> = results.into_inner().unwrap().into_iter().map(|r| r.unwrap()).collect();
    let io = |p: PathBuf, e: std::io::Error| SuiteConfigError::Io(p, e.to_string());
    let csv_path = out.join("results.csv");
    std::fs::write(&csv_path, to_csv(&records, limits)).map_err(|e| io(csv_path.clone(), e))?;
    let json_path = out.join("records.json");
    let json: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r).expect("records serialize");
            v["wall_time_s"] = serde_json::json!(r.wall_time_s);
            v
        })
        .collect();
    std::fs::write(&json_path, serde_json::to_string_pretty(&json).expect("json") + "\n")
        .map_err(|e| io(json_path.clone(), e))?;
    Ok(records)
}

fn quantize(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

fn decimals(step: f64) -> usize {
    let mut d = 0;
    while d < 9 && (step * 10f64.powi(d as i32)).fract().abs() > 1e-9 {
        d += 1;
    }
    d
}

/// Renders records as CSV. Measured quantities are rounded to the limits'
/// reporting resolution.
pub fn to_csv(records: &[BenchmarkRecord], limits: &Limits) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    let tr = limits.time_resolution_s;
    let mr = limits.mem_resolution_mb;
    let t = |x: f64| format!("{:.*}", decimals(tr), quantize(x, tr));
    let m = |x: f64| format!("{:.*}", decimals(mr), quantize(x, mr));
    for r in records {
        w.write_record([
            r.task.clone(),
            r.tool.clone(),
            format!("{:?}", r.result),
            r.reason.clone(),
            t(r.cpu_time_s),
            m(r.mem_peak_mb),
            r.solver_time_s.map(t).unwrap_or_default(),
            r.depth.map(|d| d.to_string()).unwrap_or_default(),
            format!("{:?}", r.witness_validation),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header `{0}`")]
    Header(String),
    #[error("line {0}: {1}")]
    Field(u64, String),
}

pub fn read_csv(text: &str) -> Result<Vec<BenchmarkRecord>, CsvError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(CsvError::Header(header));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |what: &str| CsvError::Field(line, format!("bad {what}"));
        let f = |i: usize| row.get(i).unwrap_or("");
        let num = |i: usize, what: &str| f(i).parse::<f64>().map_err(|_| bad(what));
        let opt = |i: usize, what: &str| -> Result<Option<f64>, CsvError> {
            if f(i).is_empty() {
                Ok(None)
            } else {
                num(i, what).map(Some)
            }
        };
        out.push(BenchmarkRecord {
            task: f(0).into(),
            tool: f(1).into(),
            result: match f(2) {
                "True" => RunResult::True,
                "False" => RunResult::False,
                "Unknown" => RunResult::Unknown,
                _ => return Err(bad("result")),
            },
            reason: f(3).into(),
            cpu_time_s: num(4, "cpu_time_s")?,
            mem_peak_mb: num(5, "mem_peak_mb")?,
            solver_time_s: opt(6, "solver_time_s")?,
            depth: opt(7, "depth")?.map(|d| d as u64),
            witness_validation: match f(8) {
                "Correct" => WitnessValidation::Correct,
                "Invalid" => WitnessValidation::Invalid,
                "Unknown" => WitnessValidation::Unknown,
                "NotRun" => WitnessValidation::NotRun,
                _ => return Err(bad("witness_validation")),
            },
            wall_time_s: 0.0,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let p = internal_patterns();
        assert_eq!(classify("TRUE (k=2)\ndepth: 2\n", &p), (RunResult::True, String::new()));
        assert_eq!(classify("FALSE (depth=2)\n", &p).0, RunResult::False);
        assert_eq!(
            classify("UNKNOWN(max depth reached)\n", &p),
            (RunResult::Unknown, "max depth reached".into())
        );
        assert_eq!(classify("hello\n", &p), (RunResult::Unknown, REASON_TOOL_ERROR.into()));
        assert_eq!(classify("TRUE\nFALSE\n", &p), (RunResult::Unknown, REASON_TOOL_ERROR.into()));
        assert_eq!(stat("TRUE\ndepth: 7\nsolver_time_s: 0.25\n", "depth"), Some(7.0));
    }

    #[test]
    fn resolution_formatting() {
        assert_eq!(decimals(0.001), 3);
        assert_eq!(decimals(0.5), 1);
        assert_eq!(decimals(1.0), 0);
        assert_eq!(format!("{:.*}", decimals(0.1), quantize(3.14159, 0.1)), "3.1");
    }
}
