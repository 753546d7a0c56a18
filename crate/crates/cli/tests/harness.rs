use std::path::{Path, PathBuf};

use kinduct::harness::{
    run_suite_with, AdapterKind, InternalTool, Limits, ResultPatterns, RunOptions, RunResult, SuiteConfigError,
    SuiteManifest, Task, ToolAdapter, WitnessValidation, REASON_OUT_OF_MEMORY, REASON_TIMEOUT, REASON_TOOL_ERROR,
};

const BIN: &str = env!("CARGO_BIN_EXE_kinduct");

fn fixture(name: &str, ext: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures")).join(format!("{name}.{ext}"))
}

fn task(id: &str, name: &str) -> Task {
    Task {
        id: id.into(),
        program: fixture(name, "loopc"),
        property: fixture(name, "prop"),
        expected: None,
    }
}

fn internal(id: &str, method: InternalTool) -> ToolAdapter {
    ToolAdapter {
        id: id.into(),
        kind: AdapterKind::Internal { method },
    }
}

fn external(id: &str, command: &[&str]) -> ToolAdapter {
    ToolAdapter {
        id: id.into(),
        kind: AdapterKind::External {
            command: command.iter().map(|s| s.to_string()).collect(),
            patterns: ResultPatterns {
                true_: "^TRUE".into(),
                false_: "^FALSE".into(),
                unknown: r"^UNKNOWN\((.*)\)".into(),
            },
            witness: None,
        },
    }
}

fn opts() -> RunOptions {
    RunOptions { worker: BIN.into() }
}

fn small_limits(cpu_s: f64) -> Limits {
    Limits {
        cpu_s,
        mem_mb: 2048,
        workers: 4,
        cores_per_task: 1,
        ..Limits::default()
    }
}

#[test]
fn fixture_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = [task("F2", "f2_count_bug"), task("F1", "f1_count_mod3")];
    let tools = [internal("bmc", InternalTool::Bmc), internal("kind", InternalTool::Kind)];
    let recs = run_suite_with(&tasks, &tools, &small_limits(2.0), dir.path(), &opts()).unwrap();
    let got: Vec<(&str, &str, RunResult, WitnessValidation)> = recs
        .iter()
        .map(|r| (r.task.as_str(), r.tool.as_str(), r.result, r.witness_validation))
        .collect();
    assert_eq!(
        got,
        vec![
            ("F1", "bmc", RunResult::Unknown, WitnessValidation::NotRun),
            ("F1", "kind", RunResult::True, WitnessValidation::Correct),
            ("F2", "bmc", RunResult::False, WitnessValidation::Correct),
            ("F2", "kind", RunResult::False, WitnessValidation::Correct),
        ]
    );
    assert_eq!(recs[1].depth, Some(2));
    assert_eq!(recs[2].depth, Some(2));
    assert!(recs.iter().all(|r| r.cpu_time_s >= 0.0 && r.mem_peak_mb > 0.0));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(3).unwrap().starts_with("F2,bmc,False,,"));
}

#[test]
fn oracle_adapter_and_unmatched_output() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = [task("F3", "f3_xor_input"), task("F1", "f1_count_mod3")];
    let tools = [internal("oracle", InternalTool::Oracle), external("chatty", &["echo", "hello {program}"])];
    let recs = run_suite_with(&tasks, &tools, &small_limits(5.0), dir.path(), &opts()).unwrap();
    assert_eq!((recs[0].result, recs[0].witness_validation), (RunResult::True, WitnessValidation::NotRun));
    assert_eq!(recs[1].reason, REASON_TOOL_ERROR);
    assert_eq!((recs[2].result, recs[2].witness_validation), (RunResult::False, WitnessValidation::Correct));
    assert_eq!(recs[3].result, RunResult::Unknown);
    assert_eq!(recs[3].reason, REASON_TOOL_ERROR);
}

#[test]
fn external_witness_convention() {
    let dir = tempfile::tempdir().unwrap();
    let mut tool = external(
        "wrapped",
        &[BIN, "verify", "--method", "kind", "--witness", "{witness}", "{program}", "{property}"],
    );
    if let AdapterKind::External { witness, .. } = &mut tool.kind {
        *witness = Some("{witness}".into());
    }
    let recs = run_suite_with(&[task("F2", "f2_count_bug")], &[tool], &small_limits(5.0), dir.path(), &opts()).unwrap();
    assert_eq!(recs[0].result, RunResult::False);
    assert_eq!(recs[0].witness_validation, WitnessValidation::Correct);
}

#[test]
fn busy_loop_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let tools = [external("spin", &[BIN, "stress", "spin"])];
    let recs = run_suite_with(&[task("F1", "f1_count_mod3")], &tools, &small_limits(2.0), dir.path(), &opts()).unwrap();
    assert_eq!(recs[0].result, RunResult::Unknown);
    assert_eq!(recs[0].reason, REASON_TIMEOUT);
    assert!((2.0..=4.0).contains(&recs[0].cpu_time_s), "{}", recs[0].cpu_time_s);
}

#[test]
fn allocation_bomb_is_out_of_memory() {
    let dir = tempfile::tempdir().unwrap();
    let tools = [external("bomb", &[BIN, "stress", "alloc"])];
    let limits = Limits {
        mem_mb: 256,
        ..small_limits(20.0)
    };
    let recs = run_suite_with(&[task("F1", "f1_count_mod3")], &tools, &limits, dir.path(), &opts()).unwrap();
    assert_eq!(recs[0].reason, REASON_OUT_OF_MEMORY);
    assert!(recs[0].mem_peak_mb <= 256.0 + 1.0, "{}", recs[0].mem_peak_mb);
    assert!(recs[0].mem_peak_mb >= 0.75 * 256.0, "{}", recs[0].mem_peak_mb);
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let kind = [internal("kind", InternalTool::Kind)];
    let dup = [task("a", "f1_count_mod3"), task("a", "f2_count_bug")];
    assert_eq!(
        run_suite_with(&dup, &kind, &Limits::default(), dir.path(), &opts()),
        Err(SuiteConfigError::DuplicateTask("a".into()))
    );
    let mut missing = task("m", "f1_count_mod3");
    missing.property = dir.path().join("absent.prop");
    assert!(matches!(
        run_suite_with(&[missing], &kind, &Limits::default(), dir.path(), &opts()),
        Err(SuiteConfigError::MissingFile(_))
    ));
    let two = [internal("x", InternalTool::Bmc), internal("x", InternalTool::Kind)];
    assert!(matches!(
        run_suite_with(&[task("a", "f1_count_mod3")], &two, &Limits::default(), dir.path(), &opts()),
        Err(SuiteConfigError::DuplicateTool(_))
    ));
    let zero = Limits {
        workers: 0,
        ..Limits::default()
    };
    assert_eq!(
        run_suite_with(&[task("a", "f1_count_mod3")], &kind, &zero, dir.path(), &opts()),
        Err(SuiteConfigError::BadLimits)
    );
    assert_eq!(
        run_suite_with(&[], &kind, &Limits::default(), dir.path(), &opts()),
        Err(SuiteConfigError::NoTasks)
    );
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn manifest_resolves_relative_paths_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("f1_count_mod3", "loopc"), dir.path().join("f1.loopc")).unwrap();
    std::fs::copy(fixture("f1_count_mod3", "prop"), dir.path().join("f1.prop")).unwrap();
    let m = dir.path().join("suite.json");
    write(
        &m,
        r#"{"tasks": [{"id": "F1", "program": "f1.loopc", "property": "f1.prop", "expected": "true"}],
            "adapters": [{"id": "kind", "kind": "internal", "method": "kind"},
                         {"id": "ext", "kind": "external", "command": ["echo", "TRUE"],
                          "patterns": {"true": "^TRUE", "false": "^FALSE", "unknown": "^UNKNOWN"}}]}"#,
    );
    let s = SuiteManifest::load(&m).unwrap();
    assert_eq!(s.tasks[0].program, dir.path().join("f1.loopc"));
    assert_eq!(s.limits.cpu_s, 7200.0);
    assert_eq!(s.limits.mem_mb, 18432);
    assert_eq!(s.limits.workers, 10);
    assert_eq!(s.limits.cores_per_task, 4);
    assert_eq!(s.ground_truth()["F1"], kinduct::harness::Expected::True);
    assert!(matches!(s.adapters[1].kind, AdapterKind::External { .. }));
}
