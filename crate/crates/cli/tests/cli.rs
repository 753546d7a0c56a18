use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_kinduct");

fn fixtures_into(dir: &Path) -> PathBuf {
    let src = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures"));
    for name in ["f1_count_mod3", "f2_count_bug", "f3_xor_input", "f4_masked"] {
        for ext in ["loopc", "prop"] {
            std::fs::copy(src.join(format!("{name}.{ext}")), dir.join(format!("{name}.{ext}"))).unwrap();
        }
    }
    dir.to_path_buf()
}

fn kinduct(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("KINDUCT_LOG").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn verify_prints_verdicts_and_writes_witnesses() {
    let tmp = tempfile::tempdir().unwrap();
    let d = fixtures_into(tmp.path());
    let o = kinduct(&["verify", "--method", "kind", &p(&d, "f1_count_mod3.loopc"), &p(&d, "f1_count_mod3.prop")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("TRUE (k=2)"));
    assert!(out.contains("\ndepth: 2\n"));
    for key in ["cpu_time_s:", "solver_time_s:", "mem_peak_mb:"] {
        assert!(out.contains(key), "{out}");
    }

    let o = kinduct(&["verify", "--method", "bmc", &p(&d, "f2_count_bug.loopc"), &p(&d, "f2_count_bug.prop")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("FALSE (depth=2)"));
    let w = d.join("f2_count_bug.witness");
    assert!(w.is_file());
    let o = kinduct(&["validate-witness", "--property", &p(&d, "f2_count_bug.prop"), &p(&d, "f2_count_bug.loopc"), &w.display().to_string()]);
    assert_eq!(stdout(&o).lines().next(), Some("Correct"));
    // The property file is optional; the loop's own assert fails at the same iteration.
    let o = kinduct(&["validate-witness", "--cpu-time-limit", "10", &p(&d, "f2_count_bug.loopc"), &w.display().to_string()]);
    assert_eq!(stdout(&o).lines().next(), Some("Correct"));

    // UNKNOWN is still a completed run.
    let o = kinduct(&["verify", "--method", "bmc", "--max-k", "5", &p(&d, "f1_count_mod3.loopc")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("UNKNOWN(max depth reached)"));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let d = fixtures_into(tmp.path());
    let f1 = p(&d, "f1_count_mod3.loopc");
    assert_eq!(kinduct(&["verify", "--method", "warp", &f1]).status.code(), Some(1));
    assert_eq!(kinduct(&["verify", "--bogus", &f1]).status.code(), Some(1));
    assert_eq!(kinduct(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(kinduct(&["verify", &p(&d, "absent.loopc")]).status.code(), Some(1));
    let bad = d.join("bad.loopc");
    std::fs::write(&bad, "fn main( {").unwrap();
    let o = kinduct(&["verify", &bad.display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert_eq!(kinduct(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_lists_every_subcommand() {
    let help = stdout(&kinduct(&["--help"]));
    for sub in ["verify", "oracle", "reduce", "gen", "bench", "report", "validate-witness"] {
        assert!(help.contains(sub), "{sub} missing from\n{help}");
    }
}

#[test]
fn log_level_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let d = fixtures_into(tmp.path());
    let args = ["verify", "--method", "kind", &p(&d, "f1_count_mod3.loopc")];
    let quiet = kinduct(&args);
    let loud = Command::new(BIN).args(args).env("KINDUCT_LOG", "trace").output().unwrap();
    assert_eq!(stdout(&quiet).lines().next(), stdout(&loud).lines().next());
    assert!(loud.stderr.len() > quiet.stderr.len());
}

#[test]
fn oracle_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let d = fixtures_into(tmp.path());
    let o = kinduct(&["oracle", &p(&d, "f2_count_bug.loopc"), &p(&d, "f2_count_bug.prop")]);
    assert_eq!(stdout(&o).lines().next(), Some("FALSE (depth=2)"));
    let o = kinduct(&["oracle", &p(&d, "f1_count_mod3.loopc"), &p(&d, "f1_count_mod3.prop")]);
    assert_eq!(stdout(&o).lines().next(), Some("TRUE"));
    let o = kinduct(&["oracle", "--max-depth", "1", &p(&d, "f2_count_bug.loopc")]);
    assert_eq!(stdout(&o).lines().next(), Some("UNKNOWN(bounded proof 1)"));
}

#[test]
fn reduce_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let src = d.join("junk.loopc");
    std::fs::write(
        &src,
        "global c: u8 = 0;\nglobal junk: u8 = 0;\nglobal tmp: u8 = 0;\n\nfn main() {\n    while (true) {\n        junk = junk + 7;\n        tmp = nondet_u8();\n        if (tmp > 3) {\n            c = 0;\n        }\n        assert(c != 4);\n    }\n}\n",
    )
    .unwrap();
    let o = kinduct(&["reduce", "--slice", &src.display().to_string()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("junk"));
    let out = d.join("reduced.loopc");
    let o = kinduct(&[
        "reduce",
        "--slice",
        "--move-vars",
        "--value-assumes",
        "--ignore-functions",
        "helper,other",
        "-o",
        &out.display().to_string(),
        &src.display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let reports: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(reports.len(), 3);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("let tmp: u8"), "{text}");
    assert!(text.contains("assume(c <= 0);") || text.contains("assume(0 <= c && c <= 0);") , "{text}");
}

#[test]
fn gen_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let profile = d.join("profile.json");
    std::fs::write(
        &profile,
        r#"{"sloc": 40, "globals": {"u8": 3}, "ops": {"add_sub": 5, "bitwise": 2}, "properties": {"invariant": 1}}"#,
    )
    .unwrap();
    let args = |out: &Path| {
        vec![
            "gen".to_string(),
            "--profile".into(),
            profile.display().to_string(),
            "--seed".into(),
            "9".into(),
            "--mode".into(),
            "bug".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let a = d.join("a");
    let b = d.join("b");
    assert_eq!(Command::new(BIN).args(args(&a)).status().unwrap().code(), Some(0));
    assert_eq!(Command::new(BIN).args(args(&b)).status().unwrap().code(), Some(0));
    let read = |dir: &Path, f: &str| std::fs::read(dir.join(f)).unwrap();
    assert_eq!(read(&a, "gen_9.loopc"), read(&b, "gen_9.loopc"));
    assert_eq!(read(&a, "gen_9.json"), read(&b, "gen_9.json"));
    let o = kinduct(&["verify", "--method", "bmc", &p(&a, "gen_9.loopc"), &p(&a, "gen_9_0.prop")]);
    assert_eq!(stdout(&o).lines().next(), Some("FALSE (depth=3)"));

    let bad = d.join("bad.json");
    std::fs::write(&bad, r#"{"sloc": 5, "ops": {"add_sub": 100}}"#).unwrap();
    let o = kinduct(&["gen", "--profile", &bad.display().to_string(), "--out", &p(d, "c")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = fixtures_into(tmp.path());
    let manifest = d.join("suite.json");
    std::fs::write(
        &manifest,
        r#"{"tasks": [
              {"id": "F1", "program": "f1_count_mod3.loopc", "property": "f1_count_mod3.prop", "expected": "true"},
              {"id": "F2", "program": "f2_count_bug.loopc", "property": "f2_count_bug.prop", "expected": "false"}],
            "adapters": [{"id": "kind", "kind": "internal", "method": "kind"},
                         {"id": "bmc", "kind": "internal", "method": "bmc"}],
            "limits": {"cpu_s": 2, "mem_mb": 2048, "workers": 2, "cores_per_task": 1}}"#,
    )
    .unwrap();
    let out = d.join("out");
    let o = kinduct(&["bench", "--config", &manifest.display().to_string(), "--out", &out.display().to_string()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("task,tool,result,reason,cpu_time_s,mem_peak_mb,solver_time_s,depth,witness_validation\n"));
    assert!(out.join("report/coverage.csv").is_file());
    assert!(out.join("report/quantile_punished_kind.dat").is_file());

    let rep = d.join("rep");
    let o = kinduct(&[
        "report",
        "--results",
        &out.join("results.csv").display().to_string(),
        "--config",
        &manifest.display().to_string(),
        "--out",
        &rep.display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("kind: true 50.0% false 50.0% unknown 0.0% of 2"), "{}", stdout(&o));
    let q = std::fs::read_to_string(rep.join("quantile_base_kind.dat")).unwrap();
    assert_eq!(q.lines().filter(|l| !l.starts_with('#')).count(), 2);
    let conflicts = std::fs::read_to_string(rep.join("conflicts.csv")).unwrap();
    assert_eq!(conflicts, "true_set,false_set,count\n");

    let dup = d.join("dup.json");
    std::fs::write(
        &dup,
        r#"{"tasks": [{"id": "F1", "program": "f1_count_mod3.loopc", "property": "f1_count_mod3.prop"},
                      {"id": "F1", "program": "f2_count_bug.loopc", "property": "f2_count_bug.prop"}],
            "adapters": [{"id": "kind", "kind": "internal", "method": "kind"}]}"#,
    )
    .unwrap();
    let o = kinduct(&["bench", "--config", &dup.display().to_string(), "--out", &p(&d, "o2")]);
    assert_eq!(o.status.code(), Some(1));
}

fn processes_running(exe: &Path) -> usize {
    let needle = exe.display().to_string();
    std::fs::read_dir("/proc")
        .unwrap()
        .flatten()
        .filter(|e| e.file_name().to_str().is_some_and(|n| n.bytes().all(|b| b.is_ascii_digit())))
        .filter_map(|e| std::fs::read(e.path().join("cmdline")).ok())
        .filter(|c| String::from_utf8_lossy(c).split('\0').next() == Some(needle.as_str()))
        .count()
}

#[test]
fn interrupted_bench_reaps_its_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = fixtures_into(tmp.path());
    // A uniquely named copy makes the runs findable in /proc.
    let spinner = d.join("spinner");
    std::fs::copy(BIN, &spinner).unwrap();
    let manifest = d.join("suite.json");
    std::fs::write(
        &manifest,
        format!(
            r#"{{"tasks": [{{"id": "F1", "program": "f1_count_mod3.loopc", "property": "f1_count_mod3.prop"}},
                          {{"id": "F2", "program": "f2_count_bug.loopc", "property": "f2_count_bug.prop"}}],
                "adapters": [{{"id": "spin", "kind": "external", "command": ["{}", "stress", "spin"],
                               "patterns": {{"true": "^TRUE", "false": "^FALSE", "unknown": "^UNKNOWN"}}}}],
                "limits": {{"cpu_s": 60, "mem_mb": 1024, "workers": 2, "cores_per_task": 1}}}}"#,
            spinner.display()
        ),
    )
    .unwrap();
    let mut bench = Command::new(BIN)
        .args(["bench", "--config", &manifest.display().to_string(), "--out", &p(&d, "out")])
        .spawn()
        .unwrap();
    let start = std::time::Instant::now();
    while processes_running(&spinner) < 2 {
        assert!(start.elapsed().as_secs() < 10, "runs never started");
        std::thread::sleep(std::time::Duration::from_millis(20));
    }
    Command::new("kill").args(["-INT", &bench.id().to_string()]).status().unwrap();
    let status = bench.wait().unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(start.elapsed().as_secs() < 10);
    assert_eq!(processes_running(&spinner), 0);
    assert!(!d.join("out/results.csv").exists());
}
