//! One PASS/FAIL line per acceptance criterion. Every check runs even when
//! an earlier one fails; the test fails at the end if any line is FAIL.
//!
//! The lines go straight to stderr, so they show up without `--nocapture`.

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use kinduct::benchgen::{generate, Certification, GlobalCounts, GroundTruth, MetricsProfile, Mode, OpMix, PropertyMix};
use kinduct::cnf::gates::GateBuilder;
use kinduct::cnf::{build_bmc_formula, build_step_formula, word_value, Blaster, CnfFormula, Env};
use kinduct::corpus::{padded_program, small_program, SmallProgram, MAX_STATE_BITS};
use kinduct::engine::{run_bmc, run_kinduction, transform_step_program, EngineConfig, ProofMethod, Verdict, VerdictResult};
use kinduct::harness::{
    run_suite_with, score, summarize, to_csv, AdapterKind, BenchmarkRecord, Expected, InternalTool, Limits,
    ResultPatterns, RunOptions, RunResult, ScoreScheme, Task, ToolAdapter, WitnessValidation, REASON_OUT_OF_MEMORY,
    REASON_TIMEOUT,
};
use kinduct::lang::ast::BinOp;
use kinduct::lang::pretty::sloc;
use kinduct::lang::{load, ops, pretty_print, Scalar, TypedProgram};
use kinduct::oracle::{explore, OracleLimits, MAX_ORACLE_BITS};
use kinduct::reduce::{inject_value_assumes, move_variables, property_globals, slice_with};
use kinduct::sat::{solve, Budget, SatResult, Solver, SolverConfig};
use kinduct::ts::{build_system, extract, load_properties, PropertySpec, TransitionSystem};
use kinduct::witness::{emit, validate, validate_text, Validation, Witness, WitnessKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_kinduct");
const CORPUS: u64 = 500;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures"))
}

fn fixture(name: &str) -> (TypedProgram, Vec<PropertySpec>) {
    let dir = fixtures_dir();
    let tp = load(&std::fs::read_to_string(dir.join(format!("{name}.loopc"))).unwrap()).unwrap();
    let props = load_properties(&tp, &std::fs::read_to_string(dir.join(format!("{name}.prop"))).unwrap()).unwrap();
    (tp, props)
}

fn corpus() -> Vec<(SmallProgram, TypedProgram, TransitionSystem)> {
    (0..CORPUS)
        .map(|seed| {
            let p = small_program(seed);
            let tp = p.load();
            let ts = extract(&tp).unwrap();
            (p, tp, ts)
        })
        .collect()
}

fn is_sat(f: &CnfFormula) -> Result<bool, String> {
    match solve(f, &[], &Budget::unlimited()) {
        SatResult::Sat(_) => Ok(true),
        SatResult::Unsat => Ok(false),
        r => Err(format!("solver gave {r:?}")),
    }
}

fn oracle_equivalence(corpus: &[(SmallProgram, TypedProgram, TransitionSystem)]) -> Check {
    let start = Instant::now();
    let mut unsafe_count = 0;
    for (p, _, ts) in corpus {
        ensure!(ts.state_bits() <= MAX_STATE_BITS, "seed {} has {} state bits", p.seed, ts.state_bits());
        let limits = OracleLimits {
            max_depth: 8,
            ..OracleLimits::default()
        };
        let depth = explore(ts, limits).map_err(|e| e.to_string())?.violation_depth();
        unsafe_count += depth.is_some() as usize;
        for k in 0..=8u32 {
            let f = build_bmc_formula(ts, k).map_err(|e| e.to_string())?;
            let sat = is_sat(&f)?;
            ensure!(
                sat == depth.is_some_and(|d| d <= k as u64),
                "seed {} k={k}: formula {} but oracle depth {depth:?}",
                p.seed,
                if sat { "SAT" } else { "UNSAT" }
            );
        }
    }
    let el = start.elapsed();
    ensure!(el < Duration::from_secs(600), "took {el:?}");
    Ok(format!("{} systems, k 0..=8, {unsafe_count} unsafe, 0 mismatches, {el:.1?}", corpus.len()))
}

fn witness_round_trip(v: &Verdict, tp: &TypedProgram, props: &[PropertySpec]) -> Result<Witness, String> {
    let w = emit(v, tp, "acceptance").map_err(|e| e.to_string())?;
    match validate_text(&w.to_json(), tp, props, None).outcome {
        Validation::Correct => Ok(w),
        o => Err(format!("witness validated {o:?}")),
    }
}

fn kinduction_soundness(corpus: &[(SmallProgram, TypedProgram, TransitionSystem)]) -> Check {
    let cfg = EngineConfig {
        max_k: 16,
        ..EngineConfig::default()
    };
    let (mut proved, mut refuted) = (0, 0);
    for (p, tp, ts) in corpus {
        let truth = explore(ts, OracleLimits::default()).map_err(|e| e.to_string())?;
        let v = run_kinduction(tp, ts, &cfg);
        match &v.result {
            VerdictResult::True { .. } => {
                ensure!(truth.is_safe(), "seed {}: proved but oracle says {:?}", p.seed, truth.outcome);
                proved += 1;
            }
            VerdictResult::False(cex) => {
                ensure!(
                    truth.violation_depth() == Some(cex.depth),
                    "seed {}: refuted at {} but oracle says {:?}",
                    p.seed,
                    cex.depth,
                    truth.violation_depth()
                );
                refuted += 1;
            }
            VerdictResult::Unknown(_) => {}
        }
    }

    let (f1, f1p) = fixture("f1_count_mod3");
    let f1ts = build_system(&f1, &f1p).unwrap();
    let v = run_kinduction(&f1, &f1ts, &EngineConfig::default());
    ensure!(
        v.result == VerdictResult::True { k: 2, method: ProofMethod::KInduction },
        "F1 gave {:?}",
        v.result
    );
    ensure!(is_sat(&build_step_formula(&f1ts, 1).unwrap())?, "F1 step case UNSAT at k=1");
    ensure!(!is_sat(&build_step_formula(&f1ts, 2).unwrap())?, "F1 step case SAT at k=2");
    let (f4, f4p) = fixture("f4_masked");
    let v = run_kinduction(&f4, &build_system(&f4, &f4p).unwrap(), &EngineConfig::default());
    ensure!(
        v.result == VerdictResult::True { k: 1, method: ProofMethod::KInduction },
        "F4 gave {:?}",
        v.result
    );
    for name in ["f2_count_bug", "f3_xor_input"] {
        let (tp, props) = fixture(name);
        let v = run_kinduction(&tp, &build_system(&tp, &props).unwrap(), &EngineConfig::default());
        ensure!(v.is_false(), "{name} gave {:?}", v.result);
        witness_round_trip(&v, &tp, &props).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!(
        "{proved} proved, {refuted} refuted, 0 contradictions; F1 k=2 (step SAT at 1), F4 k=1, F2/F3 witnesses Correct"
    ))
}

fn goldens() -> Check {
    let (f1, _) = fixture("f1_count_mod3");
    for k in [1, 3] {
        let got = pretty_print(&transform_step_program(&f1, k).map_err(|e| e.to_string())?.source);
        let want = std::fs::read_to_string(fixtures_dir().join(format!("golden/f1_step_k{k}.loopc"))).unwrap();
        ensure!(got == want, "k={k} differs:\n{got}");
    }
    Ok("F1 step programs for k=1 and k=3 match".into())
}

fn bits(w: &[i32], v: u64) -> impl Iterator<Item = i32> + '_ {
    w.iter().enumerate().map(move |(i, &l)| if (v >> i) & 1 == 1 { l } else { -l })
}

const U8_OPS: [BinOp; 16] = [
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
    BinOp::Div,
    BinOp::Rem,
    BinOp::BitAnd,
    BinOp::BitOr,
    BinOp::BitXor,
    BinOp::Shl,
    BinOp::Shr,
    BinOp::Eq,
    BinOp::Ne,
    BinOp::Lt,
    BinOp::Le,
    BinOp::Gt,
    BinOp::Ge,
];

fn bit_blast_fidelity() -> Check {
    let start = Instant::now();
    for op in U8_OPS {
        let cmp = matches!(op, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge);
        let rty = if cmp { "bool" } else { "u8" };
        let rinit = if cmp { "false" } else { "0" };
        let src = format!(
            "global r: {rty} = {rinit};\n\nfn main() {{\n    while (true) {{\n        let a: u8 = nondet_u8();\n        let b: u8 = nondet_u8();\n        r = a {} b;\n    }}\n}}\n",
            op.symbol()
        );
        let ts = extract(&load(&src).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let find = |n: &str| ts.inputs.iter().position(|v| v.name == n);
        let (Some(ia), Some(ib)) = (find("a"), find("b")) else {
            return Err(format!("inputs {:?}", ts.inputs.iter().map(|v| &v.name).collect::<Vec<_>>()));
        };
        let mut g = GateBuilder::new();
        let state: Vec<_> = ts.state_vars.iter().map(|v| g.fresh_word(v.width)).collect();
        let input: Vec<_> = ts.inputs.iter().map(|v| g.fresh_word(v.width())).collect();
        let init_input: Vec<_> = ts.init_inputs.iter().map(|v| g.fresh_word(v.width())).collect();
        let env = Env {
            state: &state,
            input: &input,
            init_input: &init_input,
        };
        let r = ts.state_index("r").ok_or("no state r")?;
        let out = Blaster::new(&ts.store).blast(&mut g, &env, ts.next[r]);
        let mut solver = Solver::new(g.num_vars, SolverConfig::default());
        for c in &g.clauses {
            solver.add_clause(c);
        }
        // Division by zero reads a fresh input; pin it to the interpreter's default of 0.
        let mut fixed = Vec::new();
        for (i, v) in ts.inputs.iter().enumerate() {
            if v.name.starts_with("__div0") {
                fixed.extend(input[i].iter().map(|&l| -l));
            }
        }
        for a in 0..256u64 {
            for b in 0..256u64 {
                let mut assume = fixed.clone();
                assume.extend(bits(&input[ia], a));
                assume.extend(bits(&input[ib], b));
                let SatResult::Sat(model) = solver.solve(&assume, &Budget::unlimited()) else {
                    return Err(format!("{a} {} {b}: no model", op.symbol()));
                };
                let got = word_value(&model, &out);
                let (want, _) = ops::binary(op, Scalar::U8, a, b);
                ensure!(got == want, "{a} {} {b}: circuit {got}, interpreter {want}", op.symbol());
            }
        }
    }
    let el = start.elapsed();
    ensure!(el < Duration::from_secs(120), "took {el:?}");
    Ok(format!("{} operators x 65536 pairs, {el:.1?}", U8_OPS.len()))
}

fn sat_core() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5A7);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..200 {
        let n = 20u32;
        let m = (n as f64 * rng.gen_range(3.0..=5.0)).round() as usize;
        let clauses: Vec<Vec<i32>> = (0..m)
            .map(|_| {
                let mut vars = rand::seq::index::sample(&mut rng, n as usize, 3).into_vec();
                vars.sort();
                vars.iter().map(|&v| if rng.gen_bool(0.5) { v as i32 + 1 } else { -(v as i32 + 1) }).collect()
            })
            .collect();
        let masks: Vec<(u32, u32)> = clauses
            .iter()
            .map(|c| {
                c.iter().fold((0, 0), |(p, q), &l| {
                    let bit = 1u32 << (l.unsigned_abs() - 1);
                    if l > 0 {
                        (p | bit, q)
                    } else {
                        (p, q | bit)
                    }
                })
            })
            .collect();
        let brute = (0..1u32 << n).any(|a| masks.iter().all(|&(p, q)| a & p != 0 || !a & q != 0));
        let f = CnfFormula::from_clauses(n, clauses.clone());
        match solve(&f, &[], &Budget::unlimited()) {
            SatResult::Sat(model) => {
                ensure!(brute, "formula {i}: solver SAT, brute force UNSAT");
                let ok = clauses.iter().all(|c| c.iter().any(|&l| model[l.unsigned_abs() as usize] == (l > 0)));
                ensure!(ok, "formula {i}: model violates a clause");
                sat += 1;
            }
            SatResult::Unsat => {
                ensure!(!brute, "formula {i}: solver UNSAT, brute force SAT");
                unsat += 1;
            }
            r => return Err(format!("formula {i}: {r:?}")),
        }
    }
    Ok(format!("200 formulas ({sat} SAT, {unsat} UNSAT), all models verified"))
}

fn rec(task: &str, tool: &str, result: RunResult, wv: WitnessValidation) -> BenchmarkRecord {
    BenchmarkRecord {
        task: task.into(),
        tool: tool.into(),
        result,
        reason: String::new(),
        cpu_time_s: 1.0,
        mem_peak_mb: 1.0,
        solver_time_s: None,
        depth: None,
        witness_validation: wv,
        wall_time_s: 1.0,
    }
}

fn scoring() -> Check {
    use RunResult::{False as F, True as T, Unknown as U};
    use WitnessValidation::{Correct, Invalid, NotRun, Unknown as WU};
    let table = [
        (F, Correct, 1),
        (T, Correct, 2),
        (T, WU, 1),
        (T, NotRun, 1),
        (F, WU, 0),
        (F, NotRun, 0),
        (F, Invalid, 0),
        (T, Invalid, 0),
        (U, NotRun, 0),
    ];
    for (r, w, pts) in table {
        let got = score(&rec("t", "x", r, w), &ScoreScheme::Base);
        ensure!(got == Ok(pts), "{r:?}/{w:?}: {got:?}, want {pts}");
    }
    let truth: BTreeMap<String, Expected> =
        [("safe".to_string(), Expected::True), ("bug".to_string(), Expected::False)].into();
    let s = ScoreScheme::Punished(truth);
    ensure!(score(&rec("safe", "x", F, Correct), &s) == Ok(-16), "wrong False not -16");
    ensure!(score(&rec("bug", "x", T, Correct), &s) == Ok(-32), "wrong True not -32");
    ensure!(score(&rec("bug", "x", F, Correct), &s) == Ok(1), "right False not 1");
    Ok("base table exact; punished -16/-32".into())
}

fn summary() -> Check {
    let mut rs = Vec::new();
    for (tool, counts) in [("a", [59, 23, 23]), ("b", [41, 20, 13])] {
        for (n, r) in counts.into_iter().zip([RunResult::True, RunResult::False, RunResult::Unknown]) {
            for i in 0..n {
                rs.push(rec(&format!("{r:?}{i}"), tool, r, WitnessValidation::NotRun));
            }
        }
    }
    let s = summarize(&rs);
    let got = |t: &str| (s[t].true_pct, s[t].false_pct, s[t].unknown_pct);
    ensure!(got("a") == (56.2, 21.9, 21.9), "105 tasks: {:?}", got("a"));
    ensure!(got("b") == (55.4, 27.0, 17.6), "74 tasks: {:?}", got("b"));
    Ok("56.2/21.9/21.9 of 105, 55.4/27.0/17.6 of 74".into())
}

fn mutate(w: &Witness) -> Witness {
    let mut m = w.clone();
    match &mut m.kind {
        WitnessKind::Violation {
            claimed_error_iteration, ..
        } => *claimed_error_iteration += 1,
        WitnessKind::Proof { k_proved, .. } => *k_proved -= 1,
    }
    m
}

fn witness_pipeline(corpus: &[(SmallProgram, TypedProgram, TransitionSystem)]) -> Check {
    let cfg = EngineConfig {
        max_k: 16,
        ..EngineConfig::default()
    };
    let mut definite = 0;
    for (p, tp, ts) in corpus {
        for (engine, v) in [("bmc", run_bmc(ts, &cfg)), ("kind", run_kinduction(tp, ts, &cfg))] {
            if matches!(v.result, VerdictResult::Unknown(_)) {
                continue;
            }
            definite += 1;
            let w = witness_round_trip(&v, tp, &[]).map_err(|e| format!("seed {} {engine}: {e}", p.seed))?;
            let mutated = validate(&mutate(&w), tp, &[], None).outcome;
            ensure!(
                matches!(mutated, Validation::Unknown(_)),
                "seed {} {engine}: mutated witness gave {mutated:?}",
                p.seed
            );
            let text = w.to_json();
            let truncated = validate_text(&text[..text.len() / 2], tp, &[], None).outcome;
            ensure!(
                matches!(truncated, Validation::Invalid(_)),
                "seed {} {engine}: truncated witness gave {truncated:?}",
                p.seed
            );
        }
    }
    Ok(format!("{definite}/{definite} definite verdicts Correct; every mutation Unknown, every truncation Invalid"))
}

fn oracle_depth(tp: &TypedProgram) -> Result<Option<u64>, String> {
    let ts = extract(tp).map_err(|e| e.to_string())?;
    Ok(explore(&ts, OracleLimits::default()).map_err(|e| e.to_string())?.violation_depth())
}

fn reduction_soundness() -> Check {
    let mut removed = 0.0;
    for seed in 0..200 {
        let p = padded_program(seed, 0.3);
        ensure!(p.irrelevant_fraction >= 0.3, "seed {seed}: only {:.2} irrelevant", p.irrelevant_fraction);
        let tp = p.padded.load();
        let want = oracle_depth(&tp)?;
        let keep = property_globals(&tp, &[]);
        let (sliced, _) = slice_with(&tp, &keep).map_err(|e| e.to_string())?;
        let (moved, _) = move_variables(&tp, &[]).map_err(|e| e.to_string())?;
        let (assumed, _) = inject_value_assumes(&tp).map_err(|e| e.to_string())?;
        for (name, r) in [("slice", &sliced), ("move_variables", &moved), ("inject_value_assumes", &assumed)] {
            let got = oracle_depth(r)?;
            ensure!(got == want, "seed {seed} {name}: oracle {got:?}, before {want:?}");
        }
        let (before, after) = (sloc(&tp.source), sloc(&sliced.source));
        ensure!(after < before, "seed {seed}: slicing kept {after} of {before} SLOC");
        removed += 1.0 - after as f64 / before as f64;
    }
    Ok(format!("200 programs, verdicts preserved, mean SLOC removed by slicing {:.0}%", removed / 2.0))
}

fn external(id: &str, argv: &[&str]) -> ToolAdapter {
    ToolAdapter {
        id: id.into(),
        kind: AdapterKind::External {
            command: argv.iter().map(|s| s.to_string()).collect(),
            patterns: ResultPatterns {
                true_: "^TRUE".into(),
                false_: "^FALSE".into(),
                unknown: r"^UNKNOWN\((.*)\)".into(),
            },
            witness: None,
        },
    }
}

fn task(id: &str, name: &str) -> Task {
    Task {
        id: id.into(),
        program: fixtures_dir().join(format!("{name}.loopc")),
        property: fixtures_dir().join(format!("{name}.prop")),
        expected: None,
    }
}

fn harness_limits() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = RunOptions { worker: BIN.into() };
    let base = Limits {
        cpu_s: 5.0,
        mem_mb: 1024,
        workers: 2,
        cores_per_task: 1,
        ..Limits::default()
    };
    let spin = run_suite_with(&[task("F1", "f1_count_mod3")], &[external("spin", &[BIN, "stress", "spin"])], &base, &dir.path().join("spin"), &opts)
        .map_err(|e| e.to_string())?;
    let s = &spin[0];
    ensure!(s.result == RunResult::Unknown && s.reason == REASON_TIMEOUT, "busy loop: {:?} {}", s.result, s.reason);
    ensure!(s.cpu_time_s <= base.cpu_s + 2.0, "busy loop recorded {} s", s.cpu_time_s);
    ensure!(s.wall_time_s <= base.cpu_s + 2.0, "busy loop ran {} s wall", s.wall_time_s);

    let cap = Limits { mem_mb: 256, ..base.clone() };
    let bomb = run_suite_with(&[task("F1", "f1_count_mod3")], &[external("bomb", &[BIN, "stress", "alloc"])], &cap, &dir.path().join("bomb"), &opts)
        .map_err(|e| e.to_string())?;
    let b = &bomb[0];
    ensure!(b.reason == REASON_OUT_OF_MEMORY, "allocation bomb: {:?} {}", b.result, b.reason);
    ensure!(b.mem_peak_mb <= 257.0, "allocation bomb peaked at {} MB", b.mem_peak_mb);

    // Measured columns are quantized to the configured resolution; a coarse
    // one makes reruns comparable byte for byte.
    let coarse = Limits {
        time_resolution_s: 1.0,
        mem_resolution_mb: 256.0,
        workers: 4,
        ..base
    };
    let tasks = [task("F1", "f1_count_mod3"), task("F2", "f2_count_bug"), task("F3", "f3_xor_input"), task("F4", "f4_masked")];
    let tools = [
        ToolAdapter { id: "kind".into(), kind: AdapterKind::Internal { method: InternalTool::Kind } },
        ToolAdapter { id: "oracle".into(), kind: AdapterKind::Internal { method: InternalTool::Oracle } },
    ];
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let recs = run_suite_with(&tasks, &tools, &coarse, &out, &opts).map_err(|e| e.to_string())?;
        let text = std::fs::read(out.join("results.csv")).map_err(|e| e.to_string())?;
        ensure!(text == to_csv(&recs, &coarse).into_bytes(), "results.csv differs from the records");
        csvs.push(text);
    }
    ensure!(csvs[0] == csvs[1], "results.csv differs between identical runs");
    Ok(format!(
        "busy loop Timeout at {:.2} s cpu (limit 5), bomb OutOfMemory at {:.0} MB (cap 256), CSV identical",
        s.cpu_time_s, b.mem_peak_mb
    ))
}

fn within(measured: usize, target: usize) -> bool {
    (measured as f64 - target as f64).abs() <= 0.1 * target as f64
}

fn generator() -> Check {
    let table_profile = MetricsProfile {
        sloc: 100,
        globals: GlobalCounts {
            u8: 8,
            fx: 2,
            ..GlobalCounts::default()
        },
        ops: OpMix {
            add_sub: 10,
            mul_div: 5,
            bitwise: 5,
            array_accesses: 0,
        },
        properties: PropertyMix {
            invariant: 1,
            bounded_response: 0,
        },
        ..MetricsProfile::default()
    };
    let small = MetricsProfile {
        sloc: 30,
        globals: GlobalCounts {
            u8: 2,
            ..GlobalCounts::default()
        },
        ops: OpMix {
            add_sub: 4,
            bitwise: 2,
            ..OpMix::default()
        },
        properties: PropertyMix {
            invariant: 2,
            bounded_response: 0,
        },
        ..MetricsProfile::default()
    };
    let (mut tasks, mut certified) = (0, 0);
    for (pi, profile) in [table_profile, small].iter().enumerate() {
        for seed in 0..20u64 {
            let mode = match seed % 3 {
                0 => Mode::Safe,
                1 => Mode::Bug { depth: 1 + seed % 5 },
                _ => Mode::Open,
            };
            let t = generate(profile, seed, mode).map_err(|e| format!("profile {pi} seed {seed}: {e}"))?;
            tasks += 1;
            let again = generate(profile, seed, mode).unwrap();
            ensure!(again.program == t.program && again.to_json() == t.to_json(), "profile {pi} seed {seed} not stable");
            let m = &t.measured;
            for (what, got, want) in [
                ("sloc", m.sloc, profile.sloc),
                ("add_sub", m.ops.add_sub, profile.ops.add_sub),
                ("mul_div", m.ops.mul_div, profile.ops.mul_div),
                ("bitwise", m.ops.bitwise, profile.ops.bitwise),
            ] {
                ensure!(within(got, want), "profile {pi} seed {seed}: {what} {got}, target {want}");
            }
            let tp = load(&t.program).map_err(|e| e.to_string())?;
            for (i, truth) in t.ground_truth.iter().enumerate() {
                if *truth == GroundTruth::Unknown {
                    continue;
                }
                let props = load_properties(&tp, &t.property_file(i)).map_err(|e| e.to_string())?;
                let (sliced, _) = slice_with(&tp, &property_globals(&tp, &props)).map_err(|e| e.to_string())?;
                let props = load_properties(&sliced, &t.property_file(i)).map_err(|e| e.to_string())?;
                let ts = build_system(&sliced, &props).map_err(|e| e.to_string())?;
                if ts.state_bits() + ts.input_bits().max(ts.init_input_bits()) > MAX_ORACLE_BITS {
                    continue;
                }
                ensure!(
                    t.certification[i] == Certification::Oracle,
                    "profile {pi} seed {seed} property {i}: fits the oracle but certified {:?}",
                    t.certification[i]
                );
                let v = explore(&ts, OracleLimits::default()).map_err(|e| e.to_string())?;
                let agrees = match truth {
                    GroundTruth::True => v.is_safe(),
                    GroundTruth::False { depth } => v.violation_depth() == Some(*depth),
                    GroundTruth::Unknown => true,
                };
                ensure!(agrees, "profile {pi} seed {seed} property {i}: claimed {truth:?}, oracle {:?}", v.outcome);
                certified += 1;
            }
        }
    }
    ensure!(certified > 0, "no planted truth fit the oracle");
    Ok(format!("{tasks} tasks on target and seed-stable; {certified} planted truths oracle-certified"))
}

fn run(name: &str, check: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let el = start.elapsed();
    let line = match &r {
        Ok(detail) => format!("PASS {name}: {detail} [{el:.1?}]"),
        Err(why) => format!("FAIL {name}: {why} [{el:.1?}]"),
    };
    // Test output capture only covers the print macros.
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    r.is_ok()
}

#[test]
fn acceptance() {
    let corpus = corpus();
    let results = [
        run("oracle equivalence", || oracle_equivalence(&corpus)),
        run("k-induction soundness", || kinduction_soundness(&corpus)),
        run("transformation goldens", goldens),
        run("bit-blast fidelity", bit_blast_fidelity),
        run("sat core", sat_core),
        run("scoring", scoring),
        run("distribution summary", summary),
        run("witness pipeline", || witness_pipeline(&corpus)),
        run("reduction soundness", reduction_soundness),
        run("harness limits", harness_limits),
        run("generator", generator),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
