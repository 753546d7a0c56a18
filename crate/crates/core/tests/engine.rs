use kinduct::engine::{
    run_bmc, run_kinduction, transform_step_program, EngineConfig, ProofMethod, Schedule, UnknownReason, VerdictResult,
};
use kinduct::lang::{load, pretty_print, TypedProgram};
use kinduct::oracle::{explore, OracleLimits};
use kinduct::ts::{extract, TransitionSystem};
use std::time::{Duration, Instant};

fn fixture(name: &str) -> (TypedProgram, TransitionSystem) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/");
    let src = std::fs::read_to_string(format!("{dir}{name}.loopc")).unwrap();
    let tp = load(&src).unwrap();
    let ts = extract(&tp).unwrap();
    (tp, ts)
}

fn golden(name: &str) -> String {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/golden/");
    std::fs::read_to_string(format!("{dir}{name}")).unwrap()
}

#[test]
fn kinduction_on_fixtures() {
    for schedule in [Schedule::Lockstep, Schedule::Parallel] {
        let cfg = EngineConfig {
            schedule,
            ..EngineConfig::default()
        };
        let (tp, ts) = fixture("f1_count_mod3");
        assert_eq!(
            run_kinduction(&tp, &ts, &cfg).result,
            VerdictResult::True {
                k: 2,
                method: ProofMethod::KInduction
            }
        );
        let (tp, ts) = fixture("f4_masked");
        assert_eq!(
            run_kinduction(&tp, &ts, &cfg).result,
            VerdictResult::True {
                k: 1,
                method: ProofMethod::KInduction
            }
        );
        let (tp, ts) = fixture("f2_count_bug");
        let v = run_kinduction(&tp, &ts, &cfg);
        assert_eq!(v.counterexample().unwrap().depth, 2);
        let (tp, ts) = fixture("f3_xor_input");
        let v = run_kinduction(&tp, &ts, &cfg);
        let cex = v.counterexample().unwrap();
        assert_eq!(cex.depth, 1);
        assert_eq!(cex.steps[0]["in"], 255);
    }
}

#[test]
fn bmc_on_fixtures() {
    let cfg = EngineConfig::default();
    let (_, ts) = fixture("f2_count_bug");
    let v = run_bmc(&ts, &cfg);
    let cex = v.counterexample().unwrap();
    assert_eq!(cex.depth, 2);
    assert_eq!(v.stats.reached_depth, 2);
    let cs: Vec<u64> = cex.states.iter().map(|s| s[0]).collect();
    assert_eq!(cs, vec![0, 1, 2]);

    let (_, ts) = fixture("f1_count_mod3");
    let v = run_bmc(
        &ts,
        &EngineConfig {
            max_k: 8,
            ..EngineConfig::default()
        },
    );
    assert_eq!(v.result, VerdictResult::Unknown(UnknownReason::MaxDepthReached));
    assert_eq!(v.stats.reached_depth, 8);
}

#[test]
fn oracle_on_fixtures() {
    let (_, ts) = fixture("f1_count_mod3");
    let v = explore(&ts, OracleLimits::default()).unwrap();
    assert!(v.is_safe());
    assert_eq!(v.explored, 3);
    let (_, ts) = fixture("f2_count_bug");
    assert_eq!(explore(&ts, OracleLimits::default()).unwrap().violation_depth(), Some(2));
    let (_, ts) = fixture("f3_xor_input");
    assert_eq!(explore(&ts, OracleLimits::default()).unwrap().violation_depth(), Some(1));
}

#[test]
fn timeout_becomes_bounded_proof() {
    // A 32-bit counter that is safe but far from inductive.
    let src = "global c: u32 = 0;\nglobal d: u32 = 0;\nfn main() {\n    while (true) {\n        c = c + 1;\n        d = d + c * c;\n        assert(d != 7);\n    }\n}\n";
    let tp = load(src).unwrap();
    let ts = extract(&tp).unwrap();
    let cfg = EngineConfig {
        budget: kinduct::engine::ResourceBudget {
            cpu_seconds: 1.0,
            mem_mb: 18432,
        },
        ..EngineConfig::default()
    };
    let t = Instant::now();
    let v = run_kinduction(&tp, &ts, &cfg);
    assert!(t.elapsed() < Duration::from_secs(3));
    assert!(
        matches!(v.result, VerdictResult::Unknown(UnknownReason::BoundedProof(_))),
        "{:?}",
        v.result
    );
}

#[test]
fn transformation_goldens() {
    let (tp, _) = fixture("f1_count_mod3");
    for k in [1, 3] {
        let t = transform_step_program(&tp, k).unwrap();
        assert_eq!(pretty_print(&t.source), golden(&format!("f1_step_k{k}.loopc")), "k={k}");
    }
    let bmc_only = load("global c: u8 = 0;\nfn main() { c = 1; }").unwrap();
    assert!(transform_step_program(&bmc_only, 1).is_err());
}
