use kinduct::lang::{interpret, load, pretty_print, InputTrace, Outcome, TypedProgram};
use kinduct::engine::{run_kinduction, EngineConfig};
use kinduct::lang::pretty::sloc;
use kinduct::oracle::{explore, OracleLimits, OracleOutcome};
use kinduct::reduce::{analyze_intervals, inject_value_assumes, move_variables, slice, Interval};
use kinduct::ts::extract;
use rand::{Rng, SeedableRng};

fn fixture(name: &str) -> TypedProgram {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/");
    load(&std::fs::read_to_string(format!("{dir}{name}.loopc")).unwrap()).unwrap()
}

fn oracle(tp: &TypedProgram) -> Option<u64> {
    let v = explore(&extract(tp).unwrap(), OracleLimits::default()).unwrap();
    match v.outcome {
        OracleOutcome::Unsafe { depth, .. } => Some(depth),
        _ => None,
    }
}

const F1_JUNK: &str = "global c: u8 = 0;
global junk: u32 = 0;

fn main() {
    while (true) {
        junk = junk + 7;
        if (c == 2) {
            c = 0;
        } else {
            c = c + 1;
        }
        assert(c != 4);
    }
}
";

#[test]
fn slice_drops_junk_global() {
    let tp = load(F1_JUNK).unwrap();
    let (out, report) = slice(&tp).unwrap();
    let text = pretty_print(&out.source);
    assert!(!text.contains("junk"), "{text}");
    assert_eq!(text, pretty_print(&fixture("f1_count_mod3").source));
    assert_eq!(report.removed, 2);
    assert!(report.sloc_after < report.sloc_before);
}

#[test]
fn slice_leaves_minimal_program_alone() {
    let tp = fixture("f4_masked");
    let (out, report) = slice(&tp).unwrap();
    assert_eq!(pretty_print(&out.source), pretty_print(&tp.source));
    assert_eq!(report.removed, 0);
    assert_eq!(report.sloc_before, report.sloc_after);
}

#[test]
fn slice_is_idempotent_and_keeps_control_dependences() {
    let src = "global a: u8 = 0;
global b: u8 = 0;
global t: u8 = 0;
global arr: [u8; 4] = [0; 4];

fn bump() {
    t = t + 1;
}

fn check(v: u8) {
    assert(v != 200);
}

fn main() {
    let i: u8 = 0;
    while (true) {
        b = nondet_u8();
        bump();
        if (b > 10) {
            a = a + 1;
            t = 0;
        }
        arr[i & 3] = a;
        i = i + 1;
        check(arr[0]);
    }
}
";
    let tp = load(src).unwrap();
    let (once, r1) = slice(&tp).unwrap();
    let text = pretty_print(&once.source);
    assert!(text.contains("if (b > 10)"), "{text}");
    assert!(!text.contains("bump"), "{text}");
    assert!(text.contains("check(arr[0])"), "{text}");
    assert!(r1.removed > 0);
    let (twice, r2) = slice(&once).unwrap();
    assert_eq!(pretty_print(&twice.source), text);
    assert_eq!(r2.removed, 0);
}

#[test]
fn move_rejects_loop_carried_counter() {
    let tp = fixture("f1_count_mod3");
    let (out, report) = move_variables(&tp, &[]).unwrap();
    assert_eq!(report.moved, 0);
    assert_eq!(pretty_print(&out.source), pretty_print(&tp.source));
}

const SCRATCH: &str = "global c: u8 = 0;
global tmp: u8 = 0;
global h: u8 = 0;

fn helper(x: u8) -> u8 {
    h = x + 1;
    return h * 2;
}

fn main() {
    while (true) {
        tmp = nondet_u8();
        if (tmp > 100) {
            c = c + helper(tmp);
        }
        assert(c != 4);
    }
}
";

#[test]
fn move_turns_scratch_globals_into_locals() {
    let tp = load(SCRATCH).unwrap();
    let (out, report) = move_variables(&tp, &[]).unwrap();
    assert_eq!(report.moved, 2);
    let text = pretty_print(&out.source);
    assert!(text.contains("let tmp: u8 = 0;"), "{text}");
    assert!(text.contains("let h: u8 = 0;"), "{text}");
    assert!(!text.contains("global tmp"));

    let (kept, r) = move_variables(&tp, &["helper".to_string()]).unwrap();
    assert_eq!(r.moved, 1);
    assert!(pretty_print(&kept.source).contains("global h"));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let steps = (0..12)
            .map(|_| [("tmp".to_string(), rng.gen_range(0..256u64))].into_iter().collect())
            .collect();
        let trace = InputTrace::from_steps(steps);
        let a = interpret(&tp, &trace, 12).unwrap().outcome;
        let b = interpret(&out, &trace, 12).unwrap().outcome;
        assert_eq!(a, b);
    }
    let cfg = EngineConfig::default();
    let before = run_kinduction(&tp, &extract(&tp).unwrap(), &cfg);
    let after = run_kinduction(&out, &extract(&out).unwrap(), &cfg);
    assert_eq!(before.counterexample().map(|c| c.depth), Some(1));
    assert_eq!(after.counterexample().map(|c| c.depth), Some(1));
}

fn interval(tp: &TypedProgram, name: &str) -> Interval {
    analyze_intervals(tp)
        .unwrap()
        .into_iter()
        .find(|(n, _)| n == name)
        .unwrap()
        .1
}

#[test]
fn intervals_on_fixtures() {
    assert!(interval(&fixture("f1_count_mod3"), "c").contains(Interval::new(0, 2)));
    assert_eq!(interval(&fixture("f3_xor_input"), "x"), Interval::new(0, 255));
    let (out, report) = inject_value_assumes(&fixture("f3_xor_input")).unwrap();
    assert_eq!(report.injected, 0);
    assert_eq!(sloc(&out.source), report.sloc_before);
}

#[test]
fn saturating_counter_gets_upper_bound() {
    let src = "global c: u8 = 0;

fn main() {
    while (true) {
        if (c < 10) {
            c = c + 1;
        }
        assert(c != 20);
    }
}
";
    let tp = load(src).unwrap();
    assert_eq!(interval(&tp, "c"), Interval::new(0, 10));
    let (out, report) = inject_value_assumes(&tp).unwrap();
    assert_eq!(report.injected, 1);
    assert!(pretty_print(&out.source).contains("assume(c <= 10);"));
    assert_eq!(oracle(&tp), oracle(&out));
    let run = interpret(&out, &InputTrace::default(), 30).unwrap();
    assert_eq!(run.outcome, Outcome::RanToBound(30));
}

#[test]
fn signed_and_array_ranges() {
    let src = "global s: i8 = 3;
global n: i8 = -3;
global a: [u8; 2] = [1, 2];

fn main() {
    while (true) {
        if (s < 5) {
            s = s + 1;
        }
        if (n < 5) {
            n = n + 1;
        }
        a[1] = a[0] + 4;
        assert(s != 50);
    }
}
";
    let tp = load(src).unwrap();
    let (out, report) = inject_value_assumes(&tp).unwrap();
    let text = pretty_print(&out.source);
    assert!(text.contains("assume(3 <= s && s <= 5);"), "{text}");
    assert!(text.contains("assume(1 <= a[0] && a[0] <= 1);"), "{text}");
    assert!(text.contains("assume(2 <= a[1] && a[1] <= 5);"), "{text}");
    // Ranges that straddle zero are not representable over bit patterns.
    assert!(!text.contains("assume(-3"), "{text}");
    assert_eq!(report.injected, 3);
    let cfg = EngineConfig::default();
    assert!(run_kinduction(&tp, &extract(&tp).unwrap(), &cfg).is_true());
    assert!(run_kinduction(&out, &extract(&out).unwrap(), &cfg).is_true());
}
