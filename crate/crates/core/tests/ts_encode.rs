use kinduct::cnf::{build_bmc_formula, build_step_formula, decode};
use kinduct::lang::{load, TypedProgram};
use kinduct::sat::{solve, Budget, SatResult};
use kinduct::ts::{compile_property, extract, load_properties, TransitionSystem};

fn fixture(name: &str) -> (TypedProgram, TransitionSystem) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/");
    let src = std::fs::read_to_string(format!("{dir}{name}.loopc")).unwrap();
    let tp = load(&src).unwrap();
    let ts = extract(&tp).unwrap();
    (tp, ts)
}

fn sat(f: &kinduct::cnf::CnfFormula) -> Option<Vec<bool>> {
    match solve(f, &[], &Budget::unlimited()) {
        SatResult::Sat(m) => Some(m),
        SatResult::Unsat => None,
        r => panic!("{r:?}"),
    }
}

#[test]
fn f1_system_shape_and_simulation() {
    let (_, ts) = fixture("f1_count_mod3");
    assert_eq!(ts.state_vars[0].name, "c");
    assert_eq!(ts.state_vars[0].width, 8);
    assert!(ts.inputs.is_empty());
    let mut sim = ts.simulator();
    let (mut s, ok) = sim.init(&[]);
    assert!(ok);
    assert_eq!(s[0], 0);
    let mut seen = vec![s[0]];
    for _ in 0..4 {
        s = sim.step(&s, &[]).0;
        seen.push(s[0]);
        assert!(sim.property(&s));
    }
    assert_eq!(seen, vec![0, 1, 2, 0, 1]);
    let mut bad = s.clone();
    bad[0] = 3;
    let after = sim.step(&bad, &[]).0;
    assert_eq!(after[0], 4);
    assert!(!sim.property(&after));
}

#[test]
fn f3_has_one_byte_input() {
    let (_, ts) = fixture("f3_xor_input");
    assert_eq!(ts.inputs.len(), 1);
    assert_eq!(ts.inputs[0].name, "in");
    assert_eq!(ts.input_bits(), 8);
}

#[test]
fn f1_step_case_fails_at_one_and_holds_at_two() {
    let (_, ts) = fixture("f1_count_mod3");
    let f = build_step_formula(&ts, 1).unwrap();
    let m = sat(&f).expect("step case at k=1 is satisfiable");
    let tr = decode(&f, &m);
    let c = ts.state_index("c").unwrap();
    assert_eq!(tr.states[0][c], 3);
    assert_eq!(tr.states[1][c], 4);
    assert!(sat(&build_step_formula(&ts, 2).unwrap()).is_none());
}

#[test]
fn f2_base_case_reaches_violation_at_two() {
    let (_, ts) = fixture("f2_count_bug");
    assert!(sat(&build_bmc_formula(&ts, 1).unwrap()).is_none());
    let f = build_bmc_formula(&ts, 2).unwrap();
    let m = sat(&f).expect("violation within two steps");
    let tr = decode(&f, &m);
    assert_eq!(tr.violation, Some(2));
    let c = ts.state_index("c").unwrap();
    let cs: Vec<u64> = tr.states.iter().map(|s| s[c]).collect();
    assert_eq!(cs, vec![0, 1, 2]);
}

#[test]
fn bounded_response_on_f1() {
    let (tp, ts) = fixture("f1_count_mod3");
    let safe = load_properties(&tp, "bounded_response c == 1 => c == 0 within 2;").unwrap();
    let ts_safe = compile_property(&safe[0], ts.clone()).unwrap();
    for k in 0..8 {
        assert!(sat(&build_bmc_formula(&ts_safe, k).unwrap()).is_none(), "k={k}");
    }
    let unsafe_ = load_properties(&tp, "bounded_response c == 1 => c == 4 within 3;").unwrap();
    let ts_bad = compile_property(&unsafe_[0], ts).unwrap();
    assert!(sat(&build_bmc_formula(&ts_bad, 4).unwrap()).is_some());
    assert!(sat(&build_bmc_formula(&ts_bad, 3).unwrap()).is_none());
}

#[test]
fn inner_for_is_unrolled() {
    let src = "global s: u8 = 0;\nfn main() {\n    while (true) {\n        for i in 0..3 {\n            s = s + 1;\n        }\n        assert(s != 7);\n    }\n}\n";
    let tp = load(src).unwrap();
    let ts = extract(&tp).unwrap();
    let mut sim = ts.simulator();
    let (s0, _) = sim.init(&[]);
    let (s1, _) = sim.step(&s0, &[]);
    assert_eq!(s1[0], 3);
}
