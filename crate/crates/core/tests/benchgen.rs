use kinduct::benchgen::{
    generate, measure, Certification, GenError, GlobalCounts, GroundTruth, MetricsProfile, Mode, OpMix, PropertyMix,
};
use kinduct::lang::{load, validate_shape};
use kinduct::oracle::{explore, OracleLimits};
use kinduct::ts::{build_system, load_properties};

fn within(measured: usize, target: usize) -> bool {
    (measured as f64 - target as f64).abs() <= 0.1 * target as f64
}

fn spec_profile() -> MetricsProfile {
    MetricsProfile {
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
    }
}

#[test]
fn zero_profile_is_a_skeleton() {
    let t = generate(&MetricsProfile::default(), 0, Mode::Safe).unwrap();
    assert_eq!(t.program, "fn main() {\n    while (true) {\n    }\n}\n");
    assert_eq!(t.properties, vec!["invariant true;".to_string()]);
    assert_eq!(t.ground_truth, vec![GroundTruth::True]);
    assert_eq!(t.certification, vec![Certification::Oracle]);
    assert_eq!(t.measured.cyclomatic, 1);
}

#[test]
fn spec_profile_hits_targets_and_is_seed_stable() {
    let p = spec_profile();
    let t = generate(&p, 42, Mode::Safe).unwrap();
    let m = t.measured;
    assert!(within(m.sloc, 100), "sloc {}", m.sloc);
    assert!(within(m.ops.add_sub, 10), "{:?}", m.ops);
    assert!(within(m.ops.mul_div, 5), "{:?}", m.ops);
    assert!(within(m.ops.bitwise, 5), "{:?}", m.ops);
    assert_eq!(m.globals.u8, 8);
    assert_eq!(m.globals.fx, 2);
    assert_eq!(measure(&load(&t.program).unwrap()), m);
    let again = generate(&p, 42, Mode::Safe).unwrap();
    assert_eq!(again.program, t.program);
    assert_eq!(again.to_json(), t.to_json());
    assert_ne!(generate(&p, 43, Mode::Safe).unwrap().program, t.program);
}

#[test]
fn planted_bug_is_certified_at_its_depth() {
    let p = MetricsProfile {
        sloc: 20,
        globals: GlobalCounts {
            u8: 2,
            ..GlobalCounts::default()
        },
        ops: OpMix {
            add_sub: 3,
            bitwise: 1,
            ..OpMix::default()
        },
        ..MetricsProfile::default()
    };
    let t = generate(&p, 7, Mode::Bug { depth: 3 }).unwrap();
    assert_eq!(t.ground_truth[0], GroundTruth::False { depth: 3 });
    assert_eq!(t.certification[0], Certification::Oracle);
    // The whole program fits the oracle too.
    let tp = load(&t.program).unwrap();
    let props = load_properties(&tp, &t.property_file(0)).unwrap();
    let v = explore(&build_system(&tp, &props).unwrap(), OracleLimits::default()).unwrap();
    assert_eq!(v.violation_depth(), Some(3));
}

#[test]
fn measure_examples() {
    let f1 = load(&std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/f1_count_mod3.loopc")).unwrap())
        .unwrap();
    let m = measure(&f1);
    assert_eq!(m.cyclomatic, 2);
    assert_eq!(m.sloc, 11);
    assert_eq!(m.ops.add_sub, 1);
    assert_eq!(m.globals.u8, 1);
    let straight = load("global x: u8 = 0;\nfn main() {\n    x = 1;\n    x = x + 2;\n}\n").unwrap();
    assert_eq!(measure(&straight).cyclomatic, 1);
}

#[test]
fn infeasible_profiles_are_rejected() {
    let p = MetricsProfile {
        sloc: 10,
        ops: OpMix {
            add_sub: 200,
            ..OpMix::default()
        },
        ..MetricsProfile::default()
    };
    assert!(matches!(generate(&p, 1, Mode::Safe), Err(GenError::ProfileInfeasible(_))));
    let no_arrays = MetricsProfile {
        ops: OpMix {
            array_accesses: 3,
            ..OpMix::default()
        },
        ..MetricsProfile::default()
    };
    assert!(matches!(generate(&no_arrays, 1, Mode::Safe), Err(GenError::ProfileInfeasible(_))));
    assert!(matches!(
        generate(&MetricsProfile::default(), 1, Mode::Bug { depth: 2 }),
        Err(GenError::ProfileInfeasible(_))
    ));
}

#[test]
fn varied_profiles_are_well_formed_and_on_target() {
    for seed in 0..60u64 {
        let p = MetricsProfile {
            sloc: 80 + (seed as usize * 7) % 160,
            globals: GlobalCounts {
                u8: 2 + seed as usize % 6,
                fx: seed as usize % 3,
                arrays: seed as usize % 2,
                array_len: [3, 9],
            },
            constants: seed as usize % 4,
            ops: OpMix {
                add_sub: 5 + seed as usize % 20,
                mul_div: seed as usize % 9,
                bitwise: 2 + seed as usize % 11,
                array_accesses: if seed % 2 == 1 { 4 + seed as usize % 5 } else { 0 },
            },
            cyclomatic: 1 + seed as usize % 9,
            properties: PropertyMix {
                invariant: 1 + seed as usize % 2,
                bounded_response: seed as usize % 2,
            },
        };
        let mode = match seed % 3 {
            0 => Mode::Safe,
            1 => Mode::Bug { depth: 1 + seed % 5 },
            _ => Mode::Open,
        };
        let t = generate(&p, seed, mode).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        let tp = load(&t.program).unwrap();
        assert!(validate_shape(&tp).is_ready());
        let m = t.measured;
        let ctx = format!("seed {seed}\n{:?}\n{:?}\n{}", p, m, t.program);
        assert!(within(m.sloc, p.sloc), "{ctx}");
        assert!(within(m.ops.add_sub, p.ops.add_sub), "{ctx}");
        assert!(within(m.ops.mul_div, p.ops.mul_div), "{ctx}");
        assert!(within(m.ops.bitwise, p.ops.bitwise), "{ctx}");
        assert!(within(m.ops.array_accesses, p.ops.array_accesses), "{ctx}");
        assert!(within(m.cyclomatic, p.cyclomatic), "{ctx}");
        assert_eq!(m.globals.u8, p.globals.u8, "{ctx}");
        assert_eq!(m.globals.fx, p.globals.fx, "{ctx}");
        assert_eq!(m.globals.arrays, p.globals.arrays, "{ctx}");
        assert_eq!(m.constants, p.constants, "{ctx}");
        for (truth, cert) in t.ground_truth.iter().zip(&t.certification) {
            if *truth != GroundTruth::Unknown {
                assert_ne!(*cert, Certification::None);
            }
        }
    }
}
