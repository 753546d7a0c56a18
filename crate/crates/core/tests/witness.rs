use kinduct::engine::{run_kinduction, EngineConfig, ProofMethod, UnknownReason, Verdict, VerdictResult};
use kinduct::lang::{load, TypedProgram};
use kinduct::ts::{build_system, load_properties, PropertySpec};
use kinduct::witness::{emit, validate, validate_text, Validation, Witness, WitnessError, WitnessKind};

fn fixture(name: &str) -> (TypedProgram, Vec<PropertySpec>) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/");
    let src = std::fs::read_to_string(format!("{dir}{name}.loopc")).unwrap();
    let prop = std::fs::read_to_string(format!("{dir}{name}.prop")).unwrap();
    let tp = load(&src).unwrap();
    let props = load_properties(&tp, &prop).unwrap();
    (tp, props)
}

fn verify(tp: &TypedProgram, props: &[PropertySpec]) -> Verdict {
    let ts = build_system(tp, props).unwrap();
    run_kinduction(tp, &ts, &EngineConfig::default())
}

#[test]
fn f2_violation_witness() {
    let (tp, props) = fixture("f2_count_bug");
    let w = emit(&verify(&tp, &props), &tp, "kinduct-kind").unwrap();
    match &w.kind {
        WitnessKind::Violation {
            initial_state,
            steps,
            claimed_error_iteration,
            ..
        } => {
            assert_eq!(initial_state["c"], 0);
            assert_eq!(steps.len(), 2);
            assert!(steps.iter().all(|s| s.is_empty()));
            assert_eq!(*claimed_error_iteration, 2);
        }
        k => panic!("{k:?}"),
    }
    let text = w.to_json();
    assert_eq!(Witness::parse(&text).unwrap(), w);
    assert_eq!(validate_text(&text, &tp, &props, None).outcome, Validation::Correct);

    let mut edited = w.clone();
    if let WitnessKind::Violation {
        claimed_error_iteration,
        ..
    } = &mut edited.kind
    {
        *claimed_error_iteration = 1;
    }
    assert!(matches!(validate(&edited, &tp, &props, None).outcome, Validation::Unknown(_)));

    let truncated = &text[..text.len() / 2];
    assert!(matches!(
        validate_text(truncated, &tp, &props, None).outcome,
        Validation::Invalid(_)
    ));
}

#[test]
fn f1_proof_witness() {
    let (tp, props) = fixture("f1_count_mod3");
    let w = emit(&verify(&tp, &props), &tp, "kinduct-kind").unwrap();
    assert_eq!(
        w.kind,
        WitnessKind::Proof {
            method: ProofMethod::KInduction,
            k_proved: 2
        }
    );
    assert_eq!(validate(&w, &tp, &props, None).outcome, Validation::Correct);
    let mut weak = w.clone();
    weak.kind = WitnessKind::Proof {
        method: ProofMethod::KInduction,
        k_proved: 1,
    };
    assert!(matches!(validate(&weak, &tp, &props, None).outcome, Validation::Unknown(_)));
}

#[test]
fn unknown_verdict_has_no_witness() {
    let (tp, _) = fixture("f1_count_mod3");
    let v = Verdict {
        result: VerdictResult::Unknown(UnknownReason::Timeout),
        stats: Default::default(),
    };
    assert_eq!(emit(&v, &tp, "x"), Err(WitnessError::NotDefinite));
}

#[test]
fn f3_witness_replays() {
    let (tp, props) = fixture("f3_xor_input");
    let w = emit(&verify(&tp, &props), &tp, "kinduct-kind").unwrap();
    assert_eq!(validate(&w, &tp, &props, None).outcome, Validation::Correct);
    let other = load("global c: u8 = 1;\nfn main() { while (true) { c = c + 1; } }").unwrap();
    assert!(matches!(validate(&w, &other, &[], None).outcome, Validation::Invalid(_)));
}
