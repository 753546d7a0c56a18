//! Witness documents and their validation.
//!
//! A witness is a JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "producer": "kinduct-kind",
//!   "program_digest": "<sha256 of the pretty-printed program>",
//!   "kind": "violation",
//!   "initial_state": {"c": 0},
//!   "init_inputs": {},
//!   "steps": [{}, {}],
//!   "claimed_error_iteration": 2
//! }
//! ```
//!
//! or, for a proof, `"kind": "proof", "method": "KInduction", "k_proved": 2`.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cnf::{build_bmc_formula, build_step_formula};
use crate::engine::{ProofMethod, Verdict, VerdictResult};
use crate::lang::interp::{interpret, state_cell_names, InputMap, InputTrace, Outcome};
use crate::lang::{pretty_print, TypedProgram};
use crate::sat::{solve, Budget, SatResult};
use crate::ts::{build_system, PropertyMonitor, PropertySpec};

pub const WITNESS_VERSION: u32 = 1;
pub const VIOLATION_BUDGET_S: f64 = 720.0;
pub const PROOF_BUDGET_S: f64 = 7200.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessKind {
    Violation {
        initial_state: BTreeMap<String, u64>,
        init_inputs: InputMap,
        steps: Vec<InputMap>,
        claimed_error_iteration: u64,
    },
    Proof {
        method: ProofMethod,
        k_proved: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub version: u32,
    pub producer: String,
    pub program_digest: String,
    #[serde(flatten)]
    pub kind: WitnessKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WitnessError {
    #[error("verdict is not definite")]
    NotDefinite,
    #[error("witness does not parse: {0}")]
    Parse(String),
}

pub fn program_digest(tp: &TypedProgram) -> String {
    hex::encode(Sha256::digest(pretty_print(&tp.source).as_bytes()))
}

pub fn emit(v: &Verdict, tp: &TypedProgram, producer: &str) -> Result<Witness, WitnessError> {
    let kind = match &v.result {
        VerdictResult::Unknown(_) => return Err(WitnessError::NotDefinite),
        VerdictResult::True { k, method } => WitnessKind::Proof {
            method: *method,
            k_proved: *k,
        },
        VerdictResult::False(cex) => {
            let names = state_cell_names(tp);
            WitnessKind::Violation {
                initial_state: names
                    .iter()
                    .zip(&cex.states[0])
                    .map(|((n, _), &v)| (n.clone(), v))
                    .collect(),
                init_inputs: cex.init.clone(),
                steps: cex.steps.clone(),
                claimed_error_iteration: cex.depth,
            }
        }
    };
    Ok(Witness {
        version: WITNESS_VERSION,
        producer: producer.to_string(),
        program_digest: program_digest(tp),
        kind,
    })
}

impl Witness {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("witness serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Witness, WitnessError> {
        let w: Witness = serde_json::from_str(text).map_err(|e| WitnessError::Parse(e.to_string()))?;
        if w.version != WITNESS_VERSION {
            return Err(WitnessError::Parse(format!("unsupported version {}", w.version)));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validation {
    Correct,
    Invalid(String),
    Unknown(String),
}

impl Validation {
    /// Short label used in result tables.
    pub fn label(&self) -> &'static str {
        match self {
            Validation::Correct => "Correct",
            Validation::Invalid(_) => "Invalid",
            Validation::Unknown(_) => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOutcome {
    pub outcome: Validation,
    pub validation_time: Duration,
}

/// Validates witness text; parse failures are `Invalid`.
pub fn validate_text(text: &str, tp: &TypedProgram, props: &[PropertySpec], cpu_seconds: Option<f64>) -> ValidationOutcome {
    let t = Instant::now();
    match Witness::parse(text) {
        Ok(w) => validate(&w, tp, props, cpu_seconds),
        Err(e) => ValidationOutcome {
            outcome: Validation::Invalid(e.to_string()),
            validation_time: t.elapsed(),
        },
    }
}

/// Validates a witness. Without an explicit budget the default for the
/// witness kind applies.
pub fn validate(w: &Witness, tp: &TypedProgram, props: &[PropertySpec], cpu_seconds: Option<f64>) -> ValidationOutcome {
    let start = Instant::now();
    let outcome = if w.program_digest != program_digest(tp) {
        Validation::Invalid("program digest mismatch".into())
    } else {
        match &w.kind {
            WitnessKind::Violation {
                init_inputs,
                steps,
                claimed_error_iteration,
                ..
            } => {
                let budget = cpu_seconds.unwrap_or(VIOLATION_BUDGET_S);
                replay(tp, props, init_inputs, steps, *claimed_error_iteration, start, budget)
            }
            WitnessKind::Proof { k_proved, .. } => {
                let budget = cpu_seconds.unwrap_or(PROOF_BUDGET_S);
                recheck_proof(tp, props, *k_proved, start, budget)
            }
        }
    };
    ValidationOutcome {
        outcome,
        validation_time: start.elapsed(),
    }
}

fn replay(
    tp: &TypedProgram,
    props: &[PropertySpec],
    init: &InputMap,
    steps: &[InputMap],
    claimed: u64,
    start: Instant,
    budget: f64,
) -> Validation {
    if (steps.len() as u64) < claimed {
        return Validation::Unknown(format!(
            "{} input records for a claimed error in iteration {claimed}",
            steps.len()
        ));
    }
    let trace = InputTrace {
        init: init.clone(),
        steps: steps.to_vec(),
    };
    let run = match interpret(tp, &trace, claimed) {
        Ok(r) => r,
        Err(e) => return Validation::Unknown(format!("replay failed: {e}")),
    };
    if start.elapsed().as_secs_f64() > budget {
        return Validation::Unknown("timeout".into());
    }
    let program_error = match run.outcome {
        Outcome::ErrorReached(i) => Some(i),
        Outcome::AssumeBlocked(i) => return Validation::Unknown(format!("assume blocked in iteration {i}")),
        Outcome::RanToBound(_) => None,
    };
    let monitor_error = PropertyMonitor::new(tp, props).first_violation(&run.states);
    let first = match (program_error, monitor_error) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    match first {
        Some(i) if i == claimed => Validation::Correct,
        Some(i) => Validation::Unknown(format!("mismatch: error in iteration {i}, claimed {claimed}")),
        None => Validation::Unknown(format!("mismatch: no error within {claimed} iterations")),
    }
}

fn recheck_proof(tp: &TypedProgram, props: &[PropertySpec], k: u64, start: Instant, budget: f64) -> Validation {
    if k == 0 {
        return Validation::Unknown("k must be at least 1".into());
    }
    let ts = match build_system(tp, props) {
        Ok(ts) => ts,
        Err(e) => return Validation::Unknown(format!("cannot build system: {e}")),
    };
    let sat_budget = Budget {
        deadline: Some(start + Duration::from_secs_f64(budget)),
        ..Budget::default()
    };
    let Ok(k32) = u32::try_from(k) else {
        return Validation::Unknown("k out of range".into());
    };
    let check = |f: Result<crate::cnf::CnfFormula, crate::cnf::EncodeError>, what: &str| -> Option<Validation> {
        let f = match f {
            Ok(f) => f,
            Err(e) => return Some(Validation::Unknown(e.to_string())),
        };
        match solve(&f, &[], &sat_budget) {
            SatResult::Unsat => None,
            SatResult::Sat(_) => Some(Validation::Unknown(format!("{what} is satisfiable at k={k}"))),
            SatResult::Unknown(_) => Some(Validation::Unknown("timeout".into())),
        }
    };
    if let Some(v) = check(build_bmc_formula(&ts, k32), "base case") {
        return v;
    }
    if let Some(v) = check(build_step_formula(&ts, k32), "step case") {
        return v;
    }
    Validation::Correct
}
