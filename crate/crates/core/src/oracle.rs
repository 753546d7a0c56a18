//! Explicit-state breadth-first reachability over a transition system.
//!
//! Every initial input valuation and every step input valuation is
//! enumerated, so the combined width is capped at [`MAX_ORACLE_BITS`].

use std::collections::HashMap;
use std::collections::VecDeque;

use crate::ts::TransitionSystem;

pub const MAX_ORACLE_BITS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_states: u64,
    pub max_depth: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_states: 1 << MAX_ORACLE_BITS,
            max_depth: u64::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("state space too large: {state_bits} state bits plus {input_bits} input bits exceeds {MAX_ORACLE_BITS}")]
    StateSpaceTooLarge { state_bits: u32, input_bits: u32 },
}

/// A concrete path in system terms: input values by position in
/// `ts.init_inputs` and `ts.inputs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleTrace {
    pub init_inputs: Vec<u64>,
    pub inputs: Vec<Vec<u64>>,
    pub states: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Safe,
    Unsafe { trace: OracleTrace, depth: u64 },
    /// Limits were hit; no violation up to and including this depth.
    BoundedSafe { depth: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleVerdict {
    pub outcome: OracleOutcome,
    pub explored: u64,
}

impl OracleVerdict {
    pub fn is_safe(&self) -> bool {
        matches!(self.outcome, OracleOutcome::Safe)
    }
    pub fn violation_depth(&self) -> Option<u64> {
        match self.outcome {
            OracleOutcome::Unsafe { depth, .. } => Some(depth),
            _ => None,
        }
    }
}

fn split(mut packed: u64, widths: &[u32]) -> Vec<u64> {
    widths
        .iter()
        .map(|&w| {
            let v = packed & ((1u64 << w) - 1);
            packed >>= w;
            v
        })
        .collect()
}

fn pack(vals: &[u64], widths: &[u32]) -> u64 {
    let mut out = 0u64;
    let mut shift = 0;
    for (&v, &w) in vals.iter().zip(widths) {
        out |= v << shift;
        shift += w;
    }
    out
}

enum Parent {
    Root(u64),
    Step(u64, u64),
}

pub fn explore(ts: &TransitionSystem, limits: OracleLimits) -> Result<OracleVerdict, OracleError> {
    let state_bits = ts.state_bits();
    let input_bits = ts.input_bits().max(ts.init_input_bits());
    if state_bits + input_bits > MAX_ORACLE_BITS {
        return Err(OracleError::StateSpaceTooLarge { state_bits, input_bits });
    }
    let sw: Vec<u32> = ts.state_vars.iter().map(|v| v.width).collect();
    let iw: Vec<u32> = ts.inputs.iter().map(|v| v.width()).collect();
    let initw: Vec<u32> = ts.init_inputs.iter().map(|v| v.width()).collect();
    let mut sim = ts.simulator();
    let mut parent: HashMap<u64, Parent> = HashMap::new();
    let mut frontier: VecDeque<u64> = VecDeque::new();

    let trace_to = |parent: &HashMap<u64, Parent>, mut s: u64| {
        let mut states = vec![split(s, &sw)];
        let mut inputs = Vec::new();
        loop {
            match parent[&s] {
                Parent::Root(ii) => {
                    states.reverse();
                    inputs.reverse();
                    return OracleTrace {
                        init_inputs: split(ii, &initw),
                        inputs,
                        states,
                    };
                }
                Parent::Step(p, i) => {
                    inputs.push(split(i, &iw));
                    states.push(split(p, &sw));
                    s = p;
                }
            }
        }
    };

    for ii in 0..1u64 << ts.init_input_bits() {
        let (s, ok) = sim.init(&split(ii, &initw));
        if !ok {
            continue;
        }
        let key = pack(&s, &sw);
        if parent.contains_key(&key) {
            continue;
        }
        parent.insert(key, Parent::Root(ii));
        if !sim.property(&s) {
            return Ok(OracleVerdict {
                outcome: OracleOutcome::Unsafe {
                    trace: trace_to(&parent, key),
                    depth: 0,
                },
                explored: parent.len() as u64,
            });
        }
        frontier.push_back(key);
    }

    let mut depth = 0u64;
    while !frontier.is_empty() {
        if depth >= limits.max_depth {
            return Ok(OracleVerdict {
                outcome: OracleOutcome::BoundedSafe { depth },
                explored: parent.len() as u64,
            });
        }
        let mut next_frontier = VecDeque::new();
        for &key in &frontier {
            let s = split(key, &sw);
            for i in 0..1u64 << ts.input_bits() {
                let (n, ok) = sim.step(&s, &split(i, &iw));
                if !ok {
                    continue;
                }
                let nk = pack(&n, &sw);
                if parent.contains_key(&nk) {
                    continue;
                }
                parent.insert(nk, Parent::Step(key, i));
                if !sim.property(&n) {
                    return Ok(OracleVerdict {
                        outcome: OracleOutcome::Unsafe {
                            trace: trace_to(&parent, nk),
                            depth: depth + 1,
                        },
                        explored: parent.len() as u64,
                    });
                }
                if parent.len() as u64 > limits.max_states {
                    return Ok(OracleVerdict {
                        outcome: OracleOutcome::BoundedSafe { depth },
                        explored: parent.len() as u64,
                    });
                }
                next_frontier.push_back(nk);
            }
        }
        frontier = next_frontier;
        depth += 1;
    }
    Ok(OracleVerdict {
        outcome: OracleOutcome::Safe,
        explored: parent.len() as u64,
    })
}
