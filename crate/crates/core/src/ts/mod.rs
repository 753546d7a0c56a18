//! Finite transition systems extracted from LoopC programs.
//!
//! A system has a vector of state variables, an initial valuation computed
//! from init-block inputs, a next-state function over the current state and
//! the step inputs, a step constraint collected from `assume` statements and
//! a safety property over the state.

mod dump;
mod extract;
mod property;
pub mod term;

pub use dump::dump;
pub use extract::{extract, extract_with, ExtractError, ExtractOptions, DEFAULT_UNROLL_CEILING};
pub use property::{check_property, compile_property, load_properties, PropertyMonitor, PropertySpec};

use crate::lang::Scalar;
use term::{Evaluator, Leaves, TermId, TermStore};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVar {
    pub name: String,
    /// Smallest scalar type holding the variable, used when printing values.
    pub ty: Scalar,
    /// Bit width; equal to `ty`'s width except for property monitors.
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputVar {
    /// The key under which the interpreter looks this input up.
    pub name: String,
    pub ty: Scalar,
}

impl InputVar {
    pub fn width(&self) -> u32 {
        self.ty.width()
    }
}

#[derive(Debug, Clone)]
pub struct TransitionSystem {
    pub store: TermStore,
    pub state_vars: Vec<StateVar>,
    pub inputs: Vec<InputVar>,
    pub init_inputs: Vec<InputVar>,
    /// Initial value of each state variable, over init inputs only.
    pub init: Vec<TermId>,
    /// Width-1 constraint on init inputs.
    pub init_constraint: TermId,
    /// Next value of each state variable, over state and step inputs.
    pub next: Vec<TermId>,
    /// Width-1 constraint on state and step inputs.
    pub step_constraint: TermId,
    /// Width-1 property over the state.
    pub property: TermId,
    /// The leading state variables that mirror the interpreter's state vector.
    pub program_cells: usize,
    /// State indices of each global's cells (`None` for constants).
    pub global_cells: Vec<Option<Vec<usize>>>,
    /// Constant cell values of each global, used when a property reads a constant.
    pub global_consts: Vec<Vec<u64>>,
    /// Element types of the globals.
    pub global_types: Vec<Scalar>,
}

impl TransitionSystem {
    pub fn state_bits(&self) -> u32 {
        self.state_vars.iter().map(|v| v.width).sum()
    }

    pub fn input_bits(&self) -> u32 {
        self.inputs.iter().map(InputVar::width).sum()
    }

    pub fn init_input_bits(&self) -> u32 {
        self.init_inputs.iter().map(InputVar::width).sum()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_vars.iter().position(|v| v.name == name)
    }

    /// Concrete stepping, mostly for tests and the oracle.
    pub fn simulator(&self) -> Simulator<'_> {
        Simulator::new(self)
    }
}

/// Evaluates the initial state, next-state function and constraints on concrete values.
pub struct Simulator<'a> {
    ts: &'a TransitionSystem,
    init_ev: Evaluator,
    step_ev: Evaluator,
    prop_ev: Evaluator,
}

impl<'a> Simulator<'a> {
    pub fn new(ts: &'a TransitionSystem) -> Simulator<'a> {
        let mut init_roots = ts.init.clone();
        init_roots.push(ts.init_constraint);
        let mut step_roots = ts.next.clone();
        step_roots.push(ts.step_constraint);
        Simulator {
            ts,
            init_ev: Evaluator::new(&ts.store, &init_roots),
            step_ev: Evaluator::new(&ts.store, &step_roots),
            prop_ev: Evaluator::new(&ts.store, &[ts.property]),
        }
    }

    /// Initial state and whether the init constraint holds.
    pub fn init(&mut self, init_inputs: &[u64]) -> (Vec<u64>, bool) {
        self.init_ev.run(
            &self.ts.store,
            &Leaves {
                state: &[],
                input: &[],
                init_input: init_inputs,
            },
        );
        let s = self.ts.init.iter().map(|&t| self.init_ev.get(t)).collect();
        (s, self.init_ev.get(self.ts.init_constraint) == 1)
    }

    /// Successor state and whether the step constraint holds.
    pub fn step(&mut self, state: &[u64], inputs: &[u64]) -> (Vec<u64>, bool) {
        self.step_ev.run(
            &self.ts.store,
            &Leaves {
                state,
                input: inputs,
                init_input: &[],
            },
        );
        let s = self.ts.next.iter().map(|&t| self.step_ev.get(t)).collect();
        (s, self.step_ev.get(self.ts.step_constraint) == 1)
    }

    pub fn property(&mut self, state: &[u64]) -> bool {
        self.prop_ev.run(
            &self.ts.store,
            &Leaves {
                state,
                input: &[],
                init_input: &[],
            },
        );
        self.prop_ev.get(self.ts.property) == 1
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Property(#[from] crate::lang::TypeError),
}

/// Extracts the system of a program and conjoins the given properties.
pub fn build_system(tp: &crate::lang::TypedProgram, props: &[PropertySpec]) -> Result<TransitionSystem, BuildError> {
    let mut ts = extract(tp)?;
    for p in props {
        ts = compile_property(p, ts)?;
    }
    Ok(ts)
}
