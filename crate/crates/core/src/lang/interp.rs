//! Concrete reference interpreter.
//!
//! Inputs are addressed by key: the nondet site label followed by a suffix
//! for each dynamic context it is evaluated in (`.c<id>` for a call site,
//! `.<n>` for the n-th iteration of an inner loop). Division by zero yields
//! the value stored under `__div0#<site><ctx>` if the step supplies one and
//! 0 otherwise, and is reported as an event either way.

use super::ast::Scalar;
use super::ops::{self, OpFlag};
use super::typed::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// Input values of one iteration, keyed as described in the module docs.
pub type InputMap = BTreeMap<String, u64>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputTrace {
    /// Reads performed by the init block.
    #[serde(default)]
    pub init: InputMap,
    /// `steps[i]` feeds loop iteration `i + 1`.
    #[serde(default)]
    pub steps: Vec<InputMap>,
}

impl InputTrace {
    pub fn from_steps(steps: Vec<InputMap>) -> InputTrace {
        InputTrace {
            init: InputMap::new(),
            steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// The property or an `error()` failed in this iteration (0 = init block).
    ErrorReached(u64),
    RanToBound(u64),
    /// An `assume` was false in this iteration; the run has no continuation.
    AssumeBlocked(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    DivByZero,
    IndexClamped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub iteration: u64,
    pub kind: EventKind,
}

/// Values of all state cells: non-constant globals, then the state locals of
/// `main`, arrays flattened, in declaration order.
pub type StateVector = Vec<u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionResult {
    pub outcome: Outcome,
    /// `states[i]` is the state after iteration `i` (index 0 after init).
    /// The entry of an iteration that stopped early holds the state at the stop.
    pub states: Vec<StateVector>,
    /// Input keys actually read, per iteration (index 0 is the init block).
    pub inputs_read: Vec<InputMap>,
    pub events: Vec<Event>,
}

impl ExecutionResult {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("at least the init state is recorded")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterpError {
    InputExhausted { iteration: u64, key: String },
    Shape(String),
    /// Non-main loop ran past the fuel limit.
    FuelExhausted,
}

impl fmt::Display for InterpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpError::InputExhausted { iteration, key } => {
                write!(f, "input exhausted: no value for `{key}` in iteration {iteration}")
            }
            InterpError::Shape(s) => write!(f, "program shape not supported: {s}"),
            InterpError::FuelExhausted => f.write_str("execution fuel exhausted in an inner loop"),
        }
    }
}

impl std::error::Error for InterpError {}

enum Stop {
    Error,
    Blocked,
    Fail(InterpError),
}

impl From<InterpError> for Stop {
    fn from(e: InterpError) -> Stop {
        Stop::Fail(e)
    }
}

type Flow<T> = Result<T, Stop>;

const FUEL: u64 = 50_000_000;

struct Machine<'a> {
    p: &'a TProgram,
    divs: HashMap<*const TExpr, usize>,
    globals: Vec<Vec<u64>>,
    frames: Vec<Vec<Vec<u64>>>,
    ctx: Vec<String>,
    inputs: &'a InputMap,
    read: InputMap,
    iteration: u64,
    events: Vec<Event>,
    fuel: u64,
}

impl<'a> Machine<'a> {
    fn ctx_suffix(&self) -> String {
        self.ctx.concat()
    }

    fn input(&mut self, key: String, ty: Scalar) -> Flow<u64> {
        match self.inputs.get(&key) {
            Some(v) => {
                let v = v & ops::mask(ty.width());
                self.read.insert(key, v);
                Ok(v)
            }
            None => Err(Stop::Fail(InterpError::InputExhausted {
                iteration: self.iteration,
                key,
            })),
        }
    }

    fn cell(&mut self, v: VarRef) -> &mut Vec<u64> {
        match v {
            VarRef::Global(g) => &mut self.globals[g],
            VarRef::Local(l) => &mut self.frames.last_mut().unwrap()[l],
        }
    }

    fn clamp(&mut self, idx: u64, ty: Scalar, len: u32) -> usize {
        let i = ops::to_i64(idx, ty);
        if i < 0 || i >= len as i64 {
            self.events.push(Event {
                iteration: self.iteration,
                kind: EventKind::IndexClamped,
            });
            i.clamp(0, len as i64 - 1) as usize
        } else {
            i as usize
        }
    }

    fn eval(&mut self, e: &TExpr) -> Flow<u64> {
        Ok(match &e.kind {
            TExprKind::Const(v) => *v,
            TExprKind::Var(v) => self.cell(*v)[0],
            TExprKind::Index(v, i, len) => {
                let iv = self.eval(i)?;
                let k = self.clamp(iv, i.ty, *len);
                self.cell(*v)[k]
            }
            TExprKind::Unary(op, a) => {
                let x = self.eval(a)?;
                ops::unary(*op, a.ty, x)
            }
            TExprKind::Binary(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                let (r, flag) = ops::binary(*op, a.ty, x, y);
                if flag == OpFlag::DivByZero {
                    self.events.push(Event {
                        iteration: self.iteration,
                        kind: EventKind::DivByZero,
                    });
                    let key = format!("__div0#{}{}", self.divs[&(e as *const TExpr)], self.ctx_suffix());
                    match self.inputs.get(&key) {
                        Some(v) => {
                            let v = v & ops::mask(e.ty.width());
                            self.read.insert(key, v);
                            v
                        }
                        None => r,
                    }
                } else {
                    r
                }
            }
            TExprKind::Cast(a) => {
                let x = self.eval(a)?;
                ops::cast(a.ty, e.ty, x)
            }
            TExprKind::Call(fid, args, cs) => {
                let f = &self.p.functions[*fid];
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?);
                }
                self.call(f, vals, *cs)?.unwrap_or(0)
            }
            TExprKind::Nondet(site) => {
                let s = &self.p.sites[*site];
                let key = format!("{}{}", s.label, self.ctx_suffix());
                self.input(key, s.ty)?
            }
        })
    }

    fn call(&mut self, f: &'a TFunction, args: Vec<u64>, cs: CallSiteId) -> Flow<Option<u64>> {
        let mut frame: Vec<Vec<u64>> = f.locals.iter().map(|l| vec![0; l.ty.cells() as usize]).collect();
        for (&p, v) in f.params.iter().zip(args) {
            frame[p][0] = v;
        }
        self.frames.push(frame);
        self.ctx.push(format!(".c{cs}"));
        let r = self.block(&f.body).and_then(|_| match &f.ret_expr {
            Some(e) => self.eval(e).map(Some),
            None => Ok(None),
        });
        self.ctx.pop();
        self.frames.pop();
        r
    }

    fn block(&mut self, stmts: &'a [TStmt]) -> Flow<()> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &'a TStmt) -> Flow<()> {
        self.fuel = self.fuel.saturating_sub(1);
        if self.fuel == 0 {
            return Err(Stop::Fail(InterpError::FuelExhausted));
        }
        match s {
            TStmt::Let { local, init } => {
                let vals = match init {
                    TInit::Zero => vec![0; self.frames.last().unwrap()[*local].len()],
                    TInit::Scalar(e) => vec![self.eval(e)?],
                    TInit::Array(es) => {
                        let mut v = Vec::new();
                        for e in es {
                            v.push(self.eval(e)?);
                        }
                        v
                    }
                };
                self.frames.last_mut().unwrap()[*local] = vals;
            }
            TStmt::Assign {
                target,
                index,
                value,
            } => {
                let k = match index {
                    Some(i) => {
                        let iv = self.eval(i)?;
                        let len = self.cell(*target).len() as u32;
                        self.clamp(iv, i.ty, len)
                    }
                    None => 0,
                };
                let v = self.eval(value)?;
                self.cell(*target)[k] = v;
            }
            TStmt::If {
                cond,
                then_body,
                else_body,
            } => {
                if self.eval(cond)? != 0 {
                    self.block(then_body)?;
                } else {
                    self.block(else_body)?;
                }
            }
            TStmt::For {
                var, lo, hi, body, ..
            } => {
                let ty = lo.ty;
                let a = ops::to_i64(self.eval(lo)?, ty);
                let b = ops::to_i64(self.eval(hi)?, ty);
                for (n, i) in (a..b).enumerate() {
                    self.frames.last_mut().unwrap()[*var] = vec![ops::from_i64(i, ty)];
                    self.ctx.push(format!(".{n}"));
                    let r = self.block(body);
                    self.ctx.pop();
                    r?;
                }
            }
            TStmt::While { cond, body } => {
                let mut n = 0u64;
                while self.eval(cond)? != 0 {
                    self.ctx.push(format!(".{n}"));
                    let r = self.block(body);
                    self.ctx.pop();
                    r?;
                    n += 1;
                }
            }
            TStmt::Switch {
                scrutinee,
                cases,
                default,
            } => {
                let v = self.eval(scrutinee)?;
                match cases.iter().find(|(labels, _)| labels.contains(&v)) {
                    Some((_, body)) => self.block(body)?,
                    None => {
                        if let Some(d) = default {
                            self.block(d)?;
                        }
                    }
                }
            }
            TStmt::Assume(e) => {
                if self.eval(e)? == 0 {
                    return Err(Stop::Blocked);
                }
            }
            TStmt::Assert(e) => {
                if self.eval(e)? == 0 {
                    return Err(Stop::Error);
                }
            }
            TStmt::Error => return Err(Stop::Error),
            TStmt::Expr(e) => {
                self.eval(e)?;
            }
        }
        Ok(())
    }

    fn snapshot(&self, state_locals: &[LocalId]) -> StateVector {
        let mut out = Vec::new();
        for (g, vals) in self.p.globals.iter().zip(&self.globals) {
            if !g.is_const {
                out.extend_from_slice(vals);
            }
        }
        let frame = &self.frames[0];
        for &l in state_locals {
            out.extend_from_slice(&frame[l]);
        }
        out
    }
}

/// Runs `main` for at most `max_iterations` iterations of the outer loop.
pub fn interpret(
    tp: &TypedProgram,
    inputs: &InputTrace,
    max_iterations: u64,
) -> Result<ExecutionResult, InterpError> {
    let p = &tp.prog;
    let parts = p
        .main_parts()
        .ok_or_else(|| InterpError::Shape("`main` must end in `while (true)`".into()))?;
    let main = p.main_fn();
    let empty = InputMap::new();
    let mut m = Machine {
        p,
        divs: div_sites(p),
        globals: p.globals.iter().map(|g| g.init.clone()).collect(),
        frames: vec![main.locals.iter().map(|l| vec![0; l.ty.cells() as usize]).collect()],
        ctx: Vec::new(),
        inputs: &inputs.init,
        read: InputMap::new(),
        iteration: 0,
        events: Vec::new(),
        fuel: FUEL,
    };
    let mut states = Vec::new();
    let mut inputs_read = Vec::new();

    let finish = |m: &mut Machine, states: &mut Vec<StateVector>, inputs_read: &mut Vec<InputMap>| {
        states.push(m.snapshot(&parts.state_locals));
        inputs_read.push(std::mem::take(&mut m.read));
    };

    let check_property = |m: &mut Machine<'_>| -> Flow<()> {
        if let Some(prop) = parts.property {
            if m.eval(prop)? == 0 {
                return Err(Stop::Error);
            }
        }
        Ok(())
    };

    let mut iteration = 0u64;
    loop {
        let r = if iteration == 0 {
            m.block(parts.init).and_then(|_| check_property(&mut m))
        } else {
            m.inputs = inputs.steps.get(iteration as usize - 1).unwrap_or(&empty);
            m.iteration = iteration;
            m.block(parts.body).and_then(|_| check_property(&mut m))
        };
        let outcome = match r {
            Ok(()) => None,
            Err(Stop::Error) => Some(Outcome::ErrorReached(iteration)),
            Err(Stop::Blocked) => Some(Outcome::AssumeBlocked(iteration)),
            Err(Stop::Fail(e)) => return Err(e),
        };
        finish(&mut m, &mut states, &mut inputs_read);
        if let Some(outcome) = outcome {
            return Ok(ExecutionResult {
                outcome,
                states,
                inputs_read,
                events: m.events,
            });
        }
        if iteration == max_iterations {
            return Ok(ExecutionResult {
                outcome: Outcome::RanToBound(max_iterations),
                states,
                inputs_read,
                events: m.events,
            });
        }
        iteration += 1;
    }
}

/// Names of the state cells in [`StateVector`] order (`a[3]` for array cells).
pub fn state_cell_names(tp: &TypedProgram) -> Vec<(String, Scalar)> {
    let p = &tp.prog;
    let mut out = Vec::new();
    let mut push = |name: &str, ty: Ty| match ty {
        Ty::Scalar(s) => out.push((name.to_string(), s)),
        Ty::Array(s, n) => {
            for i in 0..n {
                out.push((format!("{name}[{i}]"), s));
            }
        }
    };
    for g in &p.globals {
        if !g.is_const {
            push(&g.name, g.ty);
        }
    }
    if let Some(parts) = p.main_parts() {
        for &l in &parts.state_locals {
            let loc = &p.main_fn().locals[l];
            push(&loc.name, loc.ty);
        }
    }
    out
}
