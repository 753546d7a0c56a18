//! Property files and their compilation into the transition system.
//!
//! A bounded response `trigger => target within n` is checked by a monitor
//! counter `m`. It is 0 while no trigger is pending and otherwise counts the
//! steps since the oldest pending trigger, starting at 1 in the triggering
//! step. A target in a later step discharges every pending trigger. The
//! property becomes `m <= n`, so it fails exactly when some trigger saw no
//! target in the `n` steps that follow it.

use super::extract::{binary_term, cast_term, clamp_term, mux_read, unary_term};
use super::term::{Op, TermId, TermStore};
use super::{StateVar, TransitionSystem};
use crate::lang::ast::Scalar;
use crate::lang::check::{check_global_expr, TypeError, TypeErrorKind};
use crate::lang::interp::StateVector;
use crate::lang::ops;
use crate::lang::parse::{parse_properties, PropertyDecl};
use crate::lang::typed::*;
use crate::lang::LoadError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertySpec {
    Invariant(TExpr),
    BoundedResponse {
        trigger: TExpr,
        target: TExpr,
        within: u64,
    },
}

pub fn check_property(tp: &TypedProgram, decl: &PropertyDecl) -> Result<PropertySpec, TypeError> {
    Ok(match decl {
        PropertyDecl::Invariant(e) => PropertySpec::Invariant(check_global_expr(tp, e, Scalar::Bool)?),
        PropertyDecl::BoundedResponse {
            trigger,
            target,
            within,
        } => {
            if *within == 0 || *within > 1 << 20 {
                return Err(TypeError {
                    kind: TypeErrorKind::OutOfRangeLiteral,
                    message: format!("bounded response step count {within} must be in 1..=1048576"),
                });
            }
            PropertySpec::BoundedResponse {
                trigger: check_global_expr(tp, trigger, Scalar::Bool)?,
                target: check_global_expr(tp, target, Scalar::Bool)?,
                within: *within,
            }
        }
    })
}

/// Parses and checks a `.prop` file against a program.
pub fn load_properties(tp: &TypedProgram, src: &str) -> Result<Vec<PropertySpec>, LoadError> {
    let decls = parse_properties(src)?;
    let mut out = Vec::new();
    for d in &decls {
        out.push(check_property(tp, d)?);
    }
    Ok(out)
}

/// Constant cells and element type of every global.
type GlobalInfo = [(Vec<u64>, Scalar)];

fn lower(
    s: &mut TermStore,
    ts_consts: &GlobalInfo,
    e: &TExpr,
    cells: &dyn Fn(GlobalId) -> Option<Vec<TermId>>,
) -> Result<TermId, TypeError> {
    let global_cells = |s: &mut TermStore, g: GlobalId| -> Vec<TermId> {
        match cells(g) {
            Some(c) => c,
            None => {
                let (vals, ty) = &ts_consts[g];
                vals.iter().map(|&v| s.konst(v, ty.width())).collect()
            }
        }
    };
    let bad = || TypeError {
        kind: TypeErrorKind::Structure,
        message: "property expressions may only read global variables".into(),
    };
    Ok(match &e.kind {
        TExprKind::Const(v) => s.konst(*v, e.ty.width()),
        TExprKind::Var(VarRef::Global(g)) => global_cells(s, *g)[0],
        TExprKind::Index(VarRef::Global(g), i, len) => {
            let it = lower(s, ts_consts, i, cells)?;
            let ci = clamp_term(s, it, i.ty.is_signed(), *len);
            let c = global_cells(s, *g);
            mux_read(s, &c, ci)
        }
        TExprKind::Unary(op, a) => {
            let x = lower(s, ts_consts, a, cells)?;
            unary_term(s, *op, e.ty, x)
        }
        TExprKind::Binary(op, a, b) => {
            let x = lower(s, ts_consts, a, cells)?;
            let y = lower(s, ts_consts, b, cells)?;
            binary_term(s, *op, a.ty, x, y)
        }
        TExprKind::Cast(a) => {
            let x = lower(s, ts_consts, a, cells)?;
            cast_term(s, a.ty, e.ty, x)
        }
        _ => return Err(bad()),
    })
}

fn cells_of(global_cells: &[Option<Vec<usize>>], terms: &[TermId], g: GlobalId) -> Option<Vec<TermId>> {
    global_cells[g]
        .as_ref()
        .map(|idx| idx.iter().map(|&k| terms[k]).collect())
}

/// Adds one property to a transition system.
pub fn compile_property(spec: &PropertySpec, mut ts: TransitionSystem) -> Result<TransitionSystem, TypeError> {
    let n_state = ts.state_vars.len();
    let current: Vec<TermId> = (0..n_state)
        .map(|k| ts.store.leaf(Op::State(k as u32), ts.state_vars[k].width))
        .collect();
    let consts: Vec<(Vec<u64>, Scalar)> = ts
        .global_consts
        .iter()
        .cloned()
        .zip(ts.global_types.iter().copied())
        .collect();
    let gc = ts.global_cells.clone();
    match spec {
        PropertySpec::Invariant(e) => {
            let cur = |g| cells_of(&gc, &current, g);
            let mut store = std::mem::take(&mut ts.store);
            let p = lower(&mut store, &consts, e, &cur);
            ts.store = store;
            let p = p?;
            ts.property = ts.store.and(ts.property, p);
        }
        PropertySpec::BoundedResponse {
            trigger,
            target,
            within,
        } => {
            let n = *within;
            let width = 64 - (n + 1).leading_zeros();
            let next = ts.next.clone();
            let init = ts.init.clone();
            let mut store = std::mem::take(&mut ts.store);
            let on_next = |g| cells_of(&gc, &next, g);
            let on_init = |g| cells_of(&gc, &init, g);
            let lowered = (|| {
                Ok::<_, TypeError>((
                    lower(&mut store, &consts, trigger, &on_next)?,
                    lower(&mut store, &consts, target, &on_next)?,
                    lower(&mut store, &consts, trigger, &on_init)?,
                ))
            })();
            ts.store = store;
            let (trig_next, targ_next, trig_init) = lowered?;
            let s = &mut ts.store;
            let k = n_state as u32;
            let m = s.leaf(Op::State(k), width);
            let zero = s.konst(0, width);
            let one = s.konst(1, width);
            let cap = s.konst(n + 1, width);
            let at_cap = s.eq(m, cap);
            let plus = s.bin(Op::Add, m, one);
            let inc = s.ite(at_cap, m, plus);
            let reset = s.ite(trig_next, one, zero);
            let idle = s.eq(m, zero);
            let busy = s.ite(targ_next, reset, inc);
            let m_next = s.ite(idle, reset, busy);
            let m_init = s.ite(trig_init, one, zero);
            let bound = s.konst(n, width);
            let over = s.mk(Op::Ult(bound, m), 1);
            let ok = s.not(over);
            ts.property = s.and(ts.property, ok);
            let mon = ts.state_vars.iter().filter(|v| v.name.starts_with("__mon")).count();
            ts.state_vars.push(StateVar {
                name: format!("__mon{mon}"),
                ty: monitor_scalar(width),
                width,
            });
            ts.init.push(m_init);
            ts.next.push(m_next);
        }
    }
    Ok(ts)
}

fn monitor_scalar(width: u32) -> Scalar {
    match width {
        0..=8 => Scalar::U8,
        9..=16 => Scalar::U16,
        _ => Scalar::U32,
    }
}

/// Concrete counterpart of the compiled properties, evaluated on the state
/// vectors the interpreter records.
#[derive(Debug, Clone)]
pub struct PropertyMonitor {
    specs: Vec<PropertySpec>,
    offsets: Vec<Option<usize>>,
    consts: Vec<Vec<u64>>,
}

impl PropertyMonitor {
    pub fn new(tp: &TypedProgram, specs: &[PropertySpec]) -> PropertyMonitor {
        let mut offsets = Vec::new();
        let mut at = 0usize;
        for g in &tp.prog.globals {
            if g.is_const {
                offsets.push(None);
            } else {
                offsets.push(Some(at));
                at += g.ty.cells() as usize;
            }
        }
        PropertyMonitor {
            specs: specs.to_vec(),
            offsets,
            consts: tp.prog.globals.iter().map(|g| g.init.clone()).collect(),
        }
    }

    fn eval(&self, e: &TExpr, st: &StateVector) -> u64 {
        let cell = |g: GlobalId, k: usize| match self.offsets[g] {
            Some(o) => st[o + k],
            None => self.consts[g][k],
        };
        match &e.kind {
            TExprKind::Const(v) => *v,
            TExprKind::Var(VarRef::Global(g)) => cell(*g, 0),
            TExprKind::Index(VarRef::Global(g), i, len) => {
                let iv = ops::to_i64(self.eval(i, st), i.ty);
                cell(*g, iv.clamp(0, *len as i64 - 1) as usize)
            }
            TExprKind::Unary(op, a) => ops::unary(*op, a.ty, self.eval(a, st)),
            TExprKind::Binary(op, a, b) => ops::binary(*op, a.ty, self.eval(a, st), self.eval(b, st)).0,
            TExprKind::Cast(a) => ops::cast(a.ty, e.ty, self.eval(a, st)),
            _ => unreachable!("property expressions are checked to be pure over globals"),
        }
    }

    /// First index `i` such that the properties fail at `states[i]`.
    pub fn first_violation(&self, states: &[StateVector]) -> Option<u64> {
        let mut counters = vec![0u64; self.specs.len()];
        for (i, st) in states.iter().enumerate() {
            for (spec, m) in self.specs.iter().zip(counters.iter_mut()) {
                match spec {
                    PropertySpec::Invariant(e) => {
                        if self.eval(e, st) == 0 {
                            return Some(i as u64);
                        }
                    }
                    PropertySpec::BoundedResponse {
                        trigger,
                        target,
                        within,
                    } => {
                        let trig = self.eval(trigger, st) != 0;
                        let targ = self.eval(target, st) != 0;
                        *m = if i == 0 || *m == 0 || targ {
                            trig as u64
                        } else {
                            (*m + 1).min(within + 1)
                        };
                        if *m > *within {
                            return Some(i as u64);
                        }
                    }
                }
            }
        }
        None
    }
}
