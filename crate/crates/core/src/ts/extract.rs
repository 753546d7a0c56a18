//! Symbolic execution of one outer-loop iteration into terms.
//!
//! Calls are inlined and bounded loops unrolled. Control flow is tracked with
//! an `active` guard: assignments become `ite(active, new, old)`, an `error()`
//! records `active` in the error flag and then clears it, and `assume(e)`
//! contributes `active -> e` to the step constraint. `&&` and `||` evaluate
//! both operands, as the interpreter does.

use super::term::{Op, TermId, TermStore};
use super::{InputVar, StateVar, TransitionSystem};
use crate::lang::ast::{BinOp, Scalar, UnOp};
use crate::lang::typed::*;
use std::collections::HashMap;

pub const DEFAULT_UNROLL_CEILING: u64 = 256;

#[derive(Debug, Clone, Copy)]
pub struct ExtractOptions {
    /// Maximum iterations of a single inner loop.
    pub unroll_ceiling: u64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            unroll_ceiling: DEFAULT_UNROLL_CEILING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("inner loop needs up to {needed} iterations but the unroll ceiling is {ceiling}")]
    UnrollCeiling { needed: u64, ceiling: u64 },
    #[error("inner `while` loops cannot be unrolled")]
    UnboundedLoop,
    #[error("`main` must end in `while (true)`")]
    NoMainLoop,
}

type R<T> = Result<T, ExtractError>;

#[derive(Default)]
struct InputTable {
    vars: Vec<InputVar>,
    index: HashMap<String, u32>,
}

impl InputTable {
    fn get(&mut self, store: &mut TermStore, name: String, ty: Scalar, init: bool) -> TermId {
        let id = match self.index.get(&name) {
            Some(&i) => i,
            None => {
                let i = self.vars.len() as u32;
                self.index.insert(name.clone(), i);
                self.vars.push(InputVar { name, ty });
                i
            }
        };
        let op = if init { Op::InitInput(id) } else { Op::Input(id) };
        store.leaf(op, ty.width())
    }
}

struct Sym<'a> {
    p: &'a TProgram,
    s: TermStore,
    divs: HashMap<*const TExpr, usize>,
    globals: Vec<Vec<TermId>>,
    frames: Vec<Vec<Vec<TermId>>>,
    active: TermId,
    err: TermId,
    constraint: TermId,
    ctx: Vec<String>,
    init_phase: bool,
    init_inputs: InputTable,
    step_inputs: InputTable,
    opts: ExtractOptions,
}

fn w(t: Scalar) -> u32 {
    t.width()
}

impl<'a> Sym<'a> {
    fn konst(&mut self, v: u64, ty: Scalar) -> TermId {
        self.s.konst(v, w(ty))
    }

    fn input(&mut self, name: String, ty: Scalar) -> TermId {
        if self.init_phase {
            self.init_inputs.get(&mut self.s, name, ty, true)
        } else {
            self.step_inputs.get(&mut self.s, name, ty, false)
        }
    }

    fn cells(&mut self, v: VarRef) -> &mut Vec<TermId> {
        match v {
            VarRef::Global(g) => &mut self.globals[g],
            VarRef::Local(l) => &mut self.frames.last_mut().unwrap()[l],
        }
    }

    fn clamp(&mut self, idx: TermId, signed: bool, len: u32) -> TermId {
        clamp_term(&mut self.s, idx, signed, len)
    }

    fn read(&mut self, v: VarRef, ci: Option<TermId>) -> TermId {
        let cells = self.cells(v).clone();
        let Some(ci) = ci else { return cells[0] };
        if let Some(k) = self.s.as_const(ci) {
            return cells[k as usize];
        }
        mux_read(&mut self.s, &cells, ci)
    }

    fn write(&mut self, v: VarRef, ci: Option<TermId>, val: TermId) {
        let active = self.active;
        let n = self.cells(v).len();
        for j in 0..n {
            let guard = match ci {
                None => active,
                Some(ci) => {
                    let jc = self.s.konst(j as u64, 32);
                    let hit = self.s.eq(ci, jc);
                    self.s.and(active, hit)
                }
            };
            let old = self.cells(v)[j];
            let new = self.s.ite(guard, val, old);
            self.cells(v)[j] = new;
        }
    }

    fn expr(&mut self, e: &TExpr) -> R<TermId> {
        Ok(match &e.kind {
            TExprKind::Const(v) => self.konst(*v, e.ty),
            TExprKind::Var(v) => self.read(*v, None),
            TExprKind::Index(v, i, len) => {
                let it = self.expr(i)?;
                let ci = self.clamp(it, i.ty.is_signed(), *len);
                self.read(*v, Some(ci))
            }
            TExprKind::Unary(op, a) => {
                let x = self.expr(a)?;
                unary_term(&mut self.s, *op, e.ty, x)
            }
            TExprKind::Binary(op, a, b) => {
                let x = self.expr(a)?;
                let y = self.expr(b)?;
                self.binary(e, *op, a.ty, x, y)
            }
            TExprKind::Cast(a) => {
                let x = self.expr(a)?;
                self.cast(a.ty, e.ty, x)
            }
            TExprKind::Call(fid, args, cs) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.expr(a)?);
                }
                self.call(*fid, vals, *cs)?
                    .unwrap_or_else(|| self.s.konst(0, w(e.ty)))
            }
            TExprKind::Nondet(site) => {
                let st = &self.p.sites[*site];
                let name = format!("{}{}", st.label, self.ctx.concat());
                let ty = st.ty;
                self.input(name, ty)
            }
        })
    }

    fn binary(&mut self, e: &TExpr, op: BinOp, ty: Scalar, x: TermId, y: TermId) -> TermId {
        let nonzero = self.s.as_const(y).is_some_and(|c| c != 0);
        if !matches!(op, BinOp::Div | BinOp::Rem) || nonzero {
            return binary_term(&mut self.s, op, ty, x, y);
        }
        let q = binary_term(&mut self.s, op, ty, x, y);
        let name = format!("__div0#{}{}", self.divs[&(e as *const TExpr)], self.ctx.concat());
        let fresh = self.input(name, e.ty);
        let zero = self.s.konst(0, w(ty));
        let is_zero = self.s.eq(y, zero);
        self.s.ite(is_zero, fresh, q)
    }

    fn cast(&mut self, from: Scalar, to: Scalar, x: TermId) -> TermId {
        cast_term(&mut self.s, from, to, x)
    }

    fn call(&mut self, fid: FuncId, args: Vec<TermId>, cs: CallSiteId) -> R<Option<TermId>> {
        let f = &self.p.functions[fid];
        let mut frame: Vec<Vec<TermId>> = Vec::with_capacity(f.locals.len());
        for l in &f.locals {
            let z = self.s.konst(0, l.ty.elem().width());
            frame.push(vec![z; l.ty.cells() as usize]);
        }
        for (&p, v) in f.params.iter().zip(args) {
            frame[p][0] = v;
        }
        self.frames.push(frame);
        self.ctx.push(format!(".c{cs}"));
        let r = self.block(&f.body).and_then(|_| match &f.ret_expr {
            Some(e) => self.expr(e).map(Some),
            None => Ok(None),
        });
        self.ctx.pop();
        self.frames.pop();
        r
    }

    fn block(&mut self, stmts: &[TStmt]) -> R<()> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    /// Runs `body` under `active && guard`, returning the guard still alive at its end.
    fn guarded(&mut self, entry: TermId, guard: TermId, body: &[TStmt]) -> R<TermId> {
        self.active = self.s.and(entry, guard);
        self.block(body)?;
        Ok(self.active)
    }

    fn stmt(&mut self, st: &TStmt) -> R<()> {
        match st {
            TStmt::Let { local, init } => {
                let cur = &self.frames.last().unwrap()[*local];
                let (n, width) = (cur.len(), self.s.width(cur[0]));
                let vals = match init {
                    TInit::Zero => vec![self.s.konst(0, width); n],
                    TInit::Scalar(e) => vec![self.expr(e)?],
                    TInit::Array(es) => {
                        let mut v = Vec::new();
                        for e in es {
                            v.push(self.expr(e)?);
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
                let ci = match index {
                    Some(i) => {
                        let it = self.expr(i)?;
                        let len = self.cells(*target).len() as u32;
                        Some(self.clamp(it, i.ty.is_signed(), len))
                    }
                    None => None,
                };
                let v = self.expr(value)?;
                self.write(*target, ci, v);
            }
            TStmt::If {
                cond,
                then_body,
                else_body,
            } => {
                let c = self.expr(cond)?;
                let entry = self.active;
                let t = self.guarded(entry, c, then_body)?;
                let nc = self.s.not(c);
                let e = self.guarded(entry, nc, else_body)?;
                self.active = self.s.or(t, e);
            }
            TStmt::For {
                var,
                lo,
                hi,
                bounds,
                body,
            } => self.for_loop(*var, lo, hi, *bounds, body)?,
            TStmt::While { .. } => return Err(ExtractError::UnboundedLoop),
            TStmt::Switch {
                scrutinee,
                cases,
                default,
            } => {
                let v = self.expr(scrutinee)?;
                let entry = self.active;
                let mut any = self.s.fals();
                let mut exits = self.s.fals();
                for (labels, body) in cases {
                    let mut hit = self.s.fals();
                    for &l in labels {
                        let lc = self.konst(l, scrutinee.ty);
                        let h = self.s.eq(v, lc);
                        hit = self.s.or(hit, h);
                    }
                    any = self.s.or(any, hit);
                    let end = self.guarded(entry, hit, body)?;
                    exits = self.s.or(exits, end);
                }
                let none = self.s.not(any);
                let end = self.guarded(entry, none, default.as_deref().unwrap_or(&[]))?;
                self.active = self.s.or(exits, end);
            }
            TStmt::Assume(e) => {
                let c = self.expr(e)?;
                let imp = self.s.implies(self.active, c);
                self.constraint = self.s.and(self.constraint, imp);
                self.active = self.s.and(self.active, c);
            }
            TStmt::Assert(e) => {
                let c = self.expr(e)?;
                let nc = self.s.not(c);
                let fail = self.s.and(self.active, nc);
                self.err = self.s.or(self.err, fail);
                self.active = self.s.and(self.active, c);
            }
            TStmt::Error => {
                self.err = self.s.or(self.err, self.active);
                self.active = self.s.fals();
            }
            TStmt::Expr(e) => {
                self.expr(e)?;
            }
        }
        Ok(())
    }

    fn for_loop(
        &mut self,
        var: LocalId,
        lo: &TExpr,
        hi: &TExpr,
        bounds: Option<(i64, i64)>,
        body: &[TStmt],
    ) -> R<()> {
        let ty = lo.ty;
        let ceiling = self.opts.unroll_ceiling;
        if let Some((a, b)) = bounds {
            let count = (b - a).max(0) as u64;
            if count > ceiling {
                return Err(ExtractError::UnrollCeiling {
                    needed: count,
                    ceiling,
                });
            }
            for n in 0..count {
                let v = self.konst(crate::lang::ops::from_i64(a + n as i64, ty), ty);
                self.frames.last_mut().unwrap()[var] = vec![v];
                self.ctx.push(format!(".{n}"));
                let r = self.block(body);
                self.ctx.pop();
                r?;
            }
            return Ok(());
        }
        let (tmin, tmax) = ty.int_range();
        let max_iter = (tmax as i128 - tmin as i128) as u64;
        if max_iter > ceiling {
            return Err(ExtractError::UnrollCeiling {
                needed: max_iter,
                ceiling,
            });
        }
        let lt = self.expr(lo)?;
        let ht = self.expr(hi)?;
        let s = &mut self.s;
        let l64 = s.resize(lt, 64, ty.is_signed());
        let h64 = s.resize(ht, 64, ty.is_signed());
        let span = s.bin(Op::Sub, h64, l64);
        let mut exits = s.fals();
        for n in 0..max_iter {
            let nc = self.s.konst(n, 64);
            let go = self.s.mk(Op::Slt(nc, span), 1);
            let stop = self.s.not(go);
            let leaving = self.s.and(self.active, stop);
            exits = self.s.or(exits, leaving);
            self.active = self.s.and(self.active, go);
            let off = self.s.konst(n, w(ty));
            let v = self.s.bin(Op::Add, lt, off);
            self.frames.last_mut().unwrap()[var] = vec![v];
            self.ctx.push(format!(".{n}"));
            let r = self.block(body);
            self.ctx.pop();
            r?;
        }
        self.active = self.s.or(exits, self.active);
        Ok(())
    }
}

/// The clamped array index as a 32-bit term.
pub(super) fn clamp_term(s: &mut TermStore, idx: TermId, signed: bool, len: u32) -> TermId {
    let ci = s.resize(idx, 32, signed);
    let top = s.konst(len as u64 - 1, 32);
    let lenc = s.konst(len as u64, 32);
    if signed {
        let zero = s.konst(0, 32);
        let neg = s.mk(Op::Slt(ci, zero), 1);
        let inb = s.mk(Op::Slt(ci, lenc), 1);
        let hi = s.ite(inb, ci, top);
        s.ite(neg, zero, hi)
    } else {
        let inb = s.mk(Op::Ult(ci, lenc), 1);
        s.ite(inb, ci, top)
    }
}

/// Selects `cells[ci]` for an in-range 32-bit index term.
pub(super) fn mux_read(s: &mut TermStore, cells: &[TermId], ci: TermId) -> TermId {
    if let Some(k) = s.as_const(ci) {
        return cells[k as usize];
    }
    let mut acc = *cells.last().unwrap();
    for j in (0..cells.len() - 1).rev() {
        let jc = s.konst(j as u64, 32);
        let hit = s.eq(ci, jc);
        acc = s.ite(hit, cells[j], acc);
    }
    acc
}

fn lt_term(s: &mut TermStore, ty: Scalar, a: TermId, b: TermId) -> TermId {
    if ty.is_signed() {
        s.mk(Op::Slt(a, b), 1)
    } else {
        s.mk(Op::Ult(a, b), 1)
    }
}

/// A binary operator on operands of type `ty`. Division by zero follows the
/// term semantics (result 0); callers that need a fresh value wrap it.
pub(super) fn binary_term(s: &mut TermStore, op: BinOp, ty: Scalar, x: TermId, y: TermId) -> TermId {
    let width = w(ty);
    match op {
        BinOp::Add => s.bin(Op::Add, x, y),
        BinOp::Sub => s.bin(Op::Sub, x, y),
        BinOp::Mul if ty == Scalar::Fx => {
            let a = s.resize(x, 64, true);
            let b = s.resize(y, 64, true);
            let p = s.bin(Op::Mul, a, b);
            let sixteen = s.konst(16, 64);
            let sh = s.bin(Op::AShr, p, sixteen);
            s.resize(sh, 32, true)
        }
        BinOp::Mul => s.bin(Op::Mul, x, y),
        BinOp::Div | BinOp::Rem if ty == Scalar::Fx => {
            let a64 = s.resize(x, 64, true);
            let sixteen = s.konst(16, 64);
            let sh = s.bin(Op::Shl, a64, sixteen);
            let b64 = s.resize(y, 64, true);
            let q = s.bin(Op::SDiv, sh, b64);
            s.resize(q, 32, true)
        }
        BinOp::Div | BinOp::Rem => {
            let f: fn(TermId, TermId) -> Op = match (op, ty.is_signed()) {
                (BinOp::Div, false) => Op::UDiv,
                (BinOp::Div, true) => Op::SDiv,
                (_, false) => Op::URem,
                (_, true) => Op::SRem,
            };
            s.bin(f, x, y)
        }
        BinOp::BitAnd | BinOp::And => s.and(x, y),
        BinOp::BitOr | BinOp::Or => s.or(x, y),
        BinOp::BitXor => s.bin(Op::Xor, x, y),
        BinOp::Shl | BinOp::Shr => {
            let amt = s.resize(y, width, false);
            let f = match (op, ty.is_signed()) {
                (BinOp::Shl, _) => Op::Shl,
                (_, true) => Op::AShr,
                (_, false) => Op::LShr,
            };
            s.bin(f, x, amt)
        }
        BinOp::Eq => s.eq(x, y),
        BinOp::Ne => {
            let t = s.eq(x, y);
            s.not(t)
        }
        BinOp::Lt => lt_term(s, ty, x, y),
        BinOp::Gt => lt_term(s, ty, y, x),
        BinOp::Le => {
            let t = lt_term(s, ty, y, x);
            s.not(t)
        }
        BinOp::Ge => {
            let t = lt_term(s, ty, x, y);
            s.not(t)
        }
    }
}

pub(super) fn unary_term(s: &mut TermStore, op: UnOp, ty: Scalar, x: TermId) -> TermId {
    match op {
        UnOp::Neg => s.mk(Op::Neg(x), w(ty)),
        UnOp::Not | UnOp::BitNot => s.not(x),
    }
}

pub(super) fn cast_term(s: &mut TermStore, from: Scalar, to: Scalar, x: TermId) -> TermId {
    if from == to {
        return x;
    }
    match (from, to) {
        (_, Scalar::Bool) => {
            let zero = s.konst(0, w(from));
            let z = s.eq(x, zero);
            s.not(z)
        }
        (Scalar::Fx, _) => {
            let unit = s.konst(65536, 32);
            let q = s.bin(Op::SDiv, x, unit);
            s.resize(q, w(to), true)
        }
        (_, Scalar::Fx) => {
            let wide = s.resize(x, 32, from.is_signed());
            let sixteen = s.konst(16, 32);
            s.bin(Op::Shl, wide, sixteen)
        }
        _ => s.resize(x, w(to), from.is_signed()),
    }
}

fn has_reachable_term(s: &TermStore, t: TermId) -> bool {
    s.as_const(t) != Some(0)
}

/// Lowers a typed program with the default options.
pub fn extract(tp: &TypedProgram) -> R<TransitionSystem> {
    extract_with(tp, ExtractOptions::default())
}

pub fn extract_with(tp: &TypedProgram, opts: ExtractOptions) -> R<TransitionSystem> {
    let p = &tp.prog;
    let parts = p.main_parts().ok_or(ExtractError::NoMainLoop)?;
    let main = p.main_fn();
    let mut sym = Sym {
        p,
        s: TermStore::new(),
        divs: div_sites(p),
        globals: Vec::new(),
        frames: Vec::new(),
        active: 0,
        err: 0,
        constraint: 0,
        ctx: Vec::new(),
        init_phase: true,
        init_inputs: InputTable::default(),
        step_inputs: InputTable::default(),
        opts,
    };
    let zero_frame = |s: &mut TermStore| -> Vec<Vec<TermId>> {
        main.locals
            .iter()
            .map(|l| vec![s.konst(0, l.ty.elem().width()); l.ty.cells() as usize])
            .collect()
    };

    // Init block.
    sym.globals = p
        .globals
        .iter()
        .map(|g| g.init.iter().map(|&v| sym.s.konst(v, g.ty.elem().width())).collect())
        .collect();
    let frame = zero_frame(&mut sym.s);
    sym.frames = vec![frame];
    sym.active = sym.s.tru();
    sym.err = sym.s.fals();
    sym.constraint = sym.s.tru();
    sym.block(parts.init)?;
    let init_vals = collect_state(&sym, p, &parts.state_locals);
    let init_err = sym.err;
    let init_constraint = sym.constraint;

    // One iteration of the loop body from symbolic state.
    let mut state_vars = Vec::new();
    let mut global_cells = Vec::new();
    let mut state_globals = Vec::new();
    for g in &p.globals {
        if g.is_const {
            global_cells.push(None);
            state_globals.push(g.init.iter().map(|&v| sym.s.konst(v, g.ty.elem().width())).collect());
            continue;
        }
        let mut idx = Vec::new();
        let mut cells = Vec::new();
        for name in cell_names(&g.name, g.ty) {
            let k = state_vars.len();
            idx.push(k);
            cells.push(sym.s.leaf(Op::State(k as u32), g.ty.elem().width()));
            state_vars.push(StateVar {
                name,
                ty: g.ty.elem(),
                width: g.ty.elem().width(),
            });
        }
        global_cells.push(Some(idx));
        state_globals.push(cells);
    }
    let mut frame = zero_frame(&mut sym.s);
    for &l in &parts.state_locals {
        let loc = &main.locals[l];
        let mut cells = Vec::new();
        for name in cell_names(&loc.name, loc.ty) {
            let k = state_vars.len();
            cells.push(sym.s.leaf(Op::State(k as u32), loc.ty.elem().width()));
            state_vars.push(StateVar {
                name,
                ty: loc.ty.elem(),
                width: loc.ty.elem().width(),
            });
        }
        frame[l] = cells;
    }
    let program_cells = state_vars.len();
    sym.globals = state_globals.clone();
    sym.frames = vec![frame.clone()];
    sym.init_phase = false;
    sym.active = sym.s.tru();
    sym.err = sym.s.fals();
    sym.constraint = sym.s.tru();
    sym.block(parts.body)?;
    let next_vals = collect_state(&sym, p, &parts.state_locals);
    let step_err = sym.err;
    let step_constraint = sym.constraint;

    // The property reads the state before any update.
    sym.globals = state_globals;
    sym.frames = vec![frame];
    let mut property = match parts.property {
        Some(e) => sym.expr(e)?,
        None => sym.s.tru(),
    };

    let mut init = init_vals;
    let mut next = next_vals;
    if has_reachable_term(&sym.s, init_err) || has_reachable_term(&sym.s, step_err) {
        let k = state_vars.len();
        state_vars.push(StateVar {
            name: "__err".into(),
            ty: Scalar::Bool,
            width: 1,
        });
        init.push(init_err);
        next.push(step_err);
        let flag = sym.s.leaf(Op::State(k as u32), 1);
        let ok = sym.s.not(flag);
        property = sym.s.and(property, ok);
    }

    Ok(TransitionSystem {
        store: sym.s,
        state_vars,
        inputs: sym.step_inputs.vars,
        init_inputs: sym.init_inputs.vars,
        init,
        init_constraint,
        next,
        step_constraint,
        property,
        program_cells,
        global_cells,
        global_consts: p.globals.iter().map(|g| g.init.clone()).collect(),
        global_types: p.globals.iter().map(|g| g.ty.elem()).collect(),
    })
}

fn cell_names(name: &str, ty: Ty) -> Vec<String> {
    match ty {
        Ty::Scalar(_) => vec![name.to_string()],
        Ty::Array(_, n) => (0..n).map(|i| format!("{name}[{i}]")).collect(),
    }
}

fn collect_state(sym: &Sym, p: &TProgram, state_locals: &[LocalId]) -> Vec<TermId> {
    let mut out = Vec::new();
    for (g, cells) in p.globals.iter().zip(&sym.globals) {
        if !g.is_const {
            out.extend_from_slice(cells);
        }
    }
    for &l in state_locals {
        out.extend_from_slice(&sym.frames[0][l]);
    }
    out
}
