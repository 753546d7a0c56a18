//! Interval analysis over the transition system and injection of the
//! resulting ranges as `assume` statements at the loop head.
//!
//! Intervals are over the unsigned bit pattern of each state cell. Branch
//! conditions comparing a state cell against something refine that cell
//! inside the branch. Iteration joins successive states; from the fourth
//! round on, growing bounds jump to the next constant found in the system
//! (or the type bound). There is no narrowing pass.

use std::collections::HashMap;

use serde::Serialize;

use super::{retype, ReduceError, ReductionReport};
use crate::lang::ast::{BinOp, Expr, Stmt};
use crate::lang::interp::state_cell_names;
use crate::lang::{Scalar, TypedProgram};
use crate::ts::term::{apply, mask, Op, TermId, TermStore};
use crate::ts::{extract, ExtractError, TransitionSystem};

/// Rounds of plain joins before widening kicks in.
pub const WIDEN_AFTER: usize = 3;
/// Cap on distinct refined environments per evaluation round.
const MAX_ENVS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Interval {
    pub lo: u64,
    pub hi: u64,
}

impl Interval {
    pub fn new(lo: u64, hi: u64) -> Interval {
        Interval { lo, hi }
    }

    pub fn top(w: u32) -> Interval {
        Interval { lo: 0, hi: mask(w) }
    }

    fn point(v: u64) -> Interval {
        Interval { lo: v, hi: v }
    }

    fn single(self) -> Option<u64> {
        (self.lo == self.hi).then_some(self.lo)
    }

    pub fn join(self, o: Interval) -> Interval {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    pub fn contains(self, o: Interval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    fn meet(self, o: Interval) -> Option<Interval> {
        let (lo, hi) = (self.lo.max(o.lo), self.hi.min(o.hi));
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

/// All ones up to the highest set bit of `x`.
fn fill(x: u64) -> u64 {
    if x == 0 {
        0
    } else {
        u64::MAX >> x.leading_zeros()
    }
}

fn bool_iv(t: bool, f: bool) -> Interval {
    match (t, f) {
        (true, false) => Interval::point(1),
        (false, true) => Interval::point(0),
        _ => Interval::new(0, 1),
    }
}

type EnvId = usize;

struct Analyzer<'a> {
    store: &'a TermStore,
    envs: Vec<Vec<Interval>>,
    env_ids: HashMap<Vec<Interval>, EnvId>,
    memo: HashMap<(TermId, EnvId), Interval>,
}

impl<'a> Analyzer<'a> {
    fn new(store: &'a TermStore) -> Analyzer<'a> {
        Analyzer {
            store,
            envs: Vec::new(),
            env_ids: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    fn reset(&mut self) {
        self.envs.clear();
        self.env_ids.clear();
        self.memo.clear();
    }

    fn intern(&mut self, env: Vec<Interval>) -> Option<EnvId> {
        if let Some(&id) = self.env_ids.get(&env) {
            return Some(id);
        }
        if self.envs.len() >= MAX_ENVS {
            return None;
        }
        let id = self.envs.len();
        self.envs.push(env.clone());
        self.env_ids.insert(env, id);
        Some(id)
    }

    fn value(&mut self, root: TermId, env: EnvId) -> Interval {
        if let Some(&v) = self.memo.get(&(root, env)) {
            return v;
        }
        let mut order = Vec::new();
        let mut stack = vec![root];
        let mut seen = std::collections::HashSet::new();
        while let Some(t) = stack.pop() {
            if self.memo.contains_key(&(t, env)) || !seen.insert(t) {
                continue;
            }
            order.push(t);
            stack.extend(self.store.node(t).op.children());
        }
        order.sort_unstable();
        for t in order {
            let v = self.transfer(t, env);
            self.memo.insert((t, env), v);
        }
        self.memo[&(root, env)]
    }

    fn get(&self, t: TermId, env: EnvId) -> Interval {
        self.memo[&(t, env)]
    }

    /// State cell behind a term that carries its value unchanged.
    fn leaf(&self, t: TermId) -> Option<usize> {
        match self.store.node(t).op {
            Op::State(i) => Some(i as usize),
            Op::ZExt(a) => self.leaf(a),
            _ => None,
        }
    }

    /// Environment in which `cond` evaluates to `truth`; `None` when that is
    /// impossible. Unrecognised conditions leave the environment unchanged.
    fn refine(&mut self, env: EnvId, cond: TermId, truth: bool) -> Option<EnvId> {
        let mut cells = self.envs[env].clone();
        if !self.refine_cells(env, &mut cells, cond, truth) {
            return None;
        }
        Some(self.intern(cells).unwrap_or(env))
    }

    fn refine_cells(&mut self, env: EnvId, cells: &mut [Interval], cond: TermId, truth: bool) -> bool {
        let node = *self.store.node(cond);
        match node.op {
            Op::Not(c) if node.width == 1 => self.refine_cells(env, cells, c, !truth),
            Op::And(a, b) if node.width == 1 && truth => {
                self.refine_cells(env, cells, a, true) && self.refine_cells(env, cells, b, true)
            }
            Op::Or(a, b) if node.width == 1 && !truth => {
                self.refine_cells(env, cells, a, false) && self.refine_cells(env, cells, b, false)
            }
            Op::Eq(x, y) => {
                let (xv, yv) = (self.value(x, env), self.value(y, env));
                for (side, other) in [(x, yv), (y, xv)] {
                    let Some(i) = self.leaf(side) else { continue };
                    let cur = cells[i];
                    if truth {
                        match cur.meet(other) {
                            Some(m) => cells[i] = m,
                            None => return false,
                        }
                    } else if let Some(v) = other.single() {
                        let mut n = cur;
                        if n.lo == v {
                            n.lo = n.lo.wrapping_add(1);
                        }
                        if n.hi == v {
                            n.hi = n.hi.wrapping_sub(1);
                        }
                        if cur.single() == Some(v) || n.lo > n.hi {
                            return false;
                        }
                        cells[i] = n;
                    }
                }
                true
            }
            Op::Ult(x, y) => self.refine_less(env, cells, x, y, truth),
            Op::Slt(x, y) => {
                let cw = self.store.width(x);
                let half = 1u64 << (cw - 1);
                let (xv, yv) = (self.value(x, env), self.value(y, env));
                let same_half = |v: Interval| v.hi < half || v.lo >= half;
                let both_nonneg = xv.hi < half && yv.hi < half;
                let both_neg = xv.lo >= half && yv.lo >= half;
                if same_half(xv) && same_half(yv) && (both_nonneg || both_neg) {
                    self.refine_less(env, cells, x, y, truth)
                } else {
                    true
                }
            }
            _ => true,
        }
    }

    /// Refines for `x < y` (unsigned) being `truth`.
    fn refine_less(&mut self, env: EnvId, cells: &mut [Interval], x: TermId, y: TermId, truth: bool) -> bool {
        let (xv, yv) = (self.value(x, env), self.value(y, env));
        if let Some(i) = self.leaf(x) {
            let bound = if truth {
                if yv.hi == 0 {
                    return false;
                }
                Interval::new(0, yv.hi - 1)
            } else {
                Interval::new(yv.lo, u64::MAX)
            };
            match cells[i].meet(bound) {
                Some(m) => cells[i] = m,
                None => return false,
            }
        }
        if let Some(j) = self.leaf(y) {
            let bound = if truth {
                match xv.lo.checked_add(1) {
                    Some(l) => Interval::new(l, u64::MAX),
                    None => return false,
                }
            } else {
                Interval::new(0, xv.hi)
            };
            match cells[j].meet(bound) {
                Some(m) => cells[j] = m,
                None => return false,
            }
        }
        true
    }

    fn transfer(&mut self, t: TermId, env: EnvId) -> Interval {
        use Op::*;
        let node = *self.store.node(t);
        let w = node.width;
        let m = mask(w);
        let top = Interval::top(w);
        let kids = node.op.children();

        match node.op {
            Const(c) => return Interval::point(c & m),
            State(i) => return self.envs[env][i as usize],
            Input(_) | InitInput(_) => return top,
            Ite(c, a, b) => {
                let cv = self.get(c, env);
                let then_env = if cv.hi == 1 { self.refine(env, c, true) } else { None };
                let else_env = if cv.lo == 0 { self.refine(env, c, false) } else { None };
                return match (then_env, else_env) {
                    (Some(te), Some(ee)) => self.value(a, te).join(self.value(b, ee)),
                    (Some(te), None) => self.value(a, te),
                    (None, Some(ee)) => self.value(b, ee),
                    (None, None) => self.get(a, env).join(self.get(b, env)),
                };
            }
            _ => {}
        }

        let vals: Vec<Interval> = kids.iter().map(|&k| self.get(k, env)).collect();
        if vals.iter().all(|v| v.single().is_some()) {
            let cw = kids.first().map_or(0, |&k| self.store.width(k));
            let lookup: HashMap<TermId, u64> = kids.iter().zip(&vals).map(|(&k, v)| (k, v.lo)).collect();
            return Interval::point(apply(&node.op, w, cw, &|k| lookup[&k]));
        }
        let a = vals[0];
        let b = vals.get(1).copied().unwrap_or(a);
        let wide = |lo: u128, hi: u128| -> Interval {
            if hi <= m as u128 {
                Interval::new(lo as u64, hi as u64)
            } else {
                top
            }
        };
        match node.op {
            Not(_) => Interval::new(m - a.hi, m - a.lo),
            And(..) => Interval::new(0, a.hi.min(b.hi)),
            Or(..) => Interval::new(a.lo.max(b.lo), fill(a.hi.max(b.hi)) & m),
            Xor(..) => Interval::new(0, fill(a.hi.max(b.hi)) & m),
            Neg(_) if a.lo > 0 => Interval::new(m - a.hi + 1, m - a.lo + 1),
            Add(..) => {
                let (lo, hi) = (a.lo as u128 + b.lo as u128, a.hi as u128 + b.hi as u128);
                let modulus = m as u128 + 1;
                if hi <= m as u128 {
                    Interval::new(lo as u64, hi as u64)
                } else if lo >= modulus {
                    Interval::new((lo - modulus) as u64, (hi - modulus) as u64)
                } else {
                    top
                }
            }
            Sub(..) => {
                if a.lo >= b.hi {
                    Interval::new(a.lo - b.hi, a.hi - b.lo)
                } else if a.hi < b.lo {
                    let modulus = m as u128 + 1;
                    let lo = modulus + a.lo as u128 - b.hi as u128;
                    let hi = modulus + a.hi as u128 - b.lo as u128;
                    wide(lo, hi)
                } else {
                    top
                }
            }
            Mul(..) => wide(a.lo as u128 * b.lo as u128, a.hi as u128 * b.hi as u128),
            UDiv(..) => {
                if b.lo > 0 {
                    Interval::new(a.lo / b.hi, a.hi / b.lo)
                } else {
                    Interval::new(0, a.hi)
                }
            }
            URem(..) => Interval::new(0, a.hi.min(b.hi.saturating_sub(1))),
            Shl(..) => match b.single() {
                Some(s) => {
                    let s = (s % w as u64) as u32;
                    wide((a.lo as u128) << s, (a.hi as u128) << s)
                }
                None => top,
            },
            LShr(..) => {
                if b.hi < w as u64 {
                    Interval::new(a.lo >> b.hi, a.hi >> b.lo)
                } else {
                    Interval::new(0, a.hi)
                }
            }
            AShr(..) if a.hi < 1u64 << (w - 1) && b.hi < w as u64 => Interval::new(a.lo >> b.hi, a.hi >> b.lo),
            Eq(..) => bool_iv(false, a.meet(b).is_none()),
            Ult(..) => bool_iv(a.hi < b.lo, a.lo >= b.hi),
            Slt(..) => {
                let half = 1u64 << (self.store.width(kids[0]) - 1);
                let same = (a.hi < half && b.hi < half) || (a.lo >= half && b.lo >= half);
                if same {
                    bool_iv(a.hi < b.lo, a.lo >= b.hi)
                } else {
                    Interval::new(0, 1)
                }
            }
            ZExt(_) => a,
            SExt(_) => {
                let cw = self.store.width(kids[0]);
                let half = 1u64 << (cw - 1);
                if a.hi < half {
                    a
                } else if a.lo >= half {
                    let ext = m - mask(cw);
                    Interval::new(a.lo + ext, a.hi + ext)
                } else {
                    top
                }
            }
            Trunc(_) => {
                if a.hi <= m {
                    a
                } else if a.hi - a.lo <= m && (a.lo & m) <= (a.hi & m) {
                    Interval::new(a.lo & m, a.hi & m)
                } else {
                    top
                }
            }
            _ => top,
        }
    }
}

fn thresholds(store: &TermStore) -> Vec<u64> {
    let mut out = vec![0];
    for t in 0..store.len() as TermId {
        if let Some(c) = store.as_const(t) {
            out.extend([c.wrapping_sub(1), c, c.wrapping_add(1)]);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn widen(old: Interval, new: Interval, w: u32, th: &[u64]) -> Interval {
    let m = mask(w);
    let hi = if new.hi > old.hi {
        th.iter().copied().find(|&t| t >= new.hi && t <= m).unwrap_or(m)
    } else {
        new.hi
    };
    let lo = if new.lo < old.lo {
        th.iter().rev().copied().find(|&t| t <= new.lo).unwrap_or(0)
    } else {
        new.lo
    };
    Interval::new(lo, hi)
}

/// Over-approximates the values of every state variable at the loop head.
pub fn system_intervals(ts: &TransitionSystem) -> Vec<Interval> {
    let mut an = Analyzer::new(&ts.store);
    let n = ts.state_vars.len();
    let base = an.intern(vec![Interval::new(0, 0); n]).expect("first environment");
    let mut cur: Vec<Interval> = ts.init.iter().map(|&t| an.value(t, base)).collect();
    let th = thresholds(&ts.store);
    let mut round = 0;
    loop {
        an.reset();
        let env = an.intern(cur.clone()).expect("first environment");
        let next: Vec<Interval> = ts.next.iter().map(|&t| an.value(t, env)).collect();
        let joined: Vec<Interval> = cur.iter().zip(&next).map(|(a, b)| a.join(*b)).collect();
        if joined == cur {
            return cur;
        }
        round += 1;
        cur = if round > WIDEN_AFTER {
            cur.iter()
                .zip(&joined)
                .zip(&ts.state_vars)
                .map(|((o, j), v)| widen(*o, *j, v.width, &th))
                .collect()
        } else {
            joined
        };
    }
}

/// Loop-head interval of every program state cell, by cell name.
pub fn analyze_intervals(tp: &TypedProgram) -> Result<Vec<(String, Interval)>, ExtractError> {
    let ts = extract(tp)?;
    let ivs = system_intervals(&ts);
    Ok(state_cell_names(tp)
        .into_iter()
        .zip(ivs)
        .map(|((name, _), iv)| (name, iv))
        .collect())
}

fn cell_expr(name: &str) -> Expr {
    match name.split_once('[') {
        Some((base, rest)) => {
            let idx: u64 = rest.trim_end_matches(']').parse().expect("cell index");
            Expr::Index(base.to_string(), Box::new(Expr::Int(idx)))
        }
        None => Expr::var(name),
    }
}

/// The range check for one cell, or `None` when the interval says nothing
/// expressible about it.
fn range_check(name: &str, ty: Scalar, iv: Interval) -> Option<Expr> {
    if !ty.is_integer() {
        return None;
    }
    let w = ty.width();
    let (lo, hi) = if ty.is_signed() {
        let half = 1u64 << (w - 1);
        let shift = |v: u64| if v >= half { v as i64 - (1i64 << w) } else { v as i64 };
        if (iv.hi < half) || (iv.lo >= half) {
            (shift(iv.lo), shift(iv.hi))
        } else {
            return None;
        }
    } else {
        (iv.lo as i64, iv.hi as i64)
    };
    let (min, max) = ty.int_range();
    let v = cell_expr(name);
    let mut parts = Vec::new();
    if lo > min {
        parts.push(Expr::bin(BinOp::Le, Expr::int(lo), v.clone()));
    }
    if hi < max {
        parts.push(Expr::bin(BinOp::Le, v, Expr::int(hi)));
    }
    parts.into_iter().reduce(|a, b| Expr::bin(BinOp::And, a, b))
}

/// Adds `assume(lo <= v && v <= hi)` at the head of the main loop for every
/// state cell whose range is narrower than its type. Programs the extractor
/// rejects come back unchanged.
pub fn inject_value_assumes(tp: &TypedProgram) -> Result<(TypedProgram, ReductionReport), ReduceError> {
    let Ok(ts) = extract(tp) else {
        return Ok((tp.clone(), ReductionReport::new("inject_value_assumes", tp, tp)));
    };
    let ivs = system_intervals(&ts);
    let checks: Vec<Stmt> = state_cell_names(tp)
        .into_iter()
        .zip(ivs)
        .filter_map(|((name, ty), iv)| range_check(&name, ty, iv))
        .map(Stmt::Assume)
        .collect();
    let injected = checks.len();
    let mut src = tp.source.clone();
    let main = src.function_mut("main").expect("checked program has main");
    match main.body.last_mut() {
        Some(Stmt::While { body, .. }) => {
            body.splice(0..0, checks);
        }
        _ => return Ok((tp.clone(), ReductionReport::new("inject_value_assumes", tp, tp))),
    }
    let out = retype(&src)?;
    let mut report = ReductionReport::new("inject_value_assumes", tp, &out);
    report.injected = injected;
    Ok((out, report))
}
