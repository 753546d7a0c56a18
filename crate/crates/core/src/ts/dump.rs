//! Plain-text rendering of a transition system.
//!
//! ```text
//! state c: u8 init t3 next t9
//! input in: u8
//! init_constraint t1
//! step_constraint t1
//! property t12
//! t3 = const 0 : 8
//! t9 = ite t7 t3 t8 : 8
//! ```
//!
//! Term lines list every node reachable from the roots in id order, with its
//! operator, operands and width.

use super::term::{Op, TermId};
use super::TransitionSystem;
use std::fmt::Write;

fn op_text(op: &Op) -> String {
    use Op::*;
    let t = |x: &TermId| format!("t{x}");
    let two = |n: &str, a: &TermId, b: &TermId| format!("{n} {} {}", t(a), t(b));
    match op {
        Const(c) => format!("const {c}"),
        State(i) => format!("state #{i}"),
        Input(i) => format!("input #{i}"),
        InitInput(i) => format!("init_input #{i}"),
        Not(a) => format!("not {}", t(a)),
        Neg(a) => format!("neg {}", t(a)),
        ZExt(a) => format!("zext {}", t(a)),
        SExt(a) => format!("sext {}", t(a)),
        Trunc(a) => format!("trunc {}", t(a)),
        And(a, b) => two("and", a, b),
        Or(a, b) => two("or", a, b),
        Xor(a, b) => two("xor", a, b),
        Add(a, b) => two("add", a, b),
        Sub(a, b) => two("sub", a, b),
        Mul(a, b) => two("mul", a, b),
        UDiv(a, b) => two("udiv", a, b),
        URem(a, b) => two("urem", a, b),
        SDiv(a, b) => two("sdiv", a, b),
        SRem(a, b) => two("srem", a, b),
        Shl(a, b) => two("shl", a, b),
        LShr(a, b) => two("lshr", a, b),
        AShr(a, b) => two("ashr", a, b),
        Eq(a, b) => two("eq", a, b),
        Ult(a, b) => two("ult", a, b),
        Slt(a, b) => two("slt", a, b),
        Ite(c, a, b) => format!("ite {} {} {}", t(c), t(a), t(b)),
    }
}

pub fn dump(ts: &TransitionSystem) -> String {
    let mut out = String::new();
    for (k, v) in ts.state_vars.iter().enumerate() {
        let _ = writeln!(out, "state {}: {} init t{} next t{}", v.name, v.ty, ts.init[k], ts.next[k]);
    }
    for v in &ts.init_inputs {
        let _ = writeln!(out, "init_input {}: {}", v.name, v.ty);
    }
    for v in &ts.inputs {
        let _ = writeln!(out, "input {}: {}", v.name, v.ty);
    }
    let _ = writeln!(out, "init_constraint t{}", ts.init_constraint);
    let _ = writeln!(out, "step_constraint t{}", ts.step_constraint);
    let _ = writeln!(out, "property t{}", ts.property);
    let mut roots: Vec<TermId> = ts.init.iter().chain(&ts.next).copied().collect();
    roots.extend([ts.init_constraint, ts.step_constraint, ts.property]);
    let mark = ts.store.cone(&roots);
    for (id, &m) in mark.iter().enumerate() {
        if m {
            let n = ts.store.node(id as TermId);
            let _ = writeln!(out, "t{id} = {} : {}", op_text(&n.op), n.width);
        }
    }
    out
}
