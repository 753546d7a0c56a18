//! Hash-consed bit-vector terms.
//!
//! Every node has a width between 1 and 64. Children always have smaller ids
//! than their parents, so increasing id order is a topological order.

use std::collections::HashMap;

pub type TermId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Const(u64),
    /// Current-frame value of a state variable.
    State(u32),
    /// Per-step input.
    Input(u32),
    /// Input read by the init block.
    InitInput(u32),
    Not(TermId),
    And(TermId, TermId),
    Or(TermId, TermId),
    Xor(TermId, TermId),
    Neg(TermId),
    Add(TermId, TermId),
    Sub(TermId, TermId),
    Mul(TermId, TermId),
    /// Division and remainder by zero yield 0.
    UDiv(TermId, TermId),
    URem(TermId, TermId),
    SDiv(TermId, TermId),
    SRem(TermId, TermId),
    /// Shift amounts are taken modulo the width.
    Shl(TermId, TermId),
    LShr(TermId, TermId),
    AShr(TermId, TermId),
    /// Width-1 results.
    Eq(TermId, TermId),
    Ult(TermId, TermId),
    Slt(TermId, TermId),
    Ite(TermId, TermId, TermId),
    ZExt(TermId),
    SExt(TermId),
    Trunc(TermId),
}

impl Op {
    pub fn children(&self) -> Vec<TermId> {
        use Op::*;
        match *self {
            Const(_) | State(_) | Input(_) | InitInput(_) => vec![],
            Not(a) | Neg(a) | ZExt(a) | SExt(a) | Trunc(a) => vec![a],
            And(a, b) | Or(a, b) | Xor(a, b) | Add(a, b) | Sub(a, b) | Mul(a, b) | UDiv(a, b)
            | URem(a, b) | SDiv(a, b) | SRem(a, b) | Shl(a, b) | LShr(a, b) | AShr(a, b)
            | Eq(a, b) | Ult(a, b) | Slt(a, b) => vec![a, b],
            Ite(c, a, b) => vec![c, a, b],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub op: Op,
    pub width: u32,
}

pub fn mask(w: u32) -> u64 {
    if w >= 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

fn sext(v: u64, w: u32) -> i64 {
    if w >= 64 {
        v as i64
    } else {
        ((v << (64 - w)) as i64) >> (64 - w)
    }
}

/// Reference semantics of one node given the values of its children.
pub fn apply(op: &Op, width: u32, child_width: u32, v: &dyn Fn(TermId) -> u64) -> u64 {
    use Op::*;
    let m = mask(width);
    let cw = child_width;
    let r = match *op {
        Const(c) => c,
        State(_) | Input(_) | InitInput(_) => unreachable!("leaves have no semantics"),
        Not(a) => !v(a),
        And(a, b) => v(a) & v(b),
        Or(a, b) => v(a) | v(b),
        Xor(a, b) => v(a) ^ v(b),
        Neg(a) => v(a).wrapping_neg(),
        Add(a, b) => v(a).wrapping_add(v(b)),
        Sub(a, b) => v(a).wrapping_sub(v(b)),
        Mul(a, b) => v(a).wrapping_mul(v(b)),
        UDiv(a, b) => {
            let (x, y) = (v(a) & m, v(b) & m);
            if y == 0 {
                0
            } else {
                x / y
            }
        }
        URem(a, b) => {
            let (x, y) = (v(a) & m, v(b) & m);
            if y == 0 {
                0
            } else {
                x % y
            }
        }
        SDiv(a, b) => {
            let (x, y) = (sext(v(a), width), sext(v(b), width));
            if y == 0 {
                0
            } else {
                x.wrapping_div(y) as u64
            }
        }
        SRem(a, b) => {
            let (x, y) = (sext(v(a), width), sext(v(b), width));
            if y == 0 {
                0
            } else {
                x.wrapping_rem(y) as u64
            }
        }
        Shl(a, b) => v(a) << (v(b) % width as u64),
        LShr(a, b) => (v(a) & m) >> (v(b) % width as u64),
        AShr(a, b) => (sext(v(a), width) >> (v(b) % width as u64)) as u64,
        Eq(a, b) => ((v(a) & mask(cw)) == (v(b) & mask(cw))) as u64,
        Ult(a, b) => ((v(a) & mask(cw)) < (v(b) & mask(cw))) as u64,
        Slt(a, b) => (sext(v(a), cw) < sext(v(b), cw)) as u64,
        Ite(c, a, b) => {
            if v(c) & 1 != 0 {
                v(a)
            } else {
                v(b)
            }
        }
        ZExt(a) => v(a) & mask(cw),
        SExt(a) => sext(v(a), cw) as u64,
        Trunc(a) => v(a),
    };
    r & m
}

#[derive(Debug, Clone, Default)]
pub struct TermStore {
    nodes: Vec<Node>,
    table: HashMap<Node, TermId>,
}

impl TermStore {
    pub fn new() -> TermStore {
        TermStore::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, t: TermId) -> &Node {
        &self.nodes[t as usize]
    }

    pub fn width(&self, t: TermId) -> u32 {
        self.nodes[t as usize].width
    }

    pub fn as_const(&self, t: TermId) -> Option<u64> {
        match self.nodes[t as usize].op {
            Op::Const(c) => Some(c),
            _ => None,
        }
    }

    fn intern(&mut self, op: Op, width: u32) -> TermId {
        debug_assert!((1..=64).contains(&width));
        let node = Node { op, width };
        if let Some(&id) = self.table.get(&node) {
            return id;
        }
        let id = self.nodes.len() as TermId;
        self.nodes.push(node);
        self.table.insert(node, id);
        id
    }

    /// Width of the first child, used by comparisons and extensions.
    fn child_width(&self, op: &Op) -> u32 {
        op.children().first().map_or(0, |&c| self.width(c))
    }

    /// Creates a node, folding constants and applying local simplifications.
    pub fn mk(&mut self, op: Op, width: u32) -> TermId {
        use Op::*;
        let kids = op.children();
        if !kids.is_empty() && kids.iter().all(|&k| self.as_const(k).is_some()) {
            let cw = self.child_width(&op);
            let val = apply(&op, width, cw, &|t| self.as_const(t).unwrap());
            return self.konst(val, width);
        }
        let c = |s: &Self, t: TermId| s.as_const(t);
        let ones = mask(width);
        match op {
            Not(a) => {
                if let Not(x) = self.node(a).op {
                    return x;
                }
            }
            And(a, b) => {
                if a == b || c(self, b) == Some(ones) {
                    return a;
                }
                if c(self, a) == Some(ones) {
                    return b;
                }
                if c(self, a) == Some(0) || c(self, b) == Some(0) {
                    return self.konst(0, width);
                }
                if self.is_not_of(a, b) {
                    return self.konst(0, width);
                }
            }
            Or(a, b) => {
                if a == b || c(self, b) == Some(0) {
                    return a;
                }
                if c(self, a) == Some(0) {
                    return b;
                }
                if c(self, a) == Some(ones) || c(self, b) == Some(ones) {
                    return self.konst(ones, width);
                }
                if self.is_not_of(a, b) {
                    return self.konst(ones, width);
                }
            }
            Xor(a, b) => {
                if a == b {
                    return self.konst(0, width);
                }
                if c(self, b) == Some(0) {
                    return a;
                }
                if c(self, a) == Some(0) {
                    return b;
                }
            }
            Add(a, b) | Sub(a, b) if c(self, b) == Some(0) => return a,
            Add(a, b) if c(self, a) == Some(0) => return b,
            Mul(a, b) => {
                if c(self, a) == Some(0) || c(self, b) == Some(0) {
                    return self.konst(0, width);
                }
                if c(self, b) == Some(1) {
                    return a;
                }
                if c(self, a) == Some(1) {
                    return b;
                }
            }
            Shl(a, b) | LShr(a, b) | AShr(a, b) if c(self, b).map(|s| s % width as u64) == Some(0) => {
                return a
            }
            Eq(a, b) if a == b => return self.konst(1, 1),
            Ult(a, b) | Slt(a, b) if a == b => return self.konst(0, 1),
            Ite(cond, a, b) => {
                if a == b {
                    return a;
                }
                match c(self, cond) {
                    Some(1) => return a,
                    Some(0) => return b,
                    _ => {}
                }
                if width == 1 && c(self, a) == Some(1) && c(self, b) == Some(0) {
                    return cond;
                }
                if width == 1 && c(self, a) == Some(0) && c(self, b) == Some(1) {
                    return self.mk(Not(cond), 1);
                }
            }
            ZExt(a) | SExt(a) | Trunc(a) if self.width(a) == width => return a,
            _ => {}
        }
        let op = match op {
            // Canonical operand order for commutative operators.
            And(a, b) if a > b => And(b, a),
            Or(a, b) if a > b => Or(b, a),
            Xor(a, b) if a > b => Xor(b, a),
            Add(a, b) if a > b => Add(b, a),
            Mul(a, b) if a > b => Mul(b, a),
            Eq(a, b) if a > b => Eq(b, a),
            o => o,
        };
        self.intern(op, width)
    }

    fn is_not_of(&self, a: TermId, b: TermId) -> bool {
        self.node(a).op == Op::Not(b) || self.node(b).op == Op::Not(a)
    }

    pub fn konst(&mut self, v: u64, width: u32) -> TermId {
        self.intern(Op::Const(v & mask(width)), width)
    }

    pub fn tru(&mut self) -> TermId {
        self.konst(1, 1)
    }

    pub fn fals(&mut self) -> TermId {
        self.konst(0, 1)
    }

    pub fn leaf(&mut self, op: Op, width: u32) -> TermId {
        self.intern(op, width)
    }

    pub fn not(&mut self, a: TermId) -> TermId {
        let w = self.width(a);
        self.mk(Op::Not(a), w)
    }

    pub fn and(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.width(a);
        self.mk(Op::And(a, b), w)
    }

    pub fn or(&mut self, a: TermId, b: TermId) -> TermId {
        let w = self.width(a);
        self.mk(Op::Or(a, b), w)
    }

    pub fn implies(&mut self, a: TermId, b: TermId) -> TermId {
        let na = self.not(a);
        self.or(na, b)
    }

    pub fn ite(&mut self, c: TermId, a: TermId, b: TermId) -> TermId {
        let w = self.width(a);
        self.mk(Op::Ite(c, a, b), w)
    }

    pub fn eq(&mut self, a: TermId, b: TermId) -> TermId {
        self.mk(Op::Eq(a, b), 1)
    }

    pub fn bin(&mut self, op: fn(TermId, TermId) -> Op, a: TermId, b: TermId) -> TermId {
        let w = self.width(a);
        self.mk(op(a, b), w)
    }

    /// Zero- or sign-extends, or truncates, to `width`.
    pub fn resize(&mut self, a: TermId, width: u32, signed: bool) -> TermId {
        let w = self.width(a);
        if width == w {
            a
        } else if width < w {
            self.mk(Op::Trunc(a), width)
        } else if signed {
            self.mk(Op::SExt(a), width)
        } else {
            self.mk(Op::ZExt(a), width)
        }
    }

    /// Marks every node reachable from `roots`.
    pub fn cone(&self, roots: &[TermId]) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        let mut stack: Vec<TermId> = roots.to_vec();
        while let Some(t) = stack.pop() {
            if std::mem::replace(&mut mark[t as usize], true) {
                continue;
            }
            stack.extend(self.node(t).op.children());
        }
        mark
    }
}

/// Evaluates a fixed set of root terms repeatedly on different leaf values.
pub struct Evaluator {
    order: Vec<TermId>,
    vals: Vec<u64>,
}

/// Leaf values for one evaluation.
pub struct Leaves<'a> {
    pub state: &'a [u64],
    pub input: &'a [u64],
    pub init_input: &'a [u64],
}

impl Evaluator {
    pub fn new(store: &TermStore, roots: &[TermId]) -> Evaluator {
        let mark = store.cone(roots);
        let order = (0..store.len() as TermId).filter(|&t| mark[t as usize]).collect();
        Evaluator {
            order,
            vals: vec![0; store.len()],
        }
    }

    pub fn run(&mut self, store: &TermStore, leaves: &Leaves) {
        for &t in &self.order {
            let node = store.node(t);
            let v = match node.op {
                Op::State(i) => leaves.state[i as usize],
                Op::Input(i) => leaves.input[i as usize],
                Op::InitInput(i) => leaves.init_input[i as usize],
                ref op => {
                    let cw = op.children().first().map_or(0, |&c| store.width(c));
                    let vals = &self.vals;
                    apply(op, node.width, cw, &|c| vals[c as usize])
                }
            };
            self.vals[t as usize] = v & mask(node.width);
        }
    }

    pub fn get(&self, t: TermId) -> u64 {
        self.vals[t as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding_and_sharing() {
        let mut s = TermStore::new();
        let x = s.leaf(Op::State(0), 8);
        let one = s.konst(1, 8);
        let a = s.bin(Op::Add, x, one);
        let b = s.bin(Op::Add, one, x);
        assert_eq!(a, b);
        let two = s.konst(2, 8);
        let three = s.bin(Op::Add, one, two);
        assert_eq!(s.as_const(three), Some(3));
        let z = s.konst(0, 8);
        assert_eq!(s.and(x, z), z);
        let nx = s.not(x);
        assert_eq!(s.not(nx), x);
    }

    #[test]
    fn evaluator_matches_apply() {
        let mut s = TermStore::new();
        let x = s.leaf(Op::State(0), 8);
        let y = s.leaf(Op::Input(0), 8);
        let q = s.bin(Op::SDiv, x, y);
        let c = s.mk(Op::Slt(x, y), 1);
        let mut ev = Evaluator::new(&s, &[q, c]);
        ev.run(
            &s,
            &Leaves {
                state: &[0x80],
                input: &[0xff],
                init_input: &[],
            },
        );
        assert_eq!(ev.get(q), 0x80);
        assert_eq!(ev.get(c), 1);
    }
}
