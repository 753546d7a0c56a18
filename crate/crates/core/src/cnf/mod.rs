//! Bit-blasting of transition systems into CNF.
//!
//! Two unrollings are built: the base-case formula, which asks for a
//! property violation within `k` steps from an initial state, and the step
//! formula, which asks for `k` property-satisfying states followed by a
//! violating one from an arbitrary starting state.

pub mod gates;

use std::collections::HashSet;
use std::fmt::Write as _;

pub use gates::{GateBuilder, Lit, ShiftKind, Word, FALSE, TRUE};

use crate::ts::term::{Op, TermId, TermStore};
use crate::ts::TransitionSystem;

/// Variable budget used by the builders unless configured otherwise.
pub const DEFAULT_VAR_BUDGET: u32 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("encoding exceeds the variable budget of {budget} (reached {reached})")]
    VarBudget { budget: u32, reached: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum StepHavoc {
    /// Every state variable starts unconstrained.
    #[default]
    FullState,
    /// Only input-dependent state variables start unconstrained; the others
    /// keep their initial values. Unsound in general, so experimental.
    InputsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    pub havoc: StepHavoc,
    pub var_budget: u32,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            havoc: StepHavoc::FullState,
            var_budget: DEFAULT_VAR_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaKind {
    Base,
    Step,
}

/// Literals of every unrolled quantity, little-endian per word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameMap {
    /// `state[i][v]`: bits of state variable `v` in frame `i` (`0..=k`).
    pub state: Vec<Vec<Word>>,
    /// `inputs[i][j]`: bits of step input `j` in the transition from frame `i`.
    pub inputs: Vec<Vec<Word>>,
    /// Bits of each init input (base formula only).
    pub init_inputs: Vec<Word>,
    /// Property literal per frame.
    pub property: Vec<Lit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    pub frame_map: FrameMap,
    pub kind: Option<FormulaKind>,
    pub k: u32,
}

impl CnfFormula {
    pub fn from_clauses(num_vars: u32, clauses: Vec<Vec<Lit>>) -> CnfFormula {
        CnfFormula {
            num_vars,
            clauses,
            frame_map: FrameMap::default(),
            kind: None,
            k: 0,
        }
    }
}

/// Variable assignment indexed by variable number (index 0 unused).
pub type Model = Vec<bool>;

pub fn lit_value(model: &[bool], l: Lit) -> bool {
    model[l.unsigned_abs() as usize] == (l > 0)
}

pub fn word_value(model: &[bool], w: &[Lit]) -> u64 {
    w.iter()
        .enumerate()
        .fold(0, |acc, (i, &l)| acc | ((lit_value(model, l) as u64) << i))
}

/// DIMACS text of a formula.
pub fn export_dimacs(f: &CnfFormula) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars, f.clauses.len());
    for c in &f.clauses {
        for l in c {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("DIMACS line {line}: {message}")]
pub struct DimacsError {
    pub line: usize,
    pub message: String,
}

/// Parses DIMACS CNF; comment lines are skipped and clauses may span lines.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut cur = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        let err = |m: &str| DimacsError {
            line: n + 1,
            message: m.to_string(),
        };
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(err("malformed header"));
            }
            let v = parts[2].parse().map_err(|_| err("bad variable count"))?;
            let c = parts[3].parse().map_err(|_| err("bad clause count"))?;
            header = Some((v, c));
            continue;
        }
        let (nv, _) = header.ok_or_else(|| err("clause before header"))?;
        for tok in line.split_whitespace() {
            let l: i64 = tok.parse().map_err(|_| err("bad literal"))?;
            if l == 0 {
                clauses.push(std::mem::take(&mut cur));
            } else {
                if l.unsigned_abs() > nv as u64 {
                    return Err(err("literal exceeds declared variable count"));
                }
                cur.push(l as Lit);
            }
        }
    }
    let (nv, _) = header.ok_or(DimacsError {
        line: 0,
        message: "missing header".into(),
    })?;
    if !cur.is_empty() {
        clauses.push(cur);
    }
    Ok(CnfFormula::from_clauses(nv, clauses))
}

/// Leaf bindings for one blasting context.
pub struct Env<'a> {
    pub state: &'a [Word],
    pub input: &'a [Word],
    pub init_input: &'a [Word],
}

/// Blasts terms of one store into a gate builder, one context at a time.
pub struct Blaster<'s> {
    store: &'s TermStore,
    memo: Vec<Option<Word>>,
}

impl<'s> Blaster<'s> {
    pub fn new(store: &'s TermStore) -> Blaster<'s> {
        Blaster {
            store,
            memo: vec![None; store.len()],
        }
    }

    /// Forgets results from the previous context.
    pub fn reset(&mut self) {
        self.memo.iter_mut().for_each(|m| *m = None);
    }

    pub fn blast(&mut self, g: &mut GateBuilder, env: &Env, root: TermId) -> Word {
        let mut stack = vec![(root, false)];
        while let Some((t, expanded)) = stack.pop() {
            if self.memo[t as usize].is_some() {
                continue;
            }
            let node = *self.store.node(t);
            if !expanded {
                stack.push((t, true));
                for c in node.op.children() {
                    if self.memo[c as usize].is_none() {
                        stack.push((c, false));
                    }
                }
                continue;
            }
            let w = self.node_word(g, env, t);
            debug_assert_eq!(w.len() as u32, node.width);
            self.memo[t as usize] = Some(w);
        }
        self.memo[root as usize].clone().expect("root blasted")
    }

    pub fn blast_bit(&mut self, g: &mut GateBuilder, env: &Env, root: TermId) -> Lit {
        self.blast(g, env, root)[0]
    }

    fn get(&self, t: TermId) -> &Word {
        self.memo[t as usize].as_ref().expect("child blasted first")
    }

    fn node_word(&self, g: &mut GateBuilder, env: &Env, t: TermId) -> Word {
        use Op::*;
        let node = *self.store.node(t);
        let w = node.width;
        match node.op {
            Const(c) => GateBuilder::const_word(c, w),
            State(i) => env.state[i as usize].clone(),
            Input(i) => env.input[i as usize].clone(),
            InitInput(i) => env.init_input[i as usize].clone(),
            Not(a) => GateBuilder::not_word(self.get(a)),
            And(a, b) => g.bitwise(self.get(a), self.get(b), GateBuilder::and),
            Or(a, b) => g.bitwise(self.get(a), self.get(b), GateBuilder::or),
            Xor(a, b) => g.bitwise(self.get(a), self.get(b), GateBuilder::xor),
            Neg(a) => g.neg(self.get(a)),
            Add(a, b) => g.add(self.get(a), self.get(b), FALSE),
            Sub(a, b) => g.sub(self.get(a), self.get(b)),
            Mul(a, b) => g.mul(self.get(a), self.get(b)),
            UDiv(a, b) => g.udiv(self.get(a), self.get(b)),
            URem(a, b) => g.urem(self.get(a), self.get(b)),
            SDiv(a, b) => g.sdiv(self.get(a), self.get(b)),
            SRem(a, b) => g.srem(self.get(a), self.get(b)),
            Shl(a, b) => g.shift(self.get(a), self.get(b), ShiftKind::Shl),
            LShr(a, b) => g.shift(self.get(a), self.get(b), ShiftKind::Lshr),
            AShr(a, b) => g.shift(self.get(a), self.get(b), ShiftKind::Ashr),
            Eq(a, b) => vec![g.eq(self.get(a), self.get(b))],
            Ult(a, b) => vec![g.ult(self.get(a), self.get(b))],
            Slt(a, b) => vec![g.slt(self.get(a), self.get(b))],
            Ite(c, a, b) => {
                let c = self.get(c)[0];
                g.ite_word(c, self.get(a), self.get(b))
            }
            ZExt(a) => {
                let mut x = self.get(a).clone();
                x.resize(w as usize, FALSE);
                x
            }
            SExt(a) => {
                let mut x = self.get(a).clone();
                let s = *x.last().expect("non-empty word");
                x.resize(w as usize, s);
                x
            }
            Trunc(a) => self.get(a)[..w as usize].to_vec(),
        }
    }
}

fn check_budget(g: &GateBuilder, budget: u32) -> Result<(), EncodeError> {
    if g.num_vars > budget {
        Err(EncodeError::VarBudget {
            budget,
            reached: g.num_vars,
        })
    } else {
        Ok(())
    }
}

/// Incremental unrolling of a transition system. Frames are added one at a
/// time; clauses produced since the last [`Unroller::take_clauses`] can be
/// handed to a live solver.
pub struct Unroller<'a> {
    ts: &'a TransitionSystem,
    g: GateBuilder,
    bl: Blaster<'a>,
    pub frames: FrameMap,
    /// Step-constraint literal of each transition.
    pub step_constraints: Vec<Lit>,
    /// Init-constraint literal (base unrollings only).
    pub init_constraint: Option<Lit>,
    taken: usize,
}

impl<'a> Unroller<'a> {
    fn empty(ts: &'a TransitionSystem) -> Unroller<'a> {
        Unroller {
            ts,
            g: GateBuilder::new(),
            bl: Blaster::new(&ts.store),
            frames: FrameMap::default(),
            step_constraints: Vec::new(),
            init_constraint: None,
            taken: 0,
        }
    }

    /// Frame 0 is the initial state over fresh init inputs. The init
    /// constraint literal is recorded but not asserted.
    pub fn from_init(ts: &'a TransitionSystem) -> Unroller<'a> {
        let mut u = Unroller::empty(ts);
        let init_inputs: Vec<Word> = ts.init_inputs.iter().map(|v| u.g.fresh_word(v.width())).collect();
        u.bl.reset();
        let env = Env {
            state: &[],
            input: &[],
            init_input: &init_inputs,
        };
        let s0 = ts.init.iter().map(|&t| u.bl.blast(&mut u.g, &env, t)).collect();
        let c = u.bl.blast_bit(&mut u.g, &env, ts.init_constraint);
        u.frames.state.push(s0);
        u.frames.init_inputs = init_inputs;
        u.init_constraint = Some(c);
        u
    }

    /// Frame 0 is unconstrained, or partly so under [`StepHavoc::InputsOnly`].
    pub fn from_havoc(ts: &'a TransitionSystem, havoc: StepHavoc) -> Unroller<'a> {
        match havoc {
            StepHavoc::FullState => {
                let mut u = Unroller::empty(ts);
                let s0 = ts.state_vars.iter().map(|v| u.g.fresh_word(v.width)).collect();
                u.frames.state.push(s0);
                u
            }
            StepHavoc::InputsOnly => {
                let mut u = Unroller::from_init(ts);
                let ic = u.init_constraint.take().expect("init unrolling");
                u.assert(ic);
                let dep = input_dependent_vars(ts);
                for (v, d) in dep.iter().enumerate() {
                    if *d {
                        let w = u.g.fresh_word(ts.state_vars[v].width);
                        u.frames.state[0][v] = w;
                    }
                }
                u
            }
        }
    }

    /// Number of transitions unrolled so far.
    pub fn depth(&self) -> usize {
        self.frames.state.len() - 1
    }

    pub fn num_vars(&self) -> u32 {
        self.g.num_vars
    }

    /// Adds one transition and the next frame.
    pub fn extend(&mut self) {
        let input: Vec<Word> = self.ts.inputs.iter().map(|v| self.g.fresh_word(v.width())).collect();
        self.bl.reset();
        let last = self.frames.state.last().expect("frame 0 exists").clone();
        let env = Env {
            state: &last,
            input: &input,
            init_input: &[],
        };
        let next = self.ts.next.iter().map(|&t| self.bl.blast(&mut self.g, &env, t)).collect();
        let c = self.bl.blast_bit(&mut self.g, &env, self.ts.step_constraint);
        self.frames.inputs.push(input);
        self.frames.state.push(next);
        self.step_constraints.push(c);
    }

    /// Property literal of frame `i`, blasted on first use.
    pub fn property(&mut self, i: usize) -> Lit {
        while self.frames.property.len() <= i {
            let j = self.frames.property.len();
            self.bl.reset();
            let st = self.frames.state[j].clone();
            let env = Env {
                state: &st,
                input: &[],
                init_input: &[],
            };
            let p = self.bl.blast_bit(&mut self.g, &env, self.ts.property);
            self.frames.property.push(p);
        }
        self.frames.property[i]
    }

    pub fn assert(&mut self, l: Lit) {
        self.g.clause(&[l]);
    }

    pub fn clause(&mut self, c: &[Lit]) {
        self.g.clause(c);
    }

    pub fn fresh(&mut self) -> Lit {
        self.g.fresh()
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        self.g.or(a, b)
    }

    /// Clauses added since the previous call.
    pub fn take_clauses(&mut self) -> &[Vec<Lit>] {
        let from = self.taken;
        self.taken = self.g.clauses.len();
        &self.g.clauses[from..]
    }

    pub fn check_budget(&self, budget: u32) -> Result<(), EncodeError> {
        check_budget(&self.g, budget)
    }

    pub fn into_formula(self, kind: FormulaKind) -> CnfFormula {
        let k = self.depth() as u32;
        CnfFormula {
            num_vars: self.g.num_vars,
            clauses: self.g.clauses,
            frame_map: self.frames,
            kind: Some(kind),
            k,
        }
    }
}

pub fn build_bmc_formula(ts: &TransitionSystem, k: u32) -> Result<CnfFormula, EncodeError> {
    build_bmc_formula_with(ts, k, &EncodeOptions::default())
}

/// Satisfiable iff some state reachable in at most `k` steps violates the
/// property. Each frame has a selector; the step constraint of transition
/// `i` only binds when the selected violation lies beyond it, so runs that
/// an `assume` cuts short still count at earlier frames.
pub fn build_bmc_formula_with(ts: &TransitionSystem, k: u32, opts: &EncodeOptions) -> Result<CnfFormula, EncodeError> {
    let mut u = Unroller::from_init(ts);
    let ic = u.init_constraint.expect("init unrolling");
    u.assert(ic);
    for _ in 0..k {
        u.extend();
        u.check_budget(opts.var_budget)?;
    }
    let mut selectors = Vec::new();
    for i in 0..=k as usize {
        let p = u.property(i);
        let sel = u.fresh();
        u.clause(&[-sel, -p]);
        selectors.push(sel);
    }
    // beyond holds when the selected frame is greater than i.
    let mut beyond = FALSE;
    for i in (0..k as usize).rev() {
        beyond = u.or(beyond, selectors[i + 1]);
        let c = u.step_constraints[i];
        u.clause(&[-beyond, c]);
    }
    u.clause(&selectors);
    u.check_budget(opts.var_budget)?;
    Ok(u.into_formula(FormulaKind::Base))
}

pub fn build_step_formula(ts: &TransitionSystem, k: u32) -> Result<CnfFormula, EncodeError> {
    build_step_formula_with(ts, k, &EncodeOptions::default())
}

/// State variables whose value can depend on a step input, closed under
/// the next-state dependency relation.
pub fn input_dependent_vars(ts: &TransitionSystem) -> Vec<bool> {
    let n = ts.state_vars.len();
    let mut deps: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    let mut direct = vec![false; n];
    for (v, &t) in ts.next.iter().enumerate() {
        let mark = ts.store.cone(&[t]);
        for (id, &m) in mark.iter().enumerate() {
            if !m {
                continue;
            }
            match ts.store.node(id as TermId).op {
                Op::Input(_) => direct[v] = true,
                Op::State(s) => {
                    deps[v].insert(s as usize);
                }
                _ => {}
            }
        }
    }
    let mut dep = direct;
    loop {
        let mut changed = false;
        for v in 0..n {
            if !dep[v] && deps[v].iter().any(|&s| dep[s]) {
                dep[v] = true;
                changed = true;
            }
        }
        if !changed {
            return dep;
        }
    }
}

/// Satisfiable iff there is a path of `k` transitions through
/// property-satisfying states ending in a violation, from a havoc'd start.
pub fn build_step_formula_with(ts: &TransitionSystem, k: u32, opts: &EncodeOptions) -> Result<CnfFormula, EncodeError> {
    let mut u = Unroller::from_havoc(ts, opts.havoc);
    for i in 0..k as usize {
        let p = u.property(i);
        u.assert(p);
        u.extend();
        let c = u.step_constraints[i];
        u.assert(c);
        u.check_budget(opts.var_budget)?;
    }
    let p = u.property(k as usize);
    u.assert(-p);
    u.check_budget(opts.var_budget)?;
    Ok(u.into_formula(FormulaKind::Step))
}

/// Concrete values read back from a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedTrace {
    pub init_inputs: Vec<u64>,
    /// Step inputs for each transition up to the violation.
    pub inputs: Vec<Vec<u64>>,
    pub states: Vec<Vec<u64>>,
    /// First frame whose property literal is false.
    pub violation: Option<usize>,
}

pub fn decode(f: &CnfFormula, model: &[bool]) -> DecodedTrace {
    let fm = &f.frame_map;
    let violation = fm.property.iter().position(|&p| !lit_value(model, p));
    let last = violation.unwrap_or(fm.state.len().saturating_sub(1));
    DecodedTrace {
        init_inputs: fm.init_inputs.iter().map(|w| word_value(model, w)).collect(),
        inputs: fm.inputs[..last.min(fm.inputs.len())]
            .iter()
            .map(|ws| ws.iter().map(|w| word_value(model, w)).collect())
            .collect(),
        states: fm.state[..=last.min(fm.state.len().saturating_sub(1))]
            .iter()
            .map(|ws| ws.iter().map(|w| word_value(model, w)).collect())
            .collect(),
        violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimacs_roundtrip() {
        let f = CnfFormula::from_clauses(2, vec![vec![1, -2]]);
        assert_eq!(export_dimacs(&f), "p cnf 2 1\n1 -2 0\n");
        assert_eq!(export_dimacs(&CnfFormula::from_clauses(0, vec![])), "p cnf 0 0\n");
        let back = parse_dimacs("c hi\np cnf 2 1\n1 -2 0\n").unwrap();
        assert_eq!(back.clauses, vec![vec![1, -2]]);
        assert!(parse_dimacs("p cnf 1 1\n3 0\n").is_err());
    }

    #[test]
    fn gate_sharing() {
        let mut g = GateBuilder::new();
        let a = g.fresh();
        let b = g.fresh();
        let x = g.and(a, b);
        assert_eq!(g.and(b, a), x);
        assert_eq!(g.xor(-a, b), -g.xor(a, b));
        assert_eq!(g.ite(-a, b, -b), g.ite(a, -b, b));
        assert_eq!(g.and(a, TRUE), a);
        assert_eq!(g.or(a, -a), TRUE);
    }
}
