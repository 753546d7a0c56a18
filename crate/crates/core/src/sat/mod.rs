//! A CDCL SAT solver.
//!
//! Two-watched-literal propagation with blockers, first-UIP learning with
//! local minimisation, VSIDS over an indexed heap, phase saving, Luby
//! restarts and LBD-guided clause database reduction. Solving under
//! assumptions, wall-clock deadlines, conflict limits and external
//! cancellation are supported. Every satisfying model is checked against the
//! input clauses before it is returned.

mod external;
mod heap;

pub use external::{solve_external, ExternalError};

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cnf::CnfFormula;
use heap::VarHeap;

/// Learned-clause limit is this multiple of the original clause count...
pub const REDUCE_FACTOR: usize = 4;
/// ...but never below this many clauses.
pub const REDUCE_FLOOR: usize = 10_000;
pub const RESTART_BASE: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownCause {
    Timeout,
    Cancelled,
    ConflictLimit,
    /// The solver produced an assignment that violates a clause.
    ModelCheckFailed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// Model indexed by DIMACS variable; index 0 is unused.
    Sat(Vec<bool>),
    Unsat,
    Unknown(UnknownCause),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub max_conflicts: Option<u64>,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Budget {
    pub fn unlimited() -> Budget {
        Budget::default()
    }

    pub fn timeout(d: Duration) -> Budget {
        Budget {
            deadline: Some(Instant::now() + d),
            ..Budget::default()
        }
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Budget {
        self.cancel = Some(flag);
        self
    }

    fn exhausted(&self, conflicts: u64) -> Option<UnknownCause> {
        if let Some(c) = &self.cancel {
            if c.load(Ordering::Relaxed) {
                return Some(UnknownCause::Cancelled);
            }
        }
        if let Some(m) = self.max_conflicts {
            if conflicts >= m {
                return Some(UnknownCause::ConflictLimit);
            }
        }
        if let Some(d) = self.deadline {
            if Instant::now() >= d {
                return Some(UnknownCause::Timeout);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub seed: u64,
    /// Probability of a random branching variable.
    pub random_freq: f64,
    pub var_decay: f64,
    pub clause_decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            random_freq: 0.005,
            var_decay: 0.95,
            clause_decay: 0.999,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub reductions: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct L(u32);

impl L {
    fn from_dimacs(l: i32) -> L {
        let v = l.unsigned_abs() - 1;
        L(2 * v + (l < 0) as u32)
    }
    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }
    fn neg(self) -> L {
        L(self.0 ^ 1)
    }
    fn idx(self) -> usize {
        self.0 as usize
    }
    fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }
}

const FALSE_V: u8 = 0;
const TRUE_V: u8 = 1;
const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;

#[inline]
fn val(assigns: &[u8], l: L) -> u8 {
    let a = assigns[l.var()];
    if a == UNDEF {
        UNDEF
    } else {
        a ^ (l.is_neg() as u8)
    }
}

#[derive(Debug, Clone)]
struct Clause {
    lits: Vec<L>,
    learnt: bool,
    deleted: bool,
    act: f64,
    lbd: u32,
}

#[derive(Debug, Clone, Copy)]
struct Watch {
    cref: u32,
    blocker: L,
}

pub struct Solver {
    num_vars: usize,
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<L>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    original: Vec<Vec<i32>>,
    max_learnts: f64,
    rng: ChaCha8Rng,
    cfg: SolverConfig,
    pub stats: SolverStats,
}

impl Solver {
    pub fn new(num_vars: u32, cfg: SolverConfig) -> Solver {
        let n = num_vars as usize;
        let mut heap = VarHeap::new(n);
        let activity = vec![0.0; n];
        for v in 0..n {
            heap.insert(v, &activity);
        }
        Solver {
            num_vars: n,
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![UNDEF; n],
            level: vec![0; n],
            reason: vec![NO_REASON; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            activity,
            var_inc: 1.0,
            cla_inc: 1.0,
            heap,
            phase: vec![false; n],
            seen: vec![false; n],
            ok: true,
            original: Vec::new(),
            max_learnts: 0.0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            stats: SolverStats::default(),
        }
    }

    pub fn from_formula(f: &CnfFormula, cfg: SolverConfig) -> Solver {
        let mut s = Solver::new(f.num_vars, cfg);
        for c in &f.clauses {
            s.add_clause(c);
        }
        s
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars as u32
    }

    /// Grows the variable range to at least `n` variables.
    pub fn ensure_vars(&mut self, n: u32) {
        while self.num_vars < n as usize {
            let v = self.num_vars;
            self.num_vars += 1;
            self.assigns.push(UNDEF);
            self.level.push(0);
            self.reason.push(NO_REASON);
            self.activity.push(0.0);
            self.phase.push(false);
            self.seen.push(false);
            self.watches.push(Vec::new());
            self.watches.push(Vec::new());
            self.heap.grow(self.num_vars);
            self.heap.insert(v, &self.activity);
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause of DIMACS literals. Must be called at decision level 0.
    pub fn add_clause(&mut self, lits: &[i32]) {
        self.original.push(lits.to_vec());
        if let Some(m) = lits.iter().map(|l| l.unsigned_abs()).max() {
            self.ensure_vars(m);
        }
        if !self.ok {
            return;
        }
        self.cancel_until(0);
        let mut c: Vec<L> = lits.iter().map(|&l| L::from_dimacs(l)).collect();
        c.sort_by_key(|l| l.0);
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == l.neg() {
                return;
            }
            match val(&self.assigns, l) {
                TRUE_V => return,
                FALSE_V => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(out[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                self.attach(out, false, 0);
            }
        }
    }

    fn attach(&mut self, lits: Vec<L>, learnt: bool, lbd: u32) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].neg().idx()].push(Watch { cref, blocker: lits[1] });
        self.watches[lits[1].neg().idx()].push(Watch { cref, blocker: lits[0] });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            act: 0.0,
            lbd,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn enqueue(&mut self, l: L, reason: u32) {
        let v = l.var();
        self.assigns[v] = (!l.is_neg()) as u8;
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p.neg();
            let mut ws = std::mem::take(&mut self.watches[p.idx()]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if val(&self.assigns, w.blocker) == TRUE_V {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let c = &mut self.clauses[w.cref as usize];
                if c.deleted {
                    continue;
                }
                if c.lits[0] == false_lit {
                    c.lits.swap(0, 1);
                }
                let first = c.lits[0];
                let nw = Watch {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && val(&self.assigns, first) == TRUE_V {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.lits.len() {
                    if val(&self.assigns, c.lits[k]) != FALSE_V {
                        c.lits.swap(1, k);
                        self.watches[c.lits[1].neg().idx()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if val(&self.assigns, first) == FALSE_V {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                    self.qhead = self.trail.len();
                } else {
                    let v = first.var();
                    self.assigns[v] = (!first.is_neg()) as u8;
                    self.level[v] = self.trail_lim.len() as u32;
                    self.reason[v] = w.cref;
                    self.trail.push(first);
                }
            }
            ws.truncate(j);
            self.watches[p.idx()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        c.act += self.cla_inc;
        if c.act > 1e20 {
            for &r in &self.learnts {
                self.clauses[r as usize].act *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// Returns the learnt clause (asserting literal first) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<L>, usize) {
        let dl = self.decision_level() as u32;
        let mut learnt = vec![L(0)];
        let mut path = 0usize;
        let mut p: Option<L> = None;
        let mut idx = self.trail.len();
        loop {
            if self.clauses[confl as usize].learnt {
                self.bump_clause(confl);
            }
            let start = usize::from(p.is_some());
            let lits = self.clauses[confl as usize].lits[start..].to_vec();
            for q in lits {
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let pl = self.trail[idx];
            confl = self.reason[pl.var()];
            self.seen[pl.var()] = false;
            path -= 1;
            p = Some(pl);
            if path == 0 {
                break;
            }
        }
        learnt[0] = p.expect("uip").neg();

        // Local minimisation: drop literals implied by others in the clause.
        let mut kept = vec![learnt[0]];
        for &q in &learnt[1..] {
            let r = self.reason[q.var()];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..]
                    .iter()
                    .all(|&x| self.seen[x.var()] || self.level[x.var()] == 0);
            if !redundant {
                kept.push(q);
            }
        }
        for &q in &learnt {
            self.seen[q.var()] = false;
        }
        let mut bt = 0;
        if kept.len() > 1 {
            let mut best = 1;
            for i in 2..kept.len() {
                if self.level[kept[i].var()] > self.level[kept[best].var()] {
                    best = i;
                }
            }
            kept.swap(1, best);
            bt = self.level[kept[1].var()] as usize;
        }
        (kept, bt)
    }

    fn lbd(&self, lits: &[L]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var()]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var();
            self.phase[v] = !l.is_neg();
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<L> {
        if self.num_vars > 0 && self.rng.gen::<f64>() < self.cfg.random_freq {
            let v = self.rng.gen_range(0..self.num_vars);
            if self.assigns[v] == UNDEF {
                return Some(L(2 * v as u32 + (!self.phase[v]) as u32));
            }
        }
        while let Some(v) = self.heap.pop_max(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(L(2 * v as u32 + (!self.phase[v]) as u32));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let l = self.clauses[cref as usize].lits[0];
        val(&self.assigns, l) == TRUE_V && self.reason[l.var()] == cref
    }

    fn reduce_db(&mut self) {
        self.stats.reductions += 1;
        let mut ls = std::mem::take(&mut self.learnts);
        ls.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd
                .cmp(&ca.lbd)
                .then(ca.act.partial_cmp(&cb.act).unwrap_or(std::cmp::Ordering::Equal))
        });
        let half = ls.len() / 2;
        let mut keep = Vec::with_capacity(ls.len());
        for (i, &r) in ls.iter().enumerate() {
            let c = &self.clauses[r as usize];
            if i < half && c.lbd > 2 && !self.locked(r) {
                let c = &mut self.clauses[r as usize];
                c.deleted = true;
                c.lits = Vec::new();
            } else {
                keep.push(r);
            }
        }
        self.learnts = keep;
    }

    fn model(&self) -> Vec<bool> {
        let mut m = vec![false; self.num_vars + 1];
        for v in 0..self.num_vars {
            m[v + 1] = self.assigns[v] == TRUE_V;
        }
        m
    }

    fn verify(&self, m: &[bool]) -> bool {
        self.original
            .iter()
            .all(|c| c.iter().any(|&l| m[l.unsigned_abs() as usize] == (l > 0)))
    }

    /// Solves under the given DIMACS assumption literals.
    pub fn solve(&mut self, assumptions: &[i32], budget: &Budget) -> SatResult {
        if !self.ok {
            return SatResult::Unsat;
        }
        self.cancel_until(0);
        if self.propagate().is_some() {
            self.ok = false;
            return SatResult::Unsat;
        }
        let assumptions: Vec<L> = assumptions.iter().map(|&l| L::from_dimacs(l)).collect();
        let n_orig = self.original.len();
        self.max_learnts = ((n_orig * REDUCE_FACTOR).max(REDUCE_FLOOR)) as f64;
        let start_conflicts = self.stats.conflicts;
        let mut restart = 0u32;
        loop {
            let limit = luby(restart) * RESTART_BASE;
            restart += 1;
            match self.search(limit, &assumptions, budget, start_conflicts) {
                Some(SatResult::Sat(m)) => {
                    self.cancel_until(0);
                    return if self.verify(&m) {
                        SatResult::Sat(m)
                    } else {
                        log::error!("SAT model failed verification");
                        SatResult::Unknown(UnknownCause::ModelCheckFailed)
                    };
                }
                Some(r) => {
                    self.cancel_until(0);
                    return r;
                }
                None => {
                    self.stats.restarts += 1;
                    self.cancel_until(0);
                    if let Some(cause) = budget.exhausted(self.stats.conflicts - start_conflicts) {
                        return SatResult::Unknown(cause);
                    }
                }
            }
        }
    }

    fn search(&mut self, limit: u64, assumptions: &[L], budget: &Budget, start: u64) -> Option<SatResult> {
        let mut local = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                local += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SatResult::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let lbd = self.lbd(&learnt);
                    let l0 = learnt[0];
                    let cref = self.attach(learnt, true, lbd);
                    self.bump_clause(cref);
                    self.enqueue(l0, cref);
                }
                self.var_inc /= self.cfg.var_decay;
                self.cla_inc /= self.cfg.clause_decay;
                if let Some(cause) = budget.exhausted(self.stats.conflicts - start) {
                    return Some(SatResult::Unknown(cause));
                }
            } else {
                if local >= limit {
                    return None;
                }
                if self.learnts.len() as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                let mut next = None;
                while self.decision_level() < assumptions.len() {
                    let p = assumptions[self.decision_level()];
                    match val(&self.assigns, p) {
                        TRUE_V => self.trail_lim.push(self.trail.len()),
                        FALSE_V => return Some(SatResult::Unsat),
                        _ => {
                            next = Some(p);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(p) => p,
                    None => {
                        self.stats.decisions += 1;
                        if self.stats.decisions % 256 == 0 {
                            if let Some(cause) = budget.exhausted(self.stats.conflicts - start) {
                                return Some(SatResult::Unknown(cause));
                            }
                        }
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return Some(SatResult::Sat(self.model())),
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, NO_REASON);
            }
        }
    }
}

/// The Luby sequence 1 1 2 1 1 2 4 ... at index `i`.
pub fn luby(mut i: u32) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = i as u64;
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    i = seq;
    1u64 << i
}

/// Solves a formula with a fresh solver.
pub fn solve(f: &CnfFormula, assumptions: &[i32], budget: &Budget) -> SatResult {
    solve_with(f, assumptions, budget, SolverConfig::default())
}

pub fn solve_with(f: &CnfFormula, assumptions: &[i32], budget: &Budget, cfg: SolverConfig) -> SatResult {
    Solver::from_formula(f, cfg).solve(assumptions, budget)
}
