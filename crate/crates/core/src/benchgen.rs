//! Seeded synthetic benchmark generator.
//!
//! Programs follow a fixed silhouette: constants and globals, an empty init
//! block, and one `while (true)` loop whose body mixes decision logic,
//! saturating and masked updates, bit manipulation and array traffic. The
//! generator reproduces a metric profile (SLOC, operation mix, cyclomatic
//! complexity, globals by type). It does not imitate any real code base.
//!
//! Ground truth comes from the construction:
//!
//! * every property reads a *monitored* global `m<i>` that only its own
//!   update touches. A masked update `m = (m + c) & mask` keeps `m <= mask`;
//!   a saturating update `if (m < lim) { m = m + 1; }` keeps `m <= lim`;
//!   a monitored global without any update stays at its initial value;
//! * the planted bug is a counter `b0` that grows while the input `bug_in`
//!   equals a key and resets otherwise. `invariant b0 < D` first fails after
//!   exactly `D` iterations;
//! * filler statements never write monitored globals or `b0`.
//!
//! When the slice of a task with respect to its property fits the oracle's
//! state bound, the claimed verdict is additionally confirmed by exhaustive
//! exploration at generation time.
//!
//! Randomness comes from ChaCha8 seeded with the task seed, so a given
//! (profile, seed, mode) triple always yields the same text in this
//! implementation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lang::ast::{
    walk_stmts, BinOp, Expr, Function, Global, Init, Item, Place, Program, Stmt, TypeSyntax, UnOp,
};
use crate::lang::{load, pretty::sloc, pretty_print, validate_shape, Scalar, TypedProgram};
use crate::oracle::{explore, OracleError, OracleLimits, OracleOutcome};
use crate::reduce::{property_globals, slice_with};
use crate::ts::{build_system, load_properties};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalCounts {
    pub u8: usize,
    pub fx: usize,
    pub arrays: usize,
    /// Inclusive range of array lengths.
    pub array_len: [u32; 2],
}

impl Default for GlobalCounts {
    fn default() -> Self {
        GlobalCounts {
            u8: 0,
            fx: 0,
            arrays: 0,
            array_len: [4, 8],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpMix {
    /// `+` and `-`.
    pub add_sub: usize,
    /// `*`, `/` and `%`.
    pub mul_div: usize,
    /// `&`, `|`, `^`, `<<`, `>>` and `~`.
    pub bitwise: usize,
    /// Array reads and writes.
    pub array_accesses: usize,
}

impl OpMix {
    fn total(&self) -> usize {
        self.add_sub + self.mul_div + self.bitwise
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropertyMix {
    pub invariant: usize,
    pub bounded_response: usize,
}

/// Target (or measured) code metrics. JSON field names match the struct.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsProfile {
    pub sloc: usize,
    pub globals: GlobalCounts,
    /// Number of `const` globals.
    pub constants: usize,
    pub ops: OpMix,
    pub cyclomatic: usize,
    pub properties: PropertyMix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Safe,
    Bug { depth: u64 },
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GroundTruth {
    True,
    False { depth: u64 },
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Confirmed by exhaustive exploration of the property's slice.
    Oracle,
    /// Too large for the oracle; holds by construction.
    Construction,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedTask {
    pub program: String,
    /// One property declaration per entry, in `.prop` syntax.
    pub properties: Vec<String>,
    pub ground_truth: Vec<GroundTruth>,
    pub certification: Vec<Certification>,
    pub seed: u64,
    pub mode: Mode,
    pub profile: MetricsProfile,
    pub measured: MetricsProfile,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("profile infeasible: {0}")]
    ProfileInfeasible(String),
    /// A planted verdict disagreed with the oracle; always a generator bug.
    #[error("certification failed for property {index}: claimed {claimed:?}, oracle says {found}")]
    CertificationFailed {
        index: usize,
        claimed: GroundTruth,
        found: String,
    },
}

pub const MAX_BUG_DEPTH: u64 = 255;
const MAX_OPS_PER_STMT: usize = 6;

// ---------------------------------------------------------------------------
// Measurement

fn count_ops(e: &Expr, m: &mut OpMix) {
    e.walk(&mut |x| match x {
        Expr::Binary(op, ..) => match op {
            BinOp::Add | BinOp::Sub => m.add_sub += 1,
            BinOp::Mul | BinOp::Div | BinOp::Rem => m.mul_div += 1,
            BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor | BinOp::Shl | BinOp::Shr => m.bitwise += 1,
            _ => {}
        },
        Expr::Unary(UnOp::BitNot, _) => m.bitwise += 1,
        Expr::Index(..) => m.array_accesses += 1,
        _ => {}
    });
}

fn decisions(stmts: &[Stmt], top: bool) -> usize {
    let mut n = 0;
    for s in stmts {
        n += match s {
            Stmt::If {
                then_body,
                else_body,
                ..
            } => 1 + decisions(then_body, false) + decisions(else_body, false),
            Stmt::For { body, .. } => 1 + decisions(body, false),
            // The main loop is the frame of the analysis, not a decision.
            Stmt::While { body, .. } => usize::from(!top) + decisions(body, false),
            Stmt::Switch { cases, default, .. } => {
                cases.len()
                    + cases.iter().map(|c| decisions(&c.body, false)).sum::<usize>()
                    + default.as_ref().map_or(0, |d| decisions(d, false))
            }
            _ => 0,
        };
    }
    n
}

/// Cyclomatic complexity summed over all functions: one plus the number
/// of decisions per function, with `main`'s outer loop not counted. `&&`
/// and `||` evaluate both sides and therefore add no edges.
pub fn cyclomatic(p: &Program) -> usize {
    p.functions().map(|f| 1 + decisions(&f.body, f.name == "main")).sum()
}

pub fn measure(tp: &TypedProgram) -> MetricsProfile {
    let p = &tp.source;
    let mut m = MetricsProfile {
        sloc: sloc(p),
        cyclomatic: cyclomatic(p),
        ..MetricsProfile::default()
    };
    let mut lens: Vec<u32> = Vec::new();
    for g in p.globals() {
        if g.is_const {
            m.constants += 1;
            continue;
        }
        match &g.ty {
            TypeSyntax::Scalar(Scalar::U8) => m.globals.u8 += 1,
            TypeSyntax::Scalar(Scalar::Fx) => m.globals.fx += 1,
            TypeSyntax::Array(..) => m.globals.arrays += 1,
            TypeSyntax::Scalar(_) => {}
        }
    }
    for g in &tp.prog.globals {
        if let crate::lang::typed::Ty::Array(_, n) = g.ty {
            if !g.is_const {
                lens.push(n);
            }
        }
    }
    if let (Some(lo), Some(hi)) = (lens.iter().min(), lens.iter().max()) {
        m.globals.array_len = [*lo, *hi];
    }
    let mut ops = OpMix::default();
    for f in p.functions() {
        walk_stmts(&f.body, &mut |s| {
            if let Stmt::Assign(Place::Index(..), _) = s {
                ops.array_accesses += 1;
            }
            for e in crate::lang::ast::stmt_exprs(s) {
                count_ops(e, &mut ops);
            }
        });
    }
    m.ops = ops;
    m
}

// ---------------------------------------------------------------------------
// Generation

fn fx_lit(v: f64) -> Expr {
    Expr::Fx((v * 65536.0) as i64)
}

fn u8_global(name: &str, init: u64) -> Item {
    Item::Global(Global {
        name: name.into(),
        ty: TypeSyntax::Scalar(Scalar::U8),
        is_const: false,
        init: Some(Init::Expr(Expr::Int(init))),
    })
}

#[derive(Debug, Clone, Copy)]
enum OpKind {
    AddSub,
    MulDiv,
    Bitwise,
}

struct Builder {
    rng: ChaCha8Rng,
    constants: Vec<String>,
    monitored: Vec<String>,
    filler_u8: Vec<String>,
    fx: Vec<String>,
    arrays: Vec<(String, u32)>,
    /// Array accesses still to place.
    accesses_left: usize,
}

impl Builder {
    fn u8_targets(&self) -> &[String] {
        &self.filler_u8
    }

    fn array_ref(&mut self) -> Expr {
        let (name, len) = self.arrays[self.rng.gen_range(0..self.arrays.len())].clone();
        let idx = if self.rng.gen_bool(0.5) || self.filler_u8.is_empty() {
            Expr::Int(self.rng.gen_range(0..len as u64))
        } else {
            Expr::var(self.filler_u8[self.rng.gen_range(0..self.filler_u8.len())].clone())
        };
        Expr::Index(name, Box::new(idx))
    }

    fn u8_operand(&mut self) -> Expr {
        if self.accesses_left > 0 && !self.arrays.is_empty() && self.rng.gen_bool(0.5) {
            self.accesses_left -= 1;
            return self.array_ref();
        }
        let mut pool: Vec<String> = self.filler_u8.clone();
        pool.extend(self.monitored.iter().cloned());
        pool.extend(self.constants.iter().cloned());
        if pool.is_empty() || self.rng.gen_bool(0.3) {
            Expr::Int(self.rng.gen_range(1..100))
        } else {
            Expr::var(pool[self.rng.gen_range(0..pool.len())].clone())
        }
    }

    /// A variable operand, so that literal-only chains never arise.
    fn u8_var(&mut self) -> Expr {
        let mut pool = self.filler_u8.clone();
        pool.extend(self.monitored.iter().cloned());
        Expr::var(pool[self.rng.gen_range(0..pool.len())].clone())
    }

    fn u8_chain(&mut self, kinds: &[OpKind]) -> Expr {
        let mut e = self.u8_var();
        for k in kinds {
            let (op, rhs) = match k {
                OpKind::AddSub => {
                    let op = if self.rng.gen_bool(0.6) { BinOp::Add } else { BinOp::Sub };
                    (op, self.u8_operand())
                }
                OpKind::MulDiv => match self.rng.gen_range(0..3) {
                    0 => (BinOp::Mul, self.u8_operand()),
                    1 => (BinOp::Div, Expr::Int(self.rng.gen_range(2..9))),
                    _ => (BinOp::Rem, Expr::Int(self.rng.gen_range(3..17))),
                },
                OpKind::Bitwise => match self.rng.gen_range(0..5) {
                    0 => (BinOp::BitAnd, Expr::Int(self.rng.gen_range(1..256))),
                    1 => (BinOp::BitOr, self.u8_operand()),
                    2 => (BinOp::BitXor, self.u8_operand()),
                    3 => (BinOp::Shl, Expr::Int(self.rng.gen_range(1..4))),
                    _ => (BinOp::Shr, Expr::Int(self.rng.gen_range(1..4))),
                },
            };
            e = Expr::bin(op, e, rhs);
        }
        e
    }

    fn fx_chain(&mut self, kinds: &[OpKind]) -> Expr {
        let pick = |b: &mut Self| -> Expr {
            if b.rng.gen_bool(0.4) {
                fx_lit(b.rng.gen_range(1..8) as f64 * 0.25)
            } else {
                Expr::var(b.fx[b.rng.gen_range(0..b.fx.len())].clone())
            }
        };
        let mut e = Expr::var(self.fx[self.rng.gen_range(0..self.fx.len())].clone());
        for k in kinds {
            let (op, rhs) = match k {
                OpKind::AddSub => (if self.rng.gen_bool(0.5) { BinOp::Add } else { BinOp::Sub }, pick(self)),
                _ => {
                    if self.rng.gen_bool(0.5) {
                        (BinOp::Mul, fx_lit(self.rng.gen_range(1..4) as f64 * 0.5))
                    } else {
                        (BinOp::Div, fx_lit(self.rng.gen_range(1..4) as f64))
                    }
                }
            };
            e = Expr::bin(op, e, rhs);
        }
        e
    }

    /// One filler statement carrying the given operators.
    fn op_stmt(&mut self, kinds: &[OpKind]) -> Stmt {
        let fx_ok = !self.fx.is_empty() && kinds.iter().all(|k| !matches!(k, OpKind::Bitwise));
        if fx_ok && (self.u8_targets().is_empty() || self.rng.gen_bool(0.3)) {
            let target = self.fx[self.rng.gen_range(0..self.fx.len())].clone();
            let e = self.fx_chain(kinds);
            return Stmt::Assign(Place::Var(target), e);
        }
        let e = self.u8_chain(kinds);
        self.u8_assign(e)
    }

    fn u8_assign(&mut self, e: Expr) -> Stmt {
        if self.accesses_left > 0 && !self.arrays.is_empty() && self.rng.gen_bool(0.4) {
            self.accesses_left -= 1;
            let Expr::Index(name, idx) = self.array_ref() else { unreachable!() };
            return Stmt::Assign(Place::Index(name, *idx), e);
        }
        let t = self.filler_u8[self.rng.gen_range(0..self.filler_u8.len())].clone();
        Stmt::Assign(Place::Var(t), e)
    }

    /// An operator-free statement.
    fn copy_stmt(&mut self) -> Stmt {
        if !self.fx.is_empty() && (self.filler_u8.is_empty() || self.rng.gen_bool(0.2)) {
            let a = self.fx[self.rng.gen_range(0..self.fx.len())].clone();
            let b = self.fx[self.rng.gen_range(0..self.fx.len())].clone();
            return Stmt::Assign(Place::Var(a), Expr::var(b));
        }
        let src = if self.accesses_left > 0 && !self.arrays.is_empty() {
            self.accesses_left -= 1;
            self.array_ref()
        } else {
            self.u8_var()
        };
        self.u8_assign(src)
    }

    fn condition(&mut self) -> Expr {
        let v = self.u8_var();
        let op = [BinOp::Lt, BinOp::Gt, BinOp::Ne, BinOp::Le][self.rng.gen_range(0..4)];
        Expr::bin(op, v, Expr::Int(self.rng.gen_range(1..255)))
    }
}

/// Update kinds for monitored globals, chosen by what the op budget allows.
#[derive(Debug, Clone, Copy)]
enum Monitor {
    Masked { step: u64, mask: u64 },
    Saturating { limit: u64 },
    Frozen { value: u64 },
}

impl Monitor {
    fn bound(self) -> u64 {
        match self {
            Monitor::Masked { mask, .. } => mask,
            Monitor::Saturating { limit } => limit,
            Monitor::Frozen { value } => value,
        }
    }

    fn lines(self) -> usize {
        match self {
            Monitor::Masked { .. } => 1,
            Monitor::Saturating { .. } => 3,
            Monitor::Frozen { .. } => 0,
        }
    }

    fn stmt(self, name: &str) -> Option<Stmt> {
        let v = || Expr::var(name);
        match self {
            Monitor::Masked { step, mask } => Some(Stmt::Assign(
                Place::Var(name.into()),
                Expr::bin(BinOp::BitAnd, Expr::bin(BinOp::Add, v(), Expr::Int(step)), Expr::Int(mask)),
            )),
            Monitor::Saturating { limit } => Some(Stmt::If {
                cond: Expr::bin(BinOp::Lt, v(), Expr::Int(limit)),
                then_body: vec![Stmt::Assign(Place::Var(name.into()), Expr::bin(BinOp::Add, v(), Expr::Int(1)))],
                else_body: vec![],
            }),
            Monitor::Frozen { .. } => None,
        }
    }
}

fn spread(n: usize, kinds: &mut Vec<OpKind>, k: OpKind) {
    kinds.extend(std::iter::repeat(k).take(n));
}

pub fn generate(profile: &MetricsProfile, seed: u64, mode: Mode) -> Result<GeneratedTask, GenError> {
    let p = profile;
    if p.globals.arrays > 0 && (p.globals.array_len[0] == 0 || p.globals.array_len[0] > p.globals.array_len[1]) {
        return Err(GenError::ProfileInfeasible("array length range is empty".into()));
    }
    if p.ops.array_accesses > 0 && p.globals.arrays == 0 {
        return Err(GenError::ProfileInfeasible("array accesses requested without arrays".into()));
    }
    if let Mode::Bug { depth } = mode {
        if depth == 0 || depth > MAX_BUG_DEPTH {
            return Err(GenError::ProfileInfeasible(format!("bug depth must be in 1..={MAX_BUG_DEPTH}")));
        }
        if p.globals.u8 == 0 {
            return Err(GenError::ProfileInfeasible("a planted bug needs a u8 global".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_props = (p.properties.invariant + p.properties.bounded_response).max(1);

    // Global roles.
    let bug = matches!(mode, Mode::Bug { .. });
    let wants_monitors = !matches!(mode, Mode::Open) && p.globals.u8 > usize::from(bug);
    let n_mon = if wants_monitors {
        (n_props - usize::from(bug)).min(p.globals.u8 - usize::from(bug))
    } else {
        0
    };
    let n_filler_u8 = p.globals.u8 - n_mon - usize::from(bug);

    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(rng.gen()),
        constants: (0..p.constants).map(|i| format!("K{i}")).collect(),
        monitored: (0..n_mon).map(|i| format!("m{i}")).collect(),
        filler_u8: (0..n_filler_u8).map(|i| format!("g{i}")).collect(),
        fx: (0..p.globals.fx).map(|i| format!("f{i}")).collect(),
        arrays: (0..p.globals.arrays)
            .map(|i| (format!("a{i}"), rng.gen_range(p.globals.array_len[0]..=p.globals.array_len[1])))
            .collect(),
        accesses_left: p.ops.array_accesses,
    };

    // Budget bookkeeping: monitors and the bug consume operators and
    // decisions before the filler does.
    let mut ops = p.ops;
    let mut decisions_left = p.cyclomatic.saturating_sub(1);
    let mut fixed_lines = 4 + p.constants + p.globals.u8 + p.globals.fx + p.globals.arrays;
    if bug {
        ops.add_sub = ops.add_sub.saturating_sub(1);
        decisions_left = decisions_left.saturating_sub(1);
        fixed_lines += 6;
    }
    let mut monitors = Vec::new();
    for _ in 0..n_mon {
        let m = if ops.add_sub >= 1 && ops.bitwise >= 1 && (decisions_left == 0 || rng.gen_bool(0.5)) {
            ops.add_sub -= 1;
            ops.bitwise -= 1;
            Monitor::Masked {
                step: rng.gen_range(1..8),
                mask: [3, 7, 15, 31, 63][rng.gen_range(0..5)],
            }
        } else if ops.add_sub >= 1 && decisions_left >= 1 {
            ops.add_sub -= 1;
            decisions_left -= 1;
            Monitor::Saturating {
                limit: rng.gen_range(2..60),
            }
        } else {
            Monitor::Frozen {
                value: rng.gen_range(0..50),
            }
        };
        fixed_lines += m.lines();
        monitors.push(m);
    }

    // Filler needs somewhere to write.
    let total_ops = ops.total();
    let needs_filler = total_ops > 0 || decisions_left > 0 || b.accesses_left > 0 || p.sloc > fixed_lines;
    let mut scratch = false;
    if needs_filler && b.filler_u8.is_empty() && (b.fx.is_empty() || ops.bitwise > 0 || b.accesses_left > 0 || decisions_left > 0) {
        scratch = true;
        b.filler_u8.push("t0".into());
        fixed_lines += 1;
    }

    let n_if = decisions_left;
    let min_atoms = n_if
        .max(total_ops.div_ceil(MAX_OPS_PER_STMT))
        .max(usize::from(b.accesses_left > 0));
    let target_atoms = p.sloc.saturating_sub(fixed_lines + 2 * n_if);
    let atoms = target_atoms.max(min_atoms);
    let predicted = fixed_lines + 2 * n_if + atoms;
    if p.sloc > 0 && predicted as f64 > p.sloc as f64 * 1.1 {
        return Err(GenError::ProfileInfeasible(format!(
            "needs at least {predicted} lines for a target of {}",
            p.sloc
        )));
    }

    // Operators, shuffled and split over the operator statements.
    let mut kinds = Vec::new();
    spread(ops.add_sub, &mut kinds, OpKind::AddSub);
    spread(ops.mul_div, &mut kinds, OpKind::MulDiv);
    spread(ops.bitwise, &mut kinds, OpKind::Bitwise);
    kinds.shuffle(&mut b.rng);
    let n_op_stmts = if total_ops == 0 {
        0
    } else {
        atoms.min(total_ops).max(total_ops.div_ceil(MAX_OPS_PER_STMT))
    };
    let mut groups: Vec<Vec<OpKind>> = vec![Vec::new(); n_op_stmts];
    for (i, k) in kinds.into_iter().enumerate() {
        groups[i % n_op_stmts.max(1)].push(k);
    }
    // Keep bitwise operators in u8 statements only: a group that mixes
    // kinds is fine, the statement builder picks the type.
    let mut body_atoms: Vec<Stmt> = groups.iter().map(|g| b.op_stmt(g)).collect();
    while body_atoms.len() < atoms {
        body_atoms.push(b.copy_stmt());
    }
    // Accesses not yet placed replace operator-free copies or extend them.
    let mut i = 0;
    while b.accesses_left > 0 {
        let src = b.array_ref();
        b.accesses_left -= 1;
        let stmt = Stmt::Assign(
            Place::Var(b.filler_u8[b.rng.gen_range(0..b.filler_u8.len())].clone()),
            src,
        );
        if let Some(pos) = (i..body_atoms.len()).find(|&j| is_plain_copy(&body_atoms[j])) {
            body_atoms[pos] = stmt;
            i = pos + 1;
        } else {
            body_atoms.push(stmt);
        }
    }
    body_atoms.shuffle(&mut b.rng);

    // Decisions: each `if` wraps one or more consecutive atoms.
    let mut blocks: Vec<Stmt> = Vec::new();
    if n_if > 0 {
        let mut cuts: Vec<usize> = (1..body_atoms.len()).collect();
        cuts.shuffle(&mut b.rng);
        let mut cuts: Vec<usize> = cuts.into_iter().take(n_if - 1).collect();
        cuts.sort_unstable();
        let mut start = 0;
        let mut chunks = Vec::new();
        for c in cuts.into_iter().chain(std::iter::once(body_atoms.len())) {
            chunks.push(body_atoms[start..c].to_vec());
            start = c;
        }
        for chunk in chunks {
            // Leave the tail of a chunk outside the `if` now and then.
            let keep = if chunk.len() > 1 { b.rng.gen_range(1..=chunk.len()) } else { 1 };
            let (inside, outside) = chunk.split_at(keep);
            blocks.push(Stmt::If {
                cond: b.condition(),
                then_body: inside.to_vec(),
                else_body: vec![],
            });
            blocks.extend(outside.iter().cloned());
        }
    } else {
        blocks = body_atoms;
    }

    // Monitors and the planted bug go at top level.
    for (i, m) in monitors.iter().enumerate() {
        if let Some(s) = m.stmt(&b.monitored[i]) {
            let pos = b.rng.gen_range(0..=blocks.len());
            blocks.insert(pos, s);
        }
    }
    let mut loop_body = Vec::new();
    if scratch {
        loop_body.push(Stmt::Let {
            name: "t0".into(),
            ty: TypeSyntax::Scalar(Scalar::U8),
            init: Some(Init::Expr(Expr::Int(0))),
        });
    }
    let bug_key = b.rng.gen_range(1..256u64);
    if bug {
        loop_body.push(Stmt::Let {
            name: "bug_in".into(),
            ty: TypeSyntax::Scalar(Scalar::U8),
            init: Some(Init::Expr(Expr::Nondet(Scalar::U8))),
        });
        let pos = b.rng.gen_range(0..=blocks.len());
        blocks.insert(
            pos,
            Stmt::If {
                cond: Expr::bin(BinOp::Eq, Expr::var("bug_in"), Expr::Int(bug_key)),
                then_body: vec![Stmt::Assign(
                    Place::Var("b0".into()),
                    Expr::bin(BinOp::Add, Expr::var("b0"), Expr::Int(1)),
                )],
                else_body: vec![Stmt::Assign(Place::Var("b0".into()), Expr::Int(0))],
            },
        );
    }
    loop_body.extend(blocks);

    // Declarations.
    let mut items = Vec::new();
    for c in &b.constants {
        items.push(Item::Global(Global {
            name: c.clone(),
            ty: TypeSyntax::Scalar(Scalar::U8),
            is_const: true,
            init: Some(Init::Expr(Expr::Int(b.rng.gen_range(1..200)))),
        }));
    }
    if bug {
        items.push(u8_global("b0", 0));
    }
    for (i, m) in monitors.iter().enumerate() {
        let init = match m {
            Monitor::Frozen { value } => *value,
            _ => 0,
        };
        items.push(u8_global(&b.monitored[i], init));
    }
    for g in b.filler_u8.iter().filter(|g| *g != "t0") {
        items.push(u8_global(g, b.rng.gen_range(0..50)));
    }
    for f in &b.fx {
        items.push(Item::Global(Global {
            name: f.clone(),
            ty: TypeSyntax::Scalar(Scalar::Fx),
            is_const: false,
            init: Some(Init::Expr(fx_lit(b.rng.gen_range(0..8) as f64 * 0.5))),
        }));
    }
    for (a, n) in &b.arrays {
        items.push(Item::Global(Global {
            name: a.clone(),
            ty: TypeSyntax::Array(Scalar::U8, Box::new(Expr::Int(*n as u64))),
            is_const: false,
            init: Some(Init::Repeat(Expr::Int(0), Expr::Int(*n as u64))),
        }));
    }
    items.push(Item::Function(Function {
        name: "main".into(),
        params: vec![],
        ret: None,
        body: vec![Stmt::While {
            cond: Expr::Bool(true),
            body: loop_body,
        }],
    }));
    let program = pretty_print(&Program { items });

    // Properties and their truths.
    let mut properties = Vec::new();
    let mut truths = Vec::new();
    if let Mode::Bug { depth } = mode {
        properties.push(format!("invariant b0 < {depth};"));
        truths.push(GroundTruth::False { depth });
    }
    let mut kinds: Vec<bool> = std::iter::repeat(false)
        .take(p.properties.invariant)
        .chain(std::iter::repeat(true).take(p.properties.bounded_response))
        .collect();
    if kinds.is_empty() {
        kinds.push(false);
    }
    for (i, response) in kinds.into_iter().enumerate().skip(usize::from(bug)) {
        match mode {
            Mode::Open => {
                let pool: Vec<&String> = b.filler_u8.iter().filter(|g| *g != "t0").collect();
                let text = match pool.get(i % pool.len().max(1)) {
                    Some(g) if response => format!("bounded_response {g} == 7 => {g} != 7 within 3;"),
                    Some(g) => format!("invariant {g} != {};", b.rng.gen_range(1..255)),
                    None => "invariant true;".to_string(),
                };
                properties.push(text);
                truths.push(GroundTruth::Unknown);
            }
            _ => {
                if b.monitored.is_empty() {
                    properties.push("invariant true;".into());
                } else {
                    let j = i % b.monitored.len();
                    let (name, bound) = (&b.monitored[j], monitors[j].bound());
                    properties.push(if response {
                        format!("bounded_response {name} > {bound} => {name} == 0 within 1;")
                    } else {
                        format!("invariant {name} <= {bound};")
                    });
                }
                truths.push(GroundTruth::True);
            }
        }
    }

    let tp = load(&program).expect("generated program type-checks");
    debug_assert!(validate_shape(&tp).is_ready());
    let measured = measure(&tp);
    let mut certification = Vec::new();
    for (i, (text, truth)) in properties.iter().zip(&truths).enumerate() {
        certification.push(certify(&tp, text, *truth).map_err(|found| GenError::CertificationFailed {
            index: i,
            claimed: *truth,
            found,
        })?);
    }
    Ok(GeneratedTask {
        program,
        properties,
        ground_truth: truths,
        certification,
        seed,
        mode,
        profile: *p,
        measured,
    })
}

fn is_plain_copy(s: &Stmt) -> bool {
    matches!(s, Stmt::Assign(Place::Var(_), Expr::Var(_)))
}

/// Checks a claimed verdict with the oracle on the property's slice.
fn certify(tp: &TypedProgram, prop: &str, truth: GroundTruth) -> Result<Certification, String> {
    if truth == GroundTruth::Unknown {
        return Ok(Certification::None);
    }
    let props = load_properties(tp, prop).map_err(|e| e.to_string())?;
    let keep = property_globals(tp, &props);
    let (sliced, _) = slice_with(tp, &keep).map_err(|e| e.to_string())?;
    let props = load_properties(&sliced, prop).map_err(|e| e.to_string())?;
    let ts = build_system(&sliced, &props).map_err(|e| e.to_string())?;
    let verdict = match explore(&ts, OracleLimits::default()) {
        Ok(v) => v,
        Err(OracleError::StateSpaceTooLarge { .. }) => return Ok(Certification::Construction),
    };
    let agrees = match (&verdict.outcome, truth) {
        (OracleOutcome::Safe, GroundTruth::True) => true,
        (OracleOutcome::Unsafe { depth, .. }, GroundTruth::False { depth: d }) => *depth == d,
        _ => false,
    };
    if agrees {
        Ok(Certification::Oracle)
    } else {
        Err(format!("{:?}", verdict.outcome))
    }
}

impl GeneratedTask {
    /// Property file text holding only property `i`.
    pub fn property_file(&self, i: usize) -> String {
        format!("{}\n", self.properties[i])
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("task serializes");
        s.push('\n');
        s
    }
}
