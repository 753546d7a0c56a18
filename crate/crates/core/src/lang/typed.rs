//! Resolved and typed intermediate form of a LoopC program.

use super::ast::{BinOp, Program, Scalar, UnOp};

pub type GlobalId = usize;
pub type LocalId = usize;
pub type FuncId = usize;
pub type SiteId = usize;
pub type CallSiteId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ty {
    Scalar(Scalar),
    Array(Scalar, u32),
}

impl Ty {
    pub fn elem(self) -> Scalar {
        match self {
            Ty::Scalar(s) | Ty::Array(s, _) => s,
        }
    }

    /// Number of scalar cells.
    pub fn cells(self) -> u32 {
        match self {
            Ty::Scalar(_) => 1,
            Ty::Array(_, n) => n,
        }
    }

    pub fn bits(self) -> u32 {
        self.elem().width() * self.cells()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Global(GlobalId),
    Local(LocalId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TExprKind {
    Const(u64),
    Var(VarRef),
    Index(VarRef, Box<TExpr>, u32),
    Unary(UnOp, Box<TExpr>),
    /// Operand types agree, except the amount of a shift.
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    /// Conversion from the inner expression's type to `ty`.
    Cast(Box<TExpr>),
    Call(FuncId, Vec<TExpr>, CallSiteId),
    Nondet(SiteId),
}

impl TExpr {
    pub fn konst(bits: u64, ty: Scalar) -> TExpr {
        TExpr {
            kind: TExprKind::Const(bits),
            ty,
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a TExpr)) {
        f(self);
        match &self.kind {
            TExprKind::Index(_, i, _) => i.walk(f),
            TExprKind::Unary(_, a) | TExprKind::Cast(a) => a.walk(f),
            TExprKind::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            TExprKind::Call(_, args, _) => args.iter().for_each(|a| a.walk(f)),
            _ => {}
        }
    }

    /// True when the expression reads no input, calls nothing and only
    /// touches variables accepted by `allowed`.
    pub fn is_pure_over(&self, allowed: &dyn Fn(VarRef) -> bool) -> bool {
        let mut ok = true;
        self.walk(&mut |e| match &e.kind {
            TExprKind::Var(v) | TExprKind::Index(v, _, _) => ok &= allowed(*v),
            TExprKind::Call(..) | TExprKind::Nondet(_) => ok = false,
            _ => {}
        });
        ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TInit {
    /// All cells zero.
    Zero,
    Scalar(TExpr),
    Array(Vec<TExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TStmt {
    Let {
        local: LocalId,
        init: TInit,
    },
    Assign {
        target: VarRef,
        index: Option<TExpr>,
        value: TExpr,
    },
    If {
        cond: TExpr,
        then_body: Vec<TStmt>,
        else_body: Vec<TStmt>,
    },
    For {
        var: LocalId,
        lo: TExpr,
        hi: TExpr,
        /// Folded bounds when both are compile-time constants.
        bounds: Option<(i64, i64)>,
        body: Vec<TStmt>,
    },
    While {
        cond: TExpr,
        body: Vec<TStmt>,
    },
    Switch {
        scrutinee: TExpr,
        cases: Vec<(Vec<u64>, Vec<TStmt>)>,
        default: Option<Vec<TStmt>>,
    },
    Assume(TExpr),
    Assert(TExpr),
    Error,
    Expr(TExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TGlobal {
    pub name: String,
    pub ty: Ty,
    pub is_const: bool,
    /// Initial bit pattern of every cell.
    pub init: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TLocal {
    pub name: String,
    pub ty: Ty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TFunction {
    pub name: String,
    pub params: Vec<LocalId>,
    pub ret: Option<Scalar>,
    pub locals: Vec<TLocal>,
    pub body: Vec<TStmt>,
    /// The trailing `return` expression, if any.
    pub ret_expr: Option<TExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NondetSite {
    pub label: String,
    pub ty: Scalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TProgram {
    pub globals: Vec<TGlobal>,
    pub functions: Vec<TFunction>,
    pub main: FuncId,
    pub sites: Vec<NondetSite>,
    pub call_sites: usize,
}

/// A type-checked program: the surface tree it came from plus its typed form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedProgram {
    pub source: Program,
    pub prog: TProgram,
}

/// The structural split of `main` into the init block and the outer loop.
#[derive(Debug, Clone)]
pub struct MainParts<'a> {
    pub init: &'a [TStmt],
    /// Loop body without the trailing property assertion (if one was recognized).
    pub body: &'a [TStmt],
    /// Trailing `assert` of the outer loop, when it only reads state.
    pub property: Option<&'a TExpr>,
    /// Locals of `main` declared at the top level of the init block.
    pub state_locals: Vec<LocalId>,
}

impl TProgram {
    pub fn main_fn(&self) -> &TFunction {
        &self.functions[self.main]
    }

    /// Splits `main` into init block and outer `while (true)` loop. Returns
    /// `None` when `main` does not end in such a loop.
    pub fn main_parts(&self) -> Option<MainParts<'_>> {
        let main = self.main_fn();
        let (last, init) = main.body.split_last()?;
        let TStmt::While { cond, body } = last else {
            return None;
        };
        if cond.kind != TExprKind::Const(1) {
            return None;
        }
        if init.iter().any(|s| matches!(s, TStmt::While { .. })) {
            return None;
        }
        let state_locals: Vec<LocalId> = init
            .iter()
            .filter_map(|s| match s {
                TStmt::Let { local, .. } => Some(*local),
                _ => None,
            })
            .collect();
        let is_state = |v: VarRef| match v {
            VarRef::Global(_) => true,
            VarRef::Local(l) => state_locals.contains(&l),
        };
        if let Some((TStmt::Assert(p), rest)) = body.split_last() {
            if p.is_pure_over(&is_state) {
                return Some(MainParts {
                    init,
                    body: rest,
                    property: Some(p),
                    state_locals,
                });
            }
        }
        Some(MainParts {
            init,
            body,
            property: None,
            state_locals,
        })
    }

    pub fn global_by_name(&self, name: &str) -> Option<GlobalId> {
        self.globals.iter().position(|g| g.name == name)
    }
}

/// Visits every statement of a block, depth first, parents before children.
pub fn walk_tstmts<'a>(stmts: &'a [TStmt], f: &mut dyn FnMut(&'a TStmt)) {
    for s in stmts {
        f(s);
        match s {
            TStmt::If {
                then_body,
                else_body,
                ..
            } => {
                walk_tstmts(then_body, f);
                walk_tstmts(else_body, f);
            }
            TStmt::For { body, .. } | TStmt::While { body, .. } => walk_tstmts(body, f),
            TStmt::Switch { cases, default, .. } => {
                for (_, b) in cases {
                    walk_tstmts(b, f);
                }
                if let Some(d) = default {
                    walk_tstmts(d, f);
                }
            }
            _ => {}
        }
    }
}

/// The expressions directly owned by a statement (not those of nested blocks).
pub fn tstmt_exprs(s: &TStmt) -> Vec<&TExpr> {
    match s {
        TStmt::Let { init, .. } => match init {
            TInit::Zero => vec![],
            TInit::Scalar(e) => vec![e],
            TInit::Array(es) => es.iter().collect(),
        },
        TStmt::Assign { index, value, .. } => index.iter().chain(std::iter::once(value)).collect(),
        TStmt::If { cond, .. } | TStmt::While { cond, .. } => vec![cond],
        TStmt::For { lo, hi, .. } => vec![lo, hi],
        TStmt::Switch { scrutinee, .. } => vec![scrutinee],
        TStmt::Assume(e) | TStmt::Assert(e) | TStmt::Expr(e) => vec![e],
        TStmt::Error => vec![],
    }
}

/// Numbers every division and remainder node of the program in a fixed
/// traversal order. The numbering names the input that stands for the
/// result of a division by zero.
pub fn div_sites(p: &TProgram) -> std::collections::HashMap<*const TExpr, usize> {
    let mut out = std::collections::HashMap::new();
    let mut visit = |e: &TExpr| {
        e.walk(&mut |x| {
            if let TExprKind::Binary(BinOp::Div | BinOp::Rem, _, _) = x.kind {
                let n = out.len();
                out.insert(x as *const TExpr, n);
            }
        })
    };
    for f in &p.functions {
        walk_tstmts(&f.body, &mut |s| {
            for e in tstmt_exprs(s) {
                visit(e);
            }
        });
        if let Some(r) = &f.ret_expr {
            visit(r);
        }
    }
    out
}
