//! Name resolution, type checking and constant folding.

use super::ast::*;
use super::ops;
use super::typed::*;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeErrorKind {
    Undeclared,
    Redeclared,
    Mismatch,
    /// `fx` and an integer combined without a cast.
    FxIntMix,
    OutOfRangeLiteral,
    NonConstant,
    Recursion,
    Structure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type error: {}", self.message)
    }
}

impl std::error::Error for TypeError {}

fn err<T>(kind: TypeErrorKind, message: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError {
        kind,
        message: message.into(),
    })
}

type TResult<T> = Result<T, TypeError>;

/// Lossless implicit conversion.
fn widens(from: Scalar, to: Scalar) -> bool {
    if from == to {
        return true;
    }
    if !from.is_integer() || !to.is_integer() {
        return false;
    }
    match (from.is_signed(), to.is_signed()) {
        (false, false) | (true, true) => to.width() > from.width(),
        (false, true) => to.width() > from.width(),
        (true, false) => false,
    }
}

fn literal_fits(v: i128, ty: Scalar) -> bool {
    match ty {
        Scalar::Fx => {
            let raw = v * 65536;
            raw >= i32::MIN as i128 && raw <= i32::MAX as i128
        }
        _ => {
            let (lo, hi) = ty.int_range();
            v >= lo as i128 && v <= hi as i128
        }
    }
}

#[derive(Clone, Copy)]
enum Binding {
    Global(GlobalId),
    Local(LocalId),
}

struct FnCtx {
    locals: Vec<TLocal>,
    scopes: Vec<HashMap<String, LocalId>>,
    loop_vars: Vec<LocalId>,
}

struct Checker<'p> {
    globals: Vec<TGlobal>,
    global_names: HashMap<String, GlobalId>,
    fn_sigs: HashMap<String, (FuncId, &'p Function)>,
    sites: Vec<NondetSite>,
    site_counts: BTreeMap<String, usize>,
    call_sites: usize,
    ctx: Option<FnCtx>,
}

/// Type-checks a parsed program.
pub fn typecheck(p: &Program) -> TResult<TypedProgram> {
    let mut c = Checker {
        globals: Vec::new(),
        global_names: HashMap::new(),
        fn_sigs: HashMap::new(),
        sites: Vec::new(),
        site_counts: BTreeMap::new(),
        call_sites: 0,
        ctx: None,
    };
    for g in p.globals() {
        c.declare_global(g)?;
    }
    for (i, f) in p.functions().enumerate() {
        if c.fn_sigs.contains_key(&f.name) || c.global_names.contains_key(&f.name) {
            return err(TypeErrorKind::Redeclared, format!("`{}` declared twice", f.name));
        }
        c.fn_sigs.insert(f.name.clone(), (i, f));
    }
    check_recursion(p)?;
    let main = match c.fn_sigs.get("main") {
        Some((id, f)) => {
            if !f.params.is_empty() || f.ret.is_some() {
                return err(TypeErrorKind::Structure, "`main` takes no parameters and returns nothing");
            }
            *id
        }
        None => return err(TypeErrorKind::Structure, "missing `fn main()`"),
    };
    let mut functions = Vec::new();
    for f in p.functions() {
        functions.push(c.function(f)?);
    }
    Ok(TypedProgram {
        source: p.clone(),
        prog: TProgram {
            globals: c.globals,
            functions,
            main,
            sites: c.sites,
            call_sites: c.call_sites,
        },
    })
}

fn check_recursion(p: &Program) -> TResult<()> {
    let names: Vec<&str> = p.functions().map(|f| f.name.as_str()).collect();
    let mut callees: Vec<Vec<usize>> = Vec::new();
    for f in p.functions() {
        let mut out = Vec::new();
        walk_stmts(&f.body, &mut |s| {
            for e in stmt_exprs(s) {
                e.walk(&mut |x| {
                    if let Expr::Call(n, _) = x {
                        if let Some(j) = names.iter().position(|m| m == n) {
                            out.push(j);
                        }
                    }
                });
            }
        });
        callees.push(out);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    fn dfs(v: usize, g: &[Vec<usize>], st: &mut [u8]) -> Option<usize> {
        st[v] = 1;
        for &w in &g[v] {
            if st[w] == 1 {
                return Some(w);
            }
            if st[w] == 0 {
                if let Some(x) = dfs(w, g, st) {
                    return Some(x);
                }
            }
        }
        st[v] = 2;
        None
    }
    let mut st = vec![0u8; names.len()];
    for v in 0..names.len() {
        if st[v] == 0 {
            if let Some(w) = dfs(v, &callees, &mut st) {
                return err(
                    TypeErrorKind::Recursion,
                    format!("recursion detected through `{}`", names[w]),
                );
            }
        }
    }
    Ok(())
}

impl<'p> Checker<'p> {
    fn declare_global(&mut self, g: &Global) -> TResult<()> {
        if self.global_names.contains_key(&g.name) {
            return err(TypeErrorKind::Redeclared, format!("global `{}` declared twice", g.name));
        }
        let ty = self.resolve_type(&g.ty)?;
        let init = match &g.init {
            None if g.is_const => {
                return err(TypeErrorKind::Structure, format!("constant `{}` needs a value", g.name))
            }
            None => vec![0; ty.cells() as usize],
            Some(init) => {
                let cells = self.init_exprs(init, ty, &g.name)?;
                let mut vals = Vec::new();
                for e in cells {
                    match self.const_value(&e) {
                        Some(v) => vals.push(v),
                        None => {
                            return err(
                                TypeErrorKind::NonConstant,
                                format!("initializer of `{}` is not constant", g.name),
                            )
                        }
                    }
                }
                if vals.is_empty() {
                    vals = vec![0; ty.cells() as usize];
                }
                vals
            }
        };
        self.global_names.insert(g.name.clone(), self.globals.len());
        self.globals.push(TGlobal {
            name: g.name.clone(),
            ty,
            is_const: g.is_const,
            init,
        });
        Ok(())
    }

    /// Typed cell initializers; empty for "all zero".
    fn init_exprs(&mut self, init: &Init, ty: Ty, name: &str) -> TResult<Vec<TExpr>> {
        match (init, ty) {
            (Init::Expr(e), Ty::Scalar(s)) => Ok(vec![self.expr_as(e, s)?]),
            (Init::List(es), Ty::Array(s, n)) => {
                if es.len() != n as usize {
                    return err(
                        TypeErrorKind::Mismatch,
                        format!("`{name}` has {n} cells but {} initializers", es.len()),
                    );
                }
                es.iter().map(|e| self.expr_as(e, s)).collect()
            }
            (Init::Repeat(e, len), Ty::Array(s, n)) => {
                let k = self.const_int(len, "array initializer length")?;
                if k != n as i128 {
                    return err(
                        TypeErrorKind::Mismatch,
                        format!("`{name}` has {n} cells but repeat count {k}"),
                    );
                }
                let v = self.expr_as(e, s)?;
                Ok(vec![v; n as usize])
            }
            _ => err(
                TypeErrorKind::Mismatch,
                format!("initializer shape of `{name}` does not match its type"),
            ),
        }
    }

    fn resolve_type(&mut self, t: &TypeSyntax) -> TResult<Ty> {
        match t {
            TypeSyntax::Scalar(s) => Ok(Ty::Scalar(*s)),
            TypeSyntax::Array(s, len) => {
                let n = self.const_int(len, "array length")?;
                if !(1..=65536).contains(&n) {
                    return err(TypeErrorKind::OutOfRangeLiteral, format!("array length {n} out of range"));
                }
                Ok(Ty::Array(*s, n as u32))
            }
        }
    }

    /// Folds an untyped integer constant expression (literals, constants, arithmetic).
    fn const_int(&self, e: &Expr, what: &str) -> TResult<i128> {
        match self.fold_int(e) {
            Some(v) => Ok(v),
            None => err(TypeErrorKind::NonConstant, format!("{what} is not a constant")),
        }
    }

    fn fold_int(&self, e: &Expr) -> Option<i128> {
        Some(match e {
            Expr::Int(v) => *v as i128,
            Expr::Var(n) => {
                let g = &self.globals[*self.global_names.get(n)?];
                if !g.is_const || !g.ty.elem().is_integer() || g.ty.cells() != 1 {
                    return None;
                }
                self.lookup_shadowed(n)?;
                ops::to_i64(g.init[0], g.ty.elem()) as i128
            }
            Expr::Unary(UnOp::Neg, a) => -self.fold_int(a)?,
            Expr::Binary(op, a, b) => {
                let (x, y) = (self.fold_int(a)?, self.fold_int(b)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x.checked_mul(y)?,
                    BinOp::Div if y != 0 => x / y,
                    BinOp::Rem if y != 0 => x % y,
                    _ => return None,
                }
            }
            _ => return None,
        })
    }

    // A local with the same name would hide the constant; locals may not
    // shadow globals, so this only guards against misuse inside functions.
    fn lookup_shadowed(&self, n: &str) -> Option<()> {
        match self.lookup(n) {
            Some(Binding::Global(_)) | None => Some(()),
            Some(Binding::Local(_)) => None,
        }
    }

    /// True for integer literal expressions without an intrinsic type.
    fn is_poly(&self, e: &Expr) -> bool {
        match e {
            Expr::Int(_) => true,
            Expr::Unary(UnOp::Neg | UnOp::BitNot, a) => self.is_poly(a),
            Expr::Binary(op, a, b) => {
                !op.is_comparison() && !op.is_logical() && self.is_poly(a) && self.is_poly(b)
            }
            _ => false,
        }
    }

    fn lookup(&self, n: &str) -> Option<Binding> {
        if let Some(ctx) = &self.ctx {
            for scope in ctx.scopes.iter().rev() {
                if let Some(id) = scope.get(n) {
                    return Some(Binding::Local(*id));
                }
            }
        }
        self.global_names.get(n).map(|g| Binding::Global(*g))
    }

    fn var_ty(&self, b: Binding) -> Ty {
        match b {
            Binding::Global(g) => self.globals[g].ty,
            Binding::Local(l) => self.ctx.as_ref().unwrap().locals[l].ty,
        }
    }

    fn var_ref(b: Binding) -> VarRef {
        match b {
            Binding::Global(g) => VarRef::Global(g),
            Binding::Local(l) => VarRef::Local(l),
        }
    }

    /// Checks `e` and coerces it to `ty` (literal typing or lossless widening).
    fn expr_as(&mut self, e: &Expr, ty: Scalar) -> TResult<TExpr> {
        if self.is_poly(e) {
            return self.literal(e, ty);
        }
        let te = self.expr(e, Some(ty))?;
        coerce(te, ty)
    }

    fn literal(&self, e: &Expr, ty: Scalar) -> TResult<TExpr> {
        let v = self.fold_int(e).ok_or(TypeError {
            kind: TypeErrorKind::NonConstant,
            message: "integer literal expression could not be folded".into(),
        })?;
        if ty == Scalar::Bool {
            return err(TypeErrorKind::Mismatch, "integer literal where bool expected");
        }
        if !literal_fits(v, ty) {
            return err(
                TypeErrorKind::OutOfRangeLiteral,
                format!("literal {v} out of range for {ty}"),
            );
        }
        let bits = if ty == Scalar::Fx {
            ops::from_i64((v * 65536) as i64, ty)
        } else {
            ops::from_i64(v as i64, ty)
        };
        Ok(TExpr::konst(bits, ty))
    }

    /// Synthesizes a type for `e`; `hint` types bare literals.
    fn expr(&mut self, e: &Expr, hint: Option<Scalar>) -> TResult<TExpr> {
        if self.is_poly(e) {
            return self.literal(e, hint.filter(|t| *t != Scalar::Bool).unwrap_or(Scalar::I32));
        }
        match e {
            Expr::Int(_) => unreachable!(),
            Expr::Fx(raw) => {
                if *raw > i32::MAX as i64 {
                    return err(TypeErrorKind::OutOfRangeLiteral, "fixed-point literal out of range");
                }
                Ok(TExpr::konst(ops::from_i64(*raw, Scalar::Fx), Scalar::Fx))
            }
            Expr::Bool(b) => Ok(TExpr::konst(*b as u64, Scalar::Bool)),
            Expr::Var(n) => {
                let b = self.lookup(n).ok_or_else(|| TypeError {
                    kind: TypeErrorKind::Undeclared,
                    message: format!("undeclared variable `{n}`"),
                })?;
                match self.var_ty(b) {
                    Ty::Scalar(s) => {
                        if let Binding::Global(g) = b {
                            if self.globals[g].is_const {
                                return Ok(TExpr::konst(self.globals[g].init[0], s));
                            }
                        }
                        Ok(TExpr {
                            kind: TExprKind::Var(Self::var_ref(b)),
                            ty: s,
                        })
                    }
                    Ty::Array(..) => err(TypeErrorKind::Mismatch, format!("array `{n}` used without index")),
                }
            }
            Expr::Index(n, idx) => {
                let b = self.lookup(n).ok_or_else(|| TypeError {
                    kind: TypeErrorKind::Undeclared,
                    message: format!("undeclared array `{n}`"),
                })?;
                let Ty::Array(elem, len) = self.var_ty(b) else {
                    return err(TypeErrorKind::Mismatch, format!("`{n}` is not an array"));
                };
                let i = self.expr(idx, None)?;
                if !i.ty.is_integer() {
                    return err(TypeErrorKind::Mismatch, format!("index of `{n}` must be an integer"));
                }
                Ok(TExpr {
                    kind: TExprKind::Index(Self::var_ref(b), Box::new(i), len),
                    ty: elem,
                })
            }
            Expr::Unary(op, a) => {
                let ta = self.expr(a, hint)?;
                let ok = match op {
                    UnOp::Neg => ta.ty.is_integer() || ta.ty == Scalar::Fx,
                    UnOp::Not => ta.ty == Scalar::Bool,
                    UnOp::BitNot => ta.ty.is_integer(),
                };
                if !ok {
                    return err(TypeErrorKind::Mismatch, format!("operator {op:?} not defined on {}", ta.ty));
                }
                let ty = ta.ty;
                Ok(TExpr {
                    kind: TExprKind::Unary(*op, Box::new(ta)),
                    ty,
                })
            }
            Expr::Cast(a, to) => {
                let ta = if self.is_poly(a) {
                    self.literal(a, Scalar::I32)?
                } else {
                    self.expr(a, None)?
                };
                if ta.ty == *to {
                    return Ok(ta);
                }
                Ok(TExpr {
                    kind: TExprKind::Cast(Box::new(ta)),
                    ty: *to,
                })
            }
            Expr::Binary(op, a, b) => self.binary(*op, a, b, hint),
            Expr::Call(name, args) => {
                let (fid, f) = match self.fn_sigs.get(name.as_str()) {
                    Some(x) => *x,
                    None => return err(TypeErrorKind::Undeclared, format!("undeclared function `{name}`")),
                };
                if name == "main" {
                    return err(TypeErrorKind::Recursion, "`main` cannot be called");
                }
                if f.params.len() != args.len() {
                    return err(
                        TypeErrorKind::Mismatch,
                        format!("`{name}` expects {} arguments, got {}", f.params.len(), args.len()),
                    );
                }
                let mut targs = Vec::new();
                for (a, (_, pt)) in args.iter().zip(&f.params) {
                    targs.push(self.expr_as(a, *pt)?);
                }
                let Some(ret) = f.ret else {
                    return err(TypeErrorKind::Mismatch, format!("`{name}` returns no value"));
                };
                let cs = self.call_sites;
                self.call_sites += 1;
                Ok(TExpr {
                    kind: TExprKind::Call(fid, targs, cs),
                    ty: ret,
                })
            }
            Expr::Nondet(t) => Ok(self.nondet(*t, "nondet")),
        }
    }

    fn nondet(&mut self, ty: Scalar, base: &str) -> TExpr {
        let n = self.site_counts.entry(base.to_string()).or_insert(0);
        let label = if *n == 0 {
            base.to_string()
        } else {
            format!("{base}#{n}")
        };
        *n += 1;
        self.sites.push(NondetSite { label, ty });
        TExpr {
            kind: TExprKind::Nondet(self.sites.len() - 1),
            ty,
        }
    }

    fn binary(&mut self, op: BinOp, a: &Expr, b: &Expr, hint: Option<Scalar>) -> TResult<TExpr> {
        if op.is_logical() {
            let ta = self.expr_as(a, Scalar::Bool)?;
            let tb = self.expr_as(b, Scalar::Bool)?;
            return Ok(TExpr {
                kind: TExprKind::Binary(op, Box::new(ta), Box::new(tb)),
                ty: Scalar::Bool,
            });
        }
        if op.is_shift() {
            let lhs_hint = if op.is_comparison() { None } else { hint };
            let ta = self.expr(a, lhs_hint)?;
            if !ta.ty.is_integer() {
                return err(TypeErrorKind::Mismatch, format!("shift of {}", ta.ty));
            }
            let tb = self.expr(b, Some(Scalar::U8))?;
            if !tb.ty.is_integer() {
                return err(TypeErrorKind::Mismatch, "shift amount must be an integer");
            }
            let ty = ta.ty;
            return Ok(TExpr {
                kind: TExprKind::Binary(op, Box::new(ta), Box::new(tb)),
                ty,
            });
        }
        let operand_hint = if op.is_comparison() { None } else { hint };
        let (ta, tb) = match (self.is_poly(a), self.is_poly(b)) {
            (true, false) => {
                let tb = self.expr(b, operand_hint)?;
                (self.literal(a, lit_type(tb.ty)?)?, tb)
            }
            (false, true) => {
                let ta = self.expr(a, operand_hint)?;
                let tb = self.literal(b, lit_type(ta.ty)?)?;
                (ta, tb)
            }
            _ => {
                let ta = self.expr(a, operand_hint)?;
                let tb = self.expr(b, operand_hint)?;
                (ta, tb)
            }
        };
        let common = unify(ta.ty, tb.ty)?;
        let ta = coerce(ta, common)?;
        let tb = coerce(tb, common)?;
        let result = if op.is_comparison() {
            Scalar::Bool
        } else {
            let ok = match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                    common.is_integer() || common == Scalar::Fx
                }
                BinOp::Rem | BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor => common.is_integer(),
                _ => false,
            };
            if !ok {
                return err(
                    TypeErrorKind::Mismatch,
                    format!("operator `{}` not defined on {common}", op.symbol()),
                );
            }
            common
        };
        if op.is_comparison()
            && common == Scalar::Bool
            && !matches!(op, BinOp::Eq | BinOp::Ne)
        {
            return err(TypeErrorKind::Mismatch, "ordering comparison on bool");
        }
        Ok(TExpr {
            kind: TExprKind::Binary(op, Box::new(ta), Box::new(tb)),
            ty: result,
        })
    }

    fn function(&mut self, f: &Function) -> TResult<TFunction> {
        let mut ctx = FnCtx {
            locals: Vec::new(),
            scopes: vec![HashMap::new()],
            loop_vars: Vec::new(),
        };
        let mut params = Vec::new();
        for (n, t) in &f.params {
            if ctx.scopes[0].contains_key(n) || self.global_names.contains_key(n) {
                return err(TypeErrorKind::Redeclared, format!("parameter `{n}` shadows another name"));
            }
            ctx.scopes[0].insert(n.clone(), ctx.locals.len());
            params.push(ctx.locals.len());
            ctx.locals.push(TLocal {
                name: n.clone(),
                ty: Ty::Scalar(*t),
            });
        }
        self.ctx = Some(ctx);
        let mut body_src: &[Stmt] = &f.body;
        let mut ret_src = None;
        if let Some((Stmt::Return(r), rest)) = f.body.split_last() {
            body_src = rest;
            ret_src = r.as_ref();
        }
        let mut body = Vec::new();
        for s in body_src {
            body.push(self.stmt(s)?);
        }
        let ret_expr = match (f.ret, ret_src) {
            (Some(t), Some(e)) => Some(self.expr_as(e, t)?),
            (None, None) => None,
            (Some(_), None) => {
                return err(TypeErrorKind::Structure, format!("`{}` must end with `return <expr>;`", f.name))
            }
            (None, Some(_)) => return err(TypeErrorKind::Mismatch, format!("`{}` returns no value", f.name)),
        };
        let ctx = self.ctx.take().unwrap();
        Ok(TFunction {
            name: f.name.clone(),
            params,
            ret: f.ret,
            locals: ctx.locals,
            body,
            ret_expr,
        })
    }

    fn block(&mut self, stmts: &[Stmt]) -> TResult<Vec<TStmt>> {
        self.ctx.as_mut().unwrap().scopes.push(HashMap::new());
        let mut out = Vec::new();
        for s in stmts {
            out.push(self.stmt(s)?);
        }
        self.ctx.as_mut().unwrap().scopes.pop();
        Ok(out)
    }

    fn declare_local(&mut self, name: &str, ty: Ty) -> TResult<LocalId> {
        if self.lookup(name).is_some() {
            return err(TypeErrorKind::Redeclared, format!("`{name}` is already declared in an enclosing scope"));
        }
        let ctx = self.ctx.as_mut().unwrap();
        let id = ctx.locals.len();
        ctx.locals.push(TLocal {
            name: name.to_string(),
            ty,
        });
        ctx.scopes.last_mut().unwrap().insert(name.to_string(), id);
        Ok(id)
    }

    /// Checks the right-hand side of `name = rhs`; direct `nondet_T()` reads
    /// are labelled after the variable they initialize.
    fn rhs(&mut self, name: &str, e: &Expr, ty: Scalar) -> TResult<TExpr> {
        if let Expr::Nondet(t) = e {
            let te = self.nondet(*t, name);
            return coerce(te, ty);
        }
        self.expr_as(e, ty)
    }

    fn stmt(&mut self, s: &Stmt) -> TResult<TStmt> {
        Ok(match s {
            Stmt::Let { name, ty, init } => {
                let t = self.resolve_type(ty)?;
                let tinit = match (init, t) {
                    (None, _) => TInit::Zero,
                    (Some(Init::Expr(e)), Ty::Scalar(sc)) => TInit::Scalar(self.rhs(name, e, sc)?),
                    (Some(i), _) => TInit::Array(self.init_exprs(i, t, name)?),
                };
                let local = self.declare_local(name, t)?;
                TStmt::Let { local, init: tinit }
            }
            Stmt::Assign(place, e) => {
                let name = place.name();
                let b = self.lookup(name).ok_or_else(|| TypeError {
                    kind: TypeErrorKind::Undeclared,
                    message: format!("undeclared variable `{name}`"),
                })?;
                if let Binding::Global(g) = b {
                    if self.globals[g].is_const {
                        return err(TypeErrorKind::Mismatch, format!("assignment to constant `{name}`"));
                    }
                }
                if let Binding::Local(l) = b {
                    if self.ctx.as_ref().unwrap().loop_vars.contains(&l) {
                        return err(TypeErrorKind::Mismatch, format!("assignment to loop variable `{name}`"));
                    }
                }
                let ty = self.var_ty(b);
                let index = match (place, ty) {
                    (Place::Var(_), Ty::Scalar(_)) => None,
                    (Place::Index(_, i), Ty::Array(..)) => {
                        let ti = self.expr(i, None)?;
                        if !ti.ty.is_integer() {
                            return err(TypeErrorKind::Mismatch, "array index must be an integer");
                        }
                        Some(ti)
                    }
                    _ => return err(TypeErrorKind::Mismatch, format!("bad assignment target `{name}`")),
                };
                let value = self.rhs(name, e, ty.elem())?;
                TStmt::Assign {
                    target: Self::var_ref(b),
                    index,
                    value,
                }
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => TStmt::If {
                cond: self.expr_as(cond, Scalar::Bool)?,
                then_body: self.block(then_body)?,
                else_body: self.block(else_body)?,
            },
            Stmt::For { var, lo, hi, body } => {
                let ty = match (self.is_poly(lo), self.is_poly(hi)) {
                    (true, true) => Scalar::I32,
                    (false, _) => self.expr(lo, None)?.ty,
                    (true, false) => self.expr(hi, None)?.ty,
                };
                if !ty.is_integer() {
                    return err(TypeErrorKind::Mismatch, "loop bounds must be integers");
                }
                let tlo = self.expr_as(lo, ty)?;
                let thi = self.expr_as(hi, ty)?;
                let bounds = match (self.const_value(&tlo), self.const_value(&thi)) {
                    (Some(a), Some(b)) => Some((ops::to_i64(a, ty), ops::to_i64(b, ty))),
                    _ => None,
                };
                self.ctx.as_mut().unwrap().scopes.push(HashMap::new());
                let v = self.declare_local(var, Ty::Scalar(ty))?;
                self.ctx.as_mut().unwrap().loop_vars.push(v);
                let tbody = self.block(body);
                self.ctx.as_mut().unwrap().loop_vars.pop();
                self.ctx.as_mut().unwrap().scopes.pop();
                TStmt::For {
                    var: v,
                    lo: tlo,
                    hi: thi,
                    bounds,
                    body: tbody?,
                }
            }
            Stmt::While { cond, body } => TStmt::While {
                cond: self.expr_as(cond, Scalar::Bool)?,
                body: self.block(body)?,
            },
            Stmt::Switch {
                scrutinee,
                cases,
                default,
            } => {
                let ts = self.expr(scrutinee, None)?;
                if !ts.ty.is_integer() {
                    return err(TypeErrorKind::Mismatch, "switch scrutinee must be an integer");
                }
                let mut seen = Vec::new();
                let mut tcases = Vec::new();
                for c in cases {
                    let mut labels = Vec::new();
                    for l in &c.labels {
                        let v = self.fold_int(l).ok_or(TypeError {
                            kind: TypeErrorKind::NonConstant,
                            message: "case label is not a constant".into(),
                        })?;
                        if !literal_fits(v, ts.ty) {
                            return err(TypeErrorKind::OutOfRangeLiteral, format!("case label {v} out of range"));
                        }
                        let bits = ops::from_i64(v as i64, ts.ty);
                        if seen.contains(&bits) {
                            return err(TypeErrorKind::Redeclared, format!("duplicate case label {v}"));
                        }
                        seen.push(bits);
                        labels.push(bits);
                    }
                    tcases.push((labels, self.block(&c.body)?));
                }
                let tdefault = match default {
                    Some(d) => Some(self.block(d)?),
                    None => None,
                };
                TStmt::Switch {
                    scrutinee: ts,
                    cases: tcases,
                    default: tdefault,
                }
            }
            Stmt::Assume(e) => TStmt::Assume(self.expr_as(e, Scalar::Bool)?),
            Stmt::Assert(e) => TStmt::Assert(self.expr_as(e, Scalar::Bool)?),
            Stmt::Error => TStmt::Error,
            Stmt::Return(_) => {
                return err(TypeErrorKind::Structure, "`return` must be the last statement of a function")
            }
            Stmt::Expr(e) => {
                let Expr::Call(name, args) = e else {
                    return err(TypeErrorKind::Structure, "expression statements must be calls");
                };
                let (fid, f) = match self.fn_sigs.get(name.as_str()) {
                    Some(x) => *x,
                    None => return err(TypeErrorKind::Undeclared, format!("undeclared function `{name}`")),
                };
                if name == "main" {
                    return err(TypeErrorKind::Recursion, "`main` cannot be called");
                }
                if f.params.len() != args.len() {
                    return err(TypeErrorKind::Mismatch, format!("`{name}` arity mismatch"));
                }
                let mut targs = Vec::new();
                for (a, (_, pt)) in args.iter().zip(&f.params) {
                    targs.push(self.expr_as(a, *pt)?);
                }
                let cs = self.call_sites;
                self.call_sites += 1;
                TStmt::Expr(TExpr {
                    kind: TExprKind::Call(fid, targs, cs),
                    ty: f.ret.unwrap_or(Scalar::Bool),
                })
            }
        })
    }

    /// Value of a typed expression built only from constants.
    fn const_value(&self, e: &TExpr) -> Option<u64> {
        const_value(e)
    }
}

/// Value of a typed expression built only from constants.
pub fn const_value(e: &TExpr) -> Option<u64> {
    match &e.kind {
        TExprKind::Const(v) => Some(*v),
        TExprKind::Unary(op, a) => Some(ops::unary(*op, a.ty, const_value(a)?)),
        TExprKind::Binary(op, a, b) => {
            Some(ops::binary(*op, a.ty, const_value(a)?, const_value(b)?).0)
        }
        TExprKind::Cast(a) => Some(ops::cast(a.ty, e.ty, const_value(a)?)),
        _ => None,
    }
}

fn lit_type(other: Scalar) -> TResult<Scalar> {
    if other == Scalar::Bool {
        return err(TypeErrorKind::Mismatch, "integer literal combined with bool");
    }
    Ok(other)
}

fn unify(a: Scalar, b: Scalar) -> TResult<Scalar> {
    if a == b {
        return Ok(a);
    }
    if (a == Scalar::Fx) != (b == Scalar::Fx) && a != Scalar::Bool && b != Scalar::Bool {
        return err(
            TypeErrorKind::FxIntMix,
            format!("cannot mix {a} and {b} without a cast"),
        );
    }
    if widens(a, b) {
        Ok(b)
    } else if widens(b, a) {
        Ok(a)
    } else {
        err(TypeErrorKind::Mismatch, format!("incompatible operand types {a} and {b}"))
    }
}

fn coerce(e: TExpr, to: Scalar) -> TResult<TExpr> {
    if e.ty == to {
        return Ok(e);
    }
    if (e.ty == Scalar::Fx) != (to == Scalar::Fx) && e.ty != Scalar::Bool && to != Scalar::Bool {
        return err(
            TypeErrorKind::FxIntMix,
            format!("cannot use {} as {to} without a cast", e.ty),
        );
    }
    if !widens(e.ty, to) {
        return err(
            TypeErrorKind::Mismatch,
            format!("cannot implicitly convert {} to {to}", e.ty),
        );
    }
    Ok(TExpr {
        kind: TExprKind::Cast(Box::new(e)),
        ty: to,
    })
}

/// Type-checks a property expression in global scope (globals only, no calls or inputs).
pub fn check_global_expr(tp: &TypedProgram, e: &Expr, ty: Scalar) -> TResult<TExpr> {
    let mut c = Checker {
        globals: tp.prog.globals.clone(),
        global_names: tp
            .prog
            .globals
            .iter()
            .enumerate()
            .map(|(i, g)| (g.name.clone(), i))
            .collect(),
        fn_sigs: HashMap::new(),
        sites: Vec::new(),
        site_counts: BTreeMap::new(),
        call_sites: 0,
        ctx: None,
    };
    let te = c.expr_as(e, ty)?;
    if !te.is_pure_over(&|v| matches!(v, VarRef::Global(_))) {
        return err(
            TypeErrorKind::Structure,
            "property expressions may only read global variables",
        );
    }
    Ok(te)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse::parse;

    fn check(src: &str) -> TResult<TypedProgram> {
        typecheck(&parse(src).unwrap())
    }

    #[test]
    fn recursion_is_rejected() {
        let e = check("fn f(x: u8) -> u8 { return f(x); }\nfn main() { }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::Recursion);
        let e = check("fn f() { g(); }\nfn g() { f(); }\nfn main() { }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::Recursion);
    }

    #[test]
    fn literal_range() {
        let e = check("fn main() { let x: u8 = 300; }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::OutOfRangeLiteral);
        let e = check("global x: u8 = 300;\nfn main() { }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::OutOfRangeLiteral);
        assert!(check("fn main() { let x: u8 = 255; let y: i8 = -128; }").is_ok());
        let e = check("fn main() { let y: i8 = -129; }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::OutOfRangeLiteral);
    }

    #[test]
    fn fx_int_mix_needs_cast() {
        let e = check("global a: fx = 1.5;\nglobal b: u8 = 1;\nfn main() { a = a + b; }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::FxIntMix);
        assert!(check("global a: fx = 1.5;\nglobal b: u8 = 1;\nfn main() { a = a + (b as fx); }").is_ok());
    }

    #[test]
    fn array_length_must_be_constant() {
        let e = check("global n: u8 = 3;\nglobal a: [u8; n];\nfn main() { }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::NonConstant);
        let tp = check("const N: u8 = 3;\nglobal a: [u8; N + 1];\nfn main() { }").unwrap();
        assert_eq!(tp.prog.globals[1].ty, Ty::Array(Scalar::U8, 4));
    }

    #[test]
    fn implicit_widening_is_explicit() {
        let tp = check("global a: u8 = 1;\nglobal b: u16 = 2;\nfn main() { b = a + b; }").unwrap();
        let TStmt::Assign { value, .. } = &tp.prog.main_fn().body[0] else {
            panic!()
        };
        let TExprKind::Binary(_, l, _) = &value.kind else { panic!() };
        assert!(matches!(l.kind, TExprKind::Cast(_)));
        assert_eq!(l.ty, Scalar::U16);
        let e = check("global a: u8 = 1;\nglobal b: u16 = 2;\nfn main() { a = b; }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::Mismatch);
    }

    #[test]
    fn switch_cases_have_own_scopes() {
        let src = "global y: u8 = 0;\nglobal x: u8 = 0;\nfn main() {\n  switch (x) {\n    case 1: { let t: u8 = 1; y = t; }\n    case 2: { let t: u8 = 2; y = t; }\n    default: { let t: u8 = 3; y = t; }\n  }\n}";
        let tp = check(src).unwrap();
        assert_eq!(tp.prog.main_fn().locals.len(), 3);
        let bad = "global x: u8 = 0;\nfn main() { switch (x) { case 1: { let t: u8 = 1; } } x = t; }";
        assert_eq!(check(bad).unwrap_err().kind, TypeErrorKind::Undeclared);
    }

    #[test]
    fn nondet_sites_are_labelled() {
        let tp = check(
            "global x: u8 = 0;\nfn main() { while (true) { let in: u8 = nondet_u8(); x = x ^ in; x = nondet_u8() & 0; let in2: u8 = nondet_u8(); x = nondet_u8(); } }",
        )
        .unwrap();
        let labels: Vec<_> = tp.prog.sites.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["in", "nondet", "in2", "x"]);
    }

    #[test]
    fn loop_variable_is_read_only() {
        let e = check("fn main() { for i in 0..3 { i = 2; } }").unwrap_err();
        assert_eq!(e.kind, TypeErrorKind::Mismatch);
    }
}
