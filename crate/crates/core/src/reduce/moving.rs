//! Turning globals into locals.
//!
//! A scalar global qualifies when exactly one function mentions it, that
//! function is not on the ignore list, and every read of the global in that
//! function follows a definite write within the same call (or, for `main`,
//! within the same loop iteration). The declaration then moves to the top of
//! the function body, or of the main loop body.

use std::collections::{BTreeMap, BTreeSet};

use super::{retype, ReduceError, ReductionReport};
use crate::lang::ast::{stmt_exprs, walk_stmts, Expr, Function, Global, Item, Place, Stmt, TypeSyntax};
use crate::lang::TypedProgram;

fn reads(e: &Expr, g: &str) -> bool {
    let mut hit = false;
    e.walk(&mut |x| {
        if let Expr::Var(n) | Expr::Index(n, _) = x {
            hit |= n == g;
        }
    });
    hit
}

fn stmt_reads(s: &Stmt, g: &str) -> bool {
    stmt_exprs(s).into_iter().any(|e| reads(e, g))
}

fn is_literal_range(lo: &Expr, hi: &Expr) -> bool {
    matches!((lo, hi), (Expr::Int(a), Expr::Int(b)) if a < b)
}

/// Must-definition scan. Returns whether `g` is definitely written at the
/// end of the block, or `None` if it may be read before being written.
fn scan(stmts: &[Stmt], g: &str, mut defined: bool) -> Option<bool> {
    for s in stmts {
        if !defined && stmt_reads(s, g) {
            return None;
        }
        match s {
            Stmt::Assign(Place::Var(n), _) if n == g => defined = true,
            Stmt::If {
                then_body,
                else_body,
                ..
            } => {
                let a = scan(then_body, g, defined)?;
                let b = scan(else_body, g, defined)?;
                defined = a && b;
            }
            Stmt::For { lo, hi, body, .. } => {
                let d = scan(body, g, defined)?;
                defined = defined || (d && is_literal_range(lo, hi));
            }
            Stmt::While { body, .. } => {
                scan(body, g, defined)?;
            }
            Stmt::Switch { cases, default, .. } => {
                let mut all = default.is_some();
                for c in cases {
                    all &= scan(&c.body, g, defined)?;
                }
                if let Some(d) = default {
                    all &= scan(d, g, defined)?;
                }
                defined = defined || all;
            }
            _ => {}
        }
    }
    Some(defined)
}

fn mentions(stmts: &[Stmt], g: &str) -> bool {
    let mut hit = false;
    walk_stmts(stmts, &mut |s| {
        hit |= stmt_reads(s, g) || matches!(s, Stmt::Assign(p, _) if p.name() == g);
    });
    hit
}

fn as_local(g: &Global) -> Stmt {
    Stmt::Let {
        name: g.name.clone(),
        ty: g.ty.clone(),
        init: g.init.clone(),
    }
}

/// Moves every qualifying global.
pub fn move_variables(tp: &TypedProgram, ignore: &[String]) -> Result<(TypedProgram, ReductionReport), ReduceError> {
    move_variables_with(tp, ignore, &[])
}

/// Like [`move_variables`], but never moves the globals in `keep`.
pub fn move_variables_with(
    tp: &TypedProgram,
    ignore: &[String],
    keep: &[String],
) -> Result<(TypedProgram, ReductionReport), ReduceError> {
    let prog = &tp.source;
    let mut moves: BTreeMap<String, Vec<&Global>> = BTreeMap::new();
    for g in prog.globals() {
        if g.is_const || matches!(g.ty, TypeSyntax::Array(..)) || keep.contains(&g.name) {
            continue;
        }
        let users: Vec<&Function> = prog.functions().filter(|f| mentions(&f.body, &g.name)).collect();
        let [f] = users.as_slice() else { continue };
        if ignore.contains(&f.name) {
            continue;
        }
        let ok = if f.name == "main" {
            match f.body.split_last() {
                Some((Stmt::While { body, .. }, init)) => !mentions(init, &g.name) && scan(body, &g.name, false).is_some(),
                _ => false,
            }
        } else {
            scan(&f.body, &g.name, false).is_some()
        };
        if ok {
            moves.entry(f.name.clone()).or_default().push(g);
        }
    }

    let moved: BTreeSet<&str> = moves.values().flatten().map(|g| g.name.as_str()).collect();
    let mut items = Vec::new();
    for item in &prog.items {
        match item {
            Item::Global(g) if moved.contains(g.name.as_str()) => {}
            Item::Function(f) if moves.contains_key(&f.name) => {
                let decls: Vec<Stmt> = moves[&f.name].iter().map(|g| as_local(g)).collect();
                let mut f = f.clone();
                if f.name == "main" {
                    if let Some(Stmt::While { body, .. }) = f.body.last_mut() {
                        body.splice(0..0, decls);
                    }
                } else {
                    f.body.splice(0..0, decls);
                }
                items.push(Item::Function(f));
            }
            other => items.push(other.clone()),
        }
    }
    let out = retype(&crate::lang::Program { items })?;
    let mut report = ReductionReport::new("move_variables", tp, &out);
    report.moved = moved.len();
    Ok((out, report))
}
