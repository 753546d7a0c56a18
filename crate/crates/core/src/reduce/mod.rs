//! Verdict-preserving source reductions.
//!
//! Each transformation takes a checked program and returns a checked program
//! together with a [`ReductionReport`]. SLOC counts are taken on the
//! canonical pretty print.

mod interval;
mod moving;
mod slice;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::lang::ast::{stmt_exprs, walk_stmts, Expr, Function, Init, Program, Stmt, TypeSyntax};
use crate::lang::typed::{TExprKind, VarRef};
use crate::lang::{pretty::sloc, typecheck, TypeError, TypedProgram};
use crate::ts::PropertySpec;

pub use interval::{analyze_intervals, inject_value_assumes, system_intervals, Interval, WIDEN_AFTER};
pub use moving::{move_variables, move_variables_with};
pub use slice::{slice, slice_with};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    pub transformation: String,
    pub sloc_before: usize,
    pub sloc_after: usize,
    /// Statements and declarations deleted.
    pub removed: usize,
    /// Globals turned into locals.
    pub moved: usize,
    /// `assume` statements added.
    pub injected: usize,
}

impl ReductionReport {
    fn new(id: &str, before: &TypedProgram, after: &TypedProgram) -> ReductionReport {
        ReductionReport {
            transformation: id.to_string(),
            sloc_before: sloc(&before.source),
            sloc_after: sloc(&after.source),
            removed: 0,
            moved: 0,
            injected: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReduceError {
    /// A rewrite produced a program the checker rejects. This indicates a
    /// bug in the transformation, never a property of the input.
    #[error("reduced program does not type-check: {0}")]
    Retype(#[from] TypeError),
}

/// Names of the globals read by a list of properties. Reductions must keep
/// these as globals since the property file refers to them by name.
pub fn property_globals(tp: &TypedProgram, props: &[PropertySpec]) -> Vec<String> {
    let mut out = BTreeSet::new();
    let mut visit = |e: &crate::lang::typed::TExpr| {
        e.walk(&mut |x| {
            if let TExprKind::Var(VarRef::Global(g)) | TExprKind::Index(VarRef::Global(g), _, _) = &x.kind {
                out.insert(tp.prog.globals[*g].name.clone());
            }
        })
    };
    for p in props {
        match p {
            PropertySpec::Invariant(e) => visit(e),
            PropertySpec::BoundedResponse { trigger, target, .. } => {
                visit(trigger);
                visit(target);
            }
        }
    }
    out.into_iter().collect()
}

/// Variable identity inside one program. Locals can never share a name with
/// a global, so a name resolves to a global exactly when one exists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Global(String),
    Local(String, String),
}

/// Transitive read/write/check summary of a function.
#[derive(Debug, Clone, Default)]
struct Summary {
    reads: BTreeSet<String>,
    writes: BTreeSet<String>,
    checks: bool,
}

struct Names<'a> {
    prog: &'a Program,
    globals: HashSet<&'a str>,
    summaries: HashMap<String, Summary>,
}

impl<'a> Names<'a> {
    fn new(prog: &'a Program) -> Names<'a> {
        let globals = prog.globals().map(|g| g.name.as_str()).collect();
        let mut n = Names {
            prog,
            globals,
            summaries: HashMap::new(),
        };
        for f in prog.functions() {
            n.summary(&f.name);
        }
        n
    }

    fn key(&self, func: &str, name: &str) -> Key {
        if self.globals.contains(name) {
            Key::Global(name.to_string())
        } else {
            Key::Local(func.to_string(), name.to_string())
        }
    }

    fn summary(&mut self, name: &str) -> Summary {
        if let Some(s) = self.summaries.get(name) {
            return s.clone();
        }
        // Placeholder guards against (rejected) recursion.
        self.summaries.insert(name.to_string(), Summary::default());
        let mut s = Summary::default();
        if let Some(f) = self.prog.function(name) {
            let mut callees = Vec::new();
            walk_stmts(&f.body, &mut |st| {
                match st {
                    Stmt::Assert(_) | Stmt::Assume(_) | Stmt::Error => s.checks = true,
                    Stmt::Assign(p, _) if self.globals.contains(p.name()) => {
                        s.writes.insert(p.name().to_string());
                    }
                    _ => {}
                }
                for e in stmt_exprs(st) {
                    e.walk(&mut |x| match x {
                        Expr::Var(n) | Expr::Index(n, _) if self.globals.contains(n.as_str()) => {
                            s.reads.insert(n.clone());
                        }
                        Expr::Call(c, _) => callees.push(c.clone()),
                        _ => {}
                    });
                }
            });
            for c in callees {
                let cs = self.summary(&c);
                s.reads.extend(cs.reads);
                s.writes.extend(cs.writes);
                s.checks |= cs.checks;
            }
        }
        self.summaries.insert(name.to_string(), s.clone());
        s
    }

    /// Keys read by an expression, including globals read inside callees.
    fn expr_reads(&self, func: &str, e: &Expr, out: &mut HashSet<Key>) {
        e.walk(&mut |x| match x {
            Expr::Var(n) | Expr::Index(n, _) => {
                out.insert(self.key(func, n));
            }
            Expr::Call(c, _) => {
                if let Some(s) = self.summaries.get(c) {
                    out.extend(s.reads.iter().map(|g| Key::Global(g.clone())));
                }
            }
            _ => {}
        });
    }

    fn calls_in(e: &Expr, out: &mut Vec<String>) {
        e.walk(&mut |x| {
            if let Expr::Call(c, _) = x {
                out.push(c.clone());
            }
        });
    }
}

/// Identifiers mentioned anywhere in a type or initializer.
fn decl_refs(ty: &TypeSyntax, init: Option<&Init>, out: &mut BTreeSet<String>) {
    let mut add = |e: &Expr| {
        e.walk(&mut |x| {
            if let Expr::Var(n) | Expr::Index(n, _) = x {
                out.insert(n.clone());
            }
        })
    };
    if let TypeSyntax::Array(_, len) = ty {
        add(len);
    }
    match init {
        Some(Init::Expr(e)) => add(e),
        Some(Init::List(es)) => es.iter().for_each(&mut add),
        Some(Init::Repeat(e, n)) => {
            add(e);
            add(n);
        }
        None => {}
    }
}

/// Identifiers and callees mentioned in a function body.
fn body_refs(f: &Function, names: &mut BTreeSet<String>, calls: &mut BTreeSet<String>) {
    walk_stmts(&f.body, &mut |s| {
        if let Stmt::Assign(p, _) = s {
            names.insert(p.name().to_string());
        }
        if let Stmt::Let { ty, .. } = s {
            decl_refs(ty, None, names);
        }
        for e in stmt_exprs(s) {
            e.walk(&mut |x| match x {
                Expr::Var(n) | Expr::Index(n, _) => {
                    names.insert(n.clone());
                }
                Expr::Call(c, _) => {
                    calls.insert(c.clone());
                }
                _ => {}
            });
        }
    });
}

fn retype(p: &Program) -> Result<TypedProgram, ReduceError> {
    Ok(typecheck(p)?)
}

fn count_stmts(stmts: &[Stmt]) -> usize {
    let mut n = 0;
    walk_stmts(stmts, &mut |_| n += 1);
    n
}
