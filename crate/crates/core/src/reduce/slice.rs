//! Backward slicing of `main`.
//!
//! Dependencies are tracked per variable name and flow-insensitively, with
//! every array treated as one cell. Checks (`assert`, `assume`, `error()`)
//! seed the slice; a statement survives when it writes a relevant variable,
//! calls a function that writes one or performs a check, or encloses a
//! surviving statement. Helper functions reached from the slice are kept
//! whole.

use std::collections::{BTreeSet, HashSet};

use super::{body_refs, count_stmts, decl_refs, retype, Key, Names, ReduceError, ReductionReport};
use crate::lang::ast::{stmt_exprs, Item, Stmt, SwitchCase};
use crate::lang::TypedProgram;

struct Slicer<'a> {
    names: Names<'a>,
    relevant: HashSet<Key>,
}

impl Slicer<'_> {
    fn effectful(&self, s: &Stmt) -> bool {
        let mut calls = Vec::new();
        for e in stmt_exprs(s) {
            Names::calls_in(e, &mut calls);
        }
        calls.iter().any(|c| {
            self.names.summaries.get(c).is_some_and(|sum| {
                sum.checks || sum.writes.iter().any(|g| self.relevant.contains(&Key::Global(g.clone())))
            })
        })
    }

    fn is_relevant(&self, s: &Stmt) -> bool {
        if self.effectful(s) {
            return true;
        }
        match s {
            Stmt::Assert(_) | Stmt::Assume(_) | Stmt::Error | Stmt::Return(_) | Stmt::While { .. } => true,
            Stmt::Assign(p, _) => self.relevant.contains(&self.names.key("main", p.name())),
            Stmt::Let { name, .. } => self.relevant.contains(&self.names.key("main", name)),
            Stmt::Expr(_) => false,
            Stmt::If {
                then_body,
                else_body,
                ..
            } => self.any(then_body) || self.any(else_body),
            Stmt::For { body, .. } => self.any(body),
            Stmt::Switch { cases, default, .. } => {
                cases.iter().any(|c| self.any(&c.body)) || default.as_ref().is_some_and(|d| self.any(d))
            }
        }
    }

    fn any(&self, stmts: &[Stmt]) -> bool {
        stmts.iter().any(|s| self.is_relevant(s))
    }

    /// Adds the reads of relevant statements; returns whether anything changed.
    fn propagate(&mut self, stmts: &[Stmt]) -> bool {
        let mut changed = false;
        for s in stmts {
            if !self.is_relevant(s) {
                continue;
            }
            let mut reads = HashSet::new();
            for e in stmt_exprs(s) {
                self.names.expr_reads("main", e, &mut reads);
            }
            if let Stmt::For { var, .. } = s {
                reads.insert(self.names.key("main", var));
            }
            for k in reads {
                changed |= self.relevant.insert(k);
            }
            match s {
                Stmt::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    changed |= self.propagate(then_body);
                    changed |= self.propagate(else_body);
                }
                Stmt::For { body, .. } | Stmt::While { body, .. } => changed |= self.propagate(body),
                Stmt::Switch { cases, default, .. } => {
                    for c in cases {
                        changed |= self.propagate(&c.body);
                    }
                    if let Some(d) = default {
                        changed |= self.propagate(d);
                    }
                }
                _ => {}
            }
        }
        changed
    }

    fn filter(&self, stmts: &[Stmt], removed: &mut usize) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in stmts {
            if !self.is_relevant(s) {
                *removed += count_stmts(std::slice::from_ref(s));
                continue;
            }
            out.push(match s {
                Stmt::If {
                    cond,
                    then_body,
                    else_body,
                } => Stmt::If {
                    cond: cond.clone(),
                    then_body: self.filter(then_body, removed),
                    else_body: self.filter(else_body, removed),
                },
                Stmt::For { var, lo, hi, body } => Stmt::For {
                    var: var.clone(),
                    lo: lo.clone(),
                    hi: hi.clone(),
                    body: self.filter(body, removed),
                },
                Stmt::While { cond, body } => Stmt::While {
                    cond: cond.clone(),
                    body: self.filter(body, removed),
                },
                // Cases stay even when emptied: dropping one would route its
                // labels to the default branch.
                Stmt::Switch {
                    scrutinee,
                    cases,
                    default,
                } => Stmt::Switch {
                    scrutinee: scrutinee.clone(),
                    cases: cases
                        .iter()
                        .map(|c| SwitchCase {
                            labels: c.labels.clone(),
                            body: self.filter(&c.body, removed),
                        })
                        .collect(),
                    default: default.as_ref().map(|d| self.filter(d, removed)),
                },
                other => other.clone(),
            });
        }
        out
    }
}

/// Slices with respect to the checks in the program only.
pub fn slice(tp: &TypedProgram) -> Result<(TypedProgram, ReductionReport), ReduceError> {
    slice_with(tp, &[])
}

/// Slices with respect to the program's checks and the given globals
/// (typically those read by a property file).
pub fn slice_with(tp: &TypedProgram, keep: &[String]) -> Result<(TypedProgram, ReductionReport), ReduceError> {
    let prog = &tp.source;
    let mut slicer = Slicer {
        names: Names::new(prog),
        relevant: keep.iter().map(|g| Key::Global(g.clone())).collect(),
    };
    let main = prog.function("main").expect("checked program has main");
    while slicer.propagate(&main.body) {}

    let mut removed = 0;
    let new_main_body = slicer.filter(&main.body, &mut removed);

    // Functions reachable from the sliced main, kept whole.
    let mut names = BTreeSet::new();
    let mut calls = BTreeSet::new();
    let sliced_main = crate::lang::ast::Function {
        body: new_main_body,
        ..main.clone()
    };
    body_refs(&sliced_main, &mut names, &mut calls);
    let mut kept_fns: BTreeSet<String> = BTreeSet::new();
    let mut work: Vec<String> = calls.iter().cloned().collect();
    while let Some(f) = work.pop() {
        if !kept_fns.insert(f.clone()) {
            continue;
        }
        if let Some(func) = prog.function(&f) {
            let mut c = BTreeSet::new();
            body_refs(func, &mut names, &mut c);
            work.extend(c);
        }
    }

    // Globals referenced by kept code, closed over declaration dependencies.
    names.extend(keep.iter().cloned());
    loop {
        let before = names.len();
        for g in prog.globals() {
            if names.contains(&g.name) {
                let mut refs = BTreeSet::new();
                decl_refs(&g.ty, g.init.as_ref(), &mut refs);
                names.extend(refs);
            }
        }
        if names.len() == before {
            break;
        }
    }

    let mut items = Vec::new();
    for item in &prog.items {
        match item {
            Item::Global(g) if !names.contains(&g.name) => removed += 1,
            Item::Function(f) if f.name == "main" => items.push(Item::Function(sliced_main.clone())),
            Item::Function(f) if !kept_fns.contains(&f.name) => removed += 1,
            other => items.push(other.clone()),
        }
    }
    let out = retype(&crate::lang::Program { items })?;
    let mut report = ReductionReport::new("slice", tp, &out);
    report.removed = removed;
    Ok((out, report))
}
