//! Source-level form of the induction step.
//!
//! The loop's trailing property is assumed at the head of every iteration,
//! every state variable is havoc'd once before the loop, and the checks of
//! the loop body only fire in iteration `k`, tracked by a fresh counter.

use crate::lang::ast::{BinOp, Expr, Place, Stmt, TypeSyntax};
use crate::lang::typed::{TStmt, Ty};
use crate::lang::{typecheck, validate_shape, Scalar, TypedProgram};

/// Name of the iteration counter introduced by the transformation.
pub const KIND_COUNTER: &str = "__kind_i";
const HAVOC_INDEX: &str = "__kind_h";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransformError {
    #[error("program shape does not admit k-induction: {0}")]
    ShapeUnsupported(String),
    #[error("k must be at least 1")]
    ZeroK,
}

fn havoc(name: &str, ty: Ty) -> Stmt {
    match ty {
        Ty::Scalar(s) => Stmt::Assign(Place::Var(name.into()), Expr::Nondet(s)),
        Ty::Array(s, n) => Stmt::For {
            var: HAVOC_INDEX.into(),
            lo: Expr::Int(0),
            hi: Expr::Int(n as u64),
            body: vec![Stmt::Assign(
                Place::Index(name.into(), Expr::var(HAVOC_INDEX)),
                Expr::Nondet(s),
            )],
        },
    }
}

fn at_k(k: u64) -> Expr {
    Expr::bin(BinOp::Eq, Expr::var(KIND_COUNTER), Expr::Int(k))
}

/// Wraps every `assert` and `error()` of a block in `if (__kind_i == k)`.
fn guard_checks(stmts: &[Stmt], k: u64) -> Vec<Stmt> {
    stmts
        .iter()
        .map(|s| match s {
            Stmt::Assert(_) | Stmt::Error => Stmt::If {
                cond: at_k(k),
                then_body: vec![s.clone()],
                else_body: vec![],
            },
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => Stmt::If {
                cond: cond.clone(),
                then_body: guard_checks(then_body, k),
                else_body: guard_checks(else_body, k),
            },
            Stmt::For { var, lo, hi, body } => Stmt::For {
                var: var.clone(),
                lo: lo.clone(),
                hi: hi.clone(),
                body: guard_checks(body, k),
            },
            Stmt::Switch {
                scrutinee,
                cases,
                default,
            } => Stmt::Switch {
                scrutinee: scrutinee.clone(),
                cases: cases
                    .iter()
                    .map(|c| crate::lang::ast::SwitchCase {
                        labels: c.labels.clone(),
                        body: guard_checks(&c.body, k),
                    })
                    .collect(),
                default: default.as_ref().map(|d| guard_checks(d, k)),
            },
            other => other.clone(),
        })
        .collect()
}

pub fn transform_step_program(tp: &TypedProgram, k: u64) -> Result<TypedProgram, TransformError> {
    if k == 0 {
        return Err(TransformError::ZeroK);
    }
    let shape = validate_shape(tp);
    if !shape.is_ready() {
        return Err(TransformError::ShapeUnsupported(shape.to_string()));
    }
    let prog = &tp.prog;
    let main_t = prog.main_fn();
    let mut src = tp.source.clone();
    let main = src.function_mut("main").expect("checked program has main");
    let Some((Stmt::While { cond, body }, init)) = main.body.split_last() else {
        return Err(TransformError::ShapeUnsupported("no main loop".into()));
    };
    let (cond, body, init) = (cond.clone(), body.clone(), init.to_vec());

    let mut havocs = Vec::new();
    for g in prog.globals.iter().filter(|g| !g.is_const) {
        havocs.push(havoc(&g.name, g.ty));
    }
    for s in &main_t.body {
        if let TStmt::Let { local, .. } = s {
            let l = &main_t.locals[*local];
            havocs.push(havoc(&l.name, l.ty));
        }
    }

    let (property, rest) = match body.split_last() {
        Some((Stmt::Assert(p), rest)) if prog.main_parts().is_some_and(|m| m.property.is_some()) => {
            (Some(p.clone()), rest.to_vec())
        }
        _ => (None, body.clone()),
    };

    let mut new_body = Vec::new();
    if let Some(p) = &property {
        new_body.push(Stmt::Assume(p.clone()));
    }
    new_body.push(Stmt::Assign(
        Place::Var(KIND_COUNTER.into()),
        Expr::bin(BinOp::Add, Expr::var(KIND_COUNTER), Expr::Int(1)),
    ));
    new_body.extend(guard_checks(&rest, k));
    if let Some(p) = property {
        new_body.push(Stmt::If {
            cond: at_k(k),
            then_body: vec![Stmt::Assert(p)],
            else_body: vec![],
        });
    }

    let mut new_main = init;
    new_main.extend(havocs);
    new_main.push(Stmt::Let {
        name: KIND_COUNTER.into(),
        ty: TypeSyntax::Scalar(Scalar::U32),
        init: Some(crate::lang::ast::Init::Expr(Expr::Int(0))),
    });
    new_main.push(Stmt::While { cond, body: new_body });
    main.body = new_main;
    typecheck(&src).map_err(|e| TransformError::ShapeUnsupported(e.to_string()))
}
