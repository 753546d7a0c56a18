//! Structural classification of a typed program: can it be handled by
//! k-induction, or only by plain BMC?

use super::typed::*;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShapeReport {
    KInductionReady,
    BmcOnly(String),
}

impl ShapeReport {
    pub fn is_ready(&self) -> bool {
        matches!(self, ShapeReport::KInductionReady)
    }
}

impl fmt::Display for ShapeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeReport::KInductionReady => f.write_str("KInductionReady"),
            ShapeReport::BmcOnly(r) => write!(f, "BmcOnly({r})"),
        }
    }
}

fn count_while(stmts: &[TStmt]) -> usize {
    let mut n = 0;
    for s in stmts {
        n += match s {
            TStmt::While { body, .. } => 1 + count_while(body),
            TStmt::If {
                then_body,
                else_body,
                ..
            } => count_while(then_body) + count_while(else_body),
            TStmt::For { body, .. } => count_while(body),
            TStmt::Switch { cases, default, .. } => {
                cases.iter().map(|(_, b)| count_while(b)).sum::<usize>()
                    + default.as_deref().map_or(0, count_while)
            }
            _ => 0,
        };
    }
    n
}

fn has_dynamic_for(stmts: &[TStmt]) -> bool {
    stmts.iter().any(|s| match s {
        TStmt::For { bounds, body, .. } => bounds.is_none() || has_dynamic_for(body),
        TStmt::While { body, .. } => has_dynamic_for(body),
        TStmt::If {
            then_body,
            else_body,
            ..
        } => has_dynamic_for(then_body) || has_dynamic_for(else_body),
        TStmt::Switch { cases, default, .. } => {
            cases.iter().any(|(_, b)| has_dynamic_for(b))
                || default.as_deref().is_some_and(has_dynamic_for)
        }
        _ => false,
    })
}

pub fn validate_shape(tp: &TypedProgram) -> ShapeReport {
    let p = &tp.prog;
    let loops: usize = p.functions.iter().map(|f| count_while(&f.body)).sum();
    if loops > 1 {
        return ShapeReport::BmcOnly("multiple unbounded loops".into());
    }
    let main = p.main_fn();
    if loops == 0 || count_while(&main.body) == 0 {
        return ShapeReport::BmcOnly("no main loop".into());
    }
    match main.body.last() {
        Some(TStmt::While { cond, .. }) if cond.kind == TExprKind::Const(1) => {}
        Some(TStmt::While { .. }) => return ShapeReport::BmcOnly("no main loop".into()),
        _ => return ShapeReport::BmcOnly("statements after main loop".into()),
    }
    if p.functions.iter().any(|f| has_dynamic_for(&f.body)) {
        return ShapeReport::BmcOnly("unbounded inner loop".into());
    }
    ShapeReport::KInductionReady
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check::typecheck, parse::parse};

    fn shape(src: &str) -> ShapeReport {
        validate_shape(&typecheck(&parse(src).unwrap()).unwrap())
    }

    #[test]
    fn classifies_loops() {
        assert!(shape("global c: u8 = 0;\nfn main() { while (true) { c = c + 1; } }").is_ready());
        assert_eq!(
            shape("global c: u8 = 0;\nfn main() { while (true) { while (c < 3) { c = c + 1; } } }"),
            ShapeReport::BmcOnly("multiple unbounded loops".into())
        );
        assert_eq!(
            shape("global c: u8 = 0;\nfn main() { while (true) { let n: u8 = nondet_u8(); for i in 0..n { c = c + 1; } } }"),
            ShapeReport::BmcOnly("unbounded inner loop".into())
        );
        assert_eq!(
            shape("global c: u8 = 0;\nfn main() { c = 1; }"),
            ShapeReport::BmcOnly("no main loop".into())
        );
        assert_eq!(
            shape("global c: u8 = 0;\nfn main() { while (true) { c = 1; } c = 2; }"),
            ShapeReport::BmcOnly("statements after main loop".into())
        );
    }
}
