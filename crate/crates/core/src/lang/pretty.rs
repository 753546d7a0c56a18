//! Canonical pretty-printer. Output re-parses to a structurally equal tree.

use super::ast::*;
use std::fmt::Write;

const INDENT: &str = "    ";

/// Exact decimal rendering of a raw 16.16 value (non-negative part only; the
/// sign is emitted by the caller or by a leading `-`).
pub fn fx_literal(raw: i64) -> String {
    let neg = raw < 0;
    let mag = raw.unsigned_abs();
    let int = mag >> 16;
    let frac = mag & 0xffff;
    // 10^16 / 2^16 is an integer, so the fraction is exact in 16 digits.
    let scaled = (frac as u128) * 10u128.pow(16) / 65536;
    let mut digits = format!("{scaled:016}");
    while digits.len() > 1 && digits.ends_with('0') {
        digits.pop();
    }
    format!("{}{}.{}", if neg { "-" } else { "" }, int, digits)
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn prec_of(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => op.precedence(),
        Expr::Cast(..) => 11,
        Expr::Unary(..) => 12,
        _ => 13,
    }
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let p = prec_of(e);
    let paren = p < min_prec;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Fx(raw) => out.push_str(&fx_literal(*raw)),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(n) => out.push_str(n),
        Expr::Index(n, i) => {
            out.push_str(n);
            out.push('[');
            write_expr(out, i, 0);
            out.push(']');
        }
        Expr::Unary(op, a) => {
            out.push_str(match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
                UnOp::BitNot => "~",
            });
            // A negative fixed-point literal must not print as `--1.5`.
            let needs = matches!(**a, Expr::Fx(r) if r < 0);
            write_expr(out, a, if needs { 14 } else { 12 });
        }
        Expr::Cast(a, t) => {
            write_expr(out, a, 11);
            let _ = write!(out, " as {t}");
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            write_expr(out, a, p);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, p + 1);
        }
        Expr::Call(f, args) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0);
            }
            out.push(')');
        }
        Expr::Nondet(t) => {
            let _ = write!(out, "nondet_{t}()");
        }
    }
    if paren {
        out.push(')');
    }
}

fn type_to_string(t: &TypeSyntax) -> String {
    match t {
        TypeSyntax::Scalar(s) => s.to_string(),
        TypeSyntax::Array(s, n) => format!("[{}; {}]", s, expr_to_string(n)),
    }
}

fn init_to_string(i: &Init) -> String {
    match i {
        Init::Expr(e) => expr_to_string(e),
        Init::List(es) => format!(
            "[{}]",
            es.iter().map(expr_to_string).collect::<Vec<_>>().join(", ")
        ),
        Init::Repeat(e, n) => format!("[{}; {}]", expr_to_string(e), expr_to_string(n)),
    }
}

fn write_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        write_stmt(out, s, depth);
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match s {
        Stmt::Let { name, ty, init } => {
            let _ = write!(out, "{pad}let {name}: {}", type_to_string(ty));
            if let Some(i) = init {
                let _ = write!(out, " = {}", init_to_string(i));
            }
            out.push_str(";\n");
        }
        Stmt::Assign(p, e) => {
            let lhs = match p {
                Place::Var(n) => n.clone(),
                Place::Index(n, i) => format!("{n}[{}]", expr_to_string(i)),
            };
            let _ = writeln!(out, "{pad}{lhs} = {};", expr_to_string(e));
        }
        Stmt::If { .. } => {
            out.push_str(&pad);
            write_if(out, s, depth);
            out.push('\n');
        }
        Stmt::For { var, lo, hi, body } => {
            let _ = writeln!(
                out,
                "{pad}for {var} in {}..{} {{",
                expr_to_string(lo),
                expr_to_string(hi)
            );
            write_block(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        Stmt::While { cond, body } => {
            let _ = writeln!(out, "{pad}while ({}) {{", expr_to_string(cond));
            write_block(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        Stmt::Switch {
            scrutinee,
            cases,
            default,
        } => {
            let _ = writeln!(out, "{pad}switch ({}) {{", expr_to_string(scrutinee));
            let inner = INDENT.repeat(depth + 1);
            for c in cases {
                let labels = c
                    .labels
                    .iter()
                    .map(expr_to_string)
                    .collect::<Vec<_>>()
                    .join(", ");
                let _ = writeln!(out, "{inner}case {labels}: {{");
                write_block(out, &c.body, depth + 2);
                let _ = writeln!(out, "{inner}}}");
            }
            if let Some(d) = default {
                let _ = writeln!(out, "{inner}default: {{");
                write_block(out, d, depth + 2);
                let _ = writeln!(out, "{inner}}}");
            }
            let _ = writeln!(out, "{pad}}}");
        }
        Stmt::Assume(e) => {
            let _ = writeln!(out, "{pad}assume({});", expr_to_string(e));
        }
        Stmt::Assert(e) => {
            let _ = writeln!(out, "{pad}assert({});", expr_to_string(e));
        }
        Stmt::Error => {
            let _ = writeln!(out, "{pad}error();");
        }
        Stmt::Return(None) => {
            let _ = writeln!(out, "{pad}return;");
        }
        Stmt::Return(Some(e)) => {
            let _ = writeln!(out, "{pad}return {};", expr_to_string(e));
        }
        Stmt::Expr(e) => {
            let _ = writeln!(out, "{pad}{};", expr_to_string(e));
        }
    }
}

// Writes `if (...) { ... } else ...` without leading indentation or trailing newline.
fn write_if(out: &mut String, s: &Stmt, depth: usize) {
    let Stmt::If {
        cond,
        then_body,
        else_body,
    } = s
    else {
        unreachable!()
    };
    let pad = INDENT.repeat(depth);
    let _ = writeln!(out, "if ({}) {{", expr_to_string(cond));
    write_block(out, then_body, depth + 1);
    let _ = write!(out, "{pad}}}");
    if else_body.is_empty() {
        return;
    }
    if let [nested @ Stmt::If { .. }] = else_body.as_slice() {
        out.push_str(" else ");
        write_if(out, nested, depth);
    } else {
        out.push_str(" else {\n");
        write_block(out, else_body, depth + 1);
        let _ = write!(out, "{pad}}}");
    }
}

/// Renders a program in canonical form.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    let mut prev_fn = false;
    for (i, item) in p.items.iter().enumerate() {
        match item {
            Item::Global(g) => {
                if prev_fn {
                    out.push('\n');
                }
                let kw = if g.is_const { "const" } else { "global" };
                let _ = write!(out, "{kw} {}: {}", g.name, type_to_string(&g.ty));
                if let Some(init) = &g.init {
                    let _ = write!(out, " = {}", init_to_string(init));
                }
                out.push_str(";\n");
                prev_fn = false;
            }
            Item::Function(f) => {
                if i > 0 {
                    out.push('\n');
                }
                let params = f
                    .params
                    .iter()
                    .map(|(n, t)| format!("{n}: {t}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                let _ = write!(out, "fn {}({params})", f.name);
                if let Some(r) = f.ret {
                    let _ = write!(out, " -> {r}");
                }
                out.push_str(" {\n");
                write_block(&mut out, &f.body, 1);
                out.push_str("}\n");
                prev_fn = true;
            }
        }
    }
    out
}

/// Non-blank, non-comment lines of the canonical rendering.
pub fn sloc(p: &Program) -> usize {
    count_sloc(&pretty_print(p))
}

pub fn count_sloc(text: &str) -> usize {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("//"))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse::{parse, parse_expr};

    #[test]
    fn fx_rendering_is_exact() {
        assert_eq!(fx_literal(98304), "1.5");
        assert_eq!(fx_literal(65536), "1.0");
        assert_eq!(fx_literal(1), "0.0000152587890625");
        assert_eq!(fx_literal(-32768), "-0.5");
    }

    #[test]
    fn minimal_parentheses() {
        for src in [
            "(a + b) * c",
            "a - (b - c)",
            "a - b - c",
            "-(x as u8)",
            "(a + b) as u16",
            "!(c != 4)",
            "__kind_i == 1 && !(c != 4)",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = expr_to_string(&e);
            assert_eq!(printed, src);
            assert_eq!(parse_expr(&printed).unwrap(), e);
        }
    }

    #[test]
    fn else_if_chain_round_trips() {
        let src = "fn main() { if (a) { x = 1; } else { if (b) { x = 2; } else { x = 3; } } }";
        let p = parse(src).unwrap();
        let text = pretty_print(&p);
        assert!(text.contains("} else if (b) {"));
        assert_eq!(parse(&text).unwrap(), p);
    }
}
