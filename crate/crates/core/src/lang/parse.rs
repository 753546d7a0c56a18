//! Lexer and recursive-descent parser for LoopC sources and property files.

use super::ast::*;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    /// 1-based index of the offending token.
    pub token: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at {}:{} (token {}): found {}",
            self.line, self.column, self.token, self.found
        )?;
        if !self.expected.is_empty() {
            write!(f, ", expected {}", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Fx(i64),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Fx(raw) => write!(f, "`{}`", super::pretty::fx_literal(*raw)),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

// Longest first so that maximal munch works with a simple prefix scan.
const PUNCTS: &[&str] = &[
    "<<", ">>", "==", "!=", "<=", ">=", "&&", "||", "->", "=>", "..", "(", ")", "{", "}", "[",
    "]", ";", ":", ",", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=",
];

fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, token, found: String| SyntaxError {
        line,
        column,
        token,
        found,
        expected: vec![],
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let (tline, tcol) = (line, col);
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                line: tline,
                column: tcol,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            // `1..3` is a range, `1.5` is a fixed-point literal.
            let is_fx = bytes.get(i) == Some(&b'.')
                && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit());
            if is_fx {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text = &src[start..i];
            col += i - start;
            let tok = if is_fx {
                match parse_fx(text) {
                    Some(raw) => Tok::Fx(raw),
                    None => return Err(err(tline, tcol, out.len() + 1, text.to_string())),
                }
            } else {
                match text.parse::<u64>() {
                    Ok(v) => Tok::Int(v),
                    Err(_) => return Err(err(tline, tcol, out.len() + 1, text.to_string())),
                }
            };
            out.push(Token {
                tok,
                line: tline,
                column: tcol,
            });
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token {
                    tok: Tok::Punct(p),
                    line: tline,
                    column: tcol,
                });
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(err(tline, tcol, out.len() + 1, format!("`{ch}`")));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// Converts a decimal literal to raw 16.16, rounding half away from zero.
fn parse_fx(text: &str) -> Option<i64> {
    let (int_part, frac_part) = text.split_once('.')?;
    let int: i128 = int_part.parse().ok()?;
    let digits = frac_part.len() as u32;
    if digits > 30 {
        return None;
    }
    let frac: i128 = frac_part.parse().ok()?;
    let scale = 10i128.checked_pow(digits)?;
    let num = (int.checked_mul(scale)?.checked_add(frac)?).checked_mul(65536)?;
    let raw = (num * 2 + scale) / (2 * scale);
    i64::try_from(raw).ok()
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let t = &self.toks[self.pos];
        SyntaxError {
            line: t.line,
            column: t.column,
            token: self.pos + 1,
            found: t.tok.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{p}`")]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn scalar(&mut self) -> PResult<Scalar> {
        if let Tok::Ident(s) = self.peek() {
            if let Some(t) = Scalar::from_name(s) {
                self.bump();
                return Ok(t);
            }
        }
        Err(self.error(&["type"]))
    }

    fn type_syntax(&mut self) -> PResult<TypeSyntax> {
        if self.eat_punct("[") {
            let elem = self.scalar()?;
            self.expect_punct(";")?;
            let len = self.expr()?;
            self.expect_punct("]")?;
            Ok(TypeSyntax::Array(elem, Box::new(len)))
        } else {
            Ok(TypeSyntax::Scalar(self.scalar()?))
        }
    }

    fn init(&mut self) -> PResult<Init> {
        if self.eat_punct("[") {
            let first = self.expr()?;
            if self.eat_punct(";") {
                let n = self.expr()?;
                self.expect_punct("]")?;
                return Ok(Init::Repeat(first, n));
            }
            let mut items = vec![first];
            while self.eat_punct(",") {
                items.push(self.expr()?);
            }
            self.expect_punct("]")?;
            Ok(Init::List(items))
        } else {
            Ok(Init::Expr(self.expr()?))
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut items = Vec::new();
        loop {
            if matches!(self.peek(), Tok::Eof) {
                break;
            }
            if self.is_kw("global") || self.is_kw("const") {
                let is_const = self.is_kw("const");
                self.bump();
                let name = self.ident()?;
                self.expect_punct(":")?;
                let ty = self.type_syntax()?;
                let init = if self.eat_punct("=") {
                    Some(self.init()?)
                } else {
                    None
                };
                self.expect_punct(";")?;
                items.push(Item::Global(Global {
                    name,
                    ty,
                    is_const,
                    init,
                }));
            } else if self.eat_kw("fn") {
                items.push(Item::Function(self.function()?));
            } else {
                return Err(self.error(&["`global`", "`const`", "`fn`"]));
            }
        }
        Ok(Program { items })
    }

    fn function(&mut self) -> PResult<Function> {
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let p = self.ident()?;
                self.expect_punct(":")?;
                params.push((p, self.scalar()?));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        let ret = if self.eat_punct("->") {
            Some(self.scalar()?)
        } else {
            None
        };
        let body = self.block()?;
        Ok(Function {
            name,
            params,
            ret,
            body,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.error(&["`}`"]));
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_punct("(")?;
        let e = self.expr()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if self.eat_kw("let") {
            let name = self.ident()?;
            self.expect_punct(":")?;
            let ty = self.type_syntax()?;
            let init = if self.eat_punct("=") {
                Some(self.init()?)
            } else {
                None
            };
            self.expect_punct(";")?;
            return Ok(Stmt::Let { name, ty, init });
        }
        if self.is_kw("if") {
            return self.if_stmt();
        }
        if self.eat_kw("for") {
            let var = self.ident()?;
            self.expect_kw("in")?;
            let lo = self.expr()?;
            self.expect_punct("..")?;
            let hi = self.expr()?;
            let body = self.block()?;
            return Ok(Stmt::For { var, lo, hi, body });
        }
        if self.eat_kw("while") {
            let cond = self.paren_expr()?;
            let body = self.block()?;
            return Ok(Stmt::While { cond, body });
        }
        if self.eat_kw("switch") {
            let scrutinee = self.paren_expr()?;
            self.expect_punct("{")?;
            let mut cases = Vec::new();
            let mut default = None;
            loop {
                if self.eat_kw("case") {
                    if default.is_some() {
                        return Err(self.error(&["`}`"]));
                    }
                    let mut labels = vec![self.expr()?];
                    while self.eat_punct(",") {
                        labels.push(self.expr()?);
                    }
                    self.expect_punct(":")?;
                    let body = self.block()?;
                    cases.push(SwitchCase { labels, body });
                } else if self.eat_kw("default") {
                    if default.is_some() {
                        return Err(self.error(&["`}`"]));
                    }
                    self.expect_punct(":")?;
                    default = Some(self.block()?);
                } else if self.eat_punct("}") {
                    break;
                } else {
                    return Err(self.error(&["`case`", "`default`", "`}`"]));
                }
            }
            return Ok(Stmt::Switch {
                scrutinee,
                cases,
                default,
            });
        }
        if self.eat_kw("assume") {
            let e = self.paren_expr()?;
            self.expect_punct(";")?;
            return Ok(Stmt::Assume(e));
        }
        if self.eat_kw("assert") {
            let e = self.paren_expr()?;
            self.expect_punct(";")?;
            return Ok(Stmt::Assert(e));
        }
        if self.eat_kw("error") {
            self.expect_punct("(")?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(Stmt::Error);
        }
        if self.eat_kw("return") {
            if self.eat_punct(";") {
                return Ok(Stmt::Return(None));
            }
            let e = self.expr()?;
            self.expect_punct(";")?;
            return Ok(Stmt::Return(Some(e)));
        }
        if let Tok::Ident(name) = self.peek().clone() {
            if !is_keyword(&name) {
                if matches!(self.peek_at(1), Tok::Punct("=")) {
                    self.bump();
                    self.bump();
                    let e = self.expr()?;
                    self.expect_punct(";")?;
                    return Ok(Stmt::Assign(Place::Var(name), e));
                }
                if matches!(self.peek_at(1), Tok::Punct("[")) {
                    self.bump();
                    self.bump();
                    let idx = self.expr()?;
                    self.expect_punct("]")?;
                    self.expect_punct("=")?;
                    let e = self.expr()?;
                    self.expect_punct(";")?;
                    return Ok(Stmt::Assign(Place::Index(name, idx), e));
                }
            }
        }
        if let Tok::Ident(name) = self.peek().clone() {
            if !is_keyword(&name) && matches!(self.peek_at(1), Tok::Punct("(")) {
                let e = self.expr()?;
                self.expect_punct(";")?;
                return Ok(Stmt::Expr(e));
            }
        }
        Err(self.error(&["statement"]))
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        self.expect_kw("if")?;
        let cond = self.paren_expr()?;
        let then_body = self.block()?;
        let else_body = if self.eat_kw("else") {
            if self.is_kw("if") {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt::If {
            cond,
            then_body,
            else_body,
        })
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else {
            return None;
        };
        Some(match *p {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "|" => BinOp::BitOr,
            "^" => BinOp::BitXor,
            "&" => BinOp::BitAnd,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "<<" => BinOp::Shl,
            ">>" => BinOp::Shr,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.cast_expr()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn cast_expr(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        while self.eat_kw("as") {
            let t = self.scalar()?;
            e = Expr::Cast(Box::new(e), t);
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = if self.eat_punct("-") {
            Some(UnOp::Neg)
        } else if self.eat_punct("!") {
            Some(UnOp::Not)
        } else if self.eat_punct("~") {
            Some(UnOp::BitNot)
        } else {
            None
        };
        match op {
            Some(op) => Ok(Expr::Unary(op, Box::new(self.unary()?))),
            None => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Fx(raw) => {
                self.bump();
                Ok(Expr::Fx(raw))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                if let Some(ty) = s.strip_prefix("nondet_").and_then(Scalar::from_name) {
                    self.expect_punct("(")?;
                    self.expect_punct(")")?;
                    return Ok(Expr::Nondet(ty));
                }
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                    return Ok(Expr::Call(s, args));
                }
                if self.eat_punct("[") {
                    let idx = self.expr()?;
                    self.expect_punct("]")?;
                    return Ok(Expr::Index(s, Box::new(idx)));
                }
                Ok(Expr::Var(s))
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "global", "const", "fn", "let", "if", "else", "for", "while", "switch", "case",
    "default", "assume", "assert", "error", "return", "true", "false", "as", "invariant",
    "bounded_response", "within", "bool", "u8", "i8", "u16", "i16", "u32", "i32", "fx",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parses a LoopC source text.
pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    p.program()
}

/// Parses a standalone expression (used by property files and tests).
pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if !matches!(p.peek(), Tok::Eof) {
        return Err(p.error(&["end of input"]));
    }
    Ok(e)
}

/// One declaration of a property file, before type checking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyDecl {
    Invariant(Expr),
    BoundedResponse {
        trigger: Expr,
        target: Expr,
        within: u64,
    },
}

/// Parses a `.prop` file: `invariant <expr>;` or
/// `bounded_response <expr> => <expr> within <n>;`, one per line.
pub fn parse_properties(src: &str) -> Result<Vec<PropertyDecl>, SyntaxError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut out = Vec::new();
    loop {
        if matches!(p.peek(), Tok::Eof) {
            break;
        }
        if p.eat_kw("invariant") {
            let e = p.expr()?;
            p.expect_punct(";")?;
            out.push(PropertyDecl::Invariant(e));
        } else if p.eat_kw("bounded_response") {
            let trigger = p.expr()?;
            p.expect_punct("=>")?;
            let target = p.expr()?;
            p.expect_kw("within")?;
            let within = match p.bump() {
                Tok::Int(n) => n,
                _ => {
                    p.pos -= 1;
                    return Err(p.error(&["step count"]));
                }
            };
            p.expect_punct(";")?;
            out.push(PropertyDecl::BoundedResponse {
                trigger,
                target,
                within,
            });
        } else {
            return Err(p.error(&["`invariant`", "`bounded_response`"]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_separator_reports_third_token() {
        let e = parse("global c u8").unwrap_err();
        assert_eq!(e.token, 3);
        assert_eq!((e.line, e.column), (1, 10));
        assert_eq!(e.expected, vec!["`:`".to_string()]);
    }

    #[test]
    fn precedence_and_casts() {
        let e = parse_expr("a + b * c == d && !e").unwrap();
        let expected = Expr::bin(
            BinOp::And,
            Expr::bin(
                BinOp::Eq,
                Expr::bin(
                    BinOp::Add,
                    Expr::var("a"),
                    Expr::bin(BinOp::Mul, Expr::var("b"), Expr::var("c")),
                ),
                Expr::var("d"),
            ),
            Expr::not(Expr::var("e")),
        );
        assert_eq!(e, expected);
        let c = parse_expr("-x as u8").unwrap();
        assert!(matches!(c, Expr::Cast(inner, Scalar::U8) if matches!(*inner, Expr::Unary(UnOp::Neg, _))));
    }

    #[test]
    fn fixed_point_literals() {
        assert_eq!(parse_expr("1.5").unwrap(), Expr::Fx(98304));
        assert_eq!(parse_expr("0.1").unwrap(), Expr::Fx(6554));
        // `0..3` stays a range
        assert!(parse("fn main() { for i in 0..3 { } }").is_ok());
    }

    #[test]
    fn property_file() {
        let props = parse_properties(
            "// comment\ninvariant c != 4;\nbounded_response c == 1 => c == 0 within 2;\n",
        )
        .unwrap();
        assert_eq!(props.len(), 2);
        assert!(matches!(props[1], PropertyDecl::BoundedResponse { within: 2, .. }));
        assert!(parse_properties("invariant c != 4").is_err());
    }

    #[test]
    fn unexpected_character() {
        let e = parse("global c: u8 = 0 $").unwrap_err();
        assert_eq!(e.found, "`$`");
    }
}
