//! Small seeded programs for cross-checking the engines against the oracle.
//!
//! Every program has at most [`MAX_STATE_BITS`] bits of state and few enough
//! input bits for exhaustive exploration. Programs exercise branches,
//! switches, bounded loops, helper calls, arrays, assumptions and nested
//! checks; the loop ends in an `assert` that serves as the property.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::pretty::sloc;
use crate::lang::{load, TypedProgram};
use crate::oracle::MAX_ORACLE_BITS;
use crate::ts::extract;

pub const MAX_STATE_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallProgram {
    pub seed: u64,
    pub source: String,
}

impl SmallProgram {
    pub fn load(&self) -> TypedProgram {
        load(&self.source).expect("corpus programs type-check")
    }
}

struct Gen {
    rng: ChaCha8Rng,
    u8_vars: Vec<String>,
    bool_vars: Vec<String>,
    /// Readable but not assignable (inputs, loop counters).
    u8_reads: Vec<String>,
    bool_reads: Vec<String>,
    arrays: Vec<(String, u32)>,
    helper: Option<String>,
    void_helper: Option<String>,
}

impl Gen {
    fn pick<'a>(&mut self, v: &'a [String]) -> &'a str {
        &v[self.rng.gen_range(0..v.len())]
    }

    fn small_lit(&mut self) -> u64 {
        if self.rng.gen_bool(0.7) {
            self.rng.gen_range(0..8)
        } else {
            self.rng.gen_range(0..256)
        }
    }

    fn u8_leaf(&mut self) -> String {
        let reads: Vec<String> = self.u8_vars.iter().chain(&self.u8_reads).cloned().collect();
        if !self.arrays.is_empty() && self.rng.gen_bool(0.15) {
            let (a, n) = self.arrays[self.rng.gen_range(0..self.arrays.len())].clone();
            let idx = if self.rng.gen_bool(0.5) {
                self.rng.gen_range(0..n).to_string()
            } else {
                self.pick(&reads).to_string()
            };
            return format!("{a}[{idx}]");
        }
        self.pick(&reads).to_string()
    }

    fn u8_expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return self.u8_leaf();
        }
        if let Some(h) = self.helper.clone() {
            if self.rng.gen_bool(0.1) {
                return format!("{h}({}, {})", self.u8_expr(depth - 1), self.u8_expr(depth - 1));
            }
        }
        let a = self.u8_expr(depth - 1);
        let lit = self.small_lit();
        match self.rng.gen_range(0..11) {
            0 | 1 => format!("({a} + {})", self.u8_operand(depth)),
            2 => format!("({a} - {})", self.u8_operand(depth)),
            3 => format!("({a} * {})", self.rng.gen_range(2..5)),
            4 => format!("({a} & {})", lit.max(1)),
            5 => format!("({a} | {})", self.u8_operand(depth)),
            6 => format!("({a} ^ {})", self.u8_operand(depth)),
            7 => format!("({a} << {})", self.rng.gen_range(0..8)),
            8 => format!("({a} >> {})", self.rng.gen_range(0..8)),
            9 => format!("({a} / {})", self.rng.gen_range(1..6)),
            _ => format!("({a} % {})", self.rng.gen_range(1..9)),
        }
    }

    fn u8_operand(&mut self, depth: u32) -> String {
        if self.rng.gen_bool(0.5) {
            self.small_lit().to_string()
        } else {
            self.u8_expr(depth - 1)
        }
    }

    fn cond(&mut self, depth: u32) -> String {
        let bools: Vec<String> = self.bool_vars.iter().chain(&self.bool_reads).cloned().collect();
        let r = self.rng.gen_range(0..10);
        if depth > 0 && r == 0 {
            return format!("!({})", self.cond(depth - 1));
        }
        if depth > 0 && r == 1 {
            let op = if self.rng.gen_bool(0.5) { "&&" } else { "||" };
            return format!("({} {op} {})", self.cond(depth - 1), self.cond(depth - 1));
        }
        if !bools.is_empty() && r < 4 {
            return self.pick(&bools).to_string();
        }
        let op = ["==", "!=", "<", "<=", ">", ">="][self.rng.gen_range(0..6)];
        let rhs = if self.rng.gen_bool(0.6) {
            self.small_lit().to_string()
        } else {
            self.u8_expr(1)
        };
        format!("{} {op} {rhs}", self.u8_expr(1))
    }

    fn assign(&mut self, ind: &str) -> String {
        let total = self.u8_vars.len() + self.bool_vars.len() + self.arrays.len();
        let k = self.rng.gen_range(0..total);
        if k < self.u8_vars.len() {
            let v = self.u8_vars[k].clone();
            if let Some(h) = self.void_helper.clone() {
                if self.rng.gen_bool(0.1) {
                    return format!("{ind}{h}();\n");
                }
            }
            if self.rng.gen_bool(0.35) {
                let step = self.rng.gen_range(1..4);
                return format!("{ind}{v} = {v} + {step};\n");
            }
            format!("{ind}{v} = {};\n", self.u8_expr(2))
        } else if k < self.u8_vars.len() + self.bool_vars.len() {
            let v = self.bool_vars[k - self.u8_vars.len()].clone();
            format!("{ind}{v} = {};\n", self.cond(1))
        } else {
            let (a, n) = self.arrays[k - self.u8_vars.len() - self.bool_vars.len()].clone();
            let idx = if self.rng.gen_bool(0.6) {
                self.rng.gen_range(0..n).to_string()
            } else {
                self.u8_leaf()
            };
            format!("{ind}{a}[{idx}] = {};\n", self.u8_expr(2))
        }
    }

    fn stmts(&mut self, depth: u32, ind: &str, n: usize, out: &mut String) {
        for _ in 0..n {
            self.stmt(depth, ind, out);
        }
    }

    fn stmt(&mut self, depth: u32, ind: &str, out: &mut String) {
        let inner = format!("{ind}    ");
        let r = if depth == 0 { 0 } else { self.rng.gen_range(0..20) };
        match r {
            0..=8 => out.push_str(&self.assign(ind)),
            9..=12 => {
                let c = self.cond(2);
                out.push_str(&format!("{ind}if ({c}) {{\n"));
                let n = self.rng.gen_range(1..3);
                self.stmts(depth - 1, &inner, n, out);
                if self.rng.gen_bool(0.5) {
                    out.push_str(&format!("{ind}}} else {{\n"));
                    let n = self.rng.gen_range(1..3);
                    self.stmts(depth - 1, &inner, n, out);
                }
                out.push_str(&format!("{ind}}}\n"));
            }
            13 => {
                let s = self.u8_expr(1);
                out.push_str(&format!("{ind}switch ({s} & 3) {{\n"));
                let case_ind = format!("{inner}    ");
                for label in 0..self.rng.gen_range(1..4u32) {
                    out.push_str(&format!("{inner}case {label}: {{\n"));
                    self.stmt(depth - 1, &case_ind, out);
                    out.push_str(&format!("{inner}}}\n"));
                }
                if self.rng.gen_bool(0.5) {
                    out.push_str(&format!("{inner}default: {{\n"));
                    self.stmt(depth - 1, &case_ind, out);
                    out.push_str(&format!("{inner}}}\n"));
                }
                out.push_str(&format!("{ind}}}\n"));
            }
            14 => {
                let k = format!("k{}", self.rng.gen_range(0..1000));
                let hi = self.rng.gen_range(1..4);
                out.push_str(&format!("{ind}for {k} in 0..{hi} {{\n"));
                self.u8_reads.push(k);
                self.stmt(depth - 1, &inner, out);
                self.u8_reads.pop();
                out.push_str(&format!("{ind}}}\n"));
            }
            15 => out.push_str(&format!("{ind}assume({});\n", self.cond(1))),
            16 => {
                let c = self.cond(1);
                out.push_str(&format!("{ind}if ({c}) {{\n{inner}error();\n{ind}}}\n"));
            }
            17 => out.push_str(&format!("{ind}assert({});\n", self.cond(1))),
            _ => out.push_str(&self.assign(ind)),
        }
    }
}

struct Parts {
    decls: String,
    helpers: String,
    init: String,
    /// Input reads and statements of the loop body, before the final assert.
    body: String,
    assert: String,
    u8_vars: Vec<String>,
}

impl Parts {
    fn assemble(&self, junk: Option<&Junk>) -> String {
        let (jd, jh, jpre, jpost) = match junk {
            Some(j) => (j.decls.as_str(), j.helper.as_str(), j.pre.as_str(), j.post.as_str()),
            None => ("", "", "", ""),
        };
        format!(
            "{}{jd}{}{jh}\nfn main() {{\n{}    while (true) {{\n{jpre}{}{jpost}{}    }}\n}}\n",
            self.decls, self.helpers, self.init, self.body, self.assert
        )
    }
}

/// Code that cannot influence any check: two boolean globals, a helper and
/// statements that only write those globals or fresh locals.
struct Junk {
    decls: String,
    helper: String,
    pre: String,
    post: String,
}

fn junk_stmt(rng: &mut ChaCha8Rng, reads: &[String], i: usize) -> String {
    let ind = "        ";
    let v = &reads[rng.gen_range(0..reads.len())];
    let lit = rng.gen_range(0..16);
    match rng.gen_range(0..5) {
        0 => format!("{ind}let jt{i}: u8 = noise({v}, {lit});\n"),
        1 => format!("{ind}j0 = ({v} & {}) == {lit};\n", rng.gen_range(1..16)),
        2 => format!("{ind}if (j1) {{\n{ind}    j0 = !j0;\n{ind}}} else {{\n{ind}    j1 = {v} > {lit};\n{ind}}}\n"),
        3 => format!("{ind}j1 = noise({v}, {v}) > {lit};\n"),
        _ => format!("{ind}let jt{i}: u8 = ({v} + {lit}) ^ {};\n{ind}j0 = jt{i} > 9 || j1;\n", rng.gen_range(0..256)),
    }
}

fn candidate(seed: u64) -> String {
    candidate_parts(seed).assemble(None)
}

fn candidate_parts(seed: u64) -> Parts {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        u8_vars: vec!["x".into()],
        bool_vars: vec![],
        u8_reads: vec![],
        bool_reads: vec![],
        arrays: vec![],
        helper: None,
        void_helper: None,
    };
    let mut state_bits = 8;
    let mut decls = String::new();
    let x0 = if g.rng.gen_bool(0.8) { g.rng.gen_range(0..4) } else { g.small_lit() };
    decls.push_str(&format!("global x: u8 = {x0};\n"));
    let second_u8 = g.rng.gen_bool(0.5);
    if second_u8 {
        let y0 = g.small_lit();
        decls.push_str(&format!("global y: u8 = {y0};\n"));
        g.u8_vars.push("y".into());
        state_bits += 8;
    }
    for name in ["p", "q"] {
        if state_bits < MAX_STATE_BITS && g.rng.gen_bool(0.4) {
            let v = g.rng.gen_bool(0.5);
            decls.push_str(&format!("global {name}: bool = {v};\n"));
            g.bool_vars.push(name.into());
            state_bits += 1;
        }
    }
    if state_bits + 6 <= MAX_STATE_BITS && g.rng.gen_bool(0.3) {
        let n = g.rng.gen_range(2..4u32);
        decls.push_str(&format!("global a: [bool; {n}] = [false; {n}];\n"));
        g.bool_vars.extend((0..n).map(|i| format!("a[{i}]")));
        state_bits += n;
    } else if !second_u8 && g.rng.gen_bool(0.3) {
        decls.push_str("global a: [u8; 1] = [0; 1];\n");
        g.arrays.push(("a".into(), 1));
        state_bits += 8;
    }
    let _ = state_bits;

    let mut helpers = String::new();
    if g.rng.gen_bool(0.3) {
        let lit = g.small_lit();
        let body = match g.rng.gen_range(0..3) {
            0 => format!("    if (v > w) {{\n        return v - w;\n    }}\n    return (w + {lit}) & 15;\n"),
            1 => format!("    let r: u8 = v ^ w;\n    return r >> {};\n", g.rng.gen_range(0..4)),
            _ => format!("    return (v & w) | {lit};\n"),
        };
        helpers.push_str(&format!("\nfn h(v: u8, w: u8) -> u8 {{\n{body}}}\n"));
        g.helper = Some("h".into());
    }
    if g.rng.gen_bool(0.2) {
        let target = g.u8_vars[g.rng.gen_range(0..g.u8_vars.len())].clone();
        let k = g.rng.gen_range(1..4);
        helpers.push_str(&format!("\nfn bump() {{\n    {target} = {target} + {k};\n}}\n"));
        g.void_helper = Some("bump".into());
    }

    let mut body = String::new();
    let ind = "        ";
    // Per-iteration inputs: one byte, or up to two booleans.
    let input_budget = MAX_ORACLE_BITS - state_bits.max(8) - 4;
    if input_budget >= 8 && g.rng.gen_bool(0.55) {
        body.push_str(&format!("{ind}let i: u8 = nondet_u8();\n"));
        g.u8_reads.push("i".into());
    } else {
        for name in ["b", "c"] {
            if g.rng.gen_bool(0.6) {
                body.push_str(&format!("{ind}let {name}: bool = nondet_bool();\n"));
                g.bool_reads.push(name.into());
            }
        }
    }
    let n = g.rng.gen_range(1..5);
    g.stmts(2, ind, n, &mut body);
    g.u8_reads.clear();
    g.bool_reads.clear();
    let prop = match g.rng.gen_range(0..4) {
        0 => format!("x != {}", g.rng.gen_range(0..16)),
        1 => format!("x < {}", g.rng.gen_range(1..24)),
        2 => g.cond(1),
        _ => {
            let a = g.u8_expr(1);
            format!("{a} != {}", g.small_lit())
        }
    };
    let assert = format!("{ind}assert({prop});\n");

    let mut init = String::new();
    if g.rng.gen_bool(0.15) {
        init.push_str("    x = nondet_u8() & 7;\n");
    }
    Parts {
        decls,
        helpers,
        init,
        body,
        assert,
        u8_vars: g.u8_vars,
    }
}

fn fits(ts: &crate::ts::TransitionSystem) -> bool {
    ts.state_bits() <= MAX_STATE_BITS && ts.state_bits() + ts.input_bits().max(ts.init_input_bits()) <= MAX_ORACLE_BITS
}

/// A corpus program together with a variant padded with irrelevant code.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedProgram {
    pub original: SmallProgram,
    pub padded: SmallProgram,
    /// Share of the padded program's SLOC that was added.
    pub irrelevant_fraction: f64,
}

/// The `seed`-th padded program: at least `min_fraction` of its SLOC is
/// code the checks do not depend on.
pub fn padded_program(seed: u64, min_fraction: f64) -> PaddedProgram {
    for attempt in 0u64.. {
        let cseed = seed.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(attempt);
        let parts = candidate_parts(cseed);
        let base = parts.assemble(None);
        let Ok(base_tp) = load(&base) else { continue };
        let base_sloc = sloc(&base_tp.source);
        let mut rng = ChaCha8Rng::seed_from_u64(cseed ^ 0x5EED);
        let mut junk = Junk {
            decls: "global j0: bool = false;\nglobal j1: bool = true;\n".into(),
            helper: "\nfn noise(v: u8, w: u8) -> u8 {\n    let s: u8 = v ^ w;\n    let r: u8 = s + 1;\n    if (s > 100) {\n        r = s - 100;\n    }\n    return r;\n}\n".into(),
            pre: String::new(),
            post: String::new(),
        };
        let mut i = 0;
        let (source, tp) = loop {
            let src = parts.assemble(Some(&junk));
            let tp = load(&src).expect("padding type-checks");
            let total = sloc(&tp.source);
            if (total - base_sloc) as f64 >= min_fraction * total as f64 {
                break (src, tp);
            }
            let stmt = junk_stmt(&mut rng, &parts.u8_vars, i);
            if i % 2 == 0 {
                junk.pre.push_str(&stmt);
            } else {
                junk.post.push_str(&stmt);
            }
            i += 1;
        };
        let (Ok(ts), Ok(base_ts)) = (extract(&tp), extract(&base_tp)) else { continue };
        if fits(&ts) && fits(&base_ts) {
            let total = sloc(&tp.source);
            return PaddedProgram {
                original: SmallProgram { seed, source: base },
                padded: SmallProgram { seed, source },
                irrelevant_fraction: (total - base_sloc) as f64 / total as f64,
            };
        }
    }
    unreachable!()
}

/// The `seed`-th program of the corpus. Candidates that fail to type-check
/// or exceed the size bounds are skipped deterministically.
pub fn small_program(seed: u64) -> SmallProgram {
    for attempt in 0u64.. {
        let source = candidate(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(attempt));
        let Ok(tp) = load(&source) else { continue };
        let Ok(ts) = extract(&tp) else { continue };
        if fits(&ts) {
            return SmallProgram { seed, source };
        }
    }
    unreachable!()
}
