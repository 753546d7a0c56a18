//! Tseitin gate construction with structural hashing and word-level circuits.
//!
//! Variable 1 is reserved for the constant true; [`TRUE`] and [`FALSE`] are
//! its two literals. Words are little-endian vectors of literals.

use std::collections::HashMap;

pub type Lit = i32;
pub const TRUE: Lit = 1;
pub const FALSE: Lit = -1;

pub type Word = Vec<Lit>;

#[derive(Debug, Clone)]
pub struct GateBuilder {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    and_cache: HashMap<(Lit, Lit), Lit>,
    xor_cache: HashMap<(Lit, Lit), Lit>,
    ite_cache: HashMap<(Lit, Lit, Lit), Lit>,
}

impl Default for GateBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl GateBuilder {
    pub fn new() -> GateBuilder {
        GateBuilder {
            num_vars: 1,
            clauses: vec![vec![TRUE]],
            and_cache: HashMap::new(),
            xor_cache: HashMap::new(),
            ite_cache: HashMap::new(),
        }
    }

    pub fn fresh(&mut self) -> Lit {
        self.num_vars += 1;
        self.num_vars as Lit
    }

    pub fn fresh_word(&mut self, w: u32) -> Word {
        (0..w).map(|_| self.fresh()).collect()
    }

    pub fn clause(&mut self, c: &[Lit]) {
        if c.contains(&TRUE) {
            return;
        }
        let c: Vec<Lit> = c.iter().copied().filter(|&l| l != FALSE).collect();
        self.clauses.push(c);
    }

    pub fn konst(v: bool) -> Lit {
        if v {
            TRUE
        } else {
            FALSE
        }
    }

    pub fn const_word(v: u64, w: u32) -> Word {
        (0..w).map(|i| Self::konst((v >> i) & 1 == 1)).collect()
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        if a == FALSE || b == FALSE || a == -b {
            return FALSE;
        }
        if a == TRUE || a == b {
            return b;
        }
        if b == TRUE {
            return a;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&v) = self.and_cache.get(&key) {
            return v;
        }
        let v = self.fresh();
        self.clauses.push(vec![-v, a]);
        self.clauses.push(vec![-v, b]);
        self.clauses.push(vec![v, -a, -b]);
        self.and_cache.insert(key, v);
        v
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        -self.and(-a, -b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        if a == FALSE {
            return b;
        }
        if b == FALSE {
            return a;
        }
        if a == TRUE {
            return -b;
        }
        if b == TRUE {
            return -a;
        }
        if a == b {
            return FALSE;
        }
        if a == -b {
            return TRUE;
        }
        // Normalise to positive operands; each negation flips the output.
        let flip = (a < 0) != (b < 0);
        let (x, y) = (a.abs(), b.abs());
        let key = if x < y { (x, y) } else { (y, x) };
        let v = match self.xor_cache.get(&key) {
            Some(&v) => v,
            None => {
                let v = self.fresh();
                let (x, y) = key;
                self.clauses.push(vec![-v, x, y]);
                self.clauses.push(vec![-v, -x, -y]);
                self.clauses.push(vec![v, -x, y]);
                self.clauses.push(vec![v, x, -y]);
                self.xor_cache.insert(key, v);
                v
            }
        };
        if flip {
            -v
        } else {
            v
        }
    }

    pub fn ite(&mut self, c: Lit, t: Lit, e: Lit) -> Lit {
        if c == TRUE || t == e {
            return t;
        }
        if c == FALSE {
            return e;
        }
        if t == TRUE && e == FALSE {
            return c;
        }
        if t == FALSE && e == TRUE {
            return -c;
        }
        if t == TRUE {
            return self.or(c, e);
        }
        if e == FALSE {
            return self.and(c, t);
        }
        if t == FALSE {
            return self.and(-c, e);
        }
        if e == TRUE {
            return self.or(-c, t);
        }
        let (c, t, e) = if c < 0 { (-c, e, t) } else { (c, t, e) };
        if let Some(&v) = self.ite_cache.get(&(c, t, e)) {
            return v;
        }
        let v = self.fresh();
        self.clauses.push(vec![-c, -t, v]);
        self.clauses.push(vec![-c, t, -v]);
        self.clauses.push(vec![c, -e, v]);
        self.clauses.push(vec![c, e, -v]);
        self.clauses.push(vec![-t, -e, v]);
        self.clauses.push(vec![t, e, -v]);
        self.ite_cache.insert((c, t, e), v);
        v
    }

    pub fn and_all(&mut self, lits: &[Lit]) -> Lit {
        lits.iter().fold(TRUE, |acc, &l| self.and(acc, l))
    }

    pub fn or_all(&mut self, lits: &[Lit]) -> Lit {
        lits.iter().fold(FALSE, |acc, &l| self.or(acc, l))
    }

    // ---- word circuits ----

    fn full_add(&mut self, a: Lit, b: Lit, c: Lit) -> (Lit, Lit) {
        let ab = self.xor(a, b);
        let sum = self.xor(ab, c);
        let g = self.and(a, b);
        let p = self.and(ab, c);
        (sum, self.or(g, p))
    }

    /// `a + b + cin`, truncated to the width of `a`.
    pub fn add(&mut self, a: &[Lit], b: &[Lit], cin: Lit) -> Word {
        let mut carry = cin;
        let mut out = Vec::with_capacity(a.len());
        for i in 0..a.len() {
            let (s, c) = self.full_add(a[i], b[i], carry);
            out.push(s);
            carry = c;
        }
        out
    }

    pub fn not_word(a: &[Lit]) -> Word {
        a.iter().map(|&l| -l).collect()
    }

    pub fn neg(&mut self, a: &[Lit]) -> Word {
        let zero = vec![FALSE; a.len()];
        self.add(&Self::not_word(a), &zero, TRUE)
    }

    pub fn sub(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        self.add(a, &Self::not_word(b), TRUE)
    }

    pub fn mul(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        let w = a.len();
        let mut acc = vec![FALSE; w];
        for i in 0..w {
            if b[i] == FALSE {
                continue;
            }
            // Row i contributes (a << i) & b[i], only in bits >= i.
            let mut row = vec![FALSE; w - i];
            for j in 0..w - i {
                row[j] = self.and(a[j], b[i]);
            }
            let high = self.add(&acc[i..], &row, FALSE);
            acc[i..].copy_from_slice(&high);
        }
        acc
    }

    pub fn bitwise(&mut self, a: &[Lit], b: &[Lit], f: fn(&mut Self, Lit, Lit) -> Lit) -> Word {
        a.iter().zip(b).map(|(&x, &y)| f(self, x, y)).collect()
    }

    pub fn ite_word(&mut self, c: Lit, t: &[Lit], e: &[Lit]) -> Word {
        t.iter().zip(e).map(|(&x, &y)| self.ite(c, x, y)).collect()
    }

    pub fn eq(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let diffs: Vec<Lit> = a.iter().zip(b).map(|(&x, &y)| self.xor(x, y)).collect();
        -self.or_all(&diffs)
    }

    pub fn ult(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let mut lt = FALSE;
        for i in 0..a.len() {
            let same = -self.xor(a[i], b[i]);
            let here = self.and(-a[i], b[i]);
            lt = self.ite(same, lt, here);
        }
        lt
    }

    pub fn slt(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let n = a.len();
        let mut a2 = a.to_vec();
        let mut b2 = b.to_vec();
        a2[n - 1] = -a2[n - 1];
        b2[n - 1] = -b2[n - 1];
        self.ult(&a2, &b2)
    }

    /// Unsigned restoring division; returns (quotient, remainder) with the
    /// raw circuit behaviour for a zero divisor (callers fix that case).
    fn udivrem_raw(&mut self, a: &[Lit], b: &[Lit]) -> (Word, Word) {
        let w = a.len();
        let mut rem: Word = vec![FALSE; w + 1];
        let mut bx = b.to_vec();
        bx.push(FALSE);
        let mut q = vec![FALSE; w];
        for i in (0..w).rev() {
            // rem = (rem << 1) | a[i]
            let mut shifted = vec![a[i]];
            shifted.extend_from_slice(&rem[..w]);
            let ge = -self.ult(&shifted, &bx);
            let diff = self.sub(&shifted, &bx);
            rem = self.ite_word(ge, &diff, &shifted);
            q[i] = ge;
        }
        rem.truncate(w);
        (q, rem)
    }

    pub fn udiv(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        let (q, _) = self.udivrem_raw(a, b);
        let zero = vec![FALSE; a.len()];
        let bz = self.eq(b, &zero);
        self.ite_word(bz, &zero, &q)
    }

    pub fn urem(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        let (_, r) = self.udivrem_raw(a, b);
        let zero = vec![FALSE; a.len()];
        let bz = self.eq(b, &zero);
        self.ite_word(bz, &zero, &r)
    }

    fn abs(&mut self, a: &[Lit]) -> Word {
        let sign = a[a.len() - 1];
        let n = self.neg(a);
        self.ite_word(sign, &n, a)
    }

    pub fn sdiv(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        let (sa, sb) = (a[a.len() - 1], b[b.len() - 1]);
        let ua = self.abs(a);
        let ub = self.abs(b);
        let q = self.udiv(&ua, &ub);
        let nq = self.neg(&q);
        let flip = self.xor(sa, sb);
        self.ite_word(flip, &nq, &q)
    }

    pub fn srem(&mut self, a: &[Lit], b: &[Lit]) -> Word {
        let sa = a[a.len() - 1];
        let ua = self.abs(a);
        let ub = self.abs(b);
        let r = self.urem(&ua, &ub);
        let nr = self.neg(&r);
        self.ite_word(sa, &nr, &r)
    }

    /// Barrel shifter; the amount is taken modulo the (power-of-two) width.
    pub fn shift(&mut self, a: &[Lit], amt: &[Lit], kind: ShiftKind) -> Word {
        let w = a.len();
        assert!(w.is_power_of_two(), "shift width must be a power of two");
        let stages = w.trailing_zeros() as usize;
        let fill = match kind {
            ShiftKind::Ashr => a[w - 1],
            _ => FALSE,
        };
        let mut cur = a.to_vec();
        for (s, &bit) in amt.iter().enumerate().take(stages) {
            let d = 1usize << s;
            let shifted: Word = (0..w)
                .map(|i| match kind {
                    ShiftKind::Shl => {
                        if i >= d {
                            cur[i - d]
                        } else {
                            FALSE
                        }
                    }
                    _ => {
                        if i + d < w {
                            cur[i + d]
                        } else {
                            fill
                        }
                    }
                })
                .collect();
            cur = self.ite_word(bit, &shifted, &cur);
        }
        cur
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    Shl,
    Lshr,
    Ashr,
}
