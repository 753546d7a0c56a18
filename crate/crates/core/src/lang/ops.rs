//! Concrete operator semantics of LoopC on bit patterns.
//!
//! Values are carried as `u64` holding the two's-complement bit pattern of the
//! value, masked to the width of its type. `fx` is a signed 16.16 number in 32 bits.
//!
//! * integer arithmetic wraps modulo 2^width;
//! * division and remainder truncate toward zero; by zero they yield 0 and
//!   report [`OpFlag::DivByZero`];
//! * shift amounts are masked to `width - 1`; `>>` is arithmetic on signed types;
//! * `fx * fx` is `(a * b) >> 16` on the 64-bit product, `fx / fx` is
//!   `(a << 16) / b`, both truncated back to 32 bits.

use super::ast::{BinOp, Scalar, UnOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpFlag {
    None,
    DivByZero,
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Sign-extends the low `width` bits of `bits`.
pub fn sext(bits: u64, width: u32) -> i64 {
    if width >= 64 {
        return bits as i64;
    }
    let shift = 64 - width;
    ((bits << shift) as i64) >> shift
}

/// Mathematical value of a bit pattern under `ty`.
pub fn to_i64(bits: u64, ty: Scalar) -> i64 {
    if ty.is_signed() {
        sext(bits, ty.width())
    } else {
        (bits & mask(ty.width())) as i64
    }
}

/// Bit pattern of a mathematical value, wrapping into `ty`.
pub fn from_i64(v: i64, ty: Scalar) -> u64 {
    (v as u64) & mask(ty.width())
}

pub fn unary(op: UnOp, ty: Scalar, a: u64) -> u64 {
    let m = mask(ty.width());
    match op {
        UnOp::Neg => a.wrapping_neg() & m,
        UnOp::Not => (a == 0) as u64,
        UnOp::BitNot => !a & m,
    }
}

/// Applies a binary operator whose (left) operand type is `ty`. The right
/// operand has the same type, except for shifts where it may be any integer.
pub fn binary(op: BinOp, ty: Scalar, a: u64, b: u64) -> (u64, OpFlag) {
    let w = ty.width();
    let m = mask(w);
    let sa = to_i64(a, ty);
    let sb = to_i64(b, ty);
    let signed = ty.is_signed();
    let ok = |v: u64| (v & m, OpFlag::None);
    let cmp = |r: bool| (r as u64, OpFlag::None);
    match op {
        BinOp::Add => ok(a.wrapping_add(b)),
        BinOp::Sub => ok(a.wrapping_sub(b)),
        BinOp::Mul if ty == Scalar::Fx => ok(((sa * sb) >> 16) as u64),
        BinOp::Mul => ok(a.wrapping_mul(b)),
        BinOp::Div | BinOp::Rem if b & m == 0 => (0, OpFlag::DivByZero),
        BinOp::Div if ty == Scalar::Fx => ok(((sa << 16) / sb) as u64),
        BinOp::Div if signed => ok((sa / sb) as u64),
        BinOp::Div => ok((a & m) / (b & m)),
        BinOp::Rem if signed => ok((sa % sb) as u64),
        BinOp::Rem => ok((a & m) % (b & m)),
        BinOp::BitAnd => ok(a & b),
        BinOp::BitOr => ok(a | b),
        BinOp::BitXor => ok(a ^ b),
        BinOp::Shl => ok(a << (b & (w as u64 - 1))),
        BinOp::Shr if signed => ok((sa >> (b & (w as u64 - 1))) as u64),
        BinOp::Shr => ok((a & m) >> (b & (w as u64 - 1))),
        BinOp::Eq => cmp(a & m == b & m),
        BinOp::Ne => cmp(a & m != b & m),
        BinOp::Lt => cmp(if signed { sa < sb } else { a & m < b & m }),
        BinOp::Le => cmp(if signed { sa <= sb } else { a & m <= b & m }),
        BinOp::Gt => cmp(if signed { sa > sb } else { a & m > b & m }),
        BinOp::Ge => cmp(if signed { sa >= sb } else { a & m >= b & m }),
        BinOp::And => cmp(a != 0 && b != 0),
        BinOp::Or => cmp(a != 0 || b != 0),
    }
}

pub fn cast(from: Scalar, to: Scalar, v: u64) -> u64 {
    if from == to {
        return v;
    }
    match (from, to) {
        (_, Scalar::Bool) => (v & mask(from.width()) != 0) as u64,
        (Scalar::Fx, _) => from_i64(to_i64(v, Scalar::Fx) / 65536, to),
        (_, Scalar::Fx) => from_i64(to_i64(v, from).wrapping_shl(16), Scalar::Fx),
        _ => from_i64(to_i64(v, from), to),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraparound_and_division() {
        assert_eq!(binary(BinOp::Add, Scalar::U8, 200, 100).0, 44);
        assert_eq!(binary(BinOp::Sub, Scalar::U8, 0, 1).0, 255);
        assert_eq!(binary(BinOp::Div, Scalar::U8, 7, 0), (0, OpFlag::DivByZero));
        assert_eq!(binary(BinOp::Rem, Scalar::U8, 7, 0), (0, OpFlag::DivByZero));
        let m7 = from_i64(-7, Scalar::I8);
        assert_eq!(to_i64(binary(BinOp::Div, Scalar::I8, m7, 2).0, Scalar::I8), -3);
        assert_eq!(to_i64(binary(BinOp::Rem, Scalar::I8, m7, 2).0, Scalar::I8), -1);
        let min = from_i64(-128, Scalar::I8);
        let neg1 = from_i64(-1, Scalar::I8);
        assert_eq!(binary(BinOp::Div, Scalar::I8, min, neg1).0, min);
        assert_eq!(binary(BinOp::Rem, Scalar::I8, min, neg1).0, 0);
    }

    #[test]
    fn shifts_are_masked() {
        assert_eq!(binary(BinOp::Shl, Scalar::U8, 1, 9).0, 2);
        assert_eq!(binary(BinOp::Shr, Scalar::I8, 0x80, 1).0, 0xc0);
        assert_eq!(binary(BinOp::Shr, Scalar::U8, 0x80, 1).0, 0x40);
    }

    #[test]
    fn fixed_point() {
        let one_half = 32768u64;
        let three = 3u64 << 16;
        assert_eq!(binary(BinOp::Mul, Scalar::Fx, one_half, three).0, 98304);
        assert_eq!(binary(BinOp::Div, Scalar::Fx, three, 2 << 16).0, 98304);
        let neg = from_i64(-98304, Scalar::Fx);
        assert_eq!(to_i64(cast(Scalar::Fx, Scalar::I32, neg), Scalar::I32), -1);
        assert_eq!(cast(Scalar::U8, Scalar::Fx, 3), three);
        assert_eq!(cast(Scalar::I8, Scalar::U16, 0xff), 0xffff);
    }
}
