// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::cmp::{max, min};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Lattice;
use crate::concrete::{MAX_SHIFT, MUTEZ_MAX};
use crate::syntax::IntKind;

/// Extended integer. The derived order puts `NegInf` first and `PosInf` last.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    NegInf,
    Finite(BigInt),
    PosInf,
}

impl Bound {
    pub fn int(n: i64) -> Bound {
        Bound::Finite(BigInt::from(n))
    }

    pub fn finite(&self) -> Option<&BigInt> {
        match self {
            Bound::Finite(n) => Some(n),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Bound::Finite(n) if n.is_zero())
    }

    fn sign(&self) -> i8 {
        match self {
            Bound::NegInf => -1,
            Bound::PosInf => 1,
            Bound::Finite(n) if n.is_negative() => -1,
            Bound::Finite(n) if n.is_positive() => 1,
            _ => 0,
        }
    }

    pub fn neg(&self) -> Bound {
        match self {
            Bound::NegInf => Bound::PosInf,
            Bound::PosInf => Bound::NegInf,
            Bound::Finite(n) => Bound::Finite(-n),
        }
    }

    /// Sum; an infinite operand wins. Callers never add opposite infinities.
    pub fn add(&self, o: &Bound) -> Bound {
        match (self, o) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::Finite(a + b),
            (Bound::Finite(_), inf) | (inf, _) => inf.clone(),
        }
    }

    pub fn sub(&self, o: &Bound) -> Bound {
        self.add(&o.neg())
    }

    /// Product with `0 * ∞ = 0`.
    pub fn mul(&self, o: &Bound) -> Bound {
        match (self, o) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::Finite(a * b),
            _ if self.is_zero() || o.is_zero() => Bound::int(0),
            _ if self.sign() * o.sign() > 0 => Bound::PosInf,
            _ => Bound::NegInf,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => write!(f, "-∞"),
            Bound::PosInf => write!(f, "+∞"),
            Bound::Finite(n) => write!(f, "{n}"),
        }
    }
}

/// Interval of integers, possibly unbounded on either side.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Interval {
    Bottom,
    Range { lo: Bound, hi: Bound },
}

/// Runtime errors an arithmetic instruction may raise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ArithAlarms {
    pub mutez_overflow: bool,
    pub shift_overflow: bool,
}

impl ArithAlarms {
    pub fn any(&self) -> bool {
        self.mutez_overflow || self.shift_overflow
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Ediv,
    Lsl,
    Lsr,
    And,
    Or,
    Xor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rel {
    pub fn negate(self) -> Rel {
        match self {
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Lt => Rel::Ge,
            Rel::Ge => Rel::Lt,
            Rel::Gt => Rel::Le,
            Rel::Le => Rel::Gt,
        }
    }

    /// The relation with its operands swapped.
    pub fn flip(self) -> Rel {
        match self {
            Rel::Lt => Rel::Gt,
            Rel::Gt => Rel::Lt,
            Rel::Le => Rel::Ge,
            Rel::Ge => Rel::Le,
            r => r,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Rel::Eq => ord == Equal,
            Rel::Ne => ord != Equal,
            Rel::Lt => ord == Less,
            Rel::Le => ord != Greater,
            Rel::Gt => ord == Greater,
            Rel::Ge => ord != Less,
        }
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rel::Eq => "=",
            Rel::Ne => "≠",
            Rel::Lt => "<",
            Rel::Le => "≤",
            Rel::Gt => ">",
            Rel::Ge => "≥",
        };
        f.write_str(s)
    }
}

pub fn mutez_max() -> BigInt {
    BigInt::from(MUTEZ_MAX)
}

impl Interval {
    pub fn new(lo: Bound, hi: Bound) -> Interval {
        if lo > hi || lo == Bound::PosInf || hi == Bound::NegInf {
            Interval::Bottom
        } else {
            Interval::Range { lo, hi }
        }
    }

    pub fn top() -> Interval {
        Interval::new(Bound::NegInf, Bound::PosInf)
    }

    pub fn constant(n: BigInt) -> Interval {
        Interval::new(Bound::Finite(n.clone()), Bound::Finite(n))
    }

    pub fn int(lo: i64, hi: i64) -> Interval {
        Interval::new(Bound::int(lo), Bound::int(hi))
    }

    pub fn at_least(n: i64) -> Interval {
        Interval::new(Bound::int(n), Bound::PosInf)
    }

    pub fn at_most(n: i64) -> Interval {
        Interval::new(Bound::NegInf, Bound::int(n))
    }

    /// Values a cell of the given kind can hold.
    pub fn range(kind: IntKind) -> Interval {
        match kind {
            IntKind::Int | IntKind::Timestamp => Interval::top(),
            IntKind::Nat => Interval::at_least(0),
            IntKind::Mutez => Interval::new(Bound::int(0), Bound::Finite(mutez_max())),
        }
    }

    /// `{0, 1}`, the range of tag and flag cells.
    pub fn flag() -> Interval {
        Interval::int(0, 1)
    }

    pub fn lo(&self) -> Option<&Bound> {
        match self {
            Interval::Range { lo, .. } => Some(lo),
            Interval::Bottom => None,
        }
    }

    pub fn hi(&self) -> Option<&Bound> {
        match self {
            Interval::Range { hi, .. } => Some(hi),
            Interval::Bottom => None,
        }
    }

    pub fn contains(&self, n: &BigInt) -> bool {
        match self {
            Interval::Bottom => false,
            Interval::Range { lo, hi } => {
                let b = Bound::Finite(n.clone());
                *lo <= b && b <= *hi
            }
        }
    }

    pub fn contains_i64(&self, n: i64) -> bool {
        self.contains(&BigInt::from(n))
    }

    pub fn singleton(&self) -> Option<&BigInt> {
        match self {
            Interval::Range {
                lo: Bound::Finite(a),
                hi: Bound::Finite(b),
            } if a == b => Some(a),
            _ => None,
        }
    }

    pub fn is_top(&self) -> bool {
        *self == Interval::top()
    }

    /// Lower bound is at least `n`.
    pub fn ge(&self, n: i64) -> bool {
        match self {
            Interval::Bottom => true,
            Interval::Range { lo, .. } => *lo >= Bound::int(n),
        }
    }

    /// Upper bound is at most `n`.
    pub fn le(&self, n: i64) -> bool {
        match self {
            Interval::Bottom => true,
            Interval::Range { hi, .. } => *hi <= Bound::int(n),
        }
    }

    pub fn meet_kind(&self, kind: IntKind) -> Interval {
        self.meet(&Interval::range(kind))
    }

    fn map2(
        &self,
        o: &Interval,
        f: impl Fn(&Bound, &Bound, &Bound, &Bound) -> Interval,
    ) -> Interval {
        match (self, o) {
            (Interval::Range { lo: a, hi: b }, Interval::Range { lo: c, hi: d }) => f(a, b, c, d),
            _ => Interval::Bottom,
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        self.map2(o, |a, b, c, d| Interval::new(a.add(c), b.add(d)))
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        self.map2(o, |a, b, c, d| Interval::new(a.sub(d), b.sub(c)))
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        self.map2(o, |a, b, c, d| {
            let ps = [a.mul(c), a.mul(d), b.mul(c), b.mul(d)];
            let lo = ps.iter().min().unwrap().clone();
            let hi = ps.iter().max().unwrap().clone();
            Interval::new(lo, hi)
        })
    }

    pub fn neg(&self) -> Interval {
        match self {
            Interval::Bottom => Interval::Bottom,
            Interval::Range { lo, hi } => Interval::new(hi.neg(), lo.neg()),
        }
    }

    pub fn abs(&self) -> Interval {
        match self {
            Interval::Bottom => Interval::Bottom,
            Interval::Range { lo, hi } => {
                let z = Bound::int(0);
                if *lo >= z {
                    self.clone()
                } else if *hi <= z {
                    self.neg()
                } else {
                    Interval::new(z, max(lo.neg(), hi.clone()))
                }
            }
        }
    }

    /// Bitwise complement on integers, `-x - 1`.
    pub fn not(&self) -> Interval {
        self.neg().sub(&Interval::int(1, 1))
    }

    /// Euclidean quotient and remainder over the non-zero part of the
    /// divisor. `None` when the divisor is exactly zero.
    pub fn ediv(&self, d: &Interval) -> Option<(Interval, Interval)> {
        let (Interval::Range { lo: a, hi: b }, Interval::Range { .. }) = (self, d) else {
            return None;
        };
        let pos = d.meet(&Interval::at_least(1));
        let neg = d.meet(&Interval::at_most(-1));
        if pos == Interval::Bottom && neg == Interval::Bottom {
            return None;
        }
        // a = q*b + r, 0 <= r < |b|, so q = floor(a/b) for b > 0 and
        // q = -floor(a/|b|) for b < 0.
        let mut quot = Interval::Bottom;
        let mut maxabs = Bound::int(0);
        for part in [&pos, &neg] {
            let Interval::Range { lo: c, hi: dd } = part else {
                continue;
            };
            let (c, dd) = if c.sign() < 0 {
                (dd.neg(), c.neg())
            } else {
                (c.clone(), dd.clone())
            };
            maxabs = max(maxabs, dd.clone());
            let q = floor_div_range(a, b, &c, &dd);
            quot = quot.join(&if part == &neg { q.neg() } else { q });
        }
        let lim = maxabs.sub(&Bound::int(1));
        let rem_hi = if *a >= Bound::int(0) {
            min(lim, b.clone())
        } else {
            lim
        };
        Some((quot, Interval::new(Bound::int(0), rem_hi)))
    }

    /// Can the interval hold a value different from zero / equal to zero.
    pub fn may_be_zero(&self) -> bool {
        self.contains_i64(0)
    }

    pub fn may_be_nonzero(&self) -> bool {
        match self {
            Interval::Bottom => false,
            _ => self.singleton().is_none_or(|v| !v.is_zero()),
        }
    }
}

/// floor(x / y) over x ∈ [a, b], y ∈ [c, d] with 1 <= c <= d.
fn floor_div_range(a: &Bound, b: &Bound, c: &Bound, d: &Bound) -> Interval {
    let fdiv = |x: &Bound, y: &Bound| -> Bound {
        match (x, y) {
            (Bound::Finite(x), Bound::Finite(y)) => Bound::Finite(x.div_floor(y)),
            (Bound::Finite(_), Bound::PosInf) => Bound::int(if x.sign() < 0 { -1 } else { 0 }),
            (inf, _) => inf.clone(),
        }
    };
    // floor(x/y) is monotone in x; in y it decreases for x >= 0 and
    // increases for x < 0.
    let lo = min(fdiv(a, c), fdiv(a, d));
    let hi = max(fdiv(b, c), fdiv(b, d));
    Interval::new(lo, hi)
}

impl Lattice for Interval {
    fn bottom() -> Self {
        Interval::Bottom
    }

    fn is_bottom(&self) -> bool {
        *self == Interval::Bottom
    }

    fn leq(&self, o: &Self) -> bool {
        match (self, o) {
            (Interval::Bottom, _) => true,
            (_, Interval::Bottom) => false,
            (Interval::Range { lo: a, hi: b }, Interval::Range { lo: c, hi: d }) => {
                c <= a && b <= d
            }
        }
    }

    fn join(&self, o: &Self) -> Self {
        match (self, o) {
            (Interval::Bottom, x) | (x, Interval::Bottom) => x.clone(),
            (Interval::Range { lo: a, hi: b }, Interval::Range { lo: c, hi: d }) => {
                Interval::new(min(a, c).clone(), max(b, d).clone())
            }
        }
    }

    fn meet(&self, o: &Self) -> Self {
        self.map2(o, |a, b, c, d| {
            Interval::new(max(a, c).clone(), min(b, d).clone())
        })
    }

    /// Unstable bounds jump to infinity.
    fn widen(&self, o: &Self) -> Self {
        match (self, o) {
            (Interval::Bottom, x) => x.clone(),
            (x, Interval::Bottom) => x.clone(),
            (Interval::Range { lo: a, hi: b }, Interval::Range { lo: c, hi: d }) => Interval::new(
                if c < a { Bound::NegInf } else { a.clone() },
                if d > b { Bound::PosInf } else { b.clone() },
            ),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interval::Bottom => write!(f, "⊥"),
            Interval::Range { lo, hi } => {
                let open = if *lo == Bound::NegInf { '(' } else { '[' };
                let close = if *hi == Bound::PosInf { ')' } else { ']' };
                write!(f, "{open}{lo}, {hi}{close}")
            }
        }
    }
}

/// Widening followed by the kind's range.
pub fn widen_itv(old: &Interval, new: &Interval, kind: IntKind) -> Interval {
    old.widen(new).meet_kind(kind)
}

/// Abstract arithmetic instruction. `l` is the top operand. The result
/// is met with the range of `kind`, the result kind; EDIV yields the
/// quotient only (see [`Interval::ediv`]).
pub fn itv_binop(op: BinOp, kind: IntKind, l: &Interval, r: &Interval) -> (Interval, ArithAlarms) {
    let mut alarms = ArithAlarms::default();
    if l.is_bottom() || r.is_bottom() {
        return (Interval::Bottom, alarms);
    }
    let raw = match op {
        BinOp::Add => l.add(r),
        BinOp::Sub => l.sub(r),
        BinOp::Mul => l.mul(r),
        BinOp::Ediv => match l.ediv(r) {
            Some((q, _)) => q,
            None => Interval::Bottom,
        },
        BinOp::Lsl | BinOp::Lsr => {
            if !r.le(MAX_SHIFT as i64) {
                alarms.shift_overflow = true;
            }
            let s = r.meet(&Interval::int(0, MAX_SHIFT as i64));
            shift(op, l, &s)
        }
        BinOp::And | BinOp::Or | BinOp::Xor => bitwise(op, l, r),
    };
    if kind == IntKind::Mutez
        && matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul)
        && !raw.leq(&Interval::range(kind))
    {
        alarms.mutez_overflow = true;
    }
    (raw.meet_kind(kind), alarms)
}

fn shift(op: BinOp, l: &Interval, s: &Interval) -> Interval {
    let (
        Interval::Range { lo: a, hi: b },
        Interval::Range {
            lo: Bound::Finite(c),
            hi: Bound::Finite(d),
        },
    ) = (l, s)
    else {
        return Interval::Bottom;
    };
    let (c, d) = (c.to_u32().unwrap_or(0), d.to_u32().unwrap_or(MAX_SHIFT));
    let sh = |x: &Bound, k: u32| match x {
        Bound::Finite(n) if op == BinOp::Lsl => Bound::Finite(n << k),
        Bound::Finite(n) => Bound::Finite(n >> k),
        inf => inf.clone(),
    };
    if op == BinOp::Lsl {
        Interval::new(sh(a, c), sh(b, d))
    } else {
        Interval::new(sh(a, d), sh(b, c))
    }
}

/// Smallest `2^k - 1` that is at least `b`.
fn all_ones_above(b: &Bound) -> Bound {
    match b {
        Bound::Finite(n) if !n.is_negative() => Bound::Finite((BigInt::one() << n.bits()) - 1),
        _ => Bound::PosInf,
    }
}

fn bitwise(op: BinOp, l: &Interval, r: &Interval) -> Interval {
    let (Interval::Range { lo: a, hi: b }, Interval::Range { lo: c, hi: d }) = (l, r) else {
        return Interval::Bottom;
    };
    let z = Bound::int(0);
    match op {
        // AND int nat: the nat operand bounds the result.
        BinOp::And if *a < z => Interval::new(z, d.clone()),
        BinOp::And => Interval::new(z, min(b, d).clone()),
        BinOp::Or => Interval::new(max(a, c).clone(), all_ones_above(max(b, d))),
        _ => Interval::new(z, all_ones_above(max(b, d))),
    }
}

/// Possible outcomes of `COMPARE`, as a sub-interval of [-1, 1].
pub fn itv_compare(l: &Interval, r: &Interval) -> Interval {
    let (Interval::Range { lo: a, hi: b }, Interval::Range { lo: c, hi: d }) = (l, r) else {
        return Interval::Bottom;
    };
    let less = a < d;
    let greater = b > c;
    let equal = !l.meet(r).is_bottom();
    let lo = if less {
        -1
    } else if equal {
        0
    } else {
        1
    };
    let hi = if greater {
        1
    } else if equal {
        0
    } else {
        -1
    };
    Interval::int(lo, hi)
}

/// Refines `x` and `y` under `x rel y`. Either side becomes bottom
/// (both do) when the relation cannot hold.
pub fn assume_cmp(rel: Rel, x: &Interval, y: &Interval) -> (Interval, Interval) {
    let (Interval::Range { lo: a, .. }, Interval::Range { hi: d, .. }) = (x, y) else {
        return (Interval::Bottom, Interval::Bottom);
    };
    let one = Bound::int(1);
    let (nx, ny) = match rel {
        Rel::Eq => {
            let m = x.meet(y);
            (m.clone(), m)
        }
        Rel::Ne => {
            let cut = |v: &Interval, k: &Interval| -> Interval {
                match (v, k.singleton()) {
                    (Interval::Range { lo, hi }, Some(n)) => {
                        let n = Bound::Finite(n.clone());
                        if *lo == n && *hi == n {
                            Interval::Bottom
                        } else if *lo == n {
                            Interval::new(lo.add(&one), hi.clone())
                        } else if *hi == n {
                            Interval::new(lo.clone(), hi.sub(&one))
                        } else {
                            v.clone()
                        }
                    }
                    _ => v.clone(),
                }
            };
            (cut(x, y), cut(y, x))
        }
        Rel::Lt => (
            x.meet(&Interval::new(Bound::NegInf, d.sub(&one))),
            y.meet(&Interval::new(a.add(&one), Bound::PosInf)),
        ),
        Rel::Le => (
            x.meet(&Interval::new(Bound::NegInf, d.clone())),
            y.meet(&Interval::new(a.clone(), Bound::PosInf)),
        ),
        Rel::Gt => {
            let (ny, nx) = assume_cmp(Rel::Lt, y, x);
            (nx, ny)
        }
        Rel::Ge => {
            let (ny, nx) = assume_cmp(Rel::Le, y, x);
            (nx, ny)
        }
    };
    if nx.is_bottom() || ny.is_bottom() {
        (Interval::Bottom, Interval::Bottom)
    } else {
        (nx, ny)
    }
}

/// Refines the result of `COMPARE` (an interval in [-1, 1]) under
/// `cmp rel 0`.
pub fn assume_sign(rel: Rel, v: &Interval) -> Interval {
    assume_cmp(rel, v, &Interval::int(0, 0)).0
}
