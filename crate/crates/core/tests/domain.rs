// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Interval transfer functions against exact big-integer arithmetic.

mod common;

use michelstat::domain::{
    assume_cmp, itv_binop, itv_compare, mutez_max, widen_itv, BinOp, Bound, Interval, Lattice, Rel,
};
use michelstat::syntax::IntKind;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;
use proptest::prelude::*;

use common::laws::samples;

/// Outcome of a concrete operation.
#[derive(Debug, PartialEq)]
enum Concrete {
    Value(BigInt),
    /// EDIV by zero: no quotient, and no failure either.
    NoResult,
    MutezOverflow,
    ShiftOverflow,
}

/// Exact semantics, with `l` the top operand.
fn concrete(op: BinOp, kind: IntKind, l: &BigInt, r: &BigInt) -> Concrete {
    let v = match op {
        BinOp::Add => l + r,
        BinOp::Sub => l - r,
        BinOp::Mul => l * r,
        BinOp::Ediv => {
            if *r == BigInt::from(0) {
                return Concrete::NoResult;
            }
            // Euclidean: the remainder is in [0, |r|)
            let m = l.mod_floor(&r.abs());
            (l - m) / r
        }
        BinOp::Lsl | BinOp::Lsr if *r > BigInt::from(256) => return Concrete::ShiftOverflow,
        BinOp::Lsl => l << usize::try_from(r).unwrap(),
        BinOp::Lsr => l >> usize::try_from(r).unwrap(),
        BinOp::And => l & r,
        BinOp::Or => l | r,
        BinOp::Xor => l ^ r,
    };
    if kind == IntKind::Mutez && (v < BigInt::from(0) || v > mutez_max()) {
        return Concrete::MutezOverflow;
    }
    Concrete::Value(v)
}

fn itv(lo: i64, hi: i64) -> Interval {
    Interval::int(lo, hi)
}

fn big(lo: &BigInt, hi: &BigInt) -> Interval {
    Interval::new(Bound::Finite(lo.clone()), Bound::Finite(hi.clone()))
}

fn any_int() -> impl Strategy<Value = Interval> {
    common::laws::interval().prop_filter("nonempty", |i| !i.is_bottom())
}

fn nat(max: i64) -> impl Strategy<Value = Interval> {
    prop_oneof![
        4 => (0..max, 0..max).prop_map(|(a, b)| itv(a.min(b), a.max(b))),
        1 => (0..max).prop_map(|a| Interval::new(Bound::int(a), Bound::PosInf)),
    ]
}

/// Mutez intervals, some of them close to the top of the range.
fn mutez() -> impl Strategy<Value = Interval> {
    let base = prop_oneof![
        Just(BigInt::from(0)),
        Just(mutez_max() / 2),
        Just(mutez_max() - 300)
    ];
    (base, 0..300i64, 0..300i64).prop_map(|(b, x, y)| {
        let (lo, hi) = (&b + x.min(y), &b + x.max(y));
        big(&lo, &hi.min(mutez_max()))
    })
}

/// Operation, result kind and operand intervals within their types.
fn case() -> impl Strategy<Value = (BinOp, IntKind, Interval, Interval)> {
    use BinOp::*;
    use IntKind::*;
    prop_oneof![
        (any_int(), any_int()).prop_map(|(l, r)| (Add, Int, l, r)),
        (nat(50), nat(50)).prop_map(|(l, r)| (Add, Nat, l, r)),
        (mutez(), mutez()).prop_map(|(l, r)| (Add, Mutez, l, r)),
        (any_int(), any_int()).prop_map(|(l, r)| (Sub, Int, l, r)),
        (mutez(), mutez()).prop_map(|(l, r)| (Sub, Mutez, l, r)),
        (any_int(), any_int()).prop_map(|(l, r)| (Mul, Int, l, r)),
        (mutez(), nat(5)).prop_map(|(l, r)| (Mul, Mutez, l, r)),
        (any_int(), any_int()).prop_map(|(l, r)| (Ediv, Int, l, r)),
        (nat(1000), nat(40)).prop_map(|(l, r)| (Ediv, Nat, l, r)),
        (nat(1000), nat(300)).prop_map(|(l, r)| (Lsl, Nat, l, r)),
        (nat(1000), nat(300)).prop_map(|(l, r)| (Lsr, Nat, l, r)),
        (any_int(), nat(1000)).prop_map(|(l, r)| (And, Nat, l, r)),
        (nat(1000), nat(1000)).prop_map(|(l, r)| (Or, Nat, l, r)),
        (nat(1000), nat(1000)).prop_map(|(l, r)| (Xor, Nat, l, r)),
    ]
}

fn corners(i: &Interval) -> Vec<BigInt> {
    match i {
        Interval::Range {
            lo: Bound::Finite(a),
            hi: Bound::Finite(b),
        } => vec![a.clone(), b.clone()],
        _ => vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn binop_covers_concrete_results((op, kind, l, r) in case()) {
        let (res, alarms) = itv_binop(op, kind, &l, &r);
        for v in samples(&l) {
            for w in samples(&r) {
                match concrete(op, kind, &v, &w) {
                    Concrete::Value(x) => prop_assert!(res.contains(&x), "{op:?} {v} {w} = {x} not in {res}"),
                    Concrete::NoResult => {}
                    Concrete::MutezOverflow => prop_assert!(alarms.mutez_overflow, "{op:?} {v} {w} overflows"),
                    Concrete::ShiftOverflow => prop_assert!(alarms.shift_overflow, "{op:?} {v} {w} shift"),
                }
            }
        }
    }

    #[test]
    fn overflow_alarms_are_exact((op, kind, l, r) in case()) {
        // sums, differences and products reach their extremes at the
        // corners, and the shift limit is decided by the largest amount
        let (_, alarms) = itv_binop(op, kind, &l, &r);
        let witness = |want: &Concrete| {
            corners(&l).iter().any(|v| corners(&r).iter().any(|w| concrete(op, kind, v, w) == *want))
        };
        if kind == IntKind::Mutez && corners(&l).len() == 2 && corners(&r).len() == 2 {
            prop_assert_eq!(alarms.mutez_overflow, witness(&Concrete::MutezOverflow));
        }
        if matches!(op, BinOp::Lsl | BinOp::Lsr) {
            prop_assert_eq!(alarms.shift_overflow, !r.le(256));
        }
    }

    #[test]
    fn compare_covers_outcomes(l in any_int(), r in any_int()) {
        let c = itv_compare(&l, &r);
        for v in samples(&l) {
            for w in samples(&r) {
                let o = match v.cmp(&w) {
                    std::cmp::Ordering::Less => -1,
                    std::cmp::Ordering::Equal => 0,
                    std::cmp::Ordering::Greater => 1,
                };
                prop_assert!(c.contains_i64(o), "compare {v} {w} = {o} not in {c}");
            }
        }
    }

    #[test]
    fn assume_keeps_satisfying_pairs(
        rel in prop_oneof![Just(Rel::Eq), Just(Rel::Ne), Just(Rel::Lt), Just(Rel::Le), Just(Rel::Gt), Just(Rel::Ge)],
        x in any_int(),
        y in any_int(),
    ) {
        let (nx, ny) = assume_cmp(rel, &x, &y);
        prop_assert!(nx.leq(&x) && ny.leq(&y));
        for v in samples(&x) {
            for w in samples(&y) {
                if rel.holds(v.cmp(&w)) {
                    prop_assert!(nx.contains(&v) && ny.contains(&w), "{v} {rel} {w} lost: {nx} {ny}");
                }
            }
        }
    }

    #[test]
    fn widening_is_above_join(a in any_int(), b in any_int()) {
        for kind in [IntKind::Int, IntKind::Nat, IntKind::Mutez] {
            let w = widen_itv(&a, &b, kind);
            prop_assert!(a.join(&b).meet_kind(kind).leq(&w));
        }
    }
}

#[test]
fn mutez_add_near_the_top() {
    let m = mutez_max();
    let (r, a) = itv_binop(BinOp::Add, IntKind::Mutez, &big(&(&m - 1), &m), &itv(1, 1));
    assert_eq!(r, big(&m, &m));
    assert!(a.mutez_overflow && !a.shift_overflow);
}

#[test]
fn nat_add_has_no_alarm() {
    let (r, a) = itv_binop(BinOp::Add, IntKind::Nat, &itv(0, 5), &itv(0, 3));
    assert_eq!(r, itv(0, 8));
    assert!(!a.any());
}

#[test]
fn shift_by_257_always_fails() {
    let (r, a) = itv_binop(BinOp::Lsl, IntKind::Nat, &itv(1, 1), &itv(257, 257));
    assert_eq!(r, Interval::Bottom);
    assert!(a.shift_overflow);
}

#[test]
fn compare_examples() {
    assert_eq!(itv_compare(&itv(1, 1), &itv(2, 2)), itv(-1, -1));
    assert_eq!(itv_compare(&itv(0, 5), &itv(3, 3)), itv(-1, 1));
    assert_eq!(itv_compare(&itv(4, 4), &itv(4, 4)), itv(0, 0));
}

#[test]
fn assume_examples() {
    assert_eq!(assume_cmp(Rel::Ge, &itv(0, 10), &itv(7, 7)).0, itv(7, 10));
    assert_eq!(
        assume_cmp(Rel::Gt, &itv(0, 3), &itv(5, 5)).0,
        Interval::Bottom
    );
    assert_eq!(assume_cmp(Rel::Lt, &itv(0, 10), &itv(2, 4)).0, itv(0, 3));
}

#[test]
fn assume_lt_matches_enumeration() {
    // largest x with some y in [2, 4] above it
    let xs: Vec<i64> = (0..=10).filter(|x| (2..=4).any(|y| x < &y)).collect();
    let (nx, _) = assume_cmp(Rel::Lt, &itv(0, 10), &itv(2, 4));
    assert_eq!(nx, itv(*xs.first().unwrap(), *xs.last().unwrap()));
}

#[test]
fn widening_examples() {
    let up = Interval::new(Bound::int(0), Bound::PosInf);
    assert_eq!(widen_itv(&itv(0, 1), &itv(0, 2), IntKind::Int), up);
    assert_eq!(
        widen_itv(&itv(0, 1), &itv(0, 2), IntKind::Mutez),
        big(&BigInt::from(0), &mutez_max())
    );
    assert_eq!(widen_itv(&itv(0, 5), &itv(0, 5), IntKind::Int), itv(0, 5));
    assert_eq!(
        widen_itv(&itv(3, 5), &itv(1, 5), IntKind::Int),
        Interval::new(Bound::NegInf, Bound::int(5))
    );
    assert_eq!(widen_itv(&itv(3, 5), &itv(1, 5), IntKind::Nat), itv(0, 5));
}

#[test]
fn mutez_add_alarm_matches_enumeration() {
    // both concrete sums checked against the range bound
    let m = mutez_max();
    let sums = [&m - 1 + 1, &m + 1];
    let expected = sums.iter().any(|s| *s > m);
    let (_, a) = itv_binop(BinOp::Add, IntKind::Mutez, &big(&(&m - 1), &m), &itv(1, 1));
    assert_eq!(a.mutez_overflow, expected);
}
