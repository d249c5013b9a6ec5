// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lattice laws over random elements of each value domain, run with a
//! deterministic proptest runner.

use std::collections::BTreeSet;
use std::fmt::Debug;

use michelstat::domain::{Bound, Consts, Interval, Lattice};
use michelstat::memory::CellVar;
use michelstat::symbolic::{AddrAbs, EqClasses, Expr, Fun, SenderRel, SymEnv};
use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

/// Length of the random ascending chains fed to widening.
pub const CHAIN: usize = 24;

pub struct LawOutcome {
    pub domain: &'static str,
    pub law: &'static str,
    pub cases: u32,
    pub result: Result<(), String>,
}

fn runner(cases: u32) -> TestRunner {
    let cfg = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn check<S: Strategy>(
    out: &mut Vec<LawOutcome>,
    domain: &'static str,
    law: &'static str,
    cases: u32,
    strat: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) where
    S::Value: Debug,
{
    let result = runner(cases).run(&strat, test).map_err(|e| e.to_string());
    out.push(LawOutcome {
        domain,
        law,
        cases,
        result,
    });
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(what()))
    }
}

/// Laws every `Lattice` implementation must satisfy. `height` bounds the
/// number of strict increases of a widening chain started at ⊥.
fn lattice_laws<L, S>(
    out: &mut Vec<LawOutcome>,
    domain: &'static str,
    cases: u32,
    elem: S,
    height: usize,
) where
    L: Lattice + Debug,
    S: Strategy<Value = L> + Clone,
{
    let pair = (elem.clone(), elem.clone());
    let triple = (elem.clone(), elem.clone(), elem.clone());
    check(
        out,
        domain,
        "join commutative",
        cases,
        pair.clone(),
        |(a, b)| ensure(a.join(&b) == b.join(&a), || format!("{a:?} ⊔ {b:?}")),
    );
    check(
        out,
        domain,
        "join associative",
        cases,
        triple.clone(),
        |(a, b, c)| {
            ensure(a.join(&b).join(&c) == a.join(&b.join(&c)), || {
                format!("{a:?} {b:?} {c:?}")
            })
        },
    );
    check(out, domain, "join idempotent", cases, elem.clone(), |a| {
        ensure(a.join(&a) == a, || format!("{a:?}"))
    });
    check(
        out,
        domain,
        "join is an upper bound",
        cases,
        pair.clone(),
        |(a, b)| {
            let j = a.join(&b);
            ensure(a.leq(&j) && b.leq(&j), || format!("{a:?} ⊔ {b:?} = {j:?}"))
        },
    );
    check(
        out,
        domain,
        "join is least",
        cases,
        triple.clone(),
        |(a, b, c)| {
            // a ⊔ c and b ⊔ c are upper bounds of c; the join of a and b
            // lies below any common upper bound
            let u = a.join(&c).join(&b.join(&c));
            ensure(a.join(&b).leq(&u), || format!("{a:?} {b:?} {c:?}"))
        },
    );
    check(
        out,
        domain,
        "meet commutative",
        cases,
        pair.clone(),
        |(a, b)| ensure(a.meet(&b) == b.meet(&a), || format!("{a:?} ⊓ {b:?}")),
    );
    check(
        out,
        domain,
        "meet associative",
        cases,
        triple.clone(),
        |(a, b, c)| {
            ensure(a.meet(&b).meet(&c) == a.meet(&b.meet(&c)), || {
                format!("{a:?} {b:?} {c:?}")
            })
        },
    );
    check(out, domain, "meet idempotent", cases, elem.clone(), |a| {
        ensure(a.meet(&a) == a, || format!("{a:?}"))
    });
    check(
        out,
        domain,
        "meet is a lower bound",
        cases,
        pair.clone(),
        |(a, b)| {
            let m = a.meet(&b);
            ensure(m.leq(&a) && m.leq(&b), || format!("{a:?} ⊓ {b:?} = {m:?}"))
        },
    );
    check(out, domain, "absorption", cases, pair.clone(), |(a, b)| {
        ensure(a.join(&a.meet(&b)) == a && a.meet(&a.join(&b)) == a, || {
            format!("{a:?} {b:?}")
        })
    });
    check(out, domain, "leq reflexive", cases, elem.clone(), |a| {
        ensure(a.leq(&a), || format!("{a:?}"))
    });
    check(
        out,
        domain,
        "leq antisymmetric",
        cases,
        pair.clone(),
        |(a, b)| {
            // pairs drawn independently are rarely ordered, so also test a
            // against a ⊓ b and a ⊔ b
            for (x, y) in [
                (a.clone(), b.clone()),
                (a.clone(), a.meet(&b)),
                (a.join(&b), a.clone()),
            ] {
                ensure(!(x.leq(&y) && y.leq(&x)) || x == y, || {
                    format!("{x:?} {y:?}")
                })?;
            }
            Ok(())
        },
    );
    check(
        out,
        domain,
        "leq transitive",
        cases,
        triple.clone(),
        |(a, b, c)| {
            let chain = [
                a.meet(&b).meet(&c),
                a.meet(&b),
                a.clone(),
                a.join(&c),
                a.join(&b).join(&c),
            ];
            for x in &chain {
                for y in &chain {
                    for z in &chain {
                        if x.leq(y) && y.leq(z) {
                            ensure(x.leq(z), || format!("{x:?} {y:?} {z:?}"))?;
                        }
                    }
                }
            }
            Ok(())
        },
    );
    check(
        out,
        domain,
        "leq agrees with join and meet",
        cases,
        pair.clone(),
        |(a, b)| {
            let l = a.leq(&b);
            ensure(l == (a.join(&b) == b) && l == (a.meet(&b) == a), || {
                format!("{a:?} {b:?}")
            })
        },
    );
    check(out, domain, "bottom is least", cases, elem.clone(), |a| {
        let bot = L::bottom();
        ensure(
            bot.leq(&a) && bot.join(&a) == a && bot.meet(&a).is_bottom(),
            || format!("{a:?}"),
        )
    });
    check(out, domain, "widen above join", cases, pair, |(a, b)| {
        ensure(a.join(&b).leq(&a.widen(&b)), || format!("{a:?} ▽ {b:?}"))
    });
    check(
        out,
        domain,
        "widening chains stabilize",
        cases,
        proptest::collection::vec(elem, CHAIN),
        move |ys| {
            let mut x = L::bottom();
            let mut changes = 0;
            for y in &ys {
                let next = x.widen(&x.join(y));
                if next != x {
                    changes += 1;
                }
                x = next;
            }
            ensure(changes <= height, || {
                format!("{changes} increases over {ys:?}")
            })
        },
    );
}

fn bound_value() -> impl Strategy<Value = i64> + Clone {
    prop_oneof![-20i64..20, Just(0), Just(1), -1_000_000i64..1_000_000]
}

/// Intervals with small or huge finite bounds, infinite bounds and ⊥.
pub fn interval() -> impl Strategy<Value = Interval> + Clone {
    let lo = prop_oneof![4 => bound_value().prop_map(Bound::int), 1 => Just(Bound::NegInf)];
    let hi = prop_oneof![4 => bound_value().prop_map(Bound::int), 1 => Just(Bound::PosInf)];
    prop_oneof![
        10 => (lo, hi).prop_map(|(a, b)| if a <= b { Interval::new(a, b) } else { Interval::new(b, a) }),
        1 => Just(Interval::Bottom),
    ]
}

const NAMES: [&str; 5] = ["tz1a", "tz1b", "tz1c", "tz1d", "KT1x"];

pub fn consts() -> impl Strategy<Value = Consts> + Clone {
    prop_oneof![
        6 => proptest::sample::subsequence(NAMES.to_vec(), 0..=NAMES.len())
            .prop_map(|v| Consts::of(v.into_iter().map(String::from))),
        1 => Just(Consts::Top),
    ]
}

pub fn addr() -> impl Strategy<Value = AddrAbs> + Clone {
    let rel = prop_oneof![
        Just(SenderRel::Bot),
        Just(SenderRel::IsSender),
        Just(SenderRel::NotSender),
        Just(SenderRel::Top)
    ];
    (consts(), rel).prop_map(|(c, r)| AddrAbs::new(c, r))
}

fn var(n: u32) -> CellVar {
    CellVar::Fresh(n)
}

/// Number of variables the relational domains range over.
pub const VARS: u32 = 6;

pub fn eqclasses() -> impl Strategy<Value = EqClasses> + Clone {
    prop_oneof![
        8 => proptest::collection::vec((0..VARS, 0..VARS), 0..6).prop_map(|merges| {
            let mut e = EqClasses::new();
            for (x, y) in merges {
                e.merge(var(x), var(y));
            }
            e
        }),
        1 => Just(EqClasses::bottom()),
    ]
}

fn expr() -> impl Strategy<Value = Expr> + Clone {
    let leaf = prop_oneof![
        (0..VARS).prop_map(|v| Expr::Var(var(v))),
        (-3i64..4).prop_map(Expr::int)
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::app(Fun::Add, vec![a, b])),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::app(Fun::Compare, vec![a, b])),
        ]
    })
}

/// Symbolic environments built by sequences of assignments, so that
/// they respect the no-self-reference invariant.
pub fn symenv() -> impl Strategy<Value = SymEnv> + Clone {
    proptest::collection::vec((0..VARS, expr()), 0..6).prop_map(|asg| {
        let mut s = SymEnv::new();
        for (v, e) in asg {
            s.assign(var(v), &e);
        }
        s
    })
}

fn symenv_laws(out: &mut Vec<LawOutcome>, cases: u32) {
    const D: &str = "SymExpr";
    // the information order: `a.leq(b)` when a has every binding of b
    check(
        out,
        D,
        "join commutative",
        cases,
        (symenv(), symenv()),
        |(a, b)| ensure(a.join(&b) == b.join(&a), || format!("{a:?} {b:?}")),
    );
    check(
        out,
        D,
        "join associative",
        cases,
        (symenv(), symenv(), symenv()),
        |(a, b, c)| {
            ensure(a.join(&b).join(&c) == a.join(&b.join(&c)), || {
                format!("{a:?} {b:?} {c:?}")
            })
        },
    );
    check(out, D, "join idempotent", cases, symenv(), |a| {
        ensure(a.join(&a) == a, || format!("{a:?}"))
    });
    check(
        out,
        D,
        "join is an upper bound",
        cases,
        (symenv(), symenv()),
        |(a, b)| {
            let j = a.join(&b);
            ensure(a.leq(&j) && b.leq(&j), || format!("{a:?} {b:?}"))
        },
    );
    check(
        out,
        D,
        "join is least",
        cases,
        (symenv(), symenv(), symenv()),
        |(a, b, c)| {
            let u = a.join(&c).join(&b.join(&c));
            ensure(a.join(&b).leq(&u), || format!("{a:?} {b:?} {c:?}"))
        },
    );
    check(
        out,
        D,
        "leq partial order",
        cases,
        (symenv(), symenv()),
        |(a, b)| {
            let j = a.join(&b);
            ensure(a.leq(&a), || format!("{a:?}"))?;
            ensure(!(a.leq(&b) && b.leq(&a)) || a == b, || {
                format!("{a:?} {b:?}")
            })?;
            ensure(
                !(a.leq(&j) && j.leq(&SymEnv::new())) || a.leq(&SymEnv::new()),
                || format!("{a:?}"),
            )
        },
    );
    check(out, D, "no self reference", cases, symenv(), |a| {
        ensure(a.bindings().all(|(v, e)| !e.mentions(*v)), || {
            format!("{a:?}")
        })
    });
    check(
        out,
        D,
        "join chains stabilize",
        cases,
        proptest::collection::vec(symenv(), CHAIN),
        |ys| {
            let mut x = ys[0].clone();
            let mut changes = 0;
            for y in &ys[1..] {
                let next = x.join(y);
                if next != x {
                    changes += 1;
                }
                x = next;
            }
            ensure(changes <= VARS as usize, || format!("{changes} changes"))
        },
    );
}

pub const DOMAINS: [&str; 4] = ["Interval", "AddrAbs", "EqClasses", "SymExpr"];

/// Every law of `domain`, `cases` random cases each.
pub fn laws_of(domain: &str, cases: u32) -> Vec<LawOutcome> {
    let mut out = Vec::new();
    match domain {
        // one increase leaving ⊥, then each bound jumps at most once
        "Interval" => lattice_laws(&mut out, "Interval", cases, interval(), 3),
        // constants grow to the cap then to ⊤; the sender relation has
        // height 2 above ⊥
        "AddrAbs" => lattice_laws(&mut out, "AddrAbs", cases, addr(), 1 + NAMES.len() + 1 + 2),
        // each join refines the partition of at most VARS variables
        "EqClasses" => lattice_laws(&mut out, "EqClasses", cases, eqclasses(), 1 + VARS as usize),
        "SymExpr" => symenv_laws(&mut out, cases),
        other => panic!("unknown domain {other}"),
    }
    out
}

/// Concrete members of an interval, near its bounds and in between.
pub fn samples(i: &Interval) -> Vec<BigInt> {
    let Interval::Range { lo, hi } = i else {
        return vec![];
    };
    let (lo, hi) = match (lo.finite(), hi.finite()) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        (Some(a), None) => (a.clone(), a + 1000),
        (None, Some(b)) => (b - 1000, b.clone()),
        (None, None) => (BigInt::from(-500), BigInt::from(500)),
    };
    let mid: BigInt = (&lo + &hi) / 2;
    let set: BTreeSet<BigInt> = [lo.clone(), &lo + 1, mid, &hi - 1, hi.clone()]
        .into_iter()
        .filter(|x| *x >= lo && *x <= hi)
        .collect();
    set.into_iter().collect()
}
