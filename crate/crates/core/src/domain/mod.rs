// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Value lattices: intervals for every integer kind, booleans and string
//! constants.

mod interval;

use std::collections::BTreeSet;
use std::fmt;

pub use interval::{
    assume_cmp, assume_sign, itv_binop, itv_compare, mutez_max, widen_itv, ArithAlarms, BinOp,
    Bound, Interval, Rel,
};

/// Operations shared by every abstract value domain. Domains whose top
/// depends on a type expose it separately.
pub trait Lattice: Clone + PartialEq {
    fn bottom() -> Self;
    fn is_bottom(&self) -> bool;
    fn leq(&self, other: &Self) -> bool;
    fn join(&self, other: &Self) -> Self;
    fn meet(&self, other: &Self) -> Self;
    /// Defaults to join, which is a widening for finite-height lattices.
    fn widen(&self, other: &Self) -> Self {
        self.join(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolAbs {
    Bot,
    True,
    False,
    Top,
}

impl BoolAbs {
    pub fn of(b: bool) -> BoolAbs {
        if b {
            BoolAbs::True
        } else {
            BoolAbs::False
        }
    }

    pub fn may_be(self, b: bool) -> bool {
        matches!(
            (self, b),
            (BoolAbs::Top, _) | (BoolAbs::True, true) | (BoolAbs::False, false)
        )
    }

    /// The abstraction of `{f(x, y) | x ∈ self, y ∈ o}`.
    pub fn lift2(self, o: BoolAbs, f: impl Fn(bool, bool) -> bool) -> BoolAbs {
        let mut r = BoolAbs::Bot;
        for x in [false, true] {
            for y in [false, true] {
                if self.may_be(x) && o.may_be(y) {
                    r = r.join(&BoolAbs::of(f(x, y)));
                }
            }
        }
        r
    }

    pub fn negate(self) -> BoolAbs {
        match self {
            BoolAbs::True => BoolAbs::False,
            BoolAbs::False => BoolAbs::True,
            b => b,
        }
    }
}

impl Lattice for BoolAbs {
    fn bottom() -> Self {
        BoolAbs::Bot
    }

    fn is_bottom(&self) -> bool {
        *self == BoolAbs::Bot
    }

    fn leq(&self, o: &Self) -> bool {
        matches!((self, o), (BoolAbs::Bot, _) | (_, BoolAbs::Top)) || self == o
    }

    fn join(&self, o: &Self) -> Self {
        match (self, o) {
            (BoolAbs::Bot, x) | (x, BoolAbs::Bot) => *x,
            (a, b) if a == b => *a,
            _ => BoolAbs::Top,
        }
    }

    fn meet(&self, o: &Self) -> Self {
        match (self, o) {
            (BoolAbs::Top, x) | (x, BoolAbs::Top) => *x,
            (a, b) if a == b => *a,
            _ => BoolAbs::Bot,
        }
    }
}

impl fmt::Display for BoolAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoolAbs::Bot => "⊥",
            BoolAbs::True => "True",
            BoolAbs::False => "False",
            BoolAbs::Top => "⊤",
        })
    }
}

/// Most constants a [`Consts`] set holds before going to ⊤.
pub const CONST_CAP: usize = 16;

/// Finite set of constants, or ⊤. The empty set is ⊥.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Consts {
    Set(BTreeSet<String>),
    Top,
}

impl Consts {
    pub fn one(s: &str) -> Consts {
        Consts::Set(BTreeSet::from([s.to_string()]))
    }

    pub fn of(items: impl IntoIterator<Item = String>) -> Consts {
        Consts::Set(items.into_iter().collect()).capped()
    }

    fn capped(self) -> Consts {
        match self {
            Consts::Set(s) if s.len() > CONST_CAP => Consts::Top,
            c => c,
        }
    }

    pub fn contains(&self, s: &str) -> bool {
        match self {
            Consts::Top => true,
            Consts::Set(set) => set.contains(s),
        }
    }

    pub fn singleton(&self) -> Option<&str> {
        match self {
            Consts::Set(s) if s.len() == 1 => s.iter().next().map(|x| x.as_str()),
            _ => None,
        }
    }

    pub fn disjoint(&self, o: &Consts) -> bool {
        match (self, o) {
            (Consts::Set(a), Consts::Set(b)) => a.is_disjoint(b),
            _ => false,
        }
    }

    pub fn remove(&self, s: &str) -> Consts {
        match self {
            Consts::Set(set) => {
                let mut set = set.clone();
                set.remove(s);
                Consts::Set(set)
            }
            Consts::Top => Consts::Top,
        }
    }
}

impl Lattice for Consts {
    fn bottom() -> Self {
        Consts::Set(BTreeSet::new())
    }

    fn is_bottom(&self) -> bool {
        matches!(self, Consts::Set(s) if s.is_empty())
    }

    fn leq(&self, o: &Self) -> bool {
        match (self, o) {
            (_, Consts::Top) => true,
            (Consts::Top, _) => false,
            (Consts::Set(a), Consts::Set(b)) => a.is_subset(b),
        }
    }

    fn join(&self, o: &Self) -> Self {
        match (self, o) {
            (Consts::Set(a), Consts::Set(b)) => Consts::Set(a.union(b).cloned().collect()).capped(),
            _ => Consts::Top,
        }
    }

    fn meet(&self, o: &Self) -> Self {
        match (self, o) {
            (Consts::Top, x) | (x, Consts::Top) => x.clone(),
            (Consts::Set(a), Consts::Set(b)) => Consts::Set(a.intersection(b).cloned().collect()),
        }
    }
}

impl fmt::Display for Consts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Consts::Top => write!(f, "⊤"),
            Consts::Set(s) if s.is_empty() => write!(f, "⊥"),
            Consts::Set(s) => {
                let items: Vec<String> = s.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
        }
    }
}
