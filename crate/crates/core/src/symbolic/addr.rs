// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::domain::{Consts, Lattice};

/// Relation of an address to the caller of the current call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SenderRel {
    Bot,
    IsSender,
    NotSender,
    Top,
}

impl Lattice for SenderRel {
    fn bottom() -> Self {
        SenderRel::Bot
    }

    fn is_bottom(&self) -> bool {
        *self == SenderRel::Bot
    }

    fn leq(&self, o: &Self) -> bool {
        matches!((self, o), (SenderRel::Bot, _) | (_, SenderRel::Top)) || self == o
    }

    fn join(&self, o: &Self) -> Self {
        match (self, o) {
            (SenderRel::Bot, x) | (x, SenderRel::Bot) => *x,
            (a, b) if a == b => *a,
            _ => SenderRel::Top,
        }
    }

    fn meet(&self, o: &Self) -> Self {
        match (self, o) {
            (SenderRel::Top, x) | (x, SenderRel::Top) => *x,
            (a, b) if a == b => *a,
            _ => SenderRel::Bot,
        }
    }
}

/// Outcome of comparing two abstract addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tri {
    Eq,
    Neq,
    Unknown,
}

/// Reduced product of address constants and the sender relation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AddrAbs {
    consts: Consts,
    rel: SenderRel,
}

impl AddrAbs {
    pub fn new(consts: Consts, rel: SenderRel) -> AddrAbs {
        if consts.is_bottom() || rel.is_bottom() {
            AddrAbs::bottom()
        } else {
            AddrAbs { consts, rel }
        }
    }

    pub fn top() -> AddrAbs {
        AddrAbs::new(Consts::Top, SenderRel::Top)
    }

    pub fn constant(a: &str) -> AddrAbs {
        AddrAbs::new(Consts::one(a), SenderRel::Top)
    }

    pub fn sender() -> AddrAbs {
        AddrAbs::new(Consts::Top, SenderRel::IsSender)
    }

    pub fn consts(&self) -> &Consts {
        &self.consts
    }

    pub fn rel(&self) -> SenderRel {
        self.rel
    }

    pub fn with_rel(&self, rel: SenderRel) -> AddrAbs {
        AddrAbs::new(self.consts.clone(), rel)
    }

    pub fn assume_eq_sender(&self) -> AddrAbs {
        AddrAbs::new(self.consts.clone(), self.rel.meet(&SenderRel::IsSender))
    }

    pub fn assume_neq_sender(&self) -> AddrAbs {
        AddrAbs::new(self.consts.clone(), self.rel.meet(&SenderRel::NotSender))
    }

    /// Refinement under `self = o`.
    pub fn assume_eq(&self, o: &AddrAbs) -> AddrAbs {
        self.meet(o)
    }

    /// Refinement under `self ≠ o`.
    pub fn assume_neq(&self, o: &AddrAbs) -> AddrAbs {
        let mut r = self.clone();
        if let Some(c) = o.consts.singleton() {
            r = AddrAbs::new(r.consts.remove(c), r.rel);
        }
        match o.rel {
            SenderRel::IsSender => r.assume_neq_sender(),
            _ => r,
        }
    }

    pub fn compare(&self, o: &AddrAbs) -> Tri {
        if self.is_bottom() || o.is_bottom() {
            return Tri::Unknown;
        }
        if let (Some(a), Some(b)) = (self.consts.singleton(), o.consts.singleton()) {
            if a == b {
                return Tri::Eq;
            }
        }
        if self.rel == SenderRel::IsSender && o.rel == SenderRel::IsSender {
            return Tri::Eq;
        }
        if self.consts.disjoint(&o.consts) {
            return Tri::Neq;
        }
        match (self.rel, o.rel) {
            (SenderRel::IsSender, SenderRel::NotSender)
            | (SenderRel::NotSender, SenderRel::IsSender) => Tri::Neq,
            _ => Tri::Unknown,
        }
    }

    /// Concrete membership given the caller of the current call.
    pub fn contains(&self, a: &str, sender: &str) -> bool {
        !self.is_bottom()
            && self.consts.contains(a)
            && match self.rel {
                SenderRel::IsSender => a == sender,
                SenderRel::NotSender => a != sender,
                _ => true,
            }
    }
}

impl Lattice for AddrAbs {
    fn bottom() -> Self {
        AddrAbs {
            consts: Consts::bottom(),
            rel: SenderRel::Bot,
        }
    }

    fn is_bottom(&self) -> bool {
        self.rel.is_bottom()
    }

    fn leq(&self, o: &Self) -> bool {
        self.is_bottom() || (self.consts.leq(&o.consts) && self.rel.leq(&o.rel))
    }

    fn join(&self, o: &Self) -> Self {
        if self.is_bottom() {
            return o.clone();
        }
        if o.is_bottom() {
            return self.clone();
        }
        AddrAbs::new(self.consts.join(&o.consts), self.rel.join(&o.rel))
    }

    fn meet(&self, o: &Self) -> Self {
        AddrAbs::new(self.consts.meet(&o.consts), self.rel.meet(&o.rel))
    }
}

impl fmt::Display for AddrAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bottom() {
            return write!(f, "⊥");
        }
        let rel = match self.rel {
            SenderRel::IsSender => " = $sender",
            SenderRel::NotSender => " ≠ $sender",
            _ => "",
        };
        write!(f, "{}{rel}", self.consts)
    }
}
