// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::domain::Lattice;
use crate::memory::CellVar;

/// Partition of variables into classes of definitely-equal values.
/// Variables in no class are only equal to themselves. `Bottom` is the
/// unreachable element.
#[derive(Debug, Clone, Default)]
pub struct EqClasses {
    class: BTreeMap<CellVar, u32>,
    next: u32,
    bottom: bool,
}

impl EqClasses {
    pub fn new() -> EqClasses {
        EqClasses::default()
    }

    pub fn same(&self, x: CellVar, y: CellVar) -> bool {
        if self.bottom {
            return true;
        }
        x == y
            || match (self.class.get(&x), self.class.get(&y)) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            }
    }

    pub fn merge(&mut self, x: CellVar, y: CellVar) {
        if x == y || self.bottom {
            return;
        }
        match (self.class.get(&x).copied(), self.class.get(&y).copied()) {
            (Some(a), Some(b)) if a == b => {}
            (Some(a), Some(b)) => {
                for c in self.class.values_mut() {
                    if *c == b {
                        *c = a;
                    }
                }
            }
            (Some(a), None) => {
                self.class.insert(y, a);
            }
            (None, Some(b)) => {
                self.class.insert(x, b);
            }
            (None, None) => {
                let c = self.next;
                self.next += 1;
                self.class.insert(x, c);
                self.class.insert(y, c);
            }
        }
    }

    pub fn forget(&mut self, x: CellVar) {
        self.class.remove(&x);
    }

    /// Other members of `x`'s class.
    pub fn mates(&self, x: CellVar) -> Vec<CellVar> {
        match self.class.get(&x) {
            Some(c) => self
                .class
                .iter()
                .filter(|(v, k)| *k == c && **v != x)
                .map(|(v, _)| *v)
                .collect(),
            None => vec![],
        }
    }

    /// `x` and its class mates.
    pub fn class_of(&self, x: CellVar) -> Vec<CellVar> {
        let mut m = self.mates(x);
        m.insert(0, x);
        m
    }

    /// Classes with at least two members, in a canonical order.
    pub fn classes(&self) -> BTreeSet<BTreeSet<CellVar>> {
        let mut by: BTreeMap<u32, BTreeSet<CellVar>> = BTreeMap::new();
        for (v, c) in &self.class {
            by.entry(*c).or_default().insert(*v);
        }
        by.into_values().filter(|s| s.len() > 1).collect()
    }

    pub fn from_classes(classes: impl IntoIterator<Item = BTreeSet<CellVar>>) -> EqClasses {
        let mut e = EqClasses::new();
        for c in classes {
            let mut it = c.into_iter();
            if let Some(first) = it.next() {
                for v in it {
                    e.merge(first, v);
                }
            }
        }
        e
    }

    pub fn retain(&mut self, f: impl Fn(CellVar) -> bool) {
        self.class.retain(|v, _| f(*v));
    }

    /// Renames variables; those mapped to `None` leave their class.
    pub fn rename(&self, f: &impl Fn(CellVar) -> Option<CellVar>) -> EqClasses {
        if self.bottom {
            return EqClasses::bottom();
        }
        EqClasses {
            class: self
                .class
                .iter()
                .filter_map(|(v, c)| Some((f(*v)?, *c)))
                .collect(),
            next: self.next,
            bottom: false,
        }
    }
}

impl PartialEq for EqClasses {
    fn eq(&self, o: &Self) -> bool {
        self.bottom == o.bottom && (self.bottom || self.classes() == o.classes())
    }
}

impl Eq for EqClasses {}

impl Lattice for EqClasses {
    fn bottom() -> Self {
        EqClasses {
            bottom: true,
            ..Default::default()
        }
    }

    fn is_bottom(&self) -> bool {
        self.bottom
    }

    /// Every equality of `o` holds in `self`.
    fn leq(&self, o: &Self) -> bool {
        if self.bottom {
            return true;
        }
        if o.bottom {
            return false;
        }
        o.classes().iter().all(|c| {
            let first = *c.iter().next().unwrap();
            c.iter().all(|v| self.same(first, *v))
        })
    }

    /// Pairwise intersections of classes.
    fn join(&self, o: &Self) -> Self {
        if self.bottom {
            return o.clone();
        }
        if o.bottom {
            return self.clone();
        }
        let mut by: BTreeMap<(u32, u32), BTreeSet<CellVar>> = BTreeMap::new();
        for (v, a) in &self.class {
            if let Some(b) = o.class.get(v) {
                by.entry((*a, *b)).or_default().insert(*v);
            }
        }
        EqClasses::from_classes(by.into_values().filter(|s| s.len() > 1))
    }

    /// Transitive closure of the union of equalities.
    fn meet(&self, o: &Self) -> Self {
        if self.bottom || o.bottom {
            return EqClasses::bottom();
        }
        let mut r = self.clone();
        for c in o.classes() {
            let first = *c.iter().next().unwrap();
            for v in c {
                r.merge(first, v);
            }
        }
        r
    }
}

impl fmt::Display for EqClasses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bottom {
            return write!(f, "⊥");
        }
        let parts: Vec<String> = self
            .classes()
            .iter()
            .map(|c| {
                format!(
                    "{{{}}}",
                    c.iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: u32) -> CellVar {
        CellVar::Fresh(n)
    }

    #[test]
    fn merge_forget_same() {
        let mut p = EqClasses::new();
        p.merge(v(0), v(1));
        assert!(p.same(v(0), v(1)));
        p.merge(v(1), v(2));
        assert!(p.same(v(0), v(2)));
        p.forget(v(1));
        assert!(!p.same(v(0), v(1)));
        assert!(p.same(v(0), v(2)));
    }

    #[test]
    fn join_is_intersection() {
        let a = EqClasses::from_classes([BTreeSet::from([v(0), v(1), v(2)])]);
        let b = EqClasses::from_classes([
            BTreeSet::from([v(1), v(2), v(3)]),
            BTreeSet::from([v(0), v(4)]),
        ]);
        let j = a.join(&b);
        assert_eq!(j.classes(), BTreeSet::from([BTreeSet::from([v(1), v(2)])]));
        assert!(a.leq(&j) && b.leq(&j));
    }
}
