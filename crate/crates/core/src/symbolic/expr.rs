// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;

use crate::domain::Rel;
use crate::memory::CellVar;

/// Default bound on expression depth.
pub const DEPTH_CAP: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fun {
    Add,
    Sub,
    Mul,
    Neg,
    Abs,
    Int,
    Not,
    And,
    Or,
    Xor,
    Compare,
    /// `EQ`, `NEQ`, ... applied to a comparison result.
    Test(Rel),
}

impl Fun {
    pub fn name(self) -> &'static str {
        match self {
            Fun::Add => "add",
            Fun::Sub => "sub",
            Fun::Mul => "mul",
            Fun::Neg => "neg",
            Fun::Abs => "abs",
            Fun::Int => "int",
            Fun::Not => "not",
            Fun::And => "and",
            Fun::Or => "or",
            Fun::Xor => "xor",
            Fun::Compare => "compare",
            Fun::Test(Rel::Eq) => "eq",
            Fun::Test(Rel::Ne) => "neq",
            Fun::Test(Rel::Lt) => "lt",
            Fun::Test(Rel::Le) => "le",
            Fun::Test(Rel::Gt) => "gt",
            Fun::Test(Rel::Ge) => "ge",
        }
    }
}

/// Literal leaves.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lit {
    Int(BigInt),
    Bool(bool),
    Str(String),
    Addr(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Var(CellVar),
    Lit(Lit),
    App(Fun, Vec<Expr>),
}

impl Expr {
    pub fn app(f: Fun, args: Vec<Expr>) -> Expr {
        Expr::App(f, args)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Lit(Lit::Int(BigInt::from(n)))
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::App(_, args) => 1 + args.iter().map(|a| a.depth()).max().unwrap_or(0),
            _ => 1,
        }
    }

    pub fn mentions(&self, v: CellVar) -> bool {
        match self {
            Expr::Var(x) => *x == v,
            Expr::Lit(_) => false,
            Expr::App(_, args) => args.iter().any(|a| a.mentions(v)),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<CellVar>) {
        match self {
            Expr::Var(x) => {
                out.insert(*x);
            }
            Expr::Lit(_) => {}
            Expr::App(_, args) => args.iter().for_each(|a| a.vars(out)),
        }
    }

    /// Replaces variables by `f(var)` where it returns `Some`.
    pub fn subst(&self, f: &impl Fn(CellVar) -> Option<Expr>) -> Expr {
        match self {
            Expr::Var(x) => f(*x).unwrap_or_else(|| self.clone()),
            Expr::Lit(_) => self.clone(),
            Expr::App(g, args) => Expr::App(*g, args.iter().map(|a| a.subst(f)).collect()),
        }
    }

    /// Renames variables; `None` from `f` makes the whole expression unknown.
    pub fn rename(&self, f: &impl Fn(CellVar) -> Option<CellVar>) -> Option<Expr> {
        Some(match self {
            Expr::Var(x) => Expr::Var(f(*x)?),
            Expr::Lit(_) => self.clone(),
            Expr::App(g, args) => {
                Expr::App(*g, args.iter().map(|a| a.rename(f)).collect::<Option<_>>()?)
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Lit(Lit::Int(n)) => write!(f, "{n}"),
            Expr::Lit(Lit::Bool(b)) => write!(f, "{}", if *b { "True" } else { "False" }),
            Expr::Lit(Lit::Str(s)) | Expr::Lit(Lit::Addr(s)) => write!(f, "{s:?}"),
            Expr::App(g, args) => {
                write!(f, "{}(", g.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A primitive relation between two terms, produced by guard resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub rel: Rel,
    pub lhs: Expr,
    pub rhs: Expr,
}

/// Symbolic-constant environment: variables absent from the map are ⊤.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymEnv {
    bindings: BTreeMap<CellVar, Expr>,
    cap: Option<usize>,
}

impl SymEnv {
    pub fn new() -> SymEnv {
        SymEnv::default()
    }

    pub fn with_cap(cap: usize) -> SymEnv {
        SymEnv {
            bindings: BTreeMap::new(),
            cap: Some(cap),
        }
    }

    fn cap(&self) -> usize {
        self.cap.unwrap_or(DEPTH_CAP)
    }

    pub fn get(&self, v: CellVar) -> Option<&Expr> {
        self.bindings.get(&v)
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&CellVar, &Expr)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// `e` with every bound variable replaced by its binding.
    pub fn resolve(&self, e: &Expr) -> Expr {
        e.subst(&|x| self.bindings.get(&x).cloned())
    }

    /// Binds `dst` to `e`, read in the environment before the assignment.
    /// Bindings that mention `dst` get its old expression substituted in
    /// or become ⊤ when it has none.
    pub fn assign(&mut self, dst: CellVar, e: &Expr) {
        let new = self.resolve(e);
        let old = self.bindings.remove(&dst);
        let cap = self.cap();
        let mut drop = Vec::new();
        for (v, b) in self.bindings.iter_mut() {
            if b.mentions(dst) {
                match &old {
                    Some(o) => {
                        *b = b.subst(&|x| (x == dst).then(|| o.clone()));
                        if b.depth() > cap {
                            drop.push(*v);
                        }
                    }
                    None => drop.push(*v),
                }
            }
        }
        for v in drop {
            self.bindings.remove(&v);
        }
        // a leaf that is the variable itself carries no information
        if new.depth() <= cap && !new.mentions(dst) {
            self.bindings.insert(dst, new);
        }
    }

    /// Makes `v` ⊤ and forgets every binding that mentions it.
    pub fn forget(&mut self, v: CellVar) {
        self.bindings.remove(&v);
        self.bindings.retain(|_, b| !b.mentions(v));
    }

    pub fn retain(&mut self, f: impl Fn(CellVar, &Expr) -> bool) {
        self.bindings.retain(|v, e| f(*v, e));
    }

    /// Renames every variable; bindings that cannot be renamed are dropped.
    pub fn rename(&self, f: &impl Fn(CellVar) -> Option<CellVar>) -> SymEnv {
        let bindings = self
            .bindings
            .iter()
            .filter_map(|(v, e)| Some((f(*v)?, e.rename(f)?)))
            .collect();
        SymEnv {
            bindings,
            cap: self.cap,
        }
    }

    /// Keeps the bindings identical on both sides.
    pub fn join(&self, o: &SymEnv) -> SymEnv {
        let bindings = self
            .bindings
            .iter()
            .filter(|(v, e)| o.bindings.get(v) == Some(e))
            .map(|(v, e)| (*v, e.clone()))
            .collect();
        SymEnv {
            bindings,
            cap: self.cap,
        }
    }

    /// `self` carries at least the information of `o`.
    pub fn leq(&self, o: &SymEnv) -> bool {
        o.bindings
            .iter()
            .all(|(v, e)| self.bindings.get(v) == Some(e))
    }

    /// Relations implied by the boolean `v` being `branch`.
    pub fn resolve_guard(&self, v: CellVar, branch: bool) -> Vec<Relation> {
        match self.bindings.get(&v) {
            Some(e) => guard_relations(e, branch),
            None => vec![],
        }
    }
}

/// Unfolds `e` (a boolean expression) into relations that hold when it
/// evaluates to `branch`.
pub fn guard_relations(e: &Expr, branch: bool) -> Vec<Relation> {
    match e {
        Expr::App(Fun::Not, args) if args.len() == 1 => guard_relations(&args[0], !branch),
        Expr::App(Fun::And, args) if branch && args.len() == 2 => {
            let mut r = guard_relations(&args[0], true);
            r.extend(guard_relations(&args[1], true));
            r
        }
        Expr::App(Fun::Or, args) if !branch && args.len() == 2 => {
            let mut r = guard_relations(&args[0], false);
            r.extend(guard_relations(&args[1], false));
            r
        }
        Expr::App(Fun::Test(rel), args) if args.len() == 1 => {
            let rel = if branch { *rel } else { rel.negate() };
            match &args[0] {
                Expr::App(Fun::Compare, ab) if ab.len() == 2 => vec![Relation {
                    rel,
                    lhs: ab[0].clone(),
                    rhs: ab[1].clone(),
                }],
                other => vec![Relation {
                    rel,
                    lhs: other.clone(),
                    rhs: Expr::int(0),
                }],
            }
        }
        Expr::Var(_) => vec![Relation {
            rel: Rel::Eq,
            lhs: e.clone(),
            rhs: Expr::Lit(Lit::Bool(branch)),
        }],
        _ => vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: u32) -> CellVar {
        CellVar::Fresh(n)
    }

    #[test]
    fn compare_pattern() {
        let (x, y, x2, y2, c, b) = (v(0), v(1), v(2), v(3), v(4), v(5));
        let mut s = SymEnv::new();
        s.assign(x2, &Expr::Var(x));
        s.assign(y2, &Expr::Var(y));
        s.assign(
            c,
            &Expr::app(Fun::Compare, vec![Expr::Var(x2), Expr::Var(y2)]),
        );
        s.assign(b, &Expr::app(Fun::Test(Rel::Eq), vec![Expr::Var(c)]));
        assert_eq!(s.get(b).unwrap().to_string(), "eq(compare(v0, v1))");
        let t = s.resolve_guard(b, true);
        assert_eq!(
            t,
            vec![Relation {
                rel: Rel::Eq,
                lhs: Expr::Var(x),
                rhs: Expr::Var(y)
            }]
        );
        assert_eq!(s.resolve_guard(b, false)[0].rel, Rel::Ne);
        assert!(s.resolve_guard(x, true).is_empty());
    }

    #[test]
    fn self_assignment_keeps_meaning() {
        let (x, y) = (v(0), v(1));
        let mut s = SymEnv::new();
        s.assign(x, &Expr::int(5));
        assert_eq!(s.get(x), Some(&Expr::int(5)));
        s.assign(y, &Expr::app(Fun::Add, vec![Expr::Var(x), Expr::int(1)]));
        s.assign(x, &Expr::app(Fun::Add, vec![Expr::Var(x), Expr::int(1)]));
        assert_eq!(s.get(x).unwrap().to_string(), "add(5, 1)");
        // y still means the old x plus one
        assert_eq!(s.get(y).unwrap().to_string(), "add(5, 1)");
        // a self-reference over an unknown value cannot be expressed
        let z = v(2);
        s.assign(z, &Expr::app(Fun::Add, vec![Expr::Var(z), Expr::int(1)]));
        assert_eq!(s.get(z), None);
    }

    #[test]
    fn depth_cap_drops_to_top() {
        let mut s = SymEnv::with_cap(4);
        let mut prev = Expr::Var(v(100));
        for i in 1..10 {
            s.assign(v(i), &Expr::app(Fun::Add, vec![prev.clone(), Expr::int(1)]));
            prev = Expr::Var(v(i));
        }
        assert_eq!(s.get(v(3)).unwrap().depth(), 4);
        assert!(s.get(v(4)).is_none());
        // the chain restarts from the unknown v4
        assert_eq!(s.get(v(5)).unwrap().to_string(), "add(v4, 1)");
    }

    #[test]
    fn join_keeps_identical() {
        let mut a = SymEnv::new();
        let mut b = SymEnv::new();
        a.assign(v(0), &Expr::int(1));
        b.assign(v(0), &Expr::int(1));
        a.assign(v(1), &Expr::int(2));
        b.assign(v(1), &Expr::int(3));
        let j = a.join(&b);
        assert_eq!(j.get(v(0)), Some(&Expr::int(1)));
        assert_eq!(j.get(v(1)), None);
        assert!(a.leq(&j) && b.leq(&j));
    }
}
