// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::domain::{BoolAbs, Consts, Interval, Lattice};
use crate::symbolic::AddrAbs;
use crate::syntax::{IntKind, Ty};

use super::cellvar::{CellVar, LeafKind, Path, Step};

/// Abstract value of one scalar variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbsVal {
    Num(Interval, IntKind),
    /// Tags and presence flags, within {0, 1}.
    Flag(Interval),
    Bool(BoolAbs),
    Str(Consts),
    Addr(AddrAbs),
}

impl AbsVal {
    pub fn top(kind: LeafKind) -> AbsVal {
        match kind {
            LeafKind::Num(k) => AbsVal::Num(Interval::range(k), k),
            LeafKind::Flag => AbsVal::Flag(Interval::flag()),
            LeafKind::Bool => AbsVal::Bool(BoolAbs::Top),
            LeafKind::Str => AbsVal::Str(Consts::Top),
            LeafKind::Addr => AbsVal::Addr(AddrAbs::top()),
        }
    }

    pub fn bottom(kind: LeafKind) -> AbsVal {
        match kind {
            LeafKind::Num(k) => AbsVal::Num(Interval::Bottom, k),
            LeafKind::Flag => AbsVal::Flag(Interval::Bottom),
            LeafKind::Bool => AbsVal::Bool(BoolAbs::Bot),
            LeafKind::Str => AbsVal::Str(Consts::bottom()),
            LeafKind::Addr => AbsVal::Addr(AddrAbs::bottom()),
        }
    }

    pub fn kind(&self) -> LeafKind {
        match self {
            AbsVal::Num(_, k) => LeafKind::Num(*k),
            AbsVal::Flag(_) => LeafKind::Flag,
            AbsVal::Bool(_) => LeafKind::Bool,
            AbsVal::Str(_) => LeafKind::Str,
            AbsVal::Addr(_) => LeafKind::Addr,
        }
    }

    pub fn is_bottom(&self) -> bool {
        match self {
            AbsVal::Num(i, _) | AbsVal::Flag(i) => i.is_bottom(),
            AbsVal::Bool(b) => b.is_bottom(),
            AbsVal::Str(s) => s.is_bottom(),
            AbsVal::Addr(a) => a.is_bottom(),
        }
    }

    /// The numeric content of `Num` and `Flag` values.
    pub fn itv(&self) -> Option<&Interval> {
        match self {
            AbsVal::Num(i, _) | AbsVal::Flag(i) => Some(i),
            _ => None,
        }
    }

    pub fn with_itv(&self, i: Interval) -> AbsVal {
        match self {
            AbsVal::Num(_, k) => AbsVal::Num(i.meet_kind(*k), *k),
            AbsVal::Flag(_) => AbsVal::Flag(i.meet(&Interval::flag())),
            other => other.clone(),
        }
    }

    fn zip(
        &self,
        o: &AbsVal,
        fi: impl Fn(&Interval, &Interval) -> Interval,
        f: &dyn Fn(&AbsVal, &AbsVal) -> AbsVal,
    ) -> AbsVal {
        match (self, o) {
            (AbsVal::Num(a, k), AbsVal::Num(b, _)) => AbsVal::Num(fi(a, b), *k),
            (AbsVal::Flag(a), AbsVal::Flag(b)) => AbsVal::Flag(fi(a, b)),
            _ => f(self, o),
        }
    }

    pub fn join(&self, o: &AbsVal) -> AbsVal {
        self.zip(o, |a, b| a.join(b), &|x, y| match (x, y) {
            (AbsVal::Bool(a), AbsVal::Bool(b)) => AbsVal::Bool(a.join(b)),
            (AbsVal::Str(a), AbsVal::Str(b)) => AbsVal::Str(a.join(b)),
            (AbsVal::Addr(a), AbsVal::Addr(b)) => AbsVal::Addr(a.join(b)),
            _ => panic!("join of mismatched kinds {x:?} {y:?}"),
        })
    }

    pub fn meet(&self, o: &AbsVal) -> AbsVal {
        self.zip(o, |a, b| a.meet(b), &|x, y| match (x, y) {
            (AbsVal::Bool(a), AbsVal::Bool(b)) => AbsVal::Bool(a.meet(b)),
            (AbsVal::Str(a), AbsVal::Str(b)) => AbsVal::Str(a.meet(b)),
            (AbsVal::Addr(a), AbsVal::Addr(b)) => AbsVal::Addr(a.meet(b)),
            _ => panic!("meet of mismatched kinds {x:?} {y:?}"),
        })
    }

    /// Interval widening met with the kind's range; join elsewhere.
    pub fn widen(&self, o: &AbsVal) -> AbsVal {
        match (self, o) {
            (AbsVal::Num(a, k), AbsVal::Num(b, _)) => AbsVal::Num(a.widen(b).meet_kind(*k), *k),
            _ => self.join(o),
        }
    }

    pub fn leq(&self, o: &AbsVal) -> bool {
        match (self, o) {
            (AbsVal::Num(a, _), AbsVal::Num(b, _)) | (AbsVal::Flag(a), AbsVal::Flag(b)) => a.leq(b),
            (AbsVal::Bool(a), AbsVal::Bool(b)) => a.leq(b),
            (AbsVal::Str(a), AbsVal::Str(b)) => a.leq(b),
            (AbsVal::Addr(a), AbsVal::Addr(b)) => a.leq(b),
            _ => false,
        }
    }
}

impl fmt::Display for AbsVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsVal::Num(i, _) | AbsVal::Flag(i) => write!(f, "{i}"),
            AbsVal::Bool(b) => write!(f, "{b}"),
            AbsVal::Str(s) => write!(f, "{s}"),
            AbsVal::Addr(a) => write!(f, "{a}"),
        }
    }
}

/// How a stack value is laid out over scalar variables. Tags are 0 for
/// `None`/`Left` and 1 for `Some`/`Right`; the presence flag of a
/// sender-split map is 1 when the caller's key is bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Unit,
    Leaf(CellVar),
    Pair(Box<Shape>, Box<Shape>),
    Option {
        tag: CellVar,
        some: Box<Shape>,
    },
    Or {
        tag: CellVar,
        left: Box<Shape>,
        right: Box<Shape>,
    },
    List {
        elems: Box<Shape>,
        len: CellVar,
    },
    Set {
        elems: Box<Shape>,
        card: CellVar,
    },
    Map {
        keys: Box<Shape>,
        vals: Box<Shape>,
        card: CellVar,
    },
    SMap {
        keys: Box<Shape>,
        amount: CellVar,
        namount: CellVar,
        presence: CellVar,
        card: CellVar,
    },
    Op {
        target: CellVar,
        amount: CellVar,
    },
    Contract {
        addr: CellVar,
    },
}

/// A leaf with its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafInfo {
    pub var: CellVar,
    pub path: Path,
    /// Under a container: stands for any number of values.
    pub weak: bool,
    /// Under an option, union side or map sender slot: only meaningful
    /// when the enclosing tag selects it.
    pub guarded: bool,
}

impl Shape {
    /// Leaves in the same order as [`super::decompose`].
    pub fn leaves(&self) -> Vec<CellVar> {
        let mut out = Vec::new();
        self.for_each_leaf(&mut |v| out.push(v));
        out
    }

    pub fn for_each_leaf(&self, f: &mut impl FnMut(CellVar)) {
        match self {
            Shape::Unit => {}
            Shape::Leaf(v) => f(*v),
            Shape::Pair(a, b) => {
                a.for_each_leaf(f);
                b.for_each_leaf(f);
            }
            Shape::Option { tag, some } => {
                f(*tag);
                some.for_each_leaf(f);
            }
            Shape::Or { tag, left, right } => {
                f(*tag);
                left.for_each_leaf(f);
                right.for_each_leaf(f);
            }
            Shape::List { elems, len } => {
                elems.for_each_leaf(f);
                f(*len);
            }
            Shape::Set { elems, card } => {
                elems.for_each_leaf(f);
                f(*card);
            }
            Shape::Map { keys, vals, card } => {
                keys.for_each_leaf(f);
                vals.for_each_leaf(f);
                f(*card);
            }
            Shape::SMap {
                keys,
                amount,
                namount,
                presence,
                card,
            } => {
                keys.for_each_leaf(f);
                f(*amount);
                f(*namount);
                f(*presence);
                f(*card);
            }
            Shape::Op { target, amount } => {
                f(*target);
                f(*amount);
            }
            Shape::Contract { addr } => f(*addr),
        }
    }

    /// Leaves with their paths and weak/guarded flags.
    pub fn leaf_infos(&self) -> Vec<LeafInfo> {
        let mut out = Vec::new();
        self.infos(&mut Vec::new(), false, false, &mut out);
        out
    }

    fn infos(&self, path: &mut Path, weak: bool, guarded: bool, out: &mut Vec<LeafInfo>) {
        fn leaf(
            v: CellVar,
            step: Option<Step>,
            weak: bool,
            guarded: bool,
            path: &mut Path,
            out: &mut Vec<LeafInfo>,
        ) {
            if let Some(s) = step {
                path.push(s);
            }
            out.push(LeafInfo {
                var: v,
                path: path.clone(),
                weak,
                guarded,
            });
            if step.is_some() {
                path.pop();
            }
        }
        match self {
            Shape::Unit => {}
            Shape::Leaf(v) => leaf(*v, None, weak, guarded, path, out),
            Shape::Pair(a, b) => {
                path.push(Step::Fst);
                a.infos(path, weak, guarded, out);
                path.pop();
                path.push(Step::Snd);
                b.infos(path, weak, guarded, out);
                path.pop();
            }
            Shape::Option { tag, some } => {
                leaf(*tag, Some(Step::OptionTag), weak, guarded, path, out);
                path.push(Step::SomeContent);
                some.infos(path, weak, true, out);
                path.pop();
            }
            Shape::Or { tag, left, right } => {
                leaf(*tag, Some(Step::UnionTag), weak, guarded, path, out);
                path.push(Step::LeftContent);
                left.infos(path, weak, true, out);
                path.pop();
                path.push(Step::RightContent);
                right.infos(path, weak, true, out);
                path.pop();
            }
            Shape::List { elems, len } => {
                path.push(Step::ListElems);
                elems.infos(path, true, guarded, out);
                path.pop();
                leaf(*len, Some(Step::ListLen), weak, guarded, path, out);
            }
            Shape::Set { elems, card } => {
                path.push(Step::SetElems);
                elems.infos(path, true, guarded, out);
                path.pop();
                leaf(*card, Some(Step::SetCard), weak, guarded, path, out);
            }
            Shape::Map { keys, vals, card } => {
                path.push(Step::MapKeys);
                keys.infos(path, true, guarded, out);
                path.pop();
                path.push(Step::MapVals);
                vals.infos(path, true, guarded, out);
                path.pop();
                leaf(*card, Some(Step::MapCard), weak, guarded, path, out);
            }
            Shape::SMap {
                keys,
                amount,
                namount,
                presence,
                card,
            } => {
                path.push(Step::MapKeys);
                keys.infos(path, true, guarded, out);
                path.pop();
                leaf(*amount, Some(Step::MapSenderVal), weak, true, path, out);
                leaf(
                    *namount,
                    Some(Step::MapNonSenderVal),
                    true,
                    guarded,
                    path,
                    out,
                );
                leaf(
                    *presence,
                    Some(Step::MapSenderPresence),
                    weak,
                    guarded,
                    path,
                    out,
                );
                leaf(*card, Some(Step::MapCard), weak, guarded, path, out);
            }
            Shape::Op { target, amount } => {
                leaf(*target, Some(Step::OpTarget), weak, guarded, path, out);
                leaf(*amount, Some(Step::OpAmount), weak, guarded, path, out);
            }
            Shape::Contract { addr } => {
                leaf(*addr, Some(Step::ContractAddr), weak, guarded, path, out)
            }
        }
    }

    /// Rebuilds the shape with every leaf variable replaced.
    pub fn map_vars(&self, f: &mut dyn FnMut(CellVar) -> CellVar) -> Shape {
        let b = |s: &Shape, f: &mut dyn FnMut(CellVar) -> CellVar| Box::new(s.map_vars(f));
        match self {
            Shape::Unit => Shape::Unit,
            Shape::Leaf(v) => Shape::Leaf(f(*v)),
            Shape::Pair(x, y) => {
                let x = b(x, f);
                Shape::Pair(x, b(y, f))
            }
            Shape::Option { tag, some } => {
                let tag = f(*tag);
                Shape::Option {
                    tag,
                    some: b(some, f),
                }
            }
            Shape::Or { tag, left, right } => {
                let tag = f(*tag);
                let left = b(left, f);
                Shape::Or {
                    tag,
                    left,
                    right: b(right, f),
                }
            }
            Shape::List { elems, len } => {
                let elems = b(elems, f);
                Shape::List {
                    elems,
                    len: f(*len),
                }
            }
            Shape::Set { elems, card } => {
                let elems = b(elems, f);
                Shape::Set {
                    elems,
                    card: f(*card),
                }
            }
            Shape::Map { keys, vals, card } => {
                let keys = b(keys, f);
                let vals = b(vals, f);
                Shape::Map {
                    keys,
                    vals,
                    card: f(*card),
                }
            }
            Shape::SMap {
                keys,
                amount,
                namount,
                presence,
                card,
            } => {
                let keys = b(keys, f);
                Shape::SMap {
                    keys,
                    amount: f(*amount),
                    namount: f(*namount),
                    presence: f(*presence),
                    card: f(*card),
                }
            }
            Shape::Op { target, amount } => {
                let target = f(*target);
                Shape::Op {
                    target,
                    amount: f(*amount),
                }
            }
            Shape::Contract { addr } => Shape::Contract { addr: f(*addr) },
        }
    }
}

/// A typed stack cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub ty: Ty,
    pub shape: Shape,
}
