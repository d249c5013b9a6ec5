// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;

use crate::concrete::Value;
use crate::domain::{BoolAbs, Consts, Interval, Lattice};
use crate::symbolic::{AddrAbs, EqClasses, Expr, SenderRel, SymEnv};
use crate::syntax::{IntKind, Span, Ty};

use super::cellvar::{is_split_map, CellVar, CtxVar, LeafKind};
use super::shape::{AbsVal, Cell, Shape};

/// Source of fresh variable and read names, shared by all states of one
/// analysis.
#[derive(Debug, Default)]
pub struct Gen {
    next: u32,
}

impl Gen {
    pub fn new() -> Gen {
        Gen::default()
    }

    pub fn var(&mut self) -> CellVar {
        CellVar::Fresh(self.id())
    }

    pub fn id(&mut self) -> u32 {
        let n = self.next;
        self.next += 1;
        n
    }
}

/// One execution of `GET` on the non-sender part of a sender-split map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Read {
    /// The `namount` variable of the map read from.
    pub map: CellVar,
    pub key: CellVar,
    /// Tag of the returned option, until it goes out of scope.
    pub tag: Option<CellVar>,
}

/// Provenance of values read from maps. `dom(v, r)` says that `v` is at
/// least the value read by `r` (when it found one); `absent(r)` says that
/// `r` found no binding.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Reads {
    pub reads: BTreeMap<u32, Read>,
    pub dom: BTreeSet<(CellVar, u32)>,
    pub absent: BTreeSet<u32>,
    /// `namount` variables of maps obtained from the call's input storage
    /// map number `n` by updates only.
    pub derived: BTreeMap<CellVar, u16>,
}

impl Reads {
    fn leq(&self, o: &Reads) -> bool {
        o.reads.iter().all(|(r, x)| self.reads.get(r) == Some(x))
            && o.dom.is_subset(&self.dom)
            && o.absent.is_subset(&self.absent)
            && o.derived
                .iter()
                .all(|(v, n)| self.derived.get(v) == Some(n))
    }
}

/// Abstract state of one program point: a typed stack of shapes over
/// scalar variables and the relational facts about those variables.
/// `dipped` holds cells hidden by `DIP` and the accumulators of `MAP`.
#[derive(Debug, Clone, PartialEq)]
pub struct Env {
    pub stack: Vec<Cell>,
    pub dipped: Vec<Cell>,
    pub vals: BTreeMap<CellVar, AbsVal>,
    pub sym: SymEnv,
    pub eqs: EqClasses,
    pub reads: Reads,
    /// Variables standing for any number of values (container contents).
    pub weak: BTreeSet<CellVar>,
    /// Updates along this flow that may lower another account's balance.
    pub witness: BTreeSet<Span>,
    /// Pairs `(a, b)` with `a >= b`, from guards.
    pub ge: BTreeSet<(CellVar, CellVar)>,
}

/// What a fresh leaf starts as.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Top,
    Bottom,
}

impl Env {
    /// Empty stack with the context variables at their type ranges.
    pub fn new() -> Env {
        let mut e = Env {
            stack: vec![],
            dipped: vec![],
            vals: BTreeMap::new(),
            sym: SymEnv::new(),
            eqs: EqClasses::new(),
            reads: Reads::default(),
            weak: BTreeSet::new(),
            witness: BTreeSet::new(),
            ge: BTreeSet::new(),
        };
        for c in CtxVar::ALL {
            let v = match c {
                CtxVar::Sender => AbsVal::Addr(AddrAbs::sender()),
                CtxVar::Source | CtxVar::SelfAddress => AbsVal::Addr(AddrAbs::top()),
                CtxVar::Amount | CtxVar::Balance => AbsVal::top(LeafKind::Num(IntKind::Mutez)),
                CtxVar::Now => AbsVal::top(LeafKind::Num(IntKind::Timestamp)),
            };
            e.vals.insert(CellVar::Ctx(c), v);
        }
        e
    }

    pub fn val(&self, v: CellVar) -> &AbsVal {
        self.vals
            .get(&v)
            .unwrap_or_else(|| panic!("unknown variable {v}"))
    }

    pub fn itv(&self, v: CellVar) -> Interval {
        self.val(v).itv().cloned().unwrap_or_else(Interval::top)
    }

    pub fn set(&mut self, v: CellVar, a: AbsVal) {
        self.vals.insert(v, a);
    }

    pub fn set_itv(&mut self, v: CellVar, i: Interval) {
        let a = self.val(v).with_itv(i);
        self.vals.insert(v, a);
    }

    pub fn is_weak(&self, v: CellVar) -> bool {
        self.weak.contains(&v)
    }

    /// Meets `v` and its strong equals with `a`. False when a value
    /// becomes ⊥.
    pub fn refine(&mut self, v: CellVar, a: &AbsVal) -> bool {
        let mut ok = true;
        let mut targets = vec![v];
        if !self.is_weak(v) {
            targets.extend(
                self.eqs
                    .mates(v)
                    .into_iter()
                    .filter(|m| !self.weak.contains(m)),
            );
        }
        for t in targets {
            let Some(old) = self.vals.get(&t) else {
                continue;
            };
            if old.kind() != a.kind() {
                continue;
            }
            let n = old.meet(a);
            ok &= !n.is_bottom();
            self.vals.insert(t, n);
        }
        ok
    }

    pub fn refine_itv(&mut self, v: CellVar, i: &Interval) -> bool {
        let a = self.val(v).with_itv(i.clone());
        self.refine(v, &a)
    }

    pub fn push(&mut self, ty: Ty, shape: Shape) {
        self.stack.push(Cell { ty, shape });
    }

    pub fn pop(&mut self) -> Cell {
        self.stack.pop().expect("stack underflow")
    }

    pub fn top(&self) -> &Cell {
        self.stack.last().expect("empty stack")
    }

    pub fn leaf(&mut self, g: &mut Gen, a: AbsVal, weak: bool) -> CellVar {
        let v = g.var();
        self.vals.insert(v, a);
        if weak {
            self.weak.insert(v);
        }
        v
    }

    /// A shape of type `ty` with fresh leaves, all ⊤ or all ⊥.
    pub fn fresh_shape(
        &mut self,
        g: &mut Gen,
        ty: &Ty,
        init: Init,
        split: bool,
        weak: bool,
    ) -> Shape {
        let mut leaf = |e: &mut Env, kind: LeafKind, weak: bool| {
            let a = match init {
                Init::Top => AbsVal::top(kind),
                Init::Bottom => AbsVal::bottom(kind),
            };
            e.leaf(g, a, weak)
        };
        self.build(ty, split, weak, &mut leaf)
    }

    fn build(
        &mut self,
        ty: &Ty,
        split: bool,
        weak: bool,
        leaf: &mut dyn FnMut(&mut Env, LeafKind, bool) -> CellVar,
    ) -> Shape {
        let num = |k: IntKind| LeafKind::Num(k);
        match ty {
            Ty::Unit => Shape::Unit,
            Ty::Int | Ty::Nat | Ty::Mutez | Ty::Timestamp => {
                Shape::Leaf(leaf(self, num(ty.int_kind().unwrap()), weak))
            }
            Ty::Bool => Shape::Leaf(leaf(self, LeafKind::Bool, weak)),
            Ty::String => Shape::Leaf(leaf(self, LeafKind::Str, weak)),
            Ty::Address => Shape::Leaf(leaf(self, LeafKind::Addr, weak)),
            Ty::Pair(a, b) => {
                let a = self.build(a, split, weak, leaf);
                Shape::Pair(Box::new(a), Box::new(self.build(b, split, weak, leaf)))
            }
            Ty::Option(a) => {
                let tag = leaf(self, LeafKind::Flag, weak);
                Shape::Option {
                    tag,
                    some: Box::new(self.build(a, split, weak, leaf)),
                }
            }
            Ty::Or(a, b) => {
                let tag = leaf(self, LeafKind::Flag, weak);
                let left = Box::new(self.build(a, split, weak, leaf));
                let right = Box::new(self.build(b, split, weak, leaf));
                Shape::Or { tag, left, right }
            }
            Ty::List(a) => {
                let elems = Box::new(self.build(a, split, true, leaf));
                Shape::List {
                    elems,
                    len: leaf(self, num(IntKind::Nat), weak),
                }
            }
            Ty::Set(a) => {
                let elems = Box::new(self.build(a, split, true, leaf));
                Shape::Set {
                    elems,
                    card: leaf(self, num(IntKind::Nat), weak),
                }
            }
            Ty::Map(k, v) => {
                let keys = Box::new(self.build(k, split, true, leaf));
                if split && is_split_map(k, v) {
                    let mz = num(IntKind::Mutez);
                    Shape::SMap {
                        keys,
                        amount: leaf(self, mz, weak),
                        namount: leaf(self, mz, true),
                        presence: leaf(self, LeafKind::Flag, weak),
                        card: leaf(self, num(IntKind::Nat), weak),
                    }
                } else {
                    let vals = Box::new(self.build(v, split, true, leaf));
                    Shape::Map {
                        keys,
                        vals,
                        card: leaf(self, num(IntKind::Nat), weak),
                    }
                }
            }
            Ty::Operation => {
                let target = leaf(self, LeafKind::Addr, weak);
                Shape::Op {
                    target,
                    amount: leaf(self, num(IntKind::Mutez), weak),
                }
            }
            Ty::Contract(_) => Shape::Contract {
                addr: leaf(self, LeafKind::Addr, weak),
            },
        }
    }

    /// Copies `src` into fresh variables with the same values. Weakness
    /// is positional within the copy, offset by `weak`. With `link` the
    /// copies are recorded equal to their sources.
    pub fn copy_shape(&mut self, g: &mut Gen, src: &Shape, weak: bool, link: bool) -> Shape {
        let infos = src.leaf_infos();
        let mut map = BTreeMap::new();
        for (i, info) in infos.iter().enumerate() {
            let v = self.leaf(g, self.val(info.var).clone(), weak || info.weak);
            if link {
                self.eqs.merge(v, info.var);
                self.sym.assign(v, &Expr::Var(info.var));
            }
            if let Some(n) = self.reads.derived.get(&info.var).copied() {
                self.reads.derived.insert(v, n);
            }
            map.insert(i, v);
        }
        let mut j = 0;
        src.map_vars(&mut |_| {
            let v = map[&j];
            j += 1;
            v
        })
    }

    /// Joins the values of `src` into the corresponding leaves of `dst`.
    pub fn join_into(&mut self, dst: &Shape, src: &Shape) {
        for (d, s) in dst.leaves().into_iter().zip(src.leaves()) {
            let j = self.val(d).join(self.val(s));
            self.vals.insert(d, j);
        }
    }

    /// Like [`Env::join_into`] but widening.
    pub fn widen_into(&mut self, dst: &Shape, src: &Shape) {
        for (d, s) in dst.leaves().into_iter().zip(src.leaves()) {
            let j = self.val(d).widen(self.val(s));
            self.vals.insert(d, j);
        }
    }

    /// Abstraction of a set of concrete values of type `ty`. When
    /// `sender` is known, address leaves record their relation to it and
    /// sender-split maps are split exactly.
    pub fn alpha(
        &mut self,
        g: &mut Gen,
        ty: &Ty,
        vs: &[&Value],
        split: bool,
        weak: bool,
        sender: Option<&str>,
    ) -> Shape {
        let leaf = |e: &mut Env, g: &mut Gen, a: AbsVal| e.leaf(g, a, weak);
        let hull = |ns: Vec<BigInt>| {
            ns.into_iter()
                .fold(Interval::Bottom, |acc, n| acc.join(&Interval::constant(n)))
        };
        let flags = |bits: Vec<bool>| {
            bits.into_iter().fold(Interval::Bottom, |acc, b| {
                acc.join(&Interval::int(b as i64, b as i64))
            })
        };
        match ty {
            Ty::Unit => Shape::Unit,
            Ty::Int | Ty::Nat | Ty::Mutez | Ty::Timestamp => {
                let k = ty.int_kind().unwrap();
                let i = hull(vs.iter().filter_map(|v| v.as_int()).collect());
                Shape::Leaf(leaf(self, g, AbsVal::Num(i, k)))
            }
            Ty::Bool => {
                let b = vs.iter().fold(BoolAbs::Bot, |acc, v| match v {
                    Value::Bool(b) => acc.join(&BoolAbs::of(*b)),
                    _ => acc,
                });
                Shape::Leaf(leaf(self, g, AbsVal::Bool(b)))
            }
            Ty::String => {
                let s = Consts::of(vs.iter().filter_map(|v| match v {
                    Value::String(s) => Some(s.clone()),
                    _ => None,
                }));
                Shape::Leaf(leaf(self, g, AbsVal::Str(s)))
            }
            Ty::Address => {
                let addrs: Vec<String> = vs
                    .iter()
                    .filter_map(|v| match v {
                        Value::Address(s) => Some(s.clone()),
                        _ => None,
                    })
                    .collect();
                Shape::Leaf(leaf(self, g, AbsVal::Addr(addr_alpha(&addrs, sender))))
            }
            Ty::Pair(a, b) => {
                let (xs, ys): (Vec<&Value>, Vec<&Value>) = vs
                    .iter()
                    .filter_map(|v| match v {
                        Value::Pair(x, y) => Some((&**x, &**y)),
                        _ => None,
                    })
                    .unzip();
                let a = self.alpha(g, a, &xs, split, weak, sender);
                Shape::Pair(
                    Box::new(a),
                    Box::new(self.alpha(g, b, &ys, split, weak, sender)),
                )
            }
            Ty::Option(a) => {
                let tag = flags(
                    vs.iter()
                        .map(|v| matches!(v, Value::Option(Some(_))))
                        .collect(),
                );
                let tag = leaf(self, g, AbsVal::Flag(tag));
                let xs: Vec<&Value> = vs
                    .iter()
                    .filter_map(|v| match v {
                        Value::Option(Some(x)) => Some(&**x),
                        _ => None,
                    })
                    .collect();
                Shape::Option {
                    tag,
                    some: Box::new(self.alpha(g, a, &xs, split, weak, sender)),
                }
            }
            Ty::Or(a, b) => {
                let tag = flags(vs.iter().map(|v| matches!(v, Value::Right(_))).collect());
                let tag = leaf(self, g, AbsVal::Flag(tag));
                let ls: Vec<&Value> = vs
                    .iter()
                    .filter_map(|v| match v {
                        Value::Left(x) => Some(&**x),
                        _ => None,
                    })
                    .collect();
                let rs: Vec<&Value> = vs
                    .iter()
                    .filter_map(|v| match v {
                        Value::Right(x) => Some(&**x),
                        _ => None,
                    })
                    .collect();
                let left = Box::new(self.alpha(g, a, &ls, split, weak, sender));
                let right = Box::new(self.alpha(g, b, &rs, split, weak, sender));
                Shape::Or { tag, left, right }
            }
            Ty::List(a) | Ty::Set(a) => {
                let mut xs = Vec::new();
                let mut lens = Vec::new();
                for v in vs {
                    match v {
                        Value::List(l) => {
                            xs.extend(l.iter());
                            lens.push(BigInt::from(l.len()));
                        }
                        Value::Set(s) => {
                            xs.extend(s.iter());
                            lens.push(BigInt::from(s.len()));
                        }
                        _ => {}
                    }
                }
                let elems = Box::new(self.alpha(g, a, &xs, split, true, sender));
                let n = leaf(self, g, AbsVal::Num(hull(lens), IntKind::Nat));
                if matches!(ty, Ty::List(_)) {
                    Shape::List { elems, len: n }
                } else {
                    Shape::Set { elems, card: n }
                }
            }
            Ty::Map(k, v) => {
                let maps: Vec<&BTreeMap<Value, Value>> = vs
                    .iter()
                    .filter_map(|v| match v {
                        Value::Map(m) => Some(m),
                        _ => None,
                    })
                    .collect();
                let ks: Vec<&Value> = maps.iter().flat_map(|m| m.keys()).collect();
                let keys = Box::new(self.alpha(g, k, &ks, split, true, sender));
                let card = hull(maps.iter().map(|m| BigInt::from(m.len())).collect());
                if split && is_split_map(k, v) {
                    let mut amount = Interval::Bottom;
                    let mut namount = Interval::Bottom;
                    let mut presence = Interval::Bottom;
                    for m in &maps {
                        match sender {
                            Some(s) => {
                                let mine = m.get(&Value::address(s));
                                presence = presence.join(&flags(vec![mine.is_some()]));
                                for (key, val) in m.iter() {
                                    let n = Interval::constant(val.as_int().unwrap());
                                    if *key == Value::address(s) {
                                        amount = amount.join(&n);
                                    } else {
                                        namount = namount.join(&n);
                                    }
                                }
                            }
                            None => {
                                presence = presence.join(&if m.is_empty() {
                                    Interval::int(0, 0)
                                } else {
                                    Interval::flag()
                                });
                                for val in m.values() {
                                    let n = Interval::constant(val.as_int().unwrap());
                                    amount = amount.join(&n);
                                    namount = namount.join(&n);
                                }
                            }
                        }
                    }
                    let mz = IntKind::Mutez;
                    Shape::SMap {
                        keys,
                        amount: leaf(self, g, AbsVal::Num(amount, mz)),
                        namount: self.leaf(g, AbsVal::Num(namount, mz), true),
                        presence: leaf(self, g, AbsVal::Flag(presence)),
                        card: leaf(self, g, AbsVal::Num(card, IntKind::Nat)),
                    }
                } else {
                    let xs: Vec<&Value> = maps.iter().flat_map(|m| m.values()).collect();
                    let vals = Box::new(self.alpha(g, v, &xs, split, true, sender));
                    Shape::Map {
                        keys,
                        vals,
                        card: leaf(self, g, AbsVal::Num(card, IntKind::Nat)),
                    }
                }
            }
            Ty::Operation => {
                let ts: Vec<&crate::concrete::Transfer> = vs
                    .iter()
                    .filter_map(|v| match v {
                        Value::Operation(t) => Some(&**t),
                        _ => None,
                    })
                    .collect();
                let target = addr_alpha(
                    &ts.iter().map(|t| t.target.clone()).collect::<Vec<_>>(),
                    sender,
                );
                let amount = hull(ts.iter().map(|t| BigInt::from(t.amount)).collect());
                let target = leaf(self, g, AbsVal::Addr(target));
                Shape::Op {
                    target,
                    amount: leaf(self, g, AbsVal::Num(amount, IntKind::Mutez)),
                }
            }
            Ty::Contract(_) => {
                let addrs: Vec<String> = vs
                    .iter()
                    .filter_map(|v| match v {
                        Value::Contract(s) => Some(s.clone()),
                        _ => None,
                    })
                    .collect();
                Shape::Contract {
                    addr: leaf(self, g, AbsVal::Addr(addr_alpha(&addrs, sender))),
                }
            }
        }
    }

    /// Propagates emptiness between tags, sizes and contents. False when
    /// the state has no concretization.
    pub fn reduce(&mut self) -> bool {
        let shapes: Vec<Shape> = self
            .stack
            .iter()
            .chain(self.dipped.iter())
            .map(|c| c.shape.clone())
            .collect();
        let mut ok = true;
        for s in &shapes {
            ok &= self.reduce_shape(s);
        }
        ok
    }

    /// Whether `s` can hold a value; narrows tags and sizes on the way.
    pub fn reduce_shape(&mut self, s: &Shape) -> bool {
        let cut = |e: &mut Env, v: CellVar, i: Interval| -> bool {
            let n = e.itv(v).meet(&i);
            e.set_itv(v, n.clone());
            !n.is_bottom()
        };
        match s {
            Shape::Unit => true,
            Shape::Leaf(v) | Shape::Contract { addr: v } => !self.val(*v).is_bottom(),
            Shape::Pair(a, b) => {
                let a = self.reduce_shape(a);
                self.reduce_shape(b) && a
            }
            Shape::Option { tag, some } => {
                if !self.reduce_shape(some) {
                    return cut(self, *tag, Interval::int(0, 0));
                }
                !self.val(*tag).is_bottom()
            }
            Shape::Or { tag, left, right } => {
                let l = self.reduce_shape(left);
                let r = self.reduce_shape(right);
                let mut t = self.itv(*tag);
                if !l {
                    t = t.meet(&Interval::int(1, 1));
                }
                if !r {
                    t = t.meet(&Interval::int(0, 0));
                }
                cut(self, *tag, t)
            }
            Shape::List { elems, len: n } | Shape::Set { elems, card: n } => {
                if !self.reduce_shape(elems) {
                    return cut(self, *n, Interval::int(0, 0));
                }
                !self.val(*n).is_bottom()
            }
            Shape::Map { keys, vals, card } => {
                let k = self.reduce_shape(keys);
                if !(self.reduce_shape(vals) && k) {
                    return cut(self, *card, Interval::int(0, 0));
                }
                !self.val(*card).is_bottom()
            }
            Shape::SMap {
                keys,
                amount,
                namount,
                presence,
                card,
            } => {
                if self.val(*amount).is_bottom() && !cut(self, *presence, Interval::int(0, 0)) {
                    return false;
                }
                if !self.reduce_shape(keys) && !cut(self, *card, Interval::int(0, 0)) {
                    return false;
                }
                let p = self.itv(*presence);
                let (plo, phi) = match &p {
                    Interval::Range { lo, hi } => (lo.clone(), hi.clone()),
                    Interval::Bottom => return false,
                };
                let others = if self.val(*namount).is_bottom() {
                    Interval::int(0, 0)
                } else {
                    Interval::at_least(0)
                };
                let c = self
                    .itv(*card)
                    .meet(&Interval::new(plo, crate::domain::Bound::PosInf))
                    .meet(&Interval::new(
                        crate::domain::Bound::NegInf,
                        phi.add(others.hi().unwrap()),
                    ));
                if !cut(self, *card, c) {
                    return false;
                }
                if self.itv(*card) == Interval::int(0, 0) {
                    return cut(self, *presence, Interval::int(0, 0));
                }
                true
            }
            Shape::Op { target, amount } => {
                !self.val(*target).is_bottom() && !self.val(*amount).is_bottom()
            }
        }
    }

    /// Renames every stack and dipped leaf to its canonical name at
    /// `point` and drops the variables that are no longer reachable.
    /// Facts about dropped variables are moved to a reachable equal when
    /// there is one.
    pub fn canonicalize(&self, point: u32) -> Env {
        let mut names: BTreeMap<CellVar, CellVar> = BTreeMap::new();
        let mut stack = Vec::new();
        let mut dipped = Vec::new();
        for (role, cells, out) in [
            (0u8, &self.stack, &mut stack),
            (1u8, &self.dipped, &mut dipped),
        ] {
            for (pos, cell) in cells.iter().enumerate() {
                let mut leaf = 0u16;
                let shape = cell.shape.map_vars(&mut |v| {
                    let n = CellVar::Canon {
                        point,
                        role,
                        pos: pos as u16,
                        leaf,
                    };
                    leaf += 1;
                    names.insert(v, n);
                    n
                });
                out.push(Cell {
                    ty: cell.ty.clone(),
                    shape,
                });
            }
        }
        let direct = |v: CellVar| -> Option<CellVar> {
            match v {
                CellVar::Ctx(_) => Some(v),
                _ => names.get(&v).copied(),
            }
        };
        let via_mates = |v: CellVar| -> Option<CellVar> {
            direct(v).or_else(|| {
                if self.weak.contains(&v) {
                    return None;
                }
                self.eqs.mates(v).into_iter().find_map(direct)
            })
        };
        let mut vals = BTreeMap::new();
        for (old, new) in &names {
            vals.insert(*new, self.val(*old).clone());
        }
        for c in CtxVar::ALL {
            if let Some(a) = self.vals.get(&CellVar::Ctx(c)) {
                vals.insert(CellVar::Ctx(c), a.clone());
            }
        }
        let sym = self.sym.rename(&via_mates);
        let eqs = self.eqs.rename(&direct);
        let mut reads = Reads::default();
        for (r, x) in &self.reads.reads {
            let (Some(map), Some(key)) = (via_mates(x.map), via_mates(x.key)) else {
                continue;
            };
            reads.reads.insert(
                *r,
                Read {
                    map,
                    key,
                    tag: x.tag.and_then(direct),
                },
            );
        }
        for (v, r) in &self.reads.dom {
            if let (Some(v), true) = (direct(*v), reads.reads.contains_key(r)) {
                reads.dom.insert((v, *r));
            }
        }
        reads.absent = self
            .reads
            .absent
            .iter()
            .copied()
            .filter(|r| reads.reads.contains_key(r))
            .collect();
        reads.derived = self
            .reads
            .derived
            .iter()
            .filter_map(|(v, n)| Some((direct(*v)?, *n)))
            .collect();
        let weak = self.weak.iter().filter_map(|v| direct(*v)).collect();
        Env {
            stack,
            dipped,
            vals,
            sym,
            eqs,
            reads,
            weak,
            witness: self.witness.clone(),
            ge: self
                .ge
                .iter()
                .filter_map(|(a, b)| Some((via_mates(*a)?, via_mates(*b)?)))
                .collect(),
        }
    }

    fn combine(&self, o: &Env, widen: bool) -> Env {
        debug_assert_eq!(self.stack.len(), o.stack.len());
        let mut vals = BTreeMap::new();
        for (v, a) in &self.vals {
            if let Some(b) = o.vals.get(v) {
                vals.insert(*v, if widen { a.widen(b) } else { a.join(b) });
            }
        }
        let mut reads = Reads::default();
        for (r, x) in &self.reads.reads {
            if o.reads.reads.get(r) == Some(x) {
                reads.reads.insert(*r, x.clone());
            }
        }
        reads.absent = self
            .reads
            .absent
            .intersection(&o.reads.absent)
            .copied()
            .collect();
        reads.derived = self
            .reads
            .derived
            .iter()
            .filter(|(v, n)| o.reads.derived.get(v) == Some(n))
            .map(|(v, n)| (*v, *n))
            .collect();
        let holds = |e: &Env, v: CellVar, r: u32| {
            e.reads.dom.contains(&(v, r))
                || (e.reads.absent.contains(&r)
                    && e.vals
                        .get(&v)
                        .and_then(|a| a.itv())
                        .is_some_and(|i| i.ge(0)))
        };
        for (v, r) in self.reads.dom.iter().chain(o.reads.dom.iter()) {
            if reads.reads.contains_key(r) && holds(self, *v, *r) && holds(o, *v, *r) {
                reads.dom.insert((*v, *r));
            }
        }
        Env {
            stack: self.stack.clone(),
            dipped: self.dipped.clone(),
            vals,
            sym: self.sym.join(&o.sym),
            eqs: self.eqs.join(&o.eqs),
            reads,
            weak: self.weak.union(&o.weak).copied().collect(),
            witness: self.witness.union(&o.witness).copied().collect(),
            ge: self.ge.intersection(&o.ge).copied().collect(),
        }
    }

    /// Join of two states canonicalized at the same point.
    pub fn join(&self, o: &Env) -> Env {
        self.combine(o, false)
    }

    pub fn widen(&self, o: &Env) -> Env {
        self.combine(o, true)
    }

    /// Inclusion of canonical states.
    pub fn leq(&self, o: &Env) -> bool {
        self.vals
            .iter()
            .all(|(v, a)| o.vals.get(v).is_none_or(|b| a.leq(b)))
            && self.sym.leq(&o.sym)
            && self.eqs.leq(&o.eqs)
            && self.reads.leq(&o.reads)
            && self.witness.is_subset(&o.witness)
            && o.ge.is_subset(&self.ge)
    }

    /// Drops everything about `v` but its value.
    pub fn forget_facts(&mut self, v: CellVar) {
        self.sym.forget(v);
        self.eqs.forget(v);
        self.reads.dom.retain(|(x, _)| *x != v);
        self.ge.retain(|(a, b)| *a != v && *b != v);
    }

    /// Whether a guard established `x >= y`.
    pub fn ge_holds(&self, x: CellVar, y: CellVar) -> bool {
        let same = |a: CellVar, b: CellVar| a == b || self.eqs.same(a, b);
        self.ge.iter().any(|(a, b)| same(*a, x) && same(*b, y))
    }

    pub fn show_shape(&self, s: &Shape) -> String {
        match s {
            Shape::Unit => "Unit".into(),
            Shape::Leaf(v) => self.val(*v).to_string(),
            Shape::Pair(a, b) => format!("({}, {})", self.show_shape(a), self.show_shape(b)),
            Shape::Option { tag, some } => {
                format!("option[tag {}]({})", self.val(*tag), self.show_shape(some))
            }
            Shape::Or { tag, left, right } => format!(
                "or[tag {}]({} | {})",
                self.val(*tag),
                self.show_shape(left),
                self.show_shape(right)
            ),
            Shape::List { elems, len } => {
                format!("list[len {}]({})", self.val(*len), self.show_shape(elems))
            }
            Shape::Set { elems, card } => {
                format!("set[card {}]({})", self.val(*card), self.show_shape(elems))
            }
            Shape::Map { keys, vals, card } => format!(
                "map[card {}]({} -> {})",
                self.val(*card),
                self.show_shape(keys),
                self.show_shape(vals)
            ),
            Shape::SMap {
                keys,
                amount,
                namount,
                presence,
                card,
            } => format!(
                "map[card {}]({} -> sender {} if {}, others {})",
                self.val(*card),
                self.show_shape(keys),
                self.val(*amount),
                self.val(*presence),
                self.val(*namount)
            ),
            Shape::Op { target, amount } => {
                format!("transfer({} to {})", self.val(*amount), self.val(*target))
            }
            Shape::Contract { addr } => format!("contract({})", self.val(*addr)),
        }
    }
}

impl Default for Env {
    fn default() -> Self {
        Env::new()
    }
}

fn addr_alpha(addrs: &[String], sender: Option<&str>) -> AddrAbs {
    if addrs.is_empty() {
        return AddrAbs::bottom();
    }
    let rel = match sender {
        Some(s) if addrs.iter().all(|a| a == s) => SenderRel::IsSender,
        Some(s) if addrs.iter().all(|a| a != s) => SenderRel::NotSender,
        _ => SenderRel::Top,
    };
    AddrAbs::new(Consts::of(addrs.iter().cloned()), rel)
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.stack.iter().rev().enumerate() {
            writeln!(f, "{i}: {} = {}", c.ty, self.show_shape(&c.shape))?;
        }
        if !self.eqs.classes().is_empty() {
            writeln!(f, "eq: {}", self.eqs)?;
        }
        Ok(())
    }
}
