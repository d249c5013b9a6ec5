// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lists, sets and maps, including the sender-split view of balance maps.

use crate::domain::{BoolAbs, Bound, Interval, Lattice};
use crate::memory::{AbsVal, CellVar, Env, Init, Shape};
use crate::symbolic::{Expr, Fun, SenderRel, Tri};
use crate::syntax::{Instr, IntKind, Span, Ty};

use super::{leaf, Analyzer};

pub(super) fn eq_same(env: &Env, a: CellVar, b: CellVar) -> bool {
    a == b || env.eqs.same(a, b)
}

/// How an address compares to the current sender.
pub(super) fn sender_tri(a: &AbsVal) -> Tri {
    match a {
        AbsVal::Addr(x) => match x.rel() {
            SenderRel::IsSender => Tri::Eq,
            SenderRel::NotSender => Tri::Neq,
            _ => Tri::Unknown,
        },
        _ => Tri::Unknown,
    }
}

/// Whether two shapes of the same type may hold a common value.
fn may_overlap(env: &Env, a: &Shape, b: &Shape) -> bool {
    a.leaves()
        .into_iter()
        .zip(b.leaves())
        .all(|(x, y)| !env.val(x).meet(env.val(y)).is_bottom())
}

fn nat(i: Interval) -> AbsVal {
    AbsVal::Num(i.meet_kind(IntKind::Nat), IntKind::Nat)
}

fn is_zero(i: &Interval) -> bool {
    *i == Interval::int(0, 0)
}

/// Size after adding a key that is known `absent`, known `present`, or
/// neither.
fn card_insert(card: &Interval, absent: bool, present: bool) -> Interval {
    if present {
        card.clone()
    } else if absent || is_zero(card) {
        card.add(&Interval::int(1, 1))
    } else {
        card.add(&Interval::int(0, 1)).meet(&Interval::at_least(1))
    }
}

fn card_delete(card: &Interval, absent: bool, present: bool) -> Interval {
    if absent {
        card.clone()
    } else if present {
        card.sub(&Interval::int(1, 1)).meet(&Interval::at_least(0))
    } else {
        card.sub(&Interval::int(0, 1)).meet(&Interval::at_least(0))
    }
}

/// `hi(a) <= lo(b)`.
fn below(a: &Interval, b: &Interval) -> bool {
    match (a.hi(), b.lo()) {
        (Some(h), Some(l)) => h <= l,
        _ => true,
    }
}

impl Analyzer<'_> {
    pub(super) fn empty_container(&mut self, env: &mut Env, ty: &Ty) -> Shape {
        let s = env.fresh_shape(
            &mut self.gen,
            ty,
            Init::Bottom,
            self.cfg.sender_split,
            false,
        );
        match &s {
            Shape::List { len: n, .. }
            | Shape::Set { card: n, .. }
            | Shape::Map { card: n, .. } => {
                env.set(*n, nat(Interval::int(0, 0)));
            }
            Shape::SMap { card, presence, .. } => {
                env.set(*card, nat(Interval::int(0, 0)));
                env.set(*presence, AbsVal::Flag(Interval::int(0, 0)));
            }
            _ => unreachable!("not a container"),
        }
        s
    }

    pub(super) fn exec_cons(&mut self, mut env: Env) -> Option<Env> {
        let h = env.pop();
        let l = env.pop();
        let Shape::List { elems, len } = l.shape else {
            panic!("list expected")
        };
        let elems2 = env.copy_shape(&mut self.gen, &elems, true, false);
        env.join_into(&elems2, &h.shape);
        let n = env.itv(len).add(&Interval::int(1, 1));
        let len2 = env.leaf(&mut self.gen, nat(n), false);
        self.bind(
            &mut env,
            len2,
            Expr::app(Fun::Add, vec![Expr::Var(len), Expr::int(1)]),
        );
        env.push(
            l.ty,
            Shape::List {
                elems: Box::new(elems2),
                len: len2,
            },
        );
        Some(env)
    }

    pub(super) fn exec_size(&mut self, mut env: Env) -> Option<Env> {
        let c = env.pop();
        let n = match c.shape {
            Shape::List { len, .. } => len,
            Shape::Set { card, .. } | Shape::Map { card, .. } | Shape::SMap { card, .. } => card,
            other => panic!("SIZE on {other:?}"),
        };
        let v = env.leaf(&mut self.gen, env.val(n).clone(), false);
        self.link(&mut env, v, n);
        env.push(Ty::Nat, Shape::Leaf(v));
        Some(env)
    }

    pub(super) fn exec_mem(&mut self, mut env: Env) -> Option<Env> {
        let k = env.pop();
        let c = env.pop();
        let b = match &c.shape {
            Shape::Set { elems: keys, card } | Shape::Map { keys, card, .. } => {
                if is_zero(&env.itv(*card)) || !may_overlap(&env, keys, &k.shape) {
                    BoolAbs::False
                } else {
                    BoolAbs::Top
                }
            }
            Shape::SMap {
                namount,
                presence,
                card,
                ..
            } => {
                let eq = match env.itv(*presence) {
                    p if is_zero(&p) => BoolAbs::False,
                    p if p == Interval::int(1, 1) => BoolAbs::True,
                    _ => BoolAbs::Top,
                };
                let neq = if is_zero(&env.itv(*card)) || env.val(*namount).is_bottom() {
                    BoolAbs::False
                } else {
                    BoolAbs::Top
                };
                match sender_tri(env.val(leaf(&k.shape))) {
                    Tri::Eq => eq,
                    Tri::Neq => neq,
                    Tri::Unknown => eq.join(&neq),
                }
            }
            other => panic!("MEM on {other:?}"),
        };
        self.push_leaf(&mut env, Ty::Bool, AbsVal::Bool(b), None);
        Some(env)
    }

    pub(super) fn exec_get(&mut self, mut env: Env) -> Option<Env> {
        let k = env.pop();
        let c = env.pop();
        let Ty::Map(_, vt) = c.ty else {
            panic!("GET on {}", c.ty)
        };
        let (tag, content) = match &c.shape {
            Shape::Map { keys, vals, card } => {
                let t = if is_zero(&env.itv(*card)) || !may_overlap(&env, keys, &k.shape) {
                    Interval::int(0, 0)
                } else {
                    Interval::flag()
                };
                let tag = env.leaf(&mut self.gen, AbsVal::Flag(t), false);
                (tag, env.copy_shape(&mut self.gen, vals, false, false))
            }
            Shape::SMap {
                amount,
                namount,
                presence,
                card,
                ..
            } => {
                let key = leaf(&k.shape);
                let neq_tag = if is_zero(&env.itv(*card)) || env.val(*namount).is_bottom() {
                    Interval::int(0, 0)
                } else {
                    Interval::flag()
                };
                let (tag, v) = match sender_tri(env.val(key)) {
                    Tri::Eq => {
                        let t = env.leaf(&mut self.gen, env.val(*presence).clone(), false);
                        let v = env.leaf(&mut self.gen, env.val(*amount).clone(), false);
                        self.link(&mut env, t, *presence);
                        self.link(&mut env, v, *amount);
                        (t, v)
                    }
                    Tri::Neq => {
                        let t = env.leaf(&mut self.gen, AbsVal::Flag(neq_tag), false);
                        (t, env.leaf(&mut self.gen, env.val(*namount).clone(), false))
                    }
                    Tri::Unknown => {
                        let t = env.itv(*presence).join(&neq_tag);
                        let t = env.leaf(&mut self.gen, AbsVal::Flag(t), false);
                        let a = env.val(*amount).join(env.val(*namount));
                        (t, env.leaf(&mut self.gen, a, false))
                    }
                };
                let rid = self.gen.id();
                env.reads.reads.insert(
                    rid,
                    crate::memory::Read {
                        map: *namount,
                        key,
                        tag: Some(tag),
                    },
                );
                env.reads.dom.insert((v, rid));
                (tag, Shape::Leaf(v))
            }
            other => panic!("GET on {other:?}"),
        };
        env.push(
            Ty::Option(vt),
            Shape::Option {
                tag,
                some: Box::new(content),
            },
        );
        env.reduce().then_some(env)
    }

    pub(super) fn exec_update(&mut self, i: &Instr, mut env: Env) -> Option<Env> {
        let k = env.pop();
        let o = env.pop();
        let c = env.pop();
        let shape = match c.shape {
            Shape::Set { elems, card } => {
                let b = match env.val(leaf(&o.shape)) {
                    AbsVal::Bool(b) => *b,
                    _ => panic!("bool expected"),
                };
                let (ins, del) = (b.may_be(true), b.may_be(false));
                let absent = !may_overlap(&env, &elems, &k.shape);
                let elems2 = env.copy_shape(&mut self.gen, &elems, true, false);
                if ins {
                    env.join_into(&elems2, &k.shape);
                }
                let card2 = self.update_card(&mut env, card, ins, del, absent, false);
                Shape::Set {
                    elems: Box::new(elems2),
                    card: card2,
                }
            }
            Shape::Map { keys, vals, card } => {
                let Shape::Option { tag, some } = &o.shape else {
                    panic!("option expected")
                };
                let t = env.itv(*tag);
                let (ins, del) = (t.contains_i64(1), t.contains_i64(0));
                let absent = !may_overlap(&env, &keys, &k.shape);
                let keys2 = env.copy_shape(&mut self.gen, &keys, true, false);
                let vals2 = env.copy_shape(&mut self.gen, &vals, true, false);
                if ins {
                    env.join_into(&keys2, &k.shape);
                    env.join_into(&vals2, some);
                }
                let card2 = self.update_card(&mut env, card, ins, del, absent, false);
                Shape::Map {
                    keys: Box::new(keys2),
                    vals: Box::new(vals2),
                    card: card2,
                }
            }
            s @ Shape::SMap { .. } => self.update_split(i.span, &mut env, s, &k.shape, &o.shape),
            other => panic!("UPDATE on {other:?}"),
        };
        env.push(c.ty, shape);
        env.reduce().then_some(env)
    }

    fn update_card(
        &mut self,
        env: &mut Env,
        card: CellVar,
        ins: bool,
        del: bool,
        absent: bool,
        present: bool,
    ) -> CellVar {
        let n = env.itv(card);
        let mut r = Interval::Bottom;
        if ins {
            r = r.join(&card_insert(&n, absent, present));
        }
        if del {
            r = r.join(&card_delete(&n, absent, present));
        }
        env.leaf(&mut self.gen, nat(r), false)
    }

    /// `UPDATE` on a sender-split map, dispatched on whether the key is
    /// the sender.
    fn update_split(&mut self, span: Span, env: &mut Env, s: Shape, k: &Shape, o: &Shape) -> Shape {
        let Shape::SMap {
            keys,
            amount,
            namount,
            presence,
            card,
        } = s
        else {
            unreachable!()
        };
        let Shape::Option { tag, some } = o else {
            panic!("option expected")
        };
        let key = leaf(k);
        let v = leaf(some);
        let t = env.itv(*tag);
        let (ins, del) = (t.contains_i64(1), t.contains_i64(0));
        let keys2 = env.copy_shape(&mut self.gen, &keys, true, false);
        if ins {
            env.join_into(&keys2, k);
        }
        let tri = sender_tri(env.val(key));
        let eq = (tri != Tri::Neq).then(|| {
            let a = if ins {
                env.val(v).clone()
            } else {
                AbsVal::bottom(env.val(amount).kind())
            };
            let amount2 = env.leaf(&mut self.gen, a, false);
            if ins && !del {
                self.link(env, amount2, v);
            }
            let p = env.itv(presence);
            let pres2 = env.leaf(
                &mut self.gen,
                AbsVal::Flag(t.meet(&Interval::flag())),
                false,
            );
            self.link(env, pres2, *tag);
            let card2 =
                self.update_card(env, card, ins, del, is_zero(&p), p == Interval::int(1, 1));
            Shape::SMap {
                keys: keys.clone(),
                amount: amount2,
                namount,
                presence: pres2,
                card: card2,
            }
        });
        let neq = (tri != Tri::Eq).then(|| {
            self.owner_witness(span, env, namount, key, v, ins, del);
            let mut a = env.val(namount).clone();
            if ins {
                a = a.join(env.val(v));
            }
            let namount2 = env.leaf(&mut self.gen, a, true);
            if let Some(n) = env.reads.derived.get(&namount).copied() {
                env.reads.derived.insert(namount2, n);
            }
            let absent = env.val(namount).is_bottom();
            let card2 = self.update_card(env, card, ins, del, absent, false);
            Shape::SMap {
                keys: keys.clone(),
                amount,
                namount: namount2,
                presence,
                card: card2,
            }
        });
        let body = match (eq, neq) {
            (Some(e), Some(n)) => {
                let r = env.copy_shape(&mut self.gen, &e, false, false);
                env.join_into(&r, &n);
                if let (Shape::SMap { namount: a, .. }, Shape::SMap { namount: b, .. }) = (&r, &n) {
                    if !env.reads.derived.contains_key(b) {
                        env.reads.derived.remove(a);
                    }
                }
                r
            }
            (Some(e), None) => e,
            (None, Some(n)) => n,
            (None, None) => unreachable!(),
        };
        match body {
            Shape::SMap {
                amount,
                namount,
                presence,
                card,
                ..
            } => Shape::SMap {
                keys: Box::new(keys2),
                amount,
                namount,
                presence,
                card,
            },
            _ => unreachable!(),
        }
    }

    /// Records `span` when writing to a key other than the sender's may
    /// lower that key's balance.
    #[allow(clippy::too_many_arguments)]
    fn owner_witness(
        &mut self,
        span: Span,
        env: &mut Env,
        namount: CellVar,
        key: CellVar,
        v: CellVar,
        ins: bool,
        del: bool,
    ) {
        let nm = env.itv(namount);
        if nm.is_bottom() {
            return;
        }
        let matching: Vec<u32> = env
            .reads
            .reads
            .iter()
            .filter(|(_, r)| eq_same(env, r.map, namount) && eq_same(env, r.key, key))
            .map(|(id, _)| *id)
            .collect();
        let absent = |r: &u32| env.reads.absent.contains(r);
        let dominated = |r: &u32| {
            env.reads
                .dom
                .iter()
                .any(|(w, x)| x == r && eq_same(env, *w, v))
        };
        let mut why = None;
        if ins {
            let vi = env.itv(v);
            let ok = below(&nm, &vi) || matching.iter().any(|r| absent(r) || dominated(r));
            if !ok {
                why = Some(format!(
                    "balance of a non-sender key may be lowered (stores {vi}, others hold {nm})"
                ));
            }
        }
        if del && why.is_none() {
            let ok = nm.hi().is_some_and(|h| *h <= Bound::int(0)) || matching.iter().any(absent);
            if !ok {
                why = Some("a non-sender key holding tokens may be removed".to_string());
            }
        }
        if let Some(d) = why {
            env.witness.insert(span);
            self.witness_detail.entry(span).or_insert(d);
        }
    }
}
