// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Loops: widening fixpoints with optional narrowing, and exact
//! iteration over small containers.

use crate::domain::{Bound, Interval};
use crate::memory::{AbsVal, Cell, Env, Init, Shape};
use crate::syntax::{Instr, IntKind, Ty};

use super::{leaf, point, Analyzer, MAX_ROUNDS};

#[derive(Clone, Copy)]
enum Body<'b> {
    Loop(&'b [Instr]),
    LoopLeft(&'b [Instr]),
    /// `ITER` or `MAP`; the container (and the accumulator of `MAP`)
    /// sit on top of `dipped`.
    Each(&'b [Instr], bool),
}

impl Analyzer<'_> {
    pub(super) fn exec_loop(&mut self, i: &Instr, env: Env, body: &[Instr]) -> Option<Env> {
        let exit = |a: &mut Self, mut x: Env| {
            let v = leaf(&x.pop().shape);
            a.assume_bool(x, v, false)
        };
        let first = exit(self, env.clone());
        let (_, fx) = self.fixpoint(i, env, Body::Loop(body))?;
        let last = fx.and_then(|x| exit(self, x));
        self.join_at(point(i.id, 2), first, last)
    }

    pub(super) fn exec_loop_left(&mut self, i: &Instr, env: Env, body: &[Instr]) -> Option<Env> {
        let exit = |mut x: Env| {
            let c = x.pop();
            let (Ty::Or(_, tr), Shape::Or { tag, right, .. }) = (c.ty, c.shape) else {
                panic!("or expected")
            };
            if !x.refine_itv(tag, &Interval::int(1, 1)) {
                return None;
            }
            x.push(*tr, *right);
            x.reduce().then_some(x)
        };
        let first = exit(env.clone());
        let (_, fx) = self.fixpoint(i, env, Body::LoopLeft(body))?;
        self.join_at(point(i.id, 2), first, fx.and_then(exit))
    }

    pub(super) fn exec_iter(
        &mut self,
        i: &Instr,
        mut env: Env,
        body: &[Instr],
        map: bool,
    ) -> Option<Env> {
        let c = env.pop();
        let n = match &c.shape {
            Shape::List { len, .. } => *len,
            Shape::Set { card, .. } | Shape::Map { card, .. } | Shape::SMap { card, .. } => *card,
            other => panic!("cannot iterate over {other:?}"),
        };
        let count = env.itv(n);
        if map {
            let ty = self.out_ty(i);
            let acc = self.map_acc(&mut env, &ty, &c.shape);
            env.dipped.push(c);
            env.dipped.push(Cell { ty, shape: acc });
        } else {
            env.dipped.push(c);
        }
        let p = point(i.id, 1);
        let kind = Body::Each(body, map);
        let out = match (count.lo(), count.hi()) {
            (Some(Bound::Finite(lo)), Some(Bound::Finite(hi)))
                if *hi <= num_bigint::BigInt::from(self.cfg.unroll) =>
            {
                let (lo, hi): (u64, u64) = (lo.try_into().unwrap_or(0), hi.try_into().unwrap_or(0));
                let mut s = Some(env);
                let mut out = None;
                for k in 0..=hi {
                    if k >= lo {
                        out = self.join_at(p, out, s.clone());
                    }
                    if k < hi {
                        s = s.and_then(|e| self.step(i, kind, e));
                    }
                }
                out
            }
            _ => {
                let (x, fx) = self.fixpoint(i, env, kind)?;
                if count.contains_i64(0) {
                    x
                } else {
                    fx
                }
            }
        };
        let mut out = out?;
        if map {
            let acc = out.dipped.pop().expect("accumulator");
            let src = out.dipped.pop().expect("container");
            Self::acc_sizes(&mut out, &acc.shape, Some(&src.shape));
            out.push(acc.ty, acc.shape);
        } else {
            out.dipped.pop();
        }
        out.reduce().then_some(out)
    }

    /// Result of `MAP` before any iteration: the keys of the input, no
    /// values and size 0. The size is set by `acc_sizes` on exit, so that
    /// the state stays consistent while the body runs.
    fn map_acc(&mut self, env: &mut Env, ty: &Ty, src: &Shape) -> Shape {
        let acc = env.fresh_shape(
            &mut self.gen,
            ty,
            Init::Bottom,
            self.cfg.sender_split,
            false,
        );
        match (&acc, src) {
            (Shape::List { .. }, Shape::List { .. }) => {}
            (
                Shape::Map { keys, .. } | Shape::SMap { keys, .. },
                Shape::Map { keys: k, .. } | Shape::SMap { keys: k, .. },
            ) => env.join_into(keys, k),
            _ => panic!("MAP on {src:?}"),
        }
        Self::acc_sizes(env, &acc, None);
        acc
    }

    /// Sets the size of a `MAP` result to that of its input `src`, or to
    /// 0 without one.
    fn acc_sizes(env: &mut Env, acc: &Shape, src: Option<&Shape>) {
        let size = |env: &Env, s: Option<&Shape>| match s {
            Some(
                Shape::List { len: n, .. }
                | Shape::Map { card: n, .. }
                | Shape::SMap { card: n, .. },
            ) => env.itv(*n),
            _ => Interval::int(0, 0),
        };
        let n = size(env, src);
        match acc {
            Shape::List { len: v, .. } | Shape::Map { card: v, .. } => {
                env.set(*v, AbsVal::Num(n, IntKind::Nat))
            }
            Shape::SMap { card, presence, .. } => {
                let p = match src {
                    Some(Shape::SMap { presence: q, .. }) => env.itv(*q),
                    _ if n == Interval::int(0, 0) => Interval::int(0, 0),
                    _ => Interval::flag(),
                };
                env.set(*card, AbsVal::Num(n, IntKind::Nat));
                env.set(*presence, AbsVal::Flag(p));
            }
            other => panic!("MAP into {other:?}"),
        }
    }

    /// The state entering the body from a loop-head state `x`.
    fn enter(&mut self, kind: Body, mut x: Env) -> Option<Env> {
        match kind {
            Body::Loop(_) => {
                let v = leaf(&x.pop().shape);
                self.assume_bool(x, v, true)
            }
            Body::LoopLeft(_) => {
                let c = x.pop();
                let (Ty::Or(tl, _), Shape::Or { tag, left, .. }) = (c.ty, c.shape) else {
                    panic!("or expected")
                };
                if !x.refine_itv(tag, &Interval::int(0, 0)) {
                    return None;
                }
                x.push(*tl, *left);
                x.reduce().then_some(x)
            }
            Body::Each(..) => Some(x),
        }
    }

    /// One run of the body from body-entry state `x`, giving a loop-head
    /// state.
    fn step(&mut self, i: &Instr, kind: Body, mut x: Env) -> Option<Env> {
        match kind {
            Body::Loop(body) | Body::LoopLeft(body) => {
                self.record(i.id, 0, &Some(x.clone()));
                self.exec_seq(body, Some(x))
            }
            Body::Each(body, map) => {
                let at = x.dipped.len() - 1 - map as usize;
                let c = x.dipped[at].clone();
                let (ty, elem) = self.element(&mut x, &c);
                x.push(ty, elem);
                self.record(i.id, 0, &Some(x.clone()));
                let mut out = self.exec_seq(body, Some(x))?;
                if map {
                    let r = out.pop();
                    let acc = out.dipped.last().expect("accumulator").shape.clone();
                    match &acc {
                        Shape::List { elems, .. } => out.join_into(elems, &r.shape),
                        Shape::Map { vals, .. } => out.join_into(vals, &r.shape),
                        Shape::SMap {
                            amount, namount, ..
                        } => {
                            let v = leaf(&r.shape);
                            out.join_into(&Shape::Leaf(*amount), &Shape::Leaf(v));
                            out.join_into(&Shape::Leaf(*namount), &Shape::Leaf(v));
                        }
                        other => panic!("MAP into {other:?}"),
                    }
                }
                Some(out)
            }
        }
    }

    fn step_enter(&mut self, i: &Instr, kind: Body, x: Env) -> Option<Env> {
        let h = self.step(i, kind, x)?;
        self.enter(kind, h)
    }

    /// A fresh copy of one element of container `c`.
    fn element(&mut self, env: &mut Env, c: &Cell) -> (Ty, Shape) {
        match (&c.ty, &c.shape) {
            (Ty::List(t) | Ty::Set(t), Shape::List { elems, .. } | Shape::Set { elems, .. }) => (
                (**t).clone(),
                env.copy_shape(&mut self.gen, elems, false, false),
            ),
            (Ty::Map(kt, vt), Shape::Map { keys, vals, .. }) => {
                let k = env.copy_shape(&mut self.gen, keys, false, false);
                let v = env.copy_shape(&mut self.gen, vals, false, false);
                (
                    Ty::pair((**kt).clone(), (**vt).clone()),
                    Shape::Pair(Box::new(k), Box::new(v)),
                )
            }
            (
                Ty::Map(kt, vt),
                Shape::SMap {
                    keys,
                    amount,
                    namount,
                    ..
                },
            ) => {
                let k = env.copy_shape(&mut self.gen, keys, false, false);
                let a = env.val(*amount).join(env.val(*namount));
                let v = env.leaf(&mut self.gen, a, false);
                (
                    Ty::pair((**kt).clone(), (**vt).clone()),
                    Shape::Pair(Box::new(k), Box::new(Shape::Leaf(v))),
                )
            }
            (ty, _) => panic!("cannot iterate over {ty}"),
        }
    }

    /// Least post-fixpoint (up to widening) of `x = enter(head) ⊔
    /// enter(F(x))` over body-entry states, narrowed `cfg.narrow` times,
    /// with the body's output on it. Guards are applied before joining so
    /// that their symbolic form is not lost. Alarms come from the last
    /// run of the body. `None` when the analysis stopped.
    fn fixpoint(&mut self, i: &Instr, head: Env, kind: Body) -> Option<(Option<Env>, Option<Env>)> {
        let p = point(i.id, 1);
        let Some(entry) = self.enter(kind, head) else {
            return Some((None, None));
        };
        let entry = entry.canonicalize(p);
        let saved = (
            self.alarms.clone(),
            self.fails.clone(),
            self.witness_detail.clone(),
            self.branches.clone(),
        );
        let mut x = entry.clone();
        let mut round = 0;
        loop {
            if self.out_of_time() {
                return None;
            }
            let next = match self.step_enter(i, kind, x.clone()) {
                Some(fx) => entry.join(&fx.canonicalize(p)),
                None => entry.clone(),
            };
            if next.leq(&x) {
                break;
            }
            x = if round < self.cfg.widening_delay {
                x.join(&next)
            } else {
                x.widen(&next)
            };
            round += 1;
            if round > MAX_ROUNDS {
                self.aborted = Some(format!("loop at {} did not stabilize", i.span));
                return None;
            }
        }
        for _ in 0..self.cfg.narrow {
            let next = match self.step_enter(i, kind, x.clone()) {
                Some(fx) => entry.join(&fx.canonicalize(p)),
                None => entry.clone(),
            };
            if next == x {
                break;
            }
            x = next;
        }
        (self.alarms, self.fails, self.witness_detail, self.branches) = saved;
        let fx = self.step(i, kind, x.clone());
        Some((Some(x), fx))
    }
}
