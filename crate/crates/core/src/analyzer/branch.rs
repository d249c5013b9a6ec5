// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Conditionals and the refinement of states by guards.

use crate::domain::{assume_cmp, BoolAbs, Consts, Interval, Lattice, Rel};
use crate::memory::{AbsVal, CellVar, Env, Shape};
use crate::symbolic::{AddrAbs, Expr, Fun, Lit, Relation};
use crate::syntax::{Instr, IntKind, Op, Ty};

use super::{compare_vals, leaf, point, Analyzer};

/// Depth bound on backward refinement through expressions.
const REFINE_DEPTH: usize = 8;

impl Analyzer<'_> {
    pub(super) fn exec_branch(
        &mut self,
        i: &Instr,
        mut env: Env,
        a: &[Instr],
        b: &[Instr],
    ) -> Option<Env> {
        let c = env.pop();
        let (ea, eb) = match (&i.op, c.ty, c.shape) {
            (Op::If(..), _, s) => {
                let v = leaf(&s);
                (
                    self.assume_bool(env.clone(), v, true),
                    self.assume_bool(env, v, false),
                )
            }
            (Op::IfNone(..), Ty::Option(t), Shape::Option { tag, some }) => {
                let mut none = env.clone();
                let none = if none.refine_itv(tag, &Interval::int(0, 0)) {
                    let gone: Vec<u32> = none
                        .reads
                        .reads
                        .iter()
                        .filter(|(_, r)| r.tag.is_some_and(|t| t == tag || none.eqs.same(t, tag)))
                        .map(|(id, _)| *id)
                        .collect();
                    none.reads.absent.extend(gone);
                    reduced(none)
                } else {
                    None
                };
                let some_env = if env.refine_itv(tag, &Interval::int(1, 1)) {
                    env.push(*t, *some);
                    reduced(env)
                } else {
                    None
                };
                (none, some_env)
            }
            (Op::IfLeft(..), Ty::Or(tl, tr), Shape::Or { tag, left, right }) => {
                let mut l = env.clone();
                let le = if l.refine_itv(tag, &Interval::int(0, 0)) {
                    l.push(*tl, *left);
                    reduced(l)
                } else {
                    None
                };
                let re = if env.refine_itv(tag, &Interval::int(1, 1)) {
                    env.push(*tr, *right);
                    reduced(env)
                } else {
                    None
                };
                (le, re)
            }
            (Op::IfCons(..), Ty::List(t), Shape::List { elems, len }) => {
                let mut nil = env.clone();
                let nil = if nil.refine_itv(len, &Interval::int(0, 0)) {
                    reduced(nil)
                } else {
                    None
                };
                let cons = if env.refine_itv(len, &Interval::at_least(1)) {
                    let n = env.itv(len).sub(&Interval::int(1, 1));
                    let tl = env.leaf(
                        &mut self.gen,
                        AbsVal::Num(n.meet_kind(IntKind::Nat), IntKind::Nat),
                        false,
                    );
                    self.bind(
                        &mut env,
                        tl,
                        Expr::app(Fun::Sub, vec![Expr::Var(len), Expr::int(1)]),
                    );
                    let head = env.copy_shape(&mut self.gen, &elems, false, false);
                    env.push(Ty::list((*t).clone()), Shape::List { elems, len: tl });
                    env.push(*t, head);
                    reduced(env)
                } else {
                    None
                };
                (cons, nil)
            }
            (op, ty, _) => panic!("ill-typed {} on {ty}", op.name()),
        };
        self.record(i.id, 0, &ea);
        self.record(i.id, 1, &eb);
        let ra = self.exec_seq(a, ea);
        let rb = self.exec_seq(b, eb);
        self.join_at(point(i.id, 0), ra, rb)
    }

    /// Restricts `env` to the states where boolean `v` is `branch`.
    pub(super) fn assume_bool(&self, mut env: Env, v: CellVar, branch: bool) -> Option<Env> {
        if !env.refine(v, &AbsVal::Bool(BoolAbs::of(branch))) {
            return None;
        }
        if self.exp() {
            for r in env.sym.resolve_guard(v, branch) {
                if !apply_rel(&mut env, &r) {
                    return None;
                }
            }
        }
        reduced(env)
    }
}

fn reduced(mut env: Env) -> Option<Env> {
    env.reduce().then_some(env)
}

/// Abstract value of a symbolic expression.
fn eval(env: &Env, e: &Expr) -> Option<AbsVal> {
    let num = |i: Interval| AbsVal::Num(i, IntKind::Int);
    Some(match e {
        Expr::Var(v) => env.vals.get(v)?.clone(),
        Expr::Lit(Lit::Int(n)) => num(Interval::constant(n.clone())),
        Expr::Lit(Lit::Bool(b)) => AbsVal::Bool(BoolAbs::of(*b)),
        Expr::Lit(Lit::Str(s)) => AbsVal::Str(Consts::one(s)),
        Expr::Lit(Lit::Addr(a)) => AbsVal::Addr(AddrAbs::constant(a)),
        Expr::App(f, args) => {
            let a = args
                .iter()
                .map(|x| eval(env, x))
                .collect::<Option<Vec<_>>>()?;
            let itv = |k: usize| a[k].itv().cloned();
            match (f, a.len()) {
                (Fun::Add, 2) => num(itv(0)?.add(&itv(1)?)),
                (Fun::Sub, 2) => num(itv(0)?.sub(&itv(1)?)),
                (Fun::Mul, 2) => num(itv(0)?.mul(&itv(1)?)),
                (Fun::Neg, 1) => num(itv(0)?.neg()),
                (Fun::Abs, 1) => num(itv(0)?.abs()),
                (Fun::Int, 1) => num(itv(0)?),
                (Fun::Compare, 2) => num(compare_vals(&a[0], &a[1])),
                _ => return None,
            }
        }
    })
}

/// Narrows what `e` may evaluate to by `target`. False on ⊥.
fn refine_expr(env: &mut Env, e: &Expr, target: &AbsVal, depth: usize) -> bool {
    if target.is_bottom() {
        return false;
    }
    let same: Vec<CellVar> = env
        .sym
        .bindings()
        .filter(|(_, b)| *b == e)
        .map(|(v, _)| *v)
        .collect();
    for w in same {
        if env.vals.get(&w).is_some_and(|a| {
            a.kind() == target.kind() || a.itv().is_some() && target.itv().is_some()
        }) && !refine_one(env, w, target)
        {
            return false;
        }
    }
    let ti = match target.itv() {
        Some(i) => i.clone(),
        None => {
            return match e {
                Expr::Var(v) => refine_one(env, *v, target),
                _ => true,
            };
        }
    };
    match e {
        Expr::Var(v) => refine_one(env, *v, target),
        Expr::Lit(Lit::Int(n)) => ti.contains(n),
        _ if depth == 0 => true,
        Expr::App(f, args) => {
            let vals: Option<Vec<Interval>> = args
                .iter()
                .map(|x| eval(env, x).and_then(|a| a.itv().cloned()))
                .collect();
            let Some(vals) = vals else { return true };
            let num = |i: Interval| AbsVal::Num(i, IntKind::Int);
            let sub =
                |x: &Expr, i: Interval, env: &mut Env| refine_expr(env, x, &num(i), depth - 1);
            match (f, args.len()) {
                (Fun::Add, 2) => {
                    sub(&args[0], ti.sub(&vals[1]), env) && sub(&args[1], ti.sub(&vals[0]), env)
                }
                (Fun::Sub, 2) => {
                    sub(&args[0], ti.add(&vals[1]), env) && sub(&args[1], vals[0].sub(&ti), env)
                }
                (Fun::Neg, 1) => sub(&args[0], ti.neg(), env),
                (Fun::Int, 1) => sub(&args[0], ti, env),
                _ => true,
            }
        }
        _ => true,
    }
}

fn refine_one(env: &mut Env, v: CellVar, target: &AbsVal) -> bool {
    if env.is_weak(v) {
        return true;
    }
    let Some(cur) = env.vals.get(&v) else {
        return true;
    };
    let t = match (cur, target.itv()) {
        (_, Some(i)) if cur.itv().is_some() => cur.with_itv(i.clone()),
        _ if cur.kind() == target.kind() => target.clone(),
        _ => return true,
    };
    env.refine(v, &t)
}

/// Assumes `lhs rel rhs`. False when no state satisfies it.
pub(super) fn apply_rel(env: &mut Env, r: &Relation) -> bool {
    let (Some(a), Some(b)) = (eval(env, &r.lhs), eval(env, &r.rhs)) else {
        return true;
    };
    let merge = |env: &mut Env| {
        if let (Expr::Var(x), Expr::Var(y)) = (&r.lhs, &r.rhs) {
            if !env.is_weak(*x) && !env.is_weak(*y) {
                env.eqs.merge(*x, *y);
            }
        }
    };
    match (&a, &b) {
        (x, y) if x.itv().is_some() && y.itv().is_some() => {
            let (l, h) = assume_cmp(r.rel, x.itv().unwrap(), y.itv().unwrap());
            if l.is_bottom() || h.is_bottom() {
                return false;
            }
            let num = |i: Interval| AbsVal::Num(i, IntKind::Int);
            if !refine_expr(env, &r.lhs, &num(l), REFINE_DEPTH)
                || !refine_expr(env, &r.rhs, &num(h), REFINE_DEPTH)
            {
                return false;
            }
            if let (Expr::Var(x), Expr::Var(y)) = (&r.lhs, &r.rhs) {
                if !env.is_weak(*x) && !env.is_weak(*y) {
                    match r.rel {
                        Rel::Ge | Rel::Gt => {
                            env.ge.insert((*x, *y));
                        }
                        Rel::Le | Rel::Lt => {
                            env.ge.insert((*y, *x));
                        }
                        Rel::Eq => {
                            env.ge.insert((*x, *y));
                            env.ge.insert((*y, *x));
                        }
                        Rel::Ne => {}
                    }
                }
            }
            if r.rel == Rel::Eq {
                merge(env);
            }
            true
        }
        (AbsVal::Addr(x), AbsVal::Addr(y)) => {
            let (nx, ny) = match r.rel {
                Rel::Eq => {
                    let m = x.meet(y);
                    (m.clone(), m)
                }
                Rel::Ne | Rel::Lt | Rel::Gt => (x.assume_neq(y), y.assume_neq(x)),
                Rel::Le | Rel::Ge => (x.clone(), y.clone()),
            };
            if nx.is_bottom() || ny.is_bottom() {
                return false;
            }
            // order between address constants
            let c = compare_vals(&AbsVal::Addr(nx.clone()), &AbsVal::Addr(ny.clone()));
            if !rel_possible(r.rel, &c) {
                return false;
            }
            let ok = refine_expr(env, &r.lhs, &AbsVal::Addr(nx), 0)
                && refine_expr(env, &r.rhs, &AbsVal::Addr(ny), 0);
            if ok && r.rel == Rel::Eq {
                merge(env);
            }
            ok
        }
        (AbsVal::Str(x), AbsVal::Str(y)) => {
            let (nx, ny) = match r.rel {
                Rel::Eq => {
                    let m = x.meet(y);
                    (m.clone(), m)
                }
                Rel::Ne => (
                    y.singleton().map_or(x.clone(), |s| x.remove(s)),
                    x.singleton().map_or(y.clone(), |s| y.remove(s)),
                ),
                _ => (x.clone(), y.clone()),
            };
            if nx.is_bottom() || ny.is_bottom() {
                return false;
            }
            let c = compare_vals(&AbsVal::Str(nx.clone()), &AbsVal::Str(ny.clone()));
            if !rel_possible(r.rel, &c) {
                return false;
            }
            let ok = refine_expr(env, &r.lhs, &AbsVal::Str(nx), 0)
                && refine_expr(env, &r.rhs, &AbsVal::Str(ny), 0);
            if ok && r.rel == Rel::Eq {
                merge(env);
            }
            ok
        }
        (AbsVal::Bool(x), AbsVal::Bool(y)) => {
            let mut nx = BoolAbs::Bot;
            let mut ny = BoolAbs::Bot;
            for p in [false, true] {
                for q in [false, true] {
                    if x.may_be(p) && y.may_be(q) && r.rel.holds(p.cmp(&q)) {
                        nx = nx.join(&BoolAbs::of(p));
                        ny = ny.join(&BoolAbs::of(q));
                    }
                }
            }
            if nx.is_bottom() {
                return false;
            }
            refine_expr(env, &r.lhs, &AbsVal::Bool(nx), 0)
                && refine_expr(env, &r.rhs, &AbsVal::Bool(ny), 0)
        }
        _ => true,
    }
}

/// Whether some comparison outcome in `c` satisfies `rel`.
fn rel_possible(rel: Rel, c: &Interval) -> bool {
    !assume_cmp(rel, c, &Interval::int(0, 0)).0.is_bottom() && !c.is_bottom()
}
