// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Membership of concrete values in abstract states.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::concrete::{CallContext, Value};
use crate::memory::{AbsVal, CellVar, CtxVar, Env, Shape};
use crate::symbolic::{Expr, Fun, Lit};
use crate::syntax::Ty;

/// A concrete scalar, as held by one abstract variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scalar {
    Int(BigInt),
    Bool(bool),
    Str(String),
    Addr(String),
}

fn scalar(v: &Value) -> Option<Scalar> {
    Some(match v {
        Value::Int(n) | Value::Nat(n) | Value::Timestamp(n) => Scalar::Int(n.clone()),
        Value::Mutez(m) => Scalar::Int(BigInt::from(*m)),
        Value::Bool(b) => Scalar::Bool(*b),
        Value::String(s) => Scalar::Str(s.clone()),
        Value::Address(a) | Value::Contract(a) => Scalar::Addr(a.clone()),
        _ => return None,
    })
}

fn in_val(a: &AbsVal, s: &Scalar, sender: &str) -> bool {
    match (a, s) {
        (AbsVal::Num(i, _), Scalar::Int(n)) | (AbsVal::Flag(i), Scalar::Int(n)) => i.contains(n),
        (AbsVal::Bool(b), Scalar::Bool(x)) => b.may_be(*x),
        (AbsVal::Str(c), Scalar::Str(x)) => c.contains(x),
        (AbsVal::Addr(c), Scalar::Addr(x)) => c.contains(x, sender),
        _ => false,
    }
}

fn flag(b: bool) -> Scalar {
    Scalar::Int(BigInt::from(b as u8))
}

/// Whether `v` (of type `ty`) is described by `shape` in `env`, ignoring
/// relational facts.
pub fn contains(env: &Env, shape: &Shape, ty: &Ty, v: &Value, sender: &str) -> bool {
    let has = |x: CellVar, s: &Scalar| in_val(env.val(x), s, sender);
    let count = |n: usize| Scalar::Int(BigInt::from(n));
    match (shape, ty, v) {
        (Shape::Unit, _, Value::Unit) => true,
        (Shape::Leaf(x), _, v) => scalar(v).is_some_and(|s| has(*x, &s)),
        (Shape::Pair(a, b), Ty::Pair(ta, tb), Value::Pair(x, y)) => {
            contains(env, a, ta, x, sender) && contains(env, b, tb, y, sender)
        }
        (Shape::Option { tag, some }, Ty::Option(t), Value::Option(o)) => match o {
            None => has(*tag, &flag(false)),
            Some(x) => has(*tag, &flag(true)) && contains(env, some, t, x, sender),
        },
        (Shape::Or { tag, left, .. }, Ty::Or(t, _), Value::Left(x)) => {
            has(*tag, &flag(false)) && contains(env, left, t, x, sender)
        }
        (Shape::Or { tag, right, .. }, Ty::Or(_, t), Value::Right(x)) => {
            has(*tag, &flag(true)) && contains(env, right, t, x, sender)
        }
        (Shape::List { elems, len }, Ty::List(t), Value::List(xs)) => {
            has(*len, &count(xs.len())) && xs.iter().all(|x| contains(env, elems, t, x, sender))
        }
        (Shape::Set { elems, card }, Ty::Set(t), Value::Set(xs)) => {
            has(*card, &count(xs.len())) && xs.iter().all(|x| contains(env, elems, t, x, sender))
        }
        (Shape::Map { keys, vals, card }, Ty::Map(tk, tv), Value::Map(m)) => {
            has(*card, &count(m.len()))
                && m.iter().all(|(k, x)| {
                    contains(env, keys, tk, k, sender) && contains(env, vals, tv, x, sender)
                })
        }
        (
            Shape::SMap {
                keys,
                amount,
                namount,
                presence,
                card,
            },
            Ty::Map(tk, _),
            Value::Map(m),
        ) => {
            let own = m.get(&Value::Address(sender.to_string()));
            has(*card, &count(m.len()))
                && has(*presence, &flag(own.is_some()))
                && m.iter().all(|(k, x)| {
                    let slot = if *k == Value::Address(sender.to_string()) {
                        amount
                    } else {
                        namount
                    };
                    contains(env, keys, tk, k, sender) && scalar(x).is_some_and(|s| has(*slot, &s))
                })
        }
        (Shape::Op { target, amount }, _, Value::Operation(t)) => {
            has(*target, &Scalar::Addr(t.target.clone()))
                && has(*amount, &Scalar::Int(BigInt::from(t.amount)))
        }
        (Shape::Contract { addr }, _, Value::Contract(a)) => has(*addr, &Scalar::Addr(a.clone())),
        _ => false,
    }
}

/// Values of the strong variables of `shape` that `v` selects.
fn assign(shape: &Shape, v: &Value, sender: &str, out: &mut BTreeMap<CellVar, Scalar>) {
    let count = |n: usize| Scalar::Int(BigInt::from(n));
    match (shape, v) {
        (Shape::Leaf(x), v) => {
            if let Some(s) = scalar(v) {
                out.insert(*x, s);
            }
        }
        (Shape::Pair(a, b), Value::Pair(x, y)) => {
            assign(a, x, sender, out);
            assign(b, y, sender, out);
        }
        (Shape::Option { tag, some }, Value::Option(o)) => {
            out.insert(*tag, flag(o.is_some()));
            if let Some(x) = o {
                assign(some, x, sender, out);
            }
        }
        (Shape::Or { tag, left, .. }, Value::Left(x)) => {
            out.insert(*tag, flag(false));
            assign(left, x, sender, out);
        }
        (Shape::Or { tag, right, .. }, Value::Right(x)) => {
            out.insert(*tag, flag(true));
            assign(right, x, sender, out);
        }
        (Shape::List { len, .. }, Value::List(xs)) => {
            out.insert(*len, count(xs.len()));
        }
        (Shape::Set { card, .. }, Value::Set(xs)) => {
            out.insert(*card, count(xs.len()));
        }
        (Shape::Map { card, .. }, Value::Map(m)) => {
            out.insert(*card, count(m.len()));
        }
        (
            Shape::SMap {
                amount,
                presence,
                card,
                ..
            },
            Value::Map(m),
        ) => {
            out.insert(*card, count(m.len()));
            let own = m.get(&Value::Address(sender.to_string()));
            out.insert(*presence, flag(own.is_some()));
            if let Some(s) = own.and_then(scalar) {
                out.insert(*amount, s);
            }
        }
        (Shape::Op { target, amount }, Value::Operation(t)) => {
            out.insert(*target, Scalar::Addr(t.target.clone()));
            out.insert(*amount, Scalar::Int(BigInt::from(t.amount)));
        }
        (Shape::Contract { addr }, Value::Contract(a)) => {
            out.insert(*addr, Scalar::Addr(a.clone()));
        }
        _ => {}
    }
}

/// Concrete value of a symbolic expression under an assignment.
pub fn eval_concrete(e: &Expr, asg: &BTreeMap<CellVar, Scalar>) -> Option<Scalar> {
    let int = |s: Scalar| match s {
        Scalar::Int(n) => Some(n),
        _ => None,
    };
    let boolean = |s: Scalar| match s {
        Scalar::Bool(b) => Some(b),
        _ => None,
    };
    Some(match e {
        Expr::Var(v) => asg.get(v)?.clone(),
        Expr::Lit(Lit::Int(n)) => Scalar::Int(n.clone()),
        Expr::Lit(Lit::Bool(b)) => Scalar::Bool(*b),
        Expr::Lit(Lit::Str(s)) => Scalar::Str(s.clone()),
        Expr::Lit(Lit::Addr(a)) => Scalar::Addr(a.clone()),
        Expr::App(f, args) => {
            let a: Vec<Scalar> = args
                .iter()
                .map(|x| eval_concrete(x, asg))
                .collect::<Option<_>>()?;
            let mut it = a.into_iter();
            let mut next = || it.next();
            match f {
                Fun::Add => Scalar::Int(int(next()?)? + int(next()?)?),
                Fun::Sub => Scalar::Int(int(next()?)? - int(next()?)?),
                Fun::Mul => Scalar::Int(int(next()?)? * int(next()?)?),
                Fun::Neg => Scalar::Int(-int(next()?)?),
                Fun::Abs => Scalar::Int(int(next()?)?.abs()),
                Fun::Int => Scalar::Int(int(next()?)?),
                Fun::Not => Scalar::Bool(!boolean(next()?)?),
                Fun::And => Scalar::Bool(boolean(next()?)? & boolean(next()?)?),
                Fun::Or => Scalar::Bool(boolean(next()?)? | boolean(next()?)?),
                Fun::Xor => Scalar::Bool(boolean(next()?)? ^ boolean(next()?)?),
                Fun::Compare => {
                    let (x, y) = (next()?, next()?);
                    let c = x.cmp(&y) as i8;
                    Scalar::Int(BigInt::from(c))
                }
                Fun::Test(rel) => Scalar::Bool(rel.holds(int(next()?)?.cmp(&BigInt::zero()))),
            }
        }
    })
}

/// Checks the equality classes and symbolic bindings of `env` against
/// the concrete stack `values` (top last) and context. Returns the first
/// violated fact.
pub fn facts_hold(env: &Env, values: &[Value], ctx: &CallContext) -> Result<(), String> {
    let mut asg = BTreeMap::new();
    for (cell, v) in env.stack.iter().zip(values) {
        assign(&cell.shape, v, &ctx.sender, &mut asg);
    }
    let ctx_vals = [
        (CtxVar::Sender, Scalar::Addr(ctx.sender.clone())),
        (CtxVar::Source, Scalar::Addr(ctx.source.clone())),
        (CtxVar::Amount, Scalar::Int(ctx.amount.into())),
        (CtxVar::Balance, Scalar::Int(ctx.balance.into())),
        (CtxVar::Now, Scalar::Int(ctx.now.clone())),
        (CtxVar::SelfAddress, Scalar::Addr(ctx.self_address.clone())),
    ];
    for (c, s) in ctx_vals {
        asg.insert(CellVar::Ctx(c), s);
    }
    asg.retain(|v, _| !env.is_weak(*v));
    for class in env.eqs.classes() {
        let vals: Vec<(&CellVar, &Scalar)> = class
            .iter()
            .filter_map(|v| asg.get(v).map(|s| (v, s)))
            .collect();
        if let Some(w) = vals.windows(2).find(|w| w[0].1 != w[1].1) {
            return Err(format!(
                "{} = {:?} but {} = {:?} in one class",
                w[0].0, w[0].1, w[1].0, w[1].1
            ));
        }
    }
    for (v, e) in env.sym.bindings() {
        let (Some(x), Some(y)) = (asg.get(v), eval_concrete(e, &asg)) else {
            continue;
        };
        if *x != y {
            return Err(format!("{v} = {x:?} but its binding {e} gives {y:?}"));
        }
    }
    Ok(())
}
