// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::ast::{Instr, Op, Script, Span};
use super::types::{Ty, TyAst};
use crate::concrete::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TcError {
    #[error("{span}: {op} needs {need} stack elements, found {found}")]
    StackTooShort {
        span: Span,
        op: &'static str,
        need: usize,
        found: usize,
    },
    #[error("{span}: ill-typed {op}: {msg}")]
    TypeMismatch {
        span: Span,
        op: &'static str,
        msg: String,
    },
    #[error("{span}: branches of {op} end with different stacks: {left} vs {right}")]
    BranchMismatch {
        span: Span,
        op: &'static str,
        left: String,
        right: String,
    },
    #[error("{span}: instruction after FAILWITH is unreachable")]
    FailNotInTail { span: Span },
    #[error("{span}: bad literal: {msg}")]
    Literal { span: Span, msg: String },
    #[error("invalid type: {0}")]
    InvalidType(String),
    #[error("final stack must be [{expected}], found {found}")]
    FinalStack { expected: Ty, found: String },
    #[error("duplicate entry point {0:?}")]
    DuplicateEntrypoint(String),
}

/// Which side of an `or` to take on the way to an entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Entrypoint {
    pub name: String,
    pub ty: Ty,
    pub path: Vec<Side>,
}

/// Result stack of an instruction. `Failed` is the type of code that
/// never returns (after `FAILWITH`); it unifies with every stack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StackOut {
    Stack(Vec<Ty>),
    Failed,
}

#[derive(Debug, Clone)]
pub struct TypedScript {
    pub storage: Ty,
    pub parameter: Ty,
    pub parameter_ast: TyAst,
    pub entrypoints: Vec<Entrypoint>,
    pub code: Vec<Instr>,
    pub code_span: Span,
    /// Input stack (top last) and output of every instruction, by id.
    pub stack_types: BTreeMap<u32, (Vec<Ty>, StackOut)>,
}

impl TypedScript {
    pub fn entrypoint(&self, name: &str) -> Option<&Entrypoint> {
        self.entrypoints.iter().find(|e| e.name == name)
    }
}

/// Leaves of the parameter's `or` tree. Unannotated leaves are named by
/// their path (`L`/`R` letters); a parameter without `or` has a single
/// `default` entry point.
pub fn entrypoints_of(param: &TyAst) -> Result<Vec<Entrypoint>, TcError> {
    fn go(t: &TyAst, path: &mut Vec<Side>, out: &mut Vec<Entrypoint>) {
        if let Ty::Or(..) = t.ty {
            for (side, child) in [(Side::Left, &t.children[0]), (Side::Right, &t.children[1])] {
                path.push(side);
                go(child, path, out);
                path.pop();
            }
        } else {
            let name = t.field.clone().unwrap_or_else(|| {
                path.iter()
                    .map(|s| if *s == Side::Left { 'L' } else { 'R' })
                    .collect()
            });
            out.push(Entrypoint {
                name,
                ty: t.ty.clone(),
                path: path.clone(),
            });
        }
    }
    if !matches!(param.ty, Ty::Or(..)) {
        return Ok(vec![Entrypoint {
            name: "default".into(),
            ty: param.ty.clone(),
            path: vec![],
        }]);
    }
    let mut out = Vec::new();
    go(param, &mut vec![], &mut out);
    for (i, e) in out.iter().enumerate() {
        if out[..i].iter().any(|o| o.name == e.name) {
            return Err(TcError::DuplicateEntrypoint(e.name.clone()));
        }
    }
    Ok(out)
}

pub fn typecheck(script: &Script) -> Result<TypedScript, TcError> {
    let storage = script.storage.ty.clone();
    let parameter = script.parameter.ty.clone();
    for t in [&storage, &parameter] {
        t.validate().map_err(TcError::InvalidType)?;
        if t.contains_operation() {
            return Err(TcError::InvalidType(format!(
                "{t} contains operation or contract and cannot be stored or passed"
            )));
        }
    }
    let entrypoints = entrypoints_of(&script.parameter)?;
    let mut tc = Checker {
        annots: BTreeMap::new(),
    };
    let input = vec![Ty::pair(parameter.clone(), storage.clone())];
    let out = tc.seq(&script.code, input)?;
    let expected = Ty::pair(Ty::list(Ty::Operation), storage.clone());
    if let StackOut::Stack(s) = &out {
        if s.len() != 1 || s[0] != expected {
            return Err(TcError::FinalStack {
                expected,
                found: show_stack(s),
            });
        }
    }
    Ok(TypedScript {
        storage,
        parameter,
        parameter_ast: script.parameter.clone(),
        entrypoints,
        code: script.code.clone(),
        code_span: script.code_span,
        stack_types: tc.annots,
    })
}

pub fn show_stack(s: &[Ty]) -> String {
    let items: Vec<String> = s.iter().rev().map(|t| t.to_string()).collect();
    format!("[{}]", items.join(" : "))
}

struct Checker {
    annots: BTreeMap<u32, (Vec<Ty>, StackOut)>,
}

type R<T> = Result<T, TcError>;

impl Checker {
    fn seq(&mut self, code: &[Instr], mut stack: Vec<Ty>) -> R<StackOut> {
        for (k, i) in code.iter().enumerate() {
            match self.instr(i, stack)? {
                StackOut::Stack(s) => stack = s,
                StackOut::Failed => {
                    if let Some(next) = code.get(k + 1) {
                        return Err(TcError::FailNotInTail { span: next.span });
                    }
                    return Ok(StackOut::Failed);
                }
            }
        }
        Ok(StackOut::Stack(stack))
    }

    fn instr(&mut self, i: &Instr, stack: Vec<Ty>) -> R<StackOut> {
        let input = stack.clone();
        let out = self.instr_inner(i, stack)?;
        self.annots.insert(i.id, (input, out.clone()));
        Ok(out)
    }

    fn merge(i: &Instr, a: StackOut, b: StackOut) -> R<StackOut> {
        match (a, b) {
            (StackOut::Failed, x) | (x, StackOut::Failed) => Ok(x),
            (StackOut::Stack(x), StackOut::Stack(y)) => {
                if x == y {
                    Ok(StackOut::Stack(x))
                } else {
                    Err(TcError::BranchMismatch {
                        span: i.span,
                        op: i.op.name(),
                        left: show_stack(&x),
                        right: show_stack(&y),
                    })
                }
            }
        }
    }

    fn instr_inner(&mut self, i: &Instr, mut st: Vec<Ty>) -> R<StackOut> {
        let name = i.op.name();
        let span = i.span;
        let need = |st: &Vec<Ty>, n: usize| -> R<()> {
            if st.len() < n {
                Err(TcError::StackTooShort {
                    span,
                    op: name,
                    need: n,
                    found: st.len(),
                })
            } else {
                Ok(())
            }
        };
        let bad = |msg: String| TcError::TypeMismatch {
            span,
            op: name,
            msg,
        };
        let top_err = |st: &[Ty], n: usize| {
            let items: Vec<String> = st.iter().rev().take(n).map(|t| t.to_string()).collect();
            TcError::TypeMismatch {
                span,
                op: name,
                msg: format!("unsupported operand types [{}]", items.join(" : ")),
            }
        };
        macro_rules! pop {
            () => {
                st.pop().unwrap()
            };
        }

        match &i.op {
            Op::Push(t, d) => {
                t.validate().map_err(TcError::InvalidType)?;
                if !t.is_pushable() {
                    return Err(bad(format!("cannot push a value of type {t}")));
                }
                Value::from_data(d, t).map_err(|msg| TcError::Literal { span, msg })?;
                st.push(t.clone());
            }
            Op::Unit => st.push(Ty::Unit),
            Op::Drop(n) => {
                need(&st, *n)?;
                st.truncate(st.len() - n);
            }
            Op::Dup(n) => {
                need(&st, *n)?;
                let t = st[st.len() - n].clone();
                st.push(t);
            }
            Op::Swap => {
                need(&st, 2)?;
                let l = st.len();
                st.swap(l - 1, l - 2);
            }
            Op::Dig(n) => {
                need(&st, n + 1)?;
                let t = st.remove(st.len() - 1 - n);
                st.push(t);
            }
            Op::Dug(n) => {
                need(&st, n + 1)?;
                let t = pop!();
                let at = st.len() - n;
                st.insert(at, t);
            }
            Op::Dip(n, body) => {
                need(&st, *n)?;
                let top = st.split_off(st.len() - n);
                match self.seq(body, st)? {
                    StackOut::Stack(mut s) => {
                        s.extend(top);
                        st = s;
                    }
                    StackOut::Failed => return Ok(StackOut::Failed),
                }
            }
            Op::Pair => {
                need(&st, 2)?;
                let a = pop!();
                let b = pop!();
                st.push(Ty::pair(a, b));
            }
            Op::Unpair | Op::Car | Op::Cdr => {
                need(&st, 1)?;
                match pop!() {
                    Ty::Pair(a, b) => match i.op {
                        Op::Unpair => {
                            st.push(*b);
                            st.push(*a);
                        }
                        Op::Car => st.push(*a),
                        _ => st.push(*b),
                    },
                    t => return Err(bad(format!("expected a pair, found {t}"))),
                }
            }
            Op::Some => {
                need(&st, 1)?;
                let a = pop!();
                st.push(Ty::option(a));
            }
            Op::None(t) => {
                t.validate().map_err(TcError::InvalidType)?;
                st.push(Ty::option(t.clone()))
            }
            Op::Left(t) | Op::Right(t) => {
                need(&st, 1)?;
                t.validate().map_err(TcError::InvalidType)?;
                let a = pop!();
                st.push(if matches!(i.op, Op::Left(_)) {
                    Ty::or(a, t.clone())
                } else {
                    Ty::or(t.clone(), a)
                });
            }
            Op::Nil(t) => {
                t.validate().map_err(TcError::InvalidType)?;
                st.push(Ty::list(t.clone()))
            }
            Op::EmptySet(t) => {
                let s = Ty::set(t.clone());
                s.validate().map_err(TcError::InvalidType)?;
                st.push(s)
            }
            Op::EmptyMap(k, v) => {
                let m = Ty::map(k.clone(), v.clone());
                m.validate().map_err(TcError::InvalidType)?;
                st.push(m)
            }
            Op::Cons => {
                need(&st, 2)?;
                let h = pop!();
                match pop!() {
                    Ty::List(e) if *e == h => st.push(Ty::List(e)),
                    t => return Err(bad(format!("cannot cons {h} onto {t}"))),
                }
            }
            Op::IfNone(none_b, some_b) => {
                need(&st, 1)?;
                let Ty::Option(a) = pop!() else {
                    return Err(bad("expected an option".into()));
                };
                let l = self.seq(none_b, st.clone())?;
                let mut s2 = st;
                s2.push(*a);
                let r = self.seq(some_b, s2)?;
                return Self::merge(i, l, r);
            }
            Op::IfLeft(lb, rb) => {
                need(&st, 1)?;
                let Ty::Or(a, b) = pop!() else {
                    return Err(bad("expected an or".into()));
                };
                let mut s1 = st.clone();
                s1.push(*a);
                let mut s2 = st;
                s2.push(*b);
                let l = self.seq(lb, s1)?;
                let r = self.seq(rb, s2)?;
                return Self::merge(i, l, r);
            }
            Op::IfCons(cb, nb) => {
                need(&st, 1)?;
                let Ty::List(e) = pop!() else {
                    return Err(bad("expected a list".into()));
                };
                let mut s1 = st.clone();
                s1.push(Ty::List(e.clone()));
                s1.push(*e);
                let l = self.seq(cb, s1)?;
                let r = self.seq(nb, st)?;
                return Self::merge(i, l, r);
            }
            Op::If(tb, fb) => {
                need(&st, 1)?;
                if pop!() != Ty::Bool {
                    return Err(bad("expected a bool".into()));
                }
                let l = self.seq(tb, st.clone())?;
                let r = self.seq(fb, st)?;
                return Self::merge(i, l, r);
            }
            Op::Mem => {
                need(&st, 2)?;
                let k = pop!();
                match pop!() {
                    Ty::Set(e) if *e == k => st.push(Ty::Bool),
                    Ty::Map(mk, _) if *mk == k => st.push(Ty::Bool),
                    t => return Err(bad(format!("MEM of {k} in {t}"))),
                }
            }
            Op::Get => {
                need(&st, 2)?;
                let k = pop!();
                match pop!() {
                    Ty::Map(mk, v) if *mk == k => st.push(Ty::Option(v)),
                    t => return Err(bad(format!("GET of {k} in {t}"))),
                }
            }
            Op::Update => {
                need(&st, 3)?;
                let k = pop!();
                let v = pop!();
                let c = pop!();
                match (&c, &v) {
                    (Ty::Set(e), Ty::Bool) if **e == k => st.push(c),
                    (Ty::Map(mk, mv), Ty::Option(o)) if **mk == k && o == mv => st.push(c),
                    _ => return Err(bad(format!("UPDATE {k} {v} in {c}"))),
                }
            }
            Op::Size => {
                need(&st, 1)?;
                match pop!() {
                    Ty::List(_) | Ty::Set(_) | Ty::Map(..) | Ty::String => st.push(Ty::Nat),
                    t => return Err(bad(format!("SIZE of {t}"))),
                }
            }
            Op::Iter(body) => {
                need(&st, 1)?;
                let elem = match pop!() {
                    Ty::List(e) | Ty::Set(e) => *e,
                    Ty::Map(k, v) => Ty::Pair(k, v),
                    t => return Err(bad(format!("cannot iterate over {t}"))),
                };
                let mut s1 = st.clone();
                s1.push(elem);
                match self.seq(body, s1)? {
                    StackOut::Stack(s) if s == st => {}
                    StackOut::Failed => {}
                    StackOut::Stack(s) => {
                        return Err(bad(format!(
                            "body must end with {}, found {}",
                            show_stack(&st),
                            show_stack(&s)
                        )))
                    }
                }
            }
            Op::Map(body) => {
                need(&st, 1)?;
                let Ty::List(e) = pop!() else {
                    return Err(bad("MAP expects a list".into()));
                };
                let mut s1 = st.clone();
                s1.push(*e);
                match self.seq(body, s1)? {
                    StackOut::Stack(mut s) => {
                        if s.len() != st.len() + 1 || s[..st.len()] != st[..] {
                            return Err(bad(format!(
                                "body must end with one new element on {}, found {}",
                                show_stack(&st),
                                show_stack(&s)
                            )));
                        }
                        let out = s.pop().unwrap();
                        st.push(Ty::list(out));
                    }
                    StackOut::Failed => {
                        return Err(bad("MAP body always fails; result type unknown".into()))
                    }
                }
            }
            Op::Loop(body) => {
                need(&st, 1)?;
                if pop!() != Ty::Bool {
                    return Err(bad("expected a bool".into()));
                }
                let mut want = st.clone();
                want.push(Ty::Bool);
                match self.seq(body, st.clone())? {
                    StackOut::Stack(s) if s == want => {}
                    StackOut::Failed => {}
                    StackOut::Stack(s) => {
                        return Err(bad(format!(
                            "body must end with {}, found {}",
                            show_stack(&want),
                            show_stack(&s)
                        )))
                    }
                }
            }
            Op::LoopLeft(body) => {
                need(&st, 1)?;
                let top = pop!();
                let Ty::Or(a, b) = top.clone() else {
                    return Err(bad("expected an or".into()));
                };
                let mut s1 = st.clone();
                s1.push(*a);
                let mut want = st.clone();
                want.push(top);
                match self.seq(body, s1)? {
                    StackOut::Stack(s) if s == want => {}
                    StackOut::Failed => {}
                    StackOut::Stack(s) => {
                        return Err(bad(format!(
                            "body must end with {}, found {}",
                            show_stack(&want),
                            show_stack(&s)
                        )))
                    }
                }
                st.push(*b);
            }
            Op::Seq(body) => return self.seq(body, st),
            Op::Failwith => {
                need(&st, 1)?;
                let t = pop!();
                if t.contains_operation() {
                    return Err(bad(format!("cannot fail with a value of type {t}")));
                }
                return Ok(StackOut::Failed);
            }
            Op::Add
            | Op::Sub
            | Op::Mul
            | Op::Ediv
            | Op::Lsl
            | Op::Lsr
            | Op::And
            | Op::Or
            | Op::Xor => {
                need(&st, 2)?;
                let a = pop!();
                let b = pop!();
                let r = binop_type(&i.op, &a, &b).ok_or_else(|| {
                    let mut s = st.clone();
                    s.push(b.clone());
                    s.push(a.clone());
                    top_err(&s, 2)
                })?;
                st.push(r);
            }
            Op::Neg
            | Op::Abs
            | Op::IsNat
            | Op::Int
            | Op::Not
            | Op::Eq
            | Op::Neq
            | Op::Lt
            | Op::Gt
            | Op::Le
            | Op::Ge => {
                need(&st, 1)?;
                let a = pop!();
                let r = unop_type(&i.op, &a).ok_or_else(|| bad(format!("operand of type {a}")))?;
                st.push(r);
            }
            Op::Compare => {
                need(&st, 2)?;
                let a = pop!();
                let b = pop!();
                if a != b || !a.is_comparable() {
                    return Err(bad(format!("cannot compare {a} with {b}")));
                }
                st.push(Ty::Int);
            }
            Op::Sender | Op::Source | Op::SelfAddress => st.push(Ty::Address),
            Op::Amount | Op::Balance => st.push(Ty::Mutez),
            Op::Now => st.push(Ty::Timestamp),
            Op::Contract(t) => {
                need(&st, 1)?;
                t.validate().map_err(TcError::InvalidType)?;
                if pop!() != Ty::Address {
                    return Err(bad("expected an address".into()));
                }
                st.push(Ty::option(Ty::contract(t.clone())));
            }
            Op::TransferTokens => {
                need(&st, 3)?;
                let arg = pop!();
                let amount = pop!();
                let c = pop!();
                match c {
                    Ty::Contract(p) if *p == arg && amount == Ty::Mutez => st.push(Ty::Operation),
                    c => return Err(bad(format!("TRANSFER_TOKENS {arg} {amount} {c}"))),
                }
            }
        }
        Ok(StackOut::Stack(st))
    }
}

/// Result type of a binary arithmetic/bitwise instruction, top operand first.
pub fn binop_type(op: &Op, a: &Ty, b: &Ty) -> Option<Ty> {
    use Ty::*;
    Some(match (op, a, b) {
        (Op::Add, Nat, Nat) => Nat,
        (Op::Add, Nat | Int, Nat | Int) => Int,
        (Op::Add, Timestamp, Int) | (Op::Add, Int, Timestamp) => Timestamp,
        (Op::Add, Mutez, Mutez) => Mutez,
        (Op::Sub, Nat | Int, Nat | Int) => Int,
        (Op::Sub, Timestamp, Int) => Timestamp,
        (Op::Sub, Timestamp, Timestamp) => Int,
        (Op::Sub, Mutez, Mutez) => Mutez,
        (Op::Mul, Nat, Nat) => Nat,
        (Op::Mul, Nat | Int, Nat | Int) => Int,
        (Op::Mul, Mutez, Nat) | (Op::Mul, Nat, Mutez) => Mutez,
        (Op::Ediv, Nat, Nat) => Ty::option(Ty::pair(Nat, Nat)),
        (Op::Ediv, Nat | Int, Nat | Int) => Ty::option(Ty::pair(Int, Nat)),
        (Op::Ediv, Mutez, Nat) => Ty::option(Ty::pair(Mutez, Mutez)),
        (Op::Ediv, Mutez, Mutez) => Ty::option(Ty::pair(Nat, Mutez)),
        (Op::Lsl | Op::Lsr, Nat, Nat) => Nat,
        (Op::And | Op::Or | Op::Xor, Bool, Bool) => Bool,
        (Op::And | Op::Or | Op::Xor, Nat, Nat) => Nat,
        (Op::And, Int, Nat) => Nat,
        _ => return None,
    })
}

pub fn unop_type(op: &Op, a: &Ty) -> Option<Ty> {
    use Ty::*;
    Some(match (op, a) {
        (Op::Neg, Int | Nat) => Int,
        (Op::Abs, Int) => Nat,
        (Op::IsNat, Int) => Ty::option(Nat),
        (Op::Int, Nat) => Int,
        (Op::Not, Bool) => Bool,
        (Op::Not, Int | Nat) => Int,
        (Op::Eq | Op::Neq | Op::Lt | Op::Gt | Op::Le | Op::Ge, Int) => Bool,
        _ => return None,
    })
}
