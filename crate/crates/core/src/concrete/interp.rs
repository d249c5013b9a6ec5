// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::value::{Transfer, Value, MUTEZ_MAX};
use crate::syntax::{Instr, Op, Side, Span, Ty, TypedScript};

/// Default instruction budget of a single call.
pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Largest shift amount accepted by `LSL`/`LSR`.
pub const MAX_SHIFT: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallContext {
    pub sender: String,
    pub source: String,
    pub amount: u64,
    pub balance: u64,
    pub now: BigInt,
    pub self_address: String,
    /// Parameter types of known originated contracts, for `CONTRACT`.
    pub contracts: BTreeMap<String, Ty>,
}

impl Default for CallContext {
    fn default() -> Self {
        CallContext {
            sender: "tz1sender".into(),
            source: "tz1sender".into(),
            amount: 0,
            balance: 0,
            now: BigInt::zero(),
            self_address: "KT1self".into(),
            contracts: BTreeMap::new(),
        }
    }
}

/// Addresses of implicit accounts (no code, accept `unit`).
pub fn is_implicit(addr: &str) -> bool {
    addr.starts_with("tz")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Failure {
    #[error("{span}: script failed with {value}")]
    FailWith { value: Value, span: Span },
    #[error("{span}: mutez overflow")]
    MutezOverflow { span: Span },
    #[error("{span}: shift overflow")]
    ShiftOverflow { span: Span },
    #[error("out of fuel")]
    OutOfFuel,
    #[error("unknown entry point {0:?}")]
    UnknownEntrypoint(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("transfer to unknown contract {0}")]
    UnknownTarget(String),
    /// A stack shape or type error at run time; unreachable on
    /// typechecked scripts.
    #[error("{span}: ill-typed stack at {op}: {msg}")]
    Stuck {
        span: Span,
        op: &'static str,
        msg: String,
    },
}

impl Failure {
    /// True for failures produced by the script itself, as opposed to
    /// resource limits or bad inputs.
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            Failure::FailWith { .. }
                | Failure::MutezOverflow { .. }
                | Failure::ShiftOverflow { .. }
        )
    }
}

type Tracer<'a> = &'a mut dyn FnMut(&Instr, &[Value]);

/// Big-step interpreter. The stack top is the last element.
pub struct Interp<'a> {
    ctx: &'a CallContext,
    fuel: u64,
    check: Option<&'a TypedScript>,
    tracer: Option<Tracer<'a>>,
}

impl<'a> Interp<'a> {
    pub fn new(ctx: &'a CallContext) -> Self {
        Interp {
            ctx,
            fuel: DEFAULT_FUEL,
            check: None,
            tracer: None,
        }
    }

    pub fn with_fuel(mut self, fuel: u64) -> Self {
        self.fuel = fuel;
        self
    }

    /// Checks every intermediate stack against the typing annotations.
    pub fn checking_types(mut self, script: &'a TypedScript) -> Self {
        self.check = Some(script);
        self
    }

    /// Calls `f` with each instruction and its input stack.
    pub fn tracing(mut self, f: Tracer<'a>) -> Self {
        self.tracer = Some(f);
        self
    }

    pub fn fuel_left(&self) -> u64 {
        self.fuel
    }

    /// Runs the script's code on a full parameter value.
    pub fn run(
        &mut self,
        script: &TypedScript,
        param: Value,
        storage: Value,
    ) -> Result<(Vec<Transfer>, Value), Failure> {
        if !param.has_type(&script.parameter) {
            return Err(Failure::BadInput(format!(
                "{param} is not a {}",
                script.parameter
            )));
        }
        if !storage.has_type(&script.storage) {
            return Err(Failure::BadInput(format!(
                "{storage} is not a {}",
                script.storage
            )));
        }
        let mut stack = vec![Value::pair(param, storage)];
        self.exec(&script.code, &mut stack)?;
        let stuck = |msg: &str| Failure::Stuck {
            span: script.code_span,
            op: "code",
            msg: msg.into(),
        };
        match stack.pop() {
            Some(Value::Pair(ops, st)) if stack.is_empty() => {
                let Value::List(ops) = *ops else {
                    return Err(stuck("operation list expected"));
                };
                let ops = ops
                    .into_iter()
                    .map(|o| match o {
                        Value::Operation(t) => Ok(*t),
                        _ => Err(stuck("operation expected")),
                    })
                    .collect::<Result<_, _>>()?;
                Ok((ops, *st))
            }
            _ => Err(stuck("final stack")),
        }
    }

    pub fn exec(&mut self, code: &[Instr], stack: &mut Vec<Value>) -> Result<(), Failure> {
        for i in code {
            self.step(i, stack)?;
        }
        Ok(())
    }

    fn step(&mut self, i: &Instr, st: &mut Vec<Value>) -> Result<(), Failure> {
        if self.fuel == 0 {
            return Err(Failure::OutOfFuel);
        }
        self.fuel -= 1;
        if let Some(t) = self.tracer.as_mut() {
            t(i, st);
        }
        if let Some(script) = self.check {
            check_stack(script, i, st)?;
        }
        let span = i.span;
        let op = i.op.name();
        let stuck = |msg: &str| Failure::Stuck {
            span,
            op,
            msg: msg.into(),
        };
        macro_rules! pop {
            () => {
                st.pop().ok_or_else(|| stuck("stack too short"))?
            };
        }
        macro_rules! num {
            ($v:expr) => {
                $v.as_int().ok_or_else(|| stuck("number expected"))?
            };
        }
        let mutez = |n: BigInt| -> Result<Value, Failure> {
            n.to_u64()
                .filter(|m| *m <= MUTEZ_MAX)
                .map(Value::Mutez)
                .ok_or(Failure::MutezOverflow { span })
        };

        match &i.op {
            Op::Push(t, d) => st.push(Value::from_data(d, t).map_err(|m| stuck(&m))?),
            Op::Unit => st.push(Value::Unit),
            Op::Drop(n) => {
                if st.len() < *n {
                    return Err(stuck("stack too short"));
                }
                st.truncate(st.len() - n);
            }
            Op::Dup(n) => {
                let v = st.len().checked_sub(*n).map(|k| st[k].clone());
                st.push(v.ok_or_else(|| stuck("stack too short"))?);
            }
            Op::Swap => {
                let a = pop!();
                let b = pop!();
                st.push(a);
                st.push(b);
            }
            Op::Dig(n) => {
                let k = st
                    .len()
                    .checked_sub(n + 1)
                    .ok_or_else(|| stuck("stack too short"))?;
                let v = st.remove(k);
                st.push(v);
            }
            Op::Dug(n) => {
                let v = pop!();
                let k = st
                    .len()
                    .checked_sub(*n)
                    .ok_or_else(|| stuck("stack too short"))?;
                st.insert(k, v);
            }
            Op::Dip(n, body) => {
                let k = st
                    .len()
                    .checked_sub(*n)
                    .ok_or_else(|| stuck("stack too short"))?;
                let top = st.split_off(k);
                self.exec(body, st)?;
                st.extend(top);
            }
            Op::Pair => {
                let a = pop!();
                let b = pop!();
                st.push(Value::pair(a, b));
            }
            Op::Unpair | Op::Car | Op::Cdr => {
                let Value::Pair(a, b) = pop!() else {
                    return Err(stuck("pair expected"));
                };
                match i.op {
                    Op::Unpair => {
                        st.push(*b);
                        st.push(*a);
                    }
                    Op::Car => st.push(*a),
                    _ => st.push(*b),
                }
            }
            Op::Some => {
                let a = pop!();
                st.push(Value::some(a));
            }
            Op::None(_) => st.push(Value::Option(None)),
            Op::Left(_) => {
                let a = pop!();
                st.push(Value::Left(Box::new(a)));
            }
            Op::Right(_) => {
                let a = pop!();
                st.push(Value::Right(Box::new(a)));
            }
            Op::Nil(_) => st.push(Value::List(vec![])),
            Op::EmptySet(_) => st.push(Value::Set(Default::default())),
            Op::EmptyMap(..) => st.push(Value::Map(Default::default())),
            Op::Cons => {
                let h = pop!();
                let Value::List(mut l) = pop!() else {
                    return Err(stuck("list expected"));
                };
                l.insert(0, h);
                st.push(Value::List(l));
            }
            Op::IfNone(a, b) => match pop!() {
                Value::Option(None) => self.exec(a, st)?,
                Value::Option(Some(v)) => {
                    st.push(*v);
                    self.exec(b, st)?
                }
                _ => return Err(stuck("option expected")),
            },
            Op::IfLeft(a, b) => match pop!() {
                Value::Left(v) => {
                    st.push(*v);
                    self.exec(a, st)?
                }
                Value::Right(v) => {
                    st.push(*v);
                    self.exec(b, st)?
                }
                _ => return Err(stuck("or expected")),
            },
            Op::IfCons(a, b) => {
                let Value::List(mut l) = pop!() else {
                    return Err(stuck("list expected"));
                };
                if l.is_empty() {
                    self.exec(b, st)?
                } else {
                    let h = l.remove(0);
                    st.push(Value::List(l));
                    st.push(h);
                    self.exec(a, st)?
                }
            }
            Op::If(a, b) => match pop!() {
                Value::Bool(true) => self.exec(a, st)?,
                Value::Bool(false) => self.exec(b, st)?,
                _ => return Err(stuck("bool expected")),
            },
            Op::Mem => {
                let k = pop!();
                let r = match pop!() {
                    Value::Set(s) => s.contains(&k),
                    Value::Map(m) => m.contains_key(&k),
                    _ => return Err(stuck("set or map expected")),
                };
                st.push(Value::Bool(r));
            }
            Op::Get => {
                let k = pop!();
                let Value::Map(m) = pop!() else {
                    return Err(stuck("map expected"));
                };
                st.push(Value::Option(m.get(&k).map(|v| Box::new(v.clone()))));
            }
            Op::Update => {
                let k = pop!();
                let v = pop!();
                match (pop!(), v) {
                    (Value::Set(mut s), Value::Bool(b)) => {
                        if b {
                            s.insert(k);
                        } else {
                            s.remove(&k);
                        }
                        st.push(Value::Set(s));
                    }
                    (Value::Map(mut m), Value::Option(o)) => {
                        match o {
                            Some(v) => m.insert(k, *v),
                            None => m.remove(&k),
                        };
                        st.push(Value::Map(m));
                    }
                    _ => return Err(stuck("set or map expected")),
                }
            }
            Op::Size => {
                let n = match pop!() {
                    Value::List(l) => l.len(),
                    Value::Set(s) => s.len(),
                    Value::Map(m) => m.len(),
                    Value::String(s) => s.len(),
                    _ => return Err(stuck("sized value expected")),
                };
                st.push(Value::nat(n as u64));
            }
            Op::Iter(body) => {
                let items: Vec<Value> = match pop!() {
                    Value::List(l) => l,
                    Value::Set(s) => s.into_iter().collect(),
                    Value::Map(m) => m.into_iter().map(|(k, v)| Value::pair(k, v)).collect(),
                    _ => return Err(stuck("collection expected")),
                };
                for x in items {
                    st.push(x);
                    self.exec(body, st)?;
                }
            }
            Op::Map(body) => {
                let Value::List(l) = pop!() else {
                    return Err(stuck("list expected"));
                };
                let mut out = Vec::with_capacity(l.len());
                for x in l {
                    st.push(x);
                    self.exec(body, st)?;
                    out.push(pop!());
                }
                st.push(Value::List(out));
            }
            Op::Loop(body) => loop {
                match pop!() {
                    Value::Bool(true) => self.exec(body, st)?,
                    Value::Bool(false) => break,
                    _ => return Err(stuck("bool expected")),
                }
            },
            Op::LoopLeft(body) => loop {
                match pop!() {
                    Value::Left(v) => {
                        st.push(*v);
                        self.exec(body, st)?
                    }
                    Value::Right(v) => {
                        st.push(*v);
                        break;
                    }
                    _ => return Err(stuck("or expected")),
                }
            },
            Op::Failwith => {
                let value = pop!();
                return Err(Failure::FailWith { value, span });
            }
            Op::Add | Op::Sub | Op::Mul => {
                let a = pop!();
                let b = pop!();
                let (x, y) = (num!(a), num!(b));
                let r = match i.op {
                    Op::Add => x + y,
                    Op::Sub => x - y,
                    _ => x * y,
                };
                let v = match (&i.op, &a, &b) {
                    (_, Value::Mutez(_), _) | (Op::Mul, _, Value::Mutez(_)) => mutez(r)?,
                    (Op::Add | Op::Mul, Value::Nat(_), Value::Nat(_)) => Value::Nat(r),
                    (_, Value::Timestamp(_), Value::Int(_))
                    | (Op::Add, Value::Int(_), Value::Timestamp(_)) => Value::Timestamp(r),
                    _ => Value::Int(r),
                };
                st.push(v);
            }
            Op::Ediv => {
                let a = pop!();
                let b = pop!();
                let (x, y) = (num!(a), num!(b));
                if y.is_zero() {
                    st.push(Value::Option(None));
                } else {
                    let (q, r) = ediv(&x, &y);
                    let pair = match (&a, &b) {
                        (Value::Mutez(_), Value::Nat(_)) => Value::pair(mutez(q)?, mutez(r)?),
                        (Value::Mutez(_), Value::Mutez(_)) => Value::pair(Value::Nat(q), mutez(r)?),
                        (Value::Nat(_), Value::Nat(_)) => Value::pair(Value::Nat(q), Value::Nat(r)),
                        _ => Value::pair(Value::Int(q), Value::Nat(r)),
                    };
                    st.push(Value::some(pair));
                }
            }
            Op::Lsl | Op::Lsr => {
                let a = pop!();
                let b = pop!();
                let (x, s) = (num!(a), num!(b));
                let s = s
                    .to_u32()
                    .filter(|s| *s <= MAX_SHIFT)
                    .ok_or(Failure::ShiftOverflow { span })?;
                st.push(Value::Nat(if matches!(i.op, Op::Lsl) {
                    x << s
                } else {
                    x >> s
                }));
            }
            Op::And | Op::Or | Op::Xor => {
                let a = pop!();
                let b = pop!();
                let v = match (a, b) {
                    (Value::Bool(x), Value::Bool(y)) => Value::Bool(match i.op {
                        Op::And => x && y,
                        Op::Or => x || y,
                        _ => x ^ y,
                    }),
                    (a, b) => {
                        let (x, y) = (num!(a), num!(b));
                        Value::Nat(match i.op {
                            Op::And => x & y,
                            Op::Or => x | y,
                            _ => x ^ y,
                        })
                    }
                };
                st.push(v);
            }
            Op::Not => {
                let v = match pop!() {
                    Value::Bool(b) => Value::Bool(!b),
                    a => Value::Int(-num!(a) - 1),
                };
                st.push(v);
            }
            Op::Neg => {
                let a = pop!();
                st.push(Value::Int(-num!(a)));
            }
            Op::Abs => {
                let a = pop!();
                st.push(Value::Nat(num!(a).abs()));
            }
            Op::IsNat => {
                let x = num!(pop!());
                st.push(Value::Option(if x.sign() == Sign::Minus {
                    None
                } else {
                    Some(Box::new(Value::Nat(x)))
                }));
            }
            Op::Int => {
                let x = num!(pop!());
                st.push(Value::Int(x));
            }
            Op::Compare => {
                let a = pop!();
                let b = pop!();
                st.push(Value::int(a.cmp(&b) as i64));
            }
            Op::Eq | Op::Neq | Op::Lt | Op::Gt | Op::Le | Op::Ge => {
                let x = num!(pop!());
                let z = BigInt::zero();
                st.push(Value::Bool(match i.op {
                    Op::Eq => x == z,
                    Op::Neq => x != z,
                    Op::Lt => x < z,
                    Op::Gt => x > z,
                    Op::Le => x <= z,
                    _ => x >= z,
                }));
            }
            Op::Sender => st.push(Value::Address(self.ctx.sender.clone())),
            Op::Source => st.push(Value::Address(self.ctx.source.clone())),
            Op::SelfAddress => st.push(Value::Address(self.ctx.self_address.clone())),
            Op::Amount => st.push(Value::Mutez(self.ctx.amount)),
            Op::Balance => st.push(Value::Mutez(self.ctx.balance)),
            Op::Now => st.push(Value::Timestamp(self.ctx.now.clone())),
            Op::Contract(t) => {
                let Value::Address(a) = pop!() else {
                    return Err(stuck("address expected"));
                };
                let ok = match self.ctx.contracts.get(&a) {
                    Some(p) => p == t,
                    None => is_implicit(&a) && *t == Ty::Unit,
                };
                st.push(Value::Option(ok.then(|| Box::new(Value::Contract(a)))));
            }
            Op::TransferTokens => {
                let arg = pop!();
                let Value::Mutez(amount) = pop!() else {
                    return Err(stuck("mutez expected"));
                };
                let Value::Contract(target) = pop!() else {
                    return Err(stuck("contract expected"));
                };
                st.push(Value::Operation(Box::new(Transfer {
                    target,
                    amount,
                    arg,
                })));
            }
            Op::Seq(body) => self.exec(body, st)?,
        }
        Ok(())
    }
}

/// Euclidean division: `a = b*q + r` with `0 <= r < |b|`. `b` is non-zero.
pub fn ediv(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    let r = a.mod_floor(&b.abs());
    let q = (a - &r) / b;
    (q, r)
}

fn check_stack(script: &TypedScript, i: &Instr, st: &[Value]) -> Result<(), Failure> {
    let Some((tys, _)) = script.stack_types.get(&i.id) else {
        return Ok(());
    };
    let bad = tys.len() != st.len() || tys.iter().zip(st).any(|(t, v)| !v.has_type(t));
    if bad {
        return Err(Failure::Stuck {
            span: i.span,
            op: i.op.name(),
            msg: "stack differs from its typing annotation".into(),
        });
    }
    Ok(())
}

/// Wraps an entry point argument into the full parameter value.
pub fn wrap_arg(path: &[Side], arg: Value) -> Value {
    path.iter().rev().fold(arg, |v, side| match side {
        Side::Left => Value::Left(Box::new(v)),
        Side::Right => Value::Right(Box::new(v)),
    })
}

/// Runs one entry point of `script`.
pub fn run_contract(
    script: &TypedScript,
    entrypoint: &str,
    arg: Value,
    storage: Value,
    ctx: &CallContext,
) -> Result<(Vec<Transfer>, Value), Failure> {
    let ep = script
        .entrypoint(entrypoint)
        .ok_or_else(|| Failure::UnknownEntrypoint(entrypoint.into()))?;
    if !arg.has_type(&ep.ty) {
        return Err(Failure::BadInput(format!("{arg} is not a {}", ep.ty)));
    }
    Interp::new(ctx).run(script, wrap_arg(&ep.path, arg), storage)
}
