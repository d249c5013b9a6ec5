// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Random well-typed contracts of the subset, and random inputs for them.
//!
//! Code is built by tracking the stack type while emitting source text.
//! Branches always leave the same stack type: each expression pushes
//! exactly one value of a requested type, and each statement keeps the
//! stack type unchanged.

use std::collections::{BTreeMap, BTreeSet};

use michelstat::concrete::{CallContext, Value, MUTEZ_MAX};
use michelstat::syntax::Ty;
use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const ADDRS: [&str; 3] = ["tz1alice", "tz1bob", "tz1carol"];

/// A generated contract with its entry points (name and argument type).
#[derive(Debug, Clone)]
pub struct GenScript {
    pub source: String,
    pub storage: Ty,
    pub entrypoints: Vec<(String, Ty)>,
}

pub struct Gen {
    pub rng: ChaCha8Rng,
    /// Remaining instruction budget for the current script.
    budget: i32,
}

fn map_am() -> Ty {
    Ty::map(Ty::Address, Ty::Mutez)
}

fn pos(st: &[Ty], k: usize) -> &Ty {
    &st[st.len() - 1 - k]
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            budget: 0,
        }
    }

    /// A random call context with sender and source among [`ADDRS`].
    pub fn context(&mut self) -> CallContext {
        CallContext {
            sender: self.pick(&ADDRS).to_string(),
            source: self.pick(&ADDRS).to_string(),
            amount: self.mutez(),
            balance: self.mutez(),
            now: BigInt::from(self.rng.gen_range(-1000..1_000_000i64)),
            ..CallContext::default()
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn pick<T: Clone>(&mut self, xs: &[T]) -> T {
        xs.choose(&mut self.rng).expect("nonempty").clone()
    }

    pub fn ty(&mut self, depth: u32) -> Ty {
        let scalar = [
            Ty::Nat,
            Ty::Int,
            Ty::Mutez,
            Ty::Bool,
            Ty::Address,
            Ty::Unit,
            Ty::String,
        ];
        if depth == 0 || self.chance(0.6) {
            let w = [
                Ty::Nat,
                Ty::Int,
                Ty::Mutez,
                Ty::Nat,
                Ty::Int,
                Ty::Mutez,
                Ty::Bool,
                Ty::Address,
            ];
            return if self.chance(0.9) {
                self.pick(&w)
            } else {
                self.pick(&scalar)
            };
        }
        match self.rng.gen_range(0..8) {
            0 => Ty::pair(self.ty(depth - 1), self.ty(depth - 1)),
            1 => Ty::option(self.ty(depth - 1)),
            2 => Ty::or(self.ty(depth - 1), self.ty(depth - 1)),
            3 => Ty::list(self.ty(depth - 1)),
            4 => Ty::set(self.pick(&[Ty::Nat, Ty::Int, Ty::Address])),
            5 => Ty::map(Ty::Nat, Ty::Int),
            _ => map_am(),
        }
    }

    pub fn big_nat(&mut self) -> BigInt {
        match self.rng.gen_range(0..10) {
            0 => BigInt::from(0),
            1 => BigInt::from(1),
            2..=5 => BigInt::from(self.rng.gen_range(0..20)),
            6 => BigInt::from(self.rng.gen_range(0..300)),
            7 => BigInt::from(self.rng.gen::<u64>()) * BigInt::from(self.rng.gen::<u32>()),
            8 => BigInt::from(MUTEZ_MAX - self.rng.gen_range(0..3)),
            _ => BigInt::from(self.rng.gen::<u32>()),
        }
    }

    pub fn mutez(&mut self) -> u64 {
        match self.rng.gen_range(0..8) {
            0 => 0,
            1 => MUTEZ_MAX,
            2 => MUTEZ_MAX - self.rng.gen_range(1..1000),
            3 => self.rng.gen_range(0..=MUTEZ_MAX),
            4 => self.rng.gen_range(0..1_000_000_000_000),
            _ => self.rng.gen_range(0..100),
        }
    }

    pub fn value(&mut self, ty: &Ty) -> Value {
        match ty {
            Ty::Nat => Value::Nat(self.big_nat()),
            Ty::Int => {
                let n = self.big_nat();
                Value::Int(if self.chance(0.4) { -n } else { n })
            }
            Ty::Mutez => Value::Mutez(self.mutez()),
            Ty::Bool => Value::Bool(self.chance(0.5)),
            Ty::Address => Value::address(self.pick(&ADDRS)),
            Ty::Unit => Value::Unit,
            Ty::String => Value::String(self.pick(&["", "a", "hello"]).into()),
            Ty::Pair(a, b) => Value::pair(self.value(a), self.value(b)),
            Ty::Option(a) => {
                if self.chance(0.5) {
                    Value::Option(None)
                } else {
                    Value::some(self.value(a))
                }
            }
            Ty::Or(a, b) => {
                if self.chance(0.5) {
                    Value::Left(Box::new(self.value(a)))
                } else {
                    Value::Right(Box::new(self.value(b)))
                }
            }
            Ty::List(a) => {
                let n = self.rng.gen_range(0..4);
                Value::List((0..n).map(|_| self.value(a)).collect())
            }
            Ty::Set(a) => {
                let n = self.rng.gen_range(0..4);
                Value::Set((0..n).map(|_| self.value(a)).collect::<BTreeSet<_>>())
            }
            Ty::Map(k, v) => {
                let n = self.rng.gen_range(0..4);
                Value::Map(
                    (0..n)
                        .map(|_| (self.value(k), self.value(v)))
                        .collect::<BTreeMap<_, _>>(),
                )
            }
            other => panic!("no literal for {other}"),
        }
    }

    fn push_lit(&mut self, st: &mut Vec<Ty>, ty: &Ty) -> String {
        let code = match ty {
            Ty::List(a) if self.chance(0.5) => format!("NIL {a}"),
            Ty::Set(a) if self.chance(0.5) => format!("EMPTY_SET {a}"),
            Ty::Map(k, v) if self.chance(0.5) => format!("EMPTY_MAP {k} {v}"),
            Ty::Option(a) if self.chance(0.3) => format!("NONE {a}"),
            Ty::Unit => "UNIT".into(),
            _ => {
                let v = self.value(ty);
                format!("PUSH {ty} {v}")
            }
        };
        st.push(ty.clone());
        code
    }

    /// Code pushing one value of type `ty`.
    pub fn expr(&mut self, st: &mut Vec<Ty>, ty: &Ty, d: u32) -> String {
        self.budget -= 1;
        let dups: Vec<usize> = (0..st.len()).filter(|k| pos(st, *k) == ty).collect();
        if !dups.is_empty() && self.chance(if d == 0 { 0.7 } else { 0.35 }) {
            let k = self.pick(&dups);
            st.push(ty.clone());
            return format!("DUP {}", k + 1);
        }
        if d == 0 || self.budget <= 0 || self.chance(0.15) {
            return self.push_lit(st, ty);
        }
        let d1 = d - 1;
        let r = self.rng.gen_range(0..100);
        if r < 10 {
            return self.cond(st, ty, d1);
        }
        if r < 16 {
            if let Some(c) = self.project(st, ty) {
                return c;
            }
        }
        if r < 24 {
            return self.loop_expr(st, ty, d1);
        }
        if r < 30 {
            return self.destruct(st, ty, d1);
        }
        self.compute(st, ty, d1)
    }

    fn seq(parts: Vec<String>) -> String {
        parts
            .into_iter()
            .filter(|p| !p.is_empty())
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// Applies an operator to operands given top first, giving `out`.
    fn apply(&mut self, st: &mut Vec<Ty>, args: &[Ty], op: &str, out: Ty, d: u32) -> String {
        let mut parts = vec![];
        for a in args.iter().rev() {
            parts.push(self.expr(st, a, d));
        }
        for _ in args {
            st.pop();
        }
        parts.push(op.into());
        st.push(out);
        Self::seq(parts)
    }

    /// Turns an `option ty` on top into `ty`, with a default.
    fn unwrap_or(&mut self, st: &mut Vec<Ty>, ty: &Ty, d: u32) -> String {
        st.pop();
        let mut s2 = st.clone();
        let dflt = if self.chance(0.2) {
            "PUSH string \"none\"; FAILWITH".to_string()
        } else {
            self.expr(&mut s2, ty, d.min(1))
        };
        st.push(ty.clone());
        format!("IF_NONE {{ {dflt} }} {{}}")
    }

    fn compute(&mut self, st: &mut Vec<Ty>, ty: &Ty, d: u32) -> String {
        let (n, i, m, b) = (Ty::Nat, Ty::Int, Ty::Mutez, Ty::Bool);
        match ty {
            Ty::Nat => match self.rng.gen_range(0..11) {
                0 => self.apply(st, &[n.clone(), n.clone()], "ADD", n, d),
                1 => self.apply(st, &[n.clone(), n.clone()], "MUL", n, d),
                2 => self.apply(st, &[i], "ABS", n, d),
                3 => {
                    let c = self.pick(&[
                        Ty::list(Ty::Nat),
                        Ty::set(Ty::Nat),
                        map_am(),
                        Ty::map(Ty::Nat, Ty::Int),
                    ]);
                    self.apply(st, &[c], "SIZE", n, d)
                }
                4 => self.apply(st, &[n.clone(), n.clone()], "LSL", n, d),
                5 => self.apply(st, &[n.clone(), n.clone()], "LSR", n, d),
                6 => {
                    let c = self.apply(
                        st,
                        &[n.clone(), n.clone()],
                        "EDIV",
                        Ty::option(Ty::pair(n.clone(), n.clone())),
                        d,
                    );
                    let u = self.unwrap_or_pair(st, &n, &n, None);
                    format!("{c}; {u}")
                }
                7 => {
                    let c = self.apply(st, &[i], "ISNAT", Ty::option(n.clone()), d);
                    let u = self.unwrap_or(st, &n, d);
                    format!("{c}; {u}")
                }
                8 => self.apply(st, &[n.clone(), n.clone()], "AND", n, d),
                9 => self.apply(st, &[n.clone(), n.clone()], "OR", n, d),
                _ => self.apply(st, &[n.clone(), n.clone()], "XOR", n, d),
            },
            Ty::Int => match self.rng.gen_range(0..9) {
                0 => self.apply(st, &[i.clone(), i.clone()], "ADD", i, d),
                1 => self.apply(st, &[n.clone(), i.clone()], "ADD", i, d),
                2 => self.apply(st, &[i.clone(), i.clone()], "SUB", i, d),
                3 => self.apply(st, &[n.clone(), n.clone()], "SUB", i, d),
                4 => self.apply(st, &[i.clone(), n], "MUL", i, d),
                5 => {
                    let a = self.pick(&[Ty::Nat, Ty::Int]);
                    self.apply(st, &[a], "NEG", i, d)
                }
                6 => self.apply(st, &[n], "INT", i, d),
                7 => {
                    let c = self.apply(
                        st,
                        &[i.clone(), i.clone()],
                        "EDIV",
                        Ty::option(Ty::pair(i.clone(), n.clone())),
                        d,
                    );
                    let u = self.unwrap_or_pair(st, &i, &n, Some(true));
                    format!("{c}; {u}")
                }
                _ => {
                    let c = self.apply(
                        st,
                        &[n, Ty::map(Ty::Nat, Ty::Int)],
                        "GET",
                        Ty::option(i.clone()),
                        d,
                    );
                    let u = self.unwrap_or(st, &i, d);
                    format!("{c}; {u}")
                }
            },
            Ty::Mutez => match self.rng.gen_range(0..9) {
                0 => self.apply(st, &[m.clone(), m.clone()], "ADD", m, d),
                1 => self.apply(st, &[m.clone(), m.clone()], "SUB", m, d),
                2 => self.apply(st, &[m.clone(), n], "MUL", m, d),
                3 => self.apply(st, &[n, m.clone()], "MUL", m, d),
                4 => self.apply(st, &[], "AMOUNT", m, d),
                5 => self.apply(st, &[], "BALANCE", m, d),
                6 => {
                    let c = self.apply(
                        st,
                        &[m.clone(), n],
                        "EDIV",
                        Ty::option(Ty::pair(m.clone(), m.clone())),
                        d,
                    );
                    let u = self.unwrap_or_pair(st, &m, &m, None);
                    format!("{c}; {u}")
                }
                7 => {
                    let c = self.apply(
                        st,
                        &[Ty::Address, map_am()],
                        "GET",
                        Ty::option(m.clone()),
                        d,
                    );
                    let u = self.unwrap_or(st, &m, d);
                    format!("{c}; {u}")
                }
                _ => {
                    let c = self.apply(
                        st,
                        &[m.clone(), m.clone()],
                        "EDIV",
                        Ty::option(Ty::pair(n.clone(), m.clone())),
                        d,
                    );
                    st.pop();
                    st.push(Ty::option(Ty::pair(n, m.clone())));
                    let dflt = self.default_code(st, &m);
                    st.pop();
                    st.push(m);
                    format!("{c}; IF_NONE {{ {dflt} }} {{ CDR }}")
                }
            },
            Ty::Bool => match self.rng.gen_range(0..9) {
                0..=2 => {
                    let t = self.pick(&[
                        Ty::Nat,
                        Ty::Int,
                        Ty::Mutez,
                        Ty::Address,
                        Ty::Bool,
                        Ty::String,
                        Ty::Nat,
                    ]);
                    let rel = self.pick(&["EQ", "NEQ", "LT", "GT", "LE", "GE"]);
                    let c = self.apply(st, &[t.clone(), t], "COMPARE", i, d);
                    st.pop();
                    st.push(b);
                    format!("{c}; {rel}")
                }
                3 => {
                    let rel = self.pick(&["EQ", "NEQ", "LT", "GT", "LE", "GE"]);
                    self.apply(st, &[i], rel, b, d)
                }
                4 => {
                    let op = self.pick(&["AND", "OR", "XOR"]);
                    self.apply(st, &[b.clone(), b.clone()], op, b, d)
                }
                5 => self.apply(st, &[Ty::Bool], "NOT", b, d),
                6 => self.apply(st, &[n, Ty::set(Ty::Nat)], "MEM", b, d),
                7 => self.apply(st, &[Ty::Address, map_am()], "MEM", b, d),
                _ => {
                    let cmp = self.pick(&["CMPLT", "CMPEQ", "CMPGE"]);
                    self.apply(st, &[m.clone(), m], cmp, b, d)
                }
            },
            Ty::Address => {
                let op = self.pick(&["SENDER", "SOURCE", "SELF_ADDRESS", "SENDER"]);
                self.apply(st, &[], op, Ty::Address, d)
            }
            Ty::Pair(a, c) => {
                let (a, c) = ((**a).clone(), (**c).clone());
                self.apply(st, &[a, c], "PAIR", ty.clone(), d)
            }
            Ty::Option(a) => {
                if **a == Ty::Nat && self.chance(0.3) {
                    return self.apply(st, &[Ty::Int], "ISNAT", ty.clone(), d);
                }
                if **a == Ty::Int && self.chance(0.3) {
                    return self.apply(
                        st,
                        &[Ty::Nat, Ty::map(Ty::Nat, Ty::Int)],
                        "GET",
                        ty.clone(),
                        d,
                    );
                }
                if **a == Ty::Mutez && self.chance(0.3) {
                    return self.apply(st, &[Ty::Address, map_am()], "GET", ty.clone(), d);
                }
                self.apply(st, &[(**a).clone()], "SOME", ty.clone(), d)
            }
            Ty::Or(a, c) => {
                if self.chance(0.5) {
                    let op = format!("LEFT {c}");
                    self.apply(st, &[(**a).clone()], &op, ty.clone(), d)
                } else {
                    let op = format!("RIGHT {a}");
                    self.apply(st, &[(**c).clone()], &op, ty.clone(), d)
                }
            }
            Ty::List(a) => {
                if **a == Ty::Nat && self.chance(0.3) {
                    return self.map_expr(st, d);
                }
                self.apply(st, &[(**a).clone(), ty.clone()], "CONS", ty.clone(), d)
            }
            Ty::Set(a) => self.apply(
                st,
                &[(**a).clone(), Ty::Bool, ty.clone()],
                "UPDATE",
                ty.clone(),
                d,
            ),
            Ty::Map(k, v) => self.apply(
                st,
                &[(**k).clone(), Ty::option((**v).clone()), ty.clone()],
                "UPDATE",
                ty.clone(),
                d,
            ),
            _ => self.push_lit(st, ty),
        }
    }

    /// Literal of `ty` pushed on `st`, which is then popped.
    fn default_code(&mut self, st: &[Ty], ty: &Ty) -> String {
        let mut s2 = st.to_vec();
        s2.pop();
        self.push_lit(&mut s2, ty)
    }

    /// `option (pair a b)` on top to `a` or `b`.
    fn unwrap_or_pair(&mut self, st: &mut Vec<Ty>, a: &Ty, b: &Ty, first: Option<bool>) -> String {
        let first = first.unwrap_or_else(|| self.chance(0.5));
        let out = if first { a } else { b };
        let dflt = self.default_code(st, out);
        st.pop();
        st.push(out.clone());
        format!(
            "IF_NONE {{ {dflt} }} {{ {} }}",
            if first { "CAR" } else { "CDR" }
        )
    }

    /// `bool ? e1 : e2`.
    fn cond(&mut self, st: &mut Vec<Ty>, ty: &Ty, d: u32) -> String {
        let c = self.expr(st, &Ty::Bool, d);
        st.pop();
        let mut s1 = st.clone();
        let mut s2 = st.clone();
        let fail = self.chance(0.15);
        let a = self.expr(&mut s1, ty, d);
        let b = if fail {
            "PUSH string \"cond\"; FAILWITH".to_string()
        } else {
            self.expr(&mut s2, ty, d)
        };
        st.push(ty.clone());
        let (a, b) = if self.chance(0.5) { (a, b) } else { (b, a) };
        format!("{c}; IF {{ {a} }} {{ {b} }}")
    }

    /// `DUP k; CAR` or `CDR` from a pair on the stack.
    fn project(&mut self, st: &mut Vec<Ty>, ty: &Ty) -> Option<String> {
        let found: Vec<(usize, &str)> = (0..st.len())
            .flat_map(|k| match pos(st, k) {
                Ty::Pair(a, b) => {
                    let mut v = vec![];
                    if **a == *ty {
                        v.push((k, "CAR"));
                    }
                    if **b == *ty {
                        v.push((k, "CDR"));
                    }
                    v
                }
                _ => vec![],
            })
            .collect();
        let (k, op) = *found.choose(&mut self.rng)?;
        st.push(ty.clone());
        Some(format!("DUP {}; {op}", k + 1))
    }

    /// Case analysis on an option, union or list, giving `ty`.
    fn destruct(&mut self, st: &mut Vec<Ty>, ty: &Ty, d: u32) -> String {
        match self.rng.gen_range(0..3) {
            0 => {
                let inner = self.pick(&[Ty::Nat, Ty::Int, Ty::Mutez, Ty::Address]);
                let c = self.expr(st, &Ty::option(inner.clone()), d);
                st.pop();
                let mut s1 = st.clone();
                let none = self.expr(&mut s1, ty, d);
                let mut s2 = st.clone();
                s2.push(inner);
                let some = self.expr(&mut s2, ty, d);
                st.push(ty.clone());
                format!("{c}; IF_NONE {{ {none} }} {{ {some}; SWAP; DROP }}")
            }
            1 => {
                let l = self.pick(&[Ty::Nat, Ty::Int, Ty::Mutez]);
                let r = self.pick(&[Ty::Bool, Ty::Address, Ty::Nat]);
                let c = self.expr(st, &Ty::or(l.clone(), r.clone()), d);
                st.pop();
                let mut s1 = st.clone();
                s1.push(l);
                let left = self.expr(&mut s1, ty, d);
                let mut s2 = st.clone();
                s2.push(r);
                let right = self.expr(&mut s2, ty, d);
                st.push(ty.clone());
                format!("{c}; IF_LEFT {{ {left}; SWAP; DROP }} {{ {right}; SWAP; DROP }}")
            }
            _ => {
                let e = self.pick(&[Ty::Nat, Ty::Int, Ty::Mutez]);
                let c = self.expr(st, &Ty::list(e.clone()), d);
                st.pop();
                let mut s1 = st.clone();
                s1.push(Ty::list(e.clone()));
                s1.push(e);
                let cons = self.expr(&mut s1, ty, d);
                let mut s2 = st.clone();
                let nil = self.expr(&mut s2, ty, d);
                st.push(ty.clone());
                format!("{c}; IF_CONS {{ {cons}; DUG 2; DROP 2 }} {{ {nil} }}")
            }
        }
    }

    /// A loop computing a value of `ty`.
    fn loop_expr(&mut self, st: &mut Vec<Ty>, ty: &Ty, d: u32) -> String {
        let init = self.expr(st, ty, d);
        match self.rng.gen_range(0..4) {
            0 => {
                // counter on top of the accumulator
                let cnt = self.bounded_int(st);
                let mut s1 = st[..st.len() - 2].to_vec();
                s1.push(Ty::Int);
                s1.push(ty.clone());
                let upd = self.replace(&mut s1, 0, d);
                st.pop();
                format!("{init}; {cnt}; DUP; GT; LOOP {{ PUSH int 1; SWAP; SUB; SWAP; {upd}; SWAP; DUP; GT }}; DROP")
            }
            1 => {
                let cnt = self.bounded_int(st);
                st.pop();
                st.pop();
                let state = Ty::pair(Ty::Int, ty.clone());
                let mut s1 = st.clone();
                s1.push(Ty::Int);
                s1.push(ty.clone());
                let upd = self.replace(&mut s1, 0, d);
                st.push(ty.clone());
                format!(
                    "{init}; {cnt}; PAIR; LEFT {ty}; LOOP_LEFT {{ UNPAIR; DUP; GT; \
                     IF {{ PUSH int 1; SWAP; SUB; SWAP; {upd}; SWAP; PAIR; LEFT {ty} }} {{ DROP; RIGHT {state} }} }}"
                )
            }
            2 => {
                let c = self.pick(&[
                    Ty::list(Ty::Nat),
                    Ty::set(Ty::Int),
                    map_am(),
                    Ty::list(Ty::Mutez),
                ]);
                let elem = match &c {
                    Ty::List(e) | Ty::Set(e) => (**e).clone(),
                    Ty::Map(k, v) => Ty::pair((**k).clone(), (**v).clone()),
                    _ => unreachable!(),
                };
                let src = self.expr(st, &c, d);
                st.pop();
                let mut s1 = st.clone();
                s1.push(elem);
                let step = self.expr(&mut s1, ty, d);
                format!("{init}; {src}; ITER {{ {step}; DUG 2; DROP 2 }}")
            }
            _ => {
                // fold a list through MAP, then keep the old accumulator
                let src = self.expr(st, &Ty::list(Ty::Int), d);
                st.pop();
                let mut s1 = st.clone();
                s1.push(Ty::Int);
                let step = self.expr(&mut s1, &Ty::Int, d);
                format!("{init}; {src}; MAP {{ {step}; SWAP; DROP }}; DROP")
            }
        }
    }

    /// `MAP` over a list of nat.
    fn map_expr(&mut self, st: &mut Vec<Ty>, d: u32) -> String {
        let src = self.expr(st, &Ty::list(Ty::Nat), d);
        st.pop();
        let mut s1 = st.clone();
        s1.push(Ty::Nat);
        let step = self.expr(&mut s1, &Ty::Nat, d);
        st.push(Ty::list(Ty::Nat));
        format!("{src}; MAP {{ {step}; SWAP; DROP }}")
    }

    /// A small int (or an arbitrary one, rarely) for loop counters.
    fn bounded_int(&mut self, st: &mut Vec<Ty>) -> String {
        st.push(Ty::Int);
        if self.chance(0.8) {
            format!("PUSH int {}", self.rng.gen_range(-2..7))
        } else {
            let k = self.rng.gen_range(1..8);
            st.pop();
            let mut s1 = st.clone();
            let e = self.expr(&mut s1, &Ty::Nat, 1);
            st.push(Ty::Int);
            format!("{e}; PUSH nat {k}; SWAP; EDIV; IF_NONE {{ PUSH nat 0 }} {{ CDR }}; INT")
        }
    }

    /// Replaces the value at depth `k` by a new one of the same type.
    pub fn replace(&mut self, st: &mut Vec<Ty>, k: usize, d: u32) -> String {
        let ty = pos(st, k).clone();
        let e = self.expr(st, &ty, d);
        st.pop();
        if k == 0 {
            format!("{e}; SWAP; DROP")
        } else {
            format!("{e}; DIG {}; DROP; DUG {k}", k + 1)
        }
    }

    /// A statement: leaves the stack type unchanged.
    pub fn stmt(&mut self, st: &mut Vec<Ty>, d: u32) -> String {
        let n = st.len();
        match self.rng.gen_range(0..100) {
            0..=54 => {
                let k = self.rng.gen_range(0..n);
                self.replace(st, k, d)
            }
            55..=69 => {
                let c = self.expr(st, &Ty::Bool, d);
                st.pop();
                let ok = if self.chance(0.5) {
                    "{}".to_string()
                } else {
                    format!("{{ {} }}", self.stmt(&mut st.clone(), d.saturating_sub(1)))
                };
                if self.chance(0.5) {
                    format!("{c}; IF {ok} {{ PUSH string \"assert\"; FAILWITH }}")
                } else {
                    format!("{c}; IF {{ PUSH string \"assert\"; FAILWITH }} {ok}")
                }
            }
            70..=77 if n >= 2 => {
                let k = self.rng.gen_range(1..n);
                let mut inner = st[..n - k].to_vec();
                let s = self.stmt(&mut inner, d);
                format!("DIP {k} {{ {s} }}")
            }
            78..=85 => {
                let ty = self.ty(1);
                let e = self.expr(st, &ty, d);
                st.pop();
                format!("{e}; DROP")
            }
            86..=91 if n >= 2 => {
                st.swap(n - 1, n - 2);
                let inner = self.stmt(st, d);
                st.swap(n - 1, n - 2);
                format!("SWAP; {inner}; SWAP")
            }
            _ => {
                let c = self.expr(st, &Ty::Bool, d);
                st.pop();
                let a = self.stmt(&mut st.clone(), d.saturating_sub(1));
                let b = self.stmt(&mut st.clone(), d.saturating_sub(1));
                format!("{c}; IF {{ {a} }} {{ {b} }}")
            }
        }
    }

    /// Code for one entry point: stack `[storage, arg]` to the result.
    fn body(&mut self, storage: &Ty, arg: &Ty, n: usize) -> String {
        let mut st = vec![storage.clone(), arg.clone()];
        let mut parts = vec![];
        for _ in 0..n {
            parts.push(self.stmt(&mut st, 3));
        }
        // bring a storage-typed value to the top and drop the rest
        let j = (0..st.len())
            .find(|k| pos(&st, *k) == storage)
            .expect("storage value");
        if j > 0 {
            parts.push(format!("DIG {j}"));
            let v = st.remove(st.len() - 1 - j);
            st.push(v);
        }
        if st.len() > 1 {
            parts.push(format!("DIP {{ DROP {} }}", st.len() - 1));
        }
        st.clear();
        st.push(storage.clone());
        parts.push("NIL operation".into());
        if self.chance(0.2) {
            st.push(Ty::list(Ty::Operation));
            st.push(Ty::contract(Ty::Unit));
            let amt = self.expr(&mut st, &Ty::Mutez, 1);
            parts.push(format!(
                "SENDER; CONTRACT unit; IF_NONE {{ PUSH string \"no contract\"; FAILWITH }} \
                 {{ {amt}; UNIT; TRANSFER_TOKENS; CONS }}"
            ));
        }
        parts.push("PAIR".into());
        Self::seq(parts)
    }

    pub fn script(&mut self) -> GenScript {
        self.budget = self.rng.gen_range(20..80);
        let storage = if self.chance(0.2) {
            map_am()
        } else if self.chance(0.2) {
            Ty::pair(map_am(), self.ty(0))
        } else {
            self.ty(2)
        };
        let n = self.rng.gen_range(1..6);
        if self.chance(0.35) {
            let a = self.ty(1);
            let b = self.ty(1);
            let ba = self.body(&storage, &a, n);
            let bb = self.body(&storage, &b, n);
            GenScript {
                source: format!(
                    "parameter (or {} {});\nstorage {storage};\ncode {{ UNPAIR; IF_LEFT {{ {ba} }} {{ {bb} }} }}",
                    annot(&a, "a"),
                    annot(&b, "b")
                ),
                storage,
                entrypoints: vec![("a".into(), a), ("b".into(), b)],
            }
        } else {
            let p = self.ty(2);
            let body = self.body(&storage, &p, n);
            GenScript {
                source: format!("parameter {p};\nstorage {storage};\ncode {{ UNPAIR; {body} }}"),
                storage,
                entrypoints: vec![("default".into(), p)],
            }
        }
    }
}

/// `ty` with a field annotation.
fn annot(ty: &Ty, name: &str) -> String {
    let t = ty.to_string();
    match t.strip_prefix('(') {
        Some(rest) => {
            let (head, tail) = rest.split_once(' ').expect("compound type");
            format!("({head} %{name} {tail}")
        }
        None => format!("({t} %{name})"),
    }
}
