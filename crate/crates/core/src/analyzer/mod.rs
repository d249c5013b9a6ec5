// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Abstract execution of typed scripts: transfer functions, branch and
//! loop fixpoints, entry points and the multi-call storage fixpoint.

mod branch;
mod calls;
mod collections;
mod gamma;
mod loops;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use serde::Serialize;

use crate::concrete::Value;
use crate::domain::{
    assume_sign, itv_binop, itv_compare, BinOp, BoolAbs, Consts, Interval, Lattice, Rel,
};
use crate::memory::{AbsVal, CellVar, CtxVar, Env, Gen, Init, Shape};
use crate::symbolic::{AddrAbs, Expr, Fun, Lit, SenderRel, Tri};
use crate::syntax::{binop_type, Instr, IntKind, Op, Span, StackOut, Ty, TypedScript};

pub use calls::{analyze, one_more_call, storage_lines};
pub use calls::{Analysis, EntrypointOutcome, OpsSummary, STORAGE_POINT};
pub use gamma::{contains, eval_concrete, facts_hold, Scalar};

/// Abstract domains enabled on top of the structural ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Domains {
    #[serde(rename = "intv")]
    Intv,
    #[serde(rename = "intv+exp")]
    IntvExp,
}

impl fmt::Display for Domains {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domains::Intv => "intv",
            Domains::IntvExp => "intv+exp",
        })
    }
}

impl std::str::FromStr for Domains {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "intv" => Ok(Domains::Intv),
            "intv+exp" => Ok(Domains::IntvExp),
            _ => Err(format!(
                "unknown domain set `{s}` (expected intv or intv+exp)"
            )),
        }
    }
}

/// Storage the first call starts from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialStorage {
    /// The empty value of the storage type; addresses are unknown.
    Default,
    /// Any value of the storage type.
    Arbitrary,
    Value(Value),
}

#[derive(Debug, Clone)]
pub struct Config {
    pub domains: Domains,
    pub sender_split: bool,
    pub multi_call: bool,
    pub narrow: u32,
    pub widening_delay: u32,
    /// Containers of at most this many elements are iterated exactly.
    pub unroll: u64,
    pub max_amount: Option<u64>,
    pub storage: InitialStorage,
    pub timeout: Option<Duration>,
    /// Keep the state at the entry of every branch.
    pub record_branches: bool,
    /// Check every stack against the typing annotations (panics).
    pub check_types: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            domains: Domains::IntvExp,
            sender_split: false,
            multi_call: false,
            narrow: 0,
            widening_delay: 1,
            unroll: 8,
            max_amount: None,
            storage: InitialStorage::Default,
            timeout: None,
            record_branches: false,
            check_types: false,
        }
    }
}

/// Bound on fixpoint rounds; widening stabilizes far earlier.
pub const MAX_ROUNDS: u32 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Category {
    #[serde(rename = "mutez-overflow")]
    MutezOverflow,
    #[serde(rename = "shift-overflow")]
    ShiftOverflow,
    #[serde(rename = "always-fail")]
    AlwaysFail,
    #[serde(rename = "owner-decrease-violation")]
    OwnerDecrease,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::MutezOverflow,
        Category::ShiftOverflow,
        Category::AlwaysFail,
        Category::OwnerDecrease,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::MutezOverflow => "mutez-overflow",
            Category::ShiftOverflow => "shift-overflow",
            Category::AlwaysFail => "always-fail",
            Category::OwnerDecrease => "owner-decrease-violation",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alarm {
    pub category: Category,
    pub span: Span,
    pub entrypoint: String,
    pub detail: String,
}

impl fmt::Display for Alarm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} in {}: {}",
            self.span, self.category, self.entrypoint, self.detail
        )
    }
}

/// Name of a join point of instruction `id`.
fn point(id: u32, k: u32) -> u32 {
    id * 8 + k
}

fn leaf(s: &Shape) -> CellVar {
    match s {
        Shape::Leaf(v) => *v,
        other => panic!("expected a scalar cell, found {other:?}"),
    }
}

/// One abstract interpretation of a script.
pub struct Analyzer<'a> {
    pub script: &'a TypedScript,
    pub cfg: &'a Config,
    pub gen: Gen,
    pub alarms: BTreeMap<(Category, Span), Alarm>,
    /// `FAILWITH` instructions reached by a non-⊥ state.
    pub fails: BTreeSet<Span>,
    /// Details of owner-decrease witnesses, by update position.
    pub witness_detail: BTreeMap<Span, String>,
    /// States at branch entries, by instruction id and branch (0 = first).
    pub branches: BTreeMap<(u32, u8), Env>,
    pub entrypoint: String,
    deadline: Option<Instant>,
    /// Why the analysis stopped early, if it did.
    pub aborted: Option<String>,
    pub warnings: Vec<String>,
    /// Some transfer may target a contract other than this one or the
    /// caller.
    pub foreign_calls: bool,
}

impl<'a> Analyzer<'a> {
    pub fn new(script: &'a TypedScript, cfg: &'a Config) -> Self {
        Analyzer {
            script,
            cfg,
            gen: Gen::new(),
            alarms: BTreeMap::new(),
            fails: BTreeSet::new(),
            witness_detail: BTreeMap::new(),
            branches: BTreeMap::new(),
            entrypoint: String::new(),
            deadline: cfg.timeout.map(|t| Instant::now() + t),
            aborted: None,
            warnings: vec![],
            foreign_calls: false,
        }
    }

    fn exp(&self) -> bool {
        self.cfg.domains == Domains::IntvExp
    }

    fn out_of_time(&mut self) -> bool {
        if self.aborted.is_some() {
            return true;
        }
        if self.deadline.is_some_and(|d| Instant::now() > d) {
            self.aborted = Some("timeout".into());
            return true;
        }
        false
    }

    fn alarm(&mut self, category: Category, span: Span, detail: String) {
        log::debug!("alarm {category} at {span}: {detail}");
        let entrypoint = self.entrypoint.clone();
        self.alarms.entry((category, span)).or_insert(Alarm {
            category,
            span,
            entrypoint,
            detail,
        });
    }

    fn bind(&self, env: &mut Env, v: CellVar, e: Expr) {
        if self.exp() {
            env.sym.assign(v, &e);
        }
    }

    /// Records `v` as a copy of `src`.
    fn link(&self, env: &mut Env, v: CellVar, src: CellVar) {
        if self.exp() {
            env.eqs.merge(v, src);
            env.sym.assign(v, &Expr::Var(src));
        }
    }

    fn push_leaf(&mut self, env: &mut Env, ty: Ty, a: AbsVal, e: Option<Expr>) -> CellVar {
        let v = env.leaf(&mut self.gen, a, false);
        if let Some(e) = e {
            self.bind(env, v, e);
        }
        env.push(ty, Shape::Leaf(v));
        v
    }

    fn push_num(&mut self, env: &mut Env, ty: Ty, i: Interval, e: Option<Expr>) -> CellVar {
        let k = ty.int_kind().expect("numeric type");
        self.push_leaf(env, ty, AbsVal::Num(i.meet_kind(k), k), e)
    }

    fn join_at(&self, p: u32, a: Option<Env>, b: Option<Env>) -> Option<Env> {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(a.canonicalize(p).join(&b.canonicalize(p))),
        }
    }

    /// Joins `st` into the recorded entry state of a branch.
    fn record(&mut self, id: u32, branch: u8, st: &Option<Env>) {
        if !self.cfg.record_branches {
            return;
        }
        if let Some(e) = st {
            let e = e.canonicalize(point(id, 4 + branch as u32));
            let joined = match self.branches.get(&(id, branch)) {
                Some(old) => old.join(&e),
                None => e,
            };
            self.branches.insert((id, branch), joined);
        }
    }

    pub fn exec_seq(&mut self, code: &[Instr], st: Option<Env>) -> Option<Env> {
        let mut st = st;
        for i in code {
            let env = st?;
            if self.out_of_time() {
                return None;
            }
            if self.cfg.check_types {
                self.check_stack(i, &env);
            }
            st = self.exec(i, env);
        }
        st
    }

    fn check_stack(&self, i: &Instr, env: &Env) {
        let Some((input, _)) = self.script.stack_types.get(&i.id) else {
            return;
        };
        let have: Vec<&Ty> = env.stack.iter().map(|c| &c.ty).collect();
        let want: Vec<&Ty> = input.iter().collect();
        assert_eq!(
            have,
            want,
            "stack shape differs from annotation before {} at {}",
            i.op.name(),
            i.span
        );
    }

    /// Result type of `i` on top of its output stack.
    fn out_ty(&self, i: &Instr) -> Ty {
        match self.script.stack_types.get(&i.id) {
            Some((_, StackOut::Stack(s))) => s.last().cloned().expect("empty output stack"),
            _ => panic!("no output type for {} at {}", i.op.name(), i.span),
        }
    }

    pub fn exec(&mut self, i: &Instr, mut env: Env) -> Option<Env> {
        let span = i.span;
        match &i.op {
            Op::Seq(body) => return self.exec_seq(body, Some(env)),
            Op::Push(ty, d) => {
                let v = Value::from_data(d, ty).expect("literal checked by the typechecker");
                let s = env.alpha(&mut self.gen, ty, &[&v], self.cfg.sender_split, false, None);
                if let (Shape::Leaf(x), Some(l)) = (&s, literal(&v)) {
                    self.bind(&mut env, *x, Expr::Lit(l));
                }
                env.push(ty.clone(), s);
            }
            Op::Unit => env.push(Ty::Unit, Shape::Unit),
            Op::Drop(n) => {
                for _ in 0..*n {
                    env.pop();
                }
            }
            Op::Dup(n) => {
                let src = env.stack[env.stack.len() - n].clone();
                let s = env.copy_shape(
                    &mut self.gen,
                    &src.shape,
                    false,
                    self.cfg.domains == Domains::IntvExp,
                );
                env.push(src.ty, s);
            }
            Op::Swap => {
                let n = env.stack.len();
                env.stack.swap(n - 1, n - 2);
            }
            Op::Dig(n) => {
                let c = env.stack.remove(env.stack.len() - 1 - n);
                env.stack.push(c);
            }
            Op::Dug(n) => {
                let c = env.pop();
                let at = env.stack.len() - n;
                env.stack.insert(at, c);
            }
            Op::Dip(n, body) => {
                let hidden = env.stack.split_off(env.stack.len() - n);
                env.dipped.extend(hidden);
                let mut env = self.exec_seq(body, Some(env))?;
                let back = env.dipped.split_off(env.dipped.len() - n);
                env.stack.extend(back);
                return Some(env);
            }
            Op::Pair => {
                let a = env.pop();
                let b = env.pop();
                env.push(
                    Ty::pair(a.ty, b.ty),
                    Shape::Pair(Box::new(a.shape), Box::new(b.shape)),
                );
            }
            Op::Unpair | Op::Car | Op::Cdr => {
                let c = env.pop();
                let (Ty::Pair(ta, tb), Shape::Pair(a, b)) = (c.ty, c.shape) else {
                    panic!("pair expected")
                };
                match &i.op {
                    Op::Unpair => {
                        env.push(*tb, *b);
                        env.push(*ta, *a);
                    }
                    Op::Car => env.push(*ta, *a),
                    _ => env.push(*tb, *b),
                }
            }
            Op::Some => {
                let c = env.pop();
                let tag = env.leaf(&mut self.gen, AbsVal::Flag(Interval::int(1, 1)), false);
                env.push(
                    Ty::option(c.ty),
                    Shape::Option {
                        tag,
                        some: Box::new(c.shape),
                    },
                );
            }
            Op::None(t) => {
                let tag = env.leaf(&mut self.gen, AbsVal::Flag(Interval::int(0, 0)), false);
                let some =
                    env.fresh_shape(&mut self.gen, t, Init::Bottom, self.cfg.sender_split, false);
                env.push(
                    Ty::option(t.clone()),
                    Shape::Option {
                        tag,
                        some: Box::new(some),
                    },
                );
            }
            Op::Left(t) | Op::Right(t) => {
                let c = env.pop();
                let is_left = matches!(i.op, Op::Left(_));
                let tag = env.leaf(
                    &mut self.gen,
                    AbsVal::Flag(Interval::int(!is_left as i64, !is_left as i64)),
                    false,
                );
                let other =
                    env.fresh_shape(&mut self.gen, t, Init::Bottom, self.cfg.sender_split, false);
                let (ty, left, right) = if is_left {
                    (Ty::or(c.ty, t.clone()), c.shape, other)
                } else {
                    (Ty::or(t.clone(), c.ty), other, c.shape)
                };
                env.push(
                    ty,
                    Shape::Or {
                        tag,
                        left: Box::new(left),
                        right: Box::new(right),
                    },
                );
            }
            Op::Nil(t) => {
                let elems =
                    env.fresh_shape(&mut self.gen, t, Init::Bottom, self.cfg.sender_split, true);
                let len = env.leaf(
                    &mut self.gen,
                    AbsVal::Num(Interval::int(0, 0), IntKind::Nat),
                    false,
                );
                env.push(
                    Ty::list(t.clone()),
                    Shape::List {
                        elems: Box::new(elems),
                        len,
                    },
                );
            }
            Op::EmptySet(_) | Op::EmptyMap(..) => {
                let ty = self.out_ty(i);
                let s = self.empty_container(&mut env, &ty);
                env.push(ty, s);
            }
            Op::IfNone(a, b) | Op::IfLeft(a, b) | Op::IfCons(a, b) | Op::If(a, b) => {
                return self.exec_branch(i, env, a, b);
            }
            Op::Loop(body) => return self.exec_loop(i, env, body),
            Op::LoopLeft(body) => return self.exec_loop_left(i, env, body),
            Op::Iter(body) => return self.exec_iter(i, env, body, false),
            Op::Map(body) => return self.exec_iter(i, env, body, true),
            Op::Cons => return self.exec_cons(env),
            Op::Size => return self.exec_size(env),
            Op::Mem => return self.exec_mem(env),
            Op::Get => return self.exec_get(env),
            Op::Update => return self.exec_update(i, env),
            Op::Add | Op::Sub | Op::Mul | Op::Lsl | Op::Lsr | Op::And | Op::Or | Op::Xor => {
                return self.exec_binop(i, env);
            }
            Op::Ediv => return self.exec_ediv(env),
            Op::Neg | Op::Abs | Op::Int | Op::Not => {
                let c = env.pop();
                let x = leaf(&c.shape);
                let ty = self.out_ty(i);
                match env.val(x).clone() {
                    AbsVal::Bool(b) => {
                        self.push_leaf(
                            &mut env,
                            Ty::Bool,
                            AbsVal::Bool(b.negate()),
                            Some(Expr::app(Fun::Not, vec![Expr::Var(x)])),
                        );
                    }
                    a => {
                        let xi = a.itv().cloned().unwrap_or_else(Interval::top);
                        let (r, f) = match i.op {
                            Op::Neg => (xi.neg(), Some(Fun::Neg)),
                            Op::Abs => (xi.abs(), Some(Fun::Abs)),
                            Op::Int => (xi, None),
                            _ => (xi.not(), None),
                        };
                        let e = match (i.op.clone(), f) {
                            (Op::Int, _) => Some(Expr::Var(x)),
                            (_, Some(f)) => Some(Expr::app(f, vec![Expr::Var(x)])),
                            _ => None,
                        };
                        self.push_num(&mut env, ty, r, e);
                    }
                }
            }
            Op::IsNat => {
                let x = leaf(&env.pop().shape);
                let xi = env.itv(x);
                let nat = xi.meet(&Interval::at_least(0));
                let neg = xi.meet(&Interval::at_most(-1));
                let tag = Interval::int(
                    if neg.is_bottom() { 1 } else { 0 },
                    if nat.is_bottom() { 0 } else { 1 },
                );
                let tag = env.leaf(&mut self.gen, AbsVal::Flag(tag), false);
                let c = env.leaf(&mut self.gen, AbsVal::Num(nat, IntKind::Nat), false);
                self.bind(&mut env, c, Expr::Var(x));
                env.push(
                    Ty::option(Ty::Nat),
                    Shape::Option {
                        tag,
                        some: Box::new(Shape::Leaf(c)),
                    },
                );
            }
            Op::Compare => {
                let a = env.pop();
                let b = env.pop();
                let r = compare_shapes(&env, &a.shape, &b.shape);
                let e = match (&a.shape, &b.shape) {
                    (Shape::Leaf(x), Shape::Leaf(y)) => {
                        Some(Expr::app(Fun::Compare, vec![Expr::Var(*x), Expr::Var(*y)]))
                    }
                    _ => None,
                };
                self.push_num(&mut env, Ty::Int, r, e);
            }
            Op::Eq | Op::Neq | Op::Lt | Op::Gt | Op::Le | Op::Ge => {
                let rel = match i.op {
                    Op::Eq => Rel::Eq,
                    Op::Neq => Rel::Ne,
                    Op::Lt => Rel::Lt,
                    Op::Gt => Rel::Gt,
                    Op::Le => Rel::Le,
                    _ => Rel::Ge,
                };
                let x = leaf(&env.pop().shape);
                let b = test_sign(rel, &env.itv(x));
                self.push_leaf(
                    &mut env,
                    Ty::Bool,
                    AbsVal::Bool(b),
                    Some(Expr::app(Fun::Test(rel), vec![Expr::Var(x)])),
                );
            }
            Op::Failwith => {
                self.fails.insert(span);
                return None;
            }
            Op::Sender | Op::Source | Op::Amount | Op::Balance | Op::Now | Op::SelfAddress => {
                let c = match i.op {
                    Op::Sender => CtxVar::Sender,
                    Op::Source => CtxVar::Source,
                    Op::Amount => CtxVar::Amount,
                    Op::Balance => CtxVar::Balance,
                    Op::Now => CtxVar::Now,
                    _ => CtxVar::SelfAddress,
                };
                let src = CellVar::Ctx(c);
                let v = env.leaf(&mut self.gen, env.val(src).clone(), false);
                self.link(&mut env, v, src);
                env.push(c.ty(), Shape::Leaf(v));
            }
            Op::Contract(t) => {
                let a = leaf(&env.pop().shape);
                let tag = env.leaf(&mut self.gen, AbsVal::Flag(Interval::flag()), false);
                let addr = env.leaf(&mut self.gen, env.val(a).clone(), false);
                self.link(&mut env, addr, a);
                env.push(
                    Ty::option(Ty::contract(t.clone())),
                    Shape::Option {
                        tag,
                        some: Box::new(Shape::Contract { addr }),
                    },
                );
            }
            Op::TransferTokens => {
                let _arg = env.pop();
                let amount = leaf(&env.pop().shape);
                let Shape::Contract { addr } = env.pop().shape else {
                    panic!("contract expected")
                };
                let to_self = self.exp() && env.eqs.same(addr, CellVar::Ctx(CtxVar::SelfAddress));
                let known = match env.val(addr) {
                    AbsVal::Addr(t) => {
                        t.rel() == SenderRel::IsSender || t.consts().singleton().is_some()
                    }
                    _ => false,
                };
                self.foreign_calls |= !(to_self || known);
                let target = env.leaf(&mut self.gen, env.val(addr).clone(), false);
                let amount = env.leaf(&mut self.gen, env.val(amount).clone(), false);
                env.push(Ty::Operation, Shape::Op { target, amount });
            }
        }
        Some(env)
    }

    fn exec_binop(&mut self, i: &Instr, mut env: Env) -> Option<Env> {
        let a = env.pop();
        let b = env.pop();
        let (x, y) = (leaf(&a.shape), leaf(&b.shape));
        if a.ty == Ty::Bool {
            let (f, g): (Fun, fn(bool, bool) -> bool) = match i.op {
                Op::And => (Fun::And, |p, q| p && q),
                Op::Or => (Fun::Or, |p, q| p || q),
                _ => (Fun::Xor, |p, q| p != q),
            };
            let (AbsVal::Bool(p), AbsVal::Bool(q)) = (env.val(x).clone(), env.val(y).clone())
            else {
                panic!("bool operands expected")
            };
            let e = Expr::app(f, vec![Expr::Var(x), Expr::Var(y)]);
            self.push_leaf(&mut env, Ty::Bool, AbsVal::Bool(p.lift2(q, g)), Some(e));
            return Some(env);
        }
        let ty = binop_type(&i.op, &a.ty, &b.ty).expect("typechecked");
        let kind = ty.int_kind().expect("numeric result");
        let (op, fun) = match i.op {
            Op::Add => (BinOp::Add, Some(Fun::Add)),
            Op::Sub => (BinOp::Sub, Some(Fun::Sub)),
            Op::Mul => (BinOp::Mul, Some(Fun::Mul)),
            Op::Lsl => (BinOp::Lsl, None),
            Op::Lsr => (BinOp::Lsr, None),
            Op::And => (BinOp::And, None),
            Op::Or => (BinOp::Or, None),
            _ => (BinOp::Xor, None),
        };
        let (xi, yi) = (env.itv(x), env.itv(y));
        let (mut r, mut alarms) = itv_binop(op, kind, &xi, &yi);
        if op == BinOp::Sub && env.ge_holds(x, y) {
            r = r.meet(&Interval::at_least(0));
            if kind == IntKind::Mutez {
                alarms.mutez_overflow = false;
                r = xi.sub(&yi).meet(&Interval::range(IntKind::Mutez));
            }
        }
        if alarms.mutez_overflow {
            let detail = format!("{} of {xi} and {yi} may leave the mutez range", i.op.name());
            self.alarm(Category::MutezOverflow, i.span, detail);
        }
        if alarms.shift_overflow {
            self.alarm(
                Category::ShiftOverflow,
                i.span,
                format!("shift amount {yi} may exceed 256"),
            );
        }
        if r.is_bottom() {
            return None;
        }
        let e = fun.map(|f| Expr::app(f, vec![Expr::Var(x), Expr::Var(y)]));
        let v = self.push_num(&mut env, ty, r, e);
        // read provenance: v >= x when y >= 0 (ADD), v >= x when y <= 0 (SUB)
        let keeps = |env: &Env, other: CellVar| match op {
            BinOp::Add => env.itv(other).ge(0),
            BinOp::Sub => env.itv(other).le(0),
            _ => false,
        };
        let mut new = vec![];
        for (src, other) in [(x, y), (y, x)] {
            if op == BinOp::Sub && src == y {
                continue;
            }
            if keeps(&env, other) {
                for (w, r) in &env.reads.dom {
                    if *w == src || env.eqs.same(*w, src) {
                        new.push((v, *r));
                    }
                }
            }
        }
        env.reads.dom.extend(new);
        Some(env)
    }

    fn exec_ediv(&mut self, mut env: Env) -> Option<Env> {
        let a = env.pop();
        let b = env.pop();
        let (x, y) = (leaf(&a.shape), leaf(&b.shape));
        let Some(Ty::Option(inner)) = binop_type(&Op::Ediv, &a.ty, &b.ty) else {
            panic!("ediv typechecked")
        };
        let Ty::Pair(qt, rt) = (*inner).clone() else {
            panic!("pair result")
        };
        let (xi, yi) = (env.itv(x), env.itv(y));
        let some = xi.ediv(&yi);
        let tag = Interval::int(
            if yi.may_be_zero() { 0 } else { 1 },
            if some.is_some() && yi.may_be_nonzero() {
                1
            } else {
                0
            },
        );
        let (q, r) = some.unwrap_or((Interval::Bottom, Interval::Bottom));
        let (qk, rk) = (qt.int_kind().unwrap(), rt.int_kind().unwrap());
        let tag = env.leaf(&mut self.gen, AbsVal::Flag(tag), false);
        let q = env.leaf(&mut self.gen, AbsVal::Num(q.meet_kind(qk), qk), false);
        let r = env.leaf(&mut self.gen, AbsVal::Num(r.meet_kind(rk), rk), false);
        env.push(
            Ty::Option(inner),
            Shape::Option {
                tag,
                some: Box::new(Shape::Pair(
                    Box::new(Shape::Leaf(q)),
                    Box::new(Shape::Leaf(r)),
                )),
            },
        );
        Some(env)
    }
}

/// Symbolic literal of a scalar value.
fn literal(v: &Value) -> Option<Lit> {
    Some(match v {
        Value::Int(n) | Value::Nat(n) | Value::Timestamp(n) => Lit::Int(n.clone()),
        Value::Mutez(m) => Lit::Int(BigInt::from(*m)),
        Value::Bool(b) => Lit::Bool(*b),
        Value::String(s) => Lit::Str(s.clone()),
        Value::Address(a) => Lit::Addr(a.clone()),
        _ => return None,
    })
}

/// Possible values of `x rel 0`.
fn test_sign(rel: Rel, x: &Interval) -> BoolAbs {
    let t = !assume_sign(rel, x).is_bottom();
    let f = !assume_sign(rel.negate(), x).is_bottom();
    match (t, f) {
        (true, true) => BoolAbs::Top,
        (true, false) => BoolAbs::True,
        (false, true) => BoolAbs::False,
        _ => BoolAbs::Bot,
    }
}

/// Possible outcomes of comparing two scalar values.
fn compare_vals(a: &AbsVal, b: &AbsVal) -> Interval {
    let any = Interval::int(-1, 1);
    match (a, b) {
        (AbsVal::Num(x, _), AbsVal::Num(y, _)) | (AbsVal::Flag(x), AbsVal::Flag(y)) => {
            itv_compare(x, y)
        }
        (AbsVal::Bool(x), AbsVal::Bool(y)) => {
            let mut r = Interval::Bottom;
            for p in [false, true] {
                for q in [false, true] {
                    if x.may_be(p) && y.may_be(q) {
                        let c = (p as i64) - (q as i64);
                        r = r.join(&Interval::int(c, c));
                    }
                }
            }
            r
        }
        (AbsVal::Str(x), AbsVal::Str(y)) => consts_compare(x, y),
        (AbsVal::Addr(x), AbsVal::Addr(y)) => {
            if x.is_bottom() || y.is_bottom() {
                return Interval::Bottom;
            }
            match x.compare(y) {
                Tri::Eq => Interval::int(0, 0),
                _ => consts_compare(x.consts(), y.consts()),
            }
        }
        _ => any,
    }
}

fn consts_compare(x: &Consts, y: &Consts) -> Interval {
    match (x, y) {
        (Consts::Set(a), Consts::Set(b)) => {
            let mut r = Interval::Bottom;
            for p in a {
                for q in b {
                    let c = match p.cmp(q) {
                        std::cmp::Ordering::Less => -1,
                        std::cmp::Ordering::Equal => 0,
                        std::cmp::Ordering::Greater => 1,
                    };
                    r = r.join(&Interval::int(c, c));
                }
            }
            r
        }
        _ => Interval::int(-1, 1),
    }
}

/// Lexicographic comparison of two comparable shapes.
fn compare_shapes(env: &Env, a: &Shape, b: &Shape) -> Interval {
    match (a, b) {
        (Shape::Unit, Shape::Unit) => Interval::int(0, 0),
        (Shape::Leaf(x), Shape::Leaf(y)) => compare_vals(env.val(*x), env.val(*y)),
        (Shape::Pair(a1, a2), Shape::Pair(b1, b2)) => {
            let first = compare_shapes(env, a1, b1);
            let mut r = first
                .meet(&Interval::int(-1, -1))
                .join(&first.meet(&Interval::int(1, 1)));
            if first.contains_i64(0) {
                r = r.join(&compare_shapes(env, a2, b2));
            }
            r
        }
        _ => Interval::int(-1, 1),
    }
}

/// Abstract value of the sender slot of a context with a given address
/// constraint; used by tests building contexts.
pub fn sender_abs() -> AbsVal {
    AbsVal::Addr(AddrAbs::sender())
}
