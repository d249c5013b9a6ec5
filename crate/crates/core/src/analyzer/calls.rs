// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Entry points, single calls and the storage fixpoint over sequences of
//! calls.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::concrete::Value;
use crate::domain::{Bound, Interval, Lattice};
use crate::memory::{show_path, AbsVal, Cell, CellVar, CtxVar, Env, Init, Shape};
use crate::symbolic::{AddrAbs, SenderRel};
use crate::syntax::{Entrypoint, Side, Span, Ty, TypedScript};

use super::{Alarm, Analyzer, Category, Config, InitialStorage, MAX_ROUNDS};

/// Join point naming the storage between calls.
pub const STORAGE_POINT: u32 = u32::MAX;

/// Result of the last round for one entry point.
#[derive(Debug, Clone)]
pub struct EntrypointOutcome {
    pub name: String,
    /// Every execution fails.
    pub always_fails: bool,
    /// Storage after a successful call.
    pub storage: Option<Env>,
}

/// What the emitted operations may look like, over all calls.
#[derive(Debug, Clone, PartialEq)]
pub struct OpsSummary {
    pub count: Interval,
    pub targets: AddrAbs,
    pub amounts: Interval,
}

impl Default for OpsSummary {
    fn default() -> Self {
        OpsSummary {
            count: Interval::Bottom,
            targets: AddrAbs::bottom(),
            amounts: Interval::Bottom,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub storage_ty: Ty,
    /// Storage invariant: a one-cell state canonicalized at
    /// [`STORAGE_POINT`]. ⊥ when no call ever succeeds.
    pub invariant: Option<Env>,
    pub entrypoints: Vec<EntrypointOutcome>,
    pub always_fails: bool,
    pub alarms: Vec<Alarm>,
    pub ops: OpsSummary,
    pub rounds: u32,
    pub aborted: Option<String>,
    pub warnings: Vec<String>,
    pub branches: BTreeMap<(u32, u8), Env>,
    pub elapsed_ms: u128,
}

impl Analysis {
    pub fn alarms_of(&self, c: Category) -> impl Iterator<Item = &Alarm> {
        self.alarms.iter().filter(move |a| a.category == c)
    }

    /// One line per storage leaf: its path and abstract value.
    pub fn invariant_lines(&self) -> Vec<String> {
        match &self.invariant {
            None => vec!["⊥ (no call succeeds)".into()],
            Some(env) => storage_lines(env),
        }
    }

    pub fn render_invariant(&self) -> String {
        self.invariant_lines().join("\n")
    }
}

pub fn storage_lines(env: &Env) -> Vec<String> {
    let cell = &env.stack[0];
    let infos = cell.shape.leaf_infos();
    if infos.is_empty() {
        return vec!["storage: unit".into()];
    }
    infos
        .iter()
        .map(|l| {
            let p = show_path(&l.path);
            let name = if l.path.is_empty() {
                "storage".to_string()
            } else {
                format!("storage.{p}")
            };
            format!("{name}: {}", env.val(l.var))
        })
        .collect()
}

/// Sender-split maps of a shape, in leaf order.
fn split_maps(s: &Shape, out: &mut Vec<Shape>) {
    match s {
        Shape::SMap { .. } => out.push(s.clone()),
        Shape::Pair(a, b) => {
            split_maps(a, out);
            split_maps(b, out);
        }
        Shape::Option { some, .. } => split_maps(some, out),
        Shape::Or { left, right, .. } => {
            split_maps(left, out);
            split_maps(right, out);
        }
        Shape::List { elems, .. } | Shape::Set { elems, .. } => split_maps(elems, out),
        Shape::Map { keys, vals, .. } => {
            split_maps(keys, out);
            split_maps(vals, out);
        }
        _ => {}
    }
}

fn namount(s: &Shape) -> CellVar {
    match s {
        Shape::SMap { namount, .. } => *namount,
        _ => unreachable!(),
    }
}

impl Analyzer<'_> {
    /// The storage state before the first call.
    pub fn initial_storage(&mut self) -> Env {
        let ty = self.script.storage.clone();
        let mut env = Env::new();
        let shape = match &self.cfg.storage {
            InitialStorage::Arbitrary => {
                env.fresh_shape(&mut self.gen, &ty, Init::Top, self.cfg.sender_split, false)
            }
            InitialStorage::Value(v) => {
                env.alpha(&mut self.gen, &ty, &[v], self.cfg.sender_split, false, None)
            }
            InitialStorage::Default => self.default_shape(&mut env, &ty),
        };
        storage_env(env, Cell { ty, shape })
    }

    /// Empty containers, zeros, `None`, `Left`, unknown addresses.
    fn default_shape(&mut self, env: &mut Env, ty: &Ty) -> Shape {
        if let Some(v) = Value::default_of(ty) {
            return env.alpha(&mut self.gen, ty, &[&v], self.cfg.sender_split, false, None);
        }
        match ty {
            Ty::Pair(a, b) => {
                let a = self.default_shape(env, a);
                Shape::Pair(Box::new(a), Box::new(self.default_shape(env, b)))
            }
            Ty::Or(a, b) => {
                let tag = env.leaf(&mut self.gen, AbsVal::Flag(Interval::int(0, 0)), false);
                let left = Box::new(self.default_shape(env, a));
                let right = Box::new(env.fresh_shape(
                    &mut self.gen,
                    b,
                    Init::Bottom,
                    self.cfg.sender_split,
                    false,
                ));
                Shape::Or { tag, left, right }
            }
            _ => env.fresh_shape(&mut self.gen, ty, Init::Top, self.cfg.sender_split, false),
        }
    }

    /// A call's view of the stored state: nothing is known about how
    /// addresses relate to the new sender.
    fn call_env(&self, storage: &Env) -> (Env, Cell) {
        let mut s = storage.clone();
        for a in s.vals.values_mut() {
            if let AbsVal::Addr(x) = a {
                *a = AbsVal::Addr(x.with_rel(if x.is_bottom() {
                    SenderRel::Bot
                } else {
                    SenderRel::Top
                }));
            }
        }
        let cell = s.stack[0].clone();
        let mut smaps = vec![];
        split_maps(&cell.shape, &mut smaps);
        for m in smaps {
            let Shape::SMap {
                amount,
                namount,
                presence,
                card,
                ..
            } = m
            else {
                unreachable!()
            };
            let j = s.val(amount).join(s.val(namount));
            s.set(amount, j.clone());
            s.set(namount, j);
            let p = if s.itv(card) == Interval::int(0, 0) {
                Interval::int(0, 0)
            } else {
                Interval::flag()
            };
            s.set(presence, AbsVal::Flag(p));
            s.forget_facts(amount);
            s.forget_facts(presence);
        }
        let mut env = Env::new();
        if let Some(m) = self.cfg.max_amount {
            let cap = Interval::new(Bound::int(0), Bound::Finite(m.into()));
            env.set_itv(CellVar::Ctx(CtxVar::Amount), cap);
        }
        env.vals.extend(
            s.vals
                .into_iter()
                .filter(|(v, _)| !matches!(v, CellVar::Ctx(_))),
        );
        env.sym = s.sym;
        env.eqs = s.eqs;
        env.weak = s.weak;
        (env, cell)
    }

    /// Runs entry point `ep` once from `storage`. Returns the storage of
    /// successful executions.
    pub fn call(&mut self, ep: &Entrypoint, storage: &Env, ops: &mut OpsSummary) -> Option<Env> {
        self.entrypoint = ep.name.clone();
        let (mut env, cell) = self.call_env(storage);
        let mut maps = vec![];
        split_maps(&cell.shape, &mut maps);
        for (n, m) in maps.iter().enumerate() {
            env.reads.derived.insert(namount(m), n as u16);
        }
        let param_ty = self.script.parameter.clone();
        let mut param = env.fresh_shape(
            &mut self.gen,
            &param_ty,
            Init::Top,
            self.cfg.sender_split,
            false,
        );
        select(&mut env, &mut param, &ep.path);
        env.push(
            Ty::pair(param_ty, cell.ty.clone()),
            Shape::Pair(Box::new(param), Box::new(cell.shape)),
        );
        if !env.reduce() {
            return None;
        }
        let code = self.script.code.clone();
        let mut out = self.exec_seq(&code, Some(env))?;
        let c = out.pop();
        let (Ty::Pair(_, st), Shape::Pair(o, s)) = (c.ty, c.shape) else {
            panic!("script must return a pair")
        };
        if let Shape::List { elems, len } = *o {
            ops.count = ops.count.join(&out.itv(len));
            if let Shape::Op { target, amount } = *elems {
                if let AbsVal::Addr(t) = out.val(target) {
                    ops.targets = ops.targets.join(t);
                }
                ops.amounts = ops.amounts.join(&out.itv(amount));
            }
        }
        let mut now = vec![];
        split_maps(&s, &mut now);
        for (n, m) in now.iter().enumerate() {
            if out.reads.derived.get(&namount(m)) != Some(&(n as u16)) {
                let span = self.script.code_span;
                out.witness.insert(span);
                self.witness_detail.entry(span).or_insert_with(|| {
                    "a balance map is replaced by one not obtained by updating it".into()
                });
            }
        }
        let spans: Vec<Span> = out.witness.iter().copied().collect();
        for span in spans {
            let d = self.witness_detail.get(&span).cloned().unwrap_or_default();
            self.alarm(Category::OwnerDecrease, span, d);
        }
        Some(storage_env(out, Cell { ty: *st, shape: *s }))
    }

    /// One call of every entry point from `storage`.
    fn round(&mut self, storage: &Env, ops: &mut OpsSummary) -> Vec<EntrypointOutcome> {
        let eps = self.script.entrypoints.clone();
        eps.iter()
            .map(|ep| {
                let out = self.call(ep, storage, ops);
                EntrypointOutcome {
                    name: ep.name.clone(),
                    always_fails: out.is_none(),
                    storage: out,
                }
            })
            .collect()
    }

    /// Join of `base` and the successful outputs of a round.
    fn collect(base: &Env, outs: &[EntrypointOutcome]) -> Env {
        outs.iter()
            .filter_map(|o| o.storage.as_ref())
            .fold(base.clone(), |acc, s| acc.join(s))
    }

    pub fn run(mut self) -> Analysis {
        let start = Instant::now();
        let s0 = self.initial_storage();
        let mut ops = OpsSummary::default();
        let mut rounds = 1;
        let (invariant, last) = if !self.cfg.multi_call {
            let outs = self.round(&s0, &mut ops);
            let any = outs.iter().any(|o| o.storage.is_some());
            let inv = any.then(|| {
                let mut it = outs.iter().filter_map(|o| o.storage.clone());
                let first = it.next().unwrap();
                it.fold(first, |a, b| a.join(&b))
            });
            (inv, outs)
        } else {
            let mut s = s0.clone();
            let mut outs;
            loop {
                outs = self.round(&s, &mut ops);
                if self.aborted.is_some() {
                    break;
                }
                let next = Self::collect(&s0, &outs);
                if next.leq(&s) {
                    break;
                }
                s = if rounds <= self.cfg.widening_delay {
                    s.join(&next)
                } else {
                    s.widen(&next)
                };
                rounds += 1;
                if rounds > MAX_ROUNDS {
                    self.aborted = Some("storage fixpoint did not stabilize".into());
                    break;
                }
            }
            for _ in 0..self.cfg.narrow {
                if self.aborted.is_some() {
                    break;
                }
                let next = Self::collect(&s0, &outs);
                if next == s {
                    break;
                }
                let o2 = self.round(&next, &mut ops);
                rounds += 1;
                if !Self::collect(&s0, &o2).leq(&next) {
                    break;
                }
                s = next;
                outs = o2;
            }
            (Some(s), outs)
        };
        let always = !last.is_empty() && last.iter().all(|o| o.always_fails);
        let span = self.script.code_span;
        let mut failing = vec![];
        if always {
            self.entrypoint = "all".into();
            self.alarm(Category::AlwaysFail, span, "every execution fails".into());
        } else {
            for o in &last {
                if o.always_fails {
                    failing.push(Alarm {
                        category: Category::AlwaysFail,
                        span,
                        entrypoint: o.name.clone(),
                        detail: format!("every call of entry point {} fails", o.name),
                    });
                }
            }
        }
        if self.cfg.multi_call && self.foreign_calls {
            self.warnings.push(
                "emitted operations may call other contracts; their effects are not analyzed"
                    .into(),
            );
        }
        let mut alarms: Vec<Alarm> = self.alarms.into_values().chain(failing).collect();
        alarms.sort_by(|a, b| {
            (a.span, a.category, &a.entrypoint).cmp(&(b.span, b.category, &b.entrypoint))
        });
        Analysis {
            storage_ty: self.script.storage.clone(),
            invariant,
            entrypoints: last,
            always_fails: always,
            alarms,
            ops,
            rounds,
            aborted: self.aborted,
            warnings: self.warnings,
            branches: self.branches,
            elapsed_ms: start.elapsed().as_millis(),
        }
    }
}

/// Restricts a parameter shape to one entry point.
fn select(env: &mut Env, s: &mut Shape, path: &[Side]) {
    let Some((side, rest)) = path.split_first() else {
        return;
    };
    let Shape::Or { tag, left, right } = s else {
        panic!("entry point path does not follow the parameter type")
    };
    let (t, keep, drop) = match side {
        Side::Left => (0, left, right),
        Side::Right => (1, right, left),
    };
    env.set(*tag, AbsVal::Flag(Interval::int(t, t)));
    for v in drop.leaves() {
        let k = env.val(v).kind();
        env.set(v, AbsVal::bottom(k));
    }
    select(env, keep, rest);
}

/// The storage cell of a state, alone, canonicalized, without facts
/// about the call's context.
pub(super) fn storage_env(env: Env, cell: Cell) -> Env {
    let mut e = Env::new();
    e.vals = env.vals;
    e.sym = env.sym;
    e.eqs = env.eqs;
    e.weak = env.weak;
    e.stack = vec![cell];
    let mut c = e.canonicalize(STORAGE_POINT);
    let ctx = |v: CellVar| matches!(v, CellVar::Ctx(_));
    c.vals.retain(|v, _| !ctx(*v));
    c.sym.retain(|v, x| {
        let mut vs = BTreeSet::new();
        x.vars(&mut vs);
        !ctx(v) && !vs.into_iter().any(ctx)
    });
    c.eqs.retain(|v| !ctx(v));
    c.reads = Default::default();
    c.witness.clear();
    c
}

/// Runs the whole analysis of `script`.
pub fn analyze(script: &TypedScript, cfg: &Config) -> Analysis {
    Analyzer::new(script, cfg).run()
}

/// One more call of every entry point from `storage`; the join of the
/// successful outputs (⊥ as `None`).
pub fn one_more_call(script: &TypedScript, cfg: &Config, storage: &Env) -> Option<Env> {
    let mut a = Analyzer::new(script, cfg);
    let mut ops = OpsSummary::default();
    let outs = a.round(storage, &mut ops);
    let mut it = outs.into_iter().filter_map(|o| o.storage);
    let first = it.next()?;
    Some(it.fold(first, |x, y| x.join(&y)))
}
