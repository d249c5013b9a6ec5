// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Running contract code abstractly from hand-built states.

use std::collections::BTreeMap;

use michelstat::analyzer::{analyze, Alarm, Analysis, Analyzer, Config, Domains, InitialStorage};
use michelstat::memory::{CellVar, Env, Gen, Init, Shape};
use michelstat::syntax::{load, Op, Ty, TypedScript};

pub struct Exec {
    pub out: Option<Env>,
    pub alarms: Vec<Alarm>,
    pub branches: BTreeMap<(u32, u8), Env>,
}

pub fn config(domains: Domains, storage: InitialStorage) -> Config {
    Config {
        domains,
        storage,
        record_branches: true,
        check_types: true,
        ..Config::default()
    }
}

pub fn load_ok(src: &str) -> TypedScript {
    load(src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

/// Single-call analysis of `src` with branch recording on.
pub fn analyze_src(
    src: &str,
    domains: Domains,
    storage: InitialStorage,
) -> (TypedScript, Analysis) {
    let s = load_ok(src);
    let a = analyze(&s, &config(domains, storage));
    (s, a)
}

/// Runs the code of `script` once from the input pair shape `build`
/// returns.
pub fn exec_from(
    script: &TypedScript,
    cfg: &Config,
    build: impl FnOnce(&mut Env, &mut Gen) -> Shape,
) -> Exec {
    let mut a = Analyzer::new(script, cfg);
    let mut env = Env::new();
    let shape = build(&mut env, &mut a.gen);
    env.push(
        Ty::pair(script.parameter.clone(), script.storage.clone()),
        shape,
    );
    assert!(env.reduce(), "empty input state");
    let code = script.code.clone();
    let out = a.exec_seq(&code, Some(env));
    Exec {
        out,
        alarms: a.alarms.into_values().collect(),
        branches: a.branches,
    }
}

/// A fresh ⊤ value of each half of the input pair.
pub fn top_halves(script: &TypedScript, env: &mut Env, g: &mut Gen, split: bool) -> (Shape, Shape) {
    (
        env.fresh_shape(g, &script.parameter, Init::Top, split, false),
        env.fresh_shape(g, &script.storage, Init::Top, split, false),
    )
}

pub fn pair(a: Shape, b: Shape) -> Shape {
    Shape::Pair(Box::new(a), Box::new(b))
}

/// Ids of the branching instructions at the top level of the code, in
/// order.
pub fn branch_ids(script: &TypedScript) -> Vec<u32> {
    script
        .code
        .iter()
        .filter(|i| {
            matches!(
                i.op,
                Op::If(..) | Op::IfNone(..) | Op::IfLeft(..) | Op::IfCons(..)
            )
        })
        .map(|i| i.id)
        .collect()
}

/// Recorded entry state of branch `b` of the `k`-th top-level branching
/// instruction.
pub fn at_branch<'e>(
    script: &TypedScript,
    branches: &'e BTreeMap<(u32, u8), Env>,
    k: usize,
    b: u8,
) -> Option<&'e Env> {
    branches.get(&(branch_ids(script)[k], b))
}

/// The output storage cell of an execution.
pub fn out_storage(env: &Env) -> Shape {
    match &env.top().shape {
        Shape::Pair(_, s) => (**s).clone(),
        other => panic!("not a pair: {other:?}"),
    }
}

pub fn leaves(s: &Shape) -> Vec<CellVar> {
    s.leaves()
}
