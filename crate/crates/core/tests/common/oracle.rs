// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Checks concrete runs against analysis results.

use michelstat::analyzer::{contains, facts_hold, Analysis, Category};
use michelstat::concrete::{wrap_arg, CallContext, Failure, Interp, Transfer, Value};
use michelstat::memory::Env;
use michelstat::syntax::{Op, TypedScript};
use num_bigint::BigInt;

/// Most branch entries kept per run.
const MAX_EVENTS: usize = 256;

/// The stack at the entry of a branch, as the concrete run saw it.
#[derive(Debug, Clone)]
pub struct BranchEvent {
    pub id: u32,
    pub branch: u8,
    pub stack: Vec<Value>,
}

/// Branch and entry stack chosen by a branching instruction, given the
/// stack before it.
fn branch_of(op: &Op, st: &[Value]) -> Option<(u8, Vec<Value>)> {
    let (top, rest) = st.split_last()?;
    let mut rest = rest.to_vec();
    let b = match (op, top) {
        (Op::If(..), Value::Bool(b)) => u8::from(!b),
        (Op::IfNone(..), Value::Option(None)) => 0,
        (Op::IfNone(..), Value::Option(Some(x))) => {
            rest.push((**x).clone());
            1
        }
        (Op::IfLeft(..), Value::Left(x)) => {
            rest.push((**x).clone());
            0
        }
        (Op::IfLeft(..), Value::Right(x)) => {
            rest.push((**x).clone());
            1
        }
        (Op::IfCons(..), Value::List(xs)) => match xs.split_first() {
            Some((h, t)) => {
                rest.push(Value::List(t.to_vec()));
                rest.push(h.clone());
                0
            }
            None => 1,
        },
        _ => return None,
    };
    Some((b, rest))
}

type Traced = (Result<(Vec<Transfer>, Value), Failure>, Vec<BranchEvent>);

/// Runs one entry point, recording branch entries.
pub fn traced_run(
    script: &TypedScript,
    ep: &str,
    arg: Value,
    storage: Value,
    ctx: &CallContext,
    fuel: u64,
) -> Traced {
    let path = script.entrypoint(ep).expect("entry point").path.clone();
    let mut events = vec![];
    let mut f = |i: &michelstat::syntax::Instr, st: &[Value]| {
        if events.len() < MAX_EVENTS {
            if let Some((branch, stack)) = branch_of(&i.op, st) {
                events.push(BranchEvent {
                    id: i.id,
                    branch,
                    stack,
                });
            }
        }
    };
    let res =
        Interp::new(ctx)
            .with_fuel(fuel)
            .tracing(&mut f)
            .run(script, wrap_arg(&path, arg), storage);
    (res, events)
}

/// Whether the stack `values` (top last) is described by `env`, facts
/// included.
pub fn stack_in(env: &Env, values: &[Value], ctx: &CallContext) -> Result<(), String> {
    if env.stack.len() != values.len() {
        return Err(format!(
            "stack height {} vs {}",
            env.stack.len(),
            values.len()
        ));
    }
    for (k, (cell, v)) in env.stack.iter().zip(values).enumerate() {
        if !contains(env, &cell.shape, &cell.ty, v, &ctx.sender) {
            return Err(format!(
                "slot {k}: {v} not in {}",
                env.show_shape(&cell.shape)
            ));
        }
    }
    facts_hold(env, values, ctx)
}

/// Outcome of a concrete call that agrees with the analysis.
#[derive(Debug, Clone)]
pub enum Checked {
    Stored(Value),
    Failed,
    /// Out of fuel; nothing checked.
    Skipped,
}

/// Checks one concrete call against `a`.
pub fn check_call(
    a: &Analysis,
    script: &TypedScript,
    ep: &str,
    arg: &Value,
    storage: &Value,
    ctx: &CallContext,
) -> Result<Checked, String> {
    let (res, events) = traced_run(script, ep, arg.clone(), storage.clone(), ctx, 20_000);
    if matches!(res, Err(Failure::OutOfFuel)) {
        return Ok(Checked::Skipped);
    }
    for e in &events {
        let Some(env) = a.branches.get(&(e.id, e.branch)) else {
            return Err(format!(
                "branch {} of instruction {} reached but not recorded",
                e.branch, e.id
            ));
        };
        stack_in(env, &e.stack, ctx)
            .map_err(|m| format!("branch {} of instruction {}: {m}", e.branch, e.id))?;
    }
    let has = |c: Category, span| a.alarms.iter().any(|x| x.category == c && x.span == span);
    match res {
        Ok((ops, out)) => {
            let inv = a
                .invariant
                .as_ref()
                .ok_or("call succeeded but the invariant is ⊥")?;
            stack_in(inv, std::slice::from_ref(&out), ctx)
                .map_err(|m| format!("output storage {out}: {m}"))?;
            if a.entrypoints.iter().any(|o| o.name == ep && o.always_fails) {
                return Err(format!(
                    "entry point {ep} succeeded but is flagged always-fail"
                ));
            }
            if !a.ops.count.contains(&BigInt::from(ops.len())) {
                return Err(format!("{} operations not in {}", ops.len(), a.ops.count));
            }
            for t in &ops {
                if !a.ops.amounts.contains(&BigInt::from(t.amount))
                    || !a.ops.targets.contains(&t.target, &ctx.sender)
                {
                    return Err(format!(
                        "operation to {} of {} not covered",
                        t.target, t.amount
                    ));
                }
            }
            Ok(Checked::Stored(out))
        }
        Err(Failure::MutezOverflow { span }) if !has(Category::MutezOverflow, span) => {
            Err(format!("mutez overflow at {span} without alarm"))
        }
        Err(Failure::ShiftOverflow { span }) if !has(Category::ShiftOverflow, span) => {
            Err(format!("shift overflow at {span} without alarm"))
        }
        Err(f) if f.is_runtime() => Ok(Checked::Failed),
        Err(f) => Err(format!("unexpected failure: {f}")),
    }
}
