// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;

use super::interp::{is_implicit, CallContext, Failure, Interp, DEFAULT_FUEL};
use super::value::{Transfer, Value};
use crate::syntax::{Ty, TypedScript};

/// Limit on the number of operations in one `run_operations` cascade.
pub const MAX_OPERATIONS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct Account {
    pub script: Arc<TypedScript>,
    pub storage: Value,
    pub balance: u64,
}

impl PartialEq for Account {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.script, &other.script)
            && self.storage == other.storage
            && self.balance == other.balance
    }
}

/// Originated contracts by address. Implicit accounts are not stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct World {
    pub accounts: BTreeMap<String, Account>,
    pub source: String,
    pub now: BigInt,
}

impl World {
    pub fn new(source: &str) -> Self {
        World {
            source: source.into(),
            ..Default::default()
        }
    }

    pub fn originate(
        &mut self,
        address: &str,
        script: Arc<TypedScript>,
        storage: Value,
        balance: u64,
    ) {
        self.accounts.insert(
            address.into(),
            Account {
                script,
                storage,
                balance,
            },
        );
    }

    pub fn storage(&self, address: &str) -> Option<&Value> {
        self.accounts.get(address).map(|a| &a.storage)
    }

    fn contracts(&self) -> BTreeMap<String, Ty> {
        self.accounts
            .iter()
            .map(|(a, acc)| (a.clone(), acc.script.parameter.clone()))
            .collect()
    }

    fn context(&self, sender: &str, target: &str, amount: u64) -> CallContext {
        CallContext {
            sender: sender.into(),
            source: self.source.clone(),
            amount,
            balance: self.accounts.get(target).map_or(0, |a| a.balance),
            now: self.now.clone(),
            self_address: target.into(),
            contracts: self.contracts(),
        }
    }
}

/// Executes `pending` (emitted by `emitter`) depth-first: the operations
/// a callee emits run before the emitter's remaining ones. On failure the
/// world is restored to its state on entry.
pub fn run_operations(
    world: &mut World,
    emitter: &str,
    pending: Vec<Transfer>,
) -> Result<(), Failure> {
    let snapshot = world.clone();
    let mut count = 0;
    let r = run_all(world, emitter, pending, &mut count);
    if r.is_err() {
        *world = snapshot;
    }
    r
}

/// Calls an entry point of an originated contract as `sender`, then runs
/// the operations it emits. Atomic like [`run_operations`].
pub fn call(
    world: &mut World,
    sender: &str,
    target: &str,
    entrypoint: &str,
    arg: Value,
    amount: u64,
) -> Result<(), Failure> {
    let acc = world
        .accounts
        .get(target)
        .ok_or_else(|| Failure::UnknownTarget(target.into()))?;
    let ep = acc
        .script
        .entrypoint(entrypoint)
        .ok_or_else(|| Failure::UnknownEntrypoint(entrypoint.into()))?;
    let param = super::interp::wrap_arg(&ep.path, arg);
    run_operations(
        world,
        sender,
        vec![Transfer {
            target: target.into(),
            amount,
            arg: param,
        }],
    )
}

fn run_all(
    world: &mut World,
    emitter: &str,
    pending: Vec<Transfer>,
    count: &mut usize,
) -> Result<(), Failure> {
    for op in pending {
        *count += 1;
        if *count > MAX_OPERATIONS {
            return Err(Failure::OutOfFuel);
        }
        let Some(acc) = world.accounts.get(&op.target) else {
            if is_implicit(&op.target) {
                continue;
            }
            return Err(Failure::UnknownTarget(op.target));
        };
        let script = acc.script.clone();
        let storage = acc.storage.clone();
        let ctx = world.context(emitter, &op.target, op.amount);
        let (emitted, new_storage) = Interp::new(&ctx)
            .with_fuel(DEFAULT_FUEL)
            .run(&script, op.arg, storage)?;
        if let Some(acc) = world.accounts.get_mut(&op.target) {
            acc.storage = new_storage;
        }
        run_all(world, &op.target, emitted, count)?;
    }
    Ok(())
}
