// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Reference interpreter for the subset.

mod interp;
mod value;
mod world;

pub use interp::{
    ediv, is_implicit, run_contract, wrap_arg, CallContext, Failure, Interp, DEFAULT_FUEL,
    MAX_SHIFT,
};
pub use value::{Transfer, Value, MUTEZ_MAX};
pub use world::{call, run_operations, Account, World, MAX_OPERATIONS};
