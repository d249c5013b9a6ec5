// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Non-numeric domains: symbolic constants, variable equalities and
//! addresses relative to the caller.

mod addr;
mod eqclasses;
mod expr;

pub use addr::{AddrAbs, SenderRel, Tri};
pub use eqclasses::EqClasses;
pub use expr::{guard_relations, Expr, Fun, Lit, Relation, SymEnv, DEPTH_CAP};
