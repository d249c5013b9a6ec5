// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Static analysis of Michelson smart contracts by abstract interpretation.

pub mod analyzer;
pub mod checkers;
pub mod concrete;
pub mod domain;
pub mod memory;
pub mod report;
pub mod symbolic;
pub mod syntax;
