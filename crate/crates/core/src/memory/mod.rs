// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Stack cells, their decomposition into scalar variables, and container
//! summaries.

mod cellvar;
mod env;
mod shape;

pub use cellvar::{decompose, is_split_map, show_path, CellVar, CtxVar, LeafKind, Path, Step};
pub use env::{Env, Gen, Init, Read, Reads};
pub use shape::{AbsVal, Cell, LeafInfo, Shape};
