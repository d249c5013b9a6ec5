// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

pub mod abs;
pub mod fuzz;
pub mod gen;
pub mod laws;
pub mod oracle;

use std::path::PathBuf;

use michelstat::syntax::{load, TypedScript};

pub fn contracts_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../contracts")
}

pub fn contract_path(rel: &str) -> PathBuf {
    contracts_dir().join(rel)
}

pub fn source(rel: &str) -> String {
    std::fs::read_to_string(contract_path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn typed(rel: &str) -> TypedScript {
    load(&source(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Every bundled `.tz` file, relative to the contracts directory.
pub fn all_contracts() -> Vec<String> {
    let mut out = Vec::new();
    for sub in ["demo", "micro", "snippets"] {
        let mut names: Vec<String> = std::fs::read_dir(contracts_dir().join(sub))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".tz"))
            .collect();
        names.sort();
        out.extend(names.into_iter().map(|n| format!("{sub}/{n}")));
    }
    out
}
