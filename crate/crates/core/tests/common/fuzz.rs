// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Random scripts and call sequences checked against their analyses.

use std::sync::atomic::{AtomicUsize, Ordering};

use michelstat::analyzer::{analyze, Analysis, Config, Domains, InitialStorage};
use michelstat::concrete::Value;
use michelstat::syntax::{load, TypedScript};
use rand::Rng;
use rayon::prelude::*;

use super::gen::{Gen, GenScript};
use super::oracle::{check_call, Checked};

const INPUTS: usize = 4;

fn config(g: &mut Gen, storage: InitialStorage) -> Config {
    Config {
        domains: if g.rng.gen_bool(0.5) {
            Domains::Intv
        } else {
            Domains::IntvExp
        },
        sender_split: g.rng.gen_bool(0.5),
        narrow: g.rng.gen_range(0..3),
        storage,
        record_branches: true,
        check_types: true,
        ..Config::default()
    }
}

pub struct Outcome {
    pub pairs: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
}

/// Analyzes one random script and checks `INPUTS` random calls.
fn one(seed: u64) -> Outcome {
    let mut g = Gen::new(seed);
    let GenScript {
        source, storage, ..
    } = g.script();
    let script = load(&source)
        .unwrap_or_else(|e| panic!("seed {seed}: generated script rejected: {e}\n{source}"));
    // half the scripts start from a known storage, the rest from any
    let fixed = g.rng.gen_bool(0.5).then(|| g.value(&storage));
    let init = fixed
        .clone()
        .map_or(InitialStorage::Arbitrary, InitialStorage::Value);
    let cfg = config(&mut g, init);
    let a = analyze(&script, &cfg);
    let mut out = Outcome {
        pairs: 0,
        skipped: 0,
        failures: vec![],
    };
    if a.aborted.is_some() {
        out.skipped += INPUTS;
        return out;
    }
    for _ in 0..INPUTS {
        let entry = &script.entrypoints[g.rng.gen_range(0..script.entrypoints.len())];
        let (ep, arg) = (entry.name.clone(), g.value(&entry.ty));
        let st: Value = fixed.clone().unwrap_or_else(|| g.value(&storage));
        let ctx = g.context();
        match check_call(&a, &script, &ep, &arg, &st, &ctx) {
            Ok(Checked::Skipped) => out.skipped += 1,
            Ok(_) => out.pairs += 1,
            Err(m) => {
                out.pairs += 1;
                out.failures.push(format!(
                    "seed {seed} ({:?}, split {}, narrow {}): {m}\n  call {ep} {arg} on {st}, sender {}, amount {}\n{source}",
                    cfg.domains, cfg.sender_split, cfg.narrow, ctx.sender, ctx.amount
                ));
            }
        }
    }
    out
}

/// Single-call soundness over `scripts` random scripts, in parallel.
pub fn soundness(scripts: u64) -> Outcome {
    let pairs = AtomicUsize::new(0);
    let skipped = AtomicUsize::new(0);
    let failures = (0..scripts)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let o = one(seed);
            pairs.fetch_add(o.pairs, Ordering::Relaxed);
            skipped.fetch_add(o.skipped, Ordering::Relaxed);
            o.failures
        })
        .collect();
    Outcome {
        pairs: pairs.into_inner(),
        skipped: skipped.into_inner(),
        failures,
    }
}

/// Concrete calls from `s0`, each checked against `a`; the storage is
/// threaded through successful calls. Returns the final storage or the
/// first violation.
pub fn run_sequence(
    a: &Analysis,
    script: &TypedScript,
    s0: Value,
    calls: usize,
    g: &mut Gen,
) -> Result<Value, String> {
    let mut st = s0;
    for n in 0..calls {
        let entry = &script.entrypoints[g.rng.gen_range(0..script.entrypoints.len())];
        let arg = g.value(&entry.ty);
        let ctx = g.context();
        match check_call(a, script, &entry.name, &arg, &st, &ctx) {
            Ok(Checked::Stored(next)) => st = next,
            Ok(_) => {}
            Err(m) => {
                return Err(format!(
                    "call {n} ({} {arg} from {}): {m}",
                    entry.name, ctx.sender
                ))
            }
        }
    }
    Ok(st)
}
