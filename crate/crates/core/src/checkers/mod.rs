// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Verdicts over analysis results.

use std::fmt;

use serde::Serialize;

use crate::analyzer::{Alarm, Analysis, Category, Config};
use crate::syntax::{IntKind, Ty};

/// Outcome of checking one property.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Status {
    Proved,
    Alarm {
        alarms: Vec<Alarm>,
    },
    NotApplicable {
        reason: String,
    },
    /// The analysis could not decide, e.g. it was stopped or ran with too
    /// few domains for this property.
    Unknown {
        reason: String,
    },
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Proved => "proved",
            Status::Alarm { .. } => "alarm",
            Status::NotApplicable { .. } => "not-applicable",
            Status::Unknown { .. } => "unknown",
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, Status::Proved)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub property: String,
    #[serde(flatten)]
    pub status: Status,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.property, self.status.name())?;
        match &self.status {
            Status::Alarm { alarms } => write!(
                f,
                " ({} alarm{})",
                alarms.len(),
                if alarms.len() == 1 { "" } else { "s" }
            ),
            Status::NotApplicable { reason } | Status::Unknown { reason } => {
                write!(f, " ({reason})")
            }
            Status::Proved => Ok(()),
        }
    }
}

pub const OWNER_ONLY_DECREASE: &str = "owner-only-decrease";

/// Name of the property "no alarm of category `c`".
pub fn property_of(c: Category) -> &'static str {
    match c {
        Category::MutezOverflow => "no-mutez-overflow",
        Category::ShiftOverflow => "no-shift-overflow",
        Category::AlwaysFail => "not-always-fail",
        Category::OwnerDecrease => OWNER_ONLY_DECREASE,
    }
}

/// Whether `ty` holds a `map address mutez` somewhere.
pub fn has_balance_map(ty: &Ty) -> bool {
    match ty {
        Ty::Map(k, v) => {
            (**k == Ty::Address && v.int_kind() == Some(IntKind::Mutez))
                || has_balance_map(k)
                || has_balance_map(v)
        }
        Ty::Pair(a, b) | Ty::Or(a, b) => has_balance_map(a) || has_balance_map(b),
        Ty::Option(a) | Ty::List(a) | Ty::Set(a) => has_balance_map(a),
        _ => false,
    }
}

fn verdict(property: &str, status: Status) -> Verdict {
    Verdict {
        property: property.into(),
        status,
    }
}

fn from_alarms(a: &Analysis, c: Category) -> Status {
    let alarms: Vec<Alarm> = a.alarms_of(c).cloned().collect();
    if !alarms.is_empty() {
        Status::Alarm { alarms }
    } else if let Some(why) = &a.aborted {
        Status::Unknown {
            reason: format!("analysis stopped: {why}"),
        }
    } else {
        Status::Proved
    }
}

/// Other users' balances in an `address → mutez` map never decrease.
/// Needs the sender-split maps and the storage fixpoint over call
/// sequences.
pub fn check_owner_only_decrease(a: &Analysis, cfg: &Config) -> Verdict {
    let status = if !has_balance_map(&a.storage_ty) {
        Status::NotApplicable {
            reason: "the storage holds no address → mutez map".into(),
        }
    } else {
        match from_alarms(a, Category::OwnerDecrease) {
            Status::Proved if !cfg.sender_split => Status::Unknown {
                reason: "needs sender-split maps".into(),
            },
            Status::Proved if !cfg.multi_call => Status::Unknown {
                reason: "needs the multi-call analysis".into(),
            },
            s => s,
        }
    };
    verdict(OWNER_ONLY_DECREASE, status)
}

/// Which entry points always fail, and whether the whole contract does.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlwaysFail {
    pub entrypoints: Vec<(String, bool)>,
    pub overall: bool,
}

pub fn check_always_fail(a: &Analysis) -> AlwaysFail {
    AlwaysFail {
        entrypoints: a
            .entrypoints
            .iter()
            .map(|o| (o.name.clone(), o.always_fails))
            .collect(),
        overall: a.always_fails,
    }
}

/// One verdict per alarm category; the owner property only when it
/// applies.
pub fn verdicts(a: &Analysis, cfg: &Config) -> Vec<Verdict> {
    let mut out: Vec<Verdict> = [
        Category::MutezOverflow,
        Category::ShiftOverflow,
        Category::AlwaysFail,
    ]
    .into_iter()
    .map(|c| verdict(property_of(c), from_alarms(a, c)))
    .collect();
    out.push(check_owner_only_decrease(a, cfg));
    out
}
