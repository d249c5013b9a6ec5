// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::syntax::{IntKind, Ty};

/// Context values available to every call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CtxVar {
    Sender,
    Source,
    Amount,
    Balance,
    Now,
    SelfAddress,
}

impl CtxVar {
    pub const ALL: [CtxVar; 6] = [
        CtxVar::Sender,
        CtxVar::Source,
        CtxVar::Amount,
        CtxVar::Balance,
        CtxVar::Now,
        CtxVar::SelfAddress,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CtxVar::Sender => "sender",
            CtxVar::Source => "source",
            CtxVar::Amount => "amount",
            CtxVar::Balance => "balance",
            CtxVar::Now => "now",
            CtxVar::SelfAddress => "self",
        }
    }

    pub fn ty(self) -> Ty {
        match self {
            CtxVar::Sender | CtxVar::Source | CtxVar::SelfAddress => Ty::Address,
            CtxVar::Amount | CtxVar::Balance => Ty::Mutez,
            CtxVar::Now => Ty::Timestamp,
        }
    }
}

/// Name of one scalar abstract variable.
///
/// `Fresh` variables come from a per-analysis monotone counter; every
/// instruction result gets new ones. `Canon` variables are the names
/// given to the cells of a stack at a join point, by stack position and
/// leaf index, so that two states reaching the same point agree on names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellVar {
    Ctx(CtxVar),
    Canon {
        point: u32,
        role: u8,
        pos: u16,
        leaf: u16,
    },
    Fresh(u32),
}

impl fmt::Display for CellVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellVar::Ctx(c) => write!(f, "${}", c.name()),
            CellVar::Canon {
                point,
                role,
                pos,
                leaf,
            } => write!(f, "c{point}.{role}.{pos}.{leaf}"),
            CellVar::Fresh(n) => write!(f, "v{n}"),
        }
    }
}

/// One step from a value to one of its components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    Fst,
    Snd,
    OptionTag,
    SomeContent,
    UnionTag,
    LeftContent,
    RightContent,
    ListElems,
    ListLen,
    SetElems,
    SetCard,
    MapKeys,
    MapVals,
    MapCard,
    MapSenderVal,
    MapNonSenderVal,
    MapSenderPresence,
    OpTarget,
    OpAmount,
    ContractAddr,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Step::Fst => "fst",
            Step::Snd => "snd",
            Step::OptionTag => "option-tag",
            Step::SomeContent => "some-content",
            Step::UnionTag => "union-tag",
            Step::LeftContent => "left-content",
            Step::RightContent => "right-content",
            Step::ListElems => "list-elems",
            Step::ListLen => "list-len",
            Step::SetElems => "set-elems",
            Step::SetCard => "set-card",
            Step::MapKeys => "map-keys",
            Step::MapVals => "map-vals",
            Step::MapCard => "map-card",
            Step::MapSenderVal => "map-sender-val",
            Step::MapNonSenderVal => "map-nonsender-val",
            Step::MapSenderPresence => "map-sender-presence",
            Step::OpTarget => "op-target",
            Step::OpAmount => "op-amount",
            Step::ContractAddr => "contract-addr",
        }
    }

    /// Steps into a container summary: the variable stands for many values.
    pub fn is_summary(self) -> bool {
        matches!(
            self,
            Step::ListElems
                | Step::SetElems
                | Step::MapKeys
                | Step::MapVals
                | Step::MapNonSenderVal
        )
    }
}

pub type Path = Vec<Step>;

pub fn show_path(p: &[Step]) -> String {
    if p.is_empty() {
        "ε".into()
    } else {
        p.iter().map(|s| s.name()).collect::<Vec<_>>().join(".")
    }
}

/// What kind of abstract value a scalar leaf carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LeafKind {
    Num(IntKind),
    /// Tags, cardinalities of sender slots: 0/1-valued.
    Flag,
    Bool,
    Str,
    Addr,
}

impl fmt::Display for LeafKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeafKind::Num(k) => write!(f, "{k}"),
            LeafKind::Flag => write!(f, "tag"),
            LeafKind::Bool => write!(f, "bool"),
            LeafKind::Str => write!(f, "string"),
            LeafKind::Addr => write!(f, "address"),
        }
    }
}

/// Scalar leaves of a type, in a fixed order. `sender_split` selects the
/// split abstraction for `map address mutez`.
pub fn decompose(ty: &Ty, sender_split: bool) -> Vec<(Path, LeafKind)> {
    let mut out = Vec::new();
    go(ty, sender_split, &mut Vec::new(), &mut out);
    out
}

fn go(ty: &Ty, split: bool, path: &mut Path, out: &mut Vec<(Path, LeafKind)>) {
    let child = |step: Step, t: &Ty, path: &mut Path, out: &mut Vec<(Path, LeafKind)>| {
        path.push(step);
        go(t, split, path, out);
        path.pop();
    };
    let leaf = |step: Step, kind: LeafKind, path: &mut Path, out: &mut Vec<(Path, LeafKind)>| {
        path.push(step);
        out.push((path.clone(), kind));
        path.pop();
    };
    match ty {
        Ty::Unit => {}
        Ty::Int | Ty::Nat | Ty::Mutez | Ty::Timestamp => {
            out.push((path.clone(), LeafKind::Num(ty.int_kind().unwrap())))
        }
        Ty::Bool => out.push((path.clone(), LeafKind::Bool)),
        Ty::String => out.push((path.clone(), LeafKind::Str)),
        Ty::Address => out.push((path.clone(), LeafKind::Addr)),
        Ty::Pair(a, b) => {
            child(Step::Fst, a, path, out);
            child(Step::Snd, b, path, out);
        }
        Ty::Option(a) => {
            leaf(Step::OptionTag, LeafKind::Flag, path, out);
            child(Step::SomeContent, a, path, out);
        }
        Ty::Or(a, b) => {
            leaf(Step::UnionTag, LeafKind::Flag, path, out);
            child(Step::LeftContent, a, path, out);
            child(Step::RightContent, b, path, out);
        }
        Ty::List(a) => {
            child(Step::ListElems, a, path, out);
            leaf(Step::ListLen, LeafKind::Num(IntKind::Nat), path, out);
        }
        Ty::Set(a) => {
            child(Step::SetElems, a, path, out);
            leaf(Step::SetCard, LeafKind::Num(IntKind::Nat), path, out);
        }
        Ty::Map(k, v) => {
            child(Step::MapKeys, k, path, out);
            if split && is_split_map(k, v) {
                leaf(Step::MapSenderVal, LeafKind::Num(IntKind::Mutez), path, out);
                leaf(
                    Step::MapNonSenderVal,
                    LeafKind::Num(IntKind::Mutez),
                    path,
                    out,
                );
                leaf(Step::MapSenderPresence, LeafKind::Flag, path, out);
            } else {
                child(Step::MapVals, v, path, out);
            }
            leaf(Step::MapCard, LeafKind::Num(IntKind::Nat), path, out);
        }
        Ty::Operation => {
            leaf(Step::OpTarget, LeafKind::Addr, path, out);
            leaf(Step::OpAmount, LeafKind::Num(IntKind::Mutez), path, out);
        }
        Ty::Contract(_) => leaf(Step::ContractAddr, LeafKind::Addr, path, out),
    }
}

/// Maps given the sender-split abstraction.
pub fn is_split_map(k: &Ty, v: &Ty) -> bool {
    *k == Ty::Address && *v == Ty::Mutez
}
