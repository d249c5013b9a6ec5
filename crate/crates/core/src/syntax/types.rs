// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

/// Michelson types accepted by the analyzer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ty {
    Int,
    Nat,
    Mutez,
    Timestamp,
    Bool,
    String,
    Unit,
    Address,
    Operation,
    Contract(Box<Ty>),
    Pair(Box<Ty>, Box<Ty>),
    Option(Box<Ty>),
    Or(Box<Ty>, Box<Ty>),
    List(Box<Ty>),
    Set(Box<Ty>),
    Map(Box<Ty>, Box<Ty>),
}

/// The four integer flavours. They share one numeric domain but have
/// different legal ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IntKind {
    Int,
    Nat,
    Mutez,
    Timestamp,
}

impl IntKind {
    pub fn ty(self) -> Ty {
        match self {
            IntKind::Int => Ty::Int,
            IntKind::Nat => Ty::Nat,
            IntKind::Mutez => Ty::Mutez,
            IntKind::Timestamp => Ty::Timestamp,
        }
    }
}

impl fmt::Display for IntKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ty().fmt(f)
    }
}

impl Ty {
    pub fn pair(a: Ty, b: Ty) -> Ty {
        Ty::Pair(Box::new(a), Box::new(b))
    }

    pub fn option(a: Ty) -> Ty {
        Ty::Option(Box::new(a))
    }

    pub fn or(a: Ty, b: Ty) -> Ty {
        Ty::Or(Box::new(a), Box::new(b))
    }

    pub fn list(a: Ty) -> Ty {
        Ty::List(Box::new(a))
    }

    pub fn set(a: Ty) -> Ty {
        Ty::Set(Box::new(a))
    }

    pub fn map(k: Ty, v: Ty) -> Ty {
        Ty::Map(Box::new(k), Box::new(v))
    }

    pub fn contract(a: Ty) -> Ty {
        Ty::Contract(Box::new(a))
    }

    pub fn int_kind(&self) -> Option<IntKind> {
        match self {
            Ty::Int => Some(IntKind::Int),
            Ty::Nat => Some(IntKind::Nat),
            Ty::Mutez => Some(IntKind::Mutez),
            Ty::Timestamp => Some(IntKind::Timestamp),
            _ => None,
        }
    }

    /// Scalar comparable types: usable as set elements and map keys.
    pub fn is_simple_comparable(&self) -> bool {
        matches!(
            self,
            Ty::Int
                | Ty::Nat
                | Ty::Mutez
                | Ty::Timestamp
                | Ty::Bool
                | Ty::String
                | Ty::Unit
                | Ty::Address
        )
    }

    /// Comparable by `COMPARE`: scalars and pairs of comparables.
    pub fn is_comparable(&self) -> bool {
        match self {
            Ty::Pair(a, b) => a.is_comparable() && b.is_comparable(),
            t => t.is_simple_comparable(),
        }
    }

    /// True when `operation` or `contract` occurs anywhere inside.
    pub fn contains_operation(&self) -> bool {
        match self {
            Ty::Operation | Ty::Contract(_) => true,
            Ty::Pair(a, b) | Ty::Or(a, b) | Ty::Map(a, b) => {
                a.contains_operation() || b.contains_operation()
            }
            Ty::Option(a) | Ty::List(a) | Ty::Set(a) => a.contains_operation(),
            _ => false,
        }
    }

    /// Types that can be written as a `PUSH` literal.
    pub fn is_pushable(&self) -> bool {
        !self.contains_operation()
    }

    /// Checks the well-formedness rules on nested types.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Ty::Set(e) => {
                if !e.is_simple_comparable() {
                    return Err(format!("set element type {e} is not comparable"));
                }
                e.validate()
            }
            Ty::Map(k, v) => {
                if !k.is_simple_comparable() {
                    return Err(format!("map key type {k} is not comparable"));
                }
                v.validate()
            }
            Ty::Pair(a, b) | Ty::Or(a, b) => {
                a.validate()?;
                b.validate()
            }
            Ty::Option(a) | Ty::List(a) | Ty::Contract(a) => a.validate(),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => write!(f, "int"),
            Ty::Nat => write!(f, "nat"),
            Ty::Mutez => write!(f, "mutez"),
            Ty::Timestamp => write!(f, "timestamp"),
            Ty::Bool => write!(f, "bool"),
            Ty::String => write!(f, "string"),
            Ty::Unit => write!(f, "unit"),
            Ty::Address => write!(f, "address"),
            Ty::Operation => write!(f, "operation"),
            Ty::Contract(a) => write!(f, "(contract {a})"),
            Ty::Pair(a, b) => write!(f, "(pair {a} {b})"),
            Ty::Option(a) => write!(f, "(option {a})"),
            Ty::Or(a, b) => write!(f, "(or {a} {b})"),
            Ty::List(a) => write!(f, "(list {a})"),
            Ty::Set(a) => write!(f, "(set {a})"),
            Ty::Map(k, v) => write!(f, "(map {k} {v})"),
        }
    }
}

/// A type as written in the source, keeping field annotations.
/// Only the parameter type needs them (entry point names).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TyAst {
    pub ty: Ty,
    pub field: Option<String>,
    pub children: Vec<TyAst>,
}

impl TyAst {
    pub fn plain(ty: Ty) -> TyAst {
        TyAst {
            ty,
            field: None,
            children: Vec::new(),
        }
    }
}

impl fmt::Display for TyAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &self.ty {
            Ty::Contract(_) => "contract",
            Ty::Pair(..) => "pair",
            Ty::Option(_) => "option",
            Ty::Or(..) => "or",
            Ty::List(_) => "list",
            Ty::Set(_) => "set",
            Ty::Map(..) => "map",
            _ => {
                return match &self.field {
                    Some(n) => write!(f, "({} %{n})", self.ty),
                    None => write!(f, "{}", self.ty),
                }
            }
        };
        write!(f, "({name}")?;
        if let Some(n) = &self.field {
            write!(f, " %{n}")?;
        }
        for c in &self.children {
            write!(f, " {c}")?;
        }
        write!(f, ")")
    }
}
