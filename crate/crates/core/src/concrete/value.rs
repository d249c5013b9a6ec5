// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_traits::{ToPrimitive, Zero};

use crate::syntax::{Data, Ty};

/// Largest legal mutez amount, 2^63 - 1.
pub const MUTEZ_MAX: u64 = i64::MAX as u64;

/// A runtime value. The derived ordering is the `COMPARE` order for
/// comparable types: numbers numerically, strings and addresses
/// lexicographically, `False < True`, pairs lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(BigInt),
    Nat(BigInt),
    Mutez(u64),
    Timestamp(BigInt),
    Bool(bool),
    String(String),
    Unit,
    Address(String),
    Pair(Box<Value>, Box<Value>),
    Option(Option<Box<Value>>),
    Left(Box<Value>),
    Right(Box<Value>),
    List(Vec<Value>),
    Set(BTreeSet<Value>),
    Map(BTreeMap<Value, Value>),
    Contract(String),
    Operation(Box<Transfer>),
}

/// The only operation kind of the subset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transfer {
    pub target: String,
    pub amount: u64,
    pub arg: Value,
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn some(a: Value) -> Value {
        Value::Option(Some(Box::new(a)))
    }

    pub fn nat(n: u64) -> Value {
        Value::Nat(BigInt::from(n))
    }

    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn address(s: &str) -> Value {
        Value::Address(s.to_string())
    }

    /// Numeric payload of int/nat/mutez/timestamp values.
    pub fn as_int(&self) -> Option<BigInt> {
        match self {
            Value::Int(n) | Value::Nat(n) | Value::Timestamp(n) => Some(n.clone()),
            Value::Mutez(m) => Some(BigInt::from(*m)),
            _ => None,
        }
    }

    /// Builds a value of type `ty` from a literal.
    pub fn from_data(d: &Data, ty: &Ty) -> Result<Value, String> {
        let mismatch = || format!("literal {d} does not have type {ty}");
        Ok(match (ty, d) {
            (Ty::Int, Data::Int(n)) => Value::Int(n.clone()),
            (Ty::Timestamp, Data::Int(n)) => Value::Timestamp(n.clone()),
            (Ty::Nat, Data::Int(n)) => {
                if n.sign() == Sign::Minus {
                    return Err(format!("negative nat literal {n}"));
                }
                Value::Nat(n.clone())
            }
            (Ty::Mutez, Data::Int(n)) => {
                let m = n
                    .to_u64()
                    .filter(|m| *m <= MUTEZ_MAX)
                    .ok_or_else(|| format!("mutez literal {n} out of range"))?;
                Value::Mutez(m)
            }
            (Ty::Bool, Data::True) => Value::Bool(true),
            (Ty::Bool, Data::False) => Value::Bool(false),
            (Ty::String, Data::String(s)) => Value::String(s.clone()),
            (Ty::Address, Data::String(s)) => {
                if s.is_empty() {
                    return Err("empty address literal".into());
                }
                Value::Address(s.clone())
            }
            (Ty::Unit, Data::Unit) => Value::Unit,
            (Ty::Pair(a, b), Data::Pair(x, y)) => {
                Value::pair(Value::from_data(x, a)?, Value::from_data(y, b)?)
            }
            (Ty::Pair(a, b), Data::Seq(items)) if items.len() >= 2 => {
                // `{a; b; c}` is a right comb pair
                let first = Value::from_data(&items[0], a)?;
                let rest = if items.len() == 2 {
                    items[1].clone()
                } else {
                    Data::Seq(items[1..].to_vec())
                };
                Value::pair(first, Value::from_data(&rest, b)?)
            }
            (Ty::Option(_), Data::None) => Value::Option(None),
            (Ty::Option(a), Data::Some(x)) => Value::some(Value::from_data(x, a)?),
            (Ty::Or(a, _), Data::Left(x)) => Value::Left(Box::new(Value::from_data(x, a)?)),
            (Ty::Or(_, b), Data::Right(x)) => Value::Right(Box::new(Value::from_data(x, b)?)),
            (Ty::List(a), Data::Seq(items)) => Value::List(
                items
                    .iter()
                    .map(|x| Value::from_data(x, a))
                    .collect::<Result<_, _>>()?,
            ),
            (Ty::Set(a), Data::Seq(items)) => {
                let mut set = BTreeSet::new();
                for x in items {
                    if !set.insert(Value::from_data(x, a)?) {
                        return Err(format!("duplicate set element {x}"));
                    }
                }
                Value::Set(set)
            }
            (Ty::Map(k, v), Data::Seq(items)) => {
                let mut map = BTreeMap::new();
                for x in items {
                    let Data::Elt(kd, vd) = x else {
                        return Err(format!("expected Elt in map literal, found {x}"));
                    };
                    let key = Value::from_data(kd, k)?;
                    if map.insert(key, Value::from_data(vd, v)?).is_some() {
                        return Err(format!("duplicate map key {kd}"));
                    }
                }
                Value::Map(map)
            }
            _ => return Err(mismatch()),
        })
    }

    /// Checks that the value inhabits `ty`, including range invariants.
    pub fn has_type(&self, ty: &Ty) -> bool {
        match (self, ty) {
            (Value::Int(_), Ty::Int) | (Value::Timestamp(_), Ty::Timestamp) => true,
            (Value::Nat(n), Ty::Nat) => n.sign() != Sign::Minus,
            (Value::Mutez(m), Ty::Mutez) => *m <= MUTEZ_MAX,
            (Value::Bool(_), Ty::Bool)
            | (Value::String(_), Ty::String)
            | (Value::Unit, Ty::Unit)
            | (Value::Address(_), Ty::Address)
            | (Value::Contract(_), Ty::Contract(_))
            | (Value::Operation(_), Ty::Operation) => true,
            (Value::Pair(a, b), Ty::Pair(x, y)) => a.has_type(x) && b.has_type(y),
            (Value::Option(o), Ty::Option(t)) => o.as_ref().is_none_or(|v| v.has_type(t)),
            (Value::Left(a), Ty::Or(t, _)) | (Value::Right(a), Ty::Or(_, t)) => a.has_type(t),
            (Value::List(l), Ty::List(t)) => l.iter().all(|v| v.has_type(t)),
            (Value::Set(s), Ty::Set(t)) => s.iter().all(|v| v.has_type(t)),
            (Value::Map(m), Ty::Map(k, v)) => m.iter().all(|(a, b)| a.has_type(k) && b.has_type(v)),
            _ => false,
        }
    }

    /// The canonical "empty" value of a type, used as a default initial
    /// storage. Addresses have no canonical value and yield `None`.
    pub fn default_of(ty: &Ty) -> Option<Value> {
        Some(match ty {
            Ty::Int => Value::Int(BigInt::zero()),
            Ty::Nat => Value::Nat(BigInt::zero()),
            Ty::Mutez => Value::Mutez(0),
            Ty::Timestamp => Value::Timestamp(BigInt::zero()),
            Ty::Bool => Value::Bool(false),
            Ty::String => Value::String(String::new()),
            Ty::Unit => Value::Unit,
            Ty::Pair(a, b) => Value::pair(Value::default_of(a)?, Value::default_of(b)?),
            Ty::Option(_) => Value::Option(None),
            Ty::Or(a, _) => Value::Left(Box::new(Value::default_of(a)?)),
            Ty::List(_) => Value::List(vec![]),
            Ty::Set(_) => Value::Set(BTreeSet::new()),
            Ty::Map(..) => Value::Map(BTreeMap::new()),
            Ty::Address | Ty::Operation | Ty::Contract(_) => return None,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) | Value::Nat(n) | Value::Timestamp(n) => write!(f, "{n}"),
            Value::Mutez(m) => write!(f, "{m}"),
            Value::Bool(true) => write!(f, "True"),
            Value::Bool(false) => write!(f, "False"),
            Value::String(s) | Value::Address(s) => write!(f, "{s:?}"),
            Value::Unit => write!(f, "Unit"),
            Value::Pair(a, b) => write!(f, "(Pair {a} {b})"),
            Value::Option(None) => write!(f, "None"),
            Value::Option(Some(a)) => write!(f, "(Some {a})"),
            Value::Left(a) => write!(f, "(Left {a})"),
            Value::Right(a) => write!(f, "(Right {a})"),
            Value::Contract(a) => write!(f, "(contract {a:?})"),
            Value::Operation(t) => write!(f, "(transfer {:?} {} {})", t.target, t.amount, t.arg),
            Value::List(items) => write_seq(f, items.iter().map(|v| v.to_string())),
            Value::Set(items) => write_seq(f, items.iter().map(|v| v.to_string())),
            Value::Map(m) => write_seq(f, m.iter().map(|(k, v)| format!("Elt {k} {v}"))),
        }
    }
}

fn write_seq(f: &mut fmt::Formatter<'_>, items: impl Iterator<Item = String>) -> fmt::Result {
    let items: Vec<String> = items.collect();
    if items.is_empty() {
        write!(f, "{{}}")
    } else {
        write!(f, "{{ {} }}", items.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_data;

    #[test]
    fn literal_conversion() {
        let d = parse_data("{ Elt \"tz1a\" 10 ; Elt \"tz1b\" 3 }").unwrap();
        let v = Value::from_data(&d, &Ty::map(Ty::Address, Ty::Mutez)).unwrap();
        assert_eq!(v.to_string(), "{ Elt \"tz1a\" 10; Elt \"tz1b\" 3 }");
        assert!(Value::from_data(&parse_data("-1").unwrap(), &Ty::Nat).is_err());
        assert!(Value::from_data(&parse_data("9223372036854775808").unwrap(), &Ty::Mutez).is_err());
        assert!(Value::from_data(&parse_data("9223372036854775807").unwrap(), &Ty::Mutez).is_ok());
    }

    #[test]
    fn compare_order() {
        assert!(Value::Bool(false) < Value::Bool(true));
        assert!(
            Value::pair(Value::int(1), Value::int(9)) < Value::pair(Value::int(2), Value::int(0))
        );
        assert!(Value::address("KT1") < Value::address("tz1"));
    }
}
