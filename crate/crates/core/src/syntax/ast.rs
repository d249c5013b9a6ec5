// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;

use super::types::{Ty, TyAst};

/// 1-based line/column position in the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Literal data as written in the source (`PUSH`, CLI arguments).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Data {
    Int(BigInt),
    String(String),
    True,
    False,
    Unit,
    Pair(Box<Data>, Box<Data>),
    Some(Box<Data>),
    None,
    Left(Box<Data>),
    Right(Box<Data>),
    Seq(Vec<Data>),
    Elt(Box<Data>, Box<Data>),
}

impl fmt::Display for Data {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Data::Int(n) => write!(f, "{n}"),
            Data::String(s) => write!(f, "{s:?}"),
            Data::True => write!(f, "True"),
            Data::False => write!(f, "False"),
            Data::Unit => write!(f, "Unit"),
            Data::Pair(a, b) => write!(f, "(Pair {a} {b})"),
            Data::Some(a) => write!(f, "(Some {a})"),
            Data::None => write!(f, "None"),
            Data::Left(a) => write!(f, "(Left {a})"),
            Data::Right(a) => write!(f, "(Right {a})"),
            Data::Elt(k, v) => write!(f, "Elt {k} {v}"),
            Data::Seq(items) => {
                write!(f, "{{")?;
                for (i, d) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, " {d}")?;
                }
                write!(f, " }}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Push(Ty, Data),
    Unit,
    Drop(usize),
    Dup(usize),
    Swap,
    Dig(usize),
    Dug(usize),
    Dip(usize, Vec<Instr>),
    Pair,
    Unpair,
    Car,
    Cdr,
    Some,
    None(Ty),
    IfNone(Vec<Instr>, Vec<Instr>),
    Left(Ty),
    Right(Ty),
    IfLeft(Vec<Instr>, Vec<Instr>),
    Nil(Ty),
    Cons,
    IfCons(Vec<Instr>, Vec<Instr>),
    EmptySet(Ty),
    EmptyMap(Ty, Ty),
    Mem,
    Get,
    Update,
    Size,
    Iter(Vec<Instr>),
    Map(Vec<Instr>),
    Add,
    Sub,
    Mul,
    Ediv,
    Neg,
    Abs,
    IsNat,
    Int,
    Lsl,
    Lsr,
    And,
    Or,
    Xor,
    Not,
    Compare,
    Eq,
    Neq,
    Lt,
    Gt,
    Le,
    Ge,
    If(Vec<Instr>, Vec<Instr>),
    Loop(Vec<Instr>),
    LoopLeft(Vec<Instr>),
    Failwith,
    Sender,
    Source,
    Amount,
    Balance,
    Now,
    SelfAddress,
    Contract(Ty),
    TransferTokens,
    Seq(Vec<Instr>),
}

/// One instruction with its source position. `id` is unique within a
/// script (assigned in pre-order by the parser) and keys per-instruction
/// tables such as typing annotations.
#[derive(Debug, Clone)]
pub struct Instr {
    pub op: Op,
    pub span: Span,
    pub id: u32,
}

/// Structural equality ignores spans and ids.
impl PartialEq for Instr {
    fn eq(&self, other: &Self) -> bool {
        self.op == other.op
    }
}

impl Eq for Instr {}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Push(..) => "PUSH",
            Op::Unit => "UNIT",
            Op::Drop(_) => "DROP",
            Op::Dup(_) => "DUP",
            Op::Swap => "SWAP",
            Op::Dig(_) => "DIG",
            Op::Dug(_) => "DUG",
            Op::Dip(..) => "DIP",
            Op::Pair => "PAIR",
            Op::Unpair => "UNPAIR",
            Op::Car => "CAR",
            Op::Cdr => "CDR",
            Op::Some => "SOME",
            Op::None(_) => "NONE",
            Op::IfNone(..) => "IF_NONE",
            Op::Left(_) => "LEFT",
            Op::Right(_) => "RIGHT",
            Op::IfLeft(..) => "IF_LEFT",
            Op::Nil(_) => "NIL",
            Op::Cons => "CONS",
            Op::IfCons(..) => "IF_CONS",
            Op::EmptySet(_) => "EMPTY_SET",
            Op::EmptyMap(..) => "EMPTY_MAP",
            Op::Mem => "MEM",
            Op::Get => "GET",
            Op::Update => "UPDATE",
            Op::Size => "SIZE",
            Op::Iter(_) => "ITER",
            Op::Map(_) => "MAP",
            Op::Add => "ADD",
            Op::Sub => "SUB",
            Op::Mul => "MUL",
            Op::Ediv => "EDIV",
            Op::Neg => "NEG",
            Op::Abs => "ABS",
            Op::IsNat => "ISNAT",
            Op::Int => "INT",
            Op::Lsl => "LSL",
            Op::Lsr => "LSR",
            Op::And => "AND",
            Op::Or => "OR",
            Op::Xor => "XOR",
            Op::Not => "NOT",
            Op::Compare => "COMPARE",
            Op::Eq => "EQ",
            Op::Neq => "NEQ",
            Op::Lt => "LT",
            Op::Gt => "GT",
            Op::Le => "LE",
            Op::Ge => "GE",
            Op::If(..) => "IF",
            Op::Loop(_) => "LOOP",
            Op::LoopLeft(_) => "LOOP_LEFT",
            Op::Failwith => "FAILWITH",
            Op::Sender => "SENDER",
            Op::Source => "SOURCE",
            Op::Amount => "AMOUNT",
            Op::Balance => "BALANCE",
            Op::Now => "NOW",
            Op::SelfAddress => "SELF_ADDRESS",
            Op::Contract(_) => "CONTRACT",
            Op::TransferTokens => "TRANSFER_TOKENS",
            Op::Seq(_) => "{}",
        }
    }
}

/// Parsed, not yet typechecked, contract.
#[derive(Debug, Clone)]
pub struct Script {
    pub storage: TyAst,
    pub parameter: TyAst,
    pub code: Vec<Instr>,
    /// Position of the `code` keyword; used for whole-contract alarms.
    pub code_span: Span,
}

impl PartialEq for Script {
    fn eq(&self, other: &Self) -> bool {
        self.storage == other.storage
            && self.parameter == other.parameter
            && self.code == other.code
    }
}

impl Eq for Script {}

/// Calls `f` on every instruction of `code`, nested bodies included.
pub fn walk_instrs<'a>(code: &'a [Instr], f: &mut impl FnMut(&'a Instr)) {
    for i in code {
        f(i);
        match &i.op {
            Op::Dip(_, b)
            | Op::Iter(b)
            | Op::Map(b)
            | Op::Loop(b)
            | Op::LoopLeft(b)
            | Op::Seq(b) => walk_instrs(b, f),
            Op::IfNone(a, b) | Op::IfLeft(a, b) | Op::IfCons(a, b) | Op::If(a, b) => {
                walk_instrs(a, f);
                walk_instrs(b, f);
            }
            _ => {}
        }
    }
}
