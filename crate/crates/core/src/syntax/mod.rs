// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Parsing, printing and typechecking of the Michelson subset.

mod ast;
mod lexer;
mod parser;
mod print;
mod typecheck;
mod types;

use thiserror::Error;

pub use ast::{walk_instrs, Data, Instr, Op, Script, Span};
pub use parser::{int, parse_data, parse_script, parse_type};
pub use print::print_script;
pub use typecheck::{
    binop_type, entrypoints_of, show_stack, typecheck, unop_type, Entrypoint, Side, StackOut,
    TcError, TypedScript,
};
pub use types::{IntKind, Ty, TyAst};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: malformed literal: {msg}")]
    MalformedLiteral { span: Span, msg: String },
    #[error("{span}: unknown opcode {name}")]
    UnknownOpcode { span: Span, name: String },
    #[error("{span}: duplicate {section} section")]
    DuplicateSection { span: Span, section: String },
    #[error("missing {section} section")]
    MissingSection { section: String },
}

/// Parses and typechecks in one step.
pub fn load(text: &str) -> Result<TypedScript, LoadError> {
    let script = parse_script(text)?;
    Ok(typecheck(&script)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TcError),
}
