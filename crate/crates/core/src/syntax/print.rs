// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use super::ast::{Instr, Op, Script};

/// Renders a script back to concrete syntax. Macros come out expanded.
pub fn print_script(s: &Script) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "storage {};", s.storage);
    let _ = writeln!(out, "parameter {};", s.parameter);
    out.push_str("code ");
    print_seq(&mut out, &s.code, 1);
    out.push_str(";\n");
    out
}

pub fn print_seq(out: &mut String, code: &[Instr], indent: usize) {
    if code.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for (k, i) in code.iter().enumerate() {
        out.push_str(&"  ".repeat(indent));
        print_instr(out, i, indent);
        if k + 1 < code.len() {
            out.push(';');
        }
        out.push('\n');
    }
    out.push_str(&"  ".repeat(indent - 1));
    out.push('}');
}

fn print_instr(out: &mut String, i: &Instr, indent: usize) {
    let name = i.op.name();
    match &i.op {
        Op::Push(t, d) => {
            let _ = write!(out, "PUSH {t} {}", paren_data(d));
        }
        Op::Drop(n) | Op::Dup(n) | Op::Dig(n) | Op::Dug(n) => {
            let _ = write!(out, "{name} {n}");
        }
        Op::Dip(n, b) => {
            let _ = write!(out, "DIP {n} ");
            print_seq(out, b, indent + 1);
        }
        Op::None(t)
        | Op::Left(t)
        | Op::Right(t)
        | Op::Nil(t)
        | Op::EmptySet(t)
        | Op::Contract(t) => {
            let _ = write!(out, "{name} {t}");
        }
        Op::EmptyMap(k, v) => {
            let _ = write!(out, "EMPTY_MAP {k} {v}");
        }
        Op::IfNone(a, b) | Op::IfLeft(a, b) | Op::IfCons(a, b) | Op::If(a, b) => {
            out.push_str(name);
            out.push(' ');
            print_seq(out, a, indent + 1);
            out.push(' ');
            print_seq(out, b, indent + 1);
        }
        Op::Iter(b) | Op::Map(b) | Op::Loop(b) | Op::LoopLeft(b) => {
            out.push_str(name);
            out.push(' ');
            print_seq(out, b, indent + 1);
        }
        Op::Seq(b) => print_seq(out, b, indent + 1),
        _ => out.push_str(name),
    }
}

fn paren_data(d: &super::ast::Data) -> String {
    use super::ast::Data;
    match d {
        Data::Elt(..) => format!("({d})"),
        _ => d.to_string(),
    }
}
