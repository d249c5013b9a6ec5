// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for the `.tz` subset. Macros are expanded
//! here, so later stages only ever see core instructions.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::ast::{Data, Instr, Op, Script, Span};
use super::lexer::{tokenize, Tok, Token};
use super::types::{Ty, TyAst};
use super::ParseError;

pub fn parse_script(text: &str) -> Result<Script, ParseError> {
    let mut p = Parser::new(text)?;
    let mut storage = None;
    let mut parameter = None;
    let mut code = None;
    while !p.at_end() {
        let (kw, span) = p.ident()?;
        match kw.as_str() {
            "storage" | "parameter" => {
                let t = p.ty_full()?;
                let slot = if kw == "storage" {
                    &mut storage
                } else {
                    &mut parameter
                };
                if slot.is_some() {
                    return Err(ParseError::DuplicateSection { span, section: kw });
                }
                *slot = Some(t);
            }
            "code" => {
                if code.is_some() {
                    return Err(ParseError::DuplicateSection { span, section: kw });
                }
                let body = p.seq()?;
                code = Some((body, span));
            }
            other => {
                return Err(ParseError::Syntax {
                    span,
                    msg: format!("expected storage, parameter or code, found {other:?}"),
                })
            }
        }
        if p.peek_is(&Tok::Semi) {
            p.next()?;
        } else if !p.at_end() {
            return Err(p.unexpected("';'"));
        }
    }
    let missing = |s: &str| ParseError::MissingSection { section: s.into() };
    let (code, code_span) = code.ok_or_else(|| missing("code"))?;
    Ok(Script {
        storage: storage.ok_or_else(|| missing("storage"))?,
        parameter: parameter.ok_or_else(|| missing("parameter"))?,
        code,
        code_span,
    })
}

/// Parses a standalone data literal such as `(Pair 1 "a")` or `{ Elt "k" 3 }`.
pub fn parse_data(text: &str) -> Result<Data, ParseError> {
    let mut p = Parser::new(text)?;
    let d = p.data_full()?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(d)
}

/// Parses a standalone type such as `pair nat (option address)`.
pub fn parse_type(text: &str) -> Result<TyAst, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.ty_full()?;
    if !p.at_end() {
        return Err(p.unexpected("end of input"));
    }
    Ok(t)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: u32,
    end_span: Span,
}

const COMPARISONS: [&str; 6] = ["EQ", "NEQ", "LT", "GT", "LE", "GE"];

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        let toks = tokenize(text)?;
        let lines = text.lines().count().max(1) as u32;
        Ok(Parser {
            toks,
            pos: 0,
            next_id: 0,
            end_span: Span {
                line: lines,
                col: 1,
            },
        })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_is(&self, t: &Tok) -> bool {
        self.peek().map(|x| &x.tok == t).unwrap_or(false)
    }

    fn span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or(self.end_span)
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        let t = self.toks.get(self.pos).cloned().ok_or(ParseError::Syntax {
            span: self.end_span,
            msg: "unexpected end of input".into(),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::Syntax {
                span: t.span,
                msg: format!("expected {wanted}, found {:?}", t.tok),
            },
            None => ParseError::Syntax {
                span: self.end_span,
                msg: format!("expected {wanted}, found end of input"),
            },
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek_is(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Ident(s),
                span,
            }) => {
                let r = (s.clone(), *span);
                self.pos += 1;
                Ok(r)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    /// Consumes annotations, returning the first field (`%`) annotation.
    fn annots(&mut self) -> Option<String> {
        let mut field = None;
        while let Some(Token {
            tok: Tok::Annot(a), ..
        }) = self.peek()
        {
            if !a.starts_with('@') && !a.starts_with(':') && field.is_none() {
                field = Some(a.clone());
            }
            self.pos += 1;
        }
        field
    }

    // ---- types ----

    fn ty_atom(&mut self) -> Result<TyAst, ParseError> {
        if self.peek_is(&Tok::LParen) {
            self.pos += 1;
            let t = self.ty_full()?;
            self.expect(Tok::RParen, "')'")?;
            return Ok(t);
        }
        let (name, span) = self.ident()?;
        let field = self.annots();
        let ty = match name.as_str() {
            "int" => Ty::Int,
            "nat" => Ty::Nat,
            "mutez" => Ty::Mutez,
            "timestamp" => Ty::Timestamp,
            "bool" => Ty::Bool,
            "string" => Ty::String,
            "unit" => Ty::Unit,
            "address" => Ty::Address,
            "operation" => Ty::Operation,
            _ => {
                return Err(ParseError::Syntax {
                    span,
                    msg: format!("type {name:?} needs parentheses or is unknown"),
                })
            }
        };
        Ok(TyAst {
            ty,
            field,
            children: vec![],
        })
    }

    fn ty_full(&mut self) -> Result<TyAst, ParseError> {
        if self.peek_is(&Tok::LParen) {
            return self.ty_atom();
        }
        let is_ctor = matches!(
            self.peek().map(|t| &t.tok),
            Some(Tok::Ident(n)) if matches!(n.as_str(), "option" | "list" | "set" | "contract" | "or" | "map" | "big_map" | "pair")
        );
        if !is_ctor {
            return self.ty_atom();
        }
        let (name, span) = self.ident()?;
        let field = self.annots();
        let arity = match name.as_str() {
            "option" | "list" | "set" | "contract" => 1,
            "pair" => 0,
            _ => 2,
        };
        if name == "big_map" {
            return Err(ParseError::Syntax {
                span,
                msg: "big_map is not supported".into(),
            });
        }
        let mut children = Vec::new();
        if arity == 0 {
            while matches!(
                self.peek().map(|t| &t.tok),
                Some(Tok::Ident(_)) | Some(Tok::LParen)
            ) {
                children.push(self.ty_atom()?);
            }
            if children.len() < 2 {
                return Err(ParseError::Syntax {
                    span,
                    msg: "pair needs at least two components".into(),
                });
            }
            // right comb: pair a b c == pair a (pair b c)
            while children.len() > 2 {
                let b = children.pop().unwrap();
                let a = children.pop().unwrap();
                children.push(TyAst {
                    ty: Ty::pair(a.ty.clone(), b.ty.clone()),
                    field: None,
                    children: vec![a, b],
                });
            }
        } else {
            for _ in 0..arity {
                children.push(self.ty_atom()?);
            }
        }
        let c = |i: usize| Box::new(children[i].ty.clone());
        let ty = match name.as_str() {
            "option" => Ty::Option(c(0)),
            "list" => Ty::List(c(0)),
            "set" => Ty::Set(c(0)),
            "contract" => Ty::Contract(c(0)),
            "or" => Ty::Or(c(0), c(1)),
            "map" => Ty::Map(c(0), c(1)),
            _ => Ty::Pair(c(0), c(1)),
        };
        Ok(TyAst {
            ty,
            field,
            children,
        })
    }

    fn ty_arg(&mut self) -> Result<Ty, ParseError> {
        Ok(self.ty_atom()?.ty)
    }

    // ---- data ----

    fn data_atom(&mut self) -> Result<Data, ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Int(n) => Ok(Data::Int(n)),
            Tok::Str(s) => Ok(Data::String(s)),
            Tok::LParen => {
                let d = self.data_full()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(d)
            }
            Tok::LBrace => {
                let mut items = Vec::new();
                while !self.peek_is(&Tok::RBrace) {
                    items.push(self.data_full()?);
                    if self.peek_is(&Tok::Semi) {
                        self.pos += 1;
                    } else if !self.peek_is(&Tok::RBrace) {
                        return Err(self.unexpected("';' or '}'"));
                    }
                }
                self.pos += 1;
                Ok(Data::Seq(items))
            }
            Tok::Ident(name) => match name.as_str() {
                "True" => Ok(Data::True),
                "False" => Ok(Data::False),
                "Unit" => Ok(Data::Unit),
                "None" => Ok(Data::None),
                _ => Err(ParseError::MalformedLiteral {
                    span: t.span,
                    msg: format!("{name} needs parentheses or is not a literal"),
                }),
            },
            other => Err(ParseError::MalformedLiteral {
                span: t.span,
                msg: format!("unexpected {other:?} in literal"),
            }),
        }
    }

    fn data_full(&mut self) -> Result<Data, ParseError> {
        let span = self.span();
        let name = match self.peek() {
            Some(Token {
                tok: Tok::Ident(n), ..
            }) => n.clone(),
            _ => return self.data_atom(),
        };
        match name.as_str() {
            "Pair" => {
                self.pos += 1;
                let mut items = Vec::new();
                while !matches!(
                    self.peek().map(|t| &t.tok),
                    None | Some(Tok::RParen) | Some(Tok::Semi) | Some(Tok::RBrace)
                ) {
                    items.push(self.data_atom()?);
                }
                if items.len() < 2 {
                    return Err(ParseError::MalformedLiteral {
                        span,
                        msg: "Pair needs at least two components".into(),
                    });
                }
                let mut acc = items.pop().unwrap();
                while let Some(a) = items.pop() {
                    acc = Data::Pair(Box::new(a), Box::new(acc));
                }
                Ok(acc)
            }
            "Some" | "Left" | "Right" => {
                self.pos += 1;
                let a = Box::new(self.data_atom()?);
                Ok(match name.as_str() {
                    "Some" => Data::Some(a),
                    "Left" => Data::Left(a),
                    _ => Data::Right(a),
                })
            }
            "Elt" => {
                self.pos += 1;
                let k = self.data_atom()?;
                let v = self.data_atom()?;
                Ok(Data::Elt(Box::new(k), Box::new(v)))
            }
            _ => self.data_atom(),
        }
    }

    // ---- instructions ----

    fn seq(&mut self) -> Result<Vec<Instr>, ParseError> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut out = Vec::new();
        while !self.peek_is(&Tok::RBrace) {
            self.instr(&mut out)?;
            if self.peek_is(&Tok::Semi) {
                self.pos += 1;
            } else if !self.peek_is(&Tok::RBrace) {
                return Err(self.unexpected("';' or '}'"));
            }
        }
        self.pos += 1;
        Ok(out)
    }

    fn mk(&mut self, op: Op, span: Span) -> Instr {
        let id = self.next_id;
        self.next_id += 1;
        Instr { op, span, id }
    }

    fn small_nat(&mut self) -> Result<Option<usize>, ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Int(n),
                span,
            }) => {
                let span = *span;
                let v =
                    n.to_usize()
                        .filter(|v| *v <= 1023)
                        .ok_or(ParseError::MalformedLiteral {
                            span,
                            msg: format!("expected a small natural number, found {n}"),
                        })?;
                self.pos += 1;
                Ok(Some(v))
            }
            _ => Ok(None),
        }
    }

    fn fail_seq(&mut self, span: Span) -> Vec<Instr> {
        vec![self.mk(Op::Unit, span), self.mk(Op::Failwith, span)]
    }

    fn cmp_op(name: &str) -> Op {
        match name {
            "EQ" => Op::Eq,
            "NEQ" => Op::Neq,
            "LT" => Op::Lt,
            "GT" => Op::Gt,
            "LE" => Op::Le,
            _ => Op::Ge,
        }
    }

    /// Parses one instruction (or macro) and appends its expansion.
    fn instr(&mut self, out: &mut Vec<Instr>) -> Result<(), ParseError> {
        if self.peek_is(&Tok::LBrace) {
            let span = self.span();
            let id = self.next_id;
            self.next_id += 1;
            let body = self.seq()?;
            out.push(Instr {
                op: Op::Seq(body),
                span,
                id,
            });
            return Ok(());
        }
        let (name, span) = self.ident()?;
        self.annots();
        // reserve the id before nested bodies so ids follow pre-order
        let id = self.next_id;
        self.next_id += 1;
        let op = match name.as_str() {
            "PUSH" => {
                let t = self.ty_arg()?;
                self.annots();
                let d = self.data_atom()?;
                Op::Push(t, d)
            }
            "UNIT" => Op::Unit,
            "DROP" => Op::Drop(self.small_nat()?.unwrap_or(1)),
            "DUP" => {
                let n = self.small_nat()?.unwrap_or(1);
                if n == 0 {
                    return Err(ParseError::MalformedLiteral {
                        span,
                        msg: "DUP 0 is forbidden".into(),
                    });
                }
                Op::Dup(n)
            }
            "SWAP" => Op::Swap,
            "DIG" | "DUG" => {
                let n = self
                    .small_nat()?
                    .ok_or_else(|| self.unexpected("a number"))?;
                if name == "DIG" {
                    Op::Dig(n)
                } else {
                    Op::Dug(n)
                }
            }
            "DIP" => {
                let n = self.small_nat()?.unwrap_or(1);
                Op::Dip(n, self.seq()?)
            }
            "PAIR" => Op::Pair,
            "UNPAIR" => Op::Unpair,
            "CAR" => Op::Car,
            "CDR" => Op::Cdr,
            "SOME" => Op::Some,
            "NONE" => Op::None(self.ty_arg()?),
            "LEFT" => Op::Left(self.ty_arg()?),
            "RIGHT" => Op::Right(self.ty_arg()?),
            "NIL" => Op::Nil(self.ty_arg()?),
            "EMPTY_SET" => Op::EmptySet(self.ty_arg()?),
            "EMPTY_MAP" => {
                let k = self.ty_arg()?;
                Op::EmptyMap(k, self.ty_arg()?)
            }
            "IF_NONE" | "IF_LEFT" | "IF_CONS" | "IF" => {
                let a = self.seq()?;
                let b = self.seq()?;
                match name.as_str() {
                    "IF_NONE" => Op::IfNone(a, b),
                    "IF_LEFT" => Op::IfLeft(a, b),
                    "IF_CONS" => Op::IfCons(a, b),
                    _ => Op::If(a, b),
                }
            }
            "IF_SOME" => {
                let a = self.seq()?;
                let b = self.seq()?;
                Op::IfNone(b, a)
            }
            "ITER" => Op::Iter(self.seq()?),
            "MAP" => Op::Map(self.seq()?),
            "LOOP" => Op::Loop(self.seq()?),
            "LOOP_LEFT" => Op::LoopLeft(self.seq()?),
            "CONS" => Op::Cons,
            "MEM" => Op::Mem,
            "GET" => Op::Get,
            "UPDATE" => Op::Update,
            "SIZE" => Op::Size,
            "ADD" => Op::Add,
            "SUB" => Op::Sub,
            "MUL" => Op::Mul,
            "EDIV" => Op::Ediv,
            "NEG" => Op::Neg,
            "ABS" => Op::Abs,
            "ISNAT" => Op::IsNat,
            "INT" => Op::Int,
            "LSL" => Op::Lsl,
            "LSR" => Op::Lsr,
            "AND" => Op::And,
            "OR" => Op::Or,
            "XOR" => Op::Xor,
            "NOT" => Op::Not,
            "COMPARE" => Op::Compare,
            n if COMPARISONS.contains(&n) => Self::cmp_op(n),
            "FAILWITH" => Op::Failwith,
            "SENDER" => Op::Sender,
            "SOURCE" => Op::Source,
            "AMOUNT" => Op::Amount,
            "BALANCE" => Op::Balance,
            "NOW" => Op::Now,
            "SELF_ADDRESS" => Op::SelfAddress,
            "CONTRACT" => Op::Contract(self.ty_arg()?),
            "TRANSFER_TOKENS" => Op::TransferTokens,
            _ => {
                // macros: the reserved id goes unused, which is harmless
                return self.macro_instr(&name, span, out);
            }
        };
        out.push(Instr { op, span, id });
        Ok(())
    }

    fn macro_instr(
        &mut self,
        name: &str,
        span: Span,
        out: &mut Vec<Instr>,
    ) -> Result<(), ParseError> {
        match name {
            "FAIL" => {
                let f = self.fail_seq(span);
                out.extend(f);
            }
            "ASSERT" => {
                let f = self.fail_seq(span);
                let i = self.mk(Op::If(vec![], f), span);
                out.push(i);
            }
            "ASSERT_NONE" | "ASSERT_SOME" | "ASSERT_LEFT" | "ASSERT_RIGHT" => {
                let f = self.fail_seq(span);
                let op = match name {
                    "ASSERT_NONE" => Op::IfNone(vec![], f),
                    "ASSERT_SOME" => Op::IfNone(f, vec![]),
                    "ASSERT_LEFT" => Op::IfLeft(vec![], f),
                    _ => Op::IfLeft(f, vec![]),
                };
                let i = self.mk(op, span);
                out.push(i);
            }
            n if n.starts_with("ASSERT_CMP") && COMPARISONS.contains(&&n[10..]) => {
                let c = self.mk(Op::Compare, span);
                let t = self.mk(Self::cmp_op(&n[10..]), span);
                let f = self.fail_seq(span);
                let i = self.mk(Op::If(vec![], f), span);
                out.extend([c, t, i]);
            }
            n if n.starts_with("ASSERT_") && COMPARISONS.contains(&&n[7..]) => {
                let t = self.mk(Self::cmp_op(&n[7..]), span);
                let f = self.fail_seq(span);
                let i = self.mk(Op::If(vec![], f), span);
                out.extend([t, i]);
            }
            n if n.starts_with("CMP") && COMPARISONS.contains(&&n[3..]) => {
                let c = self.mk(Op::Compare, span);
                let t = self.mk(Self::cmp_op(&n[3..]), span);
                out.extend([c, t]);
            }
            n if n.starts_with("IFCMP") && COMPARISONS.contains(&&n[5..]) => {
                let c = self.mk(Op::Compare, span);
                let t = self.mk(Self::cmp_op(&n[5..]), span);
                let a = self.seq()?;
                let b = self.seq()?;
                let i = self.mk(Op::If(a, b), span);
                out.extend([c, t, i]);
            }
            n if n.starts_with("IF") && COMPARISONS.contains(&&n[2..]) => {
                let t = self.mk(Self::cmp_op(&n[2..]), span);
                let a = self.seq()?;
                let b = self.seq()?;
                let i = self.mk(Op::If(a, b), span);
                out.extend([t, i]);
            }
            _ => {
                return Err(ParseError::UnknownOpcode {
                    span,
                    name: name.to_string(),
                })
            }
        }
        Ok(())
    }
}

/// Integer literal helper for callers building data by hand.
pub fn int(n: i64) -> Data {
    Data::Int(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = "storage nat;\nparameter nat;\ncode {  UNPAIR;\n        ADD;\n        NIL operation;\n        PAIR; }\n";

    #[test]
    fn accumulator_shape() {
        let s = parse_script(FIG2).unwrap();
        assert_eq!(s.storage.ty, Ty::Nat);
        assert_eq!(s.parameter.ty, Ty::Nat);
        let ops: Vec<_> = s.code.iter().map(|i| i.op.clone()).collect();
        assert_eq!(
            ops,
            vec![Op::Unpair, Op::Add, Op::Nil(Ty::Operation), Op::Pair]
        );
        assert_eq!(s.code[1].span, Span { line: 4, col: 9 });
    }

    #[test]
    fn empty_code_and_section_order() {
        let s = parse_script("code {}; storage unit; parameter unit").unwrap();
        assert!(s.code.is_empty());
        assert_eq!(s.storage.ty, Ty::Unit);
    }

    #[test]
    fn parsing_is_type_agnostic() {
        assert!(parse_script("storage nat; parameter nat; code { UNPAIR; ADD }").is_ok());
    }

    #[test]
    fn section_errors() {
        assert!(matches!(
            parse_script("storage nat; storage nat; parameter nat; code {}"),
            Err(ParseError::DuplicateSection { .. })
        ));
        assert!(matches!(
            parse_script("storage nat; code {}"),
            Err(ParseError::MissingSection { .. })
        ));
    }

    #[test]
    fn unknown_opcode_has_position() {
        match parse_script("storage nat; parameter nat;\ncode { LAMBDA nat nat {} }") {
            Err(ParseError::UnknownOpcode { span, name }) => {
                assert_eq!(name, "LAMBDA");
                assert_eq!(span, Span { line: 2, col: 8 });
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn annotated_parameter() {
        let s = parse_script(
            "parameter (or (unit %deposit) (pair %withdraw mutez address)); storage (map address mutez); code {}",
        )
        .unwrap();
        assert_eq!(s.parameter.children[0].field.as_deref(), Some("deposit"));
        assert_eq!(s.parameter.children[1].field.as_deref(), Some("withdraw"));
        assert_eq!(s.storage.ty, Ty::map(Ty::Address, Ty::Mutez));
    }

    #[test]
    fn macros_expand() {
        let s =
            parse_script("storage unit; parameter unit; code { ASSERT_CMPEQ; IFGT {} { FAIL } }")
                .unwrap();
        let names: Vec<_> = s.code.iter().map(|i| i.op.name()).collect();
        assert_eq!(names, vec!["COMPARE", "EQ", "IF", "GT", "IF"]);
    }

    #[test]
    fn data_literals() {
        assert_eq!(
            parse_data("Pair 1 2 3").unwrap(),
            Data::Pair(
                Box::new(int(1)),
                Box::new(Data::Pair(Box::new(int(2)), Box::new(int(3))))
            )
        );
        assert_eq!(
            parse_data("{ Elt \"a\" 10 }").unwrap(),
            Data::Seq(vec![Data::Elt(
                Box::new(Data::String("a".into())),
                Box::new(int(10))
            )])
        );
        assert!(parse_data("Pair 1").is_err());
    }
}
