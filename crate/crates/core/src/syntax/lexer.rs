// Copyright (c) The michelstat Contributors
// SPDX-License-Identifier: Apache-2.0

use num_bigint::BigInt;

use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    Str(String),
    Annot(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        match c {
            c if c.is_whitespace() => bump!(),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    bump!();
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                bump!();
                bump!();
                loop {
                    if i + 1 >= chars.len() {
                        return Err(ParseError::Syntax {
                            span,
                            msg: "unterminated comment".into(),
                        });
                    }
                    if chars[i] == '*' && chars[i + 1] == '/' {
                        bump!();
                        bump!();
                        break;
                    }
                    bump!();
                }
            }
            '{' | '}' | '(' | ')' | ';' => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => Tok::Semi,
                };
                bump!();
                out.push(Token { tok, span });
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(ParseError::MalformedLiteral {
                                span,
                                msg: "unterminated string".into(),
                            })
                        }
                        Some('"') => {
                            bump!();
                            break;
                        }
                        Some('\\') => {
                            bump!();
                            let e = match chars.get(i) {
                                Some('n') => '\n',
                                Some('"') => '"',
                                Some('\\') => '\\',
                                _ => {
                                    return Err(ParseError::MalformedLiteral {
                                        span,
                                        msg: "bad escape in string".into(),
                                    })
                                }
                            };
                            s.push(e);
                            bump!();
                        }
                        Some(&ch) => {
                            s.push(ch);
                            bump!();
                        }
                    }
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    span,
                });
            }
            '%' | '@' | ':' => {
                let mut s = String::new();
                bump!();
                while i < chars.len() && is_word(chars[i]) {
                    s.push(chars[i]);
                    bump!();
                }
                let tok = if c == '%' {
                    Tok::Annot(s)
                } else {
                    // variable and type annotations carry no meaning here
                    Tok::Annot(format!("{c}{s}"))
                };
                out.push(Token { tok, span });
            }
            c if c == '-' || c.is_ascii_digit() => {
                let mut s = String::new();
                s.push(c);
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    bump!();
                }
                if i < chars.len() && is_word(chars[i]) {
                    return Err(ParseError::MalformedLiteral {
                        span,
                        msg: format!("malformed number starting with {s:?}"),
                    });
                }
                let n: BigInt = s.parse().map_err(|_| ParseError::MalformedLiteral {
                    span,
                    msg: format!("malformed number {s:?}"),
                })?;
                out.push(Token {
                    tok: Tok::Int(n),
                    span,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while i < chars.len() && is_word(chars[i]) {
                    s.push(chars[i]);
                    bump!();
                }
                out.push(Token {
                    tok: Tok::Ident(s),
                    span,
                });
            }
            other => {
                return Err(ParseError::Syntax {
                    span,
                    msg: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}
