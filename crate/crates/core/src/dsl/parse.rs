use std::fmt;

use thiserror::Error;

use super::{Expr, Literal, Prim};
use crate::board::{Color, Coord, Orientation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unexpected input after program")]
    TrailingInput,
    #[error("empty application")]
    EmptyList,
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("`{prim}` takes {expected} argument(s), got {found}")]
    Arity { prim: String, expected: usize, found: usize },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("number literal `{0}` outside 0-9")]
    NumberOutOfRange(String),
    #[error("primitive `{0}` used without arguments")]
    BarePrimitive(String),
    #[error("malformed lambda: expected (lambda <name> <body>)")]
    BadLambda,
    #[error("`{0}` cannot be used as a variable name")]
    BadVariableName(String),
    #[error("only a primitive name may head an application")]
    BadHead,
}

/// A parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.kind, self.pos)
    }
}

fn err<T>(kind: ParseErrorKind, pos: usize) -> Result<T, ParseError> {
    Err(ParseError { kind, pos })
}

/// Untyped S-expression tree, shared by the program parser and the grammar
/// file reader.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SExp {
    Atom { text: String, pos: usize },
    List { items: Vec<SExp>, pos: usize },
}

impl SExp {
    pub(crate) fn pos(&self) -> usize {
        match self {
            SExp::Atom { pos, .. } | SExp::List { pos, .. } => *pos,
        }
    }
}

/// Reads exactly one S-expression from `text`.
pub(crate) fn read_sexp(text: &str) -> Result<SExp, ParseError> {
    let tokens = tokenize(text);
    let mut i = 0;
    let sexp = read(&tokens, &mut i, text.len())?;
    if let Some(&(_, pos)) = tokens.get(i) {
        let kind = if tokens[i].0 == ")" { ParseErrorKind::Unbalanced } else { ParseErrorKind::TrailingInput };
        return err(kind, pos);
    }
    Ok(sexp)
}

fn tokenize(text: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((&text[s..i], s));
            }
            if !ch.is_whitespace() {
                out.push((&text[i..i + 1], i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((&text[s..], s));
    }
    out
}

fn read(tokens: &[(&str, usize)], i: &mut usize, end: usize) -> Result<SExp, ParseError> {
    let Some(&(tok, pos)) = tokens.get(*i) else {
        return err(ParseErrorKind::UnexpectedEnd, end);
    };
    *i += 1;
    match tok {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*i) {
                    None => return err(ParseErrorKind::Unbalanced, pos),
                    Some(&(")", _)) => {
                        *i += 1;
                        return Ok(SExp::List { items, pos });
                    }
                    Some(_) => items.push(read(tokens, i, end)?),
                }
            }
        }
        ")" => err(ParseErrorKind::Unbalanced, pos),
        atom => Ok(SExp::Atom { text: atom.to_string(), pos }),
    }
}

/// Interprets an atom as a literal, if it is one. Numbers outside 0-9 are
/// an error rather than `None`.
pub(crate) fn literal_from_atom(text: &str, pos: usize) -> Result<Option<Literal>, ParseError> {
    let lit = match text {
        "TRUE" => Literal::Bool(true),
        "FALSE" => Literal::Bool(false),
        "H" => Literal::Orient(Orientation::Horizontal),
        "V" => Literal::Orient(Orientation::Vertical),
        "AllTiles" => Literal::AllTiles,
        "AllColors" => Literal::AllColors,
        _ if text.bytes().all(|b| b.is_ascii_digit()) => {
            return match text.parse::<u8>() {
                Ok(n) if n <= 9 && text.len() == 1 => Ok(Some(Literal::Num(n))),
                _ => err(ParseErrorKind::NumberOutOfRange(text.to_string()), pos),
            };
        }
        _ => {
            if let Some(c) = Color::from_name(text) {
                Literal::Color(c)
            } else if let Ok(c) = text.parse::<Coord>() {
                Literal::Loc(c)
            } else {
                return Ok(None);
            }
        }
    };
    Ok(Some(lit))
}

/// Parses program text into an [`Expr`].
///
/// Checks syntax, primitive names, arities and variable scoping; types are
/// checked separately by [`typecheck`](super::typecheck).
pub fn parse_program(text: &str) -> Result<Expr, ParseError> {
    let sexp = read_sexp(text)?;
    let mut scope = Vec::new();
    build(&sexp, &mut scope)
}

fn build(sexp: &SExp, scope: &mut Vec<String>) -> Result<Expr, ParseError> {
    match sexp {
        SExp::Atom { text, pos } => {
            if let Some(lit) = literal_from_atom(text, *pos)? {
                return Ok(Expr::Lit(lit));
            }
            if scope.iter().rev().any(|v| v == text) {
                return Ok(Expr::Var(text.clone()));
            }
            if Prim::from_name(text).is_some() || text == "lambda" {
                return err(ParseErrorKind::BarePrimitive(text.clone()), *pos);
            }
            err(ParseErrorKind::UnboundVariable(text.clone()), *pos)
        }
        SExp::List { items, pos } => {
            let Some((head, args)) = items.split_first() else {
                return err(ParseErrorKind::EmptyList, *pos);
            };
            let SExp::Atom { text: name, pos: head_pos } = head else {
                return err(ParseErrorKind::BadHead, head.pos());
            };
            if name == "lambda" {
                let [SExp::Atom { text: param, pos: param_pos }, body] = args else {
                    return err(ParseErrorKind::BadLambda, *pos);
                };
                if !is_variable_name(param) || literal_from_atom(param, *param_pos).ok().flatten().is_some() {
                    return err(ParseErrorKind::BadVariableName(param.clone()), *param_pos);
                }
                scope.push(param.clone());
                let body = build(body, scope);
                scope.pop();
                return Ok(Expr::Lambda { param: param.clone(), body: Box::new(body?) });
            }
            let Some(prim) = Prim::from_name(name) else {
                return err(ParseErrorKind::UnknownPrimitive(name.clone()), *head_pos);
            };
            if args.len() != prim.arity() {
                return err(
                    ParseErrorKind::Arity { prim: name.clone(), expected: prim.arity(), found: args.len() },
                    *pos,
                );
            }
            let args = args.iter().map(|a| build(a, scope)).collect::<Result<_, _>>()?;
            Ok(Expr::App { prim, args })
        }
    }
}

fn is_variable_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && Prim::from_name(s).is_none()
        && s != "lambda"
}
