//! The Battleship question language.
//!
//! Programs are parenthesised S-expressions over a closed set of primitives,
//! e.g. `(== (orient Red) H)` or
//! `(++ (map (lambda x0 (size x0)) (set AllColors)))`. A question is a program
//! whose type is one of the answer types (boolean, number, colour,
//! orientation, location); its answer on a complete board is the program's
//! value there.

mod eval;
mod parse;
mod types;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::board::{Color, Coord, Orientation};

pub use eval::{evaluate, ColorSet, EvalError, Value};
pub(crate) use parse::{literal_from_atom, read_sexp, SExp};
pub use parse::{parse_program, ParseError, ParseErrorKind};
pub use types::{check_question, top_level_type, typecheck, QuestionType, TypeError, TypeTag};

/// Literal constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Bool(bool),
    Num(u8),
    Color(Color),
    Orient(Orientation),
    Loc(Coord),
    /// Only meaningful as the argument of `set`.
    AllTiles,
    /// Only meaningful as the argument of `set`.
    AllColors,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(true) => f.write_str("TRUE"),
            Literal::Bool(false) => f.write_str("FALSE"),
            Literal::Num(n) => write!(f, "{n}"),
            Literal::Color(c) => f.write_str(c.name()),
            Literal::Orient(o) => f.write_str(o.symbol()),
            Literal::Loc(c) => write!(f, "{c}"),
            Literal::AllTiles => f.write_str("AllTiles"),
            Literal::AllColors => f.write_str("AllColors"),
        }
    }
}

macro_rules! primitives {
    ($($variant:ident => $name:literal, $arity:literal;)*) => {
        /// Built-in operations of the language.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Prim { $($variant,)* }

        impl Prim {
            pub const ALL: &'static [Prim] = &[$(Prim::$variant,)*];

            pub fn name(self) -> &'static str {
                match self { $(Prim::$variant => $name,)* }
            }

            pub fn arity(self) -> usize {
                match self { $(Prim::$variant => $arity,)* }
            }

            pub fn from_name(name: &str) -> Option<Prim> {
                match name { $($name => Some(Prim::$variant),)* _ => None }
            }
        }
    };
}

primitives! {
    And => "and", 2;
    Or => "or", 2;
    Not => "not", 1;
    Eq => "==", 2;
    Gt => ">", 2;
    Lt => "<", 2;
    Any => "any", 1;
    All => "all", 1;
    Touch => "touch", 2;
    Plus => "+", 2;
    Minus => "-", 2;
    Sum => "++", 1;
    Size => "size", 1;
    RowL => "rowL", 1;
    ColL => "colL", 1;
    SetSize => "setSize", 1;
    ColorOf => "color", 1;
    Orient => "orient", 1;
    TopLeft => "topleft", 1;
    BottomRight => "bottomright", 1;
    ColoredTiles => "coloredTiles", 1;
    Set => "set", 1;
    Union => "union", 2;
    Intersection => "intersection", 2;
    SetDifference => "setDifference", 2;
    Unique => "unique", 1;
    Map => "map", 2;
}

impl Prim {
    /// Whether the primitive's value depends on the board.
    pub fn reads_board(self) -> bool {
        matches!(self, Prim::Touch | Prim::Size | Prim::ColorOf | Prim::Orient | Prim::ColoredTiles)
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A question program.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Lit(Literal),
    Var(String),
    Lambda { param: String, body: Box<Expr> },
    App { prim: Prim, args: Vec<Expr> },
}

impl Expr {
    pub fn app(prim: Prim, args: Vec<Expr>) -> Expr {
        Expr::App { prim, args }
    }

    /// Longest root-to-leaf path, counting nodes.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Var(_) => 1,
            Expr::Lambda { body, .. } => 1 + body.depth(),
            Expr::App { args, .. } => 1 + args.iter().map(Expr::depth).max().unwrap_or(0),
        }
    }

    /// Total node count. A lambda is one node plus its body.
    pub fn size(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Var(_) => 1,
            Expr::Lambda { body, .. } => 1 + body.size(),
            Expr::App { args, .. } => 1 + args.iter().map(Expr::size).sum::<usize>(),
        }
    }

    pub fn contains_lambda(&self) -> bool {
        match self {
            Expr::Lambda { .. } => true,
            Expr::Lit(_) | Expr::Var(_) => false,
            Expr::App { args, .. } => args.iter().any(Expr::contains_lambda),
        }
    }

    /// False for programs whose value cannot depend on the board.
    pub fn reads_board(&self) -> bool {
        match self {
            Expr::Lit(_) | Expr::Var(_) => false,
            Expr::Lambda { body, .. } => body.reads_board(),
            Expr::App { prim, args } => prim.reads_board() || args.iter().any(Expr::reads_board),
        }
    }

    /// Canonical single-space rendering; parses back to the same AST.
    pub fn pretty(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(l) => write!(f, "{l}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Lambda { param, body } => write!(f, "(lambda {param} {body})"),
            Expr::App { prim, args } => {
                write!(f, "({prim}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub fn pretty_print(e: &Expr) -> String {
    e.to_string()
}

pub fn ast_depth(e: &Expr) -> usize {
    e.depth()
}

pub fn ast_size(e: &Expr) -> usize {
    e.size()
}

/// Programs are stored as their canonical text.
impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let s = String::deserialize(d)?;
        parse_program(&s).map_err(serde::de::Error::custom)
    }
}
