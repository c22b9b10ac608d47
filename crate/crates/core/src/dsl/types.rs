use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Expr, Literal, Prim};

/// Static types of DSL expressions.
///
/// `ListOf` is the result of `map`: unlike sets it keeps duplicates, so
/// `(++ (map (lambda x0 (size x0)) (set AllColors)))` sums every ship even
/// when two ships share a length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeTag {
    Boolean,
    Number,
    Color,
    Orientation,
    Location,
    SetOf(Box<TypeTag>),
    ListOf(Box<TypeTag>),
    Function(Box<TypeTag>, Box<TypeTag>),
}

impl TypeTag {
    fn set_of(t: TypeTag) -> TypeTag {
        TypeTag::SetOf(Box::new(t))
    }

    /// Boolean, Number, Color, Orientation or Location.
    pub fn is_ground(&self) -> bool {
        self.question_type().is_some()
    }

    pub fn question_type(&self) -> Option<QuestionType> {
        Some(match self {
            TypeTag::Boolean => QuestionType::Boolean,
            TypeTag::Number => QuestionType::Number,
            TypeTag::Color => QuestionType::Color,
            TypeTag::Orientation => QuestionType::Orientation,
            TypeTag::Location => QuestionType::Location,
            _ => return None,
        })
    }
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTag::Boolean => f.write_str("Boolean"),
            TypeTag::Number => f.write_str("Number"),
            TypeTag::Color => f.write_str("Color"),
            TypeTag::Orientation => f.write_str("Orientation"),
            TypeTag::Location => f.write_str("Location"),
            TypeTag::SetOf(t) => write!(f, "Set({t})"),
            TypeTag::ListOf(t) => write!(f, "List({t})"),
            TypeTag::Function(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

/// Top-level question category, i.e. the answer type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuestionType {
    Boolean,
    Number,
    Color,
    Orientation,
    Location,
}

impl QuestionType {
    pub const ALL: [QuestionType; 5] = [
        QuestionType::Boolean,
        QuestionType::Number,
        QuestionType::Color,
        QuestionType::Orientation,
        QuestionType::Location,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QuestionType::Boolean => "Boolean",
            QuestionType::Number => "Number",
            QuestionType::Color => "Color",
            QuestionType::Orientation => "Orientation",
            QuestionType::Location => "Location",
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("`{prim}` argument {index}: expected {expected}, found {found}")]
    Mismatch { prim: Prim, index: usize, expected: String, found: TypeTag },
    #[error("`==` compares {0} with {1}")]
    EqMismatch(TypeTag, TypeTag),
    #[error("lambda is only allowed as the first argument of `map`")]
    MisplacedLambda,
    #[error("`{0}` is only allowed as the argument of `set`")]
    BareConstant(Literal),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("`map` body must have a ground type, found {0}")]
    MapBody(TypeTag),
    #[error("untypeable question: top-level type {0} is not an answer type")]
    NotAnAnswer(TypeTag),
}

/// Principal type of `e`. Set and list types are accepted; use
/// [`check_question`] for the stricter top-level rule.
pub fn typecheck(e: &Expr) -> Result<TypeTag, TypeError> {
    let mut env = Vec::new();
    infer(e, &mut env)
}

/// Typechecks `e` as a question: its type must be an answer type.
pub fn check_question(e: &Expr) -> Result<QuestionType, TypeError> {
    let t = typecheck(e)?;
    t.question_type().ok_or(TypeError::NotAnAnswer(t))
}

/// Alias of [`check_question`] used by the analysis.
pub fn top_level_type(e: &Expr) -> Result<QuestionType, TypeError> {
    check_question(e)
}

type Env = Vec<(String, TypeTag)>;

fn infer(e: &Expr, env: &mut Env) -> Result<TypeTag, TypeError> {
    match e {
        Expr::Lit(lit) => literal_type(*lit),
        Expr::Var(v) => {
            env.iter().rev().find(|(n, _)| n == v).map(|(_, t)| t.clone()).ok_or_else(|| TypeError::Unbound(v.clone()))
        }
        Expr::Lambda { .. } => Err(TypeError::MisplacedLambda),
        Expr::App { prim, args } => infer_app(*prim, args, env),
    }
}

fn literal_type(lit: Literal) -> Result<TypeTag, TypeError> {
    Ok(match lit {
        Literal::Bool(_) => TypeTag::Boolean,
        Literal::Num(_) => TypeTag::Number,
        Literal::Color(_) => TypeTag::Color,
        Literal::Orient(_) => TypeTag::Orientation,
        Literal::Loc(_) => TypeTag::Location,
        Literal::AllTiles | Literal::AllColors => return Err(TypeError::BareConstant(lit)),
    })
}

fn infer_app(prim: Prim, args: &[Expr], env: &mut Env) -> Result<TypeTag, TypeError> {
    use TypeTag::*;

    let mismatch = |index: usize, expected: &str, found: TypeTag| TypeError::Mismatch {
        prim,
        index: index + 1,
        expected: expected.to_string(),
        found,
    };
    let expect = |env: &mut Env, index: usize, want: TypeTag| -> Result<(), TypeError> {
        let t = infer(&args[index], env)?;
        if t == want {
            Ok(())
        } else {
            Err(mismatch(index, &want.to_string(), t))
        }
    };
    let numeric = |env: &mut Env, index: usize| -> Result<(), TypeError> {
        match infer(&args[index], env)? {
            Number | Boolean => Ok(()),
            t => Err(mismatch(index, "Number or Boolean", t)),
        }
    };
    let any_set = |env: &mut Env, index: usize| -> Result<TypeTag, TypeError> {
        match infer(&args[index], env)? {
            SetOf(t) => Ok(*t),
            t => Err(mismatch(index, "a set", t)),
        }
    };

    Ok(match prim {
        Prim::And | Prim::Or => {
            expect(env, 0, Boolean)?;
            expect(env, 1, Boolean)?;
            Boolean
        }
        Prim::Not => {
            expect(env, 0, Boolean)?;
            Boolean
        }
        Prim::Eq => {
            let a = infer(&args[0], env)?;
            let b = infer(&args[1], env)?;
            if !a.is_ground() {
                return Err(mismatch(0, "a ground type", a));
            }
            if a != b {
                return Err(TypeError::EqMismatch(a, b));
            }
            Boolean
        }
        Prim::Gt | Prim::Lt => {
            expect(env, 0, Number)?;
            expect(env, 1, Number)?;
            Boolean
        }
        Prim::Any | Prim::All => {
            expect(env, 0, ListOf(Box::new(Boolean)))?;
            Boolean
        }
        Prim::Touch => {
            expect(env, 0, Color)?;
            expect(env, 1, Color)?;
            Boolean
        }
        Prim::Plus | Prim::Minus => {
            numeric(env, 0)?;
            numeric(env, 1)?;
            Number
        }
        Prim::Sum => match infer(&args[0], env)? {
            ListOf(t) if matches!(*t, Number | Boolean) => Number,
            t => return Err(mismatch(0, "List(Number) or List(Boolean)", t)),
        },
        Prim::Size => {
            expect(env, 0, Color)?;
            Number
        }
        Prim::RowL | Prim::ColL => {
            expect(env, 0, Location)?;
            Number
        }
        Prim::SetSize => {
            any_set(env, 0)?;
            Number
        }
        Prim::ColorOf => {
            expect(env, 0, Location)?;
            Color
        }
        Prim::Orient => {
            expect(env, 0, Color)?;
            Orientation
        }
        Prim::TopLeft | Prim::BottomRight => {
            expect(env, 0, TypeTag::set_of(Location))?;
            Location
        }
        Prim::ColoredTiles => {
            expect(env, 0, Color)?;
            TypeTag::set_of(Location)
        }
        Prim::Set => match &args[0] {
            Expr::Lit(Literal::AllTiles) => TypeTag::set_of(Location),
            Expr::Lit(Literal::AllColors) => TypeTag::set_of(Color),
            other => {
                let found = infer(other, env)?;
                return Err(mismatch(0, "AllTiles or AllColors", found));
            }
        },
        Prim::Union | Prim::Intersection | Prim::SetDifference => {
            let a = any_set(env, 0)?;
            let b = any_set(env, 1)?;
            if a != b {
                return Err(mismatch(1, &TypeTag::set_of(a).to_string(), TypeTag::set_of(b)));
            }
            TypeTag::set_of(a)
        }
        Prim::Unique => TypeTag::set_of(any_set(env, 0)?),
        Prim::Map => {
            let elem = any_set(env, 1)?;
            let Expr::Lambda { param, body } = &args[0] else {
                let found = infer(&args[0], env)?;
                return Err(mismatch(0, "a lambda", found));
            };
            env.push((param.clone(), elem));
            let body_t = infer(body, env);
            env.pop();
            let body_t = body_t?;
            if !body_t.is_ground() {
                return Err(TypeError::MapBody(body_t));
            }
            ListOf(Box::new(body_t))
        }
    })
}
