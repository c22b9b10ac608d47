use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use super::{Expr, Literal, Prim, TypeTag};
use crate::board::{Color, Coord, FullBoard, Orientation, TileSet};

/// A set of colours, iterated in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ColorSet(u8);

impl ColorSet {
    pub fn empty() -> ColorSet {
        ColorSet(0)
    }

    pub fn insert(&mut self, c: Color) {
        self.0 |= c.bit();
    }

    pub fn contains(self, c: Color) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Color> {
        Color::ALL.into_iter().filter(move |c| self.contains(*c))
    }
}

impl FromIterator<Color> for ColorSet {
    fn from_iter<I: IntoIterator<Item = Color>>(iter: I) -> ColorSet {
        let mut s = ColorSet::empty();
        for c in iter {
            s.insert(c);
        }
        s
    }
}

/// Runtime value of a DSL expression, and the answer to a question.
///
/// Sets are canonical by construction (bitsets), so structural equality is
/// set equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Num(i64),
    Color(Color),
    Orient(Orientation),
    Loc(Coord),
    /// Set of locations; `cols` is kept for decoding tile indices.
    Tiles {
        tiles: TileSet,
        cols: u8,
    },
    Colors(ColorSet),
    /// Result of `map`; order follows the mapped set.
    List(Vec<Value>),
    Closure {
        param: String,
        body: Arc<Expr>,
        env: Vec<(String, Value)>,
    },
}

impl Value {
    /// Whether this value inhabits `t`. Empty lists conform to any list type.
    pub fn conforms(&self, t: &TypeTag) -> bool {
        match (self, t) {
            (Value::Bool(_), TypeTag::Boolean)
            | (Value::Num(_), TypeTag::Number)
            | (Value::Color(_), TypeTag::Color)
            | (Value::Orient(_), TypeTag::Orientation)
            | (Value::Loc(_), TypeTag::Location)
            | (Value::Closure { .. }, TypeTag::Function(..)) => true,
            (Value::Tiles { .. }, TypeTag::SetOf(e)) => **e == TypeTag::Location,
            (Value::Colors(_), TypeTag::SetOf(e)) => **e == TypeTag::Color,
            (Value::List(items), TypeTag::ListOf(e)) => items.iter().all(|v| v.conforms(e)),
            _ => false,
        }
    }

    fn as_number(&self) -> Option<i64> {
        match *self {
            Value::Num(n) => Some(n),
            Value::Bool(b) => Some(i64::from(b)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Num(n) => write!(f, "{n}"),
            Value::Color(c) => write!(f, "{c}"),
            Value::Orient(o) => write!(f, "{o}"),
            Value::Loc(c) => write!(f, "{c}"),
            Value::Tiles { tiles, cols } => {
                f.write_str("{")?;
                for (i, t) in tiles.iter().enumerate() {
                    let sep = if i == 0 { "" } else { ", " };
                    write!(f, "{sep}{}", Coord::from_index(t, usize::from(*cols)))?;
                }
                f.write_str("}")
            }
            Value::Colors(cs) => {
                f.write_str("{")?;
                for (i, c) in cs.iter().enumerate() {
                    let sep = if i == 0 { "" } else { ", " };
                    write!(f, "{sep}{c}")?;
                }
                f.write_str("}")
            }
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    let sep = if i == 0 { "" } else { ", " };
                    write!(f, "{sep}{v}")?;
                }
                f.write_str("]")
            }
            Value::Closure { param, .. } => write!(f, "<lambda {param}>"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("`{0}` of an empty set")]
    EmptySet(Prim),
    #[error("`{prim}` needs a ship of this game, got {color}")]
    NotAShip { prim: Prim, color: Color },
    #[error("location {0} is off the board")]
    OutOfBounds(Coord),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("`{prim}`: ill-typed argument {value}")]
    Type { prim: Prim, value: String },
    #[error("`{0}` is only allowed as the argument of `set`")]
    BareConstant(Literal),
}

impl EvalError {
    /// Runtime domain errors on a well-typed program, as opposed to type
    /// errors that the typechecker would have caught.
    pub fn is_domain_error(&self) -> bool {
        matches!(self, EvalError::EmptySet(_) | EvalError::NotAShip { .. } | EvalError::OutOfBounds(_))
    }
}

/// Evaluates `e` on the complete board `s`.
pub fn evaluate(e: &Expr, s: &FullBoard) -> Result<Value, EvalError> {
    let mut env = Vec::new();
    Evaluator { board: s }.eval(e, &mut env)
}

struct Evaluator<'a> {
    board: &'a FullBoard,
}

type Env = Vec<(String, Value)>;

impl Evaluator<'_> {
    fn cols(&self) -> usize {
        self.board.config().cols
    }

    fn eval(&self, e: &Expr, env: &mut Env) -> Result<Value, EvalError> {
        match e {
            Expr::Lit(lit) => Ok(match *lit {
                Literal::Bool(b) => Value::Bool(b),
                Literal::Num(n) => Value::Num(i64::from(n)),
                Literal::Color(c) => Value::Color(c),
                Literal::Orient(o) => Value::Orient(o),
                Literal::Loc(c) => Value::Loc(c),
                Literal::AllTiles | Literal::AllColors => return Err(EvalError::BareConstant(*lit)),
            }),
            Expr::Var(v) => env
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, val)| val.clone())
                .ok_or_else(|| EvalError::Unbound(v.clone())),
            Expr::Lambda { param, body } => {
                Ok(Value::Closure { param: param.clone(), body: Arc::new((**body).clone()), env: env.clone() })
            }
            Expr::App { prim, args } => self.apply(*prim, args, env),
        }
    }

    fn apply(&self, prim: Prim, args: &[Expr], env: &mut Env) -> Result<Value, EvalError> {
        let type_err = |v: &Value| EvalError::Type { prim, value: v.to_string() };
        let board = self.board;

        if prim == Prim::Set {
            return match &args[0] {
                Expr::Lit(Literal::AllTiles) => Ok(self.tiles(board.config().all_tiles())),
                Expr::Lit(Literal::AllColors) => Ok(Value::Colors(board.config().ships.iter().map(|s| s.id).collect())),
                other => Err(type_err(&self.eval(other, env)?)),
            };
        }
        if prim == Prim::Map {
            return self.map(&args[0], &args[1], env);
        }

        let mut vals: Vec<Value> = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(a, env)?);
        }
        let boolean = |v: &Value| match v {
            Value::Bool(b) => Ok(*b),
            other => Err(type_err(other)),
        };
        let number = |v: &Value| v.as_number().ok_or_else(|| type_err(v));
        let ship = |v: &Value| match v {
            Value::Color(c) if c.is_ship() && board.config().has_ship(*c) => Ok(*c),
            Value::Color(c) => Err(EvalError::NotAShip { prim, color: *c }),
            other => Err(type_err(other)),
        };
        let color = |v: &Value| match v {
            Value::Color(c) => Ok(*c),
            other => Err(type_err(other)),
        };
        let loc = |v: &Value| match v {
            Value::Loc(c) if c.in_bounds(board.config()) => Ok(*c),
            Value::Loc(c) => Err(EvalError::OutOfBounds(*c)),
            other => Err(type_err(other)),
        };
        let tiles = |v: &Value| match v {
            Value::Tiles { tiles, .. } => Ok(*tiles),
            other => Err(type_err(other)),
        };
        let list = |v: &Value| match v {
            Value::List(items) => Ok(items.clone()),
            other => Err(type_err(other)),
        };

        Ok(match prim {
            Prim::And => Value::Bool(boolean(&vals[0])? & boolean(&vals[1])?),
            Prim::Or => Value::Bool(boolean(&vals[0])? | boolean(&vals[1])?),
            Prim::Not => Value::Bool(!boolean(&vals[0])?),
            Prim::Eq => Value::Bool(vals[0] == vals[1]),
            Prim::Gt => Value::Bool(number(&vals[0])? > number(&vals[1])?),
            Prim::Lt => Value::Bool(number(&vals[0])? < number(&vals[1])?),
            Prim::Any | Prim::All => {
                let items = list(&vals[0])?;
                let mut bools = items.iter().map(boolean);
                let r = if prim == Prim::Any {
                    bools.try_fold(false, |acc, b| b.map(|b| acc | b))?
                } else {
                    bools.try_fold(true, |acc, b| b.map(|b| acc & b))?
                };
                Value::Bool(r)
            }
            Prim::Touch => {
                let a = ship(&vals[0])?;
                let b = ship(&vals[1])?;
                Value::Bool(self.touch(a, b))
            }
            Prim::Plus => Value::Num(number(&vals[0])? + number(&vals[1])?),
            Prim::Minus => Value::Num(number(&vals[0])? - number(&vals[1])?),
            Prim::Sum => Value::Num(list(&vals[0])?.iter().map(number).sum::<Result<i64, _>>()?),
            Prim::Size => {
                let c = ship(&vals[0])?;
                let p = board.placement(c).ok_or(EvalError::NotAShip { prim, color: c })?;
                Value::Num(i64::from(p.length))
            }
            Prim::RowL => Value::Num(i64::from(loc(&vals[0])?.row)),
            Prim::ColL => Value::Num(i64::from(loc(&vals[0])?.col)),
            Prim::SetSize => match &vals[0] {
                Value::Tiles { tiles, .. } => Value::Num(tiles.len() as i64),
                Value::Colors(cs) => Value::Num(cs.len() as i64),
                other => return Err(type_err(other)),
            },
            Prim::ColorOf => Value::Color(board.color_at(loc(&vals[0])?)),
            Prim::Orient => {
                let c = ship(&vals[0])?;
                let p = board.placement(c).ok_or(EvalError::NotAShip { prim, color: c })?;
                Value::Orient(p.orientation)
            }
            Prim::TopLeft | Prim::BottomRight => {
                let t = tiles(&vals[0])?;
                let i = if prim == Prim::TopLeft { t.first() } else { t.last() };
                Value::Loc(Coord::from_index(i.ok_or(EvalError::EmptySet(prim))?, self.cols()))
            }
            Prim::ColoredTiles => {
                let c = color(&vals[0])?;
                self.tiles(if c == Color::Water { board.water_tiles() } else { board.ship_tiles(c) })
            }
            Prim::Union | Prim::Intersection | Prim::SetDifference => match (&vals[0], &vals[1]) {
                (Value::Tiles { tiles: a, .. }, Value::Tiles { tiles: b, .. }) => self.tiles(match prim {
                    Prim::Union => a.union(b),
                    Prim::Intersection => a.intersection(b),
                    _ => a.difference(b),
                }),
                (Value::Colors(a), Value::Colors(b)) => Value::Colors(ColorSet(match prim {
                    Prim::Union => a.0 | b.0,
                    Prim::Intersection => a.0 & b.0,
                    _ => a.0 & !b.0,
                })),
                (a, _) => return Err(type_err(a)),
            },
            Prim::Unique => match &vals[0] {
                v @ (Value::Tiles { .. } | Value::Colors(_)) => v.clone(),
                other => return Err(type_err(other)),
            },
            Prim::Set | Prim::Map => unreachable!("handled above"),
        })
    }

    fn tiles(&self, tiles: TileSet) -> Value {
        Value::Tiles { tiles, cols: self.cols() as u8 }
    }

    fn touch(&self, a: Color, b: Color) -> bool {
        let (Some(pa), Some(pb)) = (self.board.placement(a), self.board.placement(b)) else {
            return false;
        };
        pa.coords().any(|c| {
            let (r, col) = (c.row, c.col);
            [(r.wrapping_sub(1), col), (r + 1, col), (r, col.wrapping_sub(1)), (r, col + 1)]
                .into_iter()
                .any(|(r, col)| pb.contains(Coord::new(r, col)))
        })
    }

    fn map(&self, f: &Expr, set: &Expr, env: &mut Env) -> Result<Value, EvalError> {
        let elems: Vec<Value> = match self.eval(set, env)? {
            Value::Tiles { tiles, .. } => tiles.iter().map(|i| Value::Loc(Coord::from_index(i, self.cols()))).collect(),
            Value::Colors(cs) => cs.iter().map(Value::Color).collect(),
            other => return Err(EvalError::Type { prim: Prim::Map, value: other.to_string() }),
        };
        // A syntactic lambda is applied in place; anything else must
        // evaluate to a closure.
        let closure;
        let (param, body, mut captured): (&str, &Expr, Option<Env>) = match f {
            Expr::Lambda { param, body } => (param, body, None),
            other => {
                closure = self.eval(other, env)?;
                match &closure {
                    Value::Closure { param, body, env } => (param, body, Some(env.clone())),
                    v => return Err(EvalError::Type { prim: Prim::Map, value: v.to_string() }),
                }
            }
        };
        let scope = captured.as_mut().unwrap_or(env);
        let mut out = Vec::with_capacity(elems.len());
        for v in elems {
            scope.push((param.to_string(), v));
            let r = self.eval(body, scope);
            scope.pop();
            out.push(r?);
        }
        Ok(Value::List(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::{GameConfig, Placement, ShipSpec};
    use crate::dsl::{parse_program, typecheck};

    fn place(ship: Color, at: &str, orientation: Orientation, length: u8) -> Placement {
        Placement { ship, origin: at.parse().unwrap(), orientation, length }
    }

    /// Red 2B-2C, blue 1E-3E, purple 5A-5D.
    fn board() -> FullBoard {
        FullBoard::new(
            Arc::new(GameConfig::default()),
            vec![
                place(Color::Red, "2B", Orientation::Horizontal, 2),
                place(Color::Blue, "1E", Orientation::Vertical, 3),
                place(Color::Purple, "5A", Orientation::Horizontal, 4),
            ],
        )
        .unwrap()
    }

    fn run(src: &str, b: &FullBoard) -> Result<Value, EvalError> {
        evaluate(&parse_program(src).unwrap(), b)
    }

    #[test]
    fn basic_primitives() {
        let b = board();
        assert_eq!(run("(size Red)", &b), Ok(Value::Num(2)));
        assert_eq!(run("(size Blue)", &b), Ok(Value::Num(3)));
        assert_eq!(run("(topleft (coloredTiles Red))", &b), Ok(Value::Loc("2B".parse().unwrap())));
        assert_eq!(run("(bottomright (coloredTiles Blue))", &b), Ok(Value::Loc("3E".parse().unwrap())));
        assert_eq!(run("(orient Blue)", &b), Ok(Value::Orient(Orientation::Vertical)));
        assert_eq!(run("(color 2C)", &b), Ok(Value::Color(Color::Red)));
        assert_eq!(run("(color 1A)", &b), Ok(Value::Color(Color::Water)));
        assert_eq!(run("(rowL 3F)", &b), Ok(Value::Num(3)));
        assert_eq!(run("(colL 2B)", &b), Ok(Value::Num(2)));
        assert_eq!(run("(setSize (coloredTiles Water))", &b), Ok(Value::Num(36 - 9)));
        assert_eq!(run("(setSize (set AllColors))", &b), Ok(Value::Num(3)));
        assert_eq!(run("(- 1 5)", &b), Ok(Value::Num(-4)));
        assert_eq!(run("(> (size Purple) (size Blue))", &b), Ok(Value::Bool(true)));
    }

    #[test]
    fn boolean_coercion() {
        let b = board();
        assert_eq!(run("(+ (== (color 4A) Red) TRUE)", &b), Ok(Value::Num(1)));
        assert_eq!(run("(+ (== (color 2B) Red) TRUE)", &b), Ok(Value::Num(2)));
        for x in ["TRUE", "FALSE"] {
            assert_eq!(run(&format!("(+ {x} TRUE)"), &b), run(&format!("(+ {x} 1)"), &b));
        }
    }

    #[test]
    fn map_keeps_duplicates() {
        let config = Arc::new(GameConfig::default());
        let b = FullBoard::new(
            config,
            vec![
                place(Color::Red, "1A", Orientation::Horizontal, 2),
                place(Color::Blue, "3A", Orientation::Horizontal, 2),
                place(Color::Purple, "5A", Orientation::Horizontal, 2),
            ],
        )
        .unwrap();
        assert_eq!(run("(++ (map (lambda x0 (size x0)) (set AllColors)))", &b), Ok(Value::Num(6)));
        assert_eq!(run("(++ (map (lambda x0 (== (orient x0) H)) (set AllColors)))", &b), Ok(Value::Num(3)));
    }

    #[test]
    fn nested_lambdas() {
        let b = board();
        let row1 = "(++ (map (lambda x0 (++ (map (lambda y0 (== (rowL y0) 1)) (coloredTiles x0)))) (set AllColors)))";
        assert_eq!(run(row1, &b), Ok(Value::Num(1)));
        let row2 = row1.replace("== (rowL y0) 1", "== (rowL y0) 2");
        assert_eq!(run(&row2, &b), Ok(Value::Num(3)));
        assert_eq!(run("(any (map (lambda y0 (== (colL y0) 1)) (coloredTiles Red)))", &b), Ok(Value::Bool(false)));
        assert_eq!(run("(all (map (lambda y0 (== (rowL y0) 2)) (coloredTiles Red)))", &b), Ok(Value::Bool(true)));
    }

    #[test]
    fn blue_on_row_one_counts_one() {
        let config = Arc::new(GameConfig::single_ship(6, 6, Color::Blue, &[2]).unwrap());
        let b = FullBoard::new(config, vec![place(Color::Blue, "1C", Orientation::Vertical, 2)]).unwrap();
        assert_eq!(run("(++ (map (lambda y0 (== (rowL y0) 1)) (coloredTiles Blue)))", &b), Ok(Value::Num(1)));
    }

    #[test]
    fn touch_is_orthogonal() {
        let config = Arc::new(
            GameConfig::new(
                4,
                4,
                vec![ShipSpec { id: Color::Red, lengths: vec![2] }, ShipSpec { id: Color::Blue, lengths: vec![2] }],
            )
            .unwrap(),
        );
        let red = place(Color::Red, "1A", Orientation::Horizontal, 2);
        let diag =
            FullBoard::new(config.clone(), vec![red, place(Color::Blue, "2C", Orientation::Horizontal, 2)]).unwrap();
        assert_eq!(run("(touch Red Blue)", &diag), Ok(Value::Bool(false)));
        let below =
            FullBoard::new(config.clone(), vec![red, place(Color::Blue, "2B", Orientation::Horizontal, 2)]).unwrap();
        assert_eq!(run("(touch Red Blue)", &below), Ok(Value::Bool(true)));
        let beside = FullBoard::new(config, vec![red, place(Color::Blue, "1C", Orientation::Vertical, 2)]).unwrap();
        assert_eq!(run("(touch Blue Red)", &beside), Ok(Value::Bool(true)));
    }

    #[test]
    fn domain_errors() {
        let config = Arc::new(GameConfig::single_ship(3, 3, Color::Red, &[2]).unwrap());
        let b = FullBoard::new(config, vec![place(Color::Red, "1A", Orientation::Horizontal, 2)]).unwrap();
        assert_eq!(run("(topleft (coloredTiles Blue))", &b), Err(EvalError::EmptySet(Prim::TopLeft)));
        assert!(matches!(run("(size Water)", &b), Err(EvalError::NotAShip { .. })));
        assert!(matches!(run("(orient Blue)", &b), Err(EvalError::NotAShip { .. })));
        assert!(matches!(run("(color 6F)", &b), Err(EvalError::OutOfBounds(_))));
        assert!(run("(color 6F)", &b).unwrap_err().is_domain_error());
        assert_eq!(run("(setSize (set AllColors))", &b), Ok(Value::Num(1)));
    }

    #[test]
    fn set_operations() {
        let b = board();
        assert_eq!(
            run("(setSize (setDifference (coloredTiles (color 1E)) (unique (coloredTiles Blue))))", &b),
            Ok(Value::Num(0))
        );
        assert_eq!(
            run("(bottomright (intersection (set AllTiles) (intersection (coloredTiles Purple) (set AllTiles))))", &b),
            Ok(Value::Loc("5D".parse().unwrap()))
        );
        assert_eq!(run("(setSize (union (coloredTiles Red) (coloredTiles Blue)))", &b), Ok(Value::Num(5)));
        let v = run("(coloredTiles Red)", &b).unwrap();
        assert_eq!(v.to_string(), "{2B, 2C}");
        assert_eq!(run("(set AllColors)", &b).unwrap().to_string(), "{Red, Blue, Purple}");
    }

    #[test]
    fn values_conform_to_types() {
        let b = board();
        for src in [
            "(size Red)",
            "(coloredTiles Red)",
            "(set AllColors)",
            "(map (lambda x0 (size x0)) (set AllColors))",
            "(== 1 1)",
        ] {
            let e = parse_program(src).unwrap();
            let t = typecheck(&e).unwrap();
            assert!(evaluate(&e, &b).unwrap().conforms(&t), "{src}");
        }
    }
}
