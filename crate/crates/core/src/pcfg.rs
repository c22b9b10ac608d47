//! A probabilistic context-free grammar over question programs.
//!
//! Productions are S-expression templates whose holes `<Name>` refer to
//! nonterminals, e.g. `(== <Num> <Num>)`. A grammar can be written to and
//! read from a plain text file with one production per line:
//!
//! ```text
//! # weight  lhs  ->  template
//! 1 Answer -> <Bool>
//! 1 Bool -> (touch <Ship> <Ship>)
//! ```
//!
//! The first left-hand side is the start symbol. Weights are normalised per
//! nonterminal.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::{Color, GameConfig};
use crate::dsl::{literal_from_atom, read_sexp, Expr, Literal, Prim, SExp};
use crate::seed::sub_rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcfgError {
    #[error("grammar line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid grammar: {0}")]
    Invalid(String),
    #[error("invalid sample config: {0}")]
    Config(String),
    #[error("no acceptable sample after {0} attempts")]
    Exhausted(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Template {
    Lit(Literal),
    Hole(usize),
    App(Prim, Vec<Template>),
}

#[derive(Debug, Clone)]
pub struct Production {
    template: Template,
    text: String,
    raw_weight: f64,
    weight: f64,
}

impl Production {
    /// The template as written, e.g. `(size <Ship>)`.
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Normalised probability of this production given its nonterminal.
    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// A weighted grammar rooted at its first nonterminal.
#[derive(Debug, Clone)]
pub struct Grammar {
    names: Vec<String>,
    rules: Vec<Vec<Production>>,
    samplers: Vec<WeightedIndex<f64>>,
}

impl Grammar {
    /// Builds a grammar from `(weight, lhs, template)` triples. The first
    /// lhs is the start symbol.
    pub fn from_rules<'a, I>(rules: I) -> Result<Grammar, PcfgError>
    where
        I: IntoIterator<Item = (f64, &'a str, &'a str)>,
    {
        let raw: Vec<(f64, &str, &str)> = rules.into_iter().collect();
        let mut names: Vec<String> = Vec::new();
        for (_, lhs, _) in &raw {
            if !names.iter().any(|n| n == lhs) {
                names.push(lhs.to_string());
            }
        }
        if names.is_empty() {
            return Err(PcfgError::Invalid("no productions".into()));
        }
        let mut grouped: Vec<Vec<(f64, Template, String)>> = vec![Vec::new(); names.len()];
        for (i, (weight, lhs, text)) in raw.iter().enumerate() {
            if !weight.is_finite() || *weight <= 0.0 {
                return Err(PcfgError::Syntax {
                    line: i + 1,
                    message: format!("weight must be positive, got {weight}"),
                });
            }
            let template =
                parse_template(text, &names).map_err(|message| PcfgError::Syntax { line: i + 1, message })?;
            let nt = names.iter().position(|n| n == lhs).expect("collected above");
            grouped[nt].push((*weight, template, text.trim().to_string()));
        }
        let mut rules = Vec::with_capacity(names.len());
        let mut samplers = Vec::with_capacity(names.len());
        for prods in grouped {
            let total: f64 = prods.iter().map(|p| p.0).sum();
            let sampler =
                WeightedIndex::new(prods.iter().map(|p| p.0)).map_err(|e| PcfgError::Invalid(e.to_string()))?;
            samplers.push(sampler);
            rules.push(
                prods
                    .into_iter()
                    .map(|(w, template, text)| Production { template, text, raw_weight: w, weight: w / total })
                    .collect(),
            );
        }
        Ok(Grammar { names, rules, samplers })
    }

    /// Reads the text format described in the module docs.
    pub fn from_text(text: &str) -> Result<Grammar, PcfgError> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: &str| PcfgError::Syntax { line: i + 1, message: message.to_string() };
            let (head, template) =
                line.split_once("->").ok_or_else(|| syntax("expected `<weight> <lhs> -> <template>`"))?;
            let mut head = head.split_whitespace();
            let (Some(weight), Some(lhs), None) = (head.next(), head.next(), head.next()) else {
                return Err(syntax("expected `<weight> <lhs> -> <template>`"));
            };
            let weight: f64 = weight.parse().map_err(|_| syntax("bad weight"))?;
            rules.push((i + 1, weight, lhs, template.trim()));
        }
        // Report errors against file lines rather than rule indices.
        Grammar::from_rules(rules.iter().map(|&(_, w, l, t)| (w, l, t))).map_err(|e| match e {
            PcfgError::Syntax { line, message } => PcfgError::Syntax { line: rules[line - 1].0, message },
            other => other,
        })
    }

    /// Writes the grammar in the text format, with the weights as given.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, prods) in self.names.iter().zip(&self.rules) {
            for p in prods {
                let _ = writeln!(out, "{} {} -> {}", p.raw_weight, name, p.text);
            }
        }
        out
    }

    pub fn start(&self) -> &str {
        &self.names[0]
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.names
    }

    pub fn productions(&self, nonterminal: &str) -> Option<&[Production]> {
        let i = self.names.iter().position(|n| n == nonterminal)?;
        Some(&self.rules[i])
    }

    pub fn nonterminal_index(&self, nonterminal: &str) -> Option<usize> {
        self.names.iter().position(|n| n == nonterminal)
    }
}

fn parse_template(text: &str, names: &[String]) -> Result<Template, String> {
    let sexp = read_sexp(text).map_err(|e| e.to_string())?;
    build_template(&sexp, names)
}

fn build_template(sexp: &SExp, names: &[String]) -> Result<Template, String> {
    match sexp {
        SExp::Atom { text, pos } => {
            if let Some(name) = text.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
                return names
                    .iter()
                    .position(|n| n == name)
                    .map(Template::Hole)
                    .ok_or_else(|| format!("unknown nonterminal <{name}>"));
            }
            match literal_from_atom(text, *pos).map_err(|e| e.to_string())? {
                Some(lit) => Ok(Template::Lit(lit)),
                None if text == "lambda" || text.chars().all(|c| c.is_ascii_alphanumeric()) => {
                    Err(format!("`{text}` is not a terminal; lambda and variables cannot be sampled"))
                }
                None => Err(format!("`{text}` is not a terminal")),
            }
        }
        SExp::List { items, .. } => {
            let Some((SExp::Atom { text: head, .. }, args)) = items.split_first() else {
                return Err("application must start with a primitive name".into());
            };
            let prim = Prim::from_name(head).ok_or_else(|| {
                if head == "lambda" {
                    "lambda cannot be sampled".to_string()
                } else {
                    format!("unknown primitive `{head}`")
                }
            })?;
            if prim == Prim::Map {
                return Err("`map` needs a lambda, which cannot be sampled".into());
            }
            if args.len() != prim.arity() {
                return Err(format!("`{head}` takes {} argument(s), got {}", prim.arity(), args.len()));
            }
            let args = args.iter().map(|a| build_template(a, names)).collect::<Result<_, _>>()?;
            Ok(Template::App(prim, args))
        }
    }
}

/// The default question grammar for `config`: every primitive except
/// `map`, `any`, `all` and `++`, which only make sense with a lambda.
pub fn battleship_grammar(config: &GameConfig) -> Grammar {
    let mut rules: Vec<(String, String)> = Vec::new();
    let mut add = |lhs: &str, rhs: String| rules.push((lhs.to_string(), rhs));

    for t in ["<Bool>", "<Num>", "<Color>", "<Orient>", "<Loc>"] {
        add("Answer", t.into());
    }
    for t in [
        "TRUE",
        "FALSE",
        "(and <Bool> <Bool>)",
        "(or <Bool> <Bool>)",
        "(not <Bool>)",
        "(touch <Ship> <Ship>)",
        "(== <Bool> <Bool>)",
        "(== <Num> <Num>)",
        "(== <Color> <Color>)",
        "(== <Orient> <Orient>)",
        "(== <Loc> <Loc>)",
        "(> <Num> <Num>)",
        "(< <Num> <Num>)",
    ] {
        add("Bool", t.into());
    }
    for d in 0..=9 {
        add("Num", d.to_string());
    }
    for t in [
        "(+ <Num> <Num>)",
        "(- <Num> <Num>)",
        "(+ <Bool> <Bool>)",
        "(size <Ship>)",
        "(rowL <Loc>)",
        "(colL <Loc>)",
        "(setSize <Set>)",
        "(setSize <ColorSet>)",
    ] {
        add("Num", t.into());
    }
    for t in ["<Ship>", "Water", "(color <Loc>)"] {
        add("Color", t.into());
    }
    for ship in Color::SHIPS.iter().filter(|c| config.has_ship(**c)) {
        add("Ship", ship.name().into());
    }
    for t in ["H", "V", "(orient <Ship>)"] {
        add("Orient", t.into());
    }
    for c in config.coords() {
        add("Loc", c.to_string());
    }
    for t in ["(topleft <Set>)", "(bottomright <Set>)"] {
        add("Loc", t.into());
    }
    for t in [
        "(coloredTiles <Color>)",
        "(set AllTiles)",
        "(union <Set> <Set>)",
        "(intersection <Set> <Set>)",
        "(setDifference <Set> <Set>)",
        "(unique <Set>)",
    ] {
        add("Set", t.into());
    }
    add("ColorSet", "(set AllColors)".into());

    Grammar::from_rules(rules.iter().map(|(l, r)| (1.0, l.as_str(), r.as_str())))
        .expect("built-in grammar is well formed")
}

/// [`battleship_grammar`] for the standard 6x6 game.
pub fn default_battleship_grammar() -> Grammar {
    battleship_grammar(&GameConfig::default())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub max_depth: usize,
    pub max_attempts: usize,
    /// Lambda sampling is not supported; must stay on.
    pub exclude_lambda: bool,
    /// Reject bare terminals (depth-1 programs).
    pub filter_depth1: bool,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> SampleConfig {
        SampleConfig { max_depth: 12, max_attempts: 10_000, exclude_lambda: true, filter_depth1: true, seed: 0 }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<(), PcfgError> {
        if self.max_depth < 2 {
            return Err(PcfgError::Config(format!("max_depth must be at least 2, got {}", self.max_depth)));
        }
        if self.max_attempts < 1 {
            return Err(PcfgError::Config("max_attempts must be at least 1".into()));
        }
        if !self.exclude_lambda {
            return Err(PcfgError::Config("lambda sampling is not supported".into()));
        }
        Ok(())
    }
}

/// One production choice: (nonterminal index, production index).
pub type Draw = (usize, usize);

/// Draws one program, rejecting derivations deeper than `max_depth` (or of
/// depth 1 when filtering) until one is accepted.
pub fn sample_program<R: Rng + ?Sized>(g: &Grammar, cfg: &SampleConfig, rng: &mut R) -> Result<Expr, PcfgError> {
    sample_program_traced(g, cfg, rng, &mut Vec::new())
}

/// Like [`sample_program`], appending every production choice made,
/// including those of rejected attempts, to `trace`.
pub fn sample_program_traced<R: Rng + ?Sized>(
    g: &Grammar,
    cfg: &SampleConfig,
    rng: &mut R,
    trace: &mut Vec<Draw>,
) -> Result<Expr, PcfgError> {
    cfg.validate()?;
    for _ in 0..cfg.max_attempts {
        let mut sampler = Sampler { g, max_depth: cfg.max_depth, rng: &mut *rng, trace: &mut *trace };
        let Some(e) = sampler.expand(0, 1) else {
            continue;
        };
        if cfg.filter_depth1 && e.depth() == 1 {
            continue;
        }
        return Ok(e);
    }
    Err(PcfgError::Exhausted(cfg.max_attempts))
}

/// `n` samples. Sample `i` uses its own stream derived from `cfg.seed`, so
/// the batch is the same however it is scheduled, and element `i` equals
/// `sample_program` on `seed::sub_rng(cfg.seed, i)`.
pub fn sample_batch(g: &Grammar, cfg: &SampleConfig, n: usize) -> Result<Vec<Expr>, PcfgError> {
    cfg.validate()?;
    (0..n).into_par_iter().map(|i| sample_program(g, cfg, &mut sub_rng(cfg.seed, i as u64))).collect()
}

struct Sampler<'a, R: Rng + ?Sized> {
    g: &'a Grammar,
    max_depth: usize,
    rng: &'a mut R,
    trace: &'a mut Vec<Draw>,
}

impl<R: Rng + ?Sized> Sampler<'_, R> {
    /// Expands nonterminal `nt` into a node at `depth`; `None` once the
    /// depth cap is exceeded.
    fn expand(&mut self, nt: usize, depth: usize) -> Option<Expr> {
        let choice = self.g.samplers[nt].sample(self.rng);
        self.trace.push((nt, choice));
        let g = self.g;
        self.instantiate(&g.rules[nt][choice].template, depth)
    }

    fn instantiate(&mut self, t: &Template, depth: usize) -> Option<Expr> {
        match t {
            Template::Hole(nt) => self.expand(*nt, depth),
            _ if depth > self.max_depth => None,
            Template::Lit(l) => Some(Expr::Lit(*l)),
            Template::App(prim, args) => {
                let mut out = Vec::with_capacity(args.len());
                for a in args {
                    out.push(self.instantiate(a, depth + 1)?);
                }
                Some(Expr::App { prim: *prim, args: out })
            }
        }
    }
}
