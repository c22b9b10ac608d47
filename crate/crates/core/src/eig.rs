//! Answer distributions, Bayesian updates and expected information gain.
//!
//! All entropies are in bits.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::board::{BoardError, HypothesisSpace};
use crate::dsl::{check_question, evaluate, EvalError, Expr, TypeError, Value};
use crate::seed::rng_from;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigError {
    #[error("not a question: {0}")]
    NotAQuestion(#[from] TypeError),
    /// The program fails on at least one hypothesis.
    #[error("invalid for this board: {error} (hypothesis {index})")]
    InvalidForBoard { error: EvalError, index: usize },
    #[error("impossible answer {0}: no hypothesis produces it")]
    ImpossibleAnswer(String),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error(transparent)]
    Board(#[from] BoardError),
}

/// Boards per work unit in parallel reductions. Fixed so that results never
/// depend on the thread count.
const CHUNK: usize = 4096;

/// Distribution of a question's answer under a hypothesis space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerDistribution {
    entries: BTreeMap<Value, f64>,
}

impl AnswerDistribution {
    pub fn get(&self, y: &Value) -> Option<f64> {
        self.entries.get(y).copied()
    }

    /// Answers in canonical order with their probabilities.
    pub fn iter(&self) -> impl Iterator<Item = (&Value, f64)> {
        self.entries.iter().map(|(v, p)| (v, *p))
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn entropy(&self) -> f64 {
        if self.entries.len() <= 1 {
            return 0.0;
        }
        -self.entries.values().map(|&p| p * p.log2()).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigScore {
    pub bits: f64,
    pub answer_support_size: usize,
    pub prior_entropy: f64,
}

/// Shannon entropy of the prior over boards.
pub fn entropy(space: &HypothesisSpace) -> f64 {
    if space.len() <= 1 {
        return 0.0;
    }
    if space.is_uniform() {
        return (space.len() as f64).log2();
    }
    -space.weights().iter().map(|&w| w * w.log2()).sum::<f64>()
}

/// The answer of `x` on every board, in board order.
pub fn answers(x: &Expr, space: &HypothesisSpace) -> Result<Vec<Value>, EigError> {
    check_question(x)?;
    let results: Vec<Result<Value, EvalError>> =
        space.boards().par_iter().with_min_len(256).map(|b| evaluate(x, b)).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|error| EigError::InvalidForBoard { error, index }))
        .collect()
}

/// Per-answer totals: board count, weight, and sum of w log2 w.
#[derive(Debug, Clone, Copy, Default)]
struct Group {
    count: u64,
    weight: f64,
    wlogw: f64,
}

fn group(space: &HypothesisSpace, answers: &[Value]) -> BTreeMap<Value, Group> {
    let weights = space.weights();
    let partial: Vec<BTreeMap<Value, Group>> = answers
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut m: BTreeMap<Value, Group> = BTreeMap::new();
            for (j, y) in chunk.iter().enumerate() {
                let w = weights[ci * CHUNK + j];
                let g = m.entry(y.clone()).or_default();
                g.count += 1;
                g.weight += w;
                g.wlogw += w * w.log2();
            }
            m
        })
        .collect();
    let mut total: BTreeMap<Value, Group> = BTreeMap::new();
    for m in partial {
        for (y, g) in m {
            let t = total.entry(y).or_default();
            t.count += g.count;
            t.weight += g.weight;
            t.wlogw += g.wlogw;
        }
    }
    total
}

fn distribution_from(space: &HypothesisSpace, groups: &BTreeMap<Value, Group>) -> AnswerDistribution {
    let n = space.len() as f64;
    let entries = groups
        .iter()
        .map(|(y, g)| {
            // Counts are exact for uniform spaces; avoid summing 1/n terms.
            let p = if space.is_uniform() { g.count as f64 / n } else { g.weight };
            (y.clone(), p)
        })
        .collect();
    AnswerDistribution { entries }
}

/// p(y | x) under the space's weights.
pub fn answer_distribution(x: &Expr, space: &HypothesisSpace) -> Result<AnswerDistribution, EigError> {
    let ys = answers(x, space)?;
    Ok(distribution_from(space, &group(space, &ys)))
}

/// The posterior over boards after observing answer `y` to `x`.
pub fn posterior_update(space: &HypothesisSpace, x: &Expr, y: &Value) -> Result<HypothesisSpace, EigError> {
    let ys = answers(x, space)?;
    let keep: Vec<bool> = ys.iter().map(|v| v == y).collect();
    if !keep.contains(&true) {
        return Err(EigError::ImpossibleAnswer(y.to_string()));
    }
    Ok(space.restrict(&keep)?)
}

/// Expected information gain of `x`: prior entropy minus the expected
/// posterior entropy.
pub fn eig(x: &Expr, space: &HypothesisSpace) -> Result<EigScore, EigError> {
    let ys = answers(x, space)?;
    Ok(eig_from_answers(space, &ys))
}

/// [`eig`] for precomputed answers (one per board, in board order).
pub fn eig_from_answers(space: &HypothesisSpace, answers: &[Value]) -> EigScore {
    let groups = group(space, answers);
    let prior = entropy(space);
    let support = groups.len();
    if support <= 1 {
        return EigScore { bits: 0.0, answer_support_size: support, prior_entropy: prior };
    }
    let expected_posterior: f64 = if space.is_uniform() {
        let n = space.len() as f64;
        groups.values().map(|g| (g.count as f64 / n) * (g.count as f64).log2()).sum()
    } else {
        // H(S|y) = log2 p_y - (1/p_y) sum_{s in y} w_s log2 w_s
        groups.values().map(|g| g.weight * g.weight.log2() - g.wlogw).sum()
    };
    EigScore {
        bits: (prior - expected_posterior).clamp(0.0, prior),
        answer_support_size: support,
        prior_entropy: prior,
    }
}

/// Monte Carlo estimate of EIG from boards drawn from the prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledEig {
    pub bits: f64,
    /// Delta-method standard error of the plug-in entropy.
    pub std_error: f64,
    pub samples: usize,
}

/// Estimates EIG as the entropy of the empirical answer distribution over
/// `samples` boards drawn (with replacement) from the space.
pub fn eig_sampled(x: &Expr, space: &HypothesisSpace, samples: usize, seed: u64) -> Result<SampledEig, EigError> {
    check_question(x)?;
    if samples == 0 {
        return Err(EigError::NoSamples);
    }
    let mut rng = rng_from(seed);
    let dist = WeightedIndex::new(space.weights()).map_err(|_| EigError::NoSamples)?;
    let picks: Vec<usize> = (0..samples).map(|_| dist.sample(&mut rng)).collect();
    let results: Vec<Result<Value, EvalError>> = picks.par_iter().map(|&i| evaluate(x, &space.boards()[i])).collect();
    let mut counts: BTreeMap<Value, u64> = BTreeMap::new();
    for (r, &index) in results.into_iter().zip(&picks) {
        let y = r.map_err(|error| EigError::InvalidForBoard { error, index })?;
        *counts.entry(y).or_default() += 1;
    }
    let n = samples as f64;
    let (mut h, mut second) = (0.0, 0.0);
    for &c in counts.values() {
        let p = c as f64 / n;
        h -= p * p.log2();
        second += p * p.log2() * p.log2();
    }
    let var = ((second - h * h) / n).max(0.0);
    Ok(SampledEig { bits: if counts.len() <= 1 { 0.0 } else { h }, std_error: var.sqrt(), samples })
}
