//! Best-of-k question selection and the post-hoc bucketing estimator.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::board::HypothesisSpace;
use crate::dsl::{check_question, Expr, QuestionType};
use crate::eig::{eig, EigError};

/// Two EIG values closer than this are a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LipsError {
    #[error("no candidates to select from")]
    Empty,
    #[error("bucket size must be at least 1")]
    ZeroK,
    #[error("{n} records cannot fill a bucket of size {k}")]
    TooFew { n: usize, k: usize },
}

/// Proposal distribution a run samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalKind {
    Grammar,
    Llm,
}

/// Best-of-k selection settings for one board.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub proposal: ProposalKind,
    pub board_id: String,
    /// Seeds the shuffle and the tie-break.
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), LipsError> {
        if self.k == 0 {
            return Err(LipsError::ZeroK);
        }
        Ok(())
    }
}

/// A proposed question before scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCandidate {
    /// Natural-language question; `None` for grammar samples.
    pub question: Option<String>,
    /// The program, or the text that failed to become one.
    pub program: Result<Expr, String>,
}

impl RawCandidate {
    pub fn program(e: Expr) -> RawCandidate {
        RawCandidate { question: None, program: Ok(e) }
    }
}

/// One scored sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub proposal: String,
    pub board_id: String,
    pub index: usize,
    pub question: Option<String>,
    /// Canonical program text, when the candidate parsed.
    pub program: Option<String>,
    /// Completion text that could not be used as a program.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_program: Option<String>,
    pub valid: bool,
    pub informative: bool,
    pub eig_bits: Option<f64>,
    pub question_type: Option<QuestionType>,
    pub depth: Option<usize>,
    pub size: Option<usize>,
    pub word_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CandidateRecord {
    /// EIG with invalid candidates counted as zero.
    pub fn eig_or_zero(&self) -> f64 {
        self.eig_bits.unwrap_or(0.0)
    }
}

/// Whitespace-separated token count.
pub fn word_count(question: &str) -> usize {
    question.split_whitespace().count()
}

/// Scores every candidate against `space`. Candidates that do not parse,
/// are not questions, or fail on some hypothesis become invalid records.
/// Identical programs are scored once.
pub fn score_candidates(
    raw: &[RawCandidate],
    space: &HypothesisSpace,
    proposal: &str,
    board_id: &str,
) -> Vec<CandidateRecord> {
    let mut unique: HashMap<&Expr, usize> = HashMap::new();
    let mut order: Vec<&Expr> = Vec::new();
    for c in raw {
        if let Ok(e) = &c.program {
            unique.entry(e).or_insert_with(|| {
                order.push(e);
                order.len() - 1
            });
        }
    }
    let scores: Vec<Result<f64, EigError>> = order.par_iter().map(|e| eig(e, space).map(|s| s.bits)).collect();

    raw.iter()
        .enumerate()
        .map(|(index, c)| {
            let mut rec = CandidateRecord {
                proposal: proposal.to_string(),
                board_id: board_id.to_string(),
                index,
                question: c.question.clone(),
                program: None,
                raw_program: None,
                valid: false,
                informative: false,
                eig_bits: None,
                question_type: None,
                depth: None,
                size: None,
                word_count: c.question.as_deref().map(word_count),
                error: None,
            };
            match &c.program {
                Err(text) => {
                    rec.raw_program = Some(text.clone());
                    rec.error = Some("no usable program".into());
                }
                Ok(e) => {
                    rec.program = Some(e.to_string());
                    rec.depth = Some(e.depth());
                    rec.size = Some(e.size());
                    rec.question_type = check_question(e).ok();
                    match &scores[unique[e]] {
                        Ok(bits) => {
                            rec.valid = true;
                            rec.eig_bits = Some(*bits);
                            rec.informative = *bits > 0.0;
                        }
                        Err(err) => rec.error = Some(err.to_string()),
                    }
                }
            }
            rec
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Selection {
    /// Position of the winner in the input slice.
    Best {
        position: usize,
    },
    AllInvalid,
}

/// Argmax of EIG over valid records; ties (within [`TIE_TOLERANCE`] of the
/// maximum) are broken uniformly at random.
pub fn select_best<R: Rng + ?Sized>(records: &[CandidateRecord], rng: &mut R) -> Result<Selection, LipsError> {
    let scores: Vec<Option<f64>> = records.iter().map(|r| r.eig_bits.filter(|_| r.valid)).collect();
    select_by_score(&scores, rng)
}

fn select_by_score<R: Rng + ?Sized>(scores: &[Option<f64>], rng: &mut R) -> Result<Selection, LipsError> {
    if scores.is_empty() {
        return Err(LipsError::Empty);
    }
    let Some(max) = scores.iter().flatten().copied().reduce(f64::max) else {
        return Ok(Selection::AllInvalid);
    };
    let tied: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, Some(v) if max - v <= TIE_TOLERANCE))
        .map(|(i, _)| i)
        .collect();
    let position = if tied.len() == 1 { tied[0] } else { tied[rng.random_range(0..tied.len())] };
    Ok(Selection::Best { position })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bucket {
    /// Record positions (into the input slice) in this bucket.
    pub members: Vec<usize>,
    /// Position of the selected record, if any member was valid.
    pub best: Option<usize>,
    pub eig_bits: f64,
    pub all_invalid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketEstimate {
    pub k: usize,
    pub buckets: Vec<Bucket>,
    /// Mean best EIG over buckets, all-invalid buckets scoring 0.
    pub mean_eig: f64,
    /// Mean over buckets with at least one valid member.
    pub mean_eig_valid_only: Option<f64>,
    pub all_invalid_buckets: usize,
}

/// Shuffles the records, splits them into `n / k` disjoint buckets of `k`
/// (the remainder is dropped) and selects the best of each.
pub fn bucketize_estimate<R: Rng + ?Sized>(
    records: &[CandidateRecord],
    k: usize,
    rng: &mut R,
) -> Result<BucketEstimate, LipsError> {
    if k == 0 {
        return Err(LipsError::ZeroK);
    }
    if records.len() < k {
        return Err(LipsError::TooFew { n: records.len(), k });
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(rng);
    let mut buckets = Vec::with_capacity(records.len() / k);
    for chunk in order.chunks_exact(k) {
        let scores: Vec<Option<f64>> =
            chunk.iter().map(|&i| records[i].eig_bits.filter(|_| records[i].valid)).collect();
        let bucket = match select_by_score(&scores, rng)? {
            Selection::Best { position } => Bucket {
                members: chunk.to_vec(),
                best: Some(chunk[position]),
                eig_bits: scores[position].expect("selected records are valid"),
                all_invalid: false,
            },
            Selection::AllInvalid => Bucket { members: chunk.to_vec(), best: None, eig_bits: 0.0, all_invalid: true },
        };
        buckets.push(bucket);
    }
    let mean_eig = buckets.iter().map(|b| b.eig_bits).sum::<f64>() / buckets.len() as f64;
    let valid: Vec<f64> = buckets.iter().filter(|b| !b.all_invalid).map(|b| b.eig_bits).collect();
    Ok(BucketEstimate {
        k,
        mean_eig,
        mean_eig_valid_only: (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64),
        all_invalid_buckets: buckets.len() - valid.len(),
        buckets,
    })
}

/// Mean of `xs`, never above their maximum despite rounding.
fn bounded_mean(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (xs.iter().sum::<f64>() / xs.len() as f64).min(max)
}

/// Bucket-max means for several `k` over one fixed order of `values`, with
/// the buckets nested: the order is cut into buckets of the largest `k`,
/// each of those holds `⌊k_big / k_next⌋` buckets of the next size down
/// (taken from its front), and so on. Every bucket of a smaller `k` lies
/// inside one of the next larger size, so the means are nondecreasing in
/// `k` exactly, including under floating-point rounding.
///
/// Returns one mean per entry of `ks` (in the given order), or `None` when
/// fewer values than the largest `k` are supplied.
pub fn nested_bucket_means(values: &[f64], ks: &[usize]) -> Option<Vec<f64>> {
    let mut levels: Vec<usize> = ks.to_vec();
    levels.sort_unstable();
    levels.dedup();
    if levels.first() == Some(&0) {
        return None;
    }
    let top = *levels.last()?;
    if values.len() < top {
        return None;
    }

    // means[level][top bucket]
    fn descend(values: &[f64], levels: &[usize], depth: usize, target: usize) -> f64 {
        let size = levels[depth];
        if depth == target {
            return values[..size].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        let child = levels[depth - 1];
        let parts: Vec<f64> =
            (0..size / child).map(|j| descend(&values[j * child..], levels, depth - 1, target)).collect();
        bounded_mean(&parts)
    }

    let per_level: Vec<f64> = (0..levels.len())
        .map(|target| {
            let tops: Vec<f64> =
                values.chunks_exact(top).map(|chunk| descend(chunk, &levels, levels.len() - 1, target)).collect();
            bounded_mean(&tops)
        })
        .collect();
    Some(ks.iter().map(|k| per_level[levels.iter().position(|l| l == k).expect("k is a level")]).collect())
}

/// [`nested_bucket_means`] over records shuffled with `rng`, invalid
/// records counting as zero.
pub fn aligned_dominance_means<R: Rng + ?Sized>(
    records: &[CandidateRecord],
    ks: &[usize],
    rng: &mut R,
) -> Option<Vec<f64>> {
    let mut values: Vec<f64> = records.iter().map(CandidateRecord::eig_or_zero).collect();
    values.shuffle(rng);
    nested_bucket_means(&values, ks)
}
