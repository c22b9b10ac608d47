//! Summary statistics over scored candidates: per-metric means and standard
//! errors, Welch's t-test, percentile bootstrap intervals, Q-Q data and
//! question-type proportions.

mod report;
pub mod special;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::QuestionType;
use crate::lips::CandidateRecord;
use crate::seed::sub_rng;

pub use report::{curve_tsv, qq_tsv, summary_csv, types_tsv, welch_tsv, CurvePoint, WelchCell};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    Empty,
    #[error("each sample needs at least 2 values")]
    TooSmall,
    #[error("both samples have zero variance")]
    ZeroVariance,
    #[error("confidence level must lie in (0, 1)")]
    BadLevel,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Mean and standard error of the mean, sd / √n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub mean: f64,
    pub sem: f64,
    pub n: usize,
}

impl Metric {
    /// `None` for an empty sample. With one value the standard error is
    /// reported as 0.
    pub fn of(xs: &[f64]) -> Option<Metric> {
        if xs.is_empty() {
            return None;
        }
        let sem = if xs.len() < 2 { 0.0 } else { (variance(xs) / xs.len() as f64).sqrt() };
        Some(Metric { mean: mean(xs), sem, n: xs.len() })
    }
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub k: usize,
    pub n: usize,
    /// EIG over valid records.
    pub eig: Option<Metric>,
    /// Fraction valid over all records.
    pub valid: Metric,
    /// Fraction with EIG > 0 over all records.
    pub informative: Metric,
    pub depth: Option<Metric>,
    pub size: Option<Metric>,
    /// Absent when no record carries a natural-language question.
    pub words: Option<Metric>,
    /// Set when some metric rests on a single value, so its standard error
    /// of 0 is a convention rather than an estimate.
    pub single_value_metric: bool,
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Summarises a group of records.
pub fn summarize(label: &str, k: usize, records: &[CandidateRecord]) -> Result<SummaryRow, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty);
    }
    let valid: Vec<&CandidateRecord> = records.iter().filter(|r| r.valid).collect();
    let eig: Vec<f64> = valid.iter().filter_map(|r| r.eig_bits).collect();
    let depth: Vec<f64> = valid.iter().filter_map(|r| r.depth).map(|d| d as f64).collect();
    let size: Vec<f64> = valid.iter().filter_map(|r| r.size).map(|d| d as f64).collect();
    let words: Vec<f64> = records.iter().filter_map(|r| r.word_count).map(|d| d as f64).collect();
    let valid_frac: Vec<f64> = records.iter().map(|r| indicator(r.valid)).collect();
    let informative: Vec<f64> = records.iter().map(|r| indicator(r.informative)).collect();

    let metrics = [Metric::of(&eig), Metric::of(&depth), Metric::of(&size), Metric::of(&words)];
    Ok(SummaryRow {
        label: label.to_string(),
        k,
        n: records.len(),
        single_value_metric: records.len() == 1 || metrics.iter().flatten().any(|m| m.n == 1),
        eig: metrics[0],
        valid: Metric::of(&valid_frac).expect("nonempty"),
        informative: Metric::of(&informative).expect("nonempty"),
        depth: metrics[1],
        size: metrics[2],
        words: metrics[3],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub dof: f64,
    /// Two-sided.
    pub p: f64,
}

/// Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooSmall);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = variance(a) / na;
    let vb = variance(b) / nb;
    if va + vb == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let t = (mean(a) - mean(b)) / (va + vb).sqrt();
    let dof = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(WelchResult { t, dof, p: special::student_t_two_sided(t, dof) })
}

/// Linear-interpolation quantile of sorted data at `q` in [0, 1]: position
/// `(n - 1) q` between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Percentile bootstrap interval for the mean. Replicate `i` resamples with
/// its own generator derived from `seed`, so the result does not depend on
/// thread scheduling.
pub fn bootstrap_ci(values: &[f64], level: f64, n_boot: usize, seed: u64) -> Result<(f64, f64), StatsError> {
    if values.is_empty() || n_boot == 0 {
        return Err(StatsError::Empty);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::BadLevel);
    }
    let lo_v = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_v = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = values.len();
    let means: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|i| {
            let mut rng = sub_rng(seed, i as u64);
            let s: f64 = (0..n).map(|_| values[rng.random_range(0..n)]).sum();
            // Rounding can push the mean of equal values past them.
            (s / n as f64).clamp(lo_v, hi_v)
        })
        .collect();
    let means = sorted(&means);
    let alpha = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&means, alpha), quantile_sorted(&means, 1.0 - alpha)))
}

/// Paired quantiles of two samples on a shared percentile grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QQData {
    /// Percentiles in [0, 100].
    pub percentiles: Vec<f64>,
    pub model: Vec<f64>,
    pub human: Vec<f64>,
}

/// `1, 2, …, 99`.
pub fn default_percentiles() -> Vec<f64> {
    (1..100).map(f64::from).collect()
}

pub fn qq_points(model: &[f64], human: &[f64], percentiles: &[f64]) -> Result<QQData, StatsError> {
    if model.is_empty() || human.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut grid = percentiles.to_vec();
    grid.sort_by(f64::total_cmp);
    let (m, h) = (sorted(model), sorted(human));
    Ok(QQData {
        model: grid.iter().map(|p| quantile_sorted(&m, p / 100.0)).collect(),
        human: grid.iter().map(|p| quantile_sorted(&h, p / 100.0)).collect(),
        percentiles: grid,
    })
}

/// Share of each top-level question type among valid records. Types that
/// never occur are present with proportion 0; an input without valid
/// records gives an empty map.
pub fn type_distribution(records: &[CandidateRecord]) -> BTreeMap<QuestionType, f64> {
    let mut counts: BTreeMap<QuestionType, usize> = BTreeMap::new();
    for r in records.iter().filter(|r| r.valid) {
        if let Some(t) = r.question_type {
            *counts.entry(t).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return BTreeMap::new();
    }
    QuestionType::ALL.iter().map(|&t| (t, counts.get(&t).copied().unwrap_or(0) as f64 / total as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p: f64,
}

/// Pearson goodness-of-fit test of `observed` counts against `expected`
/// probabilities (which must sum to 1).
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquare, StatsError> {
    if observed.len() < 2 || observed.len() != expected.len() {
        return Err(StatsError::TooSmall);
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(StatsError::Empty);
    }
    let statistic = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum::<f64>();
    let dof = observed.len() - 1;
    Ok(ChiSquare { statistic, dof, p: special::chi_square_sf(statistic, dof as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(eig: Option<f64>, depth: usize, words: Option<usize>) -> CandidateRecord {
        CandidateRecord {
            proposal: "p".into(),
            board_id: "b".into(),
            index: 0,
            question: None,
            program: Some("(size Red)".into()),
            raw_program: None,
            valid: eig.is_some(),
            informative: eig.is_some_and(|e| e > 0.0),
            eig_bits: eig,
            question_type: Some(QuestionType::Number),
            depth: Some(depth),
            size: Some(depth + 1),
            word_count: words,
            error: None,
        }
    }

    #[test]
    fn sem_conventions() {
        let one = Metric::of(&[2.0]).unwrap();
        assert_eq!((one.mean, one.sem), (2.0, 0.0));
        let two = Metric::of(&[0.0, 2.0]).unwrap();
        assert_eq!((two.mean, two.sem), (1.0, 1.0));
    }

    #[test]
    fn summary_fields() {
        let rs = [rec(Some(2.0), 2, None), rec(Some(0.0), 3, None), rec(None, 2, None)];
        let row = summarize("grammar", 1, &rs).unwrap();
        assert_eq!(row.eig.unwrap().mean, 1.0);
        assert!((row.valid.mean - 2.0 / 3.0).abs() < 1e-15);
        assert!((row.informative.mean - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(row.depth.unwrap().mean, 2.5);
        assert!(row.words.is_none());
        assert!(summarize("x", 1, &[]).is_err());
        assert!(summarize("x", 1, &rs[..1]).unwrap().single_value_metric);
    }

    #[test]
    fn welch_edges() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let w = welch_t_test(&a, &a).unwrap();
        assert_eq!((w.t, w.p), (0.0, 1.0));
        assert!(welch_t_test(&[1.0], &a).is_err());
        assert_eq!(welch_t_test(&[1.0, 1.0], &[2.0, 2.0]), Err(StatsError::ZeroVariance));
        let far = welch_t_test(&[0.0, 0.1, 0.2, 0.1], &[10.0, 10.1, 9.9, 10.2]).unwrap();
        assert!(far.p < 0.001);
    }

    #[test]
    fn quantiles_by_hand() {
        let q = qq_points(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0], &[25.0, 50.0, 75.0]).unwrap();
        assert_eq!(q.model, [1.75, 2.5, 3.25]);
        assert_eq!(q.model, q.human);
    }

    #[test]
    fn bootstrap_degenerate_and_deterministic() {
        assert_eq!(bootstrap_ci(&[0.1; 7], 0.95, 200, 3).unwrap(), (0.1, 0.1));
        let xs = [0.3, 1.2, 0.7, 2.2, 0.0, 1.1];
        assert_eq!(bootstrap_ci(&xs, 0.95, 500, 1), bootstrap_ci(&xs, 0.95, 500, 1));
        assert_eq!(bootstrap_ci(&xs, 1.0, 500, 1), Err(StatsError::BadLevel));
    }

    #[test]
    fn chi_square_uniform() {
        let fit = chi_square_gof(&[25, 25, 25, 25], &[0.25; 4]).unwrap();
        assert_eq!((fit.statistic, fit.dof, fit.p), (0.0, 3, 1.0));
        assert!(chi_square_gof(&[100, 0], &[0.5, 0.5]).unwrap().p < 1e-20);
    }
}
