//! CSV and TSV renderings of analysis results.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Metric, QQData, SummaryRow, WelchResult};
use crate::dsl::QuestionType;

const MISSING: &str = "--";

fn metric_cells(m: Option<&Metric>) -> String {
    match m {
        Some(m) => format!("{:.6},{:.6}", m.mean, m.sem),
        None => format!("{MISSING},{MISSING}"),
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "label,k,n,eig_mean,eig_sem,valid_mean,valid_sem,informative_mean,informative_sem,\
         depth_mean,depth_sem,size_mean,size_sem,words_mean,words_sem,single_value_metric\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.label,
            r.k,
            r.n,
            metric_cells(r.eig.as_ref()),
            metric_cells(Some(&r.valid)),
            metric_cells(Some(&r.informative)),
            metric_cells(r.depth.as_ref()),
            metric_cells(r.size.as_ref()),
            metric_cells(r.words.as_ref()),
            r.single_value_metric,
        );
    }
    out
}

/// One point of an EIG-vs-k curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub label: String,
    pub k: usize,
    /// Buckets pooled over boards; shrinks as k grows.
    pub n_buckets: usize,
    pub all_invalid_buckets: usize,
    pub mean: f64,
    /// Mean with all-invalid buckets dropped instead of scored 0.
    pub mean_valid_only: Option<f64>,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn curve_tsv(points: &[CurvePoint]) -> String {
    let mut out = String::from("label\tk\tn_buckets\tall_invalid_buckets\tmean\tmean_valid_only\tci_lo\tci_hi\n");
    for p in points {
        let valid_only = p.mean_valid_only.map_or(MISSING.to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.6}\t{}\t{:.6}\t{:.6}",
            p.label, p.k, p.n_buckets, p.all_invalid_buckets, p.mean, valid_only, p.ci_lo, p.ci_hi
        );
    }
    out
}

pub fn qq_tsv(series: &[(String, QQData)]) -> String {
    let mut out = String::from("label\tpercentile\tmodel\thuman\n");
    for (label, q) in series {
        for ((p, m), h) in q.percentiles.iter().zip(&q.model).zip(&q.human) {
            let _ = writeln!(out, "{label}\t{p}\t{m:.6}\t{h:.6}");
        }
    }
    out
}

pub fn types_tsv(series: &[(String, BTreeMap<QuestionType, f64>)]) -> String {
    let mut out = String::from("label\ttype\tproportion\n");
    for (label, dist) in series {
        for (t, p) in dist {
            let _ = writeln!(out, "{label}\t{}\t{p:.6}", t.name());
        }
    }
    out
}

/// A Welch comparison between two labelled samples at one k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchCell {
    pub a: String,
    pub b: String,
    pub k: usize,
    /// `None` when the test is undefined for these samples.
    pub result: Option<WelchResult>,
}

pub fn welch_tsv(cells: &[WelchCell]) -> String {
    let mut out = String::from("a\tb\tk\tt\tdof\tp\n");
    for c in cells {
        let stats = match c.result {
            Some(w) => format!("{:.6}\t{:.6}\t{:.6e}", w.t, w.dof, w.p),
            None => format!("{MISSING}\t{MISSING}\t{MISSING}"),
        };
        let _ = writeln!(out, "{}\t{}\t{}\t{stats}", c.a, c.b, c.k);
    }
    out
}
