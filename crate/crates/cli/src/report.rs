//! `lips report`: tables over one or more run directories.
//!
//! Writes `summary.csv` (k = 1 statistics per run), `curve.tsv` (mean best
//! EIG per k with bootstrap intervals), `types.tsv`, `welch.tsv`, and with a
//! human dataset also `qq.tsv`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use lips_core::analysis::{
    bootstrap_ci, curve_tsv, default_percentiles, mean, qq_points, qq_tsv, summarize, summary_csv, type_distribution,
    types_tsv, welch_t_test, welch_tsv, CurvePoint, WelchCell,
};
use lips_core::enumerate_hypotheses;
use lips_core::lips::{score_candidates, CandidateRecord, RawCandidate};
use lips_core::llm::parse_completion;
use lips_core::seed::derive_seed_str;

use crate::{load_board, load_boards, load_human, read_text, write, CliError, HumanRow};

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Run directories written by `lips run`.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Human question dataset (JSONL of board_id, question, program),
    /// scored on the runs' boards.
    #[arg(long)]
    pub human: Option<PathBuf>,
    /// Extra boards for human questions about boards no run used.
    #[arg(long = "human-boards", num_args = 1..)]
    pub human_boards: Vec<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub n_boot: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
struct ManifestView {
    status: String,
    config: ConfigView,
}

#[derive(Debug, Deserialize)]
struct ConfigView {
    label: String,
}

#[derive(Debug, Deserialize)]
struct KView {
    k: usize,
    bucket_eig: Vec<f64>,
    bucket_all_invalid: Vec<bool>,
}

#[derive(Debug, Deserialize)]
struct BucketView {
    estimates: Vec<KView>,
}

/// What a report needs from one run directory.
struct RunData {
    label: String,
    records: Vec<CandidateRecord>,
    /// k → pooled bucket values and their all-invalid flags.
    buckets: BTreeMap<usize, (Vec<f64>, Vec<bool>)>,
    boards: Vec<PathBuf>,
}

fn sorted_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    files.sort();
    Ok(files)
}

fn load_run(dir: &Path) -> Result<RunData, CliError> {
    let manifest_path = dir.join("manifest.json");
    let manifest: ManifestView = serde_json::from_str(&read_text(&manifest_path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", manifest_path.display())))?;
    if manifest.status != "complete" {
        return Err(CliError::Input(format!("{}: run status is {:?}", dir.display(), manifest.status)));
    }
    let mut records = Vec::new();
    for f in sorted_files(&dir.join("candidates"), "jsonl")? {
        for (i, line) in read_text(&f)?.lines().enumerate() {
            let r: CandidateRecord =
                serde_json::from_str(line).map_err(|e| CliError::Input(format!("{}:{}: {e}", f.display(), i + 1)))?;
            records.push(r);
        }
    }
    let mut buckets: BTreeMap<usize, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for f in sorted_files(&dir.join("buckets"), "json")? {
        let view: BucketView =
            serde_json::from_str(&read_text(&f)?).map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?;
        for est in view.estimates {
            let slot = buckets.entry(est.k).or_default();
            slot.0.extend(est.bucket_eig);
            slot.1.extend(est.bucket_all_invalid);
        }
    }
    Ok(RunData { label: manifest.config.label, records, buckets, boards: sorted_files(&dir.join("boards"), "json")? })
}

/// Scores the human dataset on the given boards. Rows about other boards
/// are skipped; their board ids are returned.
fn score_human(rows: &[HumanRow], board_files: &[PathBuf]) -> Result<(Vec<CandidateRecord>, Vec<String>), CliError> {
    let mut boards = BTreeMap::new();
    for f in board_files {
        let b = load_board(f)?;
        boards.entry(b.id.clone()).or_insert(b);
    }
    let mut by_board: BTreeMap<&str, Vec<&HumanRow>> = BTreeMap::new();
    for r in rows {
        by_board.entry(r.board_id.as_str()).or_default().push(r);
    }
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (id, rows) in by_board {
        let Some(b) = boards.get(id) else {
            skipped.push(id.to_string());
            continue;
        };
        let space = enumerate_hypotheses(&b.board).map_err(|e| CliError::Input(format!("board {id}: {e}")))?;
        let raw: Vec<RawCandidate> = rows
            .iter()
            .map(|r| RawCandidate {
                question: Some(r.question.clone()),
                program: parse_completion(&r.program).map_err(|_| r.program.clone()),
            })
            .collect();
        records.extend(score_candidates(&raw, &space, "human", id));
    }
    Ok((records, skipped))
}

fn eig_values(records: &[CandidateRecord]) -> Vec<f64> {
    records.iter().map(CandidateRecord::eig_or_zero).collect()
}

pub(crate) fn report(args: &ReportArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut runs = args.runs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>, _>>()?;
    // Disambiguate repeated labels.
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for r in &mut runs {
        let count = seen.entry(r.label.clone()).or_default();
        *count += 1;
        if *count > 1 {
            r.label = format!("{}#{}", r.label, count);
        }
    }
    let mut msg = String::new();
    let human = match &args.human {
        Some(p) => {
            let mut boards: Vec<PathBuf> = runs.iter().flat_map(|r| r.boards.iter().cloned()).collect();
            for extra in load_boards(&args.human_boards)? {
                boards.push(extra.path);
            }
            let (records, skipped) = score_human(&load_human(p)?, &boards)?;
            if !skipped.is_empty() {
                msg.push_str(&format!("human rows skipped for boards without a board file: {}\n", skipped.join(", ")));
            }
            if records.is_empty() {
                return Err(CliError::Input("no human row refers to a known board".into()));
            }
            Some(records)
        }
        None => None,
    };

    let mut rows = Vec::new();
    let mut types = Vec::new();
    for r in &runs {
        rows.push(summarize(&r.label, 1, &r.records).map_err(|e| CliError::Input(format!("{}: {e}", r.label)))?);
        types.push((r.label.clone(), type_distribution(&r.records)));
    }
    if let Some(h) = &human {
        rows.push(summarize("human", 1, h).map_err(|e| CliError::Input(format!("human: {e}")))?);
        types.push(("human".to_string(), type_distribution(h)));
    }

    let mut curve = Vec::new();
    for r in &runs {
        for (&k, (values, all_invalid)) in &r.buckets {
            if values.is_empty() {
                continue;
            }
            let seed = derive_seed_str(args.seed, &format!("{}/{k}", r.label));
            let (ci_lo, ci_hi) =
                bootstrap_ci(values, args.level, args.n_boot, seed).map_err(|e| CliError::Input(e.to_string()))?;
            let valid_only: Vec<f64> =
                values.iter().zip(all_invalid).filter(|(_, inv)| !**inv).map(|(v, _)| *v).collect();
            curve.push(CurvePoint {
                label: r.label.clone(),
                k,
                n_buckets: values.len(),
                all_invalid_buckets: values.len() - valid_only.len(),
                mean: mean(values),
                mean_valid_only: (!valid_only.is_empty()).then(|| mean(&valid_only)),
                ci_lo,
                ci_hi,
            });
        }
    }

    let mut welch = Vec::new();
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            let ks: BTreeSet<usize> = a.buckets.keys().filter(|k| b.buckets.contains_key(k)).copied().collect();
            for k in ks {
                welch.push(WelchCell {
                    a: a.label.clone(),
                    b: b.label.clone(),
                    k,
                    result: welch_t_test(&a.buckets[&k].0, &b.buckets[&k].0).ok(),
                });
            }
        }
    }
    if let Some(h) = &human {
        let hv = eig_values(h);
        for r in &runs {
            for (&k, (values, _)) in &r.buckets {
                welch.push(WelchCell {
                    a: r.label.clone(),
                    b: "human".into(),
                    k,
                    result: welch_t_test(values, &hv).ok(),
                });
            }
        }
    }

    write(&args.out.join("summary.csv"), summary_csv(&rows))?;
    write(&args.out.join("curve.tsv"), curve_tsv(&curve))?;
    write(&args.out.join("types.tsv"), types_tsv(&types))?;
    write(&args.out.join("welch.tsv"), welch_tsv(&welch))?;
    let mut written = vec!["summary.csv", "curve.tsv", "types.tsv", "welch.tsv"];
    if let Some(h) = &human {
        let hv: Vec<f64> = h.iter().filter_map(|r| r.eig_bits).collect();
        let mut series = Vec::new();
        for r in &runs {
            let mv: Vec<f64> = r.records.iter().filter_map(|r| r.eig_bits).collect();
            if let Ok(q) = qq_points(&mv, &hv, &default_percentiles()) {
                series.push((r.label.clone(), q));
            }
        }
        write(&args.out.join("qq.tsv"), qq_tsv(&series))?;
        written.push("qq.tsv");
    }
    for f in written {
        msg.push_str(&format!("wrote {}\n", args.out.join(f).display()));
    }
    stdout.write_all(msg.as_bytes()).map_err(|e| CliError::Other(e.to_string()))
}
