//! `lips run`: sample candidates per board, score them, bucketize per k.
//!
//! Layout of a run directory:
//!
//! ```text
//! manifest.json
//! boards/<id>.json        board documents as scored
//! candidates/<id>.jsonl   one CandidateRecord per line
//! buckets/<id>.json       best-of-k estimates for every k
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use lips_core::board::BoardDocument;
use lips_core::lips::{bucketize_estimate, score_candidates, CandidateRecord, ProposalKind, RawCandidate};
use lips_core::llm::{
    build_generation_prompt, build_translation_prompt, propose_questions, sample_translation_examples,
    translate_question, BoardFormat, CachingProvider, ChatProvider, DecodingParams, HttpProvider, HttpSpec, LlmError,
    PromptMode, ProviderInfo, Purpose, QAExample, ReplayProvider, RequestContext, RoleEncoding, ShotBoard,
};
use lips_core::pcfg::{sample_batch, SampleConfig};
use lips_core::seed::{derive_seed_str, rng_from, sub_rng};
use lips_core::{enumerate_hypotheses, GameConfig};

use crate::{
    input, load_boards, load_grammar, load_human, sha256_hex, shot_pool, translation_pool, write, CliError, Env,
    LoadedBoard,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Proposal {
    Grammar,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Metadata,
    Prepended,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub proposal: Proposal,
    /// Board files or directories of board files.
    #[arg(long, required = true, num_args = 1..)]
    pub boards: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,50")]
    pub k: Vec<usize>,
    /// Samples per board.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Name used for this run in reports.
    #[arg(long)]
    pub label: Option<String>,

    /// Grammar file for grammar runs.
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub max_depth: usize,

    #[arg(long, default_value = "few_shot")]
    pub mode: PromptMode,
    #[arg(long, default_value = "grid")]
    pub format: BoardFormat,
    /// Human question dataset (JSONL of board_id, question, program).
    #[arg(long)]
    pub examples: Option<PathBuf>,
    /// Boards of the human dataset, for few-shot examples.
    #[arg(long = "example-boards", num_args = 1..)]
    pub example_boards: Vec<PathBuf>,
    /// Replay fixture (JSONL) instead of a live endpoint.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// OpenAI-compatible base URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "LIPS_API_KEY")]
    pub api_key_env: String,
    #[arg(long, default_value = "replay")]
    pub model: String,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, value_enum, default_value = "metadata")]
    pub role_encoding: Encoding,
    /// Translations sampled per question; the first usable one is kept.
    #[arg(long, default_value_t = 1)]
    pub translation_samples: usize,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Directory for cached completions.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct InputFile {
    role: &'static str,
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct BoardEntry {
    id: String,
    hypotheses: usize,
}

#[derive(Debug, Serialize)]
struct RunSettings {
    proposal: ProposalKind,
    label: String,
    k: Vec<usize>,
    n: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_config: Option<SampleConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decoding: Option<DecodingParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    translation_samples: Option<usize>,
}

#[derive(Debug, Serialize)]
pub(crate) struct Manifest {
    format_version: u32,
    command: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    created: u64,
    config: RunSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    provider: Option<ProviderInfo>,
    inputs: Vec<InputFile>,
    boards: Vec<BoardEntry>,
}

#[derive(Debug, Serialize)]
struct KEstimate {
    k: usize,
    n_buckets: usize,
    all_invalid_buckets: usize,
    mean_eig: f64,
    mean_eig_valid_only: Option<f64>,
    /// Best EIG of each bucket (0 for all-invalid buckets).
    bucket_eig: Vec<f64>,
    bucket_all_invalid: Vec<bool>,
    /// Candidate index of each bucket's winner.
    best_index: Vec<Option<usize>>,
}

#[derive(Debug, Serialize)]
struct BucketFile {
    board_id: String,
    n: usize,
    estimates: Vec<KEstimate>,
    /// Values of k larger than the sample count.
    skipped_k: Vec<usize>,
}

fn provider_err(e: LlmError) -> CliError {
    match e {
        LlmError::Prompt(_) | LlmError::Config(_) => CliError::Input(e.to_string()),
        other => CliError::Provider(other.to_string()),
    }
}

fn path_string(p: &Path) -> String {
    p.to_string_lossy().replace('\\', "/")
}

fn default_label(args: &RunArgs) -> String {
    match args.proposal {
        Proposal::Grammar => "grammar".into(),
        Proposal::Llm => format!("llm-{}-{}-{}", args.model, args.mode.name(), args.format.name()),
    }
}

/// Everything a language-model run needs besides the boards.
struct LlmSetup {
    provider: Box<dyn ChatProvider>,
    params: DecodingParams,
    shots: Vec<ShotBoard>,
    translations: Vec<(String, QAExample)>,
}

fn llm_setup(args: &RunArgs, inputs: &mut Vec<InputFile>) -> Result<LlmSetup, CliError> {
    let examples = args
        .examples
        .as_ref()
        .ok_or_else(|| CliError::Input("llm runs need --examples (question/program pairs for translation)".into()))?;
    inputs.push(InputFile {
        role: "examples",
        path: path_string(examples),
        sha256: sha256_hex(&crate::read(examples)?),
    });
    let rows = load_human(examples)?;
    let example_boards = load_boards(&args.example_boards)?;
    for b in &example_boards {
        inputs.push(InputFile { role: "example_board", path: path_string(&b.path), sha256: b.sha256.clone() });
    }
    let provider: Box<dyn ChatProvider> = match (&args.replay, &args.endpoint) {
        (Some(path), None) => {
            inputs.push(InputFile { role: "replay", path: path_string(path), sha256: sha256_hex(&crate::read(path)?) });
            let p = ReplayProvider::from_path(path).map_err(input)?;
            wrap_cache(p, args.cache.as_deref())?
        }
        (None, Some(endpoint)) => {
            let p = HttpProvider::new(HttpSpec {
                endpoint: endpoint.clone(),
                api_key_env: args.api_key_env.clone(),
                max_in_flight: args.max_in_flight,
                ..HttpSpec::default()
            })
            .map_err(provider_err)?;
            wrap_cache(p, args.cache.as_deref())?
        }
        _ => return Err(CliError::Input("llm runs need exactly one of --replay or --endpoint".into())),
    };
    Ok(LlmSetup {
        provider,
        params: DecodingParams {
            model: args.model.clone(),
            temperature: args.temperature,
            role_encoding: match args.role_encoding {
                Encoding::Metadata => RoleEncoding::Metadata,
                Encoding::Prepended => RoleEncoding::PrependedText,
            },
            ..DecodingParams::default()
        },
        shots: shot_pool(&example_boards, &rows),
        translations: translation_pool(&rows)?,
    })
}

fn wrap_cache<P: ChatProvider + 'static>(p: P, dir: Option<&Path>) -> Result<Box<dyn ChatProvider>, CliError> {
    Ok(match dir {
        Some(d) => Box::new(CachingProvider::with_dir(p, d).map_err(provider_err)?),
        None => Box::new(p),
    })
}

fn llm_candidates(args: &RunArgs, setup: &LlmSetup, board: &LoadedBoard) -> Result<Vec<RawCandidate>, CliError> {
    let mut rng = rng_from(derive_seed_str(args.seed, &format!("prompt/{}", board.id)));
    let bundle = build_generation_prompt(&board.board, &board.id, args.mode, args.format, &setup.shots, &mut rng)
        .map_err(provider_err)?;
    let context = |purpose, index| RequestContext { board_id: board.id.clone(), purpose, index };
    let questions =
        propose_questions(&*setup.provider, &bundle, &setup.params, args.n, context(Purpose::Generation, 0))
            .map_err(provider_err)?;
    let translate_seed = derive_seed_str(args.seed, &format!("translate/{}", board.id));
    questions
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            if q.is_empty() {
                return Ok(RawCandidate { question: Some(String::new()), program: Err(String::new()) });
            }
            let mut rng = sub_rng(translate_seed, i as u64);
            let shots = sample_translation_examples(&setup.translations, &board.id, &mut rng).map_err(provider_err)?;
            let tb = build_translation_prompt(q, &shots, board.board.config()).map_err(provider_err)?;
            let t = translate_question(
                &*setup.provider,
                &tb,
                &setup.params,
                args.translation_samples,
                context(Purpose::Translation, i),
            )
            .map_err(provider_err)?;
            Ok(RawCandidate {
                question: Some(q.clone()),
                program: t.program.ok_or_else(|| t.raw.first().cloned().unwrap_or_default()),
            })
        })
        .collect()
}

fn bucket_file(args: &RunArgs, board_id: &str, records: &[CandidateRecord]) -> Result<BucketFile, CliError> {
    let seed = derive_seed_str(args.seed, &format!("buckets/{board_id}"));
    let mut estimates = Vec::new();
    let mut skipped_k = Vec::new();
    for &k in &args.k {
        if k > records.len() {
            skipped_k.push(k);
            continue;
        }
        let est = bucketize_estimate(records, k, &mut sub_rng(seed, k as u64)).map_err(input)?;
        estimates.push(KEstimate {
            k,
            n_buckets: est.buckets.len(),
            all_invalid_buckets: est.all_invalid_buckets,
            mean_eig: est.mean_eig,
            mean_eig_valid_only: est.mean_eig_valid_only,
            bucket_eig: est.buckets.iter().map(|b| b.eig_bits).collect(),
            bucket_all_invalid: est.buckets.iter().map(|b| b.all_invalid).collect(),
            best_index: est.buckets.iter().map(|b| b.best.map(|p| records[p].index)).collect(),
        });
    }
    Ok(BucketFile { board_id: board_id.to_string(), n: records.len(), estimates, skipped_k })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json");
    text.push('\n');
    write(path, text)
}

fn write_board_outputs(
    out: &Path,
    args: &RunArgs,
    board: &LoadedBoard,
    records: &[CandidateRecord],
) -> Result<(), CliError> {
    let mut lines = String::new();
    for r in records {
        lines.push_str(&serde_json::to_string(r).expect("json"));
        lines.push('\n');
    }
    write(&out.join("candidates").join(format!("{}.jsonl", board.id)), lines)?;
    write(
        &out.join("boards").join(format!("{}.json", board.id)),
        BoardDocument::from_board(&board.board, Some(board.id.clone())).to_json() + "\n",
    )?;
    write_json(&out.join("buckets").join(format!("{}.json", board.id)), &bucket_file(args, &board.id, records)?)
}

pub(crate) fn run(args: &RunArgs, env: Env, stdout: &mut dyn Write) -> Result<(), CliError> {
    if args.k.is_empty() || args.k.contains(&0) {
        return Err(CliError::Input("--k values must be at least 1".into()));
    }
    if args.n == 0 {
        return Err(CliError::Input("--n must be at least 1".into()));
    }
    let boards = load_boards(&args.boards)?;
    if boards.is_empty() {
        return Err(CliError::Input("no boards given".into()));
    }
    let mut inputs: Vec<InputFile> = boards
        .iter()
        .map(|b| InputFile { role: "board", path: path_string(&b.path), sha256: b.sha256.clone() })
        .collect();
    let spaces = boards
        .par_iter()
        .map(|b| enumerate_hypotheses(&b.board).map_err(|e| CliError::Input(format!("board {}: {e}", b.id))))
        .collect::<Result<Vec<_>, _>>()?;

    let label = args.label.clone().unwrap_or_else(|| default_label(args));
    let mut settings = RunSettings {
        proposal: match args.proposal {
            Proposal::Grammar => ProposalKind::Grammar,
            Proposal::Llm => ProposalKind::Llm,
        },
        label: label.clone(),
        k: args.k.clone(),
        n: args.n,
        seed: args.seed,
        sample_config: None,
        mode: None,
        format: None,
        decoding: None,
        translation_samples: None,
    };

    // Grammar runs score one sample set on every board; each board's
    // candidates come from its own config's grammar.
    let mut llm = None;
    let mut grammar_sets: Vec<(GameConfig, Vec<RawCandidate>)> = Vec::new();
    match args.proposal {
        Proposal::Grammar => {
            let cfg = SampleConfig {
                max_depth: args.max_depth,
                seed: derive_seed_str(args.seed, "grammar"),
                ..SampleConfig::default()
            };
            for b in &boards {
                let config = b.board.config();
                if grammar_sets.iter().any(|(c, _)| c == config) {
                    continue;
                }
                let (g, text) = load_grammar(args.grammar.as_deref(), config)?;
                if let (Some(path), true) = (&args.grammar, grammar_sets.is_empty()) {
                    inputs.push(InputFile {
                        role: "grammar",
                        path: path_string(path),
                        sha256: sha256_hex(text.as_bytes()),
                    });
                }
                let programs = sample_batch(&g, &cfg, args.n).map_err(input)?;
                grammar_sets.push((config.clone(), programs.into_iter().map(RawCandidate::program).collect()));
            }
            settings.sample_config = Some(cfg);
        }
        Proposal::Llm => {
            let setup = llm_setup(args, &mut inputs)?;
            settings.mode = Some(args.mode.name());
            settings.format = Some(args.format.name());
            settings.decoding = Some(setup.params.clone());
            settings.translation_samples = Some(args.translation_samples);
            llm = Some(setup);
        }
    }

    let mut manifest = Manifest {
        format_version: 1,
        command: "run",
        status: "running",
        error: None,
        created: env.now,
        config: settings,
        provider: llm.as_ref().map(|s| s.provider.info()),
        inputs,
        boards: boards.iter().zip(&spaces).map(|(b, s)| BoardEntry { id: b.id.clone(), hypotheses: s.len() }).collect(),
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;

    let proposal_name = label.as_str();
    let results: Vec<Result<usize, CliError>> = boards
        .par_iter()
        .zip(&spaces)
        .map(|(b, space)| {
            let raw = match &llm {
                Some(setup) => llm_candidates(args, setup, b)?,
                None => grammar_sets
                    .iter()
                    .find(|(c, _)| c == b.board.config())
                    .map(|(_, r)| r.clone())
                    .expect("sampled per config"),
            };
            let records = score_candidates(&raw, space, proposal_name, &b.id);
            write_board_outputs(&args.out, args, b, &records)?;
            Ok(records.iter().filter(|r| r.valid).count())
        })
        .collect();

    let failure = results.iter().find_map(|r| r.as_ref().err());
    if let Some(err) = failure {
        manifest.status = "failed";
        manifest.error = Some(err.to_string());
        write_json(&args.out.join("manifest.json"), &manifest)?;
        return Err(match err {
            CliError::Input(m) => CliError::Input(m.clone()),
            CliError::Provider(m) => CliError::Provider(m.clone()),
            CliError::Other(m) => CliError::Other(m.clone()),
        });
    }
    manifest.status = "complete";
    write_json(&args.out.join("manifest.json"), &manifest)?;

    let mut summary = String::new();
    for ((b, s), r) in boards.iter().zip(&spaces).zip(&results) {
        let valid = r.as_ref().copied().unwrap_or(0);
        summary.push_str(&format!("{}\t{} hypotheses\t{}/{} valid\n", b.id, s.len(), valid, args.n));
    }
    summary.push_str(&format!("wrote {}\n", args.out.display()));
    stdout.write_all(summary.as_bytes()).map_err(|e| CliError::Other(e.to_string()))
}
