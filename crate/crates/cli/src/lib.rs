//! The `lips` command line.
//!
//! Exit codes: 0 on success, 2 for bad input (unreadable or malformed files,
//! invalid programs, inconsistent boards), 3 when a completion provider
//! fails, 1 for anything else.

mod report;
mod run;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use lips_core::board::{render_grid, render_textual, BoardDocument, BoardError};
use lips_core::dsl::{check_question, parse_program, typecheck};
use lips_core::eig::{answer_distribution, eig};
use lips_core::llm::{
    build_generation_prompt, build_translation_prompt, encode_prepended, sample_translation_examples, BoardFormat,
    PromptMode, QAExample, ShotBoard,
};
use lips_core::pcfg::{battleship_grammar, sample_batch, Grammar, SampleConfig};
use lips_core::seed::{derive_seed_str, rng_from};
use lips_core::{enumerate_hypotheses, GameConfig, PartialBoard};

pub use report::ReportArgs;
pub use run::RunArgs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("provider: {0}")]
    Provider(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Provider(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Other(format!("{}: {e}", path.display()))
}

/// Process-level inputs that are not command-line flags.
#[derive(Debug, Clone, Copy)]
pub struct Env {
    /// Seconds since the Unix epoch, recorded in manifests.
    pub now: u64,
}

impl Env {
    /// Uses `SOURCE_DATE_EPOCH` when set, otherwise the system clock.
    pub fn from_process() -> Env {
        let now = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()).unwrap_or_else(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
        });
        Env { now }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lips", version, about = "Battleship question sampling and expected information gain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Render, validate or count the hypotheses of a board file.
    #[command(subcommand)]
    Board(BoardCommand),
    /// Parse and typecheck a program; print its canonical form and measures.
    Parse { program: String },
    /// Score a program on a board by expected information gain.
    Eig {
        board: PathBuf,
        program: String,
        #[arg(long)]
        json: bool,
    },
    /// Draw programs from the question grammar.
    Sample(SampleArgs),
    /// Print a generation or translation prompt.
    #[command(subcommand)]
    Prompt(PromptCommand),
    /// Sample and score candidate questions for each board.
    Run(RunArgs),
    /// Summarise run directories into CSV and TSV tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderFormat {
    Grid,
    Textual,
}

#[derive(Debug, Subcommand)]
pub enum BoardCommand {
    Render {
        board: PathBuf,
        #[arg(long, value_enum, default_value = "grid")]
        format: RenderFormat,
    },
    Validate {
        board: PathBuf,
    },
    Hypotheses {
        board: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grammar file; the built-in grammar for `--board`'s config otherwise.
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    /// Board whose config sets the built-in grammar's colours and locations.
    #[arg(long)]
    pub board: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub max_depth: usize,
}

#[derive(Debug, Subcommand)]
pub enum PromptCommand {
    Generate {
        #[arg(long)]
        board: PathBuf,
        #[arg(long, default_value = "few_shot")]
        mode: PromptMode,
        #[arg(long, default_value = "grid")]
        format: BoardFormat,
        /// Human question dataset (JSONL) for few-shot examples.
        #[arg(long)]
        examples: Option<PathBuf>,
        /// Boards the example questions were asked about.
        #[arg(long = "example-boards", num_args = 1..)]
        example_boards: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the messages as JSON instead of prepended text.
        #[arg(long)]
        json: bool,
    },
    Translate {
        #[arg(long)]
        question: String,
        #[arg(long)]
        examples: PathBuf,
        /// Board whose config fills in the game instructions.
        #[arg(long)]
        board: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

/// A board file together with the id it is known by.
#[derive(Debug, Clone)]
pub struct LoadedBoard {
    pub id: String,
    pub path: PathBuf,
    pub board: PartialBoard,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    String::from_utf8(read(path)?).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))
}

pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Loads one board; the id is the document's `id`, or the file stem.
pub fn load_board(path: &Path) -> Result<LoadedBoard, CliError> {
    let bytes = read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let doc = BoardDocument::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let board = doc.to_board().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let id = doc
        .id
        .clone()
        .unwrap_or_else(|| path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()));
    Ok(LoadedBoard { id, path: path.to_path_buf(), board, sha256: sha256_hex(&bytes) })
}

/// Loads board files and directories of `*.json` boards (in name order).
/// Ids must be unique.
pub fn load_boards(paths: &[PathBuf]) -> Result<Vec<LoadedBoard>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    let boards: Vec<LoadedBoard> = files.iter().map(|f| load_board(f)).collect::<Result<_, _>>()?;
    let mut seen = BTreeMap::new();
    for b in &boards {
        if let Some(prev) = seen.insert(b.id.clone(), &b.path) {
            return Err(CliError::Input(format!(
                "board id {:?} appears in both {} and {}",
                b.id,
                prev.display(),
                b.path.display()
            )));
        }
    }
    Ok(boards)
}

/// One line of a human question dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanRow {
    pub board_id: String,
    pub question: String,
    pub program: String,
}

pub fn load_human(path: &Path) -> Result<Vec<HumanRow>, CliError> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub(crate) fn translation_pool(rows: &[HumanRow]) -> Result<Vec<(String, QAExample)>, CliError> {
    rows.iter()
        .map(|r| Ok((r.board_id.clone(), QAExample::new(r.question.clone(), r.program.clone()).map_err(input)?)))
        .collect()
}

pub(crate) fn shot_pool(boards: &[LoadedBoard], rows: &[HumanRow]) -> Vec<ShotBoard> {
    boards
        .iter()
        .map(|b| ShotBoard {
            id: b.id.clone(),
            board: b.board.clone(),
            questions: rows.iter().filter(|r| r.board_id == b.id).map(|r| r.question.clone()).collect(),
        })
        .filter(|s| !s.questions.is_empty())
        .collect()
}

pub(crate) fn load_grammar(path: Option<&Path>, config: &GameConfig) -> Result<(Grammar, String), CliError> {
    match path {
        Some(p) => {
            let text = read_text(p)?;
            let g = Grammar::from_text(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            Ok((g, text))
        }
        None => {
            let g = battleship_grammar(config);
            let text = g.to_text();
            Ok((g, text))
        }
    }
}

/// Runs one command, writing its report to `out`.
pub fn execute(cli: Cli, env: Env, out: &mut dyn Write) -> Result<(), CliError> {
    let w = |out: &mut dyn Write, s: &str| out.write_all(s.as_bytes()).map_err(|e| CliError::Other(e.to_string()));
    match cli.command {
        Command::Board(cmd) => board_command(cmd, out),
        Command::Parse { program } => {
            let e = parse_program(&program).map_err(input)?;
            let ty = typecheck(&e).map_err(input)?;
            let question = check_question(&e).map_or("none".to_string(), |q| q.name().to_string());
            w(out, &format!("{e}\ntype\t{ty}\nquestion_type\t{question}\ndepth\t{}\nsize\t{}\n", e.depth(), e.size()))
        }
        Command::Eig { board, program, json } => {
            let b = load_board(&board)?;
            let space = enumerate_hypotheses(&b.board).map_err(input)?;
            let e = parse_program(&program).map_err(input)?;
            let score = eig(&e, &space).map_err(input)?;
            let dist = answer_distribution(&e, &space).map_err(input)?;
            if json {
                let report = serde_json::json!({
                    "board_id": b.id,
                    "program": e.to_string(),
                    "bits": score.bits,
                    "prior_entropy": score.prior_entropy,
                    "hypotheses": space.len(),
                    "answers": dist.iter().map(|(y, p)| serde_json::json!({"answer": y.to_string(), "probability": p})).collect::<Vec<_>>(),
                });
                w(out, &format!("{}\n", serde_json::to_string_pretty(&report).expect("json")))
            } else {
                let mut s = format!(
                    "eig\t{:.6}\nhypotheses\t{}\nanswers\t{}\n",
                    score.bits,
                    space.len(),
                    score.answer_support_size
                );
                for (y, p) in dist.iter() {
                    s.push_str(&format!("{y}\t{p:.6}\n"));
                }
                w(out, &s)
            }
        }
        Command::Sample(args) => {
            let config = match &args.board {
                Some(p) => load_board(p)?.board.config().clone(),
                None => GameConfig::default(),
            };
            let (g, _) = load_grammar(args.grammar.as_deref(), &config)?;
            let cfg = SampleConfig { max_depth: args.max_depth, seed: args.seed, ..SampleConfig::default() };
            let programs = sample_batch(&g, &cfg, args.n).map_err(input)?;
            let mut s = String::new();
            for p in programs {
                s.push_str(&format!("{p}\n"));
            }
            w(out, &s)
        }
        Command::Prompt(cmd) => prompt_command(cmd, out),
        Command::Run(args) => run::run(&args, env, out),
        Command::Report(args) => report::report(&args, out),
    }
}

fn board_command(cmd: BoardCommand, out: &mut dyn Write) -> Result<(), CliError> {
    let text = match cmd {
        BoardCommand::Render { board, format } => {
            let b = load_board(&board)?;
            match format {
                RenderFormat::Grid => render_grid(&b.board).map_err(input)?,
                RenderFormat::Textual => render_textual(&b.board),
            }
        }
        BoardCommand::Validate { board } => {
            let b = load_board(&board)?;
            let space = enumerate_hypotheses(&b.board).map_err(|e| match e {
                BoardError::Inconsistent => {
                    CliError::Input(format!("{}: no complete board matches the revealed tiles", board.display()))
                }
                other => input(other),
            })?;
            format!("ok\t{}\t{} hypotheses\n", b.id, space.len())
        }
        BoardCommand::Hypotheses { board } => {
            let b = load_board(&board)?;
            let n = match enumerate_hypotheses(&b.board) {
                Ok(space) => space.len(),
                Err(BoardError::Inconsistent) => 0,
                Err(e) => return Err(input(e)),
            };
            format!("{n}\n")
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| CliError::Other(e.to_string()))
}

fn render_messages(messages: &[lips_core::llm::ChatMessage], json: bool) -> String {
    if json {
        let arr: Vec<_> =
            messages.iter().map(|m| serde_json::json!({"role": m.role.name(), "content": m.content})).collect();
        format!("{}\n", serde_json::to_string_pretty(&arr).expect("json"))
    } else {
        format!("{}\n", encode_prepended(messages))
    }
}

fn prompt_command(cmd: PromptCommand, out: &mut dyn Write) -> Result<(), CliError> {
    let text = match cmd {
        PromptCommand::Generate { board, mode, format, examples, example_boards, seed, json } => {
            let target = load_board(&board)?;
            let rows = match &examples {
                Some(p) => load_human(p)?,
                None => Vec::new(),
            };
            let pool = shot_pool(&load_boards(&example_boards)?, &rows);
            let mut rng = rng_from(derive_seed_str(seed, &format!("prompt/{}", target.id)));
            let bundle =
                build_generation_prompt(&target.board, &target.id, mode, format, &pool, &mut rng).map_err(input)?;
            render_messages(&bundle.messages, json)
        }
        PromptCommand::Translate { question, examples, board, seed, json } => {
            let target = load_board(&board)?;
            let pool = translation_pool(&load_human(&examples)?)?;
            let mut rng = rng_from(derive_seed_str(seed, &format!("translate/{}", target.id)));
            let shots = sample_translation_examples(&pool, &target.id, &mut rng).map_err(input)?;
            let bundle = build_translation_prompt(&question, &shots, target.board.config()).map_err(input)?;
            render_messages(&bundle.messages, json)
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| CliError::Other(e.to_string()))
}
