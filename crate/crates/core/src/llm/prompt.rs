use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::board::{render_grid, render_textual, Coord, GameConfig, PartialBoard};
use crate::dsl::parse_program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }

    fn label(self) -> &'static str {
        match self {
            Role::System => "System",
            Role::User => "User",
            Role::Assistant => "Assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Result<ChatMessage, LlmError> {
        let content = content.into();
        if content.trim().is_empty() {
            return Err(LlmError::Prompt("message content must not be empty".into()));
        }
        Ok(ChatMessage { role, content })
    }

    fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::System, content: content.into() }
    }

    fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::User, content: content.into() }
    }

    fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: Role::Assistant, content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot,
}

impl PromptMode {
    pub fn name(self) -> &'static str {
        match self {
            PromptMode::ZeroShot => "zero_shot",
            PromptMode::FewShot => "few_shot",
        }
    }
}

impl FromStr for PromptMode {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<PromptMode, LlmError> {
        match s {
            "zero_shot" | "zero-shot" => Ok(PromptMode::ZeroShot),
            "few_shot" | "few-shot" => Ok(PromptMode::FewShot),
            _ => Err(LlmError::Config(format!("unknown prompt mode `{s}` (expected zero_shot or few_shot)"))),
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoardFormat {
    Textual,
    Grid,
    NoBoard,
}

impl BoardFormat {
    pub const ALL: [BoardFormat; 3] = [BoardFormat::Textual, BoardFormat::Grid, BoardFormat::NoBoard];

    pub fn name(self) -> &'static str {
        match self {
            BoardFormat::Textual => "textual",
            BoardFormat::Grid => "grid",
            BoardFormat::NoBoard => "no_board",
        }
    }
}

impl FromStr for BoardFormat {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<BoardFormat, LlmError> {
        match s {
            "textual" => Ok(BoardFormat::Textual),
            "grid" => Ok(BoardFormat::Grid),
            "no_board" | "no-board" | "none" => Ok(BoardFormat::NoBoard),
            "visual" => Err(LlmError::Config("the visual board format is not supported".into())),
            _ => Err(LlmError::Config(format!("unknown board format `{s}` (expected textual, grid or no_board)"))),
        }
    }
}

impl fmt::Display for BoardFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A natural-language question with its program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAExample {
    pub question: String,
    pub program: String,
}

impl QAExample {
    /// Fails unless `program` parses.
    pub fn new(question: impl Into<String>, program: impl Into<String>) -> Result<QAExample, LlmError> {
        let program = program.into();
        parse_program(&program).map_err(|e| LlmError::Prompt(format!("example program `{program}`: {e}")))?;
        Ok(QAExample { question: question.into(), program })
    }
}

/// A board of the few-shot pool with its human questions.
#[derive(Debug, Clone)]
pub struct ShotBoard {
    pub id: String,
    pub board: PartialBoard,
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptKind {
    Generation {
        mode: PromptMode,
        board_format: BoardFormat,
        /// Ids of the example boards, in prompt order.
        shots: Vec<String>,
    },
    Translation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub messages: Vec<ChatMessage>,
}

pub const EXAMPLE_BOARDS: usize = 3;
pub const QUESTIONS_PER_EXAMPLE: usize = 10;
pub const TRANSLATION_EXAMPLES: usize = 12;

const GENERATION_SYSTEM: &str = "You are a game-playing agent. Read the game instructions and examples carefully. Respond with a single question that can be answered with one word. Do not include any other explanation or prose.";
const GENERATION_TASK: &str = "You will be given a partially-revealed game board. Your task is to ask a single question that will help you gain information about the position of the remaining hidden ships on the board. You can ask any question, but it must be answerable with a single word answer.";
const TRANSLATION_TASK: &str = "Your task is to translate each of the user's questions into a query program.";
const TEXTUAL_FORMAT: &str = "The board is represented as a textual description.";
const EXAMPLES_INTRO: &str = "Here are some examples of questions from other agents about different boards.";
const TURN: &str = "Now, it's your turn. Here is your board:";
/// Stands in for the textual rendering of a board with nothing revealed,
/// which would otherwise be an empty message.
const NOTHING_REVEALED: &str = "No tiles have been revealed.";

fn join_list(items: &[String], conj: &str) -> String {
    match items {
        [] => String::new(),
        [a] => a.clone(),
        [a, b] => format!("{a} {conj} {b}"),
        [rest @ .., last] => format!("{}, {conj} {last}", rest.join(", ")),
    }
}

/// The game-rules paragraph shared by both prompts, worded for `config`.
pub fn game_instructions(config: &GameConfig) -> String {
    let ships: Vec<String> = config.ships.iter().map(|s| s.id.name().to_string()).collect();
    let count = match ships.len() {
        0 => "no ships".to_string(),
        1 => "one ship".to_string(),
        2 => "two ships".to_string(),
        _ => "three ships".to_string(),
    };
    let verb = if ships.len() == 1 { "is" } else { "are" };
    let mut lengths: Vec<usize> = config.ships.iter().flat_map(|s| s.lengths.iter().copied()).collect();
    lengths.sort_unstable();
    lengths.dedup();
    let lengths: Vec<String> = lengths.iter().map(usize::to_string).collect();
    let rows: Vec<String> = (1..=config.rows).map(|r| r.to_string()).collect();
    let cols: Vec<String> = (1..=config.cols).map(|c| Coord::new(1, c as u8).col_letter().to_string()).collect();
    let example = Coord::new(config.rows.min(2) as u8, config.cols.min(3) as u8);
    format!(
        "You are playing the board game Battleship. There {verb} {count} on the board: {}. \
Ships are oriented either horizontally or vertically and can be {} tiles in length. \
The board is a {}x{} grid, with numbered rows {} and lettered columns {}. \
Coordinates are specified as a row, column pair. For example, {} is the tile in row {}, column {}.",
        join_list(&ships, "and"),
        join_list(&lengths, "or"),
        config.rows,
        config.cols,
        rows.join(", "),
        cols.join(", "),
        example.dashed_label(),
        example.row,
        example.col_letter(),
    )
}

fn grid_legend(config: &GameConfig) -> String {
    let mut out = String::from("The board is represented as a grid with the following symbols:\n\nH: Hidden\nW: Water");
    for s in &config.ships {
        out.push_str(&format!("\n{}: {} ship", s.id.symbol(), s.id.name()));
    }
    out
}

/// The board as it appears in a prompt, without a trailing newline.
pub fn render_for_prompt(board: &PartialBoard, format: BoardFormat) -> Result<Option<String>, LlmError> {
    let text = match format {
        BoardFormat::NoBoard => return Ok(None),
        BoardFormat::Grid => render_grid(board).map_err(|e| LlmError::Prompt(e.to_string()))?,
        BoardFormat::Textual => render_textual(board),
    };
    let text = text.trim_end_matches('\n');
    Ok(Some(if text.is_empty() { NOTHING_REVEALED.to_string() } else { text.to_string() }))
}

/// Question-generation prompt for `target`.
///
/// In few-shot mode, three boards other than `target_id` are drawn from
/// `pool` without replacement, and ten of each board's questions are drawn
/// without replacement. Boards with fewer than ten questions are not
/// eligible.
pub fn build_generation_prompt<R: Rng + ?Sized>(
    target: &PartialBoard,
    target_id: &str,
    mode: PromptMode,
    format: BoardFormat,
    pool: &[ShotBoard],
    rng: &mut R,
) -> Result<PromptBundle, LlmError> {
    let config = target.config();
    let mut messages = vec![
        ChatMessage::system(GENERATION_SYSTEM),
        ChatMessage::user(format!("{}\n\n{GENERATION_TASK}", game_instructions(config))),
    ];
    match format {
        BoardFormat::Textual => messages.push(ChatMessage::user(TEXTUAL_FORMAT)),
        BoardFormat::Grid => messages.push(ChatMessage::user(grid_legend(config))),
        BoardFormat::NoBoard => {}
    }
    let mut shots = Vec::new();
    if mode == PromptMode::FewShot {
        let eligible: Vec<&ShotBoard> =
            pool.iter().filter(|s| s.id != target_id && s.questions.len() >= QUESTIONS_PER_EXAMPLE).collect();
        if eligible.len() < EXAMPLE_BOARDS {
            return Err(LlmError::Prompt(format!(
                "few-shot prompts need {EXAMPLE_BOARDS} other boards with at least {QUESTIONS_PER_EXAMPLE} questions; the pool has {}",
                eligible.len()
            )));
        }
        messages.push(ChatMessage::user(EXAMPLES_INTRO));
        for shot in eligible.choose_multiple(rng, EXAMPLE_BOARDS) {
            if let Some(text) = render_for_prompt(&shot.board, format)? {
                messages.push(ChatMessage::user(text));
            }
            let mut order: Vec<usize> = (0..shot.questions.len()).collect();
            order.shuffle(rng);
            for &i in &order[..QUESTIONS_PER_EXAMPLE] {
                messages.push(ChatMessage::new(Role::Assistant, shot.questions[i].trim())?);
            }
            shots.push(shot.id.clone());
        }
    }
    if let Some(text) = render_for_prompt(target, format)? {
        messages.push(ChatMessage::user(TURN));
        messages.push(ChatMessage::user(text));
    }
    Ok(PromptBundle { kind: PromptKind::Generation { mode, board_format: format, shots }, messages })
}

/// Draws the translation examples: twelve distinct human (question,
/// program) pairs from boards other than `exclude_board`.
pub fn sample_translation_examples<R: Rng + ?Sized>(
    pool: &[(String, QAExample)],
    exclude_board: &str,
    rng: &mut R,
) -> Result<Vec<QAExample>, LlmError> {
    let eligible: Vec<&QAExample> = pool.iter().filter(|(b, _)| b != exclude_board).map(|(_, e)| e).collect();
    if eligible.len() < TRANSLATION_EXAMPLES {
        return Err(LlmError::Prompt(format!(
            "translation prompts need {TRANSLATION_EXAMPLES} examples from other boards; the pool has {}",
            eligible.len()
        )));
    }
    Ok(eligible.choose_multiple(rng, TRANSLATION_EXAMPLES).map(|e| (*e).clone()).collect())
}

/// Translation prompt: instructions, twelve worked examples, then
/// `question`.
pub fn build_translation_prompt(
    question: &str,
    examples: &[QAExample],
    config: &GameConfig,
) -> Result<PromptBundle, LlmError> {
    if examples.len() != TRANSLATION_EXAMPLES {
        return Err(LlmError::Prompt(format!(
            "translation prompts take exactly {TRANSLATION_EXAMPLES} examples, got {}",
            examples.len()
        )));
    }
    let mut messages = vec![ChatMessage::system(format!("{}\n\n{TRANSLATION_TASK}", game_instructions(config)))];
    for ex in examples {
        messages.push(ChatMessage::new(Role::User, ex.question.trim())?);
        messages.push(ChatMessage::assistant(ex.program.trim()));
    }
    messages.push(ChatMessage::new(Role::User, question.trim())?);
    Ok(PromptBundle { kind: PromptKind::Translation, messages })
}

/// Single-string rendering for completion-style models: each message as
/// `<Role>: <content>`, separated by blank lines, ending with an open
/// `Assistant:` turn.
pub fn encode_prepended(messages: &[ChatMessage]) -> String {
    let mut out = String::new();
    for m in messages {
        out.push_str(m.role.label());
        out.push_str(": ");
        out.push_str(m.content.trim_end_matches('\n'));
        out.push_str("\n\n");
    }
    out.push_str("Assistant:");
    out
}
