//! Battleship question asking as Bayesian program search.
//!
//! The crate is organised bottom-up:
//!
//! * [`board`] holds game configuration, partial and complete boards, and
//!   exhaustive enumeration of the boards consistent with what has been
//!   revealed.
//! * [`dsl`] parses, typechecks and evaluates question programs such as
//!   `(topleft (coloredTiles Red))`.
//! * [`eig`] scores a question by its exact expected information gain over a
//!   hypothesis space.
//! * [`pcfg`] samples question programs from a uniform-weight grammar.
//! * [`llm`] builds question-generation and translation prompts and talks to
//!   chat-completion providers (live, replayed, or cached).
//! * [`lips`] scores sampled candidates and picks the best of `k`, including
//!   the post-hoc bucketing estimator used to sweep `k`.
//! * [`analysis`] computes summary tables, Welch tests, bootstrap intervals,
//!   Q-Q data and question-type proportions.

pub mod analysis;
pub mod board;
pub mod dsl;
pub mod eig;
pub mod lips;
pub mod llm;
pub mod pcfg;
pub mod seed;

pub use board::{
    enumerate_hypotheses, is_consistent, Color, Coord, FullBoard, GameConfig, HypothesisSpace, Orientation,
    PartialBoard, ShipSpec, TileSet,
};
pub use dsl::{parse_program, typecheck, Expr, QuestionType, TypeTag, Value};
pub use eig::{answer_distribution, eig, entropy, posterior_update, AnswerDistribution, EigScore};
pub use lips::{bucketize_estimate, score_candidates, select_best, CandidateRecord};
