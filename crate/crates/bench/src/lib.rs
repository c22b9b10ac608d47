//! Shared inputs for the benchmarks in `benches/`.

use std::sync::Arc;

use lips_core::board::BoardDocument;
use lips_core::{GameConfig, PartialBoard};

/// A standard 6x6 board with a few water tiles and one purple tile revealed.
pub fn partly_revealed() -> PartialBoard {
    let doc = BoardDocument {
        id: Some("bench".into()),
        rows: 6,
        cols: 6,
        ships: BoardDocument::from_board(&PartialBoard::hidden(Arc::new(GameConfig::default())), None).ships,
        distinct_lengths: false,
        grid: ["HHHHHH", "HHWHWH", "HHPHHH", "HHHWHH", "HWHHHH", "HHHHWH"].map(String::from).to_vec(),
    };
    doc.to_board().expect("bench board is valid")
}

/// Programs of increasing cost.
pub const PROGRAMS: [&str; 4] = [
    "(size Red)",
    "(topleft (coloredTiles Blue))",
    "(== (orient Red) H)",
    "(++ (map (lambda x0 (size x0)) (set AllColors)))",
];
