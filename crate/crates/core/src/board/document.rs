use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BoardError, Color, GameConfig, PartialBoard, ShipSpec};

/// On-disk board: `{"rows": 6, "cols": 6, "ships": [...], "grid": ["HHHHHH", ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoardDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub rows: usize,
    pub cols: usize,
    pub ships: Vec<ShipDocument>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub distinct_lengths: bool,
    pub grid: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShipDocument {
    pub id: String,
    pub lengths: Vec<usize>,
}

impl BoardDocument {
    pub fn from_board(board: &PartialBoard, id: Option<String>) -> BoardDocument {
        let config = board.config();
        let grid = board
            .tiles()
            .chunks(config.cols)
            .map(|row| row.iter().map(|t| t.map_or('H', Color::symbol)).collect())
            .collect();
        BoardDocument {
            id,
            rows: config.rows,
            cols: config.cols,
            ships: config
                .ships
                .iter()
                .map(|s| ShipDocument { id: s.id.name().to_string(), lengths: s.lengths.clone() })
                .collect(),
            distinct_lengths: config.distinct_lengths,
            grid,
        }
    }

    pub fn to_board(&self) -> Result<PartialBoard, BoardError> {
        let ships = self
            .ships
            .iter()
            .map(|s| match Color::from_name(&s.id) {
                Some(id) if id.is_ship() => Ok(ShipSpec { id, lengths: s.lengths.clone() }),
                _ => Err(BoardError::InvalidConfig(format!("unknown ship id {:?}", s.id))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let config = GameConfig { rows: self.rows, cols: self.cols, ships, distinct_lengths: self.distinct_lengths };
        config.validate()?;
        if self.grid.len() != self.rows {
            return Err(BoardError::DimensionMismatch(format!(
                "grid has {} rows, config says {}",
                self.grid.len(),
                self.rows
            )));
        }
        let mut tiles = Vec::with_capacity(config.tile_count());
        for (r, line) in self.grid.iter().enumerate() {
            let found = line.chars().count();
            if found != self.cols {
                return Err(BoardError::RaggedRow { row: r + 1, expected: self.cols, found });
            }
            for (c, symbol) in line.chars().enumerate() {
                let tile = match symbol {
                    'H' => None,
                    other => Some(Color::from_symbol(other).ok_or(BoardError::BadSymbol {
                        symbol: other,
                        row: r + 1,
                        col: c + 1,
                    })?),
                };
                tiles.push(tile);
            }
        }
        PartialBoard::new(Arc::new(config), tiles)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("board documents always serialize")
    }
}

/// Parses a board document (JSON text).
pub fn parse_board(text: &str) -> Result<PartialBoard, BoardError> {
    parse_board_document(text)?.to_board()
}

pub(crate) fn parse_board_document(text: &str) -> Result<BoardDocument, BoardError> {
    serde_json::from_str(text).map_err(|e| BoardError::Document(e.to_string()))
}

impl BoardDocument {
    pub fn parse(text: &str) -> Result<BoardDocument, BoardError> {
        parse_board_document(text)
    }
}
