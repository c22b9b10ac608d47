//! Boards, game configuration and hypothesis enumeration.

mod document;
mod enumerate;
mod render;
mod tileset;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use document::{parse_board, BoardDocument, ShipDocument};
pub use enumerate::{enumerate_hypotheses, HypothesisSpace};
pub use render::{render_grid, render_textual};
pub use tileset::TileSet;

/// Largest board (in tiles) a [`GameConfig`] may describe.
pub const MAX_TILES: usize = TileSet::CAPACITY;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoardError {
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
    #[error("inconsistent board: no ship placement matches the revealed tiles")]
    Inconsistent,
    #[error("bad tile symbol {symbol:?} at row {row}, column {col}")]
    BadSymbol { symbol: char, row: usize, col: usize },
    #[error("row {row} has {found} tiles, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
    #[error("unrenderable config: {rows}x{cols} exceeds 9 rows or 26 columns")]
    Unrenderable { rows: usize, cols: usize },
    #[error("bad coordinate {0:?}")]
    BadCoord(String),
    #[error("malformed board document: {0}")]
    Document(String),
}

/// Colour of a tile: water or one of the three ships.
///
/// The declaration order is the canonical order used for colour sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Water,
    Red,
    Blue,
    Purple,
}

impl Color {
    pub const ALL: [Color; 4] = [Color::Water, Color::Red, Color::Blue, Color::Purple];
    pub const SHIPS: [Color; 3] = [Color::Red, Color::Blue, Color::Purple];

    pub fn name(self) -> &'static str {
        match self {
            Color::Water => "Water",
            Color::Red => "Red",
            Color::Blue => "Blue",
            Color::Purple => "Purple",
        }
    }

    /// Grid symbol (`W`, `R`, `B`, `P`).
    pub fn symbol(self) -> char {
        match self {
            Color::Water => 'W',
            Color::Red => 'R',
            Color::Blue => 'B',
            Color::Purple => 'P',
        }
    }

    pub fn from_symbol(c: char) -> Option<Color> {
        match c {
            'W' => Some(Color::Water),
            'R' => Some(Color::Red),
            'B' => Some(Color::Blue),
            'P' => Some(Color::Purple),
            _ => None,
        }
    }

    pub fn from_name(s: &str) -> Option<Color> {
        Color::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn is_ship(self) -> bool {
        self != Color::Water
    }

    pub(crate) fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl Orientation {
    /// DSL literal (`H` / `V`).
    pub fn symbol(self) -> &'static str {
        match self {
            Orientation::Horizontal => "H",
            Orientation::Vertical => "V",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A tile position, 1-based. Labels are `<row><column letter>`, e.g. `2C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub row: u8,
    pub col: u8,
}

impl Coord {
    pub fn new(row: u8, col: u8) -> Coord {
        Coord { row, col }
    }

    pub fn col_letter(self) -> char {
        (b'A' + self.col - 1) as char
    }

    /// `2-C` style label used in textual board descriptions.
    pub fn dashed_label(self) -> String {
        format!("{}-{}", self.row, self.col_letter())
    }

    pub fn in_bounds(self, config: &GameConfig) -> bool {
        self.row >= 1 && self.col >= 1 && usize::from(self.row) <= config.rows && usize::from(self.col) <= config.cols
    }

    /// Row-major tile index. Caller guarantees the coordinate is in bounds.
    pub fn index(self, cols: usize) -> usize {
        (usize::from(self.row) - 1) * cols + usize::from(self.col) - 1
    }

    pub fn from_index(index: usize, cols: usize) -> Coord {
        Coord { row: (index / cols + 1) as u8, col: (index % cols + 1) as u8 }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.row, self.col_letter())
    }
}

impl FromStr for Coord {
    type Err = BoardError;

    fn from_str(s: &str) -> Result<Coord, BoardError> {
        let bad = || BoardError::BadCoord(s.to_string());
        let split = s.find(|c: char| !c.is_ascii_digit()).ok_or_else(bad)?;
        let (digits, letter) = s.split_at(split);
        if digits.is_empty() || digits.starts_with('0') || letter.len() != 1 {
            return Err(bad());
        }
        let letter = letter.as_bytes()[0];
        if !letter.is_ascii_uppercase() {
            return Err(bad());
        }
        let row: u8 = digits.parse().map_err(|_| bad())?;
        Ok(Coord { row, col: letter - b'A' + 1 })
    }
}

impl Serialize for Coord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Coord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Coord, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One ship of the game and the lengths it may take.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShipSpec {
    pub id: Color,
    pub lengths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameConfig {
    pub rows: usize,
    pub cols: usize,
    pub ships: Vec<ShipSpec>,
    /// When set, no two ships of a hypothesis share a length.
    #[serde(default)]
    pub distinct_lengths: bool,
}

impl Default for GameConfig {
    /// The standard game: 6x6, Red/Blue/Purple, each of length 2, 3 or 4.
    fn default() -> GameConfig {
        GameConfig {
            rows: 6,
            cols: 6,
            ships: Color::SHIPS.into_iter().map(|id| ShipSpec { id, lengths: vec![2, 3, 4] }).collect(),
            distinct_lengths: false,
        }
    }
}

impl GameConfig {
    pub fn new(rows: usize, cols: usize, ships: Vec<ShipSpec>) -> Result<GameConfig, BoardError> {
        let config = GameConfig { rows, cols, ships, distinct_lengths: false };
        config.validate()?;
        Ok(config)
    }

    /// Single-ship config, handy for small exhaustive checks.
    pub fn single_ship(rows: usize, cols: usize, ship: Color, lengths: &[usize]) -> Result<GameConfig, BoardError> {
        GameConfig::new(rows, cols, vec![ShipSpec { id: ship, lengths: lengths.to_vec() }])
    }

    pub fn with_distinct_lengths(mut self, on: bool) -> GameConfig {
        self.distinct_lengths = on;
        self
    }

    pub fn validate(&self) -> Result<(), BoardError> {
        let bad = |m: String| Err(BoardError::InvalidConfig(m));
        if self.rows < 1 || self.cols < 1 {
            return bad(format!("board must be at least 1x1, got {}x{}", self.rows, self.cols));
        }
        if self.cols > 26 {
            return bad(format!("at most 26 columns are supported, got {}", self.cols));
        }
        if self.rows > usize::from(u8::MAX) || self.rows * self.cols > MAX_TILES {
            return bad(format!("at most {MAX_TILES} tiles are supported, got {}x{}", self.rows, self.cols));
        }
        if self.ships.len() > Color::SHIPS.len() {
            return bad(format!("at most {} ships are supported", Color::SHIPS.len()));
        }
        let longest = self.rows.max(self.cols);
        for (i, ship) in self.ships.iter().enumerate() {
            if !ship.id.is_ship() {
                return bad("Water is not a ship id".into());
            }
            if self.ships[..i].iter().any(|s| s.id == ship.id) {
                return bad(format!("duplicate ship id {}", ship.id));
            }
            if ship.lengths.is_empty() {
                return bad(format!("ship {} has no allowed lengths", ship.id));
            }
            if let Some(&l) = ship.lengths.iter().find(|&&l| l < 2 || l > longest) {
                return bad(format!("ship {} length {l} outside 2..={longest}", ship.id));
            }
        }
        Ok(())
    }

    pub fn tile_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn ship(&self, id: Color) -> Option<&ShipSpec> {
        self.ships.iter().find(|s| s.id == id)
    }

    pub fn has_ship(&self, id: Color) -> bool {
        self.ship(id).is_some()
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.tile_count()).map(|i| Coord::from_index(i, self.cols))
    }

    pub fn all_tiles(&self) -> TileSet {
        TileSet::full(self.tile_count())
    }
}

/// Where one ship lies on a complete board.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    pub ship: Color,
    pub origin: Coord,
    pub orientation: Orientation,
    pub length: u8,
}

impl Placement {
    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.length).map(move |i| match self.orientation {
            Orientation::Horizontal => Coord::new(self.origin.row, self.origin.col + i),
            Orientation::Vertical => Coord::new(self.origin.row + i, self.origin.col),
        })
    }

    pub fn contains(&self, c: Coord) -> bool {
        let (r0, c0) = (self.origin.row, self.origin.col);
        match self.orientation {
            Orientation::Horizontal => c.row == r0 && c.col >= c0 && c.col < c0 + self.length,
            Orientation::Vertical => c.col == c0 && c.row >= r0 && c.row < r0 + self.length,
        }
    }

    pub fn tiles(&self, cols: usize) -> TileSet {
        let mut set = TileSet::empty();
        for c in self.coords() {
            set.insert(c.index(cols));
        }
        set
    }

    fn fits(&self, config: &GameConfig) -> bool {
        let len = usize::from(self.length);
        let (r, c) = (usize::from(self.origin.row), usize::from(self.origin.col));
        match self.orientation {
            Orientation::Horizontal => r <= config.rows && c + len - 1 <= config.cols,
            Orientation::Vertical => c <= config.cols && r + len - 1 <= config.rows,
        }
    }
}

/// The observed state: each tile hidden (`None`) or revealed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialBoard {
    config: Arc<GameConfig>,
    tiles: Vec<Option<Color>>,
}

impl PartialBoard {
    /// Builds a board from row-major tiles, checking dimensions, that revealed
    /// ship colours belong to the config, and that at least one complete
    /// board is consistent with it.
    pub fn new(config: Arc<GameConfig>, tiles: Vec<Option<Color>>) -> Result<PartialBoard, BoardError> {
        let board = PartialBoard::unchecked(config, tiles)?;
        if !enumerate::has_consistent_board(&board) {
            return Err(BoardError::Inconsistent);
        }
        Ok(board)
    }

    /// Like [`PartialBoard::new`] but without the consistency search.
    pub fn unchecked(config: Arc<GameConfig>, tiles: Vec<Option<Color>>) -> Result<PartialBoard, BoardError> {
        config.validate()?;
        if tiles.len() != config.tile_count() {
            return Err(BoardError::DimensionMismatch(format!(
                "{} tiles for a {}x{} board",
                tiles.len(),
                config.rows,
                config.cols
            )));
        }
        for (i, t) in tiles.iter().enumerate() {
            if let Some(c) = t {
                if c.is_ship() && !config.has_ship(*c) {
                    let at = Coord::from_index(i, config.cols);
                    return Err(BoardError::ConfigMismatch(format!(
                        "tile {at} shows {c}, which is not a ship of this game"
                    )));
                }
            }
        }
        Ok(PartialBoard { config, tiles })
    }

    pub fn hidden(config: Arc<GameConfig>) -> PartialBoard {
        let n = config.tile_count();
        PartialBoard { config, tiles: vec![None; n] }
    }

    /// Hidden board with the given tiles revealed.
    pub fn with_revealed(config: Arc<GameConfig>, revealed: &[(Coord, Color)]) -> Result<PartialBoard, BoardError> {
        let mut tiles = vec![None; config.tile_count()];
        for &(c, color) in revealed {
            if !c.in_bounds(&config) {
                return Err(BoardError::BadCoord(c.to_string()));
            }
            tiles[c.index(config.cols)] = Some(color);
        }
        PartialBoard::new(config, tiles)
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn config_arc(&self) -> &Arc<GameConfig> {
        &self.config
    }

    pub fn tiles(&self) -> &[Option<Color>] {
        &self.tiles
    }

    pub fn get(&self, c: Coord) -> Option<Color> {
        self.tiles[c.index(self.config.cols)]
    }

    pub fn revealed(&self) -> impl Iterator<Item = (Coord, Color)> + '_ {
        let cols = self.config.cols;
        self.tiles.iter().enumerate().filter_map(move |(i, t)| t.map(|c| (Coord::from_index(i, cols), c)))
    }

    pub fn revealed_count(&self) -> usize {
        self.tiles.iter().filter(|t| t.is_some()).count()
    }

    /// Returns a copy with one more tile revealed.
    pub fn reveal(&self, c: Coord, color: Color) -> Result<PartialBoard, BoardError> {
        if !c.in_bounds(&self.config) {
            return Err(BoardError::BadCoord(c.to_string()));
        }
        let mut tiles = self.tiles.clone();
        tiles[c.index(self.config.cols)] = Some(color);
        PartialBoard::new(self.config.clone(), tiles)
    }
}

/// A complete hypothesis: every ship placed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FullBoard {
    config: Arc<GameConfig>,
    placements: ArrayVec<Placement, 3>,
}

impl FullBoard {
    /// Validates lengths, bounds and pairwise disjointness.
    pub fn new(config: Arc<GameConfig>, placements: Vec<Placement>) -> Result<FullBoard, BoardError> {
        if placements.len() != config.ships.len() {
            return Err(BoardError::ConfigMismatch(format!(
                "{} placements for {} ships",
                placements.len(),
                config.ships.len()
            )));
        }
        let mut occupied = TileSet::empty();
        let mut ordered = ArrayVec::new();
        for spec in &config.ships {
            let p = placements
                .iter()
                .find(|p| p.ship == spec.id)
                .ok_or_else(|| BoardError::ConfigMismatch(format!("no placement for ship {}", spec.id)))?;
            if !spec.lengths.contains(&usize::from(p.length)) {
                return Err(BoardError::ConfigMismatch(format!("ship {} cannot have length {}", p.ship, p.length)));
            }
            if !p.origin.in_bounds(&config) || !p.fits(&config) {
                return Err(BoardError::ConfigMismatch(format!("ship {} does not fit on the board", p.ship)));
            }
            let tiles = p.tiles(config.cols);
            if !occupied.intersection(&tiles).is_empty() {
                return Err(BoardError::ConfigMismatch(format!("ship {} overlaps another ship", p.ship)));
            }
            occupied = occupied.union(&tiles);
            ordered.push(*p);
        }
        if config.distinct_lengths {
            for (i, a) in ordered.iter().enumerate() {
                if ordered[..i].iter().any(|b| b.length == a.length) {
                    return Err(BoardError::ConfigMismatch("ship lengths must be distinct".into()));
                }
            }
        }
        Ok(FullBoard { config, placements: ordered })
    }

    pub(crate) fn from_parts(config: Arc<GameConfig>, placements: ArrayVec<Placement, 3>) -> FullBoard {
        FullBoard { config, placements }
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    /// Placements in config ship order.
    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn placement(&self, ship: Color) -> Option<&Placement> {
        self.placements.iter().find(|p| p.ship == ship)
    }

    pub fn color_at(&self, c: Coord) -> Color {
        self.placements.iter().find(|p| p.contains(c)).map_or(Color::Water, |p| p.ship)
    }

    /// Row-major tile colours.
    pub fn tiles(&self) -> Vec<Color> {
        self.config.coords().map(|c| self.color_at(c)).collect()
    }

    pub fn ship_tiles(&self, ship: Color) -> TileSet {
        self.placement(ship).map_or_else(TileSet::empty, |p| p.tiles(self.config.cols))
    }

    pub fn water_tiles(&self) -> TileSet {
        let mut occupied = TileSet::empty();
        for p in &self.placements {
            occupied = occupied.union(&p.tiles(self.config.cols));
        }
        self.config.all_tiles().difference(&occupied)
    }

    /// The board with every tile revealed.
    pub fn to_partial(&self) -> PartialBoard {
        PartialBoard { config: self.config.clone(), tiles: self.tiles().into_iter().map(Some).collect() }
    }
}

/// True iff every revealed tile of `partial` matches `full`.
pub fn is_consistent(full: &FullBoard, partial: &PartialBoard) -> Result<bool, BoardError> {
    if full.config() != partial.config() {
        return Err(BoardError::ConfigMismatch("boards have different game configs".into()));
    }
    Ok(partial.revealed().all(|(c, color)| full.color_at(c) == color))
}
