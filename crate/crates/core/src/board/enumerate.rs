use std::sync::Arc;

use arrayvec::ArrayVec;
use rayon::prelude::*;

use super::{BoardError, Coord, FullBoard, GameConfig, Orientation, PartialBoard, Placement, TileSet};

/// The boards consistent with a partial board, with prior weights.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSpace {
    config: Arc<GameConfig>,
    boards: Vec<FullBoard>,
    weights: Vec<f64>,
    uniform: bool,
}

impl HypothesisSpace {
    /// Uniform weights over `boards`.
    pub fn uniform(config: Arc<GameConfig>, boards: Vec<FullBoard>) -> Result<HypothesisSpace, BoardError> {
        if boards.is_empty() {
            return Err(BoardError::Inconsistent);
        }
        let w = 1.0 / boards.len() as f64;
        let weights = vec![w; boards.len()];
        Ok(HypothesisSpace { config, boards, weights, uniform: true })
    }

    /// Arbitrary nonnegative weights; they are normalised to sum to one.
    /// Zero-weight boards are dropped.
    pub fn weighted(
        config: Arc<GameConfig>,
        boards: Vec<FullBoard>,
        weights: Vec<f64>,
    ) -> Result<HypothesisSpace, BoardError> {
        if boards.len() != weights.len() {
            return Err(BoardError::DimensionMismatch(format!(
                "{} boards but {} weights",
                boards.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BoardError::Document("weights must be finite and nonnegative".into()));
        }
        let (boards, weights): (Vec<_>, Vec<_>) = boards.into_iter().zip(weights).filter(|(_, w)| *w > 0.0).unzip();
        let total: f64 = weights.iter().sum();
        if boards.is_empty() || total <= 0.0 {
            return Err(BoardError::Inconsistent);
        }
        Ok(HypothesisSpace {
            config,
            boards,
            weights: weights.into_iter().map(|w| w / total).collect(),
            uniform: false,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn config_arc(&self) -> &Arc<GameConfig> {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.boards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boards.is_empty()
    }

    pub fn boards(&self) -> &[FullBoard] {
        &self.boards
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Whether all weights are equal (the enumeration prior, or a posterior of it).
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FullBoard, f64)> {
        self.boards.iter().zip(self.weights.iter().copied())
    }

    /// Keeps the boards selected by `keep` (one flag per board) and
    /// renormalises. Errors when nothing is kept.
    pub fn restrict(&self, keep: &[bool]) -> Result<HypothesisSpace, BoardError> {
        let mut boards = Vec::new();
        let mut weights = Vec::new();
        for ((b, w), &k) in self.iter().zip(keep) {
            if k {
                boards.push(b.clone());
                weights.push(w);
            }
        }
        if boards.is_empty() {
            return Err(BoardError::Inconsistent);
        }
        if self.uniform {
            HypothesisSpace::uniform(self.config.clone(), boards)
        } else {
            HypothesisSpace::weighted(self.config.clone(), boards, weights)
        }
    }
}

/// Every complete board consistent with `board`, uniformly weighted, in
/// lexicographic order of the per-ship placements.
pub fn enumerate_hypotheses(board: &PartialBoard) -> Result<HypothesisSpace, BoardError> {
    let config = board.config_arc().clone();
    let candidates = ship_candidates(board);
    if candidates.iter().any(Vec::is_empty) {
        return Err(BoardError::Inconsistent);
    }
    let boards: Vec<FullBoard> = if candidates.is_empty() {
        vec![FullBoard::from_parts(config.clone(), ArrayVec::new())]
    } else {
        candidates[0]
            .par_iter()
            .map(|(first, mask)| {
                let mut out = Vec::new();
                let mut stack = ArrayVec::<Placement, 3>::new();
                stack.push(*first);
                extend(&config, &candidates, 1, *mask, &mut stack, &mut |placements| {
                    out.push(FullBoard::from_parts(config.clone(), placements.clone()));
                    true
                });
                out
            })
            .flatten()
            .collect()
    };
    HypothesisSpace::uniform(config, boards)
}

/// Early-exit search for any consistent board.
pub(crate) fn has_consistent_board(board: &PartialBoard) -> bool {
    let candidates = ship_candidates(board);
    if candidates.iter().any(Vec::is_empty) {
        return false;
    }
    let mut found = false;
    let mut stack = ArrayVec::new();
    extend(board.config(), &candidates, 0, TileSet::empty(), &mut stack, &mut |_| {
        found = true;
        false
    });
    found
}

type Candidate = (Placement, TileSet);

/// Depth-first product over ships with overlap pruning. `visit` returns
/// false to stop the search; so does this function.
fn extend(
    config: &GameConfig,
    candidates: &[Vec<Candidate>],
    ship: usize,
    occupied: TileSet,
    stack: &mut ArrayVec<Placement, 3>,
    visit: &mut dyn FnMut(&ArrayVec<Placement, 3>) -> bool,
) -> bool {
    if ship == candidates.len() {
        return visit(stack);
    }
    for (p, mask) in &candidates[ship] {
        if !occupied.intersection(mask).is_empty() {
            continue;
        }
        if config.distinct_lengths && stack.iter().any(|q| q.length == p.length) {
            continue;
        }
        stack.push(*p);
        let go_on = extend(config, candidates, ship + 1, occupied.union(mask), stack, visit);
        stack.pop();
        if !go_on {
            return false;
        }
    }
    true
}

/// Per ship (config order), the placements that agree with every revealed
/// tile on their own: no revealed tile under the ship shows anything but
/// the ship, and every revealed tile of the ship's colour is covered.
fn ship_candidates(board: &PartialBoard) -> Vec<Vec<Candidate>> {
    let config = board.config();
    let cols = config.cols;
    config
        .ships
        .iter()
        .map(|spec| {
            let required: TileSet =
                board.revealed().filter(|&(_, c)| c == spec.id).map(|(at, _)| at.index(cols)).collect();
            let mut lengths = spec.lengths.clone();
            lengths.sort_unstable();
            lengths.dedup();
            let mut out = Vec::new();
            for row in 1..=config.rows {
                for col in 1..=config.cols {
                    for orientation in [Orientation::Horizontal, Orientation::Vertical] {
                        for &length in &lengths {
                            let p = Placement {
                                ship: spec.id,
                                origin: Coord::new(row as u8, col as u8),
                                orientation,
                                length: length as u8,
                            };
                            if !p.fits(config) {
                                continue;
                            }
                            let ok = p.coords().all(|at| match board.get(at) {
                                None => true,
                                Some(c) => c == spec.id,
                            });
                            if !ok {
                                continue;
                            }
                            let mask = p.tiles(cols);
                            if required.difference(&mask).is_empty() {
                                out.push((p, mask));
                            }
                        }
                    }
                }
            }
            debug_assert!(out.windows(2).all(|w| w[0].0 < w[1].0));
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::{is_consistent, Color, ShipSpec};

    fn cfg(rows: usize, cols: usize, ships: &[(Color, &[usize])]) -> Arc<GameConfig> {
        Arc::new(
            GameConfig::new(
                rows,
                cols,
                ships.iter().map(|(id, l)| ShipSpec { id: *id, lengths: l.to_vec() }).collect(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn tiny_all_hidden_has_four() {
        let config = cfg(2, 2, &[(Color::Red, &[2])]);
        let space = enumerate_hypotheses(&PartialBoard::hidden(config)).unwrap();
        assert_eq!(space.len(), 4);
        assert!(space.weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn six_by_six_single_ship() {
        let config = cfg(6, 6, &[(Color::Red, &[2])]);
        let space = enumerate_hypotheses(&PartialBoard::hidden(config)).unwrap();
        assert_eq!(space.len(), 2 * 6 * (6 - 2 + 1));
    }

    #[test]
    fn water_at_1a_leaves_two() {
        let config = cfg(2, 2, &[(Color::Red, &[2])]);
        let board = PartialBoard::with_revealed(config, &[(Coord::new(1, 1), Color::Water)]).unwrap();
        let space = enumerate_hypotheses(&board).unwrap();
        assert_eq!(space.len(), 2);
        let mut seen: Vec<_> =
            space.boards().iter().map(|b| (b.placements()[0].origin, b.placements()[0].orientation)).collect();
        seen.sort();
        assert_eq!(seen, vec![(Coord::new(1, 2), Orientation::Vertical), (Coord::new(2, 1), Orientation::Horizontal)]);
    }

    #[test]
    fn revealed_ship_tile_pins_the_ship() {
        let config = cfg(3, 3, &[(Color::Red, &[2]), (Color::Blue, &[2])]);
        let board = PartialBoard::with_revealed(config, &[(Coord::new(2, 2), Color::Red)]).unwrap();
        let space = enumerate_hypotheses(&board).unwrap();
        for b in space.boards() {
            assert_eq!(b.color_at(Coord::new(2, 2)), Color::Red);
            assert!(is_consistent(b, &board).unwrap());
        }
        // Red through the centre: 4 placements; each leaves some room for blue.
        assert!(space.len() > 4);
    }

    #[test]
    fn ordering_is_lexicographic_and_deterministic() {
        let config = cfg(3, 3, &[(Color::Red, &[2, 3]), (Color::Blue, &[2])]);
        let a = enumerate_hypotheses(&PartialBoard::hidden(config.clone())).unwrap();
        let b = enumerate_hypotheses(&PartialBoard::hidden(config)).unwrap();
        assert_eq!(a.boards(), b.boards());
        let keys: Vec<_> = a.boards().iter().map(|b| b.placements().to_vec()).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn distinct_lengths_flag_prunes() {
        let base = GameConfig::new(
            4,
            4,
            vec![ShipSpec { id: Color::Red, lengths: vec![2, 3] }, ShipSpec { id: Color::Blue, lengths: vec![2, 3] }],
        )
        .unwrap();
        let all = enumerate_hypotheses(&PartialBoard::hidden(Arc::new(base.clone()))).unwrap();
        let distinct = enumerate_hypotheses(&PartialBoard::hidden(Arc::new(base.with_distinct_lengths(true)))).unwrap();
        assert!(distinct.len() < all.len());
        for b in distinct.boards() {
            assert_ne!(b.placements()[0].length, b.placements()[1].length);
        }
    }

    #[test]
    fn restrict_renormalises() {
        let config = cfg(2, 2, &[(Color::Red, &[2])]);
        let space = enumerate_hypotheses(&PartialBoard::hidden(config)).unwrap();
        let half = space.restrict(&[true, false, true, false]).unwrap();
        assert_eq!(half.len(), 2);
        assert_eq!(half.weights(), &[0.5, 0.5]);
        assert!(space.restrict(&[false; 4]).is_err());
    }
}
