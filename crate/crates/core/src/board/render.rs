use std::fmt::Write;

use super::{BoardError, Coord, PartialBoard};

/// Symbol grid: a header of column letters, then one line per row with
/// `H` for hidden tiles and `W`/`R`/`B`/`P` for revealed ones.
///
/// ```text
///   A B C
/// 1 H W H
/// ```
pub fn render_grid(board: &PartialBoard) -> Result<String, BoardError> {
    let config = board.config();
    if config.rows > 9 || config.cols > 26 {
        return Err(BoardError::Unrenderable { rows: config.rows, cols: config.cols });
    }
    let mut out = String::from(" ");
    for col in 1..=config.cols {
        out.push(' ');
        out.push(Coord::new(1, col as u8).col_letter());
    }
    out.push('\n');
    for row in 1..=config.rows {
        write!(out, "{row}").unwrap();
        for col in 1..=config.cols {
            out.push(' ');
            out.push(board.get(Coord::new(row as u8, col as u8)).map_or('H', |c| c.symbol()));
        }
        out.push('\n');
    }
    Ok(out)
}

/// One sentence per revealed tile, row-major; hidden tiles are omitted.
pub fn render_textual(board: &PartialBoard) -> String {
    let mut out = String::new();
    for (at, color) in board.revealed() {
        if color.is_ship() {
            writeln!(out, "{} is a {} ship tile.", at.dashed_label(), color.name().to_lowercase()).unwrap();
        } else {
            writeln!(out, "{} is a water tile.", at.dashed_label()).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::board::{Color, GameConfig};

    fn c(s: &str) -> Coord {
        s.parse().unwrap()
    }

    #[test]
    fn hidden_six_by_six() {
        let board = PartialBoard::hidden(Arc::new(GameConfig::default()));
        let grid = render_grid(&board).unwrap();
        let mut expected = String::from("  A B C D E F\n");
        for r in 1..=6 {
            expected.push_str(&format!("{r} H H H H H H\n"));
        }
        assert_eq!(grid, expected);
        assert_eq!(render_textual(&board), "");
    }

    #[test]
    fn example_board_grid() {
        let board = PartialBoard::with_revealed(
            Arc::new(GameConfig::default()),
            &[
                (c("2C"), Color::Water),
                (c("2E"), Color::Water),
                (c("3C"), Color::Purple),
                (c("4D"), Color::Water),
                (c("5B"), Color::Water),
                (c("6E"), Color::Water),
            ],
        )
        .unwrap();
        let expected = "  A B C D E F\n\
                        1 H H H H H H\n\
                        2 H H W H W H\n\
                        3 H H P H H H\n\
                        4 H H H W H H\n\
                        5 H W H H H H\n\
                        6 H H H H W H\n";
        assert_eq!(render_grid(&board).unwrap(), expected);
        assert_eq!(
            render_textual(&board),
            "2-C is a water tile.\n2-E is a water tile.\n3-C is a purple ship tile.\n\
             4-D is a water tile.\n5-B is a water tile.\n6-E is a water tile.\n"
        );
    }

    #[test]
    fn minimal_board() {
        let config = GameConfig { rows: 1, cols: 1, ships: vec![], distinct_lengths: false };
        let board = PartialBoard::hidden(Arc::new(config));
        assert_eq!(render_grid(&board).unwrap(), "  A\n1 H\n");
    }

    #[test]
    fn too_many_rows() {
        let config = GameConfig::single_ship(10, 3, Color::Red, &[2]).unwrap();
        let board = PartialBoard::hidden(Arc::new(config));
        assert!(matches!(render_grid(&board), Err(BoardError::Unrenderable { .. })));
    }
}
