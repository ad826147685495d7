//! ASCII and PGM pictures of boards. The top row is `m_hi`.
//!
//! Cells are shaded either by value or, given the generator `(a, b, c)`, by
//! the valuation `nu_p(an + bm + c)`: 0 white, 1 grey, 2 or more dark, infinite black.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::padic::{nu_wide, Valuation};
use crate::sudoku::Board;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Ascii,
    Pgm,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascii" => Ok(Format::Ascii),
            "pgm" => Ok(Format::Pgm),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shading {
    Value,
    /// Valuation of `an + bm + c`.
    Valuation { a: i64, b: i64, c: i64 },
}

const GLYPHS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

fn level(board: &Board, shading: Shading, n: usize, m: i64) -> Valuation {
    match shading {
        Shading::Value => Valuation::Finite(0),
        Shading::Valuation { a, b, c } => {
            let x = a as i128 * n as i128 + b as i128 * m as i128 + c as i128;
            nu_wide(board.p(), x)
        }
    }
}

fn valuation_glyph(v: Valuation) -> char {
    match v {
        Valuation::Finite(0) => '.',
        Valuation::Finite(1) => ':',
        Valuation::Finite(_) => '#',
        Valuation::Infinite => '*',
    }
}

fn valuation_grey(v: Valuation) -> u8 {
    match v {
        Valuation::Finite(0) => 255,
        Valuation::Finite(1) => 170,
        Valuation::Finite(_) => 85,
        Valuation::Infinite => 0,
    }
}

fn rows_top_down(board: &Board) -> impl Iterator<Item = i64> + '_ {
    (board.m_lo()..=board.m_hi()).rev()
}

/// One line per row, one glyph per cell.
pub fn render_ascii(board: &Board, shading: Shading) -> String {
    let mut out = String::new();
    for m in rows_top_down(board) {
        for n in 1..=board.width() {
            let ch = match shading {
                Shading::Value => {
                    let v = board.get(n, m).unwrap() as usize;
                    GLYPHS.get(v).map_or('?', |&g| g as char)
                }
                Shading::Valuation { .. } => valuation_glyph(level(board, shading, n, m)),
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}

/// Plain PGM (`P2`), `scale` pixels per cell edge.
pub fn render_pgm(board: &Board, shading: Shading, scale: usize) -> Result<String> {
    if scale == 0 || scale > 64 {
        return Err(Error::InvalidParams(format!("pixel scale {scale} must be in 1..=64")));
    }
    let p = board.p();
    let (w, h) = (board.width() * scale, board.height() * scale);
    let mut out = format!("P2\n{w} {h}\n255\n");
    for m in rows_top_down(board) {
        let row: Vec<String> = (1..=board.width())
            .flat_map(|n| {
                let grey = match shading {
                    Shading::Value => {
                        let v = board.get(n, m).unwrap() as u64;
                        (255 * v / (p - 1)) as u8
                    }
                    Shading::Valuation { .. } => valuation_grey(level(board, shading, n, m)),
                };
                std::iter::repeat_n(grey.to_string(), scale)
            })
            .collect();
        let line = row.join(" ");
        for _ in 0..scale {
            writeln!(out, "{line}").unwrap();
        }
    }
    Ok(out)
}

pub fn render(board: &Board, format: Format, shading: Shading) -> Result<String> {
    match format {
        Format::Ascii => Ok(render_ascii(board, shading)),
        Format::Pgm => render_pgm(board, shading, 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PadicParams;
    use crate::sudoku::gen_affine;

    #[test]
    fn constant_board_is_uniform() {
        let b = gen_affine(PadicParams::s2(5).unwrap(), 0, 4, 0, 0, 3).unwrap();
        let pgm = render_pgm(&b, Shading::Value, 1).unwrap();
        let body: Vec<&str> = pgm.lines().skip(3).flat_map(|l| l.split(' ')).collect();
        assert_eq!(body.len(), 125);
        assert!(body.iter().all(|&v| v == body[0]));
    }

    #[test]
    fn ascii_shape() {
        let b = gen_affine(PadicParams::s2(3).unwrap(), 0, 2, 1, 1, 0).unwrap();
        let s = render_ascii(&b, Shading::Value);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.chars().count() == 9));
    }

    #[test]
    fn valuation_bands() {
        let b = gen_affine(PadicParams::s2(5).unwrap(), 0, 25, 0, 1, 0).unwrap();
        let s = render_ascii(&b, Shading::Valuation { a: 0, b: 1, c: 0 });
        let lines: Vec<&str> = s.lines().collect();
        // top line is m = 25, bottom is m = 0
        assert!(lines[0].chars().all(|c| c == '#'));
        assert!(lines[5].chars().all(|c| c == ':'));
        assert!(lines[1].chars().all(|c| c == '.'));
        assert!(lines[25].chars().all(|c| c == '*'));
    }

    #[test]
    fn unknown_format() {
        assert_eq!("svg".parse::<Format>(), Err(Error::UnknownFormat("svg".into())));
    }
}
