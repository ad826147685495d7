//! Text formats: boards, tiling instances, partitions and line lists.
//!
//! Board (`board v1`):
//! ```text
//! board v1 p=5 N=25 mlo=0 mhi=2
//! 1 1 1 ... (N values for m = mlo)
//! ...
//! ```
//! Tiling instance: `group <literal>`, `lattice <r*r integers | finite>`,
//! an optional `residues:` line and one `tile:` block per tile. Elements may
//! continue on following lines; `#` starts a comment.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::abelian::{Element, GroupSpec, Lattice};
use crate::error::{Error, Result};
use crate::padic::PadicParams;
use crate::sudoku::Board;
use crate::tiling::{Partition, PeriodicSet, Tile};

pub fn write_board(board: &Board) -> String {
    write_board_file(&BoardFile {
        board: board.clone(),
        generator: None,
    })
}

/// A board plus the optional `gen=a,b,c` header field recording `F(n, m) = f_p(an + bm + c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoardFile {
    pub board: Board,
    pub generator: Option<(i64, i64, i64)>,
}

pub fn write_board_file(file: &BoardFile) -> String {
    let board = &file.board;
    let w = board.width();
    let mut out = format!(
        "board v1 p={} N={} mlo={} mhi={}",
        board.p(),
        w,
        board.m_lo(),
        board.m_hi()
    );
    if let Some((a, b, c)) = file.generator {
        write!(out, " gen={a},{b},{c}").unwrap();
    }
    out.push('\n');
    for row in board.cells().chunks(w) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn header_field<'a>(token: Option<&'a str>, key: &str) -> Result<&'a str> {
    token
        .and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| Error::parse(1, format!("expected `{key}=<value>` in header")))
}

fn number<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(line, format!("bad {what} `{s}`")))
}

pub fn parse_board(text: &str) -> Result<Board> {
    parse_board_file(text).map(|f| f.board)
}

fn parse_generator(s: &str) -> Result<(i64, i64, i64)> {
    let parts: Vec<i64> = s
        .split(',')
        .map(|t| number(t, 1, "generator coefficient"))
        .collect::<Result<_>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(Error::parse(1, format!("generator `{s}` needs three coefficients"))),
    }
}

pub fn parse_board_file(text: &str) -> Result<BoardFile> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty board file"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("board") || tokens.next() != Some("v1") {
        return Err(Error::parse(1, "expected `board v1` header"));
    }
    let p: u64 = number(header_field(tokens.next(), "p")?, 1, "p")?;
    let n: usize = number(header_field(tokens.next(), "N")?, 1, "N")?;
    let lo: i64 = number(header_field(tokens.next(), "mlo")?, 1, "mlo")?;
    let hi: i64 = number(header_field(tokens.next(), "mhi")?, 1, "mhi")?;
    let generator = tokens
        .next()
        .map(|t| parse_generator(header_field(Some(t), "gen")?))
        .transpose()?;
    if tokens.next().is_some() {
        return Err(Error::parse(1, "trailing header fields"));
    }
    let params = PadicParams::s2(p).map_err(|e| Error::parse(1, e.to_string()))?;
    if n != params.width() {
        return Err(Error::parse(1, format!("N = {n} but p^2 = {}", params.width())));
    }
    if lo > hi {
        return Err(Error::parse(1, format!("empty window [{lo}, {hi}]")));
    }
    let height = (hi as i128 - lo as i128 + 1) as u128;
    let mut cells = Vec::new();
    let mut rows = 0u128;
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        if rows == height {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(lineno, "more rows than the window holds"));
        }
        let before = cells.len();
        for tok in line.split_whitespace() {
            let v: i64 = number(tok, lineno, "cell value")?;
            if v < 1 || v as u64 >= p {
                return Err(Error::ValueOutOfRange { value: v, max: p - 1 });
            }
            cells.push(v as u8);
        }
        if cells.len() - before != n {
            return Err(Error::parse(
                lineno,
                format!("row has {} values, expected {n}", cells.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != height {
        return Err(Error::parse(
            rows as usize + 2,
            format!("expected {height} rows, found {rows}"),
        ));
    }
    Ok(BoardFile {
        board: Board::new(params, lo, hi, cells)?,
        generator,
    })
}

/// A tiling problem: a group, a system of tiles and an optional periodic candidate `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilingInstance {
    pub group: GroupSpec,
    pub lattice: Lattice,
    /// `None` when the file has no `residues:` line.
    pub residues: Option<Vec<Element>>,
    pub tiles: Vec<Tile>,
}

impl TilingInstance {
    pub fn candidate(&self) -> Result<Option<PeriodicSet>> {
        self.residues
            .as_ref()
            .map(|r| PeriodicSet::new(self.group.clone(), self.lattice.clone(), r.iter().cloned()))
            .transpose()
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Splits `((..);(..)) ((..);(..))` into element literals.
fn element_tokens(s: &str, line: usize) -> Result<Vec<&str>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = None;
    for (k, ch) in s.char_indices() {
        match ch {
            '(' => {
                if depth == 0 {
                    start = Some(k);
                }
                depth += 1;
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::parse(line, "unbalanced `)`"));
                }
                if depth == 0 {
                    out.push(&s[start.take().unwrap()..=k]);
                }
            }
            c if depth == 0 && !c.is_whitespace() && c != ',' => {
                return Err(Error::parse(line, format!("unexpected `{c}` between elements")));
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::parse(line, "unbalanced `(`"));
    }
    Ok(out)
}

fn parse_elements(group: &GroupSpec, s: &str, line: usize) -> Result<Vec<Element>> {
    element_tokens(s, line)?
        .into_iter()
        .map(|t| group.parse_element(t).map_err(|e| Error::parse(line, e.to_string())))
        .collect()
}

fn parse_lattice(group: &GroupSpec, s: &str, line: usize) -> Result<Lattice> {
    if s == "finite" {
        if group.rank() != 0 {
            return Err(Error::parse(line, "`finite` lattice needs a group without free factors"));
        }
        return Ok(Lattice::trivial());
    }
    let entries: Vec<i64> = s
        .split_whitespace()
        .map(|t| number(t, line, "lattice entry"))
        .collect::<Result<_>>()?;
    let r = group.rank();
    if r == 0 || entries.len() != r * r {
        return Err(Error::parse(
            line,
            format!("expected {} lattice entries, got {}", r * r, entries.len()),
        ));
    }
    let rows: Vec<Vec<i64>> = entries.chunks(r).map(|c| c.to_vec()).collect();
    Lattice::from_columns(&rows).map_err(|e| Error::parse(line, e.to_string()))
}

enum Block {
    None,
    Residues,
    Tile,
}

pub fn parse_instance(text: &str) -> Result<TilingInstance> {
    let mut group: Option<GroupSpec> = None;
    let mut lattice: Option<Lattice> = None;
    let mut residues: Option<Vec<Element>> = None;
    let mut tiles: Vec<(usize, Vec<Element>)> = Vec::new();
    let mut block = Block::None;
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("group") {
            if group.is_some() {
                return Err(Error::parse(lineno, "duplicate `group` line"));
            }
            group = Some(rest.trim().parse().map_err(|e: Error| Error::parse(lineno, e.to_string()))?);
            continue;
        }
        let g = group
            .as_ref()
            .ok_or_else(|| Error::parse(lineno, "`group` must come first"))?;
        if let Some(rest) = line.strip_prefix("lattice") {
            if lattice.is_some() {
                return Err(Error::parse(lineno, "duplicate `lattice` line"));
            }
            lattice = Some(parse_lattice(g, rest.trim(), lineno)?);
            block = Block::None;
        } else if let Some(rest) = line.strip_prefix("residues:") {
            if residues.is_some() {
                return Err(Error::parse(lineno, "duplicate `residues:` line"));
            }
            residues = Some(parse_elements(g, rest, lineno)?);
            block = Block::Residues;
        } else if let Some(rest) = line.strip_prefix("tile:") {
            tiles.push((lineno, parse_elements(g, rest, lineno)?));
            block = Block::Tile;
        } else if line.starts_with('(') {
            let more = parse_elements(g, line, lineno)?;
            match block {
                Block::Residues => residues.as_mut().unwrap().extend(more),
                Block::Tile => tiles.last_mut().unwrap().1.extend(more),
                Block::None => return Err(Error::parse(lineno, "elements outside a block")),
            }
        } else {
            return Err(Error::parse(lineno, format!("unrecognized line `{line}`")));
        }
    }
    let group = group.ok_or_else(|| Error::parse(1, "missing `group` line"))?;
    let lattice = lattice.ok_or_else(|| Error::parse(2, "missing `lattice` line"))?;
    if tiles.is_empty() {
        return Err(Error::parse(text.lines().count().max(1), "no `tile:` block"));
    }
    let tiles = tiles
        .into_iter()
        .map(|(lineno, els)| Tile::new(group.clone(), els).map_err(|e| Error::parse(lineno, e.to_string())))
        .collect::<Result<_>>()?;
    Ok(TilingInstance {
        group,
        lattice,
        residues,
        tiles,
    })
}

fn join_elements<'a>(els: impl IntoIterator<Item = &'a Element>) -> String {
    els.into_iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_instance(instance: &TilingInstance) -> String {
    let mut out = String::new();
    writeln!(out, "group {}", instance.group).unwrap();
    writeln!(out, "lattice {}", instance.lattice).unwrap();
    if let Some(r) = &instance.residues {
        writeln!(out, "residues: {}", join_elements(r)).unwrap();
    }
    for t in &instance.tiles {
        writeln!(out, "tile: {}", join_elements(t.elements())).unwrap();
    }
    out
}

pub fn parse_partition(text: &str) -> Result<Partition> {
    let mut group: Option<GroupSpec> = None;
    let mut parts: Vec<BTreeSet<Element>> = Vec::new();
    let mut seen_header = false;
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if !seen_header {
            if line != "partition v1" {
                return Err(Error::parse(lineno, "expected `partition v1` header"));
            }
            seen_header = true;
        } else if let Some(rest) = line.strip_prefix("group") {
            group = Some(rest.trim().parse().map_err(|e: Error| Error::parse(lineno, e.to_string()))?);
        } else if let Some(rest) = line.strip_prefix("part:") {
            let g = group
                .as_ref()
                .ok_or_else(|| Error::parse(lineno, "`group` must precede parts"))?;
            parts.push(parse_elements(g, rest, lineno)?.into_iter().collect());
        } else if line.starts_with('(') {
            let g = group.as_ref().ok_or_else(|| Error::parse(lineno, "`group` must precede parts"))?;
            let last = parts
                .last_mut()
                .ok_or_else(|| Error::parse(lineno, "elements outside a part"))?;
            last.extend(parse_elements(g, line, lineno)?);
        } else {
            return Err(Error::parse(lineno, format!("unrecognized line `{line}`")));
        }
    }
    let group = group.ok_or_else(|| Error::parse(1, "missing `group` line"))?;
    Partition::new(group, parts)
}

pub fn write_partition(partition: &Partition) -> String {
    let mut out = String::from("partition v1\n");
    writeln!(out, "group {}", partition.group()).unwrap();
    for part in partition.parts() {
        writeln!(out, "part: {}", join_elements(part)).unwrap();
    }
    out
}

/// Whitespace-separated line functions, one per line; `#` comments.
pub fn parse_lines(text: &str, params: &PadicParams) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let values: Vec<u8> = line
            .split_whitespace()
            .map(|t| {
                let v: i64 = number(t, k + 1, "value")?;
                if v < 1 || v as u64 >= params.p() {
                    return Err(Error::ValueOutOfRange {
                        value: v,
                        max: params.p() - 1,
                    });
                }
                Ok(v as u8)
            })
            .collect::<Result<_>>()?;
        if values.len() != params.width() {
            return Err(Error::parse(
                k + 1,
                format!("line has {} values, expected {}", values.len(), params.width()),
            ));
        }
        out.push(values);
    }
    Ok(out)
}
