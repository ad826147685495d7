//! Sudoku boards `F: {1..N} x Z -> (Z/p)^x` restricted to a vertical window.
//!
//! Every non-vertical line `{(n, jn + i)}` of a solution must lie in `S^2_p`.
//! On a window only finitely many lines are visible: full lines lie entirely
//! inside it, partial lines show at least two cells.

use std::fmt;
use std::ops::ControlFlow;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::padic::{fp_wide, Certificate, Classifier, PadicParams};

/// Boards larger than this many cells are refused.
const MAX_CELLS: usize = 1 << 28;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Board {
    params: PadicParams,
    m_lo: i64,
    m_hi: i64,
    /// Row-major by increasing `m`; `cells[(m - m_lo) * N + (n - 1)]`.
    cells: Vec<u8>,
}

fn window_height(m_lo: i64, m_hi: i64) -> Result<usize> {
    if m_lo > m_hi {
        return Err(Error::InvalidWindow(format!("[{m_lo}, {m_hi}] is empty")));
    }
    let h = (m_hi as i128 - m_lo as i128 + 1) as u128;
    usize::try_from(h).map_err(|_| Error::InvalidWindow(format!("[{m_lo}, {m_hi}] is too tall")))
}

impl Board {
    pub fn new(params: PadicParams, m_lo: i64, m_hi: i64, cells: Vec<u8>) -> Result<Self> {
        let height = window_height(m_lo, m_hi)?;
        let expected = height
            .checked_mul(params.width())
            .filter(|&c| c <= MAX_CELLS)
            .ok_or_else(|| Error::TooLarge(format!("window [{m_lo}, {m_hi}]")))?;
        if cells.len() != expected {
            return Err(Error::InvalidParams(format!(
                "expected {expected} cells, got {}",
                cells.len()
            )));
        }
        if let Some(&v) = cells.iter().find(|&&v| !params.is_unit(v as u64)) {
            return Err(Error::ValueOutOfRange {
                value: v as i64,
                max: params.p() - 1,
            });
        }
        Ok(Board {
            params,
            m_lo,
            m_hi,
            cells,
        })
    }

    /// Fills every cell with `value(n, m)`.
    pub fn from_fn(
        params: PadicParams,
        m_lo: i64,
        m_hi: i64,
        value: impl Fn(usize, i64) -> u8 + Sync,
    ) -> Result<Self> {
        let height = window_height(m_lo, m_hi)?;
        let width = params.width();
        if height.checked_mul(width).is_none_or(|c| c > MAX_CELLS) {
            return Err(Error::TooLarge(format!("window [{m_lo}, {m_hi}]")));
        }
        let cells: Vec<u8> = (0..height)
            .into_par_iter()
            .flat_map_iter(|r| {
                let m = m_lo + r as i64;
                let value = &value;
                (1..=width).map(move |n| value(n, m))
            })
            .collect();
        Board::new(params, m_lo, m_hi, cells)
    }

    pub fn params(&self) -> &PadicParams {
        &self.params
    }

    pub fn p(&self) -> u64 {
        self.params.p()
    }

    /// `N = p^2`
    pub fn width(&self) -> usize {
        self.params.width()
    }

    pub fn height(&self) -> usize {
        self.cells.len() / self.width()
    }

    pub fn m_lo(&self) -> i64 {
        self.m_lo
    }

    pub fn m_hi(&self) -> i64 {
        self.m_hi
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn contains_row(&self, m: i64) -> bool {
        (self.m_lo..=self.m_hi).contains(&m)
    }

    /// `F(n, m)` for `n` in `1..=N`, `None` outside the window.
    pub fn get(&self, n: usize, m: i64) -> Option<u8> {
        if n == 0 || n > self.width() || !self.contains_row(m) {
            return None;
        }
        Some(self.cells[(m - self.m_lo) as usize * self.width() + n - 1])
    }

    pub fn set(&mut self, n: usize, m: i64, v: u8) -> Result<()> {
        if !self.params.is_unit(v as u64) {
            return Err(Error::ValueOutOfRange {
                value: v as i64,
                max: self.p() - 1,
            });
        }
        if n == 0 || n > self.width() || !self.contains_row(m) {
            return Err(Error::InvalidWindow(format!("cell ({n}, {m}) is outside the board")));
        }
        let w = self.width();
        self.cells[(m - self.m_lo) as usize * w + n - 1] = v;
        Ok(())
    }

    pub fn row(&self, m: i64) -> Option<&[u8]> {
        self.contains_row(m).then(|| {
            let w = self.width();
            let r = (m - self.m_lo) as usize;
            &self.cells[r * w..(r + 1) * w]
        })
    }

    pub fn column(&self, n: usize) -> Vec<u8> {
        let w = self.width();
        self.cells.iter().skip(n - 1).step_by(w).copied().collect()
    }

    /// The same board on the sub-window `[lo, hi]`.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<Board> {
        if lo > hi || lo < self.m_lo || hi > self.m_hi {
            return Err(Error::IncompatibleWindow(format!(
                "[{lo}, {hi}] is not inside [{}, {}]",
                self.m_lo, self.m_hi
            )));
        }
        let w = self.width();
        let a = (lo - self.m_lo) as usize * w;
        let b = (hi - self.m_lo + 1) as usize * w;
        Board::new(self.params, lo, hi, self.cells[a..b].to_vec())
    }
}

/// `F(n, m) = f_p(an + bm + c)`, evaluated exactly.
pub fn gen_affine(params: PadicParams, m_lo: i64, m_hi: i64, a: i64, b: i64, c: i64) -> Result<Board> {
    let p = params.p();
    Board::from_fn(params, m_lo, m_hi, |n, m| {
        let x = a as i128 * n as i128 + b as i128 * m as i128 + c as i128;
        fp_wide(p, x) as u8
    })
}

/// The non-vertical line `{(n, jn + i) : n = 1..N}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineId {
    pub j: i64,
    pub i: i64,
}

impl LineId {
    pub fn row(&self, n: usize) -> i128 {
        self.j as i128 * n as i128 + self.i as i128
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j={} i={}", self.j, self.i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Visibility {
    Full,
    Partial,
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Visibility::Full => "full",
            Visibility::Partial => "partial",
        })
    }
}

fn floor_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b) - if b < 0 && a.rem_euclid(b) != 0 { 1 } else { 0 }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

/// Number of `n` in `1..=width` with `lo <= jn + i <= hi`.
fn visible_count(width: usize, lo: i64, hi: i64, line: LineId) -> usize {
    let (lo, hi, j, i) = (lo as i128, hi as i128, line.j as i128, line.i as i128);
    let (a, b) = if j == 0 {
        if (lo..=hi).contains(&i) {
            (1, width as i128)
        } else {
            return 0;
        }
    } else if j > 0 {
        (ceil_div(lo - i, j), floor_div(hi - i, j))
    } else {
        (ceil_div(hi - i, j), floor_div(lo - i, j))
    };
    let (a, b) = (a.max(1), b.min(width as i128));
    if a > b {
        0
    } else {
        (b - a + 1) as usize
    }
}

/// Slopes with at least one full line.
fn full_slopes(board: &Board) -> std::ops::RangeInclusive<i64> {
    let span = (board.height() - 1) as i64 / (board.width() as i64 - 1);
    -span..=span
}

/// Intercepts of the full lines with slope `j`.
fn full_intercepts(board: &Board, j: i64) -> std::ops::RangeInclusive<i64> {
    let n = board.width() as i64;
    let (min, max) = if j >= 0 { (j, j * n) } else { (j * n, j) };
    (board.m_lo - min)..=(board.m_hi - max)
}

/// Slopes that can show two cells of a line.
fn visible_slopes(board: &Board) -> std::ops::RangeInclusive<i64> {
    let h = board.height() as i64 - 1;
    -h..=h
}

fn lines_of_slope(board: &Board, j: i64, partial: bool) -> Vec<(LineId, Visibility)> {
    let n = board.width() as i64;
    let (min, max) = if j >= 0 { (j, j * n) } else { (j * n, j) };
    let lo = board.m_lo as i128 - max as i128;
    let hi = board.m_hi as i128 - min as i128;
    let mut out = Vec::new();
    if !partial {
        return full_intercepts(board, j)
            .map(|i| (LineId { j, i }, Visibility::Full))
            .collect();
    }
    for i in lo..=hi {
        let line = LineId { j, i: i as i64 };
        match visible_count(board.width(), board.m_lo, board.m_hi, line) {
            c if c == board.width() => out.push((line, Visibility::Full)),
            c if c >= 2 => out.push((line, Visibility::Partial)),
            _ => {}
        }
    }
    out
}

/// Every line with at least two visible cells, ordered by `(j, i)`.
pub fn visible_lines(board: &Board) -> Vec<(LineId, Visibility)> {
    visible_slopes(board)
        .flat_map(|j| lines_of_slope(board, j, true))
        .collect()
}

/// The full lines, ordered by `(j, i)`.
pub fn full_lines(board: &Board) -> Vec<LineId> {
    full_slopes(board)
        .flat_map(|j| full_intercepts(board, j).map(move |i| LineId { j, i }))
        .collect()
}

/// `F(n, jn + i)` for `n = 1..N`, `None` off the window.
pub fn line_cells(board: &Board, line: LineId) -> Vec<Option<u8>> {
    (1..=board.width())
        .map(|n| {
            let m = line.row(n);
            i64::try_from(m).ok().and_then(|m| board.get(n, m))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    FullOnly,
    ExtendPartial,
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyMode::FullOnly => "full-only",
            VerifyMode::ExtendPartial => "extend-partial",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineFailure {
    pub line: LineId,
    pub visibility: Visibility,
    /// Visible cells `(n, m, value)`.
    pub cells: Vec<(usize, i64, u8)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoardReport {
    pub mode: VerifyMode,
    pub full_lines: u64,
    pub partial_lines: u64,
    pub constant_lines: u64,
    pub affine_lines: u64,
    pub failed_lines: u64,
    /// The first failures in `(j, i)` order, at most [`MAX_LISTED_FAILURES`].
    pub failures: Vec<LineFailure>,
}

pub const MAX_LISTED_FAILURES: usize = 10_000;

impl BoardReport {
    pub fn ok(&self) -> bool {
        self.failed_lines == 0
    }
}

#[derive(Default)]
struct Tally {
    full: u64,
    partial: u64,
    constant: u64,
    affine: u64,
    failed: u64,
    failures: Vec<LineFailure>,
}

fn check_line(board: &Board, classifier: &Classifier, line: LineId, vis: Visibility, t: &mut Tally) {
    let cells = line_cells(board, line);
    match vis {
        Visibility::Full => t.full += 1,
        Visibility::Partial => t.partial += 1,
    }
    let cert = match vis {
        Visibility::Full => {
            let full: Vec<u8> = cells.iter().map(|c| c.unwrap()).collect();
            classifier.classify(&full)
        }
        Visibility::Partial => classifier.classify_partial(&cells),
    };
    match cert {
        Some(Certificate::Constant(_)) => t.constant += 1,
        Some(Certificate::Affine { .. }) => t.affine += 1,
        None => {
            t.failed += 1;
            if t.failures.len() < MAX_LISTED_FAILURES {
                t.failures.push(LineFailure {
                    line,
                    visibility: vis,
                    cells: cells
                        .iter()
                        .enumerate()
                        .filter_map(|(k, v)| v.map(|v| (k + 1, line.row(k + 1) as i64, v)))
                        .collect(),
                });
            }
        }
    }
}

/// Classifies every full line, and in extend mode requires every partial line
/// to admit a certificate consistent with its visible cells.
pub fn verify_board(board: &Board, mode: VerifyMode) -> BoardReport {
    let classifier = Classifier::new(*board.params());
    let slopes: Vec<i64> = match mode {
        VerifyMode::FullOnly => full_slopes(board).collect(),
        VerifyMode::ExtendPartial => visible_slopes(board).collect(),
    };
    let tallies: Vec<Tally> = slopes
        .par_iter()
        .map(|&j| {
            let mut t = Tally::default();
            let partial = mode == VerifyMode::ExtendPartial;
            for (line, vis) in lines_of_slope(board, j, partial) {
                check_line(board, &classifier, line, vis, &mut t);
            }
            t
        })
        .collect();
    let mut report = BoardReport {
        mode,
        full_lines: 0,
        partial_lines: 0,
        constant_lines: 0,
        affine_lines: 0,
        failed_lines: 0,
        failures: Vec::new(),
    };
    for t in tallies {
        report.full_lines += t.full;
        report.partial_lines += t.partial;
        report.constant_lines += t.constant;
        report.affine_lines += t.affine;
        report.failed_lines += t.failed;
        let room = MAX_LISTED_FAILURES - report.failures.len();
        report.failures.extend(t.failures.into_iter().take(room));
    }
    report
}

/// `f_n(i, j) = F(n, jn + i)` on a rectangle of `(i, j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionFamily {
    params: PadicParams,
    i_range: (i64, i64),
    j_range: (i64, i64),
    /// `values[((j - j_lo) * width_i + (i - i_lo)) * N + (n - 1)]`
    values: Vec<u8>,
}

impl FunctionFamily {
    pub fn new(params: PadicParams, i_range: (i64, i64), j_range: (i64, i64), values: Vec<u8>) -> Result<Self> {
        if i_range.0 > i_range.1 || j_range.0 > j_range.1 {
            return Err(Error::InvalidWindow("empty (i, j) window".into()));
        }
        let ni = (i_range.1 - i_range.0 + 1) as usize;
        let nj = (j_range.1 - j_range.0 + 1) as usize;
        if ni.checked_mul(nj).and_then(|c| c.checked_mul(params.width())) != Some(values.len()) {
            return Err(Error::InvalidParams(format!(
                "expected {ni} x {nj} x {} values, got {}",
                params.width(),
                values.len()
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| !params.is_unit(v as u64)) {
            return Err(Error::ValueOutOfRange {
                value: v as i64,
                max: params.p() - 1,
            });
        }
        Ok(FunctionFamily {
            params,
            i_range,
            j_range,
            values,
        })
    }

    pub fn params(&self) -> &PadicParams {
        &self.params
    }

    pub fn i_range(&self) -> (i64, i64) {
        self.i_range
    }

    pub fn j_range(&self) -> (i64, i64) {
        self.j_range
    }

    fn width_i(&self) -> usize {
        (self.i_range.1 - self.i_range.0 + 1) as usize
    }

    fn contains(&self, i: i64, j: i64) -> bool {
        (self.i_range.0..=self.i_range.1).contains(&i) && (self.j_range.0..=self.j_range.1).contains(&j)
    }

    /// `f_n(i, j)`, `None` outside the window.
    pub fn get(&self, n: usize, i: i64, j: i64) -> Option<u8> {
        if n == 0 || n > self.params.width() || !self.contains(i, j) {
            return None;
        }
        let k = (j - self.j_range.0) as usize * self.width_i() + (i - self.i_range.0) as usize;
        Some(self.values[k * self.params.width() + n - 1])
    }

    /// The tuple `(f_1, .., f_N)(i, j)`.
    pub fn tuple(&self, i: i64, j: i64) -> Option<&[u8]> {
        self.contains(i, j).then(|| {
            let w = self.params.width();
            let k = (j - self.j_range.0) as usize * self.width_i() + (i - self.i_range.0) as usize;
            &self.values[k * w..(k + 1) * w]
        })
    }

    /// Points `(n, i, j)` where `f_n(i, j) != f_n(i - n, j + 1)` with both sides in the window.
    pub fn property_i_violations(&self) -> Vec<(usize, i64, i64)> {
        let mut out = Vec::new();
        for j in self.j_range.0..=self.j_range.1 {
            for i in self.i_range.0..=self.i_range.1 {
                for n in 1..=self.params.width() {
                    let there = self.get(n, i - n as i64, j + 1);
                    if there.is_some() && there != self.get(n, i, j) {
                        out.push((n, i, j));
                    }
                }
            }
        }
        out
    }

    /// Points `(i, j)` whose tuple is not in `S^2_p`.
    pub fn property_ii_violations(&self) -> Vec<(i64, i64)> {
        let classifier = Classifier::new(self.params);
        let mut out = Vec::new();
        for j in self.j_range.0..=self.j_range.1 {
            for i in self.i_range.0..=self.i_range.1 {
                if classifier.classify(self.tuple(i, j).unwrap()).is_none() {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// The largest `i` range such that every line `(i, j)` with `|j| <= j_max` is
/// fully inside the board.
pub fn full_rectangle(board: &Board, j_max: i64) -> Result<((i64, i64), (i64, i64))> {
    let reach = j_max
        .checked_mul(board.width() as i64)
        .ok_or(Error::Overflow)?;
    let lo = board.m_lo().checked_add(reach).ok_or(Error::Overflow)?;
    let hi = board.m_hi().checked_sub(reach).ok_or(Error::Overflow)?;
    if j_max < 0 || lo > hi {
        return Err(Error::IncompatibleWindow(format!(
            "no full lines with |j| <= {j_max} in a window of height {}",
            board.height()
        )));
    }
    Ok(((lo, hi), (-j_max, j_max)))
}

pub fn to_functions(board: &Board, i_range: (i64, i64), j_range: (i64, i64)) -> Result<FunctionFamily> {
    if i_range.0 > i_range.1 || j_range.0 > j_range.1 {
        return Err(Error::InvalidWindow("empty (i, j) window".into()));
    }
    let w = board.width();
    let mut values = Vec::new();
    for j in j_range.0..=j_range.1 {
        for i in i_range.0..=i_range.1 {
            for (k, v) in line_cells(board, LineId { j, i }).into_iter().enumerate() {
                values.push(v.ok_or_else(|| {
                    Error::IncompatibleWindow(format!(
                        "line j={j} i={i} leaves the board at n={}",
                        k + 1
                    ))
                })?);
            }
        }
    }
    debug_assert_eq!(values.len() % w, 0);
    FunctionFamily::new(*board.params(), i_range, j_range, values)
}

/// Rebuilds `F(n, m)` on the rows every column of which is determined by the
/// family. Conflicting values are an error.
pub fn from_functions(family: &FunctionFamily) -> Result<Board> {
    let w = family.params.width();
    let (ilo, ihi) = family.i_range;
    let (jlo, jhi) = family.j_range;
    let rows = |j: i64| -> (i128, i128) {
        let a = j as i128 + ilo as i128;
        let b = j as i128 * w as i128 + ilo as i128;
        let c = j as i128 + ihi as i128;
        let d = j as i128 * w as i128 + ihi as i128;
        (a.min(b).min(c).min(d), a.max(b).max(c).max(d))
    };
    let (mut mlo, mut mhi) = (i128::MAX, i128::MIN);
    for j in jlo..=jhi {
        let (a, b) = rows(j);
        mlo = mlo.min(a);
        mhi = mhi.max(b);
    }
    let span = usize::try_from(mhi - mlo + 1)
        .ok()
        .filter(|s| s.checked_mul(w).is_some_and(|c| c <= MAX_CELLS))
        .ok_or_else(|| Error::TooLarge("family spans too many rows".into()))?;
    let mut grid: Vec<Option<u8>> = vec![None; span * w];
    for j in jlo..=jhi {
        for i in ilo..=ihi {
            let tuple = family.tuple(i, j).unwrap();
            for n in 1..=w {
                let m = j as i128 * n as i128 + i as i128;
                let slot = &mut grid[(m - mlo) as usize * w + n - 1];
                match *slot {
                    None => *slot = Some(tuple[n - 1]),
                    Some(v) if v != tuple[n - 1] => {
                        return Err(Error::InconsistentFamily { n, i, j });
                    }
                    Some(_) => {}
                }
            }
        }
    }
    let full: Vec<bool> = grid.chunks(w).map(|r| r.iter().all(|c| c.is_some())).collect();
    let first = full
        .iter()
        .position(|&f| f)
        .ok_or_else(|| Error::IncompatibleWindow("no row is fully determined".into()))?;
    let last = full.iter().rposition(|&f| f).unwrap();
    if full[first..=last].iter().any(|&f| !f) {
        return Err(Error::IncompatibleWindow(
            "fully determined rows are not contiguous".into(),
        ));
    }
    let cells = grid[first * w..(last + 1) * w].iter().map(|c| c.unwrap()).collect();
    let lo = i64::try_from(mlo + first as i128).map_err(|_| Error::Overflow)?;
    let hi = i64::try_from(mlo + last as i128).map_err(|_| Error::Overflow)?;
    Board::new(family.params, lo, hi, cells)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodVerdict {
    pub q: u64,
    /// Least `m` with `F(n, m) != F(n, m + q)`, both in the window.
    pub witness: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnInfo {
    pub n: usize,
    pub constant: bool,
    /// Empty for constant columns.
    pub periods: Vec<PeriodVerdict>,
}

impl ColumnInfo {
    pub fn all_refuted(&self) -> bool {
        !self.constant && self.periods.iter().all(|v| v.witness.is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnReport {
    pub q_max: u64,
    pub columns: Vec<ColumnInfo>,
}

impl ColumnReport {
    pub fn constant_columns(&self) -> Vec<usize> {
        self.columns.iter().filter(|c| c.constant).map(|c| c.n).collect()
    }

    pub fn all_refuted(&self) -> bool {
        self.columns.iter().all(ColumnInfo::all_refuted)
    }
}

/// For every column: constancy, and for each `q <= q_max` a witness against period `q`.
pub fn column_report(board: &Board, q_max: u64) -> Result<ColumnReport> {
    if q_max == 0 {
        return Err(Error::InvalidParams("Q must be at least 1".into()));
    }
    let columns = (1..=board.width())
        .into_par_iter()
        .map(|n| {
            let col = board.column(n);
            let constant = col.iter().all(|&v| v == col[0]);
            let periods = if constant {
                Vec::new()
            } else {
                (1..=q_max)
                    .map(|q| {
                        let witness = (q as usize) < col.len();
                        let witness = witness
                            .then(|| {
                                (0..col.len() - q as usize)
                                    .find(|&k| col[k] != col[k + q as usize])
                                    .map(|k| board.m_lo() + k as i64)
                            })
                            .flatten();
                        PeriodVerdict { q, witness }
                    })
                    .collect()
            };
            ColumnInfo { n, constant, periods }
        })
        .collect();
    Ok(ColumnReport { q_max, columns })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Maximum number of search nodes (cell assignments).
    pub budget: u64,
    /// Stop after this many boards.
    pub max_boards: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: 1_000_000,
            max_boards: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub boards: Vec<Board>,
    pub nodes: u64,
    pub budget_exhausted: bool,
    /// The whole space was explored.
    pub complete: bool,
}

struct BoardSearch<'a> {
    params: PadicParams,
    classifier: Classifier,
    m_lo: i64,
    m_hi: i64,
    width: usize,
    height: usize,
    fixed: &'a [Option<u8>],
    grid: Vec<Option<u8>>,
    /// `lines[cell]`: visible lines through the cell.
    lines: Vec<Vec<LineId>>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl BoardSearch<'_> {
    fn line_values(&self, line: LineId) -> Vec<Option<u8>> {
        (1..=self.width)
            .map(|n| {
                let m = line.row(n);
                if (self.m_lo as i128..=self.m_hi as i128).contains(&m) {
                    self.grid[(m - self.m_lo as i128) as usize * self.width + n - 1]
                } else {
                    None
                }
            })
            .collect()
    }

    fn consistent(&self, cell: usize) -> bool {
        self.lines[cell]
            .iter()
            .all(|&l| self.classifier.classify_partial(&self.line_values(l)).is_some())
    }

    fn run(&mut self, cell: usize, emit: &mut dyn FnMut(Board) -> ControlFlow<()>) -> ControlFlow<()> {
        if cell == self.grid.len() {
            let cells = self.grid.iter().map(|c| c.unwrap()).collect();
            let board = Board::new(self.params, self.m_lo, self.m_hi, cells).expect("valid cells");
            if verify_board(&board, VerifyMode::ExtendPartial).ok() {
                return emit(board);
            }
            return ControlFlow::Continue(());
        }
        let choices: Vec<u8> = match self.fixed[cell] {
            Some(v) => vec![v],
            None => (1..self.params.p() as u8).collect(),
        };
        for v in choices {
            self.nodes += 1;
            if self.nodes > self.budget {
                self.exhausted = true;
                return ControlFlow::Break(());
            }
            self.grid[cell] = Some(v);
            if self.consistent(cell) {
                self.run(cell + 1, emit)?;
            }
            self.grid[cell] = self.fixed[cell];
        }
        ControlFlow::Continue(())
    }
}

/// Backtracking over cells in row-major order, pruning as soon as a visible
/// line admits no certificate. Boards are emitted in lexicographic order of
/// their cells and each one passes `verify_board` in extend mode.
pub fn search_boards_with(
    params: PadicParams,
    m_lo: i64,
    m_hi: i64,
    fixed: &[Option<u8>],
    budget: u64,
    emit: &mut dyn FnMut(Board) -> ControlFlow<()>,
) -> Result<(u64, bool, bool)> {
    let height = window_height(m_lo, m_hi)?;
    let width = params.width();
    let total = height * width;
    if total > 1 << 16 {
        return Err(Error::TooLarge(format!("search window [{m_lo}, {m_hi}]")));
    }
    if fixed.len() != total {
        return Err(Error::InvalidParams(format!(
            "partial assignment has {} cells, expected {total}",
            fixed.len()
        )));
    }
    if let Some(v) = fixed.iter().flatten().find(|&&v| !params.is_unit(v as u64)) {
        return Err(Error::ValueOutOfRange {
            value: *v as i64,
            max: params.p() - 1,
        });
    }
    // Any board on the window, used only to enumerate its visible lines.
    let probe = Board::new(params, m_lo, m_hi, vec![1; total])?;
    let mut lines = vec![Vec::new(); total];
    for (line, _) in visible_lines(&probe) {
        for n in 1..=width {
            let m = line.row(n);
            if (m_lo as i128..=m_hi as i128).contains(&m) {
                lines[(m - m_lo as i128) as usize * width + n - 1].push(line);
            }
        }
    }
    let mut search = BoardSearch {
        params,
        classifier: Classifier::new(params),
        m_lo,
        m_hi,
        width,
        height,
        fixed,
        grid: fixed.to_vec(),
        lines,
        nodes: 0,
        budget,
        exhausted: false,
    };
    // The fixed cells alone must already be consistent.
    let fixed_ok = (0..total).all(|c| fixed[c].is_none() || search.consistent(c));
    let mut stopped = false;
    if fixed_ok && search.height > 0 {
        stopped = search.run(0, emit).is_break();
    }
    Ok((search.nodes, search.exhausted, !stopped))
}

/// Collecting wrapper over [`search_boards_with`].
pub fn search_boards(
    params: PadicParams,
    m_lo: i64,
    m_hi: i64,
    fixed: &[Option<u8>],
    config: SearchConfig,
) -> Result<SearchOutcome> {
    let mut boards = Vec::new();
    let max = config.max_boards;
    let (nodes, budget_exhausted, complete) =
        search_boards_with(params, m_lo, m_hi, fixed, config.budget, &mut |b| {
            boards.push(b);
            if max.is_some_and(|k| boards.len() >= k) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })?;
    Ok(SearchOutcome {
        boards,
        nodes,
        budget_exhausted,
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::fp;
    use proptest::prelude::*;

    fn p5() -> PadicParams {
        PadicParams::s2(5).unwrap()
    }

    fn p3() -> PadicParams {
        PadicParams::s2(3).unwrap()
    }

    #[test]
    fn generator_examples() {
        let b = gen_affine(p5(), 0, 10, 0, 0, 1).unwrap();
        assert!(b.cells().iter().all(|&v| v == 1));
        let b = gen_affine(p5(), 0, 30, 0, 1, 0).unwrap();
        for m in 0..=30 {
            assert!(b.row(m).unwrap().iter().all(|&v| v as u64 == fp(5, m)));
        }
        let b = gen_affine(p5(), 0, 10, 1, 1, 0).unwrap();
        assert_eq!(b.get(2, 3), Some(1));
        assert_eq!(fp(5, 5), 1);
    }

    #[test]
    fn height_one_window_has_only_rows() {
        let b = gen_affine(p5(), 7, 7, 0, 1, 0).unwrap();
        let lines = visible_lines(&b);
        assert_eq!(lines, vec![(LineId { j: 0, i: 7 }, Visibility::Full)]);
    }

    // Interval oracle: a line is full iff both endpoints n = 1 and n = N are in the window.
    #[test]
    fn full_lines_match_endpoint_oracle() {
        let b = gen_affine(p5(), 0, 624, 0, 1, 0).unwrap();
        let lines = full_lines(&b);
        let mut oracle = Vec::new();
        for j in -30i64..=30 {
            for i in -800i64..=800 {
                let (a, z) = (j + i, 25 * j + i);
                if (0..=624).contains(&a) && (0..=624).contains(&z) {
                    oracle.push(LineId { j, i });
                }
            }
        }
        assert_eq!(lines, oracle);
        assert!(lines.iter().all(|l| l.j.abs() * 24 <= 624));
        let from_visible: Vec<LineId> = visible_lines(&b)
            .into_iter()
            .filter(|(_, v)| *v == Visibility::Full)
            .map(|(l, _)| l)
            .collect();
        assert_eq!(from_visible, oracle);
    }

    #[test]
    fn partial_lines_have_two_cells() {
        let b = gen_affine(p3(), 0, 4, 0, 1, 0).unwrap();
        for (line, vis) in visible_lines(&b) {
            let seen = line_cells(&b, line).iter().filter(|c| c.is_some()).count();
            match vis {
                Visibility::Full => assert_eq!(seen, 9),
                Visibility::Partial => assert!((2..9).contains(&seen)),
            }
        }
        // brute force count of lines with >= 2 visible cells
        let mut count = 0;
        for j in -10i64..=10 {
            for i in -100i64..=100 {
                let seen = (1..=9).filter(|&n| (0..=4).contains(&(j * n + i))).count();
                if seen >= 2 {
                    count += 1;
                }
            }
        }
        assert_eq!(visible_lines(&b).len(), count);
    }

    #[test]
    fn constant_and_affine_boards_verify() {
        let b = gen_affine(p5(), -50, 50, 0, 0, 3).unwrap();
        let r = verify_board(&b, VerifyMode::ExtendPartial);
        assert!(r.ok());
        assert_eq!(r.affine_lines, 0);
        for (a, bb, c) in [(1, 1, 0), (2, 3, 4), (0, 1, 0), (4, 0, 2)] {
            let b = gen_affine(p5(), 0, 120, a, bb, c).unwrap();
            assert!(verify_board(&b, VerifyMode::FullOnly).ok(), "{a} {bb} {c}");
        }
        let b = gen_affine(p3(), -3, 20, 1, 2, 1).unwrap();
        assert!(verify_board(&b, VerifyMode::ExtendPartial).ok());
    }

    #[test]
    fn corrupted_cell_is_reported() {
        let mut b = gen_affine(p5(), 0, 124, 0, 1, 0).unwrap();
        // Row 26: f_5(26) = 1; on the horizontal line every cell is 1 so a
        // single 2 breaks constancy and no affine certificate fits a row.
        b.set(3, 26, 2).unwrap();
        let r = verify_board(&b, VerifyMode::FullOnly);
        assert!(!r.ok());
        let row = LineId { j: 0, i: 26 };
        let failure = r.failures.iter().find(|f| f.line == row).expect("row reported");
        assert!(failure.cells.contains(&(3, 26, 2)));
    }

    #[test]
    fn function_family_round_trip() {
        let b = gen_affine(p5(), 0, 300, 0, 1, 0).unwrap();
        let (ir, jr) = full_rectangle(&b, 2).unwrap();
        let fam = to_functions(&b, ir, jr).unwrap();
        assert!(fam.property_i_violations().is_empty());
        assert!(fam.property_ii_violations().is_empty());
        for j in jr.0..=jr.1 {
            for i in [ir.0, ir.0 + 7, ir.1] {
                for n in [1usize, 5, 25] {
                    assert_eq!(fam.get(n, i, j).unwrap() as u64, fp(5, j * n as i64 + i));
                }
            }
        }
        let back = from_functions(&fam).unwrap();
        assert_eq!(back, b.restrict(back.m_lo(), back.m_hi()).unwrap());
        assert!(back.m_lo() <= ir.0 && back.m_hi() >= ir.1);
    }

    #[test]
    fn constant_board_functions_are_constant() {
        let b = gen_affine(p3(), 0, 40, 0, 0, 2).unwrap();
        let (ir, jr) = full_rectangle(&b, 1).unwrap();
        let fam = to_functions(&b, ir, jr).unwrap();
        assert!(fam.values.iter().all(|&v| v == 2));
    }

    #[test]
    fn incompatible_family_window() {
        let b = gen_affine(p3(), 0, 10, 0, 1, 0).unwrap();
        assert!(matches!(to_functions(&b, (0, 5), (1, 1)), Err(Error::IncompatibleWindow(_))));
        assert!(full_rectangle(&b, 2).is_err());
    }

    #[test]
    fn inconsistent_family_rejected() {
        let params = p3();
        let mut vals = vec![1u8; 2 * 9];
        vals[9] = 2; // f_1(0, 1) = 2 while f_1(1, 0) = 1 names the same cell (1, 1)
        let fam = FunctionFamily::new(params, (0, 1), (0, 0), vec![1; 18]).unwrap();
        assert!(from_functions(&fam).is_ok());
        let fam = FunctionFamily::new(params, (0, 0), (0, 1), vals).unwrap();
        // (i,j) = (0,0) row 0 and (0,1) gives rows 1..9; no overlap, still consistent
        assert!(from_functions(&fam).is_ok());
        let mut vals = vec![1u8; 2 * 2 * 9];
        // (i,j)=(1,0): cell (1,1); (i,j)=(0,1): cell (1,1)
        vals[2 * 9] = 2;
        let fam = FunctionFamily::new(params, (0, 1), (0, 1), vals).unwrap();
        assert!(matches!(from_functions(&fam), Err(Error::InconsistentFamily { n: 1, .. })));
    }

    #[test]
    fn column_reports() {
        let b = gen_affine(p5(), 0, 100, 0, 0, 4).unwrap();
        let r = column_report(&b, 10).unwrap();
        assert!(r.columns.iter().all(|c| c.constant && c.periods.is_empty()));

        let b = gen_affine(p5(), 0, 624, 0, 1, 0).unwrap();
        let r = column_report(&b, 125).unwrap();
        assert!(r.all_refuted());
        for c in &r.columns {
            for v in &c.periods {
                let m = v.witness.unwrap();
                assert_ne!(b.get(c.n, m), b.get(c.n, m + v.q as i64));
            }
        }

        let b = gen_affine(p5(), 0, 200, 1, 0, 3).unwrap();
        assert_eq!(column_report(&b, 5).unwrap().constant_columns().len(), 25);
        assert!(column_report(&b, 0).is_err());
    }

    #[test]
    fn short_window_leaves_periods_undecided() {
        let b = gen_affine(p5(), 1, 4, 0, 1, 0).unwrap();
        let r = column_report(&b, 6).unwrap();
        let v = &r.columns[0].periods;
        assert!(v[3].witness.is_none() && v[5].witness.is_none());
    }

    #[test]
    fn search_finds_constant_boards() {
        let params = p3();
        let out = search_boards(params, 0, 2, &[None; 27], SearchConfig::default()).unwrap();
        assert!(out.complete && !out.budget_exhausted);
        for c in [1u8, 2] {
            assert!(out.boards.iter().any(|b| b.cells().iter().all(|&v| v == c)));
        }
        for b in &out.boards {
            assert!(verify_board(b, VerifyMode::ExtendPartial).ok());
        }
        let mut sorted = out.boards.clone();
        sorted.sort_by(|a, b| a.cells().cmp(b.cells()));
        assert_eq!(sorted, out.boards);
    }

    #[test]
    fn search_with_bad_row_is_empty() {
        let params = p3();
        let classifier = Classifier::new(params);
        let row = [1u8, 2, 2, 1, 1, 2, 2, 2, 1];
        assert!(classifier.classify(&row).is_none());
        let mut fixed = vec![None; 27];
        for (k, &v) in row.iter().enumerate() {
            fixed[9 + k] = Some(v);
        }
        let out = search_boards(params, 0, 2, &fixed, SearchConfig::default()).unwrap();
        assert!(out.boards.is_empty());
        assert!(out.complete);
    }

    #[test]
    fn search_recovers_seeded_generator() {
        let params = p3();
        let target = gen_affine(params, 0, 2, 0, 1, 0).unwrap();
        let mut fixed = vec![None; 27];
        for m in 0..=2 {
            fixed[m as usize * 9] = target.get(1, m);
        }
        let out = search_boards(params, 0, 2, &fixed, SearchConfig::default()).unwrap();
        assert!(out.boards.contains(&target));
    }

    #[test]
    fn search_budget_is_reported() {
        let out = search_boards(p3(), 0, 2, &[None; 27], SearchConfig { budget: 5, max_boards: None }).unwrap();
        assert!(out.budget_exhausted);
    }

    proptest! {
        #[test]
        fn generators_verify(p in prop::sample::select(vec![3u64, 5, 7]), a in -20i64..20, b in -20i64..20,
                             c in -50i64..50, lo in -200i64..200) {
            let params = PadicParams::s2(p).unwrap();
            let board = gen_affine(params, lo, lo + 3 * (p * p) as i64, a, b, c).unwrap();
            prop_assert!(verify_board(&board, VerifyMode::FullOnly).ok());
        }

        #[test]
        fn family_round_trip(a in -9i64..9, b in -9i64..9, c in -9i64..9, lo in -50i64..50) {
            let board = gen_affine(p3(), lo, lo + 60, a, b, c).unwrap();
            let (ir, jr) = full_rectangle(&board, 2).unwrap();
            let fam = to_functions(&board, ir, jr).unwrap();
            prop_assert!(fam.property_i_violations().is_empty());
            let back = from_functions(&fam).unwrap();
            prop_assert_eq!(&back, &board.restrict(back.m_lo(), back.m_hi()).unwrap());
            let (ir2, jr2) = full_rectangle(&back, 0).unwrap();
            let again = to_functions(&back, ir2, jr2).unwrap();
            prop_assert_eq!(again, to_functions(&board, ir2, jr2).unwrap());
        }
    }
}
