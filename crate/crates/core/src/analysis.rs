//! Almost-affine structure of Sudoku boards across p-adic scales.
//!
//! A verified board should satisfy `F(n, m) = An + Bm + C (mod p)` wherever
//! the right side is nonzero. Normalizing to `(A, B, C) = (0, 1, 0)` and
//! rescaling rows by `p` (the tetris move) exposes the next digit, and the
//! vertical coefficient `B` should be the same at every scale.

use std::fmt;

use crate::error::{Error, Result};
use crate::padic::{inverse_mod, Certificate, PadicParams};
use crate::sudoku::{column_report, verify_board, Board, ColumnReport, VerifyMode};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineFit {
    pub a: u64,
    pub b: u64,
    /// Positions `n` with `An + B = 0 (mod p)`, where the line is unconstrained.
    pub exceptional: Vec<usize>,
}

impl fmt::Display for LineFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A={} B={}", self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BoardFit {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

impl fmt::Display for BoardFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A={} B={} C={}", self.a, self.b, self.c)
    }
}

/// Cells `(n, m, value)` with `value != 0`; `m = 0` for single lines.
type Cell = (usize, i64, u8);

fn consistent(p: u64, coeffs: (u64, u64, u64), cell: &Cell) -> bool {
    let (a, b, c) = coeffs;
    let (n, m, v) = *cell;
    let l = (a * (n as u64 % p) + b * m.rem_euclid(p as i64) as u64 + c) % p;
    l == 0 || l == v as u64
}

/// A small set of cells that no candidate fits: grown greedily, then pruned
/// until every remaining cell is needed.
fn inconsistency_witness(p: u64, candidates: &[(u64, u64, u64)], cells: &[Cell]) -> Vec<Cell> {
    let mut alive: Vec<(u64, u64, u64)> = candidates.to_vec();
    let mut chosen: Vec<Cell> = Vec::new();
    for cell in cells {
        if alive.is_empty() {
            break;
        }
        let before = alive.len();
        alive.retain(|&k| consistent(p, k, cell));
        if alive.len() < before {
            chosen.push(*cell);
        }
    }
    let fits = |set: &[Cell]| candidates.iter().any(|&k| set.iter().all(|c| consistent(p, k, c)));
    let mut k = 0;
    while k < chosen.len() {
        let mut trial = chosen.clone();
        trial.remove(k);
        if fits(&trial) {
            k += 1;
        } else {
            chosen = trial;
        }
    }
    chosen
}

/// `(A, B)` read off a certificate: `Constant(c) -> (0, c)`,
/// `Affine(t, h) -> (h, -h t)`, since `h f_p(n - t) = h (n - t) mod p` off `t + pZ`.
pub fn certificate_line_fit(params: &PadicParams, cert: &Certificate) -> (u64, u64) {
    let p = params.p();
    match *cert {
        Certificate::Constant(c) => (0, c as u64),
        Certificate::Affine { t, h } => {
            let h = h as u64;
            (h, (p - (h * (t % p)) % p) % p)
        }
    }
}

/// Least `(A, B) != (0, 0)` in lexicographic order with `g(n) = An + B`
/// wherever `An + B != 0`, over the visible positions of the line.
pub fn fit_line(params: &PadicParams, line: &[Option<u8>]) -> Result<LineFit> {
    let p = params.p();
    if line.len() != params.width() {
        return Err(Error::InvalidParams(format!(
            "line has {} positions, expected {}",
            line.len(),
            params.width()
        )));
    }
    let cells: Vec<Cell> = line
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|v| (k + 1, 0, v)))
        .collect();
    if let Some(&(_, _, v)) = cells.iter().find(|c| !params.is_unit(c.2 as u64)) {
        return Err(Error::ValueOutOfRange {
            value: v as i64,
            max: p - 1,
        });
    }
    let candidates: Vec<(u64, u64, u64)> = (0..p)
        .flat_map(|a| (0..p).map(move |b| (a, 0, b)))
        .filter(|&(a, _, b)| (a, b) != (0, 0))
        .collect();
    // (A, 0, B) evaluates A n + B with m fixed at 0
    for &(a, z, b) in &candidates {
        if cells.iter().all(|cell| consistent(p, (a, z, b), cell)) {
            return Ok(LineFit {
                a,
                b,
                exceptional: (1..=params.width())
                    .filter(|&n| (a * (n as u64 % p) + b).is_multiple_of(p))
                    .collect(),
            });
        }
    }
    Err(Error::NotAlmostAffine {
        cells: inconsistency_witness(p, &candidates, &cells),
    })
}

/// Least `(A, B, C) != 0` in lexicographic order with
/// `F(n, m) = An + Bm + C` wherever the right side is nonzero.
pub fn fit_board(board: &Board) -> Result<BoardFit> {
    let p = board.p();
    let w = board.width();
    let candidates: Vec<(u64, u64, u64)> = (0..p)
        .flat_map(|a| (0..p).flat_map(move |b| (0..p).map(move |c| (a, b, c))))
        .skip(1)
        .collect();
    let cells = board.cells();
    let at = |k: usize| -> Cell { (k % w + 1, board.m_lo() + (k / w) as i64, cells[k]) };
    for &k in &candidates {
        if (0..cells.len()).all(|i| consistent(p, k, &at(i))) {
            return Ok(BoardFit {
                a: k.0,
                b: k.1,
                c: k.2,
            });
        }
    }
    let all: Vec<Cell> = (0..cells.len()).map(at).collect();
    Err(Error::NotAlmostAffine {
        cells: inconsistency_witness(p, &candidates, &all),
    })
}

fn min_rep(x: u64, p: u64) -> i64 {
    let x = (x % p) as i64;
    if 2 * x > p as i64 {
        x - p as i64
    } else {
        x
    }
}

/// The column shift `delta(n) = alpha n + gamma` used by [`normalize_board`],
/// with `alpha = A/B` and `gamma = C/B` taken as least-magnitude residues mod p.
pub fn normalization_shift(p: u64, fit: &BoardFit) -> Result<(i64, i64)> {
    if fit.b.is_multiple_of(p) {
        return Err(Error::DegenerateNormalization);
    }
    let inv = inverse_mod(fit.b, p).expect("unit");
    Ok((min_rep(inv * fit.a % p, p), min_rep(inv * fit.c % p, p)))
}

/// `F'(n, m) = B^-1 F(n, m - delta(n))` with `delta` from
/// [`normalization_shift`]; `F'` fits `(0, 1, 0)`. Because the shift is
/// affine in `n`, lines map to lines and `F'` verifies whenever `F` does.
/// The window shrinks to the rows defined in every column.
pub fn normalize_board(board: &Board, fit: &BoardFit) -> Result<Board> {
    let p = board.p();
    let (alpha, gamma) = normalization_shift(p, fit)?;
    let inv = inverse_mod(fit.b % p, p).expect("unit");
    let w = board.width() as i64;
    let deltas: Vec<i64> = (1..=w).map(|n| alpha * n + gamma).collect();
    let dmax = *deltas.iter().max().unwrap();
    let dmin = *deltas.iter().min().unwrap();
    let lo = board.m_lo().checked_add(dmax).ok_or(Error::Overflow)?;
    let hi = board.m_hi().checked_add(dmin).ok_or(Error::Overflow)?;
    if lo > hi {
        return Err(Error::WindowTooShort(format!(
            "normalizing shifts of up to {} rows empty the window [{}, {}]",
            dmax - dmin,
            board.m_lo(),
            board.m_hi()
        )));
    }
    Board::from_fn(*board.params(), lo, hi, |n, m| {
        let v = board.get(n, m - deltas[n - 1]).expect("row inside window");
        ((v as u64 * inv) % p) as u8
    })
}

/// `F_1(n, m) = F(n, pm)` on every `m` with `pm` in the window.
pub fn tetris(board: &Board) -> Result<Board> {
    let p = board.p() as i64;
    if (board.height() as i64) < p {
        return Err(Error::WindowTooShort(format!(
            "height {} is less than p = {p}",
            board.height()
        )));
    }
    let lo = board.m_lo().div_euclid(p) + i64::from(board.m_lo().rem_euclid(p) != 0);
    let hi = board.m_hi().div_euclid(p);
    Board::from_fn(*board.params(), lo, hi, |n, m| board.get(n, p * m).unwrap())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TetrisReport {
    pub board: Board,
    pub input_verified: bool,
    /// Re-verification of the image, when the input verified.
    pub output_verified: Option<bool>,
}

/// [`tetris`] plus full-line verification of input and image.
pub fn tetris_checked(board: &Board) -> Result<TetrisReport> {
    let image = tetris(board)?;
    let input_verified = verify_board(board, VerifyMode::FullOnly).ok();
    let output_verified = input_verified.then(|| verify_board(&image, VerifyMode::FullOnly).ok());
    Ok(TetrisReport {
        board: image,
        input_verified,
        output_verified,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleMode {
    /// Fit the plain s-fold tetris images; match `B_{s+1} = B_s`.
    Raw,
    /// Normalize before every tetris move; match `B_{s+1} = 1`.
    Normalized,
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleMode::Raw => "raw",
            ScaleMode::Normalized => "normalized",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleEntry {
    pub scale: usize,
    pub window: (i64, i64),
    pub fit: BoardFit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleReport {
    pub mode: ScaleMode,
    pub scales: Vec<ScaleEntry>,
    /// `matches[s]` compares scale `s + 1` against scale `s`.
    pub matches: Vec<bool>,
    /// First scale whose board failed verification.
    pub failure: Option<usize>,
}

impl ScaleReport {
    pub fn all_match(&self) -> bool {
        self.failure.is_none() && self.matches.iter().all(|&m| m)
    }

    pub fn mismatches(&self) -> Vec<usize> {
        self.matches
            .iter()
            .enumerate()
            .filter(|(_, &m)| !m)
            .map(|(s, _)| s)
            .collect()
    }
}

/// Fits scales `0..=depth`, applying a tetris move (after normalization in
/// [`ScaleMode::Normalized`]) between consecutive scales.
pub fn scale_report(board: &Board, depth: usize, mode: ScaleMode) -> Result<ScaleReport> {
    let mut report = ScaleReport {
        mode,
        scales: Vec::new(),
        matches: Vec::new(),
        failure: None,
    };
    let mut current = board.clone();
    for s in 0..=depth {
        if current.height() < 2 {
            return Err(Error::WindowTooShort(format!(
                "scale {s} has {} row(s); depth {depth} needs a taller window",
                current.height()
            )));
        }
        if !verify_board(&current, VerifyMode::FullOnly).ok() {
            report.failure = Some(s);
            break;
        }
        let fit = fit_board(&current)?;
        if let Some(prev) = report.scales.last() {
            let expected = match mode {
                ScaleMode::Raw => prev.fit.b,
                ScaleMode::Normalized => 1,
            };
            report.matches.push(fit.b == expected);
        }
        report.scales.push(ScaleEntry {
            scale: s,
            window: (current.m_lo(), current.m_hi()),
            fit,
        });
        if s == depth {
            break;
        }
        let next = match mode {
            ScaleMode::Raw => current,
            ScaleMode::Normalized => normalize_board(&current, &fit)?,
        };
        current = tetris(&next)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AperiodicityCertificate {
    pub columns: ColumnReport,
    pub scales: ScaleReport,
}

impl AperiodicityCertificate {
    /// Every column refutes every period up to `Q` inside the window.
    pub fn all_refuted(&self) -> bool {
        self.columns.all_refuted()
    }
}

/// Window-scale evidence against periodic columns. Requires that no column is constant.
pub fn aperiodicity_certificate(board: &Board, q_max: u64, depth: usize, mode: ScaleMode) -> Result<AperiodicityCertificate> {
    let columns = column_report(board, q_max)?;
    if let Some(n) = columns.constant_columns().first() {
        return Err(Error::ConstantColumn(*n));
    }
    let scales = scale_report(board, depth, mode)?;
    Ok(AperiodicityCertificate { columns, scales })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{fp, Classifier};
    use crate::sudoku::gen_affine;
    use proptest::prelude::*;

    fn p5() -> PadicParams {
        PadicParams::s2(5).unwrap()
    }

    fn p3() -> PadicParams {
        PadicParams::s2(3).unwrap()
    }

    fn visible(v: &[u8]) -> Vec<Option<u8>> {
        v.iter().map(|&x| Some(x)).collect()
    }

    #[test]
    fn line_fit_examples() {
        let f = fit_line(&p5(), &visible(&[3; 25])).unwrap();
        assert_eq!((f.a, f.b), (0, 3));
        assert!(f.exceptional.is_empty());
        let line: Vec<u8> = (1..=25).map(|n| fp(5, n - 2) as u8).collect();
        let f = fit_line(&p5(), &visible(&line)).unwrap();
        assert_eq!((f.a, f.b), (1, 3));
        assert_eq!(f.exceptional, vec![2, 7, 12, 17, 22]);
    }

    #[test]
    fn line_fit_failure_has_witness() {
        let mut line: Vec<u8> = (1..=25).map(|n| fp(5, n) as u8).collect();
        line[0] = 2;
        line[1] = 4;
        line[2] = 1;
        let err = fit_line(&p5(), &visible(&line)).unwrap_err();
        let Error::NotAlmostAffine { cells } = err else { panic!() };
        assert!(cells.len() >= 2);
        // the witness alone admits no fit
        let mut sub = vec![None; 25];
        for &(n, _, v) in &cells {
            sub[n - 1] = Some(v);
        }
        assert!(fit_line(&p5(), &sub).is_err());
    }

    // Every S^2_3 line (all 512 two-valued lines on 9 points) gets a fit that
    // matches the certificate's affine reading off its zero set.
    #[test]
    fn certificates_give_fits() {
        let params = p3();
        let classifier = Classifier::new(params);
        for mask in 0u32..512 {
            let line: Vec<u8> = (0..9).map(|k| 1 + (mask >> k & 1) as u8).collect();
            let Some(cert) = classifier.classify(&line) else { continue };
            let (a, b) = certificate_line_fit(&params, &cert);
            for (k, &v) in line.iter().enumerate() {
                let l = (a * (k as u64 + 1) + b) % 3;
                assert!(l == 0 || l == v as u64, "{cert} at {}", k + 1);
            }
            let fit = fit_line(&params, &visible(&line)).unwrap();
            assert!((fit.a, fit.b) <= (a, b));
        }
    }

    #[test]
    fn board_fit_examples() {
        let b = gen_affine(p5(), 0, 124, 0, 1, 0).unwrap();
        assert_eq!(fit_board(&b).unwrap(), BoardFit { a: 0, b: 1, c: 0 });
        let b = gen_affine(p5(), 0, 124, 0, 0, 3).unwrap();
        assert_eq!(fit_board(&b).unwrap(), BoardFit { a: 0, b: 0, c: 3 });
        let b = gen_affine(p5(), 0, 124, 1, 1, 1).unwrap();
        assert_eq!(fit_board(&b).unwrap(), BoardFit { a: 1, b: 1, c: 1 });
    }

    #[test]
    fn board_fit_failure() {
        let mut b = gen_affine(p5(), 0, 49, 0, 1, 0).unwrap();
        b.set(1, 1, 3).unwrap();
        b.set(2, 2, 4).unwrap();
        b.set(3, 0, 1).unwrap();
        b.set(4, 3, 2).unwrap();
        assert!(matches!(fit_board(&b), Err(Error::NotAlmostAffine { .. })));
    }

    #[test]
    fn normalization() {
        let b = gen_affine(p5(), 0, 200, 1, 1, 0).unwrap();
        let fit = fit_board(&b).unwrap();
        let nb = normalize_board(&b, &fit).unwrap();
        assert_eq!(fit_board(&nb).unwrap(), BoardFit { a: 0, b: 1, c: 0 });
        assert!(verify_board(&nb, VerifyMode::FullOnly).ok());

        let b = gen_affine(p5(), 0, 60, 0, 1, 0).unwrap();
        let nb = normalize_board(&b, &fit_board(&b).unwrap()).unwrap();
        assert_eq!(nb, b);

        let b = gen_affine(p5(), 0, 60, 2, 0, 1).unwrap();
        assert_eq!(
            normalize_board(&b, &fit_board(&b).unwrap()),
            Err(Error::DegenerateNormalization)
        );
    }

    #[test]
    fn tetris_examples() {
        let b = gen_affine(p5(), 0, 624, 0, 1, 0).unwrap();
        let t = tetris_checked(&b).unwrap();
        assert_eq!(t.board, gen_affine(p5(), 0, 124, 0, 1, 0).unwrap());
        assert_eq!(t.output_verified, Some(true));
        let c = gen_affine(p5(), 0, 30, 0, 0, 2).unwrap();
        assert!(tetris(&c).unwrap().cells().iter().all(|&v| v == 2));
        let short = gen_affine(p5(), 0, 3, 0, 1, 0).unwrap();
        assert!(matches!(tetris(&short), Err(Error::WindowTooShort(_))));
        let neg = gen_affine(p5(), -7, 13, 0, 1, 0).unwrap();
        let t = tetris(&neg).unwrap();
        assert_eq!((t.m_lo(), t.m_hi()), (-1, 2));
    }

    #[test]
    fn scale_reports() {
        let b = gen_affine(p5(), 0, 624, 0, 1, 0).unwrap();
        let r = scale_report(&b, 2, ScaleMode::Raw).unwrap();
        assert!(r.all_match());
        assert!(r.scales.iter().all(|s| s.fit == BoardFit { a: 0, b: 1, c: 0 }));

        let c = gen_affine(p5(), 0, 624, 0, 0, 4).unwrap();
        let r = scale_report(&c, 2, ScaleMode::Raw).unwrap();
        assert!(r.all_match());
        assert!(r.scales.iter().all(|s| s.fit == BoardFit { a: 0, b: 0, c: 4 }));

        // A shifted generator loses its vertical coefficient under the raw
        // move but keeps it once normalized.
        let s = gen_affine(p5(), 0, 624, 0, 2, 1).unwrap();
        assert!(!scale_report(&s, 1, ScaleMode::Raw).unwrap().all_match());
        assert!(scale_report(&s, 2, ScaleMode::Normalized).unwrap().all_match());

        let short = gen_affine(p5(), 0, 30, 0, 1, 0).unwrap();
        assert!(scale_report(&short, 3, ScaleMode::Raw).is_err());
    }

    #[test]
    fn corrupted_tetris_image_is_reported() {
        let mut b = gen_affine(p5(), 0, 624, 0, 1, 0).unwrap();
        // only rows divisible by 5 survive the move; corrupt one of them at scale 1
        b.set(7, 5 * 26, 3).unwrap();
        let r = scale_report(&b, 2, ScaleMode::Raw).unwrap();
        assert_eq!(r.failure, Some(0));
        let t = tetris_checked(&b).unwrap();
        assert!(!t.input_verified && t.output_verified.is_none());
    }

    #[test]
    fn certificate_requires_nonconstant_columns() {
        let b = gen_affine(p5(), 0, 249, 0, 1, 0).unwrap();
        let cert = aperiodicity_certificate(&b, 25, 2, ScaleMode::Raw).unwrap();
        assert!(cert.all_refuted());
        let b = gen_affine(p5(), 0, 249, 1, 0, 0).unwrap();
        assert_eq!(aperiodicity_certificate(&b, 25, 1, ScaleMode::Raw), Err(Error::ConstantColumn(1)));
        let b = gen_affine(p5(), 0, 249, 0, 0, 1).unwrap();
        assert!(matches!(aperiodicity_certificate(&b, 25, 1, ScaleMode::Raw), Err(Error::ConstantColumn(_))));
    }

    proptest! {
        #[test]
        fn normalized_boards_fit_unit_and_verify(a in 0i64..5, b in 1i64..5, c in 0i64..5, lo in -100i64..100) {
            let board = gen_affine(p5(), lo, lo + 200, a, b, c).unwrap();
            let fit = fit_board(&board).unwrap();
            let nb = normalize_board(&board, &fit).unwrap();
            prop_assert_eq!(fit_board(&nb).unwrap(), BoardFit { a: 0, b: 1, c: 0 });
            prop_assert!(verify_board(&nb, VerifyMode::FullOnly).ok());
        }

        #[test]
        fn tetris_preserves_verification(a in -6i64..6, b in -6i64..6, c in -30i64..30) {
            let board = gen_affine(p3(), 0, 120, a, b, c).unwrap();
            let t = tetris_checked(&board).unwrap();
            prop_assert_eq!(t.output_verified, Some(true));
        }

        #[test]
        fn vertical_generators_match_across_scales(b in 1i64..5, c in 0i64..25) {
            let board = gen_affine(p5(), 0, 624, 0, b, c).unwrap();
            let mode = if c == 0 { ScaleMode::Raw } else { ScaleMode::Normalized };
            prop_assert!(scale_report(&board, 2, mode).unwrap().all_match());
        }
    }
}
