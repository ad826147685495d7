use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};

use tileforge::analysis::{scale_report, ScaleMode};
use tileforge::io::{parse_board_file, write_board, write_board_file, BoardFile};
use tileforge::padic::PadicParams;
use tileforge::render::{render_ascii, render_pgm, Format, Shading};
use tileforge::sudoku::{column_report, gen_affine, search_boards, verify_board, Board, SearchConfig, VerifyMode};

use crate::{emit, read_input, CliError, CliResult, RunConfig, Verdict};

/// `lo:hi`, inclusive.
#[derive(Clone, Copy, Debug)]
pub struct Window(i64, i64);

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("window `{s}` is not lo:hi"))?;
        let lo: i64 = lo.trim().parse().map_err(|_| format!("bad window start `{lo}`"))?;
        let hi: i64 = hi.trim().parse().map_err(|_| format!("bad window end `{hi}`"))?;
        if lo > hi {
            return Err(format!("empty window {lo}:{hi}"));
        }
        Ok(Window(lo, hi))
    }
}

/// `a,b,c`.
#[derive(Clone, Copy, Debug)]
pub struct Generator(i64, i64, i64);

impl std::str::FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<i64> = s
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| format!("bad coefficient `{t}`")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [a, b, c] => Ok(Generator(a, b, c)),
            _ => Err(format!("`{s}` is not a,b,c")),
        }
    }
}

/// A fixed cell `n,m,v` for board search.
#[derive(Clone, Copy, Debug)]
pub struct Fixed(usize, i64, u8);

impl std::str::FromStr for Fixed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || format!("`{s}` is not n,m,value");
        match parts[..] {
            [n, m, v] => Ok(Fixed(
                n.parse().map_err(|_| bad())?,
                m.parse().map_err(|_| bad())?,
                v.parse().map_err(|_| bad())?,
            )),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Partial {
    /// Check full lines only.
    Skip,
    /// Also require partially visible lines to extend.
    Extend,
}

#[derive(Debug, Subcommand)]
pub enum SudokuCommand {
    /// Write the board F(n, m) = f_p(an + bm + c).
    Gen {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true)]
        b: i64,
        #[arg(long, allow_hyphen_values = true)]
        c: i64,
        /// Rows `lo:hi`.
        #[arg(long, allow_hyphen_values = true)]
        window: Window,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every visible non-vertical line.
    Verify {
        #[arg(long)]
        board: PathBuf,
        #[arg(long, value_enum, default_value = "skip")]
        partial: Partial,
    },
    /// Refute every column period up to Q with witnesses.
    Columns {
        #[arg(long)]
        board: PathBuf,
        #[arg(long = "Q")]
        q: u64,
    },
    /// Backtracking search for boards whose lines all lie in the class.
    Search {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        window: Window,
        /// Preset cell `n,m,value`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        fix: Vec<Fixed>,
        #[arg(long, default_value_t = 1)]
        max_boards: usize,
        /// Write boards here as board_NNNN.board instead of printing them.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Same as the top-level `render`.
    Render(RenderArgs),
}

impl SudokuCommand {
    pub fn name(&self) -> &'static str {
        match self {
            SudokuCommand::Gen { .. } => "gen",
            SudokuCommand::Verify { .. } => "verify",
            SudokuCommand::Columns { .. } => "columns",
            SudokuCommand::Search { .. } => "search",
            SudokuCommand::Render(_) => "render",
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    board: PathBuf,
    /// ascii or pgm.
    #[arg(long, default_value = "ascii")]
    format: String,
    /// Shade by nu_p(an + bm + c); defaults to the board's own generator.
    #[arg(long = "gen", allow_hyphen_values = true)]
    generator: Option<Generator>,
    /// Shade by cell value even when a generator is known.
    #[arg(long, conflicts_with = "generator")]
    by_value: bool,
    /// Pixels per cell (pgm only).
    #[arg(long, default_value_t = 1)]
    scale: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    board: PathBuf,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long = "Q", default_value_t = 25)]
    q: u64,
    /// Normalize before every tetris move and match against B = 1.
    #[arg(long)]
    normalize: bool,
}

fn load_board(path: &Path) -> CliResult<BoardFile> {
    Ok(parse_board_file(&read_input(path)?)?)
}

fn board_line(b: &Board) -> String {
    format!("board p={} N={} mlo={} mhi={}\n", b.p(), b.width(), b.m_lo(), b.m_hi())
}

pub fn sudoku(cfg: &RunConfig, cmd: SudokuCommand) -> CliResult<Verdict> {
    match cmd {
        SudokuCommand::Gen { p, a, b, c, window, out } => {
            let board = gen_affine(PadicParams::s2(p)?, window.0, window.1, a, b, c)?;
            let file = BoardFile {
                board,
                generator: Some((a, b, c)),
            };
            emit(out.as_ref(), &write_board_file(&file))?;
            Ok(Verdict::Clean)
        }
        SudokuCommand::Verify { board, partial } => {
            let file = load_board(&board)?;
            let mode = match partial {
                Partial::Skip => VerifyMode::FullOnly,
                Partial::Extend => VerifyMode::ExtendPartial,
            };
            let r = verify_board(&file.board, mode);
            let mut out = cfg.header(None);
            out.push_str("report sudoku-verify v1\n");
            out.push_str(&board_line(&file.board));
            writeln!(out, "mode {}", r.mode).unwrap();
            writeln!(out, "full-lines {}", r.full_lines).unwrap();
            writeln!(out, "partial-lines {}", r.partial_lines).unwrap();
            writeln!(out, "constant {} affine {}", r.constant_lines, r.affine_lines).unwrap();
            writeln!(out, "failed {}", r.failed_lines).unwrap();
            for f in r.failures.iter().take(cfg.list_cap()) {
                let cells: Vec<String> = f.cells.iter().map(|(n, m, v)| format!("({n},{m})={v}")).collect();
                writeln!(out, "failure {} {} {}", f.line, f.visibility, cells.join(" ")).unwrap();
            }
            writeln!(out, "result {}", if r.ok() { "ok" } else { "defects" }).unwrap();
            emit(None, &out)?;
            Ok(Verdict::from_ok(r.ok()))
        }
        SudokuCommand::Columns { board, q } => {
            let file = load_board(&board)?;
            let mut out = cfg.header(None);
            out.push_str("report sudoku-columns v1\n");
            out.push_str(&board_line(&file.board));
            let ok = write_columns(&mut out, &file.board, q)?;
            writeln!(out, "result {}", if ok { "ok" } else { "defects" }).unwrap();
            emit(None, &out)?;
            Ok(Verdict::from_ok(ok))
        }
        SudokuCommand::Search {
            p,
            window,
            fix,
            max_boards,
            out_dir,
        } => search(cfg, p, window, &fix, max_boards, out_dir),
        SudokuCommand::Render(args) => render(cfg, args),
    }
}

/// Appends per-column lines; true when every column refutes every period.
fn write_columns(out: &mut String, board: &Board, q: u64) -> CliResult<bool> {
    let r = column_report(board, q)?;
    writeln!(out, "Q {q}").unwrap();
    for col in &r.columns {
        if col.constant {
            writeln!(out, "column {} constant", col.n).unwrap();
            continue;
        }
        let refuted = col.periods.iter().filter(|v| v.witness.is_some()).count();
        let witnesses: Vec<String> = col
            .periods
            .iter()
            .map(|v| match v.witness {
                Some(m) => format!("{}@{m}", v.q),
                None => format!("{}@-", v.q),
            })
            .collect();
        writeln!(out, "column {} refuted {refuted}/{q} {}", col.n, witnesses.join(" ")).unwrap();
    }
    Ok(r.all_refuted())
}

fn search(
    cfg: &RunConfig,
    p: u64,
    window: Window,
    fix: &[Fixed],
    max_boards: usize,
    out_dir: Option<PathBuf>,
) -> CliResult<Verdict> {
    let params = PadicParams::s2(p)?;
    let w = params.width();
    let height = usize::try_from(window.1 - window.0 + 1)
        .ok()
        .filter(|h| h.checked_mul(w).is_some_and(|c| c <= 1 << 16))
        .ok_or_else(|| CliError::Usage("search window too large".into()))?;
    let mut fixed = vec![None; height * w];
    for &Fixed(n, m, v) in fix {
        if n == 0 || n > w || m < window.0 || m > window.1 {
            return Err(CliError::Usage(format!("fixed cell ({n},{m}) lies outside the board")));
        }
        if v == 0 || v as u64 >= p {
            return Err(CliError::Usage(format!("fixed value {v} out of range [1, {}]", p - 1)));
        }
        fixed[(m - window.0) as usize * w + n - 1] = Some(v);
    }
    let budget = cfg.budget_or(1_000_000);
    let config = SearchConfig {
        budget,
        max_boards: Some(max_boards),
    };
    let outcome = search_boards(params, window.0, window.1, &fixed, config)?;
    let mut out = cfg.header(Some(budget));
    out.push_str("report sudoku-search v1\n");
    writeln!(out, "p {p} window {}:{} fixed {}", window.0, window.1, fix.len()).unwrap();
    writeln!(out, "nodes {}", outcome.nodes).unwrap();
    writeln!(out, "budget-exhausted {}", outcome.budget_exhausted).unwrap();
    writeln!(out, "complete {}", outcome.complete).unwrap();
    writeln!(out, "boards {}", outcome.boards.len()).unwrap();
    match &out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
            for (k, b) in outcome.boards.iter().enumerate() {
                let path = dir.join(format!("board_{:04}.board", k + 1));
                emit(Some(&path), &write_board(b))?;
                writeln!(out, "wrote {}", path.display()).unwrap();
            }
        }
        None => {
            for b in &outcome.boards {
                out.push_str(&write_board(b));
            }
        }
    }
    emit(None, &out)?;
    Ok(Verdict::from_ok(!outcome.boards.is_empty()))
}

pub fn render(_cfg: &RunConfig, args: RenderArgs) -> CliResult<Verdict> {
    let format: Format = args.format.parse()?;
    let file = load_board(&args.board)?;
    let shading = if args.by_value {
        Shading::Value
    } else {
        match args.generator.map(|g| (g.0, g.1, g.2)).or(file.generator) {
            Some((a, b, c)) => Shading::Valuation { a, b, c },
            None => Shading::Value,
        }
    };
    let text = match format {
        Format::Ascii => render_ascii(&file.board, shading),
        Format::Pgm => render_pgm(&file.board, shading, args.scale)?,
    };
    emit(args.out.as_ref(), &text)?;
    Ok(Verdict::Clean)
}

pub fn analyze(cfg: &RunConfig, args: AnalyzeArgs) -> CliResult<Verdict> {
    let file = load_board(&args.board)?;
    let board = &file.board;
    let mode = if args.normalize {
        ScaleMode::Normalized
    } else {
        ScaleMode::Raw
    };
    let mut out = cfg.header(None);
    out.push_str("report analyze v1\n");
    out.push_str(&board_line(board));
    writeln!(out, "mode {mode} depth {}", args.depth).unwrap();
    let scales_ok = match scale_report(board, args.depth, mode) {
        Ok(r) => {
            for s in &r.scales {
                writeln!(out, "scale {} window {}:{} fit {}", s.scale, s.window.0, s.window.1, s.fit).unwrap();
            }
            for (s, m) in r.matches.iter().enumerate() {
                writeln!(out, "match {}->{} {}", s, s + 1, if *m { "yes" } else { "no" }).unwrap();
            }
            match r.failure {
                Some(s) => writeln!(out, "verification-failure scale {s}").unwrap(),
                None => writeln!(out, "verification-failure none").unwrap(),
            }
            r.all_match()
        }
        Err(e @ (tileforge::Error::NotAlmostAffine { .. } | tileforge::Error::DegenerateNormalization)) => {
            writeln!(out, "scales error: {e}").unwrap();
            false
        }
        Err(e) => return Err(e.into()),
    };
    let columns_ok = write_columns(&mut out, board, args.q)?;
    let ok = scales_ok && columns_ok;
    writeln!(out, "result {}", if ok { "ok" } else { "defects" }).unwrap();
    emit(None, &out)?;
    Ok(Verdict::from_ok(ok))
}
