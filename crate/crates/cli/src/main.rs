//! `tileforge` command-line entry point.
//!
//! Exit codes: 0 clean report, 1 report with defects, 2 usage error.

mod boards;
mod padic;
mod tiling;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tileforge::Error;

#[derive(Debug, Parser)]
#[command(name = "tileforge", version)]
#[command(about = "Tiling equations, p-adic line functions and Sudoku board analysis")]
struct Cli {
    /// Random seed for searches.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Search budget; each subcommand has its own default.
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// List every item in reports instead of the first few.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a periodic candidate against a tile system, or enumerate tilings.
    VerifyTiling(tiling::VerifyArgs),
    /// Search for an intersective partition of a finite group.
    FindPartition(tiling::FindPartitionArgs),
    /// Combine a tile system into one tile using a partition.
    Stack(tiling::StackArgs),
    /// Tile systems for functional equations, and their equivalence check.
    #[command(subcommand)]
    Encode(tiling::EncodeCommand),
    /// The function f_p and the S^r_p line class.
    #[command(subcommand)]
    Padic(padic::PadicCommand),
    /// Board generation, verification, columns, search and rendering.
    #[command(subcommand)]
    Sudoku(boards::SudokuCommand),
    /// Fits per scale, tetris matching and column refutations for a board.
    Analyze(boards::AnalyzeArgs),
    /// Draw a board as ASCII or PGM.
    Render(boards::RenderArgs),
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::VerifyTiling(_) => "verify-tiling".into(),
            Command::FindPartition(_) => "find-partition".into(),
            Command::Stack(_) => "stack".into(),
            Command::Encode(c) => format!("encode {}", c.name()),
            Command::Padic(c) => format!("padic {}", c.name()),
            Command::Sudoku(c) => format!("sudoku {}", c.name()),
            Command::Analyze(_) => "analyze".into(),
            Command::Render(_) => "render".into(),
        }
    }
}

/// Settings shared by every subcommand; recorded in report headers.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub subcommand: String,
    pub seed: u64,
    pub budget: Option<u64>,
    pub threads: Option<usize>,
    pub verbose: bool,
}

impl RunConfig {
    pub fn budget_or(&self, default: u64) -> u64 {
        self.budget.unwrap_or(default)
    }

    /// First comment line of every report and written file that allows comments.
    pub fn header(&self, budget: Option<u64>) -> String {
        let budget = budget.map_or("none".to_string(), |b| b.to_string());
        let threads = self.threads.map_or("auto".to_string(), |t| t.to_string());
        format!(
            "# tileforge {} seed={} budget={budget} threads={threads}\n",
            self.subcommand, self.seed
        )
    }

    /// How many items of a list to print.
    pub fn list_cap(&self) -> usize {
        if self.verbose {
            usize::MAX
        } else {
            20
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Defects(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidGroup(_)
            | Error::ShapeMismatch { .. }
            | Error::GroupMismatch { .. }
            | Error::SingularLattice
            | Error::LatticeRank { .. }
            | Error::InvalidWindow(_)
            | Error::NotFinite(_)
            | Error::TooLarge(_)
            | Error::EmptyTile
            | Error::CongruentResidues(..)
            | Error::MalformedPartition(_)
            | Error::StackCountMismatch { .. }
            | Error::InvalidEncoder(_)
            | Error::IncompatibleQuotient { .. }
            | Error::MalformedTwoValued(_)
            | Error::InvalidParams(_)
            | Error::ValueOutOfRange { .. }
            | Error::IncompatibleWindow(_)
            | Error::WindowTooShort(_)
            | Error::Parse { .. }
            | Error::UnknownFormat(_) => CliError::Usage(e.to_string()),
            _ => CliError::Defects(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Whether a report came out clean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Clean,
    Defects,
}

impl Verdict {
    pub fn from_ok(ok: bool) -> Self {
        if ok {
            Verdict::Clean
        } else {
            Verdict::Defects
        }
    }
}

pub fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Writes to `out`, or stdout when absent.
pub fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var("TILEFORGE_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("TILEFORGE_THREADS must be a positive integer, got `{v}`")),
        },
    }
}

fn run(cli: Cli, threads: Option<usize>) -> CliResult<Verdict> {
    let cfg = RunConfig {
        subcommand: cli.command.name(),
        seed: cli.seed,
        budget: cli.budget,
        threads,
        verbose: cli.verbose,
    };
    match cli.command {
        Command::VerifyTiling(args) => tiling::verify(&cfg, args),
        Command::FindPartition(args) => tiling::find_partition(&cfg, args),
        Command::Stack(args) => tiling::stack(&cfg, args),
        Command::Encode(cmd) => tiling::encode(&cfg, cmd),
        Command::Padic(cmd) => padic::run(&cfg, cmd),
        Command::Sudoku(cmd) => boards::sudoku(&cfg, cmd),
        Command::Analyze(args) => boards::analyze(&cfg, args),
        Command::Render(args) => boards::render(&cfg, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match thread_cap() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli, threads) {
        Ok(Verdict::Clean) => ExitCode::SUCCESS,
        Ok(Verdict::Defects) => ExitCode::from(1),
        Err(CliError::Defects(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
