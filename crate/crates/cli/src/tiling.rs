use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};

use tileforge::abelian::{Element, GroupSpec, Lattice};
use tileforge::encode::{
    encode_boolean_pair, encode_linear, encode_periodicity, encode_shifted_mod, equivalence_on_finite,
    EncodedConstraint,
};
use tileforge::io::{parse_instance, parse_partition, write_instance, write_partition, TilingInstance};
use tileforge::tiling::{enumerate_tilings_of_system, find_intersective_partition, verify_tiling, PartitionSearch};

use crate::{emit, read_input, CliError, CliResult, RunConfig, Verdict};

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Tiling-instance file.
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Debug, Args)]
pub struct FindPartitionArgs {
    /// Finite group literal, e.g. "Z/7 x Z/7".
    #[arg(long)]
    group: String,
    #[arg(long, default_value_t = 2)]
    parts: usize,
    /// Exhaustive search (groups of order at most 16).
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StackArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EncodeCommand {
    /// f(x + v) = f(x) for f: G -> H.
    Periodicity {
        #[arg(long, default_value = "Z")]
        base: String,
        #[arg(long, default_value = "Z/2")]
        fiber: String,
        /// Period, as an element of the base, e.g. "((1);())".
        #[arg(long)]
        v: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// f(x) = x + c mod n on Z.
    Shift {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// a_1 f_1 + ... + a_K f_K constant in Z/2q.
    Linear {
        #[arg(long)]
        q: u64,
        /// Comma-separated coefficients.
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// {f(x,0), f(x,1)} is the same even/odd pair for every x.
    Boolpair {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively compare an encoder's equation with its tiling on Z/L.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// periodicity, shift, linear or boolpair.
    #[arg(long)]
    encoder: String,
    /// Quotient size: free coordinates are read mod L.
    #[arg(long = "L")]
    l: u64,
    #[arg(long, default_value_t = 3)]
    q: u64,
    /// Modulus for `shift`.
    #[arg(long, default_value_t = 3)]
    n: u64,
    /// Coefficients for `linear`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    a: String,
    /// Fiber order and period for `periodicity`.
    #[arg(long, default_value_t = 2)]
    fiber: u64,
    #[arg(long, default_value_t = 1)]
    v: i64,
}

impl EncodeCommand {
    pub fn name(&self) -> &'static str {
        match self {
            EncodeCommand::Periodicity { .. } => "periodicity",
            EncodeCommand::Shift { .. } => "shift",
            EncodeCommand::Linear { .. } => "linear",
            EncodeCommand::Boolpair { .. } => "boolpair",
            EncodeCommand::Check(_) => "check",
        }
    }
}

fn show_elements<'a>(els: impl IntoIterator<Item = &'a Element>) -> String {
    els.into_iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ")
}

fn load_instance(path: &Path) -> CliResult<TilingInstance> {
    Ok(parse_instance(&read_input(path)?)?)
}

pub fn verify(cfg: &RunConfig, args: VerifyArgs) -> CliResult<Verdict> {
    let inst = load_instance(&args.instance)?;
    let cap = cfg.list_cap();
    let mut out = String::new();
    let verdict = match inst.candidate()? {
        Some(a) => {
            out.push_str(&cfg.header(None));
            out.push_str("report verify-tiling v1\n");
            writeln!(out, "group {}", inst.group).unwrap();
            writeln!(out, "lattice {}", inst.lattice).unwrap();
            writeln!(out, "residues {}", a.residues().len()).unwrap();
            let sizes: Vec<String> = inst.tiles.iter().map(|t| t.len().to_string()).collect();
            writeln!(out, "tiles {}", sizes.join(" ")).unwrap();
            let report = verify_tiling(&a, &inst.tiles)?;
            writeln!(out, "defects {}", report.defects.len()).unwrap();
            for d in report.defects.iter().take(cap) {
                writeln!(out, "defect tile={} point={} count={}", d.tile, d.point, d.count).unwrap();
            }
            writeln!(out, "result {}", if report.ok() { "ok" } else { "defects" }).unwrap();
            Verdict::from_ok(report.ok())
        }
        None => {
            let budget = cfg.budget_or(10_000_000);
            out.push_str(&cfg.header(Some(budget)));
            out.push_str("report verify-tiling v1\n");
            writeln!(out, "group {}", inst.group).unwrap();
            let sizes: Vec<String> = inst.tiles.iter().map(|t| t.len().to_string()).collect();
            writeln!(out, "tiles {}", sizes.join(" ")).unwrap();
            let found = enumerate_tilings_of_system(&inst.group, &inst.tiles, Some(budget))?;
            if let Some(o) = &found.obstruction {
                writeln!(out, "obstruction {o:?}").unwrap();
            }
            writeln!(out, "nodes {}", found.nodes).unwrap();
            writeln!(out, "complete {}", found.complete).unwrap();
            writeln!(out, "tilings {}", found.tilings.len()).unwrap();
            for t in found.tilings.iter().take(cap) {
                writeln!(out, "tiling: {}", show_elements(t)).unwrap();
            }
            let ok = !found.tilings.is_empty();
            writeln!(out, "result {}", if ok { "ok" } else { "no-tiling" }).unwrap();
            Verdict::from_ok(ok)
        }
    };
    emit(None, &out)?;
    Ok(verdict)
}

pub fn find_partition(cfg: &RunConfig, args: FindPartitionArgs) -> CliResult<Verdict> {
    let group: GroupSpec = args.group.parse()?;
    let search = PartitionSearch {
        seed: cfg.seed,
        budget: cfg.budget_or(1_000_000),
        exhaustive: args.exhaustive,
    };
    let mut out = cfg.header(Some(search.budget));
    match find_intersective_partition(&group, args.parts, &search) {
        Ok(found) => {
            writeln!(out, "# evaluations {}", found.evaluations).unwrap();
            out.push_str(&write_partition(&found.partition));
            emit(args.out.as_ref(), &out)?;
            Ok(Verdict::Clean)
        }
        Err(tileforge::Error::PartitionNotFound { evaluations, reason }) => {
            writeln!(out, "# evaluations {evaluations}").unwrap();
            writeln!(out, "# not found: {reason}").unwrap();
            eprint!("{out}");
            Ok(Verdict::Defects)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn stack(cfg: &RunConfig, args: StackArgs) -> CliResult<Verdict> {
    let inst = load_instance(&args.instance)?;
    let partition = parse_partition(&read_input(&args.partition)?)?;
    let tile = tileforge::tiling::stack(&inst.tiles, &partition)?;
    let h = partition.group();
    let zero = h.zero();
    let stacked = TilingInstance {
        group: tile.group().clone(),
        lattice: inst.lattice.clone(),
        residues: inst
            .residues
            .as_ref()
            .map(|r| r.iter().map(|x| x.join(&zero)).collect()),
        tiles: vec![tile],
    };
    let mut out = cfg.header(None);
    out.push_str(&write_instance(&stacked));
    emit(args.out.as_ref(), &out)?;
    Ok(Verdict::Clean)
}

fn coefficients(s: &str) -> CliResult<Vec<i64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad coefficient `{t}`")))
        })
        .collect()
}

fn encoded_instance(e: &EncodedConstraint) -> CliResult<TilingInstance> {
    let group = e.group();
    let r = group.rank();
    let lattice = if r == 0 {
        Lattice::trivial()
    } else {
        Lattice::diagonal(&vec![1; r])?
    };
    Ok(TilingInstance {
        group,
        lattice,
        residues: None,
        tiles: e.tiles.clone(),
    })
}

fn write_encoded(cfg: &RunConfig, e: &EncodedConstraint, out: Option<&PathBuf>) -> CliResult<Verdict> {
    let mut text = cfg.header(None);
    writeln!(text, "# meaning {}", e.meaning).unwrap();
    writeln!(text, "# base {} fiber {}", e.base, e.fiber).unwrap();
    text.push_str(&write_instance(&encoded_instance(e)?));
    emit(out, &text)?;
    Ok(Verdict::Clean)
}

pub fn encode(cfg: &RunConfig, cmd: EncodeCommand) -> CliResult<Verdict> {
    match cmd {
        EncodeCommand::Periodicity { base, fiber, v, out } => {
            let base: GroupSpec = base.parse()?;
            let fiber: GroupSpec = fiber.parse()?;
            let v = base.parse_element(&v)?;
            write_encoded(cfg, &encode_periodicity(&base, &fiber, &v)?, out.as_ref())
        }
        EncodeCommand::Shift { n, out } => write_encoded(cfg, &encode_shifted_mod(n)?, out.as_ref()),
        EncodeCommand::Linear { q, a, out } => {
            let a = coefficients(&a)?;
            write_encoded(cfg, &encode_linear(a.len(), q, &a)?, out.as_ref())
        }
        EncodeCommand::Boolpair { q, out } => write_encoded(cfg, &encode_boolean_pair(q)?, out.as_ref()),
        EncodeCommand::Check(args) => check(cfg, args),
    }
}

fn check(cfg: &RunConfig, args: CheckArgs) -> CliResult<Verdict> {
    let e = match args.encoder.as_str() {
        "periodicity" => {
            let base = GroupSpec::free_abelian(1);
            let fiber = GroupSpec::cyclic(args.fiber)?;
            let v = base.normalize(&[args.v], &[])?;
            encode_periodicity(&base, &fiber, &v)?
        }
        "shift" => encode_shifted_mod(args.n)?,
        "linear" => {
            let a = coefficients(&args.a)?;
            encode_linear(a.len(), args.q, &a)?
        }
        "boolpair" => encode_boolean_pair(args.q)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown encoder `{other}` (periodicity, shift, linear, boolpair)"
            )))
        }
    };
    let budget = cfg.budget_or(50_000_000);
    let report = equivalence_on_finite(&e.quotient(args.l)?, Some(budget))?;
    let mut out = cfg.header(Some(budget));
    writeln!(out, "# encoder {} L={}", args.encoder, args.l).unwrap();
    write!(out, "{report}").unwrap();
    emit(None, &out)?;
    Ok(Verdict::from_ok(report.ok()))
}
