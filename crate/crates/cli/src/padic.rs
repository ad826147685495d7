use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Subcommand;

use tileforge::io::parse_lines;
use tileforge::padic::{fp, is_prime, nu, Classifier, PadicParams};

use crate::{emit, read_input, CliError, CliResult, RunConfig, Verdict};

const MAX_EVAL_ROWS: i64 = 10_000_000;

#[derive(Debug, Subcommand)]
pub enum PadicCommand {
    /// Print n, nu_p(n) and f_p(n) for a range of n.
    Eval {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        from: i64,
        #[arg(long, allow_hyphen_values = true)]
        to: i64,
    },
    /// Classify each line of a file (N = p^2 values per line).
    Classify {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        line: PathBuf,
        /// Class order: 2 exempts one coset mod p^2, 1 one coset mod p.
        #[arg(long, default_value_t = 2)]
        r: u32,
    },
}

impl PadicCommand {
    pub fn name(&self) -> &'static str {
        match self {
            PadicCommand::Eval { .. } => "eval",
            PadicCommand::Classify { .. } => "classify",
        }
    }
}

pub fn run(cfg: &RunConfig, cmd: PadicCommand) -> CliResult<Verdict> {
    match cmd {
        PadicCommand::Eval { p, from, to } => {
            if !is_prime(p) {
                return Err(CliError::Usage(format!("p = {p} is not prime")));
            }
            if from > to || to.saturating_sub(from) >= MAX_EVAL_ROWS {
                return Err(CliError::Usage(format!(
                    "range [{from}, {to}] must be non-empty and hold fewer than {MAX_EVAL_ROWS} values"
                )));
            }
            let mut out = cfg.header(None);
            out.push_str("n nu f\n");
            for n in from..=to {
                writeln!(out, "{n} {} {}", nu(p, n), fp(p, n)).unwrap();
            }
            emit(None, &out)?;
            Ok(Verdict::Clean)
        }
        PadicCommand::Classify { p, line, r } => {
            let params = PadicParams::new(p, r)?;
            let lines = parse_lines(&read_input(&line)?, &params)?;
            let classifier = Classifier::new(params);
            let mut out = cfg.header(None);
            writeln!(out, "report padic-classify v1 p={p} r={r} lines={}", lines.len()).unwrap();
            let mut members = 0;
            for (k, values) in lines.iter().enumerate() {
                match classifier.classify(values) {
                    Some(cert) => {
                        members += 1;
                        writeln!(out, "line {} {cert}", k + 1).unwrap();
                    }
                    None => writeln!(out, "line {} not-in-class", k + 1).unwrap(),
                }
            }
            let ok = members == lines.len();
            writeln!(out, "result {}", if ok { "ok" } else { "defects" }).unwrap();
            emit(None, &out)?;
            Ok(Verdict::from_ok(ok))
        }
    }
}
