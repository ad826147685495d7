use thiserror::Error;

use crate::abelian::Element;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("element shape mismatch: expected {expected_free} free and {expected_torsion} torsion coordinates, got {got_free} and {got_torsion}")]
    ShapeMismatch {
        expected_free: usize,
        expected_torsion: usize,
        got_free: usize,
        got_torsion: usize,
    },

    #[error("group mismatch: {left} vs {right}")]
    GroupMismatch { left: String, right: String },

    #[error("lattice basis is singular")]
    SingularLattice,

    #[error("lattice rank {lattice} does not match group rank {group}")]
    LatticeRank { lattice: usize, group: usize },

    #[error("free coordinate overflow")]
    Overflow,

    #[error("malformed window: {0}")]
    InvalidWindow(String),

    #[error("operation requires a finite group, got {0}")]
    NotFinite(String),

    #[error("group too large to enumerate: {0}")]
    TooLarge(String),

    #[error("empty tile")]
    EmptyTile,

    #[error("residues {0} and {1} are congruent modulo the lattice")]
    CongruentResidues(Element, Element),

    #[error("malformed partition: {0}")]
    MalformedPartition(String),

    #[error("no intersective partition found after {evaluations} candidate evaluations: {reason}")]
    PartitionNotFound { evaluations: u64, reason: String },

    #[error("tile count {tiles} does not match partition part count {parts}")]
    StackCountMismatch { tiles: usize, parts: usize },

    #[error("not a graph: fiber over {base} holds {count} points")]
    NotAGraph { base: Element, count: usize },

    #[error("invalid encoder parameters: {0}")]
    InvalidEncoder(String),

    #[error("quotient size {size} incompatible with encoder: {reason}")]
    IncompatibleQuotient { size: u64, reason: String },

    #[error("no boolean f4 exists: pattern {pattern:?} at point {point}")]
    NoSumWitness { point: usize, pattern: [i8; 3] },

    #[error("malformed two-valued input: {0}")]
    MalformedTwoValued(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("value {value} out of range [1, {max}]")]
    ValueOutOfRange { value: i64, max: u64 },

    #[error("incompatible windows: {0}")]
    IncompatibleWindow(String),

    #[error("function family violates the shift property at n={n}, i={i}, j={j}")]
    InconsistentFamily { n: usize, i: i64, j: i64 },

    #[error("not almost affine: no coefficients fit the cells {cells:?}")]
    NotAlmostAffine { cells: Vec<(usize, i64, u8)> },

    #[error("normalization impossible: B = 0, columns are constant off the zero set")]
    DegenerateNormalization,

    #[error("window too short: {0}")]
    WindowTooShort(String),

    #[error("column {0} is constant")]
    ConstantColumn(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown format: {0}")]
    UnknownFormat(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
