use std::io;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("{vars} variables exceed the truth-table cap of {cap}")]
    VariableCap { vars: usize, cap: usize },
    #[error("unknown connective `{0}`")]
    UnknownConnective(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("formula space has no leaves (no variables and the constant is disabled)")]
    NoLeaves,
    #[error("no formula of size {0} exists in this space")]
    Empty(usize),
    #[error("formula size must be at least 1")]
    ZeroSize,
}

#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: literal {literal} out of range for {num_vars} variables")]
    LiteralOutOfRange {
        line: usize,
        literal: i64,
        num_vars: u32,
    },
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver timed out after {elapsed:?}")]
    Timeout { elapsed: Duration },
    #[error("failed to spawn solver `{}`: {source}", path.display())]
    Spawn { path: PathBuf, source: io::Error },
    #[error("solver exited with unexpected status {0:?}")]
    Protocol(Option<i32>),
    #[error("unparseable solver output: {0}")]
    Output(String),
    #[error("solver model violates clause {clause}")]
    ModelRejected { clause: usize },
    #[error("i/o error talking to solver: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum QbfError {
    #[error("{universals} universal variables exceed the expansion cap of {cap}")]
    ExpansionCap { universals: usize, cap: usize },
    #[error("invalid QBF instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum MinimizeError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Qbf(#[from] QbfError),
    #[error("QBF backend reported true without an outer model; cannot decode a formula")]
    MissingModel,
    #[error("inconsistent scheme model at node {node}: {selected} selectors true")]
    Decode { node: usize, selected: usize },
    #[error("minimized formula `{output}` is not equivalent to the input")]
    Unsound { output: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Minimize(#[from] MinimizeError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("record for instance {size}/{instance} ({algo}): {message}")]
    Record {
        size: usize,
        instance: usize,
        algo: String,
        message: String,
    },
    #[error("malformed record: {0}")]
    Malformed(String),
}
