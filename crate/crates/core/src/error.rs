use std::time::Duration;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An error located in a specification document.
    #[error("line {line}, column {column}: {source}")]
    At {
        line: usize,
        column: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("invalid {what} token `{token}`")]
    InvalidToken { what: &'static str, token: String },
    #[error("label with two absent annotations")]
    AbsentLabel,
    #[error("unknown component name `{0}` in label")]
    UnknownComponent(String),
    #[error("duplicate state id `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("empty initial set")]
    EmptyInitial,
    #[error("empty hierarchy")]
    EmptyHierarchy,
    #[error("hierarchy leaf sets not disjoint (`{0}` occurs more than once)")]
    HierarchyOverlap(String),
    #[error("expected exactly one automaton, found {0}")]
    AutomatonCount(usize),

    #[error("composition needs at least two components, got {0}")]
    TooFewComponents(usize),
    #[error("{set} action `{action}` does not occur in any component")]
    UnknownIoAction { set: &'static str, action: String },
    #[error("product of {0} states exceeds the composition limit")]
    ProductTooLarge(u128),

    #[error("partition refinement timed out after {elapsed:?} with {blocks} blocks (partial partition discarded)")]
    Timeout { elapsed: Duration, blocks: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("oracle bound exceeded: {states} states > {bound}")]
    OracleBound { states: usize, bound: usize },
    #[error("automata have different composition hierarchies")]
    HierarchyMismatch,

    #[error("negative value {0} in Gini input")]
    NegativeValue(f64),

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),

    #[error("regression input: {0}")]
    RegressionInput(String),
    #[error("complete separation: the maximum-likelihood estimate does not exist")]
    Separation,
    #[error("regression coefficient is zero; no threshold exists")]
    NoThreshold,

    #[error("empty input")]
    EmptyInput,
    #[error("I/O error: {0}")]
    Io(String),
    #[error("CSV error: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn at(line: usize, column: usize, source: Error) -> Error {
        match source {
            located @ Error::At { .. } => located,
            other => Error::At {
                line,
                column,
                source: Box::new(other),
            },
        }
    }

    /// The underlying error with any document position stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
