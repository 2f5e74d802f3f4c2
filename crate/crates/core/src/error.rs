use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid vertex label `{0}`: labels must match [A-Za-z0-9_]+")]
    InvalidLabel(String),

    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),

    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),

    #[error("self-loop on vertex `{0}`")]
    SelfLoop(String),

    #[error("duplicate edge {0}")]
    DuplicateEdge(String),

    #[error("directed cycle through `{0}`")]
    DirectedCycle(String),

    #[error("fixed vertex `{0}` has a parent or sibling")]
    FixedWithIncoming(String),

    #[error("vertex `{0}` is fixed, expected a random vertex")]
    NotRandom(String),

    #[error("label `{0}` collides with a reserved hidden-variable name")]
    ReservedLabel(String),

    #[error("vertex set must be non-empty")]
    EmptySet,

    #[error("vertex sets must be disjoint (`{0}` appears twice)")]
    Overlap(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("`{v}` and `{w}` are not densely connected: a nested constraint exists between them")]
    NotDenselyConnected { v: String, w: String },

    #[error("vertex `{0}` is not fixable")]
    NotFixable(String),

    #[error("no valid fixing sequence for the requested set (stuck at {0})")]
    NoFixingSequence(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("division by zero where the numerator is positive (vertex `{0}`)")]
    ZeroDivision(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid reduction: {0}")]
    InvalidReduction(String),

    #[error("almost-encapsulation violated: {components} component(s) but {leaving} leaving edge(s)")]
    NotAlmostEncapsulated { components: usize, leaving: usize },

    #[error("invalid assignment: {0}")]
    Assignment(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("input is not a spanning tree: {0}")]
    NotATree(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
