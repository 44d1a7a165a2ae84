use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("empty variable name")]
    EmptyName,

    #[error("self-loop on `{0}`")]
    SelfLoop(String),

    #[error("duplicate {kind} edge {from} {arrow} {to}", arrow = if *.kind == "directed" { "->" } else { "<->" })]
    DuplicateEdge {
        kind: &'static str,
        from: String,
        to: String,
    },

    #[error("directed cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("line {line}: {message}")]
    GraphSyntax { line: usize, message: String },

    #[error("column {column}: {message}")]
    QuerySyntax { column: usize, message: String },

    #[error("variable `{var}` assigned twice in one subscript")]
    DuplicateSubscript { var: String },

    #[error("value `{value}` is not in the domain of `{var}`")]
    ValueOutOfDomain { var: String, value: String },

    #[error("model has {states} joint exogenous states, budget is {budget}")]
    BudgetExceeded { states: u128, budget: u128 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("no interventional table for do({0})")]
    MissingTable(String),

    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),

    #[error("conditioning event has probability zero")]
    ZeroDenominator,

    #[error("malformed expression: {0}")]
    MalformedExpression(String),

    #[error("cannot decide whether `{0}` is consistent: a summation symbol meets another value")]
    SymbolicConflict(String),

    #[error("identification recursion exceeded depth {0}")]
    RecursionLimit(usize),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
