use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown port `{0}`")]
    UnknownPort(String),
    #[error("unknown mirror `{0}`")]
    UnknownMirror(String),
    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),
    #[error("unknown time point `{0}`")]
    UnknownTimepoint(String),
    #[error("registry mismatch: {0}")]
    RegistryMismatch(String),
    #[error("wiring error: {0}")]
    Wiring(String),
    #[error("state has zero norm")]
    DegenerateState,
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("conditioning on {result} at `{outcome}` has zero probability")]
    ImpossibleBranch { outcome: String, result: String },
    #[error("no outcome treatment given for detector `{0}`")]
    AmbiguousBranch(String),
    #[error("two-state vector has zero overlap, weak values are undefined")]
    UndefinedWeakValue,
    #[error("incomplete: {0}")]
    Incomplete(String),
    #[error("coupling mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
