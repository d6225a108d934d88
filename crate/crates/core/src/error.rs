use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("letter {letter:?} is not in the domain alphabet")]
    DomainMismatch { letter: String },

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("not a substitution: {0}")]
    InvalidSubstitution(String),

    #[error("{word:?} is not a prefix of the fixed point")]
    NotPrefix { word: String },

    #[error("matrix is not primitive")]
    NotPrimitive,

    #[error("integer overflow while {0}")]
    Overflow(&'static str),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("return-word decoding of the image of letter {letter} failed: {detail}")]
    DecodeFailure { letter: String, detail: String },

    #[error("hypothesis P({item}) unverified: {detail}")]
    Hypothesis { item: &'static str, detail: String },

    #[error("decomposition failed; increase power or precision ({0})")]
    Decomposition(String),

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("series depth {depth} insufficient: tail bound {tail:e} exceeds {epsilon:e}; try depth {suggested}")]
    DepthInsufficient {
        depth: usize,
        tail: f64,
        epsilon: f64,
        suggested: usize,
    },

    #[error("level n too small: translation not constant on atoms up to level {max_level}")]
    LevelTooSmall { max_level: usize },

    #[error("increase samples: {0}")]
    TooFewSamples(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures caused by a search or prefix cap rather than bad input.
    pub fn is_inconclusive(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_inconclusive(),
            e => matches!(
                e,
                Error::Inconclusive(_)
                    | Error::LevelTooSmall { .. }
                    | Error::DepthInsufficient { .. }
                    | Error::TooFewSamples(_)
            ),
        }
    }

    /// True for malformed input or configuration.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_input_error(),
            e => matches!(
                e,
                Error::Parse { .. }
                    | Error::DomainMismatch { .. }
                    | Error::AlphabetMismatch(_)
                    | Error::InvalidAlphabet(_)
                    | Error::InvalidSubstitution(_)
                    | Error::NotPrefix { .. }
                    | Error::NotPrimitive
                    | Error::Config(_)
            ),
        }
    }

    /// The error with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }
}
