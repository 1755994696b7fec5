use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Variants group failures by how a caller is expected to react: the
/// `Domain`/`Argument`/`Parameter`/`Configuration`/`Precondition`/`Lookup`
/// kinds are caller mistakes, `Sampling`/`ModelDomain`/`Numerical` come from
/// the function being approximated or from the arithmetic itself.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("non-finite sample {value} at {location}")]
    Sampling { location: String, value: f64 },

    #[error("model domain error: {0}")]
    ModelDomain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("scenario {index}: {source}")]
    Scenario {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Argument(_) => "argument",
            Error::Parameter(_) => "parameter",
            Error::Configuration(_) => "configuration",
            Error::Precondition(_) => "precondition",
            Error::Lookup(_) => "lookup",
            Error::Sampling { .. } => "sampling",
            Error::ModelDomain(_) => "model_domain",
            Error::Numerical(_) => "numerical",
            Error::Scenario { source, .. } => source.kind(),
            Error::Io(_) => "io",
            Error::Serde(_) => "serialization",
            Error::Csv(_) => "csv",
        }
    }

    /// True for failures that originate in numerics or the priced model
    /// rather than in the caller's inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Sampling { .. } | Error::ModelDomain(_) | Error::Numerical(_) => true,
            Error::Scenario { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
