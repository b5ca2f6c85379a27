use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two points of a configuration coincide, so the Riesz kernel is infinite.
    #[error("singular configuration: points {first} and {second} coincide")]
    Singular { first: usize, second: usize },

    /// An enumeration would exceed its configured budget.
    #[error("resource limit: {what} needs {needed} but the budget is {budget}")]
    Resource {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    /// The fractal does not satisfy a hypothesis the operation depends on.
    #[error("unsupported hypothesis: {0}")]
    Hypothesis(String),

    #[error("cannot classify point {point:?} into a cell at depth {depth}")]
    Classification { point: Vec<f64>, depth: usize },

    #[error("invalid input: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Singular { .. } => "singular",
            Error::Resource { .. } => "resource",
            Error::Hypothesis(_) => "hypothesis",
            Error::Classification { .. } => "classification",
            Error::Usage(_) => "usage",
            Error::Io(_) => "file",
            Error::Json(_) => "usage",
            Error::Csv(_) => "file",
        }
    }
}
