use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A contraction ratio lies outside `(0, tau0]` or `tau0 >= 1/2`.
    #[error("ratio lambda_{n} = {value} is not admissible (need 0 < lambda <= {bound} and lambda < 1/2)")]
    RatioOutOfRange { n: usize, value: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("generation {gen} exceeds construction depth {depth}")]
    Depth { gen: usize, depth: usize },

    #[error("ancestor generation {ancestor} is finer than generation {gen}")]
    ArgumentOrder { ancestor: usize, gen: usize },

    #[error("kernel evaluated at the origin")]
    ZeroVector,

    #[error("atom {atom} coincides with target {target} and is not excluded")]
    Singularity { atom: usize, target: usize },

    #[error("atom budget exceeded: {count} atoms requested, budget is {budget}")]
    Budget { count: u128, budget: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
