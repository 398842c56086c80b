use thiserror::Error;

/// Errors produced by construction, enumeration, and reporting.
#[derive(Debug, Error)]
pub enum FpError {
    /// The system definition is malformed (dimension mismatch, singular matrix, ...).
    #[error("invalid system: {0}")]
    InvalidIfs(String),

    /// A word refers to a map index outside `0..map_count`.
    #[error("word symbol {symbol} out of range for {count} maps")]
    InvalidWord { symbol: u32, count: u32 },

    /// The shared matrix does not contract: its spectral norm is >= 1.
    #[error("matrix is not a contraction: spectral norm {norm}")]
    NotContracting { norm: f64 },

    /// Enumerating all words of the requested depth would exceed the work cap.
    #[error(
        "depth requires {needed} words which exceeds the cap of {cap}; \
         deepest affordable depth is {max_depth}"
    )]
    CapExceeded {
        needed: u128,
        cap: u64,
        max_depth: u32,
    },

    /// Floating-point grid coordinates are no longer trustworthy at this depth.
    #[error("grid map too ill-conditioned at depth {depth} (condition estimate {cond:.3e})")]
    Conditioning { depth: u32, cond: f64 },

    /// The requested quantity is only defined for conformal systems.
    #[error("matrix is not conformal: {0}")]
    NonConformal(String),

    /// The potential fails a hypothesis needed by the requested computation.
    #[error("potential rejected: {0}")]
    PotentialRejected(String),

    /// An operation received an empty collection where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// No bounded axis-aligned box is forward-invariant (entrywise spectral radius >= 1).
    #[error("no invariant box: {0}")]
    NoInvariantBox(String),

    /// A configuration file or CLI parameter could not be interpreted.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FpError>;
