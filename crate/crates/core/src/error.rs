use thiserror::Error;

/// Errors raised by library operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed space specification: {0}")]
    MalformedSpec(String),

    #[error("distance table violates the metric axioms at ({a}, {b}, {c})")]
    MetricViolation { a: usize, b: usize, c: usize },

    #[error("unknown point: {0}")]
    UnknownPoint(String),

    #[error("enumeration exceeded the cap of {cap} points")]
    EnumerationOverflow { cap: usize },

    #[error("no segment longer than {longest} found at scale {r} within the search window")]
    NoSegments { r: u64, longest: usize },

    #[error("segment point {0} lies outside the window")]
    SegmentOutsideWindow(String),

    #[error("every segment basepoint lies within {s} of the segment endpoints")]
    NoProbe { s: u64 },

    #[error("operators live on different windows")]
    WindowMismatch,

    #[error("operator propagation {prop} exceeds the scale {r}")]
    PropagationTooLarge { prop: u64, r: u64 },

    #[error("scale class of size {size} exceeds the cap {cap} (first point {first})")]
    ClassTooLarge { size: usize, cap: usize, first: String },

    #[error("needs at least {needed} levels, got {levels}")]
    LevelsTooSmall { needed: u64, levels: u32 },

    #[error("space kind `{0}` is neither a tree nor a free group")]
    NotTreelike(String),

    #[error("free group rank {0} is too small for a paradoxical decomposition")]
    RankTooSmall(u8),

    #[error("map is not injective: {0} and {1} have the same image")]
    NotInjective(String, String),

    #[error("displacement {observed} between {from} and {to} exceeds the declared bound {bound}")]
    ExpansionUnbounded {
        from: String,
        to: String,
        observed: u64,
        bound: u64,
    },

    #[error("no admissible subset: {0} is farther than the allowed distance from every kept point")]
    Infeasible(String),

    #[error("map domains do not match: {0}")]
    DomainMismatch(String),

    #[error("exhaustive search needs at most {cap} points, got {size}")]
    CapExceeded { size: usize, cap: usize },

    #[error("search exhausted without a verified result")]
    SearchExhausted,

    #[error("operation needs {expected}, got {got}")]
    WrongSpace { expected: &'static str, got: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
