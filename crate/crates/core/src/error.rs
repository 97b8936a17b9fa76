use crate::memory::Phase;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("column length mismatch: expected {expected} rows, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("relation has {rows} rows, at most {max} are addressable by 4-byte tuple ids")]
    TooManyRows { rows: usize, max: usize },

    #[error("kind error: {0}")]
    KindError(String),

    #[error("fan-out too large: {bits} radix bits requested in one pass, at most 8 allowed")]
    FanoutTooLarge { bits: u32 },

    #[error("bit range [{low}, {high}) is invalid for {width}-bit keys")]
    InvalidBitRange { low: u32, high: u32, width: u32 },

    #[error("index {index} out of bounds for input of length {len}")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("{side} input is not sorted at position {position}")]
    NotSorted { side: &'static str, position: usize },

    #[error("duplicate build key at position {position} in primary-key mode")]
    DuplicateBuildKeys { position: usize },

    #[error("partition fan-out mismatch: build has {build}, probe has {probe}")]
    FanoutMismatch { build: usize, probe: usize },

    #[error("build chunk of {chunk} keys exceeds hash table capacity {capacity}")]
    CapacityExceeded { chunk: usize, capacity: usize },

    #[error("on-demand transform of {column} produced a layout different from the key transform")]
    TransformMismatch { column: String },

    #[error("phase {found:?} entered out of order (expected {expected:?})")]
    PhaseOrderViolation {
        expected: Option<Phase>,
        found: Phase,
    },

    #[error("invalid workload spec: {0}")]
    SpecInvalid(String),

    #[error("unknown join shape {0:?}")]
    UnknownShape(String),

    #[error("schema error: {0}")]
    SchemaError(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
