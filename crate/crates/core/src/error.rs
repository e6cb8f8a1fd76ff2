use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: label {label} out of range for {num_classes} classes")]
    LabelOutOfRange {
        line: usize,
        label: i64,
        num_classes: usize,
    },

    #[error("line {line}: probabilities sum to zero, cannot renormalize")]
    ZeroSumRow { line: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("PMI undefined for class {class}: zero count with mu = 0")]
    PmiDomain { class: usize },

    #[error("enumeration needs {count} selections, budget is {budget}")]
    BudgetExceeded { count: String, budget: u64 },

    #[error("artifact version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("artifact schema violation: {0}")]
    Schema(String),

    #[error("stale evaluation state: {0}")]
    StaleState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether this error originated in the filesystem rather than in content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
