use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HtError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed dimension tree: {0}")]
    InvalidTree(String),

    #[error("inconsistent tensor representation: {0}")]
    InvalidTensor(String),

    #[error("operands do not match: {0}")]
    ShapeMismatch(String),

    #[error("index {index:?} out of range for mode sizes {mode_sizes:?}")]
    IndexOutOfRange {
        index: Vec<usize>,
        mode_sizes: Vec<usize>,
    },

    #[error("operation requires a nonzero tensor")]
    ZeroTensor,

    #[error("truncation reduced the iterate to zero")]
    TruncationDestroyedIterate,

    #[error("non-finite value encountered ({0})")]
    NonFinite(String),

    #[error("tensor is not elementary (ranks {0:?})")]
    NotElementary(Vec<usize>),

    #[error("mode {0} lost all rows during zero-row removal")]
    EmptyMode(usize),

    #[error("densification needs {entries} entries, cap is {cap}")]
    DenseCapExceeded { entries: u128, cap: u128 },

    #[error("argmax search failed after fixing modes {fixed:?}: {source}")]
    SearchFailed {
        /// 1-based index per mode, `None` where the mode was still open.
        fixed: Vec<Option<usize>>,
        source: Box<HtError>,
    },

    #[error("container: {0}")]
    Container(String),
}

pub type Result<T> = std::result::Result<T, HtError>;
