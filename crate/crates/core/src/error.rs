use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid kernel: {0}")]
    InvalidKernel(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("class {0} has no signals")]
    EmptyClass(usize),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("operation requires a {expected} model")]
    WrongModelKind { expected: &'static str },
    #[error("atom {atom} is not unit norm (norm {norm})")]
    NonUnitAtom { atom: usize, norm: f64 },
    #[error("negative kernel self-similarity k(y,y) = {0}")]
    NegativeSelfSimilarity(f64),
    #[error("linear system is singular after jitter")]
    Singular,
    #[error("no usable column found after {0} draws")]
    InitFailed(usize),
    #[error("signal {column}: {source}")]
    Column { column: usize, source: Box<Error> },
}

impl Error {
    /// Numerical failures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonUnitAtom { .. }
            | Error::NegativeSelfSimilarity(_)
            | Error::Singular
            | Error::InitFailed(_) => true,
            Error::Column { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn at_column(self, column: usize) -> Error {
        Error::Column {
            column,
            source: Box::new(self),
        }
    }
}
