use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("sensing matrix is not full column rank")]
    RankDeficient,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero intensity with positive count at indices {indices:?}")]
    ZeroIntensity { indices: Vec<usize> },

    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error(
        "objective increased at outer iteration {iteration}: {previous} -> {current} \
         (exceeds monotonicity slack)"
    )]
    ObjectiveIncrease {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("malformed image: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
