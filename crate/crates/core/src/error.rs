use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong in the numerical pipeline.
///
/// Variants split into domain errors (bad or degenerate input) and the
/// single computational failure; see [`Error::is_numerical`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("price table is empty")]
    EmptyPrices,
    #[error("non-positive price {price} for {ticker} on {date}")]
    NonPositivePrice {
        ticker: String,
        date: chrono::NaiveDate,
        price: f64,
    },
    #[error("duplicate observation for {ticker} on {date}")]
    DuplicateObservation {
        ticker: String,
        date: chrono::NaiveDate,
    },
    #[error("the date ranges of the tickers do not overlap")]
    EmptyDateRange,
    #[error("no ticker covers the common date range")]
    NoCompleteTicker,
    #[error("at least two dates are required, found {found}")]
    TooFewDates { found: usize },
    #[error("price matrix is {rows}x{cols}, expected {tickers}x{dates}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        tickers: usize,
        dates: usize,
    },
    #[error("dates are not strictly increasing at position {position}")]
    UnorderedDates { position: usize },
    #[error("ticker {ticker} has no sector assignment")]
    MissingSector { ticker: String },
    #[error("unknown sector code `{code}` for ticker {ticker}")]
    UnknownSector { ticker: String, code: String },
    #[error("epoch length {length} is below the minimum of 3 trading days")]
    EpochTooShort { length: usize },
    #[error("epoch length {length} exceeds the {available} available return days")]
    EpochTooLong { length: usize, available: usize },
    #[error("{} has zero volatility in epoch {epoch}", describe_row(*.row, .ticker))]
    ZeroVolatility {
        epoch: usize,
        row: usize,
        ticker: Option<String>,
    },
    #[error(
        "{} is fully explained by the market mode in epoch {epoch} (zero reduced variance)",
        describe_row(*.row, .ticker)
    )]
    ZeroReducedVariance {
        epoch: usize,
        row: usize,
        ticker: Option<String>,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected a {expected} matrix, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("cannot form {k} clusters from {items} items")]
    InvalidClusterCount { k: usize, items: usize },
    #[error("at least {required} items are required, found {found}")]
    TooFewItems { required: usize, found: usize },
    #[error("subset size {size} exceeds the universe of {universe} tickers")]
    SubsetTooLarge { size: usize, universe: usize },
    #[error("partitions cover different item counts ({left} vs {right})")]
    PartitionMismatch { left: usize, right: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("singular value decomposition did not converge")]
    SvdNonConvergence,
    #[error("could not draw a usable subset of {size} tickers after {attempts} attempts")]
    SubsetExhausted { size: usize, attempts: usize },
}

impl Error {
    /// True for numerical failures (as opposed to bad or degenerate data).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::SvdNonConvergence)
    }

    pub(crate) fn with_ticker(self, name: impl FnOnce(usize) -> String) -> Self {
        match self {
            Error::ZeroVolatility { epoch, row, .. } => Error::ZeroVolatility {
                epoch,
                row,
                ticker: Some(name(row)),
            },
            Error::ZeroReducedVariance { epoch, row, .. } => Error::ZeroReducedVariance {
                epoch,
                row,
                ticker: Some(name(row)),
            },
            other => other,
        }
    }
}

fn describe_row(row: usize, ticker: &Option<String>) -> String {
    match ticker {
        Some(t) => alloc::format!("ticker {t} (row {row})"),
        None => alloc::format!("row {row}"),
    }
}
