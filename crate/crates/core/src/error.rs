use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::types::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {}", ViolationList(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("{what} has shape {got_rows}x{got_cols}, expected {rows}x{cols}")]
    DimensionMismatch { what: &'static str, rows: usize, cols: usize, got_rows: usize, got_cols: usize },

    #[error("invalid {what}: {detail}")]
    InvalidInput { what: &'static str, detail: String },

    #[error("multiplier grid is empty")]
    EmptyGrid,

    #[error("{what} count {count} exceeds cap {cap}")]
    CapExceeded { what: &'static str, count: u128, cap: u128 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("signal band violated: {0}")]
    BandViolation(String),

    #[error("non-finite {what} for bidder {bidder}")]
    NonFinite { what: &'static str, bidder: usize },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidInput { what, detail: detail.into() }
    }
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, v) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
