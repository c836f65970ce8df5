use alloc::string::String;

use chrono::NaiveDate;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("price series is empty")]
    EmptySeries,
    #[error("non-positive price {price} on {date}")]
    NonPositivePrice { date: NaiveDate, price: f64 },
    #[error("dates not strictly increasing at {date}")]
    UnorderedDates { date: NaiveDate },
    #[error("series too short: need at least {needed} observations, have {have}")]
    TooShort { needed: usize, have: usize },
    #[error("series spans {have} days, need at least {needed}")]
    SpanTooShort { needed: f64, have: f64 },
    #[error("invalid date range {from} .. {to}")]
    InvalidRange { from: NaiveDate, to: NaiveDate },
    #[error("no observations between {from} and {to}")]
    EmptySlice { from: NaiveDate, to: NaiveDate },
    #[error("model is singular at t = tc ({tc})")]
    Singularity { tc: f64 },
    #[error("critical time {tc} lies inside the fitted window")]
    CriticalTimeInsideWindow { tc: f64 },
    #[error("design matrix is rank deficient for shape tc={tc}, alpha={alpha}, omega={omega}")]
    DegenerateShape { tc: f64, alpha: f64, omega: f64 },
    #[error("no admissible start produced a fit")]
    NoAdmissibleStart,
    #[error("local refinement did not converge (best sse {sse})")]
    NotConverged { sse: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no qualified fits to bootstrap")]
    NoQualifiedFits,
    #[error("no critical time fell inside the forecast horizon")]
    EmptyEnsemble,
    #[error("input lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
}
