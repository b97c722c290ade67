//! Error types shared across the core.

use alloc::string::String;

use chrono::NaiveDate;
use thiserror::Error;

use crate::types::Ticker;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-positive price {value} for {ticker} on {date}")]
    NonPositivePrice {
        ticker: Ticker,
        date: NaiveDate,
        value: f64,
    },

    #[error("duplicate bar for {ticker} on {date}")]
    DuplicateBar { ticker: Ticker, date: NaiveDate },

    #[error("price series for {0} is empty")]
    EmptySeries(Ticker),

    #[error("ticker {0} not present in the loaded data")]
    MissingTicker(Ticker),

    #[error("trading calendars have an empty intersection")]
    EmptyCalendar,

    #[error("future access: requested {requested} but slice is as of {as_of}")]
    FutureAccess {
        requested: NaiveDate,
        as_of: NaiveDate,
    },

    /// Distinct from other errors: strategies branch on it to apply their
    /// equal-weight fallback instead of failing the run.
    #[error("insufficient history for {ticker} (need {needed} bars, have {available})")]
    InsufficientHistory {
        ticker: Ticker,
        needed: usize,
        available: usize,
    },

    #[error("start {start} is after end {end}")]
    InvalidRange { start: NaiveDate, end: NaiveDate },

    #[error("no price for {0} on the valuation date")]
    MissingPrice(Ticker),

    #[error("no return for weighted ticker {0}")]
    MissingReturn(Ticker),

    #[error("non-finite weight for {0}")]
    NonFiniteWeight(Ticker),

    #[error("invalid target weights: {0}")]
    InvalidWeights(String),

    #[error("no ticker weight lines found in agent response")]
    WeightParse,

    #[error("agent decision unavailable: {0}")]
    AgentUnavailable(String),

    #[error("universe is empty")]
    EmptyUniverse,

    #[error("period {label} does not overlap the trading calendar")]
    EmptyPeriod { label: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for the insufficient-history signal that strategy fallbacks
    /// key on.
    pub fn is_insufficient_history(&self) -> bool {
        matches!(self, Error::InsufficientHistory { .. })
    }
}
