//! Deterministic dual-period backtesting core.
//!
//! Everything in this crate is pure computation over owned data: market
//! histories with point-in-time access enforcement, cash-and-positions
//! accounting, the six baseline strategies, the pluggable decision-agent
//! contract, the backtest loop, and the alpha / alpha-decay benchmark
//! arithmetic. File formats, network access, and the CLI live in the
//! companion `lookahead-cli` crate.
//!
//! The crate is `no_std` (with `alloc`) so the simulation core stays free
//! of incidental IO and host dependencies.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod agent;
pub mod benchmark;
pub mod engine;
pub mod error;
pub mod marketdata;
pub mod portfolio;
pub mod strategies;
pub mod types;

pub use error::{Error, Result};
pub use types::Ticker;
