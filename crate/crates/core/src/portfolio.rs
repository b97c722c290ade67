//! Cash-and-positions accounting with fractional shares.
//!
//! Two execution styles are supported: holding mode, where rebalances
//! trade to target weights at the decision day's close and positions are
//! carried between rebalances; and overlay mode, where a weight vector is
//! applied directly to daily returns without holding shares (the
//! random-noise control).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Ticker;

/// Tolerance on weight-sum checks.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Share deltas at or below this relative threshold are treated as
/// already at target and produce no trade, so a rebalance to the current
/// allocation is an exact fixed point.
const SHARE_EPSILON: f64 = 1e-12;

/// A signed fractional share count in one ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub ticker: Ticker,
    pub shares: f64,
}

/// An agent's or strategy's desired allocation, as signed fractions of
/// NAV keyed by ticker. Absent tickers are weight zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetWeights {
    weights: BTreeMap<Ticker, f64>,
}

impl TargetWeights {
    /// All-cash: no exposure anywhere.
    pub fn all_cash() -> Self {
        TargetWeights::default()
    }

    pub fn new(weights: BTreeMap<Ticker, f64>) -> Result<Self> {
        for (t, w) in &weights {
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight(t.clone()));
            }
        }
        Ok(TargetWeights { weights })
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Ticker, f64)>,
    {
        Self::new(pairs.into_iter().collect())
    }

    pub fn get(&self, ticker: &Ticker) -> f64 {
        self.weights.get(ticker).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ticker, f64)> {
        self.weights.iter().map(|(t, w)| (t, *w))
    }

    pub fn is_all_zero(&self) -> bool {
        self.weights.values().all(|w| *w == 0.0)
    }

    /// Sum of signed weights.
    pub fn net(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Sum of absolute weights (gross exposure).
    pub fn gross(&self) -> f64 {
        self.weights.values().map(|w| w.abs()).sum()
    }

    /// Holding-mode contract: every weight non-negative and the total at
    /// most one (the remainder is cash).
    pub fn validate_long_only(&self) -> Result<()> {
        for (t, w) in &self.weights {
            if *w < 0.0 {
                return Err(Error::InvalidWeights(
                    alloc::format!("negative weight {w} for {t} in long-only mode"),
                ));
            }
        }
        let net = self.net();
        if net > 1.0 + WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(alloc::format!(
                "long-only weights sum to {net}, exceeding 1"
            )));
        }
        Ok(())
    }

    /// Overlay-mode contract: gross exposure exactly one, or all zero.
    pub fn validate_overlay(&self) -> Result<()> {
        if self.is_all_zero() {
            return Ok(());
        }
        let gross = self.gross();
        if (gross - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(alloc::format!(
                "overlay weights have gross exposure {gross}, expected 1"
            )));
        }
        Ok(())
    }
}

/// One executed fill: the share delta and its cash leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub date: NaiveDate,
    pub ticker: Ticker,
    pub share_delta: f64,
    pub price: f64,
    pub cash_delta: f64,
}

/// Cash plus positions, with the NAV path recorded as the backtest runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub cash: f64,
    positions: BTreeMap<Ticker, f64>,
    nav_history: Vec<(NaiveDate, f64)>,
}

impl Portfolio {
    pub fn new(initial_cash: f64) -> Self {
        Portfolio {
            cash: initial_cash,
            positions: BTreeMap::new(),
            nav_history: Vec::new(),
        }
    }

    /// Share count held in `ticker` (zero when absent).
    pub fn shares(&self, ticker: &Ticker) -> f64 {
        self.positions.get(ticker).copied().unwrap_or(0.0)
    }

    pub fn positions(&self) -> impl Iterator<Item = (&Ticker, f64)> {
        self.positions.iter().map(|(t, s)| (t, *s))
    }

    pub fn nav_history(&self) -> &[(NaiveDate, f64)] {
        &self.nav_history
    }

    /// Append a NAV observation; dates must strictly ascend.
    pub fn record_nav(&mut self, date: NaiveDate, nav: f64) -> Result<()> {
        if let Some((last, _)) = self.nav_history.last() {
            if *last >= date {
                return Err(Error::InvalidRange {
                    start: *last,
                    end: date,
                });
            }
        }
        self.nav_history.push((date, nav));
        Ok(())
    }

    /// NAV at the given prices: cash plus marked positions. Errors if a
    /// held ticker has no price.
    pub fn mark_to_market(&self, prices: &BTreeMap<Ticker, f64>) -> Result<f64> {
        let mut nav = self.cash;
        for (ticker, shares) in &self.positions {
            let price = prices
                .get(ticker)
                .ok_or_else(|| Error::MissingPrice(ticker.clone()))?;
            nav += shares * price;
        }
        Ok(nav)
    }

    /// Current state seen by decision agents: NAV and implied weights.
    pub fn summary(&self, prices: &BTreeMap<Ticker, f64>) -> Result<PortfolioSummary> {
        let nav = self.mark_to_market(prices)?;
        let mut weights = BTreeMap::new();
        for (ticker, shares) in &self.positions {
            let price = prices[ticker];
            let w = if nav != 0.0 { shares * price / nav } else { 0.0 };
            weights.insert(ticker.clone(), w);
        }
        Ok(PortfolioSummary { nav, weights })
    }

    /// Trade to the target weights at the given close prices, zero cost.
    ///
    /// New share counts are `weight * NAV / price`; cash becomes NAV minus
    /// the marked value of the new positions, so NAV is conserved. Targets
    /// already matched by the current allocation produce no trade.
    pub fn rebalance_to_weights(
        &mut self,
        targets: &TargetWeights,
        prices: &BTreeMap<Ticker, f64>,
        date: NaiveDate,
    ) -> Result<Vec<Trade>> {
        let nav = self.mark_to_market(prices)?;
        // Every ticker we must touch: currently held or targeted.
        let mut touched: Vec<Ticker> = self.positions.keys().cloned().collect();
        for (t, _) in targets.iter() {
            if !self.positions.contains_key(t) {
                touched.push(t.clone());
            }
        }
        touched.sort();

        let mut trades = Vec::new();
        for ticker in touched {
            let weight = targets.get(&ticker);
            if !weight.is_finite() {
                return Err(Error::NonFiniteWeight(ticker));
            }
            let price = *prices
                .get(&ticker)
                .ok_or_else(|| Error::MissingPrice(ticker.clone()))?;
            let current = self.shares(&ticker);
            let target = weight * nav / price;
            let delta = target - current;
            if delta.abs() <= SHARE_EPSILON * current.abs().max(1.0) {
                continue;
            }
            trades.push(Trade {
                date,
                ticker: ticker.clone(),
                share_delta: delta,
                price,
                cash_delta: -delta * price,
            });
            if target == 0.0 {
                self.positions.remove(&ticker);
            } else {
                self.positions.insert(ticker, target);
            }
        }

        let held_value: f64 = self
            .positions
            .iter()
            .map(|(t, s)| s * prices[t])
            .sum();
        self.cash = nav - held_value;
        Ok(trades)
    }
}

/// Agent-facing view of the portfolio: NAV and per-ticker weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSummary {
    pub nav: f64,
    pub weights: BTreeMap<Ticker, f64>,
}

/// Overlay-mode daily step: scale NAV by one plus the weighted sum of the
/// day's returns. Errors if a weighted ticker has no return.
pub fn apply_overlay_return(
    nav: f64,
    weights: &TargetWeights,
    returns: &BTreeMap<Ticker, f64>,
) -> Result<f64> {
    let mut day_return = 0.0;
    for (ticker, weight) in weights.iter() {
        if weight == 0.0 {
            continue;
        }
        let r = returns
            .get(ticker)
            .ok_or_else(|| Error::MissingReturn(ticker.clone()))?;
        day_return += weight * r;
    }
    Ok(nav * (1.0 + day_return))
}

/// Clamp negatives to zero and scale down so the total is at most one:
/// the long-only agent protocol. A total in `(0, 1]` is kept as-is (the
/// remainder is cash); an all-zero result means all-cash.
pub fn normalize_weights(raw: BTreeMap<Ticker, f64>) -> Result<TargetWeights> {
    for (t, w) in &raw {
        if !w.is_finite() {
            return Err(Error::NonFiniteWeight(t.clone()));
        }
    }
    let clamped: BTreeMap<Ticker, f64> = raw
        .into_iter()
        .map(|(t, w)| (t, if w < 0.0 { 0.0 } else { w }))
        .collect();
    let sum: f64 = clamped.values().sum();
    let weights = if sum > 1.0 + WEIGHT_SUM_TOLERANCE {
        clamped.into_iter().map(|(t, w)| (t, w / sum)).collect()
    } else {
        clamped
    };
    Ok(TargetWeights { weights })
}
