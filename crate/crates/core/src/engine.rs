//! The backtest loop: resolves the rebalance schedule, enforces
//! point-in-time slicing per decision date, invokes the decision source,
//! executes, and accumulates the daily NAV path for one period.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::agent::DecisionAgent;
use crate::error::{Error, Result};
use crate::marketdata::{pit_slice, SeriesMap, TradingCalendar};
use crate::portfolio::{apply_overlay_return, Portfolio, PortfolioSummary, TargetWeights, Trade};
use crate::types::Ticker;

/// A labeled evaluation window. Endpoints are calendar dates; the engine
/// snaps them inward to trading days.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl PeriodSpec {
    pub fn new(label: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidRange { start, end });
        }
        Ok(PeriodSpec {
            label: label.into(),
            start,
            end,
        })
    }
}

/// When the decision source is consulted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RebalancePolicy {
    OnceAtStart,
    Monthly,
    Daily,
}

/// How decisions are executed: shares held between rebalances, or a
/// weight overlay applied to next-day returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortfolioMode {
    Holding,
    Overlay,
}

/// One completed period run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub period: PeriodSpec,
    pub strategy_label: String,
    pub nav_history: Vec<(NaiveDate, f64)>,
    pub trades: Vec<Trade>,
    pub total_return_pct: f64,
    pub seed: Option<u64>,
    /// Decisions that produced weights vs. ones that fell back to a hold.
    pub decisions_made: usize,
    pub decision_failures: usize,
}

impl BacktestResult {
    pub fn first_nav(&self) -> f64 {
        self.nav_history.first().map(|(_, v)| *v).unwrap_or(0.0)
    }

    pub fn final_nav(&self) -> f64 {
        self.nav_history.last().map(|(_, v)| *v).unwrap_or(0.0)
    }
}

/// The dates on which the decision source is consulted: the first trading
/// day for once-at-start, the first trading day of each calendar month in
/// the span for monthly, and every trading day for daily.
pub fn rebalance_schedule(
    calendar: &TradingCalendar,
    period: &PeriodSpec,
    policy: RebalancePolicy,
) -> Result<Vec<NaiveDate>> {
    let days = period_days(calendar, period)?;
    let schedule = match policy {
        RebalancePolicy::OnceAtStart => alloc::vec![days[0]],
        RebalancePolicy::Daily => days,
        RebalancePolicy::Monthly => {
            let mut seen = BTreeSet::new();
            days.into_iter()
                .filter(|d| seen.insert((d.year(), d.month())))
                .collect()
        }
    };
    Ok(schedule)
}

/// Trading days within the period, snapped inward.
pub fn period_days(calendar: &TradingCalendar, period: &PeriodSpec) -> Result<Vec<NaiveDate>> {
    let days: Vec<NaiveDate> = calendar
        .days()
        .iter()
        .copied()
        .filter(|d| *d >= period.start && *d <= period.end)
        .collect();
    if days.is_empty() {
        return Err(Error::EmptyPeriod {
            label: period.label.clone(),
        });
    }
    Ok(days)
}

fn closes_on(data: &SeriesMap, date: NaiveDate) -> Result<BTreeMap<Ticker, f64>> {
    let mut prices = BTreeMap::new();
    for (ticker, series) in data {
        let bar = series
            .bars()
            .binary_search_by_key(&date, |b| b.date)
            .map_err(|_| Error::MissingPrice(ticker.clone()))?;
        prices.insert(ticker.clone(), series.bars()[bar].adjusted_close);
    }
    Ok(prices)
}

/// Run one period. On each scheduled date the engine constructs a slice
/// with `as_of` equal to the simulation date, asks the decision source
/// for weights, and executes at that day's close (holding mode) or
/// applies the weights to the following day's returns (overlay mode).
/// NAV is recorded at every trading-day close.
///
/// A decision source reporting `AgentUnavailable` causes a hold (no trade
/// this rebalance), counted in `decision_failures`; any other error
/// aborts the run.
#[allow(clippy::too_many_arguments)]
pub fn run_backtest(
    data: &SeriesMap,
    calendar: &TradingCalendar,
    period: &PeriodSpec,
    policy: RebalancePolicy,
    agent: &mut dyn DecisionAgent,
    initial_capital: f64,
    mode: PortfolioMode,
    strategy_label: &str,
    seed: Option<u64>,
) -> Result<BacktestResult> {
    let days = period_days(calendar, period)?;
    let schedule: BTreeSet<NaiveDate> =
        rebalance_schedule(calendar, period, policy)?.into_iter().collect();

    let mut decisions_made = 0usize;
    let mut decision_failures = 0usize;
    let decide =
        |agent: &mut dyn DecisionAgent,
         state: &PortfolioSummary,
         date: NaiveDate,
         made: &mut usize,
         failed: &mut usize| {
            let slice = pit_slice(data, date);
            debug_assert_eq!(slice.as_of(), date);
            match agent.decide(&slice, state, date) {
                Ok(weights) => {
                    *made += 1;
                    Ok(Some(weights))
                }
                Err(Error::AgentUnavailable(reason)) => {
                    *failed += 1;
                    log::warn!(
                        "{strategy_label} {}: decision unavailable on {date}: {reason}; holding",
                        period.label
                    );
                    Ok(None)
                }
                Err(other) => Err(other),
            }
        };

    let (nav_history, trades) = match mode {
        PortfolioMode::Holding => {
            let mut portfolio = Portfolio::new(initial_capital);
            let mut all_trades: Vec<Trade> = Vec::new();
            for date in &days {
                let prices = closes_on(data, *date)?;
                if schedule.contains(date) {
                    let state = portfolio.summary(&prices)?;
                    if let Some(weights) = decide(
                        agent,
                        &state,
                        *date,
                        &mut decisions_made,
                        &mut decision_failures,
                    )? {
                        weights.validate_long_only()?;
                        all_trades.extend(portfolio.rebalance_to_weights(
                            &weights, &prices, *date,
                        )?);
                    }
                }
                let nav = portfolio.mark_to_market(&prices)?;
                portfolio.record_nav(*date, nav)?;
            }
            (portfolio.nav_history().to_vec(), all_trades)
        }
        PortfolioMode::Overlay => {
            let mut nav = initial_capital;
            let mut nav_history: Vec<(NaiveDate, f64)> = Vec::new();
            let mut active: Option<TargetWeights> = None;
            let mut prev_prices: Option<BTreeMap<Ticker, f64>> = None;
            for date in &days {
                let prices = closes_on(data, *date)?;
                if let (Some(weights), Some(prev)) = (&active, &prev_prices) {
                    let returns: BTreeMap<Ticker, f64> = prices
                        .iter()
                        .map(|(t, px)| (t.clone(), px / prev[t] - 1.0))
                        .collect();
                    nav = apply_overlay_return(nav, weights, &returns)?;
                }
                if schedule.contains(date) {
                    let state = PortfolioSummary {
                        nav,
                        weights: active
                            .as_ref()
                            .map(|w| w.iter().map(|(t, v)| (t.clone(), v)).collect())
                            .unwrap_or_default(),
                    };
                    if let Some(weights) = decide(
                        agent,
                        &state,
                        *date,
                        &mut decisions_made,
                        &mut decision_failures,
                    )? {
                        weights.validate_overlay()?;
                        active = Some(weights);
                    }
                }
                nav_history.push((*date, nav));
                prev_prices = Some(prices);
            }
            (nav_history, Vec::new())
        }
    };

    let first = nav_history.first().map(|(_, v)| *v).unwrap_or(0.0);
    let last = nav_history.last().map(|(_, v)| *v).unwrap_or(0.0);
    let total_return_pct = (last / first - 1.0) * 100.0;

    Ok(BacktestResult {
        period: period.clone(),
        strategy_label: strategy_label.into(),
        nav_history,
        trades,
        total_return_pct,
        seed,
        decisions_made,
        decision_failures,
    })
}
