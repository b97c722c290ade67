//! The pluggable decision-agent contract: anything that maps a
//! point-in-time slice, the current portfolio state, and a date to target
//! weights. Scripted agents live here; the HTTP-backed adapter lives in
//! the companion crate and speaks the same trait.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use core::fmt::Write as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::PitSlice;
use crate::portfolio::{normalize_weights, PortfolioSummary, TargetWeights};
use crate::types::Ticker;

/// A decision source: consulted on each scheduled rebalance date with a
/// slice whose visibility ends at that date. `&mut self` lets stateful
/// sources (seeded RNGs, retry counters) advance.
pub trait DecisionAgent {
    fn decide(
        &mut self,
        slice: &PitSlice<'_>,
        state: &PortfolioSummary,
        as_of: NaiveDate,
    ) -> Result<TargetWeights>;
}

/// Everything an agent is shown for one decision. Built from a
/// `PitSlice`, so every embedded price is dated on or before `as_of` by
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDecisionRequest {
    pub as_of: NaiveDate,
    pub universe: Vec<Ticker>,
    pub history_window_days: usize,
    /// Per-ticker dated closes, at most `history_window_days` most recent.
    pub closes: BTreeMap<Ticker, Vec<(NaiveDate, f64)>>,
    pub current_weights: BTreeMap<Ticker, f64>,
    pub current_nav: f64,
}

impl AgentDecisionRequest {
    pub fn from_slice(
        slice: &PitSlice<'_>,
        universe: &[Ticker],
        history_window_days: usize,
        state: &PortfolioSummary,
    ) -> Result<Self> {
        let mut closes = BTreeMap::new();
        for ticker in universe {
            let bars = slice.bars(ticker)?;
            let tail = &bars[bars.len().saturating_sub(history_window_days)..];
            closes.insert(
                ticker.clone(),
                tail.iter().map(|b| (b.date, b.adjusted_close)).collect(),
            );
        }
        let mut universe: Vec<Ticker> = universe.to_vec();
        universe.sort();
        Ok(AgentDecisionRequest {
            as_of: slice.as_of(),
            universe,
            history_window_days,
            closes,
            current_weights: state.weights.clone(),
            current_nav: state.nav,
        })
    }
}

/// The outcome of one remote round-trip, kept for run logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDecisionResponse {
    pub raw_text: String,
    pub parsed_weights: TargetWeights,
    pub retries_used: u32,
    pub fallback_applied: bool,
}

/// Render the deterministic decision prompt: instructions, per-ticker
/// recent closes in ascending symbol order, current holdings, and the
/// required `TICKER: weight` output format.
pub fn build_prompt(request: &AgentDecisionRequest) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "You are a portfolio allocation agent. Decide target portfolio weights."
    );
    let _ = writeln!(out, "As-of date: {}", request.as_of.format("%Y-%m-%d"));
    let _ = write!(out, "Universe:");
    for (i, t) in request.universe.iter().enumerate() {
        let _ = write!(out, "{}{t}", if i == 0 { " " } else { ", " });
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Current NAV: {:.2}", request.current_nav);
    let _ = writeln!(out, "Current weights:");
    for t in &request.universe {
        let w = request.current_weights.get(t).copied().unwrap_or(0.0);
        let _ = writeln!(out, "  {t}: {w:.6}");
    }
    let _ = writeln!(
        out,
        "Adjusted closes, most recent {} trading days:",
        request.history_window_days
    );
    for t in &request.universe {
        let _ = writeln!(out, "{t}:");
        if let Some(rows) = request.closes.get(t) {
            for (date, px) in rows {
                let _ = writeln!(out, "  {}: {px}", date.format("%Y-%m-%d"));
            }
        }
    }
    let _ = writeln!(
        out,
        "Respond with exactly one line per ticker in the form `TICKER: weight`, \
         where each weight is a number in [0, 1] and the weights sum to at most 1. \
         Unallocated weight is held as cash."
    );
    out
}

/// Extract the last `TICKER: number` occurrence for each universe ticker,
/// case-insensitively. Tickers never mentioned get weight zero; a text
/// with no recognizable line at all is a parse failure (retry trigger).
pub fn parse_weights(raw_text: &str, universe: &[Ticker]) -> Result<BTreeMap<Ticker, f64>> {
    let mut found: BTreeMap<Ticker, f64> = BTreeMap::new();
    for line in raw_text.lines() {
        let Some((lhs, rhs)) = line.split_once(':') else {
            continue;
        };
        let name = lhs
            .trim()
            .trim_start_matches(|c: char| !c.is_ascii_alphanumeric())
            .trim_end_matches(|c: char| !c.is_ascii_alphanumeric());
        let Some(ticker) = universe.iter().find(|t| t.as_str().eq_ignore_ascii_case(name))
        else {
            continue;
        };
        let value_token = rhs
            .split_whitespace()
            .next()
            .unwrap_or("")
            .trim_matches(|c: char| c == '*' || c == ',' || c == '`');
        if let Ok(value) = value_token.parse::<f64>() {
            found.insert(ticker.clone(), value);
        }
    }
    if found.is_empty() {
        return Err(Error::WeightParse);
    }
    let mut weights = BTreeMap::new();
    for t in universe {
        weights.insert(t.clone(), found.get(t).copied().unwrap_or(0.0));
    }
    Ok(weights)
}

/// An agent that emits the same weights on every decision date.
#[derive(Debug, Clone)]
pub struct ConstantWeightsAgent {
    weights: TargetWeights,
}

impl ConstantWeightsAgent {
    pub fn new(weights: TargetWeights) -> Self {
        ConstantWeightsAgent { weights }
    }

    /// Equal long-only weights over the universe.
    pub fn equal(universe: &[Ticker]) -> Result<Self> {
        if universe.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        let w = 1.0 / universe.len() as f64;
        Ok(ConstantWeightsAgent::new(TargetWeights::from_pairs(
            universe.iter().map(|t| (t.clone(), w)),
        )?))
    }
}

impl DecisionAgent for ConstantWeightsAgent {
    fn decide(
        &mut self,
        _slice: &PitSlice<'_>,
        _state: &PortfolioSummary,
        _as_of: NaiveDate,
    ) -> Result<TargetWeights> {
        Ok(self.weights.clone())
    }
}

/// An agent that always targets the portfolio's current weights, so every
/// rebalance is a no-op. Useful as an exact buy-and-hold twin.
#[derive(Debug, Clone, Default)]
pub struct HoldCurrentAgent;

impl DecisionAgent for HoldCurrentAgent {
    fn decide(
        &mut self,
        _slice: &PitSlice<'_>,
        state: &PortfolioSummary,
        _as_of: NaiveDate,
    ) -> Result<TargetWeights> {
        TargetWeights::new(state.weights.clone())
    }
}

/// An agent that replays a fixed date-keyed weight schedule. A decision
/// date missing from the schedule is reported as unavailable, which the
/// engine turns into a hold.
#[derive(Debug, Clone)]
pub struct ScheduleAgent {
    schedule: BTreeMap<NaiveDate, TargetWeights>,
}

impl ScheduleAgent {
    pub fn new(schedule: BTreeMap<NaiveDate, TargetWeights>) -> Self {
        ScheduleAgent { schedule }
    }
}

impl DecisionAgent for ScheduleAgent {
    fn decide(
        &mut self,
        _slice: &PitSlice<'_>,
        _state: &PortfolioSummary,
        as_of: NaiveDate,
    ) -> Result<TargetWeights> {
        self.schedule.get(&as_of).cloned().ok_or_else(|| {
            Error::AgentUnavailable(alloc::format!("no scheduled weights for {as_of}"))
        })
    }
}

/// An agent that parses raw reply texts keyed by decision date through
/// the production parse-and-normalize path. The offline twin of a remote
/// endpoint replaying canned responses.
#[derive(Debug, Clone)]
pub struct ReplayTextAgent {
    replies: BTreeMap<NaiveDate, String>,
    universe: Vec<Ticker>,
}

impl ReplayTextAgent {
    pub fn new(replies: BTreeMap<NaiveDate, String>, universe: Vec<Ticker>) -> Self {
        ReplayTextAgent { replies, universe }
    }
}

impl DecisionAgent for ReplayTextAgent {
    fn decide(
        &mut self,
        _slice: &PitSlice<'_>,
        _state: &PortfolioSummary,
        as_of: NaiveDate,
    ) -> Result<TargetWeights> {
        let text = self.replies.get(&as_of).ok_or_else(|| {
            Error::AgentUnavailable(alloc::format!("no canned reply for {as_of}"))
        })?;
        let raw = parse_weights(text, &self.universe)
            .map_err(|e| Error::AgentUnavailable(alloc::format!("unparseable reply: {e}")))?;
        normalize_weights(raw)
    }
}
