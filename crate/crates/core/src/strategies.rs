//! The six baseline strategies, each a pure function from a
//! point-in-time slice (plus explicit RNG state for the noise control) to
//! target weights.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::agent::DecisionAgent;
use crate::engine::{PortfolioMode, RebalancePolicy};
use crate::error::{Error, Result};
use crate::marketdata::{sma, PitSlice};
use crate::portfolio::{PortfolioSummary, TargetWeights};
use crate::types::Ticker;

/// Tunables shared by the ranked and trend strategies, plus the noise
/// seed. Defaults follow the benchmark conventions: a 63-trading-day
/// (three-month) lookback, top/bottom half selection, and a 50/100-day
/// moving-average pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub momentum_lookback_days: usize,
    /// Ranked-selection size k. `None` means half the universe, rounded
    /// down, with a minimum of one.
    pub selection_size: Option<usize>,
    pub ma_fast: usize,
    pub ma_slow: usize,
    pub noise_seed: u64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            momentum_lookback_days: 63,
            selection_size: None,
            ma_fast: 50,
            ma_slow: 100,
            noise_seed: 42,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.momentum_lookback_days == 0 {
            return Err(Error::InvalidConfig(
                "momentum_lookback_days must be at least 1".into(),
            ));
        }
        if self.ma_fast == 0 || self.ma_fast >= self.ma_slow {
            return Err(Error::InvalidConfig(alloc::format!(
                "ma_fast ({}) must be positive and less than ma_slow ({})",
                self.ma_fast,
                self.ma_slow
            )));
        }
        if self.selection_size == Some(0) {
            return Err(Error::InvalidConfig("selection_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Effective ranked-selection size for a universe of `n` tickers.
    pub fn selection_size_for(&self, n: usize) -> usize {
        self.selection_size.unwrap_or_else(|| (n / 2).max(1))
    }
}

fn equal_split(tickers: &[Ticker]) -> Result<TargetWeights> {
    if tickers.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let w = 1.0 / tickers.len() as f64;
    TargetWeights::from_pairs(tickers.iter().map(|t| (t.clone(), w)))
}

/// Equal allocation across the universe, emitted once at period start.
/// The engine never re-invokes it: the positions ride untouched.
pub fn buy_and_hold_weights(universe: &[Ticker]) -> Result<TargetWeights> {
    equal_split(universe)
}

/// Equal allocation re-targeted on every monthly rebalance.
pub fn equal_weights(universe: &[Ticker]) -> Result<TargetWeights> {
    equal_split(universe)
}

/// Trailing total returns for every universe ticker, or `None` when any
/// ticker lacks the full lookback (the shared fallback trigger).
fn trailing_returns(
    slice: &PitSlice<'_>,
    universe: &[Ticker],
    lookback: usize,
) -> Result<Option<BTreeMap<Ticker, f64>>> {
    let mut out = BTreeMap::new();
    for ticker in universe {
        match slice.trailing_return(ticker, lookback) {
            Ok(r) => {
                out.insert(ticker.clone(), r);
            }
            Err(e) if e.is_insufficient_history() => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(out))
}

fn ranked_selection(
    slice: &PitSlice<'_>,
    universe: &[Ticker],
    config: &StrategyConfig,
    bottom: bool,
) -> Result<TargetWeights> {
    if universe.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let Some(returns) = trailing_returns(slice, universe, config.momentum_lookback_days)? else {
        // Any ticker short on history sends the whole rebalance to the
        // equal-weight fallback.
        return equal_split(universe);
    };
    let mut order: Vec<&Ticker> = universe.iter().collect();
    // Ties break by ascending symbol; the sort is stable and the universe
    // is pre-sorted by the callers, but sort by symbol explicitly so the
    // result does not depend on input order.
    order.sort_by(|a, b| {
        let ra = returns[*a];
        let rb = returns[*b];
        let by_return = if bottom {
            ra.total_cmp(&rb)
        } else {
            rb.total_cmp(&ra)
        };
        by_return.then_with(|| a.cmp(b))
    });
    let k = config.selection_size_for(universe.len()).min(universe.len());
    let w = 1.0 / k as f64;
    TargetWeights::from_pairs(order.into_iter().take(k).map(|t| (t.clone(), w)))
}

/// Rank by trailing lookback return and allocate equally to the top k.
pub fn momentum_weights(
    slice: &PitSlice<'_>,
    universe: &[Ticker],
    config: &StrategyConfig,
) -> Result<TargetWeights> {
    ranked_selection(slice, universe, config, false)
}

/// The contrarian mirror: equal allocation to the bottom k.
pub fn mean_reversion_weights(
    slice: &PitSlice<'_>,
    universe: &[Ticker],
    config: &StrategyConfig,
) -> Result<TargetWeights> {
    ranked_selection(slice, universe, config, true)
}

/// Hold a ticker only while its fast moving average is strictly above
/// its slow one; capital splits equally across qualifying tickers, cash
/// otherwise. Tickers without enough history simply do not qualify.
pub fn ma_crossover_weights(
    slice: &PitSlice<'_>,
    universe: &[Ticker],
    config: &StrategyConfig,
) -> Result<TargetWeights> {
    if universe.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let as_of = slice.as_of();
    let mut qualifying = Vec::new();
    for ticker in universe {
        let fast = match sma(slice, ticker, as_of, config.ma_fast) {
            Ok(v) => v,
            Err(e) if e.is_insufficient_history() => continue,
            Err(e) => return Err(e),
        };
        let slow = match sma(slice, ticker, as_of, config.ma_slow) {
            Ok(v) => v,
            Err(e) if e.is_insufficient_history() => continue,
            Err(e) => return Err(e),
        };
        if fast > slow {
            qualifying.push(ticker.clone());
        }
    }
    if qualifying.is_empty() {
        return Ok(TargetWeights::all_cash());
    }
    equal_split(&qualifying)
}

/// A uniform draw in `[0, 1)` from the top 53 bits of the generator, the
/// standard portable conversion.
fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One raw per-ticker draw: +0.4 with probability 0.4, -0.4 with
/// probability 0.4, and 0.0 with probability 0.2.
pub fn noise_draw(rng: &mut ChaCha8Rng) -> f64 {
    let u = unit_f64(rng);
    if u < 0.4 {
        0.4
    } else if u < 0.8 {
        -0.4
    } else {
        0.0
    }
}

/// Normalize raw draws by gross exposure so the absolute weights sum to
/// one; an all-zero draw stays all-zero (a flat day).
pub fn normalize_noise_draws(draws: &[f64]) -> Vec<f64> {
    let gross: f64 = draws.iter().map(|w| w.abs()).sum();
    if gross == 0.0 {
        return draws.to_vec();
    }
    draws.iter().map(|w| w / gross).collect()
}

/// Daily overlay weights for the noise control: one draw per ticker in
/// ascending symbol order, normalized to unit gross exposure.
pub fn random_noise_weights(rng: &mut ChaCha8Rng, universe: &[Ticker]) -> Result<TargetWeights> {
    if universe.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let mut sorted: Vec<&Ticker> = universe.iter().collect();
    sorted.sort();
    let draws: Vec<f64> = sorted.iter().map(|_| noise_draw(rng)).collect();
    let normalized = normalize_noise_draws(&draws);
    TargetWeights::from_pairs(
        sorted
            .into_iter()
            .zip(normalized)
            .map(|(t, w)| (t.clone(), w)),
    )
}

/// The six baselines, each knowing its rebalance cadence and execution
/// mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantStrategy {
    BuyHold,
    EqualWeight,
    Momentum,
    MeanReversion,
    MaCrossover,
    RandomNoise,
}

impl QuantStrategy {
    pub const ALL: [QuantStrategy; 6] = [
        QuantStrategy::BuyHold,
        QuantStrategy::EqualWeight,
        QuantStrategy::Momentum,
        QuantStrategy::MeanReversion,
        QuantStrategy::MaCrossover,
        QuantStrategy::RandomNoise,
    ];

    /// Configuration key.
    pub fn key(&self) -> &'static str {
        match self {
            QuantStrategy::BuyHold => "buy_hold",
            QuantStrategy::EqualWeight => "equal_weight",
            QuantStrategy::Momentum => "momentum",
            QuantStrategy::MeanReversion => "mean_reversion",
            QuantStrategy::MaCrossover => "ma_crossover",
            QuantStrategy::RandomNoise => "random_noise",
        }
    }

    /// Human-readable report label.
    pub fn label(&self) -> &'static str {
        match self {
            QuantStrategy::BuyHold => "Buy & Hold",
            QuantStrategy::EqualWeight => "Equal Weight",
            QuantStrategy::Momentum => "Momentum (3M)",
            QuantStrategy::MeanReversion => "Mean Reversion",
            QuantStrategy::MaCrossover => "MA Crossover",
            QuantStrategy::RandomNoise => "Random Noise",
        }
    }

    pub fn from_key(key: &str) -> Option<QuantStrategy> {
        QuantStrategy::ALL.into_iter().find(|s| s.key() == key)
    }

    pub fn policy(&self) -> RebalancePolicy {
        match self {
            QuantStrategy::BuyHold => RebalancePolicy::OnceAtStart,
            QuantStrategy::EqualWeight
            | QuantStrategy::Momentum
            | QuantStrategy::MeanReversion => RebalancePolicy::Monthly,
            QuantStrategy::MaCrossover | QuantStrategy::RandomNoise => RebalancePolicy::Daily,
        }
    }

    pub fn mode(&self) -> PortfolioMode {
        match self {
            QuantStrategy::RandomNoise => PortfolioMode::Overlay,
            _ => PortfolioMode::Holding,
        }
    }

    /// Seed recorded on results, for the strategies that draw.
    pub fn seed(&self, config: &StrategyConfig) -> Option<u64> {
        match self {
            QuantStrategy::RandomNoise => Some(config.noise_seed),
            _ => None,
        }
    }

    /// Instantiate the strategy as a decision agent over the universe.
    pub fn agent(
        &self,
        universe: &[Ticker],
        config: &StrategyConfig,
    ) -> Box<dyn DecisionAgent + Send> {
        let universe: Vec<Ticker> = {
            let mut u = universe.to_vec();
            u.sort();
            u
        };
        match self {
            QuantStrategy::BuyHold | QuantStrategy::EqualWeight => Box::new(EqualSplitAgent {
                universe,
            }),
            QuantStrategy::Momentum => Box::new(RankedAgent {
                universe,
                config: config.clone(),
                bottom: false,
            }),
            QuantStrategy::MeanReversion => Box::new(RankedAgent {
                universe,
                config: config.clone(),
                bottom: true,
            }),
            QuantStrategy::MaCrossover => Box::new(MaCrossoverAgent {
                universe,
                config: config.clone(),
            }),
            QuantStrategy::RandomNoise => Box::new(RandomNoiseAgent {
                universe,
                rng: ChaCha8Rng::seed_from_u64(config.noise_seed),
            }),
        }
    }
}

struct EqualSplitAgent {
    universe: Vec<Ticker>,
}

impl DecisionAgent for EqualSplitAgent {
    fn decide(
        &mut self,
        _slice: &PitSlice<'_>,
        _state: &PortfolioSummary,
        _as_of: NaiveDate,
    ) -> Result<TargetWeights> {
        equal_split(&self.universe)
    }
}

struct RankedAgent {
    universe: Vec<Ticker>,
    config: StrategyConfig,
    bottom: bool,
}

impl DecisionAgent for RankedAgent {
    fn decide(
        &mut self,
        slice: &PitSlice<'_>,
        _state: &PortfolioSummary,
        _as_of: NaiveDate,
    ) -> Result<TargetWeights> {
        ranked_selection(slice, &self.universe, &self.config, self.bottom)
    }
}

struct MaCrossoverAgent {
    universe: Vec<Ticker>,
    config: StrategyConfig,
}

impl DecisionAgent for MaCrossoverAgent {
    fn decide(
        &mut self,
        slice: &PitSlice<'_>,
        _state: &PortfolioSummary,
        _as_of: NaiveDate,
    ) -> Result<TargetWeights> {
        ma_crossover_weights(slice, &self.universe, &self.config)
    }
}

struct RandomNoiseAgent {
    universe: Vec<Ticker>,
    rng: ChaCha8Rng,
}

impl DecisionAgent for RandomNoiseAgent {
    fn decide(
        &mut self,
        _slice: &PitSlice<'_>,
        _state: &PortfolioSummary,
        _as_of: NaiveDate,
    ) -> Result<TargetWeights> {
        random_noise_weights(&mut self.rng, &self.universe)
    }
}

/// Parse a strategy label from config or CLI input.
pub fn parse_strategy(label: &str) -> Result<QuantStrategy> {
    QuantStrategy::from_key(label)
        .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown strategy `{label}`")))
}

/// All strategy keys, for diagnostics.
pub fn strategy_keys() -> Vec<String> {
    QuantStrategy::ALL.iter().map(|s| s.key().into()).collect()
}
